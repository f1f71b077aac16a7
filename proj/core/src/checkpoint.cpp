#include "naraim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "naraim/errors.hpp"

namespace naraim {
namespace {

constexpr char kMagic[4] = {'N', 'A', 'R', 'A'};
constexpr std::uint8_t kDtypeF64 = 0;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void bytes(void* p, std::size_t n, const std::string& what) {
    if (remaining() < n) throw FormatError("truncated checkpoint: " + what);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8(const std::string& what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const std::string& what) {
    std::uint32_t v;
    bytes(&v, sizeof v, what);
    return v;
  }
  std::uint64_t u64(const std::string& what) {
    std::uint64_t v;
    bytes(&v, sizeof v, what);
    return v;
  }
  std::string str(const std::string& what) {
    const std::uint64_t n = u64(what);
    if (n > remaining()) throw FormatError("truncated checkpoint: " + what);
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string render_metadata(const Checkpoint& ckpt) {
  return "step=" + std::to_string(ckpt.step) + "\ntensors=" + std::to_string(ckpt.tensors.size()) +
         "\nrng=" + ckpt.rng_state + "\nconfig:\n" + ckpt.config_text;
}

std::uint64_t parse_u64(const std::string& text, const std::string& field) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw FormatError("checkpoint metadata: bad " + field);
  return v;
}

// Returns the declared tensor count.
std::uint64_t parse_metadata(const std::string& text, Checkpoint& ckpt) {
  const auto count_pos = text.find("\ntensors=");
  const auto rng_pos = text.find("\nrng=");
  const auto cfg_pos = text.find("\nconfig:\n");
  if (!text.starts_with("step=") || count_pos == std::string::npos || rng_pos == std::string::npos ||
      cfg_pos == std::string::npos || !(count_pos < rng_pos && rng_pos < cfg_pos)) {
    throw FormatError("checkpoint metadata is malformed");
  }
  ckpt.step = parse_u64(text.substr(5, count_pos - 5), "step");
  const std::uint64_t count = parse_u64(text.substr(count_pos + 9, rng_pos - count_pos - 9), "tensor count");
  ckpt.rng_state = text.substr(rng_pos + 5, cfg_pos - rng_pos - 5);
  ckpt.config_text = text.substr(cfg_pos + 9);
  return count;
}

}  // namespace

Bytes encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(render_metadata(ckpt));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u8(kDtypeF64);
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw FormatError("tensor " + name + ": rank too large");
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.dims()) w.u64(d);
    w.bytes(t.data().data(), t.size() * sizeof(double));
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint");
  }
  Reader r(bytes.subspan(sizeof kMagic));
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  const std::uint64_t count = parse_metadata(r.str("metadata"), ckpt);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::string name = r.str("tensor name " + std::to_string(k));
    const std::string what = "tensor " + name;
    if (r.u8(what) != kDtypeF64) throw FormatError(what + ": unknown dtype");
    const std::uint8_t rank = r.u8(what);
    if (rank == 0) throw FormatError(what + ": rank 0");
    Shape dims(rank);
    std::uint64_t elems = 1;
    for (auto& d : dims) {
      d = r.u64(what);
      if (d == 0) throw FormatError(what + ": zero dimension");
      if (elems > std::numeric_limits<std::uint64_t>::max() / sizeof(double) / d) {
        throw FormatError(what + ": dims overflow");
      }
      elems *= d;
    }
    if (elems * sizeof(double) > r.remaining()) throw FormatError("truncated checkpoint: " + what);
    std::vector<double> data(elems);
    r.bytes(data.data(), elems * sizeof(double), what);
    if (!ckpt.tensors.emplace(name, Tensor(std::move(dims), std::move(data))).second) {
      throw FormatError(what + ": duplicate name");
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last tensor");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace naraim
