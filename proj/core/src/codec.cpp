#include "naraim/codec.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "naraim/errors.hpp"

namespace naraim {
namespace {

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw InputError("pnm: expected a number in header");
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1u << 30)) throw InputError("pnm: header value out of range");
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw InputError("pnm: malformed header end");
    ++pos_;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

}  // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw InputError("pnm: missing magic");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') throw InputError("pnm: unsupported variant");
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  PnmReader reader(bytes);
  const std::size_t width = reader.number();
  const std::size_t height = reader.number();
  const std::size_t maxval = reader.number();
  if (width == 0 || height == 0) throw InputError("pnm: zero-sized image");
  if (maxval == 0 || maxval > 255) throw InputError("pnm: only 8-bit maxval is supported");
  const std::size_t samples = width * height * (color ? 3 : 1);
  std::vector<std::size_t> raw(samples);
  if (binary) {
    reader.end_header();
    const auto data = reader.rest();
    if (data.size() < samples) throw InputError("pnm: truncated pixel data");
    for (std::size_t i = 0; i < samples; ++i) raw[i] = data[i];
  } else {
    for (std::size_t i = 0; i < samples; ++i) raw[i] = reader.number();
  }
  const float scale = 1.0f / static_cast<float>(maxval);
  std::vector<float> px(width * height * 3);
  for (std::size_t i = 0; i < width * height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t v = color ? raw[i * 3 + c] : raw[i];
      if (v > maxval) throw InputError("pnm: sample exceeds maxval");
      px[i * 3 + c] = static_cast<float>(v) * scale;
    }
  }
  return Image(height, width, std::move(px));
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw InputError(std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw InputError("png: " + msg);
  }
  const std::size_t width = image.width, height = image.height;
  std::vector<float> px(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) px[i] = static_cast<float>(buffer[i]) / 255.0f;
  return Image(height, width, std::move(px));
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
  throw InputError("unrecognized image format");
}

Image read_image(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Bytes encode_ppm(const Image& img) {
  if (img.empty()) throw InputError("ppm: empty image");
  const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + img.subpixels().size());
  for (float v : img.subpixels()) {
    const float clamped = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0f)));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) { write_file_atomic(path, encode_ppm(img)); }

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace naraim
