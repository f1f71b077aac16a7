#include "naraim/dataset.hpp"

#include <charconv>
#include <sstream>

#include "naraim/codec.hpp"
#include "naraim/errors.hpp"

namespace naraim {
namespace {

std::size_t parse_count(std::string_view text, const std::string& what) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw InputError(what + ": '" + std::string(text) + "' is not a non-negative integer");
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  bool have_classes = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#classes=")) {
        m.classes = parse_count(line.substr(9), "manifest line " + std::to_string(line_no));
        have_classes = true;
      } else if (line.starts_with("#names=")) {
        std::string names(line.substr(7));
        std::istringstream parts(names);
        std::string name;
        while (std::getline(parts, name, ',')) m.class_names.push_back(name);
      }
      continue;
    }
    const auto tab = line.rfind('\t');
    const std::size_t index = m.entries.size();
    if (tab == std::string_view::npos) {
      throw InputError("manifest entry " + std::to_string(index) + ": expected 'path<TAB>label'");
    }
    const std::size_t label = parse_count(trim(line.substr(tab + 1)), "manifest entry " + std::to_string(index));
    m.entries.push_back({std::string(line.substr(0, tab)), label});
  }
  if (!have_classes) throw InputError("manifest: missing '#classes=C' header");
  if (m.classes == 0) throw InputError("manifest: classes must be positive");
  if (!m.class_names.empty() && m.class_names.size() != m.classes) {
    throw InputError("manifest: " + std::to_string(m.class_names.size()) + " class names for " +
                     std::to_string(m.classes) + " classes");
  }
  if (m.entries.empty()) throw InputError("empty dataset");
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (m.entries[i].label >= m.classes) {
      throw InputError("manifest entry " + std::to_string(i) + " (" + m.entries[i].path + "): label " +
                       std::to_string(m.entries[i].label) + " not below classes " + std::to_string(m.classes));
    }
  }
  return m;
}

DatasetManifest load_dataset(const std::filesystem::path& manifest_path) {
  const Bytes bytes = read_file(manifest_path);
  DatasetManifest m = parse_manifest(std::string(bytes.begin(), bytes.end()), manifest_path.parent_path());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (!std::filesystem::is_regular_file(m.root / m.entries[i].path)) {
      throw InputError("manifest entry " + std::to_string(i) + ": missing file " + m.entries[i].path);
    }
  }
  return m;
}

std::string render_manifest(const DatasetManifest& manifest) {
  std::string out = "#classes=" + std::to_string(manifest.classes) + "\n";
  if (!manifest.class_names.empty()) {
    out += "#names=";
    for (std::size_t i = 0; i < manifest.class_names.size(); ++i) {
      if (i) out += ',';
      out += manifest.class_names[i];
    }
    out += '\n';
  }
  for (const auto& e : manifest.entries) out += e.path + "\t" + std::to_string(e.label) + "\n";
  return out;
}

ManifestSource::ManifestSource(DatasetManifest manifest) : manifest_(std::move(manifest)) {
  if (manifest_.entries.empty()) throw InputError("empty dataset");
}

Image ManifestSource::load(std::size_t index) const {
  const auto& entry = manifest_.entries.at(index);
  try {
    return read_image(manifest_.root / entry.path);
  } catch (const std::exception& e) {
    throw InputError("manifest entry " + std::to_string(index) + ": " + e.what());
  }
}

InMemorySource::InMemorySource(std::vector<Image> images, std::vector<std::size_t> labels, std::size_t classes)
    : images_(std::move(images)), labels_(std::move(labels)), classes_(classes) {
  if (images_.empty()) throw InputError("empty dataset");
  if (images_.size() != labels_.size()) throw InputError("in-memory dataset: image and label counts differ");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= classes_) throw InputError("in-memory dataset: entry " + std::to_string(i) + " label out of range");
  }
}

}  // namespace naraim
