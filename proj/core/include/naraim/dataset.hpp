#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "naraim/image.hpp"

namespace naraim {

struct DatasetEntry {
  std::string path;  // relative to the manifest root
  std::size_t label = 0;

  bool operator==(const DatasetEntry&) const = default;
};

// Text manifest: a "#classes=C" header, an optional "#names=a,b,..." line,
// then one "relative/path<TAB>label" per line.
struct DatasetManifest {
  std::filesystem::path root;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  std::vector<DatasetEntry> entries;
};

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root);
// Validates every entry (label range, file presence); images stay undecoded.
DatasetManifest load_dataset(const std::filesystem::path& manifest_path);
std::string render_manifest(const DatasetManifest& manifest);

// Random-access labeled images.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t classes() const = 0;
  virtual std::size_t label(std::size_t index) const = 0;
  virtual Image load(std::size_t index) const = 0;
};

// Decodes manifest entries on demand.
class ManifestSource : public ImageSource {
 public:
  explicit ManifestSource(DatasetManifest manifest);

  std::size_t size() const override { return manifest_.entries.size(); }
  std::size_t classes() const override { return manifest_.classes; }
  std::size_t label(std::size_t index) const override { return manifest_.entries.at(index).label; }
  Image load(std::size_t index) const override;

  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
};

class InMemorySource : public ImageSource {
 public:
  InMemorySource(std::vector<Image> images, std::vector<std::size_t> labels, std::size_t classes);

  std::size_t size() const override { return images_.size(); }
  std::size_t classes() const override { return classes_; }
  std::size_t label(std::size_t index) const override { return labels_.at(index); }
  Image load(std::size_t index) const override { return images_.at(index); }

 private:
  std::vector<Image> images_;
  std::vector<std::size_t> labels_;
  std::size_t classes_;
};

}  // namespace naraim
