#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "hoigen/util.hpp"

namespace hoigen {

struct StoredImage {
  std::string relative_path;  // "images/<sha256>.<ext>", relative to the data dir
  std::string content_hash;
};

/// Content-addressed image files under <data_dir>/images. Writes go to a
/// temporary name and are renamed into place.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path data_dir);

  StoredImage put(std::span<const std::uint8_t> bytes);
  Bytes read(const std::string& relative_path) const;
  std::filesystem::path absolute(const std::string& relative_path) const;
  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  std::filesystem::path data_dir_;
};

/// File extension inferred from magic bytes: png, jpg, ppm, webp, else bin.
std::string_view image_extension(std::span<const std::uint8_t> bytes);

/// The hash component of a content-addressed path ("images/<hash>.png").
std::string content_hash_of_path(std::string_view relative_path);

}  // namespace hoigen
