#include "hoigen/image_store.hpp"

#include <algorithm>

#include "hoigen/errors.hpp"

namespace hoigen {

namespace fs = std::filesystem;

ImageStore::ImageStore(fs::path data_dir) : data_dir_(std::move(data_dir)) {}

std::string_view image_extension(std::span<const std::uint8_t> b) {
  auto starts = [&b](std::initializer_list<std::uint8_t> magic) {
    return b.size() >= magic.size() && std::equal(magic.begin(), magic.end(), b.begin());
  };
  if (starts({0x89, 'P', 'N', 'G'})) return "png";
  if (starts({0xff, 0xd8, 0xff})) return "jpg";
  if (starts({'P', '6'})) return "ppm";
  if (b.size() >= 12 && starts({'R', 'I', 'F', 'F'}) && b[8] == 'W' && b[9] == 'E' &&
      b[10] == 'B' && b[11] == 'P') {
    return "webp";
  }
  return "bin";
}

std::string content_hash_of_path(std::string_view relative_path) {
  const auto slash = relative_path.find_last_of('/');
  std::string_view name =
      slash == std::string_view::npos ? relative_path : relative_path.substr(slash + 1);
  const auto dot = name.find('.');
  return std::string(name.substr(0, dot));
}

StoredImage ImageStore::put(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw StorageFailure("refusing to store an empty image");
  StoredImage out;
  out.content_hash = sha256_hex(bytes);
  out.relative_path = "images/" + out.content_hash + "." + std::string(image_extension(bytes));
  const fs::path target = absolute(out.relative_path);
  std::error_code ec;
  if (!fs::exists(target, ec)) write_file_atomic(target, bytes);
  return out;
}

Bytes ImageStore::read(const std::string& relative_path) const {
  return read_file(absolute(relative_path));
}

fs::path ImageStore::absolute(const std::string& relative_path) const {
  return data_dir_ / relative_path;
}

}  // namespace hoigen
