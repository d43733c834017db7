#pragma once

#include <chrono>
#include <filesystem>

#include "salrgb/manifest.hpp"

namespace salrgb {

struct FetchOptions {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_factor = 2.0;
  std::chrono::milliseconds timeout{30000};
};

// Cache location of a URL record: <cache_dir>/<id><url extension>.
std::filesystem::path cache_path_for(const ImageRecord& record,
                                     const std::filesystem::path& cache_dir);

// Local sources are returned unchanged. URL sources are downloaded once into
// cache_dir (write-to-temp then rename); later calls hit the cache without
// touching the network. Throws FetchError carrying the record id.
std::filesystem::path fetch_remote(const ImageRecord& record, const std::filesystem::path& cache_dir,
                                   const FetchOptions& options = {});

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace salrgb
