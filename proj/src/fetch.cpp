#include "salrgb/fetch.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <curl/curl.h>
#include <openssl/evp.h>

#include "salrgb/error.hpp"
#include "salrgb/rng.hpp"

namespace fs = std::filesystem;

namespace salrgb {
namespace {

void ensure_curl_initialized() {
  static std::once_flag flag;
  std::call_once(flag, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

std::size_t write_to_stream(char* data, std::size_t size, std::size_t count, void* user) {
  auto* out = static_cast<std::ofstream*>(user);
  out->write(data, static_cast<std::streamsize>(size * count));
  return out->good() ? size * count : 0;
}

std::string url_extension(const std::string& url) {
  auto path = url.substr(0, url.find_first_of("?#"));
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) path = path.substr(slash + 1);
  const auto ext = fs::path(path).extension().string();
  return ext.size() > 1 && ext.size() <= 6 ? ext : std::string(".img");
}

struct Attempt {
  bool ok = false;
  bool retryable = true;
  std::string error;
};

Attempt download_once(const std::string& url, const fs::path& temp, const FetchOptions& options) {
  std::ofstream out(temp, std::ios::binary | std::ios::trunc);
  if (!out) return {false, false, "cache directory not writable: " + temp.parent_path().string()};

  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), &curl_easy_cleanup);
  if (!curl) return {false, true, "curl_easy_init failed"};
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT_MS, static_cast<long>(options.timeout.count()));
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &write_to_stream);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &out);

  const CURLcode rc = curl_easy_perform(curl.get());
  out.close();
  if (rc != CURLE_OK) {
    if (rc == CURLE_WRITE_ERROR) return {false, false, "cannot write " + temp.string()};
    return {false, true, curl_easy_strerror(rc)};
  }
  long status = 0;
  curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
  if (status >= 400) {
    // Server errors may be transient, client errors will not change.
    return {false, status >= 500, "HTTP status " + std::to_string(status)};
  }
  curl_off_t expected = -1;
  curl_easy_getinfo(curl.get(), CURLINFO_CONTENT_LENGTH_DOWNLOAD_T, &expected);
  std::error_code ec;
  const auto got = fs::file_size(temp, ec);
  if (ec) return {false, true, "cannot stat downloaded file"};
  if (expected >= 0 && static_cast<std::uintmax_t>(expected) != got) {
    return {false, true,
            "length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                std::to_string(got)};
  }
  return {true, false, {}};
}

}  // namespace

fs::path cache_path_for(const ImageRecord& record, const fs::path& cache_dir) {
  return cache_dir / (record.id + url_extension(record.source));
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

fs::path fetch_remote(const ImageRecord& record, const fs::path& cache_dir,
                      const FetchOptions& options) {
  if (!record.is_remote()) return fs::path(record.source);

  const fs::path target = cache_path_for(record, cache_dir);
  if (fs::exists(target)) return target;

  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  if (ec) throw FetchError(record.id, "cache directory not writable: " + cache_dir.string());

  ensure_curl_initialized();
  // Unique per thread so concurrent fetches of distinct records never share a
  // temporary; the final rename is atomic within the directory.
  const auto tag = mix_seed(fnv1a64(record.id),
                            std::hash<std::thread::id>{}(std::this_thread::get_id()));
  const fs::path temp = cache_dir / ("." + record.id + "." + std::to_string(tag % 1000000) + ".part");

  auto backoff = options.initial_backoff;
  std::string last_error = "no attempt made";
  for (int attempt = 1; attempt <= std::max(options.max_attempts, 1); ++attempt) {
    const Attempt a = download_once(record.source, temp, options);
    if (a.ok) {
      if (record.sha256) {
        const auto digest = sha256_file(temp);
        if (digest != *record.sha256) {
          fs::remove(temp, ec);
          throw FetchError(record.id, "checksum mismatch: expected " + *record.sha256 + ", got " + digest);
        }
      }
      fs::rename(temp, target, ec);
      if (ec) {
        fs::remove(temp, ec);
        throw FetchError(record.id, "cannot move download into cache: " + ec.message());
      }
      return target;
    }
    fs::remove(temp, ec);
    last_error = a.error;
    if (!a.retryable) break;
    if (attempt < options.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * options.backoff_factor));
    }
  }
  throw FetchError(record.id, last_error + " (" + record.source + ")");
}

}  // namespace salrgb
