#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "salrgb/evaluation.hpp"
#include "salrgb/manifest.hpp"
#include "salrgb/model.hpp"
#include "salrgb/saliency.hpp"
#include "salrgb/training.hpp"

namespace salrgb {

struct DataConfig {
  std::string manifest;
  std::string taxonomy = "ava14";  // built-in name or taxonomy file path
  std::string image_root = ".";
  std::string saliency_root = "saliency";
  std::string cache_dir = "cache";
  double val_fraction = 0.1;
  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct SaliencyConfig {
  SaliencyGeneratorOptions generator;
  SaliencyAlignment alignment = SaliencyAlignment::aligned;
  std::string format = "png";
  friend bool operator==(const SaliencyConfig&, const SaliencyConfig&) = default;
};

struct EvalConfig {
  PatchPolicy policy;
  std::string output_dir = "eval";
  Split split = Split::test;
  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

// Layered application configuration: defaults < config file < --set flags.
struct AppConfig {
  DataConfig data;
  SaliencyConfig saliency;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;

  friend bool operator==(const AppConfig&, const AppConfig&) = default;
};

inline constexpr const char* kCacheDirEnv = "SALRGB_CACHE_DIR";

nlohmann::json to_json(const AppConfig& config);
// Strict: unknown sections or keys throw ConfigError.
AppConfig app_config_from_json(const nlohmann::json& j);

// overrides are "section.key=value"; value is parsed as JSON and falls back
// to a plain string. The cache-dir environment variable beats the file but
// loses to an explicit override.
AppConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         std::span<const std::string> overrides);

}  // namespace salrgb
