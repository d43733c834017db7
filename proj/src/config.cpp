#include "salrgb/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "salrgb/error.hpp"

namespace salrgb {

using nlohmann::json;

namespace {

json data_json(const DataConfig& d) {
  return json{{"manifest", d.manifest},   {"taxonomy", d.taxonomy},   {"image_root", d.image_root},
              {"saliency_root", d.saliency_root}, {"cache_dir", d.cache_dir}, {"val_fraction", d.val_fraction}};
}

void read_data(const json& j, DataConfig& d) {
  constexpr std::string_view s = "data";
  detail::require_known_keys(j, {"manifest", "taxonomy", "image_root", "saliency_root", "cache_dir", "val_fraction"}, s);
  detail::read_optional(j, "manifest", d.manifest, s);
  detail::read_optional(j, "taxonomy", d.taxonomy, s);
  detail::read_optional(j, "image_root", d.image_root, s);
  detail::read_optional(j, "saliency_root", d.saliency_root, s);
  detail::read_optional(j, "cache_dir", d.cache_dir, s);
  detail::read_optional(j, "val_fraction", d.val_fraction, s);
  if (d.val_fraction < 0.0 || d.val_fraction >= 1.0) throw ConfigError("data.val_fraction must lie in [0, 1)");
}

json saliency_json(const SaliencyConfig& c) {
  return json{{"working_size", c.generator.spectral.working_size},
              {"box_size", c.generator.spectral.box_size},
              {"blur_sigma", c.generator.spectral.blur_sigma},
              {"center_prior_weight", c.generator.center_prior_weight},
              {"center_prior_sigma", c.generator.center_prior_sigma},
              {"alignment", to_string(c.alignment)},
              {"format", c.format}};
}

void read_saliency(const json& j, SaliencyConfig& c) {
  constexpr std::string_view s = "saliency";
  detail::require_known_keys(j,
                             {"working_size", "box_size", "blur_sigma", "center_prior_weight", "center_prior_sigma",
                              "alignment", "format"},
                             s);
  detail::read_optional(j, "working_size", c.generator.spectral.working_size, s);
  detail::read_optional(j, "box_size", c.generator.spectral.box_size, s);
  detail::read_optional(j, "blur_sigma", c.generator.spectral.blur_sigma, s);
  detail::read_optional(j, "center_prior_weight", c.generator.center_prior_weight, s);
  detail::read_optional(j, "center_prior_sigma", c.generator.center_prior_sigma, s);
  if (j.contains("alignment")) {
    std::string a;
    detail::read_optional(j, "alignment", a, s);
    c.alignment = parse_alignment(a);
  }
  detail::read_optional(j, "format", c.format, s);
  const auto w = c.generator.center_prior_weight;
  if (w < 0.0 || w > 1.0) throw ConfigError("saliency.center_prior_weight must lie in [0, 1]");
  if (!(c.generator.center_prior_sigma > 0.0)) throw ConfigError("saliency.center_prior_sigma must be > 0");
  if (c.generator.spectral.working_size < 8) throw ConfigError("saliency.working_size must be >= 8");
  if (c.generator.spectral.box_size < 1) throw ConfigError("saliency.box_size must be >= 1");
  if (c.format.empty()) throw ConfigError("saliency.format must not be empty");
}

json eval_json(const EvalConfig& c) {
  return json{{"policy", to_string(c.policy.kind)}, {"resize_short", c.policy.resize_short},
              {"crop_size", c.policy.crop_size},     {"seed", c.policy.seed},
              {"output_dir", c.output_dir},         {"split", to_string(c.split)}};
}

void read_eval(const json& j, EvalConfig& c) {
  constexpr std::string_view s = "eval";
  detail::require_known_keys(j, {"policy", "resize_short", "crop_size", "seed", "output_dir", "split"}, s);
  if (j.contains("policy")) {
    std::string kind;
    detail::read_optional(j, "policy", kind, s);
    c.policy.kind = parse_patch_policy(kind);
  }
  detail::read_optional(j, "resize_short", c.policy.resize_short, s);
  detail::read_optional(j, "crop_size", c.policy.crop_size, s);
  detail::read_optional(j, "seed", c.policy.seed, s);
  detail::read_optional(j, "output_dir", c.output_dir, s);
  if (j.contains("split")) {
    std::string split;
    detail::read_optional(j, "split", split, s);
    try {
      c.split = parse_split(split);
    } catch (const DataError& e) {
      throw ConfigError(std::string("eval.split: ") + e.what());
    }
  }
  if (c.policy.crop_size < 1 || c.policy.resize_short < 0) throw ConfigError("eval crop sizes must be positive");
}

}  // namespace

json to_json(const AppConfig& c) {
  return json{{"data", data_json(c.data)},
              {"saliency", saliency_json(c.saliency)},
              {"model", json(c.model)},
              {"train", json(c.train)},
              {"eval", eval_json(c.eval)}};
}

AppConfig app_config_from_json(const json& j) {
  detail::require_known_keys(j, {"data", "saliency", "model", "train", "eval"}, "config");
  AppConfig c;
  if (j.contains("data")) read_data(j.at("data"), c.data);
  if (j.contains("saliency")) read_saliency(j.at("saliency"), c.saliency);
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("eval")) read_eval(j.at("eval"), c.eval);
  // One alignment setting drives training and evaluation alike.
  c.train.augment.alignment = c.saliency.alignment;
  c.eval.policy.alignment = c.saliency.alignment;
  return c;
}

AppConfig resolve_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides) {
  json layered = to_json(AppConfig{});
  if (file) {
    std::ifstream is(*file);
    if (!is) throw ConfigError("cannot open config file '" + file->string() + "'");
    json from_file;
    try {
      from_file = json::parse(is);
    } catch (const json::exception& e) {
      throw ConfigError(file->string() + ": " + e.what());
    }
    if (!from_file.is_object()) throw ConfigError(file->string() + ": expected an object");
    for (const auto& [section, values] : from_file.items()) {
      if (!layered.contains(section)) throw ConfigError("unknown config section '" + section + "'");
      if (!values.is_object()) throw ConfigError("config section '" + section + "' must be an object");
      for (const auto& [key, value] : values.items()) layered[section][key] = value;
    }
  }
  if (const char* env = std::getenv(kCacheDirEnv); env != nullptr && *env != '\0') {
    layered["data"]["cache_dir"] = env;
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    const auto dot = item.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
      throw ConfigError("override '" + item + "' is not section.key=value");
    }
    const std::string section = item.substr(0, dot);
    const std::string key = item.substr(dot + 1, eq - dot - 1);
    const std::string raw = item.substr(eq + 1);
    if (!layered.contains(section)) throw ConfigError("unknown config section '" + section + "'");
    json value = json::parse(raw, nullptr, false);
    const bool string_slot = layered[section].contains(key) && layered[section][key].is_string();
    if (value.is_discarded() || (string_slot && !value.is_string())) value = raw;
    layered[section][key] = std::move(value);
  }
  return app_config_from_json(layered);
}

}  // namespace salrgb
