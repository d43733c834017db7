#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "salrgb/evaluation.hpp"
#include "salrgb/taxonomy.hpp"

namespace salrgb {

// x100 with two decimals: 0.7182 -> "71.82".
std::string format_percent(double value);

// Class x metric table plus the MAP line, in percent.
std::string render_text(const EvalReport& report);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Structured document (JSON) including per-class bar-plot series.
std::string render_structured(const EvalReport& report);
EvalReport parse_structured(const std::string& text);

// {class, probability} sorted by descending probability, ties by class index.
std::vector<std::pair<std::string, double>> ranked_classes(std::span<const double> probabilities,
                                                           const StyleTaxonomy& taxonomy);
std::string render_prediction(std::span<const double> probabilities, const StyleTaxonomy& taxonomy);

// Prediction dump: a header line {taxonomy, classes, config} followed by one
// {id, probabilities, truths} line per record.
struct PredictionDump {
  StyleTaxonomy taxonomy;
  nlohmann::json config;
  std::vector<PredictionRecord> predictions;
};

void write_predictions(const std::filesystem::path& path, const PredictionDump& dump);
PredictionDump read_predictions(const std::filesystem::path& path);

}  // namespace salrgb
