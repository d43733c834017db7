#include "salrgb/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "salrgb/error.hpp"

namespace salrgb {

using nlohmann::json;

namespace {

json optional_array(const std::vector<std::optional<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v ? json(*v) : json(nullptr));
  return out;
}

std::vector<std::optional<double>> read_optional_array(const json& j) {
  std::vector<std::optional<double>> out;
  for (const auto& v : j) out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  return out;
}

std::string cell(const std::optional<double>& v) { return v ? format_percent(*v) : "-"; }

}  // namespace

std::string format_percent(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
  return buf;
}

std::string render_text(const EvalReport& report) {
  std::size_t width = 5;
  for (const auto& c : report.classes) width = std::max(width, c.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "class" << "  " << std::right << std::setw(7) << "AP"
     << "  " << std::setw(7) << "PCP" << '\n';
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    os << std::left << std::setw(static_cast<int>(width)) << report.classes[c] << "  " << std::right << std::setw(7)
       << cell(report.average_precision.at(c)) << "  " << std::setw(7) << cell(report.precision.at(c)) << '\n';
  }
  os << "MAP: " << cell(report.map) << '\n';
  os << "samples: " << report.sample_count << '\n';
  os << "\nconfusion (rows: true class, columns: predicted, %)\n";
  for (std::size_t r = 0; r < report.confusion.rows.size(); ++r) {
    os << std::left << std::setw(static_cast<int>(width)) << report.classes.at(r) << std::right;
    for (const double v : report.confusion.rows[r]) os << ' ' << std::setw(6) << format_percent(v);
    if (report.confusion.zero_support[r]) os << "  (no samples)";
    os << '\n';
  }
  return os.str();
}

json to_json(const EvalReport& report) {
  json confusion = {{"rows", report.confusion.rows}, {"zero_support", report.confusion.zero_support}};
  return json{{"classes", report.classes},
              {"average_precision", optional_array(report.average_precision)},
              {"map", report.map ? json(*report.map) : json(nullptr)},
              {"precision", optional_array(report.precision)},
              {"confusion", confusion},
              {"sample_count", report.sample_count},
              {"config", report.config}};
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.classes = j.at("classes").get<std::vector<std::string>>();
    r.average_precision = read_optional_array(j.at("average_precision"));
    if (!j.at("map").is_null()) r.map = j.at("map").get<double>();
    r.precision = read_optional_array(j.at("precision"));
    r.confusion.rows = j.at("confusion").at("rows").get<std::vector<std::vector<double>>>();
    r.confusion.zero_support = j.at("confusion").at("zero_support").get<std::vector<bool>>();
    r.sample_count = j.at("sample_count").get<std::size_t>();
    r.config = j.value("config", json());
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string render_structured(const EvalReport& report) {
  json j = to_json(report);
  // Flat series for bar plots, one entry per class, values in percent.
  json bars = {{"labels", report.classes}, {"average_precision", json::array()}, {"precision", json::array()}};
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const auto& ap = report.average_precision.at(c);
    const auto& pcp = report.precision.at(c);
    bars["average_precision"].push_back(ap ? json(*ap * 100.0) : json(nullptr));
    bars["precision"].push_back(pcp ? json(*pcp * 100.0) : json(nullptr));
  }
  j["bars"] = std::move(bars);
  return j.dump(2) + "\n";
}

EvalReport parse_structured(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return report_from_json(j);
}

std::vector<std::pair<std::string, double>> ranked_classes(std::span<const double> probabilities,
                                                           const StyleTaxonomy& taxonomy) {
  if (probabilities.size() != taxonomy.size()) throw ShapeError("probability vector does not match taxonomy");
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probabilities[a] > probabilities[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (const auto i : order) out.emplace_back(taxonomy.at(i), probabilities[i]);
  return out;
}

std::string render_prediction(std::span<const double> probabilities, const StyleTaxonomy& taxonomy) {
  std::ostringstream os;
  for (const auto& [name, p] : ranked_classes(probabilities, taxonomy)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10f", p);
    os << name << '\t' << buf << '\n';
  }
  return os.str();
}

void write_predictions(const std::filesystem::path& path, const PredictionDump& dump) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << json{{"taxonomy", dump.taxonomy.name()}, {"classes", dump.taxonomy.classes()}, {"config", dump.config}}.dump()
     << '\n';
  for (const auto& p : dump.predictions) {
    os << json{{"id", p.id}, {"probabilities", p.probabilities}, {"truths", p.truths}}.dump() << '\n';
  }
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

PredictionDump read_predictions(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open predictions '" + path.string() + "'");
  PredictionDump dump;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  try {
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      if (header) {
        dump.taxonomy = StyleTaxonomy(j.at("taxonomy").get<std::string>(), j.at("classes").get<std::vector<std::string>>());
        dump.config = j.value("config", json());
        header = false;
        continue;
      }
      dump.predictions.push_back({j.at("id").get<std::string>(), j.at("probabilities").get<std::vector<double>>(),
                                  j.at("truths").get<std::vector<std::size_t>>()});
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (header) throw DataError(path.string() + ": empty prediction dump");
  return dump;
}

}  // namespace salrgb
