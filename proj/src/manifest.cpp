#include "salrgb/manifest.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "salrgb/error.hpp"
#include "salrgb/rng.hpp"

namespace salrgb {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

bool ImageRecord::is_remote() const {
  return source.starts_with("http://") || source.starts_with("https://");
}

namespace {

const std::unordered_set<std::string> kRecordKeys{"id",    "source", "split", "labels",
                                                  "width", "height", "sha256"};

ImageRecord parse_record(const json& j, std::size_t line) {
  if (!j.is_object()) throw ManifestError(line, "expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kRecordKeys.contains(key)) throw ManifestError(line, "unknown key '" + key + "'");
  }
  for (const char* key : {"id", "source", "split", "labels"}) {
    if (!j.contains(key)) throw ManifestError(line, std::string("missing key '") + key + "'");
  }
  ImageRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.split = parse_split(j.at("split").get<std::string>());
    const auto& labels = j.at("labels");
    if (labels.is_string()) {
      r.labels.push_back(labels.get<std::string>());
    } else {
      r.labels = labels.get<std::vector<std::string>>();
    }
    if (j.contains("width")) r.width = j.at("width").get<int>();
    if (j.contains("height")) r.height = j.at("height").get<int>();
    if (j.contains("sha256")) r.sha256 = j.at("sha256").get<std::string>();
  } catch (const json::exception& e) {
    throw ManifestError(line, e.what());
  } catch (const DataError& e) {
    throw ManifestError(line, e.what());
  }
  if (r.id.empty()) throw ManifestError(line, "empty id");
  if (r.source.empty()) throw ManifestError(line, "empty source");
  if (r.labels.empty()) throw ManifestError(line, "record '" + r.id + "' has no labels");
  if ((r.width && *r.width <= 0) || (r.height && *r.height <= 0)) {
    throw ManifestError(line, "non-positive image dimension");
  }
  return r;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const StyleTaxonomy& taxonomy) {
  DatasetManifest manifest{taxonomy, {}};
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(number, std::string("malformed record: ") + e.what());
    }
    ImageRecord r = parse_record(j, number);
    for (const auto& label : r.labels) {
      if (!taxonomy.index_of(label)) {
        throw ManifestError(number, "unknown label '" + label + "' for taxonomy '" +
                                        taxonomy.name() + "'");
      }
    }
    if (r.split != Split::test && r.labels.size() != 1) {
      throw ManifestError(number, std::string(to_string(r.split)) + " record '" + r.id +
                                      "' must carry exactly one label");
    }
    if (!seen.insert(r.id).second) throw ManifestError(number, "duplicate id '" + r.id + "'");
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const StyleTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str(), taxonomy);
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    json j = {{"id", r.id}, {"source", r.source}, {"split", to_string(r.split)}, {"labels", r.labels}};
    if (r.width) j["width"] = *r.width;
    if (r.height) j["height"] = *r.height;
    if (r.sha256) j["sha256"] = *r.sha256;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ImageRecord> split_records(const DatasetManifest& manifest, Split split) {
  std::vector<ImageRecord> out;
  for (const auto& r : manifest.records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> label_indices(const ImageRecord& record, const StyleTaxonomy& taxonomy) {
  std::vector<std::size_t> out;
  out.reserve(record.labels.size());
  for (const auto& label : record.labels) out.push_back(taxonomy.require_index(label));
  return out;
}

std::size_t ClassHistogram::operator[](std::string_view cls) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == cls) return counts[i];
  }
  throw DataError("class '" + std::string(cls) + "' not in histogram");
}

std::size_t ClassHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

ClassHistogram class_histogram(const DatasetManifest& manifest, Split split) {
  ClassHistogram h{manifest.taxonomy.classes(), std::vector<std::size_t>(manifest.taxonomy.size(), 0)};
  for (const auto& r : manifest.records) {
    if (r.split != split) continue;
    for (const auto i : label_indices(r, manifest.taxonomy)) ++h.counts[i];
  }
  return h;
}

std::size_t assign_validation_split(DatasetManifest& manifest, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw ConfigError("validation fraction must lie in [0, 1)");
  }
  for (const auto& r : manifest.records) {
    if (r.split == Split::val) return 0;
  }
  const auto threshold = static_cast<std::uint64_t>(fraction * 10000.0);
  std::size_t moved = 0;
  for (auto& r : manifest.records) {
    if (r.split == Split::train && fnv1a64(r.id) % 10000 < threshold) {
      r.split = Split::val;
      ++moved;
    }
  }
  return moved;
}

}  // namespace salrgb
