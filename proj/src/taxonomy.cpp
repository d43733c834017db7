#include "salrgb/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include "salrgb/error.hpp"

namespace salrgb {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t expected_size(std::string_view name) {
  if (name == "ava14") return 14;
  if (name == "flickr20") return 20;
  return 0;
}

}  // namespace

StyleTaxonomy::StyleTaxonomy(std::string name, std::vector<std::string> classes)
    : name_(std::move(name)), classes_(std::move(classes)) {
  if (classes_.empty()) throw DataError("taxonomy '" + name_ + "' has no classes");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].empty()) throw DataError("taxonomy '" + name_ + "': empty class name");
    if (!index_.emplace(classes_[i], i).second) {
      throw DataError("taxonomy '" + name_ + "': duplicate class '" + classes_[i] + "'");
    }
  }
  if (const auto n = expected_size(name_); n != 0 && classes_.size() != n) {
    throw DataError("taxonomy '" + name_ + "' must have " + std::to_string(n) + " classes, got " +
                    std::to_string(classes_.size()));
  }
}

StyleTaxonomy StyleTaxonomy::ava14() {
  return StyleTaxonomy("ava14", {"Complementary Colors", "Duotones", "HDR", "Image Grain",
                                 "Light On White", "Long Exposure", "Macro", "Motion Blur",
                                 "Negative Image", "Rule of Thirds", "Shallow DOF", "Silhouettes",
                                 "Soft Focus", "Vanishing Point"});
}

StyleTaxonomy StyleTaxonomy::parse(std::string name, std::string_view text) {
  std::vector<std::string> classes;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto cls = trim(line);
    if (!cls.empty()) classes.push_back(std::move(cls));
  }
  return StyleTaxonomy(std::move(name), std::move(classes));
}

StyleTaxonomy StyleTaxonomy::load(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read taxonomy file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  if (name.empty()) name = path.stem().string();
  return parse(std::move(name), text.str());
}

StyleTaxonomy StyleTaxonomy::resolve(std::string_view name_or_path) {
  if (name_or_path == "ava14") return ava14();
  return load(std::filesystem::path(name_or_path));
}

std::optional<std::size_t> StyleTaxonomy::index_of(std::string_view cls) const {
  const auto it = index_.find(std::string(cls));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t StyleTaxonomy::require_index(std::string_view cls) const {
  if (const auto i = index_of(cls)) return *i;
  throw DataError("unknown class '" + std::string(cls) + "' for taxonomy '" + name_ + "'");
}

}  // namespace salrgb
