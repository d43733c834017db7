#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace salrgb {

// An ordered list of style class names. Index i always maps to the same name.
class StyleTaxonomy {
 public:
  StyleTaxonomy() = default;
  // Throws DataError on empty or duplicate names, or when a well-known
  // taxonomy name ("ava14", "flickr20") has the wrong class count.
  StyleTaxonomy(std::string name, std::vector<std::string> classes);

  // The 14 AVA Style classes.
  static StyleTaxonomy ava14();

  // One class per line; blank lines and '#' comments ignored.
  static StyleTaxonomy parse(std::string name, std::string_view text);
  // Name defaults to the file stem.
  static StyleTaxonomy load(const std::filesystem::path& path, std::string name = {});
  // "ava14" resolves to the built-in list, anything else is read as a file.
  static StyleTaxonomy resolve(std::string_view name_or_path);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const std::string& at(std::size_t i) const { return classes_.at(i); }
  std::optional<std::size_t> index_of(std::string_view cls) const;
  // Throws DataError for unknown names.
  std::size_t require_index(std::string_view cls) const;

  friend bool operator==(const StyleTaxonomy& a, const StyleTaxonomy& b) {
    return a.name_ == b.name_ && a.classes_ == b.classes_;
  }

 private:
  std::string name_;
  std::vector<std::string> classes_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace salrgb
