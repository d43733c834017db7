#include "salrgb/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "salrgb/error.hpp"
#include "salrgb/fetch.hpp"
#include "salrgb/image.hpp"
#include "salrgb/parallel.hpp"
#include "salrgb/saliency.hpp"

namespace fs = std::filesystem;

namespace salrgb {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::missing_image: return "missing_image";
    case ProblemKind::undecodable_image: return "undecodable_image";
    case ProblemKind::image_size_mismatch: return "image_size_mismatch";
    case ProblemKind::missing_saliency: return "missing_saliency";
    case ProblemKind::invalid_saliency: return "invalid_saliency";
    case ProblemKind::saliency_size_mismatch: return "saliency_size_mismatch";
  }
  return "?";
}

fs::path resolve_image_path(const ImageRecord& record, const fs::path& image_root,
                            const fs::path& cache_dir) {
  if (record.is_remote()) return cache_path_for(record, cache_dir.empty() ? image_root : cache_dir);
  const fs::path source(record.source);
  return source.is_absolute() ? source : image_root / source;
}

namespace {

// Aspect ratios may differ by rounding when a detector resized the map.
bool aspect_matches(int ih, int iw, int mh, int mw) {
  const double image_aspect = static_cast<double>(iw) / ih;
  const double map_aspect = static_cast<double>(mw) / mh;
  return std::abs(image_aspect - map_aspect) <= 0.02 * image_aspect;
}

std::vector<ValidationProblem> check_record(const ImageRecord& r, const fs::path& image_root,
                                            const fs::path& saliency_root, const fs::path& cache_dir) {
  std::vector<ValidationProblem> problems;
  const fs::path image_path = resolve_image_path(r, image_root, cache_dir);
  std::optional<RasterInfo> image;
  if (!fs::exists(image_path)) {
    problems.push_back({r.id, ProblemKind::missing_image, image_path.string()});
  } else {
    try {
      // A full decode catches truncated payloads that a header probe accepts.
      const ImageGrid decoded = read_image(image_path);
      image = RasterInfo{decoded.height(), decoded.width(), decoded.channels()};
      if ((r.width && *r.width != image->width) || (r.height && *r.height != image->height)) {
        std::ostringstream detail;
        detail << "manifest says " << r.width.value_or(image->width) << "x"
               << r.height.value_or(image->height) << ", file is " << image->width << "x"
               << image->height;
        problems.push_back({r.id, ProblemKind::image_size_mismatch, detail.str()});
      }
    } catch (const Error& e) {
      problems.push_back({r.id, ProblemKind::undecodable_image, e.what()});
    }
  }

  const auto map_path = find_saliency_file(saliency_root, r.id);
  if (!map_path) {
    problems.push_back({r.id, ProblemKind::missing_saliency, (saliency_root / r.id).string()});
    return problems;
  }
  try {
    const SaliencyMap map = load_saliency(*map_path);
    if (image && !aspect_matches(image->height, image->width, map.height(), map.width())) {
      std::ostringstream detail;
      detail << "map " << map.width() << "x" << map.height() << " vs image " << image->width << "x"
             << image->height;
      problems.push_back({r.id, ProblemKind::saliency_size_mismatch, detail.str()});
    }
  } catch (const Error& e) {
    problems.push_back({r.id, ProblemKind::invalid_saliency, e.what()});
  }
  return problems;
}

}  // namespace

ValidationReport validate_dataset(const DatasetManifest& manifest, const fs::path& image_root,
                                  const fs::path& saliency_root, const fs::path& cache_dir, int jobs) {
  std::vector<std::vector<ValidationProblem>> per_record(manifest.records.size());
  parallel_for(manifest.records.size(), jobs, [&](std::size_t i) {
    per_record[i] = check_record(manifest.records[i], image_root, saliency_root, cache_dir);
  });
  std::vector<std::size_t> order(manifest.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return manifest.records[a].id < manifest.records[b].id;
  });
  ValidationReport report;
  for (const auto i : order) {
    for (auto& p : per_record[i]) report.problems.push_back(std::move(p));
  }
  return report;
}

std::string format_report(const ValidationReport& report) {
  std::ostringstream out;
  for (const auto& p : report.problems) {
    out << p.record_id << '\t' << to_string(p.kind) << '\t' << p.detail << '\n';
  }
  return out.str();
}

}  // namespace salrgb
