#include "salrgb/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <vector>

#include <CLI11.hpp>

#include "salrgb/checkpoint.hpp"
#include "salrgb/config.hpp"
#include "salrgb/error.hpp"
#include "salrgb/evaluation.hpp"
#include "salrgb/fetch.hpp"
#include "salrgb/log.hpp"
#include "salrgb/manifest.hpp"
#include "salrgb/parallel.hpp"
#include "salrgb/report.hpp"
#include "salrgb/sample_source.hpp"
#include "salrgb/saliency.hpp"
#include "salrgb/training.hpp"
#include "salrgb/validation.hpp"

namespace salrgb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_file;
  std::vector<std::string> overrides;
  int jobs = 0;
  bool quiet = false;

  bool fetch = true;
  bool overwrite = false;
  bool resume = false;
  std::string checkpoint;
  std::string image;
  std::string saliency_map;
  std::string predictions;
  std::string format = "text";
};

AppConfig load_config(const Options& o) {
  std::optional<fs::path> file;
  if (!o.config_file.empty()) file = o.config_file;
  AppConfig config = resolve_config(file, o.overrides);
  if (o.jobs > 0) config.train.jobs = o.jobs;
  return config;
}

int effective_jobs(const AppConfig& c) { return c.train.jobs > 0 ? c.train.jobs : default_jobs(); }

DatasetManifest load_dataset(const AppConfig& c, StyleTaxonomy& taxonomy) {
  if (c.data.manifest.empty()) throw ConfigError("data.manifest is not set");
  taxonomy = StyleTaxonomy::resolve(c.data.taxonomy);
  return load_manifest(c.data.manifest, taxonomy);
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  os << j.dump(2) << '\n';
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  os << text;
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

// Downloads URL records into the cache; failures surface later as missing images.
void fetch_all(const DatasetManifest& manifest, const AppConfig& c, int jobs, std::ostream& err) {
  std::vector<const ImageRecord*> remote;
  for (const auto& r : manifest.records) {
    if (r.is_remote()) remote.push_back(&r);
  }
  std::vector<std::string> failures(remote.size());
  parallel_for(remote.size(), jobs, [&](std::size_t i) {
    try {
      fetch_remote(*remote[i], c.data.cache_dir);
    } catch (const FetchError& e) {
      failures[i] = e.what();
    }
  });
  for (const auto& f : failures) {
    if (!f.empty()) err << "warning: " << f << '\n';
  }
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const AppConfig c = load_config(o);
  StyleTaxonomy taxonomy;
  const DatasetManifest manifest = load_dataset(c, taxonomy);
  const int jobs = effective_jobs(c);
  if (o.fetch) fetch_all(manifest, c, jobs, err);
  const ValidationReport report =
      validate_dataset(manifest, c.data.image_root, c.data.saliency_root, c.data.cache_dir, jobs);
  out << format_report(report);
  return report.empty() ? kExitOk : kExitData;
}

int cmd_saliency(const Options& o, std::ostream& out, std::ostream& err) {
  const AppConfig c = load_config(o);
  StyleTaxonomy taxonomy;
  const DatasetManifest manifest = load_dataset(c, taxonomy);
  const int jobs = effective_jobs(c);
  if (o.fetch) fetch_all(manifest, c, jobs, err);
  const DiskSampleSource source(c.data.image_root, c.data.saliency_root, c.data.cache_dir);
  const fs::path root = c.data.saliency_root;
  fs::create_directories(root);
  std::vector<char> written(manifest.records.size(), 0);
  parallel_for(manifest.records.size(), jobs, [&](std::size_t i) {
    const ImageRecord& r = manifest.records[i];
    if (!o.overwrite && find_saliency_file(root, r.id)) return;
    const ImageGrid image = source.image(r);
    save_saliency(generate_saliency(image, c.saliency.generator), root / (r.id + "." + c.saliency.format));
    written[i] = 1;
  });
  json echo = to_json(c);
  write_json(root / "saliency_config.json", echo);
  const auto count = std::count(written.begin(), written.end(), 1);
  out << "wrote " << count << " saliency maps to " << root.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream&) {
  AppConfig c = load_config(o);
  StyleTaxonomy taxonomy;
  DatasetManifest manifest = load_dataset(c, taxonomy);
  c.model.num_classes = taxonomy.size();
  c.train.validate();
  assign_validation_split(manifest, c.data.val_fraction);

  const DiskSampleSource source(c.data.image_root, c.data.saliency_root, c.data.cache_dir);
  FitRequest request;
  request.model = c.model;
  request.train = c.train;
  request.taxonomy = taxonomy;
  request.train_records = split_records(manifest, Split::train);
  request.val_records = split_records(manifest, Split::val);
  request.source = &source;
  request.val_policy = c.eval.policy;
  request.resume = o.resume;
  request.echo = to_json(c);
  write_json(fs::path(c.train.checkpoint_dir) / "config.json", request.echo);
  const FitResult result = fit(request);
  out << "best checkpoint: " << result.best_checkpoint.string() << '\n';
  out << "last checkpoint: " << result.last_checkpoint.string() << '\n';
  out << "training log: " << result.log_path.string() << '\n';
  if (result.early_stopped) out << "stopped early after " << result.history.size() << " epochs\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
  const AppConfig c = load_config(o);
  StyleTaxonomy taxonomy;
  const DatasetManifest manifest = load_dataset(c, taxonomy);
  const Checkpoint ck = read_checkpoint(o.checkpoint);
  require_taxonomy(ck, taxonomy);
  Model model = build_model(ck);
  const std::vector<ImageRecord> records = split_records(manifest, c.eval.split);
  if (records.empty()) throw DataError("no records in split '" + std::string(to_string(c.eval.split)) + "'");
  const DiskSampleSource source(c.data.image_root, c.data.saliency_root, c.data.cache_dir);
  json echo = to_json(c);
  echo["checkpoint"] = o.checkpoint;
  const Evaluation result = evaluate(model, records, source, taxonomy, c.eval.policy, effective_jobs(c), echo);

  const fs::path dir = c.eval.output_dir;
  write_text(dir / "report.txt", render_text(result.report));
  write_text(dir / "report.json", render_structured(result.report));
  write_predictions(dir / "predictions.jsonl", {taxonomy, echo, result.predictions});
  out << render_text(result.report);
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream&) {
  const AppConfig c = load_config(o);
  const Checkpoint ck = read_checkpoint(o.checkpoint);
  const Model model = build_model(ck);
  const ImageGrid image = read_image(o.image);
  std::optional<SaliencyMap> map;
  if (model.config().has(ColumnKind::saliency)) {
    map = o.saliency_map.empty() ? generate_saliency(image, c.saliency.generator) : load_saliency(o.saliency_map);
  }
  const auto probs = predict_image(model, image, map ? &*map : nullptr, c.eval.policy, fs::path(o.image).stem().string());
  out << render_prediction(probs, ck.taxonomy);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  const PredictionDump dump = read_predictions(o.predictions);
  const EvalReport report = compute_report(dump.predictions, dump.taxonomy, dump.config);
  out << (o.format == "structured" ? render_structured(report) : render_text(report));
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image style classification with a saliency column and an RGB column.", "salrgb"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_file, "JSON config file (layered over defaults)");
  app.add_option("--set", o.overrides, "Override a config value: section.key=value (repeatable)");
  app.add_option("--jobs", o.jobs, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", o.quiet, "Suppress progress logging");

  auto* validate = app.add_subcommand("validate", "Check that every record has a decodable image and saliency map");
  validate->add_flag("!--no-fetch", o.fetch, "Do not download URL records first");
  auto* saliency = app.add_subcommand("saliency", "Generate spectral-residual saliency maps for the manifest");
  saliency->add_flag("--overwrite", o.overwrite, "Regenerate maps that already exist");
  saliency->add_flag("!--no-fetch", o.fetch, "Do not download URL records first");
  auto* train = app.add_subcommand("train", "Train and keep best/last checkpoints");
  train->add_flag("--resume", o.resume, "Continue from <checkpoint_dir>/last.ckpt");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  auto* predict = app.add_subcommand("predict", "Classify one image, classes by descending probability");
  predict->add_option("image", o.image, "Image file")->required();
  predict->add_option("--saliency", o.saliency_map, "Saliency map (generated when omitted)");
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  auto* report = app.add_subcommand("report", "Recompute metrics from a prediction dump");
  report->add_option("--predictions", o.predictions, "Prediction dump (JSON lines)")->required();
  report->add_option("--format", o.format, "text or structured")->check(CLI::IsMember({"text", "structured"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const bool was_quiet = log::quiet();
  log::quiet() = was_quiet || o.quiet;
  try {
    int code = kExitOk;
    if (*validate) code = cmd_validate(o, out, err);
    if (*saliency) code = cmd_saliency(o, out, err);
    if (*train) code = cmd_train(o, out, err);
    if (*eval) code = cmd_eval(o, out, err);
    if (*predict) code = cmd_predict(o, out, err);
    if (*report) code = cmd_report(o, out, err);
    log::quiet() = was_quiet;
    return code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    log::quiet() = was_quiet;
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    log::quiet() = was_quiet;
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    log::quiet() = was_quiet;
    return kExitRuntime;
  }
}

}  // namespace salrgb::cli
