#include "salrgb/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "salrgb/error.hpp"

namespace salrgb {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[8] = {'S', 'A', 'L', 'R', 'G', 'B', 'C', 'K'};

json array_shapes(const std::vector<NamedArray>& arrays) {
  json out = json::array();
  for (const auto& a : arrays) out.push_back({{"name", a.name}, {"rows", a.value.rows()}, {"cols", a.value.cols()}});
  return out;
}

void write_arrays(std::ostream& os, const std::vector<NamedArray>& arrays) {
  for (const auto& a : arrays) {
    os.write(reinterpret_cast<const char*>(a.value.data()),
             static_cast<std::streamsize>(a.value.size() * sizeof(double)));
  }
}

std::vector<NamedArray> read_arrays(std::istream& is, const json& shapes, const fs::path& path) {
  std::vector<NamedArray> out;
  for (const auto& s : shapes) {
    NamedArray a;
    a.name = s.at("name").get<std::string>();
    const auto rows = s.at("rows").get<Eigen::Index>();
    const auto cols = s.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw DataError(path.string() + ": negative array shape");
    a.value.resize(rows, cols);
    is.read(reinterpret_cast<char*>(a.value.data()), static_cast<std::streamsize>(a.value.size() * sizeof(double)));
    if (!is) throw DataError(path.string() + ": truncated checkpoint (array '" + a.name + "')");
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, const StyleTaxonomy& taxonomy, std::uint64_t step) {
  Checkpoint ck;
  ck.config = model.config();
  ck.taxonomy = taxonomy;
  ck.step = step;
  const auto names = model.parameter_names();
  const auto params = model.parameter_list();
  for (std::size_t i = 0; i < params.size(); ++i) ck.weights.push_back({names[i], params[i]->value});
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const fs::path& path) {
  json header;
  header["config"] = ck.config;
  header["taxonomy"] = {{"name", ck.taxonomy.name()}, {"classes", ck.taxonomy.classes()}};
  header["step"] = ck.step;
  header["weights"] = array_shapes(ck.weights);
  header["echo"] = ck.echo;
  if (ck.train_state) {
    const TrainState& ts = *ck.train_state;
    header["train_state"] = {{"epoch", ts.epoch},
                             {"step", ts.step},
                             {"best_val_map", ts.best_val_map ? json(*ts.best_val_map) : json(nullptr)},
                             {"stale_epochs", ts.stale_epochs},
                             {"shuffle_rng", ts.shuffle_rng},
                             {"momentum", array_shapes(ts.momentum)}};
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open '" + tmp.string() + "' for writing");
    const std::uint32_t version = ck.version;
    const std::uint64_t length = text.size();
    os.write(kMagic, sizeof kMagic);
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    os.write(reinterpret_cast<const char*>(&length), sizeof length);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_arrays(os, ck.weights);
    if (ck.train_state) write_arrays(os, ck.train_state->momentum);
    os.flush();
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("failed writing checkpoint '" + path.string() + "' (disk full?)");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError(path.string() + ": not a checkpoint file");
  }
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  is.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!is) throw DataError(path.string() + ": truncated checkpoint header");
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": checkpoint version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  if (length > (std::uint64_t{1} << 32)) throw DataError(path.string() + ": corrupt header length");
  std::string text(length, '\0');
  is.read(text.data(), static_cast<std::streamsize>(length));
  if (!is) throw DataError(path.string() + ": truncated checkpoint header");

  Checkpoint ck;
  try {
    const json header = json::parse(text);
    ck.version = version;
    ck.config = header.at("config").get<ModelConfig>();
    const auto& tax = header.at("taxonomy");
    ck.taxonomy = StyleTaxonomy(tax.at("name").get<std::string>(), tax.at("classes").get<std::vector<std::string>>());
    ck.step = header.at("step").get<std::uint64_t>();
    ck.echo = header.value("echo", json());
    ck.weights = read_arrays(is, header.at("weights"), path);
    if (header.contains("train_state")) {
      const auto& t = header.at("train_state");
      TrainState ts;
      ts.epoch = t.at("epoch").get<std::uint64_t>();
      ts.step = t.at("step").get<std::uint64_t>();
      if (!t.at("best_val_map").is_null()) ts.best_val_map = t.at("best_val_map").get<double>();
      ts.stale_epochs = t.at("stale_epochs").get<std::uint64_t>();
      ts.shuffle_rng = t.at("shuffle_rng").get<std::string>();
      ts.momentum = read_arrays(is, t.at("momentum"), path);
      ck.train_state = std::move(ts);
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": invalid model config: " + e.what());
  }
  return ck;
}

void load_weights(Model& model, const Checkpoint& ck) {
  auto params = model.parameters();
  if (params.size() != ck.weights.size()) {
    throw DataError("checkpoint has " + std::to_string(ck.weights.size()) + " arrays, model expects " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedArray& a = ck.weights[i];
    if (a.name != params[i].name || a.value.rows() != params[i].value->rows() ||
        a.value.cols() != params[i].value->cols()) {
      throw DataError("checkpoint array '" + a.name + "' does not match model parameter '" + params[i].name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = ck.weights[i].value;
}

Model build_model(const Checkpoint& ck) {
  Model model(ck.config);
  load_weights(model, ck);
  return model;
}

void require_taxonomy(const Checkpoint& ck, const StyleTaxonomy& expected) {
  if (!(ck.taxonomy == expected)) {
    throw DataError("checkpoint taxonomy '" + ck.taxonomy.name() + "' (" + std::to_string(ck.taxonomy.size()) +
                    " classes) does not match '" + expected.name() + "' (" + std::to_string(expected.size()) +
                    " classes)");
  }
}

void load_backbone_weights(Model& model, const fs::path& path) {
  const Checkpoint ck = read_checkpoint(path);
  std::unordered_map<std::string, const NamedArray*> by_name;
  for (const auto& a : ck.weights) by_name.emplace(a.name, &a);

  const std::vector<std::string> prefixes = {"rgb_patch.", "rgb_warp."};
  std::size_t loaded = 0;
  for (auto& ref : model.parameters()) {
    const auto dot = ref.name.find('.');
    const std::string prefix = ref.name.substr(0, dot + 1);
    if (prefix != "rgb_patch." && prefix != "rgb_warp.") continue;
    const std::string local = ref.name.substr(dot + 1);
    const NamedArray* found = nullptr;
    if (auto it = by_name.find(ref.name); it != by_name.end()) found = it->second;
    for (const auto& p : prefixes) {
      if (found) break;
      if (auto it = by_name.find(p + local); it != by_name.end()) found = it->second;
    }
    if (!found) throw DataError(path.string() + ": no backbone array for '" + ref.name + "'");
    if (found->value.rows() != ref.value->rows() || found->value.cols() != ref.value->cols()) {
      throw DataError(path.string() + ": shape mismatch for '" + ref.name + "'");
    }
    *ref.value = found->value;
    ++loaded;
  }
  if (loaded == 0) throw DataError(path.string() + ": model has no RGB backbone to initialise");
}

}  // namespace salrgb
