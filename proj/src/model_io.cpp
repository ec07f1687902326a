#include "hanslens/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "hanslens/error.hpp"
#include "hanslens/hlw.hpp"

namespace hanslens {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("missing model envelope " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed envelope: " + e.what());
  }
}

json envelope(const std::string& kind, const std::string& cls, const Shape& shape) {
  json j;
  j["kind"] = kind;
  j["class"] = cls;
  j["input_shape"] = shape;
  return j;
}

json standardizer_json(const Standardizer& s) { return json{{"mean", s.mean}, {"std", s.stddev}}; }

void save_single(const Detector& detector, const fs::path& dir, const Standardizer* st) {
  fs::create_directories(dir);
  json j;
  std::vector<Layer> layers;
  if (const auto* k = std::get_if<KdeModel>(&detector)) {
    j = envelope("kde", k->class_name, k->input_shape());
    j["gamma"] = k->gamma();
    layers = k->neuralized().layers;
  } else if (const auto* a = std::get_if<AutoencoderModel>(&detector)) {
    j = envelope("autoencoder", a->class_name, a->input_shape());
    j["best_epoch"] = a->best_epoch;
    layers = a->network();
  } else if (const auto* d = std::get_if<DeepOneClassModel>(&detector)) {
    j = envelope("deep", d->class_name, d->input_shape());
    j["lambda"] = d->lambda();
    layers = d->neuralized().layers;
  }
  if (st) j["standardizer"] = standardizer_json(*st);
  j["weights"] = "model.hlw";
  save_hlw(dir / "model.hlw", layers);
  write_json(dir / "model.json", j);
}

Detector load_single(const fs::path& dir, const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const Shape shape = j.at("input_shape").get<Shape>();
  const std::string cls = j.value("class", std::string());
  auto layers = load_hlw(dir / j.value("weights", std::string("model.hlw")));
  if (kind == "kde") {
    if (layers.size() != 2 || !std::holds_alternative<SquaredDistance>(layers[0]) ||
        !std::holds_alternative<NegLogSumExp>(layers[1]))
      throw DataError(dir.string() + ": kde weights must be [sqdist, neglse]");
    KdeModel m(std::move(std::get<SquaredDistance>(layers[0]).templates), std::get<NegLogSumExp>(layers[1]).gamma, shape);
    m.class_name = cls;
    return m;
  }
  if (kind == "autoencoder") {
    AutoencoderModel m(std::move(layers), shape);
    m.class_name = cls;
    m.best_epoch = j.value("best_epoch", std::size_t{0});
    return m;
  }
  if (kind == "deep") {
    if (layers.size() < 3 || !std::holds_alternative<SquaredDistance>(layers.back()) ||
        !std::holds_alternative<Linear>(layers[layers.size() - 2]))
      throw DataError(dir.string() + ": deep weights must end in [linear, sqdist]");
    Tensor w = std::move(std::get<Linear>(layers[layers.size() - 2]).weights);
    layers.resize(layers.size() - 2);
    try {
      check_backbone(layers);
    } catch (const ConfigError& e) {
      throw DataError(dir.string() + ": unsupported feature extractor: " + e.what());
    }
    DeepOneClassModel m(std::move(layers), std::move(w), j.value("lambda", 0.0), shape);
    m.class_name = cls;
    return m;
  }
  throw DataError(dir.string() + ": unknown detector kind '" + kind + "'");
}

Standardizer read_standardizer(const fs::path& dir, const json& j) {
  if (!j.contains("standardizer")) throw DataError(dir.string() + ": bag member lacks a standardizer");
  const auto& s = j.at("standardizer");
  return {s.at("mean").get<double>(), s.at("std").get<double>()};
}

}  // namespace

void save_detector(const Detector& detector, const fs::path& dir) {
  if (const auto* bag = std::get_if<BaggedModel>(&detector)) {
    fs::create_directories(dir);
    save_single(bag->kde, dir / "kde", &bag->standardizers[0]);
    save_single(bag->autoencoder, dir / "autoencoder", &bag->standardizers[1]);
    save_single(bag->deep, dir / "deep", &bag->standardizers[2]);
    json j = envelope("bag", bag->class_name, bag->kde.input_shape());
    j["members"] = {"kde", "autoencoder", "deep"};
    write_json(dir / "model.json", j);
    return;
  }
  save_single(detector, dir, nullptr);
}

std::string read_detector_kind(const fs::path& dir) {
  try {
    return read_json(dir / "model.json").at("kind").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": malformed envelope: " + e.what());
  }
}

Detector load_detector(const fs::path& dir) {
  const json j = read_json(dir / "model.json");
  try {
    if (j.at("kind").get<std::string>() != "bag") return load_single(dir, j);
    const auto members = j.at("members").get<std::vector<std::string>>();
    if (members.size() != 3) throw DataError(dir.string() + ": a bag needs exactly three members");
    std::array<json, 3> env;
    for (std::size_t m = 0; m < 3; ++m) env[m] = read_json(dir / members[m] / "model.json");
    auto kde = load_single(dir / members[0], env[0]);
    auto ae = load_single(dir / members[1], env[1]);
    auto deep = load_single(dir / members[2], env[2]);
    if (!std::holds_alternative<KdeModel>(kde) || !std::holds_alternative<AutoencoderModel>(ae) ||
        !std::holds_alternative<DeepOneClassModel>(deep))
      throw DataError(dir.string() + ": bag members must be kde, autoencoder, deep in that order");
    BaggedModel bag{std::get<KdeModel>(std::move(kde)), std::get<AutoencoderModel>(std::move(ae)),
                    std::get<DeepOneClassModel>(std::move(deep)),
                    {read_standardizer(dir / members[0], env[0]), read_standardizer(dir / members[1], env[1]),
                     read_standardizer(dir / members[2], env[2])},
                    j.value("class", std::string())};
    for (const auto& s : bag.standardizers)
      if (!(s.stddev > 0.0)) throw DataError(dir.string() + ": standardizer spread must be positive");
    if (bag.kde.input_shape() != bag.autoencoder.input_shape() || bag.kde.input_shape() != bag.deep.input_shape())
      throw ShapeError(dir.string() + ": bag members have differing input shapes");
    return bag;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": malformed envelope: " + e.what());
  }
}

}  // namespace hanslens
