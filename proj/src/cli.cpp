#include "hanslens/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hanslens/data.hpp"
#include "hanslens/detectors.hpp"
#include "hanslens/error.hpp"
#include "hanslens/eval.hpp"
#include "hanslens/explain.hpp"
#include "hanslens/hlw.hpp"
#include "hanslens/model_io.hpp"
#include "hanslens/parallel.hpp"
#include "hanslens/rng.hpp"

#ifndef HANSLENS_VERSION
#define HANSLENS_VERSION "0.0.0"
#endif

namespace hanslens::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class OutputExists : public Error {
public:
  using Error::Error;
};

struct Options {
  std::string data;
  std::vector<std::string> data_list;
  std::string model;
  std::vector<std::string> model_list;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<double> gamma_grid;
  std::vector<double> lambda_grid;
  double lrp_gamma = LrpConfig{}.gamma;
  std::size_t epochs = AdamConfig{}.epochs;
  bool force = false;

  std::string kind;
  std::string split = "test";
  bool outliers_only = false;
  std::size_t bottleneck = 16;
  double learning_rate = AdamConfig{}.learning_rate;
  std::vector<std::size_t> backbone_widths{128};
  std::string backbone;
  std::vector<std::string> members;
  std::size_t top = 3;
  SynthSpec synth;
};

// Refuses to write into a non-empty directory unless forced.
void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw OutputExists(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw OutputExists(dir.string() + " is not empty (pass --force to overwrite)");
  }
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw DataError("failed writing " + path.string());
}

void write_run_json(const fs::path& dir, const std::string& command, std::uint64_t seed, json config) {
  json j;
  j["tool"] = "hanslens";
  j["version"] = HANSLENS_VERSION;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = std::move(config);
  write_text(dir / "run.json", j.dump(2) + "\n");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<Sample>& select_split(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.train;
  if (split == "val") return ds.val;
  if (split == "val_outliers") return ds.val_outliers;
  if (split == "test") return ds.test;
  throw ConfigError("unknown split '" + split + "' (train, val, val_outliers, test)");
}

void check_shapes(const Shape& model_shape, const std::vector<Sample>& samples) {
  for (const auto& s : samples)
    if (s.image.shape() != model_shape)
      throw ShapeError("sample " + s.id + " has shape " + shape_str(s.image.shape()) +
                       " but the model expects " + shape_str(model_shape));
}

// A loaded model directory: a real detector, or the oracle fixture that
// scores by label and explains with the ground-truth mask.
struct LoadedModel {
  std::string kind;
  std::string class_name;
  Shape input_shape;
  std::optional<Detector> detector;

  double score(const Sample& s) const { return detector ? hanslens::score(*detector, s.image) : s.label; }

  Tensor explain(const Sample& s, const LrpConfig& cfg) const {
    if (detector) return hanslens::explain(*detector, s.image, cfg).values;
    return s.mask ? *s.mask : Tensor(s.image.shape(), 0.0);
  }
};

LoadedModel load_model(const fs::path& dir) {
  const std::string kind = read_detector_kind(dir);
  if (kind == "oracle") {
    std::ifstream is(dir / "model.json", std::ios::binary);
    const auto j = json::parse(is);
    return {kind, j.value("class", std::string()), j.at("input_shape").get<Shape>(), std::nullopt};
  }
  Detector d = load_detector(dir);
  std::string cls = std::visit([](const auto& m) { return m.class_name; }, d);
  Shape shape = detector_input_shape(d);
  return {detector_kind(d), std::move(cls), std::move(shape), std::move(d)};
}

json grid_json(const std::vector<GridPoint>& grid) {
  json a = json::array();
  for (const auto& g : grid) a.push_back({{"value", g.value}, {"objective", g.objective}});
  return a;
}

json synth_json(const SynthSpec& s) {
  return {{"kind", to_string(s.kind)},     {"height", s.height},
          {"width", s.width},              {"n_train", s.n_train},
          {"n_val", s.n_val},              {"n_val_outliers", s.n_val_outliers},
          {"n_test", s.n_test},            {"stripe_width", s.stripe_width},
          {"dot_count", s.dot_count},      {"brightness_offset", s.brightness_offset},
          {"noise_probability", s.noise_probability}};
}

std::string normalize_kind(const std::string& kind) {
  if (kind == "auto" || kind == "ae") return "autoencoder";
  return kind;
}

// ---------------------------------------------------------------------------

int cmd_synth(Options& o, std::ostream& out) {
  o.synth.kind = parse_synth_kind(o.kind);
  o.synth.seed = o.seed;
  o.synth.validate();
  prepare_output(o.out, o.force);
  const Dataset ds = generate_synthetic(o.synth);
  write_dataset(ds, o.out);
  write_run_json(o.out, "synth", o.seed, synth_json(o.synth));
  out << "wrote " << ds.train.size() + ds.val.size() + ds.val_outliers.size() + ds.test.size() << " samples of class "
      << ds.class_name << " to " << o.out << "\n";
  return kOk;
}

struct FitResult {
  Detector detector;
  json details;
};

FitResult fit_member(const std::string& kind, const Options& o, const Dataset& ds) {
  const auto train = Dataset::images(ds.train);
  const auto val = Dataset::images(ds.val);
  if (train.empty()) throw DataError("training split is empty");
  json details;
  if (kind == "kde") {
    const Tensor points = stack_rows(train);
    const auto grid = o.gamma_grid.empty() ? default_gamma_grid(points) : o.gamma_grid;
    KdeModel m = fit_kde(train, val, grid);
    m.class_name = ds.class_name;
    details["gamma"] = m.gamma();
    details["selection"] = grid_json(m.selection);
    return {std::move(m), details};
  }
  if (kind == "autoencoder") {
    AdamConfig cfg;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.learning_rate;
    cfg.seed = derive_seed(o.seed, "fit/autoencoder", 0);
    const auto arch = AutoencoderArchitecture::standard(train.front().size(), o.bottleneck);
    AutoencoderModel m = fit_autoencoder(train, val, arch, cfg);
    m.class_name = ds.class_name;
    details["best_epoch"] = m.best_epoch;
    details["train_loss"] = m.train_loss;
    details["validation_loss"] = m.validation_loss;
    return {std::move(m), details};
  }
  if (kind == "deep") {
    std::vector<Layer> backbone;
    if (!o.backbone.empty()) {
      backbone = load_hlw(o.backbone);
      details["backbone"] = o.backbone;
    } else {
      backbone = random_backbone(train.front().size(), o.backbone_widths, derive_seed(o.seed, "fit/deep/backbone", 0));
      details["backbone_widths"] = o.backbone_widths;
    }
    const auto val_out = Dataset::images(ds.val_outliers);
    std::vector<double> grid = o.lambda_grid;
    DeepOneClassModel m = fit_deep_one_class(std::move(backbone), train, val, val_out, grid);
    m.class_name = ds.class_name;
    details["lambda"] = m.lambda();
    details["selection"] = grid_json(m.selection);
    return {std::move(m), details};
  }
  throw ConfigError("unknown detector kind '" + kind + "' (kde, autoencoder, deep, oracle)");
}

json fit_config(const Options& o, const std::string& kind) {
  json c;
  c["data"] = o.data;
  c["model"] = kind;
  c["out"] = o.out;
  if (kind == "kde") c["gamma_grid"] = o.gamma_grid;
  if (kind == "autoencoder") {
    c["epochs"] = o.epochs;
    c["bottleneck"] = o.bottleneck;
    c["learning_rate"] = o.learning_rate;
  }
  if (kind == "deep") {
    c["lambda_grid"] = o.lambda_grid;
    c["backbone"] = o.backbone;
    c["backbone_widths"] = o.backbone_widths;
  }
  return c;
}

int cmd_fit(Options& o, std::ostream& out) {
  const std::string kind = normalize_kind(o.model);
  const Dataset ds = load_manifest(o.data);
  if (kind != "kde" && kind != "autoencoder" && kind != "deep" && kind != "oracle")
    throw ConfigError("unknown detector kind '" + o.model + "' (kde, autoencoder, deep, oracle)");
  prepare_output(o.out, o.force);
  json config = fit_config(o, kind);
  if (kind == "oracle") {
    if (ds.train.empty()) throw DataError("training split is empty");
    json j{{"kind", "oracle"}, {"class", ds.class_name}, {"input_shape", ds.train.front().image.shape()}};
    write_text(fs::path(o.out) / "model.json", j.dump(2) + "\n");
  } else {
    FitResult r = fit_member(kind, o, ds);
    save_detector(r.detector, o.out);
    config["result"] = std::move(r.details);
  }
  write_run_json(o.out, "fit", o.seed, std::move(config));
  out << "fitted " << kind << " on class " << ds.class_name << " -> " << o.out << "\n";
  return kOk;
}

int cmd_score(Options& o, std::ostream& out) {
  const LoadedModel model = load_model(o.model);
  const Dataset ds = load_manifest(o.data);
  const auto& samples = select_split(ds, o.split);
  check_shapes(model.input_shape, samples);
  prepare_output(o.out, o.force);
  std::vector<double> scores(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { scores[i] = model.score(samples[i]); });
  std::string csv = "sample_id,score\n";
  for (std::size_t i = 0; i < samples.size(); ++i) csv += samples[i].id + "," + format_double(scores[i]) + "\n";
  write_text(fs::path(o.out) / "scores.csv", csv);
  write_run_json(o.out, "score", o.seed, {{"data", o.data}, {"model", o.model}, {"out", o.out}, {"split", o.split}});
  out << "scored " << samples.size() << " samples -> " << (fs::path(o.out) / "scores.csv").string() << "\n";
  return kOk;
}

int cmd_explain(Options& o, std::ostream& out) {
  LrpConfig cfg;
  cfg.gamma = o.lrp_gamma;
  cfg.validate();
  const LoadedModel model = load_model(o.model);
  const Dataset ds = load_manifest(o.data);
  std::vector<const Sample*> samples;
  for (const auto& s : select_split(ds, o.split))
    if (!o.outliers_only || s.label == 1) samples.push_back(&s);
  for (const auto* s : samples)
    if (s->image.shape() != model.input_shape)
      throw ShapeError("sample " + s->id + " has shape " + shape_str(s->image.shape()) + " but the model expects " +
                       shape_str(model.input_shape));
  prepare_output(o.out, o.force);
  const fs::path dir = fs::path(o.out) / "heatmaps";
  fs::create_directories(dir);
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = *samples[i];
    write_heatmap(Heatmap{model.explain(s, cfg), model.kind, s.id}, dir / s.id);
  });
  write_run_json(o.out, "explain", o.seed,
                 {{"data", o.data},
                  {"model", o.model},
                  {"out", o.out},
                  {"split", o.split},
                  {"outliers_only", o.outliers_only},
                  {"lrp_gamma", cfg.gamma}});
  out << "explained " << samples.size() << " samples -> " << dir.string() << "\n";
  return kOk;
}

int cmd_evaluate(Options& o, std::ostream& out) {
  if (o.model_list.size() != o.data_list.size())
    throw ConfigError("evaluate needs one --data per --model (got " + std::to_string(o.model_list.size()) + " and " +
                      std::to_string(o.data_list.size()) + ")");
  LrpConfig cfg;
  cfg.gamma = o.lrp_gamma;
  cfg.validate();
  struct Job {
    LoadedModel model;
    Dataset data;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < o.model_list.size(); ++i) {
    Job job{load_model(o.model_list[i]), load_manifest(o.data_list[i])};
    check_shapes(job.model.input_shape, job.data.test);
    jobs.push_back(std::move(job));
  }
  prepare_output(o.out, o.force);

  EvaluationReport report;
  for (const auto& job : jobs) {
    if (report.detector.empty()) report.detector = job.model.kind;
    else if (report.detector != job.model.kind) report.detector = "mixed";
  }
  for (const auto& job : jobs) {
    const auto& test = job.data.test;
    std::vector<double> scores(test.size());
    std::vector<Tensor> heatmaps(test.size());
    parallel_for(test.size(), [&](std::size_t i) {
      scores[i] = job.model.score(test[i]);
      if (test[i].label == 1 && test[i].mask) heatmaps[i] = job.model.explain(test[i], cfg);
    });
    std::vector<EvalSample> samples;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < test.size(); ++i) {
      samples.push_back({&test[i].image, test[i].label, test[i].mask ? &*test[i].mask : nullptr, test[i].id});
      index[test[i].id] = i;
    }
    report.classes.push_back(evaluate_class(
        job.data.class_name, job.model.kind, samples, [&](const EvalSample& s) { return scores[index.at(s.id)]; },
        [&](const EvalSample& s) { return heatmaps[index.at(s.id)]; }));
  }
  const std::string table = report_table(report, o.top);
  write_text(fs::path(o.out) / "report.json", report_json(report));
  write_text(fs::path(o.out) / "report.txt", table);
  write_run_json(o.out, "evaluate", o.seed,
                 {{"data", o.data_list}, {"model", o.model_list}, {"out", o.out}, {"lrp_gamma", cfg.gamma},
                  {"top", o.top}});
  out << table;
  return kOk;
}

int cmd_bag(Options& o, std::ostream& out) {
  const Dataset ds = load_manifest(o.data);
  if (!o.members.empty() && o.members.size() != 3)
    throw ConfigError("--members takes three model directories: kde, autoencoder, deep");
  prepare_output(o.out, o.force);
  const fs::path root = o.out;
  json config{{"data", o.data}, {"out", o.out}};

  std::array<std::optional<Detector>, 3> loaded;
  static const std::array<std::string, 3> kinds{"kde", "autoencoder", "deep"};
  if (o.members.empty()) {
    // Members are written and read back first so the standardizers see the
    // stored (single precision) weights.
    json fitted;
    for (std::size_t m = 0; m < 3; ++m) {
      FitResult r = fit_member(kinds[m], o, ds);
      save_detector(r.detector, root / kinds[m]);
      fitted[kinds[m]] = std::move(r.details);
      loaded[m] = load_detector(root / kinds[m]);
    }
    config["fit"] = fit_config(o, "kde");
    config["fit"]["autoencoder"] = fit_config(o, "autoencoder");
    config["fit"]["deep"] = fit_config(o, "deep");
    config["result"] = std::move(fitted);
  } else {
    for (std::size_t m = 0; m < 3; ++m) {
      loaded[m] = load_detector(o.members[m]);
      if (detector_kind(*loaded[m]) != kinds[m])
        throw ConfigError("member " + std::to_string(m + 1) + " must be a " + kinds[m] + " model, got " +
                          detector_kind(*loaded[m]));
    }
    config["members"] = o.members;
  }
  // A KDE scored on its own templates sees a zero self-distance, so its
  // training scores collapse; held-out inliers are used when available.
  const bool use_val = !ds.val.empty();
  const auto& reference = use_val ? ds.val : ds.train;
  check_shapes(detector_input_shape(*loaded[0]), reference);
  config["standardization_split"] = use_val ? "val" : "train";
  BaggedModel bag = fit_bag(std::get<KdeModel>(std::move(*loaded[0])), std::get<AutoencoderModel>(std::move(*loaded[1])),
                            std::get<DeepOneClassModel>(std::move(*loaded[2])), Dataset::images(reference));
  bag.class_name = ds.class_name;
  save_detector(bag, root);
  json st = json::array();
  for (const auto& s : bag.standardizers) st.push_back({{"mean", s.mean}, {"std", s.stddev}});
  config["standardizers"] = st;
  write_run_json(root, "bag", o.seed, std::move(config));
  out << "bagged kde, autoencoder, deep on class " << ds.class_name << " -> " << root.string() << "\n";
  return kOk;
}

int cmd_diag_kde(Options& o, std::ostream& out) {
  const Dataset ds = load_manifest(o.data);
  const auto train = Dataset::images(ds.train);
  if (train.empty()) throw DataError("training split is empty");
  const auto& samples = select_split(ds, o.split);
  check_shapes(train.front().shape(), samples);
  const Tensor points = stack_rows(train);
  std::vector<double> grid = o.gamma_grid;
  if (grid.empty()) {
    const double dbar = mean_pairwise_sqdist(points);
    if (!(dbar > 0.0)) throw NumericalError("training points coincide; no distance scale");
    for (double f : {1.0, 0.3, 0.1, 0.03, 0.01}) grid.push_back(f / dbar);
  }
  prepare_output(o.out, o.force);
  std::string csv = "gamma,mean_abs_residual,max_abs_residual,mean_exact,mean_approx\n";
  std::ostringstream table;
  table << "gamma                  mean|res|              max|res|\n";
  for (double g : grid) {
    const KdeModel model(points, g, train.front().shape());
    std::vector<KdeApproxDiagnostics> diag(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { diag[i] = kde_mean_approx(model, samples[i].image); });
    double mean_abs = 0.0, max_abs = 0.0, mean_exact = 0.0, mean_approx = 0.0;
    for (const auto& d : diag) {
      mean_abs += std::abs(d.residual);
      max_abs = std::max(max_abs, std::abs(d.residual));
      mean_exact += d.exact;
      mean_approx += d.approx;
    }
    const double n = static_cast<double>(std::max<std::size_t>(diag.size(), 1));
    mean_abs /= n;
    mean_exact /= n;
    mean_approx /= n;
    csv += format_double(g) + "," + format_double(mean_abs) + "," + format_double(max_abs) + "," +
           format_double(mean_exact) + "," + format_double(mean_approx) + "\n";
    char line[128];
    std::snprintf(line, sizeof line, "%-22.10g %-22.10g %-22.10g\n", g, mean_abs, max_abs);
    table << line;
  }
  write_text(fs::path(o.out) / "diag_kde.csv", csv);
  write_run_json(o.out, "diag-kde", o.seed, {{"data", o.data}, {"out", o.out}, {"split", o.split}, {"gamma_grid", grid}});
  out << table.str();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Neuralized anomaly detectors, LRP explanations and Clever Hans scores", "hanslens"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HANSLENS_VERSION);

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Output directory")->required(); };
  auto add_force = [&](CLI::App* sub) { sub->add_flag("--force", o.force, "Overwrite a non-empty output directory"); };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Root seed"); };
  auto add_data = [&](CLI::App* sub) { sub->add_option("--data", o.data, "Dataset manifest.json")->required(); };
  auto add_fit_knobs = [&](CLI::App* sub) {
    sub->add_option("--gamma-grid", o.gamma_grid, "KDE gamma candidates")->delimiter(',');
    sub->add_option("--lambda-grid", o.lambda_grid, "Whitening ridge candidates")->delimiter(',');
    sub->add_option("--epochs", o.epochs, "Autoencoder epochs");
    sub->add_option("--bottleneck", o.bottleneck, "Autoencoder bottleneck width");
    sub->add_option("--learning-rate", o.learning_rate, "Adam step size");
    sub->add_option("--backbone", o.backbone, "Feature extractor stack (HLW1) for the deep model");
    sub->add_option("--backbone-widths", o.backbone_widths, "Random feature extractor widths")->delimiter(',');
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic class dataset");
  synth->add_option("--kind", o.kind, "stripe, dotted_line, brightness, spatter_noise, cartoon2d")->required();
  synth->add_option("--height", o.synth.height);
  synth->add_option("--width", o.synth.width);
  synth->add_option("--n-train", o.synth.n_train);
  synth->add_option("--n-val", o.synth.n_val);
  synth->add_option("--n-val-outliers", o.synth.n_val_outliers);
  synth->add_option("--n-test", o.synth.n_test, "Test samples per label");
  synth->add_option("--stripe-width", o.synth.stripe_width);
  synth->add_option("--dot-count", o.synth.dot_count);
  synth->add_option("--brightness", o.synth.brightness_offset, "Gray levels added to brightness outliers");
  synth->add_option("--noise-prob", o.synth.noise_probability);
  add_seed(synth);
  add_out(synth);
  add_force(synth);

  auto* fit = app.add_subcommand("fit", "Fit a detector on a dataset's training split");
  fit->add_option("--model", o.model, "kde, autoencoder, deep or oracle")->required();
  add_data(fit);
  add_seed(fit);
  add_fit_knobs(fit);
  add_out(fit);
  add_force(fit);

  auto* score_cmd = app.add_subcommand("score", "Write sample_id,score CSV");
  score_cmd->add_option("--model", o.model, "Model directory")->required();
  add_data(score_cmd);
  score_cmd->add_option("--split", o.split, "train, val, val_outliers or test");
  add_seed(score_cmd);
  add_out(score_cmd);
  add_force(score_cmd);

  auto* explain_cmd = app.add_subcommand("explain", "Write LRP heatmaps per sample");
  explain_cmd->add_option("--model", o.model, "Model directory")->required();
  add_data(explain_cmd);
  explain_cmd->add_option("--split", o.split, "train, val, val_outliers or test");
  explain_cmd->add_flag("--outliers-only", o.outliers_only);
  explain_cmd->add_option("--lrp-gamma", o.lrp_gamma, "Gamma-rule coefficient");
  add_seed(explain_cmd);
  add_out(explain_cmd);
  add_force(explain_cmd);

  auto* evaluate = app.add_subcommand("evaluate", "Detection, explanation and Clever Hans report");
  evaluate->add_option("--model", o.model_list, "Model directory (repeat, paired with --data)")->required();
  evaluate->add_option("--data", o.data_list, "Dataset manifest (repeat)")->required();
  evaluate->add_option("--lrp-gamma", o.lrp_gamma, "Gamma-rule coefficient");
  evaluate->add_option("--top", o.top, "Classes listed in the ranking");
  add_seed(evaluate);
  add_out(evaluate);
  add_force(evaluate);

  auto* bag = app.add_subcommand("bag", "Fit or assemble a bag of kde, autoencoder and deep");
  add_data(bag);
  bag->add_option("--members", o.members, "Fitted kde, autoencoder and deep directories");
  add_seed(bag);
  add_fit_knobs(bag);
  add_out(bag);
  add_force(bag);

  auto* diag = app.add_subcommand("diag-kde", "Distance-to-the-mean residual table over gamma");
  add_data(diag);
  diag->add_option("--gamma-grid", o.gamma_grid, "Absolute gamma values")->delimiter(',');
  diag->add_option("--split", o.split, "train, val, val_outliers or test");
  add_seed(diag);
  add_out(diag);
  add_force(diag);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*fit) return cmd_fit(o, out);
    if (*score_cmd) return cmd_score(o, out);
    if (*explain_cmd) return cmd_explain(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*bag) return cmd_bag(o, out);
    if (*diag) return cmd_diag_kde(o, out);
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kShape;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const OutputExists& e) {
    err << "output exists: " << e.what() << "\n";
    return kOutputExists;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hanslens::cli
