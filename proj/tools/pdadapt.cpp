// pdadapt: dataset generation, training, evaluation, sweeps, ablations and
// gradient checks for partial domain adaptation over feature vectors.
//
// Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
// 3 training divergence.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pda/data.hpp"
#include "pda/kernels.hpp"
#include "pda/networks.hpp"
#include "pda/report.hpp"
#include "pda/schedules.hpp"
#include "pda/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

#ifdef PDA_VERSION
constexpr const char* kVersion = PDA_VERSION;
#else
constexpr const char* kVersion = "dev";
#endif

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Flags override the JSON config, which overrides built-in defaults. Each
// flag parses into its own holder and is copied onto the config only when
// given on the command line.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& field, const std::string& help) {
    auto holder = std::make_shared<T>(field);
    CLI::Option* opt = app->add_option(name, *holder, help)->capture_default_str();
    apply_.push_back([opt, holder, &field] {
      if (opt->count() > 0) field = *holder;
    });
    return opt;
  }
  void apply() const {
    for (const auto& f : apply_) f();
  }

 private:
  std::vector<std::function<void()>> apply_;
};

json read_json_file(const fs::path& path) {
  try {
    return json::parse(pda::read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json file_entry(const fs::path& path) {
  return {{"path", path.string()}, {"fnv1a64", pda::file_fingerprint(path)}};
}

json base_manifest(const std::string& command) {
  return {{"tool", "pdadapt"}, {"version", kVersion}, {"command", command}, {"threads", pda::kernels::max_threads()}};
}

// ---- dataset inputs ------------------------------------------------------------

struct DataArgs {
  std::string dir;
  std::string source;
  std::string target;
  std::string labels;
  bool no_standardize = false;
};

void add_data_options(CLI::App* app, DataArgs& a) {
  app->add_option("--data", a.dir, "Directory holding source.csv and target.csv");
  app->add_option("--source", a.source, "Labeled source CSV (overrides --data)");
  app->add_option("--target", a.target, "Unlabeled target CSV (overrides --data)");
  app->add_option("--labels", a.labels, "Target evaluation labels (index,label per line)");
  app->add_flag("--no-standardize", a.no_standardize, "Skip z-scoring with source statistics");
}

struct LoadedData {
  pda::PdaDataset dataset;
  json fingerprints;
  std::optional<pda::SyntheticConfig> generator;  // from the data directory's manifest
};

bool has_file_inputs(const DataArgs& a) { return !a.dir.empty() || !a.source.empty() || !a.target.empty(); }

LoadedData load_data(const DataArgs& a) {
  fs::path src = a.source, tgt = a.target;
  if (src.empty() && !a.dir.empty()) src = fs::path(a.dir) / "source.csv";
  if (tgt.empty() && !a.dir.empty()) tgt = fs::path(a.dir) / "target.csv";
  if (src.empty() || tgt.empty()) throw UsageError("need --data or both --source and --target");
  for (const auto& p : {src, tgt}) {
    if (!fs::exists(p)) throw UsageError("missing file " + p.string());
  }
  const pda::DomainFile source = pda::load_feature_csv(src);
  const pda::DomainFile target = pda::load_feature_csv(tgt);
  LoadedData out;
  out.fingerprints = {{"source", file_entry(src)}, {"target", file_entry(tgt)}};
  std::optional<pda::SealedLabels> labels;
  if (!a.labels.empty()) {
    if (!fs::exists(a.labels)) throw UsageError("missing file " + a.labels);
    labels = pda::SealedLabels::load(a.labels, target.samples.size(), target.classes);
    out.fingerprints["labels"] = file_entry(a.labels);
  }
  out.dataset = pda::assemble_dataset(source, target, std::move(labels));
  if (!a.dir.empty() && fs::exists(fs::path(a.dir) / "manifest.json")) {
    const json m = read_json_file(fs::path(a.dir) / "manifest.json");
    if (m.contains("generator")) {
      pda::SyntheticConfig g;
      pda::apply_json(m.at("generator"), g);
      out.generator = g;
    }
  }
  if (out.dataset.target_labels) out.dataset.shared_classes = out.dataset.target_labels->present_classes();
  if (!a.no_standardize) out.dataset.view = pda::standardize(out.dataset.view);
  return out;
}

// ---- generator options ------------------------------------------------------------

struct GenArgs {
  pda::SyntheticConfig cfg;
  std::string layout = "simplex";
  std::string config;
  Overrides overrides;
};

void add_generator_options(CLI::App* app, GenArgs& g, const std::string& seed_flag) {
  g.overrides.add(app, "--classes", g.cfg.classes, "Source class count C");
  g.overrides.add(app, "--shared", g.cfg.shared, "Classes present in the target (the first `shared`)");
  g.overrides.add(app, "--dim", g.cfg.dim, "Feature dimension");
  g.overrides.add(app, "--n", g.cfg.per_class, "Samples per class in each domain");
  g.overrides.add(app, "--shift", g.cfg.shift, "Target translation along the first axis");
  g.overrides.add(app, "--rotation", g.cfg.rotation, "Target rotation in the first two dimensions (radians)");
  g.overrides.add(app, "--radius", g.cfg.radius, "Distance of each class mean from the origin");
  g.overrides.add(app, "--layout", g.layout, "Class mean layout: simplex or circle")
      ->check(CLI::IsMember({"simplex", "circle"}));
  g.overrides.add(app, seed_flag, g.cfg.seed, "Generator seed");
}

pda::SyntheticConfig resolve_generator(GenArgs& g, const std::optional<pda::SyntheticConfig>& base = {}) {
  pda::SyntheticConfig cfg = base.value_or(pda::SyntheticConfig{});
  if (!g.config.empty()) {
    const json j = read_json_file(g.config);
    pda::apply_json(j.contains("generator") ? j.at("generator") : j, cfg);
  }
  g.cfg = cfg;
  g.layout = pda::layout_name(cfg.layout);
  g.overrides.apply();
  g.cfg.layout = pda::parse_layout(g.layout);
  return g.cfg;
}

// ---- training options ---------------------------------------------------------------

struct TrainArgs {
  pda::TrainConfig cfg;
  std::string mode = "full";
  std::string rho_rule = "staircase";
  std::string config;
  Overrides overrides;
};

void add_train_options(CLI::App* app, TrainArgs& t) {
  t.overrides.add(app, "--mode", t.mode, "source-only, edann, baa or full")
      ->check(CLI::IsMember({"source-only", "edann", "baa", "full"}));
  t.overrides.add(app, "--iters", t.cfg.iterations, "Total iterations N");
  t.overrides.add(app, "--interval", t.cfg.interval, "Iterations between class-weight updates");
  t.overrides.add(app, "--batch", t.cfg.batch, "Source and target batch size");
  t.overrides.add(app, "--rho0", t.cfg.rho0, "Initial augmentation ratio");
  t.overrides.add(app, "--xi", t.cfg.xi, "Confidence exponent of the complement entropy");
  t.overrides.add(app, "--alpha", t.cfg.alpha, "Target entropy coefficient");
  t.overrides.add(app, "--beta", t.cfg.beta,
                  "Complement entropy coefficient (default 5 for C <= 31, else 1)");
  t.overrides.add(app, "--seed", t.cfg.seed, "Training seed");
  t.overrides.add(app, "--lr0", t.cfg.schedule.lr0, "Base learning rate");
  t.overrides.add(app, "--momentum", t.cfg.momentum, "SGD momentum");
  t.overrides.add(app, "--rho-rule", t.rho_rule, "staircase or literal")
      ->check(CLI::IsMember({"staircase", "literal"}));
  app->add_option("--config", t.config, "JSON config; flags take precedence");
}

pda::TrainConfig resolve_train(TrainArgs& t, std::size_t classes) {
  pda::TrainConfig cfg;
  cfg.beta = pda::default_beta(classes);
  if (!t.config.empty()) {
    const json j = read_json_file(t.config);
    pda::apply_json(j.contains("train") ? j.at("train") : j, cfg);
  }
  t.cfg = cfg;
  t.mode = pda::mode_name(cfg.mode);
  t.rho_rule = cfg.rho_rule == pda::RhoRule::kStaircase ? "staircase" : "literal";
  t.overrides.apply();
  t.cfg.mode = pda::parse_mode(t.mode);
  t.cfg.rho_rule = t.rho_rule == "staircase" ? pda::RhoRule::kStaircase : pda::RhoRule::kLiteral;
  t.cfg.validate();
  return t.cfg;
}

// ---- run artifacts ---------------------------------------------------------------

json run_summary(const pda::TrainResult& res, const pda::TrainConfig& cfg, const pda::PdaDataset& ds,
                 bool standardized) {
  const auto& best = res.record.intervals.at(res.record.best_interval);
  const auto& last = res.record.intervals.back();
  json s{{"config", pda::to_json(cfg)},
         {"standardized", standardized},
         {"intervals", res.record.intervals.size()},
         {"best_interval", res.record.best_interval},
         {"selected_iteration", best.iteration},
         {"selected_target_entropy", best.target_entropy},
         {"final_target_entropy", last.target_entropy},
         {"selected_class_weights", best.class_weights},
         {"final_class_weights", last.class_weights}};
  if (ds.target_labels) {
    s["selected_accuracy"] = pda::evaluate(res.selected_model, ds);
    s["final_accuracy"] = pda::evaluate(res.final_model, ds);
    const auto& shared = ds.shared_classes;
    if (!shared.empty() && shared.size() < ds.view.classes) {
      s["shared_weight_ratio"] = pda::shared_weight_ratio(last.class_weights, shared);
    }
  }
  return s;
}

json write_run(const fs::path& dir, const pda::TrainResult& res, const json& summary, bool checkpoints) {
  fs::create_directories(dir);
  json files = json::object();
  auto put = [&](const std::string& key, const fs::path& p) { files[key] = file_entry(p); };
  pda::write_text(dir / "intervals.jsonl", pda::intervals_jsonl(res.record));
  put("intervals", dir / "intervals.jsonl");
  pda::write_text(dir / "m-trace.csv", pda::class_weight_trace_csv(res.record));
  put("m_trace", dir / "m-trace.csv");
  pda::write_text(dir / "summary.json", summary.dump(2) + "\n");
  put("summary", dir / "summary.json");
  if (checkpoints) {
    fs::create_directories(dir / "checkpoints");
    json list = json::array();
    for (std::size_t i = 0; i < res.checkpoints.size(); ++i) {
      char name[40];
      std::snprintf(name, sizeof name, "interval-%03zu.json", i + 1);
      const fs::path p = dir / "checkpoints" / name;
      pda::save_checkpoint(res.checkpoints[i], p);
      list.push_back(file_entry(p));
    }
    files["checkpoints"] = list;
    pda::save_checkpoint(res.final_model, dir / "final.json");
    put("final", dir / "final.json");
    pda::save_checkpoint(res.selected_model, dir / "selected.json");
    put("selected", dir / "selected.json");
  }
  return files;
}

std::vector<std::uint64_t> default_seeds() { return {1, 2, 3}; }

// ---- commands ------------------------------------------------------------------------

int cmd_gen(GenArgs& g, const std::string& out) {
  const auto t0 = Clock::now();
  const pda::SyntheticConfig cfg = resolve_generator(g);
  const pda::PdaDataset ds = pda::generate_synthetic_pda(cfg);
  const double gen_s = seconds_since(t0);

  const fs::path dir(out);
  fs::create_directories(dir);
  const auto t1 = Clock::now();
  pda::write_feature_csv(dir / "source.csv", pda::source_domain_file(ds));
  pda::write_feature_csv(dir / "target.csv", pda::target_domain_file(ds));
  ds.target_labels->save(dir / "eval-labels.csv");

  json manifest = base_manifest("gen");
  manifest["generator"] = pda::to_json(cfg);
  manifest["shared_classes"] = ds.shared_classes;
  manifest["files"] = {{"source", file_entry(dir / "source.csv")},
                       {"target", file_entry(dir / "target.csv")},
                       {"eval_labels", file_entry(dir / "eval-labels.csv")}};
  manifest["timings_s"] = {{"generate", gen_s}, {"write", seconds_since(t1)}};
  pda::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << ds.view.source_x.rows() << " source and " << ds.view.target_x.rows()
            << " target samples to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const DataArgs& data, TrainArgs& t, const std::string& out) {
  const auto t0 = Clock::now();
  LoadedData in = load_data(data);
  const pda::TrainConfig cfg = resolve_train(t, in.dataset.view.classes);
  const double load_s = seconds_since(t0);

  const auto t1 = Clock::now();
  const pda::TrainResult res = pda::train(in.dataset.view, cfg, pda::accuracy_probe(in.dataset));
  const double train_s = seconds_since(t1);

  const fs::path dir(out);
  const json summary = run_summary(res, cfg, in.dataset, !data.no_standardize);
  json manifest = base_manifest("train");
  manifest["config"] = pda::to_json(cfg);
  manifest["inputs"] = in.fingerprints;
  manifest["files"] = write_run(dir, res, summary, true);
  manifest["timings_s"] = {{"load", load_s}, {"train", train_s}};
  pda::write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "mode " << pda::mode_name(cfg.mode) << ", selected interval " << res.record.best_interval + 1
            << " of " << res.record.intervals.size() << " (target entropy "
            << format_double(summary["selected_target_entropy"].get<double>()) << ")\n";
  if (summary.contains("selected_accuracy")) {
    std::cout << "target accuracy: selected " << format_double(summary["selected_accuracy"].get<double>())
              << ", final " << format_double(summary["final_accuracy"].get<double>()) << "\n";
  }
  return kExitOk;
}

int cmd_eval(DataArgs data, const std::string& run, const std::string& checkpoint, const std::string& which,
             const std::string& out) {
  if (data.labels.empty()) throw UsageError("eval needs --labels");
  fs::path ckpt = checkpoint;
  if (!run.empty()) {
    const fs::path summary_path = fs::path(run) / "summary.json";
    if (!fs::exists(summary_path)) throw UsageError("missing file " + summary_path.string());
    const json summary = read_json_file(summary_path);
    if (summary.value("standardized", true) == false) data.no_standardize = true;
    if (ckpt.empty()) ckpt = fs::path(run) / (which + ".json");
  }
  if (ckpt.empty()) throw UsageError("need --run or --checkpoint");
  if (!fs::exists(ckpt)) throw UsageError("missing file " + ckpt.string());

  const LoadedData in = load_data(data);
  const pda::ModelState model = pda::load_checkpoint(ckpt);
  if (model.input_width() != in.dataset.view.dim() || model.num_classes() != in.dataset.view.classes) {
    throw UsageError("checkpoint shape does not match the dataset");
  }
  const pda::Tensor2 preds = pda::classify(model, in.dataset.view.target_x);
  const pda::SealedLabels& labels = *in.dataset.target_labels;
  const double acc = labels.accuracy(preds);
  const auto confusion = labels.confusion(preds);
  const pda::ClassWeights m = pda::estimate_class_weights(preds);
  const auto shared = labels.present_classes();

  const fs::path dir = out.empty() ? (run.empty() ? fs::path(".") : fs::path(run)) : fs::path(out);
  fs::create_directories(dir);
  const std::size_t classes = in.dataset.view.classes;
  std::string csv = "true\\pred";
  for (std::size_t c = 0; c < classes; ++c) csv += "," + std::to_string(c);
  csv += "\n";
  for (std::size_t r = 0; r < classes; ++r) {
    csv += std::to_string(r);
    for (std::size_t c = 0; c < classes; ++c) csv += "," + std::to_string(confusion[r][c]);
    csv += "\n";
  }
  pda::write_text(dir / "confusion.csv", csv);

  json report{{"checkpoint", file_entry(ckpt)}, {"accuracy", acc}, {"class_weights", m.weights},
              {"shared_classes", shared}};
  std::cout << "target accuracy " << format_double(acc) << "\n";
  if (!shared.empty() && shared.size() < classes) {
    const double ratio = pda::shared_weight_ratio(m.weights, shared);
    report["shared_weight_ratio"] = ratio;
    std::cout << "class weights: mean over shared / mean over source-only = " << format_double(ratio) << "\n";
  }
  pda::write_text(dir / "eval.json", report.dump(2) + "\n");
  return kExitOk;
}

struct SweepPoint {
  double value;
  pda::PdaDataset dataset;
  pda::TrainConfig base;
};

int cmd_sweep(const DataArgs& data, GenArgs& gen, TrainArgs& t, const std::string& axis,
              const std::vector<double>& values, std::vector<std::uint64_t> seeds, std::vector<std::string> modes,
              const std::string& out) {
  if (axis != "xi" && axis != "beta" && axis != "shared-classes") {
    throw UsageError("unknown axis '" + axis + "' (expected xi, beta or shared-classes)");
  }
  if (values.empty()) throw UsageError("sweep needs --values");
  if (seeds.empty()) seeds = default_seeds();
  if (modes.empty()) modes = axis == "shared-classes" ? std::vector<std::string>{"edann", "baa", "full"}
                                                      : std::vector<std::string>{"full"};
  std::vector<pda::TrainMode> parsed_modes;
  for (const auto& m : modes) parsed_modes.push_back(pda::parse_mode(m));

  const auto t0 = Clock::now();
  std::optional<LoadedData> loaded;
  pda::SyntheticConfig gcfg;
  json inputs;
  if (has_file_inputs(data)) {
    loaded = load_data(data);
    if (!loaded->dataset.target_labels) throw UsageError("sweep needs --labels to score runs");
    inputs = loaded->fingerprints;
    gcfg = resolve_generator(gen, loaded->generator);
    if (axis == "shared-classes" && !loaded->generator) {
      throw UsageError("shared-classes axis needs generator settings (data directory without manifest.json)");
    }
  } else {
    gcfg = resolve_generator(gen);
    inputs = {{"generator", pda::to_json(gcfg)}};
  }

  auto make_dataset = [&](std::size_t shared) {
    pda::SyntheticConfig c = gcfg;
    c.shared = shared;
    pda::PdaDataset ds = pda::generate_synthetic_pda(c);
    if (!data.no_standardize) ds.view = pda::standardize(ds.view);
    return ds;
  };
  std::vector<SweepPoint> points;
  for (double v : values) {
    SweepPoint p{v, {}, {}};
    if (axis == "shared-classes") {
      if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("shared-classes values must be positive integers");
      p.dataset = make_dataset(static_cast<std::size_t>(v));
    } else {
      p.dataset = loaded ? loaded->dataset : make_dataset(gcfg.shared);
    }
    p.base = resolve_train(t, p.dataset.view.classes);
    if (axis == "xi") p.base.xi = v;
    if (axis == "beta") p.base.beta = v;
    p.base.validate();
    points.push_back(std::move(p));
  }

  const fs::path dir(out);
  fs::create_directories(dir);
  std::string csv = "axis,value,mode,seed,selected_accuracy,final_accuracy,shared_weight_ratio\n";
  json table = json::array();
  for (const auto& p : points) {
    std::vector<pda::TrainConfig> configs;
    for (auto mode : parsed_modes) {
      for (auto seed : seeds) {
        pda::TrainConfig c = p.base;
        c.mode = mode;
        c.seed = seed;
        configs.push_back(c);
      }
    }
    const auto results = pda::train_many(p.dataset.view, configs, pda::accuracy_probe(p.dataset));
    for (std::size_t mi = 0; mi < parsed_modes.size(); ++mi) {
      std::vector<double> accs;
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        const auto& res = results[mi * seeds.size() + si];
        const auto& cfg = configs[mi * seeds.size() + si];
        const json summary = run_summary(res, cfg, p.dataset, !data.no_standardize);
        const std::string run_name = axis + "=" + format_double(p.value) + "/" + modes[mi] + "-seed" +
                                     std::to_string(seeds[si]);
        write_run(dir / "runs" / run_name, res, summary, false);
        const double sel = summary["selected_accuracy"].get<double>();
        accs.push_back(sel);
        const std::string ratio =
            summary.contains("shared_weight_ratio") ? format_double(summary["shared_weight_ratio"].get<double>()) : "";
        csv += axis + "," + format_double(p.value) + "," + modes[mi] + "," + std::to_string(seeds[si]) + "," +
               format_double(sel) + "," + format_double(summary["final_accuracy"].get<double>()) + "," + ratio + "\n";
      }
      const double mean = pda::mean_of(accs), sd = pda::sample_stddev(accs);
      csv += axis + "," + format_double(p.value) + "," + modes[mi] + ",mean," + format_double(mean) + ",,\n";
      csv += axis + "," + format_double(p.value) + "," + modes[mi] + ",std," + format_double(sd) + ",,\n";
      table.push_back({{"value", p.value}, {"mode", modes[mi]}, {"selected_accuracy", accs}, {"mean", mean},
                       {"stddev", sd}});
      std::cout << axis << "=" << format_double(p.value) << " " << modes[mi] << ": mean " << format_double(mean)
                << " sd " << format_double(sd) << "\n";
    }
  }
  pda::write_text(dir / "sweep.csv", csv);
  pda::write_text(dir / "sweep.json", json{{"axis", axis}, {"seeds", seeds}, {"rows", table}}.dump(2) + "\n");

  json manifest = base_manifest("sweep");
  manifest["axis"] = axis;
  manifest["values"] = values;
  manifest["config"] = pda::to_json(points.front().base);
  manifest["inputs"] = inputs;
  manifest["files"] = {{"csv", file_entry(dir / "sweep.csv")}, {"json", file_entry(dir / "sweep.json")}};
  manifest["timings_s"] = {{"total", seconds_since(t0)}};
  pda::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

int cmd_ablate(const DataArgs& data, GenArgs& gen, TrainArgs& t, std::vector<std::uint64_t> seeds,
               const std::string& out) {
  if (seeds.empty()) seeds = default_seeds();
  const auto t0 = Clock::now();
  pda::PdaDataset ds;
  json inputs;
  if (has_file_inputs(data)) {
    LoadedData in = load_data(data);
    if (!in.dataset.target_labels) throw UsageError("ablate needs --labels to score runs");
    ds = std::move(in.dataset);
    inputs = in.fingerprints;
  } else {
    const pda::SyntheticConfig g = resolve_generator(gen);
    ds = pda::generate_synthetic_pda(g);
    if (!data.no_standardize) ds.view = pda::standardize(ds.view);
    inputs = {{"generator", pda::to_json(g)}};
  }
  const pda::TrainConfig base = resolve_train(t, ds.view.classes);
  const pda::AblationTable table = pda::ablation_suite(ds, base, seeds);

  json j = pda::to_json(table);
  std::string csv = "mode,seed,selected_accuracy,final_accuracy\n";
  std::cout << "mode         mean      sd\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      csv += std::string(pda::mode_name(row.mode)) + "," + std::to_string(seeds[i]) + "," +
             format_double(row.selected_accuracy[i]) + "," + format_double(row.final_accuracy[i]) + "\n";
    }
    std::printf("%-12s %.4f  %.4f\n", pda::mode_name(row.mode), row.mean, row.stddev);
  }
  const auto& shared = ds.shared_classes;
  if (!shared.empty() && shared.size() < ds.view.classes) {
    json ratios = json::array();
    for (const auto& m : table.row(pda::TrainMode::kFull).class_weights) {
      ratios.push_back(pda::shared_weight_ratio(m, shared));
    }
    j["full_shared_weight_ratio"] = ratios;
    std::cout << "full mode class-weight ratio (shared / source-only) per seed:";
    for (const auto& r : ratios) std::cout << " " << format_double(r.get<double>());
    std::cout << "\n";
  }
  const fs::path dir(out);
  fs::create_directories(dir);
  pda::write_text(dir / "ablation.json", j.dump(2) + "\n");
  pda::write_text(dir / "ablation.csv", csv);
  json manifest = base_manifest("ablate");
  manifest["config"] = pda::to_json(base);
  manifest["inputs"] = inputs;
  manifest["files"] = {{"json", file_entry(dir / "ablation.json")}, {"csv", file_entry(dir / "ablation.csv")}};
  manifest["timings_s"] = {{"total", seconds_since(t0)}};
  pda::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seeds, double tolerance, const std::vector<std::size_t>& classes,
                  const std::string& out) {
  pda::GradCheckConfig cfg;
  cfg.tolerance = tolerance;
  std::vector<pda::GradCheckTerm> worst;
  json reports = json::array();
  bool passed = true;
  for (std::size_t c : classes) {
    for (std::uint64_t s = 1; s <= seeds; ++s) {
      const pda::GradCheckReport r = pda::grad_check(cfg, s, c);
      passed = passed && r.passed();
      reports.push_back(pda::to_json(r));
      if (worst.empty()) worst = r.terms;
      for (std::size_t i = 0; i < r.terms.size(); ++i) {
        if (r.terms[i].max_rel_error > worst[i].max_rel_error) worst[i] = r.terms[i];
      }
    }
  }
  std::printf("%-28s %-12s %s\n", "term", "max_rel_err", "worst_parameter");
  for (const auto& w : worst) {
    std::printf("%-28s %-12.3e %s\n", w.name.c_str(), w.max_rel_error, w.worst_parameter.c_str());
  }
  if (!out.empty()) {
    pda::write_text(out, json{{"tolerance", tolerance}, {"passed", passed}, {"reports", reports}}.dump(2) + "\n");
  }
  if (passed) {
    std::printf("all terms below %.1e\n", tolerance);
    return kExitOk;
  }
  const auto it = std::max_element(worst.begin(), worst.end(), [](const auto& a, const auto& b) {
    return a.max_rel_error < b.max_rel_error;
  });
  std::fprintf(stderr, "gradient check failed: worst term %s (%.3e > %.1e)\n", it->name.c_str(), it->max_rel_error,
               tolerance);
  return kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial domain adaptation over feature vectors"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = runtime default)");

  GenArgs gen_g, sweep_g, ablate_g;
  DataArgs train_d, eval_d, sweep_d, ablate_d;
  TrainArgs train_t, sweep_t, ablate_t;
  std::string gen_out, train_out, eval_out, sweep_out, ablate_out;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic partial-adaptation dataset");
  add_generator_options(gen, gen_g, "--seed");
  gen->add_option("--config", gen_g.config, "JSON generator config; flags take precedence");
  gen->add_option("--out", gen_out, "Output directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train one model");
  add_data_options(train, train_d);
  add_train_options(train, train_t);
  train->add_option("--out", train_out, "Run directory")->required();

  std::string eval_run, eval_ckpt, eval_which = "selected";
  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint against target labels");
  add_data_options(eval, eval_d);
  eval->add_option("--run", eval_run, "Run directory written by train");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file (overrides --run)");
  eval->add_option("--which", eval_which, "Checkpoint of the run to score")
      ->check(CLI::IsMember({"selected", "final"}))
      ->capture_default_str();
  eval->add_option("--out", eval_out, "Directory for confusion.csv and eval.json (default: the run)");

  std::string axis;
  std::vector<double> values;
  std::vector<std::uint64_t> sweep_seeds, ablate_seeds;
  std::vector<std::string> sweep_modes;
  CLI::App* sweep = app.add_subcommand("sweep", "Sensitivity sweep over xi, beta or shared classes");
  add_data_options(sweep, sweep_d);
  add_generator_options(sweep, sweep_g, "--gen-seed");
  add_train_options(sweep, sweep_t);
  sweep->add_option("--axis", axis, "xi, beta or shared-classes")->required();
  sweep->add_option("--values", values, "Comma-separated axis values")->delimiter(',')->required();
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated training seeds (default 1,2,3)")->delimiter(',');
  sweep->add_option("--modes", sweep_modes, "Comma-separated modes")->delimiter(',');
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "Source-only / edann / baa / full over several seeds");
  add_data_options(ablate, ablate_d);
  add_generator_options(ablate, ablate_g, "--gen-seed");
  add_train_options(ablate, ablate_t);
  ablate->add_option("--seeds", ablate_seeds, "Comma-separated training seeds (default 1,2,3)")->delimiter(',');
  ablate->add_option("--out", ablate_out, "Output directory")->required();

  std::uint64_t gc_seeds = 20;
  double gc_tol = 1e-5;
  std::vector<std::size_t> gc_classes = {3, 6};
  std::string gc_out;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  gradcheck->add_option("--seeds", gc_seeds, "Seeds per class count")->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tol, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--classes", gc_classes, "Class counts to check")->delimiter(',');
  gradcheck->add_option("--out", gc_out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  sweep_g.config = sweep_t.config;
  ablate_g.config = ablate_t.config;
  try {
    if (threads > 0) pda::kernels::set_threads(threads);
    if (gen->parsed()) return cmd_gen(gen_g, gen_out);
    if (train->parsed()) return cmd_train(train_d, train_t, train_out);
    if (eval->parsed()) return cmd_eval(eval_d, eval_run, eval_ckpt, eval_which, eval_out);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_d, sweep_g, sweep_t, axis, values, sweep_seeds, sweep_modes, sweep_out);
    }
    if (ablate->parsed()) return cmd_ablate(ablate_d, ablate_g, ablate_t, ablate_seeds, ablate_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seeds, gc_tol, gc_classes, gc_out);
  } catch (const pda::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
