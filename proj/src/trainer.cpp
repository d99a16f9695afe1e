#include "pda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>

#include "pda/rng.hpp"

namespace pda {
namespace {

Tensor2 stack_rows(std::initializer_list<const Tensor2*> parts, std::size_t cols) {
  std::size_t rows = 0;
  for (const Tensor2* p : parts) {
    if (p->rows() > 0 && p->cols() != cols) throw std::invalid_argument("batch feature widths differ");
    rows += p->rows();
  }
  Tensor2 out(rows, cols);
  auto it = out.flat().begin();
  for (const Tensor2* p : parts) it = std::copy(p->flat().begin(), p->flat().end(), it);
  return out;
}

ModelState make_model(const TrainConfig& cfg, std::size_t input_width, std::size_t classes) {
  MlpSpec f{{input_width}, HiddenActivation::kRelu, OutputActivation::kNone};
  for (std::size_t w : cfg.feature_widths) f.widths.push_back(w);
  const std::size_t feat = f.widths.back();
  const MlpSpec g{{feat, classes}, HiddenActivation::kRelu, OutputActivation::kSoftmax};
  const MlpSpec d{{feat, cfg.discriminator_hidden, 1}, HiddenActivation::kRelu, OutputActivation::kSigmoid};
  return init_model(f, g, d, cfg.seed);
}

void accumulate(LossBreakdown& into, const LossBreakdown& x) {
  into.cls_w += x.cls_w;
  into.ent += x.ent;
  into.wce += x.wce;
  into.adv += x.adv;
  into.total_min_player += x.total_min_player;
}

LossBreakdown scaled(LossBreakdown x, double f) {
  x.cls_w *= f;
  x.ent *= f;
  x.wce *= f;
  x.adv *= f;
  x.total_min_player *= f;
  return x;
}

bool finite(const LossBreakdown& b) {
  return std::isfinite(b.cls_w) && std::isfinite(b.ent) && std::isfinite(b.wce) &&
         std::isfinite(b.adv) && std::isfinite(b.total_min_player);
}

bool finite(const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) return false;
  }
  return true;
}

std::string describe(const LossBreakdown& b) {
  std::ostringstream ss;
  ss << "cls_w=" << b.cls_w << " ent=" << b.ent << " wce=" << b.wce << " adv=" << b.adv
     << " total=" << b.total_min_player;
  return ss.str();
}

}  // namespace

const char* mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSourceOnly: return "source-only";
    case TrainMode::kEdann: return "edann";
    case TrainMode::kBaa: return "baa";
    case TrainMode::kFull: return "full";
  }
  return "unknown";
}

TrainMode parse_mode(const std::string& name) {
  if (name == "source-only") return TrainMode::kSourceOnly;
  if (name == "edann") return TrainMode::kEdann;
  if (name == "baa") return TrainMode::kBaa;
  if (name == "full") return TrainMode::kFull;
  throw std::invalid_argument("unknown mode '" + name + "' (source-only | edann | baa | full)");
}

double default_beta(std::size_t classes) { return classes <= 31 ? 5.0 : 1.0; }

void TrainConfig::validate() const {
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (interval == 0) throw std::invalid_argument("interval must be positive");
  if (iterations % interval != 0) throw std::invalid_argument("iterations must be a multiple of interval");
  if (batch == 0) throw std::invalid_argument("batch must be positive");
  if (!(rho0 >= 0.0 && rho0 <= 1.0)) throw std::invalid_argument("rho0 must lie in [0, 1]");
  if (!(xi >= 0.0)) throw std::invalid_argument("xi must be nonnegative");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("alpha and beta must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (feature_widths.empty()) throw std::invalid_argument("feature extractor needs at least one layer");
  if (discriminator_hidden == 0) throw std::invalid_argument("discriminator width must be positive");
}

ResolvedTerms resolve_terms(const TrainConfig& cfg, std::size_t classes) {
  ResolvedTerms t{cfg.alpha, cfg.beta, cfg.rho0, true, true, ObjectiveMode::kFull};
  switch (cfg.mode) {
    case TrainMode::kSourceOnly:
      t = {0.0, 0.0, 0.0, false, false, ObjectiveMode::kEdann};
      break;
    case TrainMode::kEdann:
      t.beta = 0.0;
      t.rho0 = 0.0;
      t.objective = ObjectiveMode::kEdann;
      break;
    case TrainMode::kBaa:
      t.beta = 0.0;
      t.objective = ObjectiveMode::kBaa;
      break;
    case TrainMode::kFull:
      break;
  }
  if (classes < 3) t.beta = 0.0;  // complement entropy normalizer log(C-1) vanishes
  return t;
}

// ---- objective --------------------------------------------------------------------

ObjectiveGraph build_objective(const ModelState& model, const ObjectiveBatch& batch,
                               const ClassWeights& m, const ObjectiveSettings& s) {
  const std::size_t ns = batch.source_x.rows(), nt = batch.target_x.rows(), na = batch.augment_x.rows();
  if (ns == 0 || nt == 0) throw std::invalid_argument("objective needs source and target rows");
  if (batch.source_y.size() != ns || batch.augment_y.size() != na) {
    throw std::invalid_argument("objective: label count differs from batch rows");
  }
  if (m.weights.size() != model.num_classes()) throw std::invalid_argument("objective: class weight length");
  const std::size_t d = model.input_width();

  ObjectiveGraph og;
  Graph& g = og.graph;
  const NodeId x = g.constant(stack_rows({&batch.source_x, &batch.target_x, &batch.augment_x}, d), "batch");
  const MlpNodes f = bind_parameters(g, model.feature, "F");
  const MlpNodes cg = bind_parameters(g, model.classifier, "G");
  const MlpNodes dg = bind_parameters(g, model.discriminator, "D");
  const NodeId feat = apply_mlp(g, f, x);
  const NodeId probs = apply_mlp(g, cg, feat);
  const NodeId dom = apply_mlp(g, dg, g.grad_reversal(feat, s.lambda));

  const NodeId ps = g.slice_rows(probs, 0, ns);
  const NodeId pt = g.slice_rows(probs, ns, ns + nt);
  const NodeId ds = g.slice_rows(dom, 0, ns);
  const NodeId dt = g.slice_rows(dom, ns, ns + nt);

  og.cls = graph_loss::weighted_cls(g, ps, batch.source_y, m.weights);
  og.ent = graph_loss::conditional_entropy(g, pt);
  og.has_wce = model.num_classes() >= 3;
  og.source_probs = ps;
  if (og.has_wce) {
    const Tensor2* fixed = s.source_confidence ? &*s.source_confidence : nullptr;
    og.wce = graph_loss::complement_entropy(g, ps, batch.source_y, m.weights, s.xi, fixed);
  }

  auto weight_node = [&](const std::optional<Tensor2>& fixed, NodeId p) {
    return fixed ? g.constant(*fixed, "fixed w") : graph_loss::sample_weight(g, p);
  };
  og.source_w = weight_node(s.source_w, ps);
  og.target_w = weight_node(s.target_w, pt);
  const NodeId ms = g.constant(gather_class_weights(batch.source_y, m.weights), "m[y_s]");
  const graph_loss::AdversarialSide src{ds, g.mul(og.source_w, ms)};
  const graph_loss::AdversarialSide tgt{dt, og.target_w};
  if (na > 0) {
    const NodeId pa = g.slice_rows(probs, ns + nt, ns + nt + na);
    const NodeId da = g.slice_rows(dom, ns + nt, ns + nt + na);
    og.augment_w = weight_node(s.augment_w, pa);
    const NodeId ma = g.constant(gather_class_weights(batch.augment_y, m.weights), "m[y_a]");
    const graph_loss::AdversarialSide aug{da, g.mul(og.augment_w, ma)};
    og.adv = graph_loss::balanced_adversarial(g, src, tgt, &aug, s.rho);
  } else {
    og.adv = graph_loss::balanced_adversarial(g, src, tgt, nullptr, s.rho);
  }

  NodeId root = og.cls;
  if (s.alpha > 0.0) root = g.add(root, g.scale(og.ent, s.alpha));
  if (s.beta > 0.0 && og.has_wce) root = g.add(root, g.scale(og.wce, s.beta));
  og.root = g.add(root, g.scale(og.adv, -1.0));
  g.set_root(og.root);
  return og;
}

LossBreakdown read_breakdown(const ObjectiveGraph& og, const ObjectiveSettings& s, ObjectiveMode mode) {
  LossBreakdown b;
  b.cls_w = og.graph.value(og.cls).item();
  b.ent = og.graph.value(og.ent).item();
  b.wce = og.has_wce ? og.graph.value(og.wce).item() : 0.0;
  b.adv = og.graph.value(og.adv).item();
  b.total_min_player = total_objective(b, s.alpha, s.beta, std::max(0.0, s.lambda), mode);
  return b;
}

// ---- training -----------------------------------------------------------------------

AccuracyProbe accuracy_probe(const PdaDataset& dataset) {
  if (!dataset.target_labels) return {};
  const SealedLabels* labels = &*dataset.target_labels;
  return [labels](const Tensor2& preds) { return labels->accuracy(preds); };
}

TrainResult train(const TrainingView& data, const TrainConfig& cfg, const AccuracyProbe& probe) {
  cfg.validate();
  if (data.source_x.rows() == 0 || data.target_x.rows() == 0) throw std::invalid_argument("train: empty domain");
  if (data.source_x.cols() != data.target_x.cols()) throw std::invalid_argument("train: dimension mismatch");
  const std::size_t classes = data.classes;
  const ResolvedTerms terms = resolve_terms(cfg, classes);

  TrainResult result;
  ModelState model = make_model(cfg, data.dim(), classes);
  ClassWeights m = ClassWeights::uniform(classes);
  BatchSampler sampler(data.source_x.rows(), data.target_x.rows(), cfg.batch, cfg.seed);
  double rho = terms.rho0;
  LossBreakdown interval_sum;
  const double n_total = static_cast<double>(cfg.iterations);

  for (std::uint64_t it = 0; it < cfg.iterations; ++it) {
    const double progress = static_cast<double>(it) / n_total;
    const double lr = lr_schedule(progress, cfg.schedule);
    const double lambda = terms.adversarial ? lambda_schedule(progress, cfg.schedule.lambda_gamma) : 0.0;

    const BatchIndices idx = sampler.draw(it, rho);
    ObjectiveBatch batch;
    batch.source_x = data.source_x.gather_rows(idx.source);
    batch.target_x = data.target_x.gather_rows(idx.target);
    batch.augment_x = data.source_x.gather_rows(idx.augment);
    batch.augment_x = batch.augment_x.rows() == 0 ? Tensor2(0, data.dim()) : batch.augment_x;
    for (std::size_t i : idx.source) batch.source_y.push_back(data.source_y[i]);
    for (std::size_t i : idx.augment) batch.augment_y.push_back(data.source_y[i]);

    ObjectiveSettings settings;
    settings.alpha = terms.alpha;
    settings.beta = terms.beta;
    settings.lambda = lambda;
    settings.rho = rho;
    settings.xi = cfg.xi;
    ObjectiveGraph og = build_objective(model, batch, m, settings);
    og.graph.forward();
    const LossBreakdown losses = read_breakdown(og, settings, terms.objective);
    if (!finite(losses)) {
      throw TrainingDiverged("non-finite loss at iteration " + std::to_string(it + 1) + ": " +
                             describe(losses) + " (lr=" + std::to_string(lr) +
                             ", lambda=" + std::to_string(lambda) + ", rho=" + std::to_string(rho) + ")");
    }
    const GradientMap grads = og.graph.backward();
    if (!finite(grads)) {
      throw TrainingDiverged("non-finite gradient at iteration " + std::to_string(it + 1) + ": " +
                             describe(losses));
    }
    model = sgd_step(model, grads, {lr, cfg.momentum, cfg.head_lr_multiplier});
    accumulate(interval_sum, losses);

    const std::uint64_t done = it + 1;
    if (done % cfg.interval == 0) {
      const Tensor2 target_preds = classify(model, data.target_x);
      if (terms.update_class_weights) m = estimate_class_weights(target_preds, done);
      IntervalRecord rec;
      rec.iteration = done;
      rec.target_entropy = conditional_entropy_loss(target_preds);
      if (probe) rec.accuracy = probe(target_preds);
      rec.losses = scaled(interval_sum, 1.0 / static_cast<double>(cfg.interval));
      rec.class_weights = m.weights;
      rec.rho = rho;
      rec.lambda = lambda;
      rec.lr = lr;
      rec.augment_count = augmentation_count(rho, cfg.batch);
      if (!std::isfinite(rec.target_entropy)) {
        throw TrainingDiverged("non-finite target entropy at iteration " + std::to_string(done));
      }
      result.record.intervals.push_back(std::move(rec));
      result.checkpoints.push_back(model);
      interval_sum = {};
      if (terms.rho0 > 0.0) rho = rho_schedule(done, cfg.iterations, terms.rho0, cfg.interval, cfg.rho_rule);
    }
  }

  const auto& iv = result.record.intervals;
  std::size_t best = 0;
  for (std::size_t i = 1; i < iv.size(); ++i) {
    if (iv[i].target_entropy < iv[best].target_entropy) best = i;
  }
  result.record.best_interval = best;
  result.selected_model = result.checkpoints.at(best);
  result.final_model = std::move(model);
  return result;
}

double evaluate(const ModelState& model, const PdaDataset& dataset) {
  if (!dataset.target_labels) throw std::invalid_argument("evaluate: dataset has no sealed target labels");
  return dataset.target_labels->accuracy(classify(model, dataset.view.target_x));
}

// ---- gradient check -------------------------------------------------------------------

double relative_error(const Tensor2& analytic, const Tensor2& numeric) {
  if (!analytic.same_shape(numeric)) throw std::invalid_argument("relative_error: shape mismatch");
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-7);
}

bool GradCheckReport::passed() const {
  return std::all_of(terms.begin(), terms.end(),
                     [&](const GradCheckTerm& t) { return t.max_rel_error < tolerance; });
}

const GradCheckTerm& GradCheckReport::worst() const {
  return *std::max_element(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    return a.max_rel_error < b.max_rel_error;
  });
}

namespace {

// Addresses every parameter tensor of a model by its graph name.
std::vector<std::pair<std::string, Tensor2*>> parameter_slots(ModelState& model) {
  std::vector<std::pair<std::string, Tensor2*>> out;
  auto add = [&](Mlp& mlp, const std::string& prefix) {
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      const std::string base = prefix + "." + std::to_string(l);
      out.emplace_back(base + ".weight", &mlp.layers[l].weight);
      out.emplace_back(base + ".bias", &mlp.layers[l].bias);
    }
  };
  add(model.feature, "F");
  add(model.classifier, "G");
  add(model.discriminator, "D");
  return out;
}

struct ProbeValues {
  double cls, ent, wce, adv_balanced, adv_entropy;
};

}  // namespace

GradCheckReport grad_check(const GradCheckConfig& cfg, std::uint64_t seed, std::size_t classes) {
  if (classes < 3) throw std::invalid_argument("grad_check: needs C >= 3");
  auto rng = make_rng(seed, Stream::kGradCheck);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label(0, classes - 1);
  std::uniform_real_distribution<double> unit(0.1, 1.0);

  const MlpSpec fs{{cfg.input_width, cfg.feature_hidden, cfg.feature_width}, cfg.activation, OutputActivation::kNone};
  const MlpSpec gs{{cfg.feature_width, classes}, cfg.activation, OutputActivation::kSoftmax};
  const MlpSpec dsp{{cfg.feature_width, cfg.discriminator_hidden, 1}, cfg.activation, OutputActivation::kSigmoid};
  ModelState model = init_model(fs, gs, dsp, seed);
  for (auto& [name, t] : parameter_slots(model)) {
    if (name.ends_with(".bias")) {
      for (double& v : t->flat()) v = 0.1 * normal(rng);
    }
  }

  auto random_rows = [&](std::size_t n) {
    Tensor2 t(n, cfg.input_width);
    for (double& v : t.flat()) v = normal(rng);
    return t;
  };
  ObjectiveBatch batch;
  batch.source_x = random_rows(cfg.batch);
  batch.target_x = random_rows(cfg.batch);
  batch.augment_x = random_rows(cfg.augment);
  for (std::size_t i = 0; i < cfg.batch; ++i) batch.source_y.push_back(label(rng));
  for (std::size_t i = 0; i < cfg.augment; ++i) batch.augment_y.push_back(label(rng));
  ObjectiveBatch no_aug = batch;
  no_aug.augment_x = Tensor2(0, cfg.input_width);
  no_aug.augment_y.clear();

  ClassWeights m{std::vector<double>(classes), 0};
  for (double& v : m.weights) v = unit(rng);
  const double peak = *std::max_element(m.weights.begin(), m.weights.end());
  for (double& v : m.weights) v /= peak;

  ObjectiveSettings s;
  s.alpha = cfg.alpha;
  s.beta = cfg.beta;
  s.rho = cfg.rho;
  s.xi = cfg.xi;
  s.lambda = cfg.lambda;
  {
    ObjectiveGraph base = build_objective(model, batch, m, s);
    base.graph.forward();
    s.source_w = base.graph.value(base.source_w);
    s.target_w = base.graph.value(base.target_w);
    s.augment_w = base.graph.value(base.augment_w);
    const Tensor2& p = base.graph.value(base.source_probs);
    Tensor2 conf(p.rows(), 1);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      conf(r, 0) = std::pow(std::clamp(1.0 - p(r, batch.source_y[r]), kProbEps, 1.0), cfg.xi);
    }
    s.source_confidence = std::move(conf);
  }
  ObjectiveSettings identity_grl = s;
  identity_grl.lambda = -1.0;  // reversal coefficient -1: plain backward through D's input

  // Analytic gradients.
  ObjectiveGraph plain = build_objective(model, batch, m, identity_grl);
  plain.graph.forward();
  auto grads_of = [](ObjectiveGraph& og, NodeId root) {
    og.graph.set_root(root);
    return og.graph.backward();
  };
  const GradientMap g_cls = grads_of(plain, plain.cls);
  const GradientMap g_ent = grads_of(plain, plain.ent);
  const GradientMap g_wce = grads_of(plain, plain.wce);
  const GradientMap g_adv = grads_of(plain, plain.adv);
  ObjectiveGraph plain_e = build_objective(model, no_aug, m, identity_grl);
  plain_e.graph.forward();
  const GradientMap g_adv_e = grads_of(plain_e, plain_e.adv);
  ObjectiveGraph reversed = build_objective(model, batch, m, s);
  reversed.graph.forward();
  const GradientMap g_obj = reversed.graph.backward();

  auto probe = [&](const ModelState& mm) {
    ObjectiveGraph a = build_objective(mm, batch, m, identity_grl);
    a.graph.forward();
    ObjectiveGraph b = build_objective(mm, no_aug, m, identity_grl);
    b.graph.forward();
    return ProbeValues{a.graph.value(a.cls).item(), a.graph.value(a.ent).item(), a.graph.value(a.wce).item(),
                       a.graph.value(a.adv).item(), b.graph.value(b.adv).item()};
  };

  const std::vector<std::string> names = {"weighted_cls",           "conditional_entropy",
                                          "complement_entropy",     "balanced_adversarial",
                                          "entropy_aware_adversarial", "unified_objective"};
  const std::vector<const GradientMap*> analytic = {&g_cls, &g_ent, &g_wce, &g_adv, &g_adv_e, &g_obj};
  GradCheckReport report{seed, classes, {}, cfg.tolerance};
  for (const auto& n : names) report.terms.push_back({n, 0.0, {}});

  ModelState work = model;
  for (auto& [pname, tensor] : parameter_slots(work)) {
    const bool is_d = pname.starts_with("D.");
    std::vector<Tensor2> numeric(names.size(), Tensor2(tensor->rows(), tensor->cols()));
    for (std::size_t i = 0; i < tensor->size(); ++i) {
      const double saved = (*tensor)[i];
      (*tensor)[i] = saved + cfg.step;
      const ProbeValues up = probe(work);
      (*tensor)[i] = saved - cfg.step;
      const ProbeValues dn = probe(work);
      (*tensor)[i] = saved;
      const double h2 = 2.0 * cfg.step;
      numeric[0][i] = (up.cls - dn.cls) / h2;
      numeric[1][i] = (up.ent - dn.ent) / h2;
      numeric[2][i] = (up.wce - dn.wce) / h2;
      numeric[3][i] = (up.adv_balanced - dn.adv_balanced) / h2;
      numeric[4][i] = (up.adv_entropy - dn.adv_entropy) / h2;
      // F and G descend the minimax value; D descends the negated adversarial value.
      const auto value = [&](const ProbeValues& v) {
        return is_d ? -v.adv_balanced
                    : v.cls + cfg.alpha * v.ent + cfg.beta * v.wce + cfg.lambda * v.adv_balanced;
      };
      numeric[5][i] = (value(up) - value(dn)) / h2;
    }
    for (std::size_t t = 0; t < names.size(); ++t) {
      const double err = relative_error(analytic[t]->at(pname), numeric[t]);
      if (err > report.terms[t].max_rel_error || report.terms[t].worst_parameter.empty()) {
        report.terms[t].max_rel_error = std::max(err, report.terms[t].max_rel_error);
        report.terms[t].worst_parameter = pname;
      }
    }
  }
  return report;
}

// ---- ablation ---------------------------------------------------------------------------

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

const AblationRow& AblationTable::row(TrainMode mode) const {
  for (const auto& r : rows) {
    if (r.mode == mode) return r;
  }
  throw std::out_of_range(std::string("ablation table has no row for ") + mode_name(mode));
}

std::vector<TrainResult> train_many(const TrainingView& data, const std::vector<TrainConfig>& configs,
                                    const AccuracyProbe& probe) {
  std::vector<TrainResult> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const auto runs = static_cast<long long>(configs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long r = 0; r < runs; ++r) {
    const auto i = static_cast<std::size_t>(r);
    try {
      results[i] = train(data, configs[i], probe);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

AblationTable ablation_suite(const PdaDataset& dataset, const TrainConfig& base,
                             const std::vector<std::uint64_t>& seeds, const std::vector<TrainMode>& modes) {
  if (!dataset.target_labels) throw std::invalid_argument("ablation_suite: dataset has no sealed labels");
  std::vector<TrainConfig> configs;
  for (TrainMode mode : modes) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed;
      configs.push_back(cfg);
    }
  }
  const std::vector<TrainResult> results = train_many(dataset.view, configs, accuracy_probe(dataset));

  AblationTable table;
  table.seeds = seeds;
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    AblationRow row{modes[mi], {}, {}, {}, 0.0, 0.0};
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const TrainResult& res = results[mi * seeds.size() + si];
      row.selected_accuracy.push_back(evaluate(res.selected_model, dataset));
      row.final_accuracy.push_back(evaluate(res.final_model, dataset));
      row.class_weights.push_back(res.record.intervals.back().class_weights);
    }
    row.mean = mean_of(row.selected_accuracy);
    row.stddev = sample_stddev(row.selected_accuracy);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace pda
