#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pda/autodiff.hpp"
#include "pda/data.hpp"
#include "pda/losses.hpp"
#include "pda/networks.hpp"
#include "pda/schedules.hpp"

namespace pda {

/// kSourceOnly trains on the classification loss alone (lambda = alpha =
/// beta = rho0 = 0, class weights frozen at all-ones). The discriminator
/// is still fit, but its gradient never reaches F.
enum class TrainMode { kSourceOnly, kEdann, kBaa, kFull };

const char* mode_name(TrainMode mode);
TrainMode parse_mode(const std::string& name);

/// Complement-term weight: 5 for up to 31 source classes, 1 for larger label spaces.
double default_beta(std::size_t classes);

struct TrainConfig {
  std::uint64_t iterations = 2000;  // N
  std::uint64_t interval = 200;     // N_u; N must be a multiple
  std::size_t batch = 36;           // B_s
  double rho0 = 0.25;
  double xi = 1.0;
  double alpha = 0.1;
  double beta = 5.0;
  TrainMode mode = TrainMode::kFull;
  std::uint64_t seed = 1;
  ScheduleConstants schedule;
  RhoRule rho_rule = RhoRule::kStaircase;
  double momentum = 0.9;
  double head_lr_multiplier = 10.0;
  std::vector<std::size_t> feature_widths = {64, 32};  // hidden and output widths of F
  std::size_t discriminator_hidden = 32;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

/// The per-mode switches actually used by a run.
struct ResolvedTerms {
  double alpha;
  double beta;
  double rho0;
  bool adversarial;  // lambda follows its schedule; otherwise 0
  bool update_class_weights;
  ObjectiveMode objective;
};
ResolvedTerms resolve_terms(const TrainConfig& cfg, std::size_t classes);

struct IntervalRecord {
  std::uint64_t iteration = 0;
  double target_entropy = 0.0;  // full-target conditional entropy
  std::optional<double> accuracy;
  LossBreakdown losses;  // mean over the interval's iterations
  std::vector<double> class_weights;
  double rho = 0.0;  // ratio in effect during the interval
  double lambda = 0.0;
  double lr = 0.0;
  std::size_t augment_count = 0;
};

struct RunRecord {
  std::vector<IntervalRecord> intervals;
  std::size_t best_interval = 0;  // argmin target_entropy, earliest on ties
};

struct TrainResult {
  ModelState final_model;
  ModelState selected_model;
  std::vector<ModelState> checkpoints;  // one per interval boundary
  RunRecord record;
};

/// Raised when a loss or parameter becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps full-target predictions to an accuracy. Lets the trainer report
/// accuracy without any access to target labels.
using AccuracyProbe = std::function<double(const Tensor2& target_preds)>;

/// Builds the probe for a dataset's sealed labels (empty when absent).
AccuracyProbe accuracy_probe(const PdaDataset& dataset);

TrainResult train(const TrainingView& data, const TrainConfig& cfg, const AccuracyProbe& probe = {});

/// Target accuracy of G(F(x)) against the sealed labels.
double evaluate(const ModelState& model, const PdaDataset& dataset);

// ---- objective graph -----------------------------------------------------------

/// One mini-batch worth of inputs to the unified objective.
struct ObjectiveBatch {
  Tensor2 source_x;
  std::vector<std::size_t> source_y;
  Tensor2 target_x;
  Tensor2 augment_x;  // may have zero rows
  std::vector<std::size_t> augment_y;
};

struct ObjectiveSettings {
  double alpha = 0.1;
  double beta = 1.0;
  double lambda = 1.0;  // gradient-reversal coefficient
  double rho = 0.25;
  double xi = 1.0;
  /// Entropy-aware sample weights w(x) to use instead of computing them
  /// from the current predictions (gradient checks hold them fixed).
  std::optional<Tensor2> source_w, target_w, augment_w;
  /// Complement-entropy confidence factors (1 - p_a)^xi, same purpose.
  std::optional<Tensor2> source_confidence;
};

/// Graph for one batch. `root` is cls + alpha ent + beta wce - adv with the
/// gradient-reversal node between F and D: F and G descend
/// cls + alpha ent + beta wce + lambda adv while D ascends adv.
/// Terms whose coefficient is zero are left out of the root; the
/// augmented term is present only when the batch has augmented rows.
struct ObjectiveGraph {
  Graph graph;
  NodeId cls, ent, wce, adv, root;
  NodeId source_w, target_w, augment_w;
  NodeId source_probs;
  bool has_wce = false;
};

ObjectiveGraph build_objective(const ModelState& model, const ObjectiveBatch& batch,
                               const ClassWeights& m, const ObjectiveSettings& s);

/// Forward values of an evaluated objective graph.
LossBreakdown read_breakdown(const ObjectiveGraph& og, const ObjectiveSettings& s, ObjectiveMode mode);

// ---- gradient check ---------------------------------------------------------------

struct GradCheckConfig {
  std::size_t input_width = 5;
  std::size_t feature_hidden = 8;
  std::size_t feature_width = 6;
  std::size_t discriminator_hidden = 8;
  std::size_t batch = 8;
  std::size_t augment = 2;
  double rho = 0.25;
  double lambda = 0.7;
  double alpha = 0.1;
  double beta = 1.0;
  double xi = 1.0;
  HiddenActivation activation = HiddenActivation::kTanh;
  double step = 1e-5;
  double tolerance = 1e-5;
};

struct GradCheckTerm {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst_parameter;
};

struct GradCheckReport {
  std::uint64_t seed = 0;
  std::size_t classes = 0;
  std::vector<GradCheckTerm> terms;
  double tolerance = 0.0;
  bool passed() const;
  const GradCheckTerm& worst() const;
};

/// Compares backward gradients with central finite differences for every
/// parameter of every loss term, on a random small model and batch.
/// Relative error per parameter tensor: |a - n|_2 / max(|a|_2 + |n|_2, 1e-7).
GradCheckReport grad_check(const GradCheckConfig& cfg, std::uint64_t seed, std::size_t classes);

/// Norm-based relative error between two gradient tensors.
double relative_error(const Tensor2& analytic, const Tensor2& numeric);

// ---- ablation ------------------------------------------------------------------------

struct AblationRow {
  TrainMode mode;
  std::vector<double> selected_accuracy;  // one per seed
  std::vector<double> final_accuracy;
  std::vector<std::vector<double>> class_weights;  // final m per seed
  double mean = 0.0;    // of selected_accuracy
  double stddev = 0.0;  // sample standard deviation
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;  // source-only, edann, baa, full
  const AblationRow& row(TrainMode mode) const;
};

/// Runs independent trainings in parallel; results are in config order and
/// identical to running them one by one.
std::vector<TrainResult> train_many(const TrainingView& data, const std::vector<TrainConfig>& configs,
                                    const AccuracyProbe& probe = {});

/// Trains every mode on every seed (runs execute in parallel) and reports
/// the selected-checkpoint target accuracy.
AblationTable ablation_suite(const PdaDataset& dataset, const TrainConfig& base,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<TrainMode>& modes = {TrainMode::kSourceOnly, TrainMode::kEdann,
                                                                    TrainMode::kBaa, TrainMode::kFull});

double mean_of(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

}  // namespace pda
