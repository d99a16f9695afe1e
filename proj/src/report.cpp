#include "pda/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pda {
namespace {

std::string number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const char* rho_rule_name(RhoRule r) { return r == RhoRule::kStaircase ? "staircase" : "literal"; }

}  // namespace

nlohmann::json to_json(const LossBreakdown& b) {
  return {{"cls_w", b.cls_w}, {"ent", b.ent}, {"wce", b.wce}, {"adv", b.adv},
          {"total_min_player", b.total_min_player}};
}

nlohmann::json to_json(const IntervalRecord& r) {
  nlohmann::json j{{"iteration", r.iteration},
                   {"target_entropy", r.target_entropy},
                   {"losses", to_json(r.losses)},
                   {"class_weights", r.class_weights},
                   {"rho", r.rho},
                   {"lambda", r.lambda},
                   {"lr", r.lr},
                   {"augment_count", r.augment_count}};
  j["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"iterations", c.iterations},
          {"interval", c.interval},
          {"batch", c.batch},
          {"rho0", c.rho0},
          {"xi", c.xi},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"mode", mode_name(c.mode)},
          {"seed", c.seed},
          {"lr0", c.schedule.lr0},
          {"lr_alpha", c.schedule.lr_alpha},
          {"lr_beta", c.schedule.lr_beta},
          {"lambda_gamma", c.schedule.lambda_gamma},
          {"rho_rule", rho_rule_name(c.rho_rule)},
          {"momentum", c.momentum},
          {"head_lr_multiplier", c.head_lr_multiplier},
          {"feature_widths", c.feature_widths},
          {"discriminator_hidden", c.discriminator_hidden}};
}

void apply_json(const nlohmann::json& j, TrainConfig& c) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("iterations", c.iterations);
  take("interval", c.interval);
  take("batch", c.batch);
  take("rho0", c.rho0);
  take("xi", c.xi);
  take("alpha", c.alpha);
  take("beta", c.beta);
  take("seed", c.seed);
  take("lr0", c.schedule.lr0);
  take("lr_alpha", c.schedule.lr_alpha);
  take("lr_beta", c.schedule.lr_beta);
  take("lambda_gamma", c.schedule.lambda_gamma);
  take("momentum", c.momentum);
  take("head_lr_multiplier", c.head_lr_multiplier);
  take("feature_widths", c.feature_widths);
  take("discriminator_hidden", c.discriminator_hidden);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("rho_rule")) {
    const auto r = j.at("rho_rule").get<std::string>();
    if (r == "staircase") c.rho_rule = RhoRule::kStaircase;
    else if (r == "literal") c.rho_rule = RhoRule::kLiteral;
    else throw std::invalid_argument("unknown rho_rule '" + r + "'");
  }
}

nlohmann::json to_json(const SyntheticConfig& c) {
  return {{"classes", c.classes}, {"shared", c.shared}, {"dim", c.dim},
          {"per_class", c.per_class}, {"shift", c.shift}, {"rotation", c.rotation},
          {"radius", c.radius}, {"layout", layout_name(c.layout)}, {"seed", c.seed}};
}

void apply_json(const nlohmann::json& j, SyntheticConfig& c) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("classes", c.classes);
  take("shared", c.shared);
  take("dim", c.dim);
  take("per_class", c.per_class);
  take("shift", c.shift);
  take("rotation", c.rotation);
  take("radius", c.radius);
  take("seed", c.seed);
  if (j.contains("layout")) c.layout = parse_layout(j.at("layout").get<std::string>());
}

nlohmann::json to_json(const GradCheckReport& r) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : r.terms) {
    terms.push_back({{"term", t.name}, {"max_rel_error", t.max_rel_error}, {"worst_parameter", t.worst_parameter}});
  }
  return {{"seed", r.seed}, {"classes", r.classes}, {"tolerance", r.tolerance},
          {"passed", r.passed()}, {"terms", terms}};
}

nlohmann::json to_json(const AblationTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"mode", mode_name(r.mode)},
                    {"selected_accuracy", r.selected_accuracy},
                    {"final_accuracy", r.final_accuracy},
                    {"mean", r.mean},
                    {"stddev", r.stddev}});
  }
  return {{"seeds", t.seeds}, {"rows", rows}};
}

std::string intervals_jsonl(const RunRecord& record) {
  std::string out;
  for (std::size_t i = 0; i < record.intervals.size(); ++i) {
    auto j = to_json(record.intervals[i]);
    j["index"] = i;
    j["selected"] = i == record.best_interval;
    out += j.dump() + "\n";
  }
  return out;
}

std::string class_weight_trace_csv(const RunRecord& record) {
  std::string out = "iteration";
  const std::size_t classes = record.intervals.empty() ? 0 : record.intervals.front().class_weights.size();
  for (std::size_t c = 0; c < classes; ++c) out += ",w_" + std::to_string(c);
  out += "\n";
  for (const auto& r : record.intervals) {
    out += std::to_string(r.iteration);
    for (double w : r.class_weights) out += "," + number(w);
    out += "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pda
