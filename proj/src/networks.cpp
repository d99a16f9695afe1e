#include "pda/networks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "pda/kernels.hpp"
#include "pda/rng.hpp"

namespace pda {
namespace {

Mlp init_mlp(const MlpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  Mlp mlp{spec, {}};
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    const double bound = xavier_bound(fan_in, fan_out);
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Tensor2(fan_in, fan_out), Tensor2(1, fan_out)};
    for (double& w : layer.weight.flat()) w = dist(rng);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

std::vector<DenseLayer> zeros_like(const Mlp& mlp) {
  std::vector<DenseLayer> out;
  for (const auto& l : mlp.layers) {
    out.push_back({Tensor2(l.weight.rows(), l.weight.cols()), Tensor2(1, l.bias.cols())});
  }
  return out;
}

// Evaluates one network without building a graph.
Tensor2 run_mlp(const Mlp& mlp, Tensor2 x) {
  const std::size_t n_layers = mlp.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Tensor2 z;
    kernels::gemm(kernels::Transpose::No, kernels::Transpose::No, x, mlp.layers[l].weight, z);
    const auto& b = mlp.layers[l].bias;
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += b(0, c);
    if (l + 1 < n_layers) {
      for (double& v : z.flat()) {
        v = mlp.spec.hidden == HiddenActivation::kRelu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
      }
    }
    x = std::move(z);
  }
  switch (mlp.spec.output) {
    case OutputActivation::kNone: break;
    case OutputActivation::kSoftmax: {
      Tensor2 y;
      kernels::softmax_rows(x, y);
      x = std::move(y);
      break;
    }
    case OutputActivation::kSigmoid:
      for (double& v : x.flat()) {
        const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        v = std::clamp(s, kProbEps, 1.0 - kProbEps);
      }
      break;
  }
  return x;
}

void check_input(const ModelState& model, const Tensor2& x) {
  if (x.cols() != model.input_width()) {
    throw std::invalid_argument("input has " + std::to_string(x.cols()) +
                                " columns, model expects " + std::to_string(model.input_width()));
  }
}

void update_network(Mlp& mlp, std::vector<DenseLayer>& velocity, const GradientMap& grads,
                    const std::string& prefix, double lr, double momentum) {
  auto apply = [&](Tensor2& param, Tensor2& vel, const std::string& name) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("sgd_step: missing gradient for " + name);
    if (!it->second.same_shape(param)) {
      throw std::invalid_argument("sgd_step: gradient shape mismatch for " + name);
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      vel[i] = momentum * vel[i] + it->second[i];
      param[i] -= lr * vel[i];
    }
  };
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    apply(mlp.layers[l].weight, velocity[l].weight, base + ".weight");
    apply(mlp.layers[l].bias, velocity[l].bias, base + ".bias");
  }
}

nlohmann::json spec_to_json(const MlpSpec& s) {
  return {{"widths", s.widths},
          {"hidden", s.hidden == HiddenActivation::kRelu ? "relu" : "tanh"},
          {"output", s.output == OutputActivation::kNone      ? "none"
                     : s.output == OutputActivation::kSoftmax ? "softmax"
                                                              : "sigmoid"}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
  MlpSpec s;
  s.widths = j.at("widths").get<std::vector<std::size_t>>();
  const auto hidden = j.at("hidden").get<std::string>();
  const auto output = j.at("output").get<std::string>();
  if (hidden == "relu") s.hidden = HiddenActivation::kRelu;
  else if (hidden == "tanh") s.hidden = HiddenActivation::kTanh;
  else throw std::runtime_error("checkpoint: unknown hidden activation " + hidden);
  if (output == "none") s.output = OutputActivation::kNone;
  else if (output == "softmax") s.output = OutputActivation::kSoftmax;
  else if (output == "sigmoid") s.output = OutputActivation::kSigmoid;
  else throw std::runtime_error("checkpoint: unknown output activation " + output);
  s.validate();
  return s;
}

nlohmann::json layers_to_json(const std::vector<DenseLayer>& layers) {
  auto arr = nlohmann::json::array();
  for (const auto& l : layers) arr.push_back({{"weight", l.weight.data()}, {"bias", l.bias.data()}});
  return arr;
}

std::vector<DenseLayer> layers_from_json(const nlohmann::json& arr, const MlpSpec& spec) {
  if (arr.size() + 1 != spec.widths.size()) throw std::runtime_error("checkpoint: layer count mismatch");
  std::vector<DenseLayer> out;
  for (std::size_t l = 0; l < arr.size(); ++l) {
    const std::size_t in = spec.widths[l], outw = spec.widths[l + 1];
    out.push_back({Tensor2(in, outw, arr[l].at("weight").get<std::vector<double>>()),
                   Tensor2(1, outw, arr[l].at("bias").get<std::vector<double>>())});
  }
  return out;
}

}  // namespace

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("MlpSpec: needs at least one layer");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("MlpSpec: widths must be positive");
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::size_t ModelState::parameter_count() const {
  return feature.parameter_count() + classifier.parameter_count() + discriminator.parameter_count();
}

MlpSpec default_feature_spec(std::size_t input_width) {
  return {{input_width, 64, 32}, HiddenActivation::kRelu, OutputActivation::kNone};
}

MlpSpec default_classifier_spec(std::size_t num_classes) {
  return {{32, num_classes}, HiddenActivation::kRelu, OutputActivation::kSoftmax};
}

MlpSpec default_discriminator_spec() {
  return {{32, 32, 1}, HiddenActivation::kRelu, OutputActivation::kSigmoid};
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ModelState init_model(const MlpSpec& f, const MlpSpec& g, const MlpSpec& d, std::uint64_t seed) {
  f.validate();
  g.validate();
  d.validate();
  if (g.input_width() != f.output_width() || d.input_width() != f.output_width()) {
    throw std::invalid_argument("init_model: G and D input widths must equal F output width");
  }
  if (d.output_width() != 1) throw std::invalid_argument("init_model: D must have one output");
  if (g.output != OutputActivation::kSoftmax || d.output != OutputActivation::kSigmoid) {
    throw std::invalid_argument("init_model: G needs softmax output and D sigmoid output");
  }
  auto rf = make_rng(seed, Stream::kInitFeature);
  auto rg = make_rng(seed, Stream::kInitClassifier);
  auto rd = make_rng(seed, Stream::kInitDiscriminator);
  ModelState m;
  m.feature = init_mlp(f, rf);
  m.classifier = init_mlp(g, rg);
  m.discriminator = init_mlp(d, rd);
  m.feature_velocity = zeros_like(m.feature);
  m.classifier_velocity = zeros_like(m.classifier);
  m.discriminator_velocity = zeros_like(m.discriminator);
  return m;
}

MlpNodes bind_parameters(Graph& graph, const Mlp& mlp, const std::string& prefix) {
  MlpNodes nodes{&mlp.spec, {}, {}};
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    nodes.weights.push_back(graph.parameter(base + ".weight", mlp.layers[l].weight));
    nodes.biases.push_back(graph.parameter(base + ".bias", mlp.layers[l].bias));
  }
  return nodes;
}

NodeId apply_mlp(Graph& graph, const MlpNodes& net, NodeId x) {
  const std::size_t n_layers = net.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    x = graph.add(graph.matmul(x, net.weights[l]), net.biases[l]);
    if (l + 1 < n_layers) {
      x = net.spec->hidden == HiddenActivation::kRelu ? graph.relu(x) : graph.tanh(x);
    }
  }
  switch (net.spec->output) {
    case OutputActivation::kNone: return x;
    case OutputActivation::kSoftmax: return graph.softmax_rows(x);
    case OutputActivation::kSigmoid: return graph.clamp(graph.sigmoid(x), kProbEps, 1.0 - kProbEps);
  }
  return x;
}

Tensor2 extract_features(const ModelState& model, const Tensor2& x) {
  check_input(model, x);
  return run_mlp(model.feature, x);
}

Tensor2 classify(const ModelState& model, const Tensor2& x) {
  return run_mlp(model.classifier, extract_features(model, x));
}

Tensor2 discriminate(const ModelState& model, const Tensor2& x) {
  return run_mlp(model.discriminator, extract_features(model, x));
}

ModelState sgd_step(const ModelState& model, const GradientMap& grads, const SgdOptions& opts) {
  ModelState next = model;
  const double head_lr = opts.lr * opts.head_lr_multiplier;
  update_network(next.feature, next.feature_velocity, grads, "F", opts.lr, opts.momentum);
  update_network(next.classifier, next.classifier_velocity, grads, "G", head_lr, opts.momentum);
  update_network(next.discriminator, next.discriminator_velocity, grads, "D", head_lr, opts.momentum);
  ++next.step_count;
  return next;
}

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["step_count"] = model.step_count;
  auto net = [](const Mlp& m, const std::vector<DenseLayer>& v) {
    return nlohmann::json{{"spec", spec_to_json(m.spec)},
                          {"layers", layers_to_json(m.layers)},
                          {"velocity", layers_to_json(v)}};
  };
  doc["F"] = net(model.feature, model.feature_velocity);
  doc["G"] = net(model.classifier, model.classifier_velocity);
  doc["D"] = net(model.discriminator, model.discriminator_velocity);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const auto doc = nlohmann::json::parse(in);
  if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format_version");
  }
  ModelState m;
  auto net = [](const nlohmann::json& j, Mlp& mlp, std::vector<DenseLayer>& vel) {
    mlp.spec = spec_from_json(j.at("spec"));
    mlp.layers = layers_from_json(j.at("layers"), mlp.spec);
    vel = layers_from_json(j.at("velocity"), mlp.spec);
  };
  net(doc.at("F"), m.feature, m.feature_velocity);
  net(doc.at("G"), m.classifier, m.classifier_velocity);
  net(doc.at("D"), m.discriminator, m.discriminator_velocity);
  m.step_count = doc.at("step_count").get<std::uint64_t>();
  return m;
}

}  // namespace pda
