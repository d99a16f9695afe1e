#include "pda/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "pda/kernels.hpp"

namespace pda {
namespace {

using kernels::Transpose;

bool broadcastable(const Tensor2& full, const Tensor2& other) {
  return (other.rows() == full.rows() || other.rows() == 1) &&
         (other.cols() == full.cols() || other.cols() == 1);
}

double bcast_at(const Tensor2& t, std::size_t r, std::size_t c) {
  return t(t.rows() == 1 ? 0 : r, t.cols() == 1 ? 0 : c);
}

double& bcast_at(Tensor2& t, std::size_t r, std::size_t c) {
  return t(t.rows() == 1 ? 0 : r, t.cols() == 1 ? 0 : c);
}

template <typename F>
Tensor2 map(const Tensor2& x, F f) {
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmaxRows: return "softmax-rows";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kMul: return "elementwise-mul";
    case OpKind::kRowSum: return "row-sum";
    case OpKind::kMean: return "mean";
    case OpKind::kConcatRows: return "concat-rows";
    case OpKind::kSliceRows: return "slice-rows";
    case OpKind::kGradReversal: return "grad-reversal";
    case OpKind::kClamp: return "clamp";
    case OpKind::kPow: return "pow";
    case OpKind::kReciprocal: return "reciprocal";
    case OpKind::kStep: return "step";
    case OpKind::kStopGradient: return "stop-gradient";
  }
  return "unknown";
}

Graph::Node Graph::make_node(OpKind kind, std::vector<std::size_t> parents) {
  Node n;
  n.kind = kind;
  n.parents = std::move(parents);
  return n;
}

NodeId Graph::push(Node node) {
  for (std::size_t p : node.parents) check_parent(NodeId{p});
  nodes_.push_back(std::move(node));
  evaluated_ = false;
  return NodeId{nodes_.size() - 1};
}

void Graph::check_parent(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw GraphError("graph: reference to node #" + std::to_string(id.index) +
                     " which does not exist yet");
  }
}

std::string Graph::describe(std::size_t index) const {
  const Node& n = nodes_[index];
  std::string s = "node #" + std::to_string(index) + " (" + op_name(n.kind);
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

NodeId Graph::input(std::string name, std::size_t rows, std::size_t cols) {
  Node n = make_node(OpKind::kInput, {});
  n.name = std::move(name);
  n.r0 = rows;
  n.r1 = cols;
  return push(std::move(n));
}

NodeId Graph::constant(Tensor2 value, std::string label) {
  Node n = make_node(OpKind::kConstant, {});
  n.name = std::move(label);
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::parameter(std::string name, Tensor2 value) {
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::kParameter && n.name == name) {
      throw GraphError("graph: duplicate parameter '" + name + "'");
    }
  }
  Node n = make_node(OpKind::kParameter, {});
  n.name = std::move(name);
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push(make_node(OpKind::kMatMul, {a.index, b.index})); }
NodeId Graph::add(NodeId a, NodeId b) { return push(make_node(OpKind::kAdd, {a.index, b.index})); }
NodeId Graph::mul(NodeId a, NodeId b) { return push(make_node(OpKind::kMul, {a.index, b.index})); }
NodeId Graph::relu(NodeId x) { return push(make_node(OpKind::kRelu, {x.index})); }
NodeId Graph::tanh(NodeId x) { return push(make_node(OpKind::kTanh, {x.index})); }
NodeId Graph::sigmoid(NodeId x) { return push(make_node(OpKind::kSigmoid, {x.index})); }
NodeId Graph::softmax_rows(NodeId x) { return push(make_node(OpKind::kSoftmaxRows, {x.index})); }
NodeId Graph::log(NodeId x) { return push(make_node(OpKind::kLog, {x.index})); }
NodeId Graph::exp(NodeId x) { return push(make_node(OpKind::kExp, {x.index})); }
NodeId Graph::row_sum(NodeId x) { return push(make_node(OpKind::kRowSum, {x.index})); }
NodeId Graph::mean(NodeId x) { return push(make_node(OpKind::kMean, {x.index})); }
NodeId Graph::reciprocal(NodeId x) { return push(make_node(OpKind::kReciprocal, {x.index})); }
NodeId Graph::stop_gradient(NodeId x) { return push(make_node(OpKind::kStopGradient, {x.index})); }

NodeId Graph::scale(NodeId x, double factor, double offset) {
  Node n = make_node(OpKind::kScale, {x.index});
  n.a = factor;
  n.b = offset;
  return push(std::move(n));
}

NodeId Graph::concat_rows(std::vector<NodeId> parts) {
  if (parts.empty()) throw GraphError("graph: concat-rows needs at least one part");
  Node n = make_node(OpKind::kConcatRows, {});
  for (NodeId p : parts) n.parents.push_back(p.index);
  return push(std::move(n));
}

NodeId Graph::slice_rows(NodeId x, std::size_t begin, std::size_t end) {
  if (begin > end) throw GraphError("graph: slice-rows with begin > end");
  Node n = make_node(OpKind::kSliceRows, {x.index});
  n.r0 = begin;
  n.r1 = end;
  return push(std::move(n));
}

NodeId Graph::grad_reversal(NodeId x, double lambda) {
  Node n = make_node(OpKind::kGradReversal, {x.index});
  n.a = lambda;
  return push(std::move(n));
}

NodeId Graph::clamp(NodeId x, double lo, double hi) {
  if (!(lo <= hi)) throw GraphError("graph: clamp with lo > hi");
  Node n = make_node(OpKind::kClamp, {x.index});
  n.a = lo;
  n.b = hi;
  return push(std::move(n));
}

NodeId Graph::pow(NodeId x, double exponent) {
  Node n = make_node(OpKind::kPow, {x.index});
  n.a = exponent;
  return push(std::move(n));
}

NodeId Graph::step(NodeId x, double threshold) {
  Node n = make_node(OpKind::kStep, {x.index});
  n.a = threshold;
  return push(std::move(n));
}

void Graph::set_root(NodeId id) {
  check_parent(id);
  root_ = id.index;
  root_set_ = true;
}

NodeId Graph::root() const {
  if (nodes_.empty()) throw GraphError("graph: empty graph has no root");
  return NodeId{root_set_ ? root_ : nodes_.size() - 1};
}

const Tensor2& Graph::value(NodeId id) const {
  check_parent(id);
  if (!evaluated_) throw GraphError("graph: value of " + describe(id.index) + " before forward");
  return nodes_[id.index].value;
}

const Tensor2& Graph::adjoint(NodeId id) const {
  check_parent(id);
  return nodes_[id.index].adjoint;
}

const Tensor2& Graph::forward(const Bindings& inputs) {
  if (nodes_.empty()) throw GraphError("graph: forward on empty graph");
  for (std::size_t i = 0; i < nodes_.size(); ++i) eval_node(i, inputs);
  evaluated_ = true;
  return nodes_[root().index].value;
}

void Graph::eval_node(std::size_t index, const Bindings& inputs) {
  Node& n = nodes_[index];
  auto in = [&](std::size_t k) -> const Tensor2& { return nodes_[n.parents[k]].value; };
  auto fail = [&](const std::string& what) { throw GraphError(describe(index) + ": " + what); };

  switch (n.kind) {
    case OpKind::kInput: {
      auto it = inputs.find(n.name);
      if (it == inputs.end()) fail("no binding supplied");
      if (it->second.rows() != n.r0 || it->second.cols() != n.r1) {
        fail("bound " + it->second.shape_string() + ", declared " + std::to_string(n.r0) + "x" +
             std::to_string(n.r1));
      }
      n.value = it->second;
      break;
    }
    case OpKind::kConstant:
    case OpKind::kParameter:
      break;
    case OpKind::kMatMul:
      if (in(0).cols() != in(1).rows()) {
        fail("shape mismatch " + in(0).shape_string() + " * " + in(1).shape_string());
      }
      kernels::gemm(Transpose::No, Transpose::No, in(0), in(1), n.value);
      break;
    case OpKind::kAdd:
    case OpKind::kMul: {
      const Tensor2& a = in(0);
      const Tensor2& b = in(1);
      if (!broadcastable(a, b)) fail("cannot broadcast " + b.shape_string() + " onto " + a.shape_string());
      n.value = Tensor2(a.rows(), a.cols());
      const bool is_add = n.kind == OpKind::kAdd;
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
          n.value(r, c) = is_add ? a(r, c) + bcast_at(b, r, c) : a(r, c) * bcast_at(b, r, c);
      break;
    }
    case OpKind::kScale: {
      const double f = n.a, o = n.b;
      n.value = map(in(0), [f, o](double v) { return f * v + o; });
      break;
    }
    case OpKind::kRelu: n.value = map(in(0), [](double v) { return v > 0.0 ? v : 0.0; }); break;
    case OpKind::kTanh: n.value = map(in(0), [](double v) { return std::tanh(v); }); break;
    case OpKind::kSigmoid:
      n.value = map(in(0), [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      });
      break;
    case OpKind::kSoftmaxRows:
      if (in(0).cols() == 0) fail("softmax over zero columns");
      kernels::softmax_rows(in(0), n.value);
      break;
    case OpKind::kLog: n.value = map(in(0), [](double v) { return std::log(v); }); break;
    case OpKind::kExp: n.value = map(in(0), [](double v) { return std::exp(v); }); break;
    case OpKind::kRowSum: {
      const Tensor2& x = in(0);
      n.value = Tensor2(x.rows(), 1);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (double v : x.row(r)) s += v;
        n.value(r, 0) = s;
      }
      break;
    }
    case OpKind::kMean: {
      const Tensor2& x = in(0);
      if (x.empty()) fail("mean of empty tensor");
      double s = 0.0;
      for (double v : x.flat()) s += v;
      n.value = Tensor2::scalar(s / static_cast<double>(x.size()));
      break;
    }
    case OpKind::kConcatRows: {
      const std::size_t cols = in(0).cols();
      std::size_t rows = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        if (in(k).cols() != cols) fail("part " + std::to_string(k) + " has " + in(k).shape_string());
        rows += in(k).rows();
      }
      n.value = Tensor2(rows, cols);
      std::size_t at = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const Tensor2& part = in(k);
        std::copy(part.flat().begin(), part.flat().end(), n.value.flat().begin() + at * cols);
        at += part.rows();
      }
      break;
    }
    case OpKind::kSliceRows: {
      const Tensor2& x = in(0);
      if (n.r1 > x.rows()) fail("slice end " + std::to_string(n.r1) + " beyond " + x.shape_string());
      n.value = Tensor2(n.r1 - n.r0, x.cols());
      std::copy(x.flat().begin() + n.r0 * x.cols(), x.flat().begin() + n.r1 * x.cols(),
                n.value.flat().begin());
      break;
    }
    case OpKind::kGradReversal:
    case OpKind::kStopGradient:
      n.value = in(0);
      break;
    case OpKind::kClamp: {
      const double lo = n.a, hi = n.b;
      n.value = map(in(0), [lo, hi](double v) { return std::clamp(v, lo, hi); });
      break;
    }
    case OpKind::kPow: {
      const double e = n.a;
      n.value = map(in(0), [e](double v) { return e == 0.0 ? 1.0 : std::pow(v, e); });
      break;
    }
    case OpKind::kReciprocal: n.value = map(in(0), [](double v) { return 1.0 / v; }); break;
    case OpKind::kStep: {
      const double t = n.a;
      n.value = map(in(0), [t](double v) { return v > t ? 1.0 : 0.0; });
      break;
    }
  }
}

GradientMap Graph::backward() {
  if (!evaluated_) throw GraphError("graph: backward called before forward");
  const std::size_t r = root().index;
  if (nodes_[r].value.rows() != 1 || nodes_[r].value.cols() != 1) {
    throw GraphError("graph: backward needs a 1x1 root, " + describe(r) + " is " +
                     nodes_[r].value.shape_string());
  }
  for (Node& n : nodes_) n.adjoint = Tensor2(n.value.rows(), n.value.cols());
  nodes_[r].adjoint[0] = 1.0;
  for (std::size_t i = r + 1; i-- > 0;) backprop_node(i);

  GradientMap grads;
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::kParameter) grads.emplace(n.name, n.adjoint);
  }
  return grads;
}

void Graph::backprop_node(std::size_t index) {
  Node& n = nodes_[index];
  const Tensor2& g = n.adjoint;
  const Tensor2& y = n.value;
  auto par = [&](std::size_t k) -> Node& { return nodes_[n.parents[k]]; };

  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kConstant:
    case OpKind::kParameter:
    case OpKind::kStep:
    case OpKind::kStopGradient:
      break;
    case OpKind::kMatMul: {
      Node& a = par(0);
      Node& b = par(1);
      kernels::gemm(Transpose::No, Transpose::Yes, g, b.value, a.adjoint, true);
      kernels::gemm(Transpose::Yes, Transpose::No, a.value, g, b.adjoint, true);
      break;
    }
    case OpKind::kAdd: {
      Tensor2& da = par(0).adjoint;
      Tensor2& db = par(1).adjoint;
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
          da(r, c) += g(r, c);
          bcast_at(db, r, c) += g(r, c);
        }
      break;
    }
    case OpKind::kMul: {
      Node& a = par(0);
      Node& b = par(1);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
          a.adjoint(r, c) += g(r, c) * bcast_at(b.value, r, c);
          bcast_at(b.adjoint, r, c) += g(r, c) * a.value(r, c);
        }
      break;
    }
    case OpKind::kScale: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += n.a * g[i];
      break;
    }
    case OpKind::kRelu: {
      Node& x = par(0);
      for (std::size_t i = 0; i < g.size(); ++i) x.adjoint[i] += x.value[i] > 0.0 ? g[i] : 0.0;
      break;
    }
    case OpKind::kTanh: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case OpKind::kSigmoid: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }
    case OpKind::kSoftmaxRows: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) += y(r, c) * (g(r, c) - dot);
      }
      break;
    }
    case OpKind::kLog: {
      Node& x = par(0);
      for (std::size_t i = 0; i < g.size(); ++i) x.adjoint[i] += g[i] / x.value[i];
      break;
    }
    case OpKind::kExp: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i];
      break;
    }
    case OpKind::kRowSum: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t r = 0; r < dx.rows(); ++r)
        for (std::size_t c = 0; c < dx.cols(); ++c) dx(r, c) += g(r, 0);
      break;
    }
    case OpKind::kMean: {
      Tensor2& dx = par(0).adjoint;
      const double share = g[0] / static_cast<double>(dx.size());
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += share;
      break;
    }
    case OpKind::kConcatRows: {
      std::size_t at = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        Tensor2& dx = par(k).adjoint;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[at * g.cols() + i];
        at += dx.rows();
      }
      break;
    }
    case OpKind::kSliceRows: {
      Tensor2& dx = par(0).adjoint;
      const std::size_t off = n.r0 * dx.cols();
      for (std::size_t i = 0; i < g.size(); ++i) dx[off + i] += g[i];
      break;
    }
    case OpKind::kGradReversal: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += -n.a * g[i];
      break;
    }
    case OpKind::kClamp: {
      Node& x = par(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = x.value[i];
        if (v >= n.a && v <= n.b) x.adjoint[i] += g[i];
      }
      break;
    }
    case OpKind::kPow: {
      if (n.a == 0.0) break;
      Node& x = par(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        x.adjoint[i] += g[i] * n.a * std::pow(x.value[i], n.a - 1.0);
      break;
    }
    case OpKind::kReciprocal: {
      Tensor2& dx = par(0).adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i] * y[i] * y[i];
      break;
    }
  }
}

}  // namespace pda
