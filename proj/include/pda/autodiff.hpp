#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pda/tensor.hpp"

namespace pda {

/// Thrown when forward/backward meet inconsistent shapes or are misused.
/// The message names the offending node.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OpKind {
  kInput,
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kScale,  // factor * x + offset
  kRelu,
  kTanh,
  kSigmoid,
  kSoftmaxRows,
  kLog,
  kExp,
  kMul,
  kRowSum,
  kMean,
  kConcatRows,
  kSliceRows,
  kGradReversal,
  kClamp,
  kPow,
  kReciprocal,
  kStep,          // 1 where x > threshold, else 0; no gradient
  kStopGradient,  // identity forward, no gradient
};

const char* op_name(OpKind kind);

/// Handle to a node inside one Graph.
struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

using Bindings = std::map<std::string, Tensor2>;
using GradientMap = std::map<std::string, Tensor2>;

/// Define-by-run reverse-mode graph over Tensor2 values.
///
/// Nodes are appended in topological order; a node may only reference
/// earlier nodes, so the graph is acyclic by construction. Shapes are
/// resolved in forward(), where inputs are bound by name. The root is the
/// most recently added node unless set_root() picks another.
///
/// Binary elementwise ops (add, mul) broadcast their second operand when
/// it is 1x1, 1xcols or rowsx1.
class Graph {
 public:
  NodeId input(std::string name, std::size_t rows, std::size_t cols);
  NodeId constant(Tensor2 value, std::string label = {});
  NodeId parameter(std::string name, Tensor2 value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor, double offset = 0.0);
  NodeId relu(NodeId x);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId softmax_rows(NodeId x);
  NodeId log(NodeId x);
  NodeId exp(NodeId x);
  NodeId mul(NodeId a, NodeId b);
  NodeId row_sum(NodeId x);
  NodeId mean(NodeId x);
  NodeId concat_rows(std::vector<NodeId> parts);
  NodeId slice_rows(NodeId x, std::size_t begin, std::size_t end);
  /// Identity forward; multiplies the incoming adjoint by -lambda.
  NodeId grad_reversal(NodeId x, double lambda);
  NodeId clamp(NodeId x, double lo, double hi);
  NodeId pow(NodeId x, double exponent);
  NodeId reciprocal(NodeId x);
  NodeId step(NodeId x, double threshold);
  NodeId stop_gradient(NodeId x);

  void set_root(NodeId id);
  NodeId root() const;

  /// Evaluates every node; returns the root value.
  const Tensor2& forward(const Bindings& inputs = {});
  /// Gradients of the (1x1) root with respect to every parameter, by name.
  GradientMap backward();

  const Tensor2& value(NodeId id) const;
  const Tensor2& adjoint(NodeId id) const;
  OpKind kind(NodeId id) const { return nodes_.at(id.index).kind; }
  std::size_t size() const { return nodes_.size(); }
  bool evaluated() const { return evaluated_; }

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<std::size_t> parents;
    double a = 0.0;  // op attribute: factor, lambda, lo, exponent, threshold
    double b = 0.0;  // op attribute: offset, hi
    std::size_t r0 = 0, r1 = 0;  // input shape or slice bounds
    std::string name;
    Tensor2 value;
    Tensor2 adjoint;
  };

  static Node make_node(OpKind kind, std::vector<std::size_t> parents);
  NodeId push(Node node);
  void check_parent(NodeId id) const;
  std::string describe(std::size_t index) const;
  void eval_node(std::size_t index, const Bindings& inputs);
  void backprop_node(std::size_t index);

  std::vector<Node> nodes_;
  std::size_t root_ = 0;
  bool root_set_ = false;
  bool evaluated_ = false;
};

}  // namespace pda
