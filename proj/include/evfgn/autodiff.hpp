#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "evfgn/tensor.hpp"

// Reverse-mode differentiation restricted to the operations of the
// forecasting network. Complex nodes carry gradients as
// dL/dRe + i dL/dIm, so each complex entry behaves as two real parameters.
namespace evfgn::ad {

using Value = std::variant<RealTensor, ComplexTensor>;

class Tape;

/// Handle to a node on a specific tape.
class Var {
 public:
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(std::size_t id, std::uint64_t tape) : id_(id), tape_(tape) {}
  std::size_t id_;
  std::uint64_t tape_;
};

/// Deliberate reverse-rule corruption for negative-control tests.
enum class Fault { none, linear_weight_grad };

class Tape {
 public:
  using ReverseRule = std::function<void(Tape&, std::size_t self)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Value v);
  Var parameter(std::string name, Value v);
  Var record(Value v, std::vector<Var> inputs, ReverseRule rule);

  const Value& value(Var v) const;
  const RealTensor& real(Var v) const;
  const ComplexTensor& complex(Var v) const;
  const Value& grad(Var v) const;

  /// Zeroes every accumulator, seeds dL/dL = 1 and replays reverse rules
  /// from the loss node down to the first node.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_visit_count() const noexcept { return visits_; }

  void inject(Fault f) noexcept { fault_ = f; }
  Fault fault() const noexcept { return fault_; }

  // Accessors for reverse rules, by node id.
  const Value& value_at(std::size_t id) const { return nodes_[id].value; }
  /// Empty for nodes that do not require grad; backward only allocates the rest.
  const Value& grad_at(std::size_t id) const { return nodes_[id].grad; }
  const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_[id].inputs; }
  bool wants_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  RealTensor& real_grad(std::size_t id) { return std::get<RealTensor>(nodes_[id].grad); }
  ComplexTensor& complex_grad(std::size_t id) { return std::get<ComplexTensor>(nodes_[id].grad); }

  /// (name, node id) of every parameter in registration order.
  std::vector<std::pair<std::string, std::size_t>> parameters() const;

 private:
  struct Node {
    Value value;
    Value grad;
    std::vector<std::size_t> inputs;
    ReverseRule rule;
    bool requires_grad = false;
    std::string name;
    bool is_parameter = false;
  };

  std::size_t check(Var v) const;

  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
  Fault fault_ = Fault::none;
};

/// Gradients of every parameter node after a backward pass.
class GradStore {
 public:
  void add(std::string name, Value grad) { entries_.emplace_back(std::move(name), std::move(grad)); }
  const Value& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Value>>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

/// Runs `tape.backward(loss)` and collects parameter gradients.
/// Throws Error(MissingGradPath) when no parameter reaches `loss`.
GradStore backward(Tape& tape, Var loss);

// --- operations -----------------------------------------------------------

Var embed(Tape& tape, Var x, Var phi_v, Var phi_u);
Var broadcast_channels(Tape& tape, Var x, std::size_t channels);
Var dft2(Tape& tape, Var x);
Var idft2(Tape& tape, Var s);
Var channel_matmul(Tape& tape, Var s, Var m);
Var add_bias(Tape& tape, Var x, Var bias);
Var split_relu(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var real_part(Tape& tape, Var s);
Var reduce_steps(Tape& tape, Var rep, Var w);
Var reshape(Tape& tape, Var x, Dims dims);
Var linear(Tape& tape, Var z, Var w, Var b);
Var leaky_relu(Tape& tape, Var x, double slope);
/// sum (pred - target)^2, a 1x1x1 node.
Var l2_loss(Tape& tape, Var pred, Var target);
/// sum x^2 over a real node.
Var sum_squares(Tape& tape, Var x);

}  // namespace evfgn::ad
