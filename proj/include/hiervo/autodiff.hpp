#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hiervo/grid.hpp"
#include "hiervo/image_ops.hpp"

namespace hiervo::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; the value lives in the tape.
class Var {
 public:
  Var() = default;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }
  const Grid& value() const;

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

using BackwardFn = std::function<void(Tape&, int self, const Grid& adj)>;

/// Reverse-mode tape over grid-valued (or scalar, i.e. 1x1x1) operations.
///
/// Recording order is topological order. Every taped forward value is
/// computed by the same kernels as the plain operations in image_ops, so
/// taped and untaped forward results agree bit for bit.
///
/// Discrete decisions made during the forward pass (comparison outcomes,
/// bilinear sampling cells, argmin indices, clamp branches, abs signs) are
/// folded into a signature hash; finite-difference checks use it to detect
/// and skip evaluations that straddle a non-smooth point.
///
/// A tape is single-threaded; independent tapes on independent threads are
/// safe.
class Tape {
 public:
  Var leaf(Grid value, bool requires_grad = true);
  Var constant(Grid value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Grid::scalar(v), false); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// Division; denominators with |x| < 1e-12 are replaced by +-1e-12.
  Var div(Var a, Var b);
  Var add_const(Var a, double c);
  Var mul_const(Var a, double c);
  /// c - a.
  Var rsub_const(double c, Var a);

  Var abs(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var clamp(Var a, double lo, double hi);

  /// Elementwise [a < b] producing a constant {0,1} mask; carries no gradient.
  Var less(Var a, Var b);

  Var min_reduce(Var a);
  Var mean_reduce(Var a);
  Var sum_reduce(Var a);
  Var channel_mean(Var a);
  /// Extracts channel c as an H x W x 1 grid.
  Var channel_slice(Var a, int c);

  Var box_mean(Var a, int radius);
  Var upsample(Var a, int out_h, int out_w);
  Var grad_x(Var a);
  Var grad_y(Var a);

  /// Bilinear sampling of `img` at coordinate grids (u, v); differentiable in
  /// all three. Out-of-bounds points give 0 and receive no gradient. When
  /// `valid_out` is non-null it receives the in-bounds mask.
  Var sample(Var img, Var u, Var v, Mask* valid_out = nullptr);

  /// Same value, but backward contributes nothing through this node.
  Var stop_gradient(Var a);

  /// Escape hatch for composite nodes (see the warp module).
  Var make_node(Grid value, std::vector<int> parents, BackwardFn backward,
                bool force_inactive = false);

  /// Runs reverse accumulation from a scalar loss. Throws
  /// std::invalid_argument when the loss is not scalar.
  void backward(Var loss);

  const Grid& value(int id) const { return nodes_[id].value; }
  const Grid& value(Var v) const { return nodes_[v.id()].value; }
  /// Gradient of the last backward() w.r.t. v (zero grid if unreached).
  Grid grad(Var v) const;
  /// Adjoint accumulation buffer; non-null only during backward for active nodes.
  Grid* adj(int id);
  bool active(int id) const { return nodes_[id].active; }

  void note(uint64_t word);
  uint64_t signature() const { return sig_; }

  size_t num_nodes() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Grid value;
    std::vector<int> parents;
    BackwardFn backward;
    bool active = false;
  };

  template <class F, class DA, class DB>
  Var binary(Var a, Var b, F f, DA da, DB db);
  template <class F, class DF>
  Var unary(Var a, F f, DF df);
  void check_tape(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Grid> adjoints_;
  uint64_t sig_ = 1469598103934665603ull;  // FNV-1a offset basis
};

inline const Grid& Var::value() const { return tape_->value(id_); }

inline Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape()->div(a, b); }
inline Var operator+(Var a, double c) { return a.tape()->add_const(a, c); }
inline Var operator-(Var a, double c) { return a.tape()->add_const(a, -c); }
inline Var operator-(double c, Var a) { return a.tape()->rsub_const(c, a); }
inline Var operator*(Var a, double c) { return a.tape()->mul_const(a, c); }
inline Var operator*(double c, Var a) { return a.tape()->mul_const(a, c); }

}  // namespace hiervo::ad
