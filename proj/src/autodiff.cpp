#include "hiervo/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hiervo::ad {

namespace {

constexpr double kDivGuard = 1e-12;
constexpr double kLogGuard = 1e-12;

double guard_denom(double x) {
  if (std::fabs(x) < kDivGuard) return x >= 0 ? kDivGuard : -kDivGuard;
  return x;
}

double at_bc(const Grid& g, size_t i) { return g.is_scalar() ? g.data()[0] : g.data()[i]; }

void check_broadcast(const Grid& a, const Grid& b) {
  if (!a.same_shape(b) && !a.is_scalar() && !b.is_scalar()) {
    throw std::invalid_argument("tape: shape mismatch");
  }
}

}  // namespace

void Tape::check_tape(Var v) const {
  if (v.tape() != this || v.id() < 0 || static_cast<size_t>(v.id()) >= nodes_.size()) {
    throw std::invalid_argument("tape: operand from another tape");
  }
}

Var Tape::leaf(Grid value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, requires_grad});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::make_node(Grid value, std::vector<int> parents, BackwardFn backward,
                    bool force_inactive) {
  bool act = false;
  for (int p : parents) act = act || nodes_[p].active;
  if (force_inactive) act = false;
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(backward), act});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::note(uint64_t word) {
  // FNV-1a over the 8 bytes.
  for (int i = 0; i < 8; ++i) {
    sig_ ^= (word >> (8 * i)) & 0xff;
    sig_ *= 1099511628211ull;
  }
}

template <class F, class DA, class DB>
Var Tape::binary(Var va, Var vb, F f, DA da, DB db) {
  check_tape(va);
  check_tape(vb);
  const Grid& a = value(va);
  const Grid& b = value(vb);
  check_broadcast(a, b);
  const Grid& shape = a.is_scalar() ? b : a;
  Grid out(shape.height(), shape.width(), shape.channels());
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = f(at_bc(a, i), at_bc(b, i));
  const int ia = va.id(), ib = vb.id();
  auto bw = [ia, ib, da, db](Tape& t, int, const Grid& adj) {
    const Grid& a = t.value(ia);
    const Grid& b = t.value(ib);
    if (Grid* ga = t.adj(ia)) {
      if (ga->is_scalar() && !adj.is_scalar()) {
        double acc = 0.0;
        for (size_t i = 0; i < adj.size(); ++i) acc += da(at_bc(a, i), at_bc(b, i)) * adj.data()[i];
        ga->data()[0] += acc;
      } else {
        for (size_t i = 0; i < adj.size(); ++i)
          ga->data()[i] += da(at_bc(a, i), at_bc(b, i)) * adj.data()[i];
      }
    }
    if (Grid* gb = t.adj(ib)) {
      if (gb->is_scalar() && !adj.is_scalar()) {
        double acc = 0.0;
        for (size_t i = 0; i < adj.size(); ++i) acc += db(at_bc(a, i), at_bc(b, i)) * adj.data()[i];
        gb->data()[0] += acc;
      } else {
        for (size_t i = 0; i < adj.size(); ++i)
          gb->data()[i] += db(at_bc(a, i), at_bc(b, i)) * adj.data()[i];
      }
    }
  };
  return make_node(std::move(out), {ia, ib}, bw);
}

template <class F, class DF>
Var Tape::unary(Var va, F f, DF df) {
  check_tape(va);
  const Grid& a = value(va);
  Grid out(a.height(), a.width(), a.channels());
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = f(a.data()[i]);
  const int ia = va.id();
  auto bw = [ia, df](Tape& t, int, const Grid& adj) {
    if (Grid* ga = t.adj(ia)) {
      const Grid& a = t.value(ia);
      for (size_t i = 0; i < adj.size(); ++i) ga->data()[i] += df(a.data()[i]) * adj.data()[i];
    }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::add(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var Tape::sub(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var Tape::mul(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var Tape::div(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x / guard_denom(y); },
      [](double, double y) { return 1.0 / guard_denom(y); },
      [](double x, double y) {
        const double g = guard_denom(y);
        return -x / (g * g);
      });
}

Var Tape::add_const(Var a, double c) {
  return unary(
      a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var Tape::mul_const(Var a, double c) {
  return unary(
      a, [c](double x) { return x * c; }, [c](double) { return c; });
}

Var Tape::rsub_const(double c, Var a) {
  return unary(
      a, [c](double x) { return c - x; }, [](double) { return -1.0; });
}

Var Tape::abs(Var a) {
  check_tape(a);
  for (double v : value(a).data()) note(v > 0 ? 2u : (v < 0 ? 1u : 0u));
  return unary(
      a, [](double x) { return std::fabs(x); },
      [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var Tape::exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var Tape::log(Var a) {
  return unary(
      a, [](double x) { return std::log(std::max(x, kLogGuard)); },
      [](double x) { return 1.0 / std::max(x, kLogGuard); });
}

Var Tape::sqrt(Var a) {
  return unary(
      a, [](double x) { return std::sqrt(std::max(x, 0.0)); },
      [](double x) { return x > 0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Var Tape::clamp(Var a, double lo, double hi) {
  check_tape(a);
  for (double v : value(a).data()) note(v < lo ? 0u : (v > hi ? 2u : 1u));
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var Tape::less(Var va, Var vb) {
  check_tape(va);
  check_tape(vb);
  const Grid& a = value(va);
  const Grid& b = value(vb);
  check_broadcast(a, b);
  const Grid& shape = a.is_scalar() ? b : a;
  Grid out(shape.height(), shape.width(), shape.channels());
  for (size_t i = 0; i < out.size(); ++i) {
    const bool lt = at_bc(a, i) < at_bc(b, i);
    out.data()[i] = lt ? 1.0 : 0.0;
    note(lt ? 1u : 0u);
  }
  return make_node(std::move(out), {va.id(), vb.id()}, nullptr, /*force_inactive=*/true);
}

Var Tape::min_reduce(Var a) {
  check_tape(a);
  size_t arg = 0;
  const double m = min_value(value(a), &arg);
  note(arg);
  const int ia = a.id();
  auto bw = [ia, arg](Tape& t, int, const Grid& adj) {
    if (Grid* ga = t.adj(ia)) ga->data()[arg] += adj.data()[0];
  };
  return make_node(Grid::scalar(m), {ia}, bw);
}

Var Tape::mean_reduce(Var a) {
  check_tape(a);
  const double m = mean_value(value(a));
  const int ia = a.id();
  const double inv = 1.0 / static_cast<double>(value(a).size());
  auto bw = [ia, inv](Tape& t, int, const Grid& adj) {
    if (Grid* ga = t.adj(ia)) {
      const double g = adj.data()[0] * inv;
      for (double& v : ga->data()) v += g;
    }
  };
  return make_node(Grid::scalar(m), {ia}, bw);
}

Var Tape::sum_reduce(Var a) {
  check_tape(a);
  const double s = sum_value(value(a));
  const int ia = a.id();
  auto bw = [ia](Tape& t, int, const Grid& adj) {
    if (Grid* ga = t.adj(ia)) {
      const double g = adj.data()[0];
      for (double& v : ga->data()) v += g;
    }
  };
  return make_node(Grid::scalar(s), {ia}, bw);
}

Var Tape::channel_mean(Var a) {
  check_tape(a);
  Grid out = hiervo::channel_mean(value(a));
  const int ia = a.id();
  const int C = value(a).channels();
  auto bw = [ia, C](Tape& t, int, const Grid& adj) {
    if (Grid* ga = t.adj(ia)) {
      const double inv = 1.0 / C;
      for (int y = 0; y < adj.height(); ++y)
        for (int x = 0; x < adj.width(); ++x)
          for (int c = 0; c < C; ++c) ga->at(y, x, c) += adj.at(y, x) * inv;
    }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::channel_slice(Var a, int c) {
  check_tape(a);
  const Grid& in = value(a);
  if (c < 0 || c >= in.channels()) throw std::invalid_argument("channel_slice: bad channel");
  Grid out(in.height(), in.width(), 1);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) out.at(y, x) = in.at(y, x, c);
  const int ia = a.id();
  auto bw = [ia, c](Tape& t, int, const Grid& adj) {
    if (Grid* ga = t.adj(ia)) {
      for (int y = 0; y < adj.height(); ++y)
        for (int x = 0; x < adj.width(); ++x) ga->at(y, x, c) += adj.at(y, x);
    }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::box_mean(Var a, int radius) {
  check_tape(a);
  Grid out = hiervo::box_mean(value(a), radius);
  const int ia = a.id();
  auto bw = [ia, radius](Tape& t, int, const Grid& adj) {
    Grid* ga = t.adj(ia);
    if (!ga) return;
    const int H = adj.height(), W = adj.width(), C = adj.channels();
    const double norm = 1.0 / ((2 * radius + 1) * (2 * radius + 1));
    // Exact adjoint of the replicated-edge box filter.
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        for (int dy = -radius; dy <= radius; ++dy) {
          const int yy = std::clamp(y + dy, 0, H - 1);
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = std::clamp(x + dx, 0, W - 1);
            for (int c = 0; c < C; ++c) ga->at(yy, xx, c) += adj.at(y, x, c) * norm;
          }
        }
      }
    }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::upsample(Var a, int out_h, int out_w) {
  check_tape(a);
  Grid out = hiervo::upsample(value(a), out_h, out_w);
  const int ia = a.id();
  const int src_h = value(a).height(), src_w = value(a).width();
  auto bw = [ia, src_h, src_w](Tape& t, int, const Grid& adj) {
    Grid* ga = t.adj(ia);
    if (!ga) return;
    const int H = adj.height(), W = adj.width(), C = adj.channels();
    const double sy = H > 1 ? static_cast<double>(src_h - 1) / (H - 1) : 0.0;
    const double sx = W > 1 ? static_cast<double>(src_w - 1) / (W - 1) : 0.0;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const BilinearTap tap = bilinear_tap(src_h, src_w, x * sx, y * sy);
        const double w00 = (1 - tap.wx) * (1 - tap.wy), w10 = tap.wx * (1 - tap.wy);
        const double w01 = (1 - tap.wx) * tap.wy, w11 = tap.wx * tap.wy;
        for (int c = 0; c < C; ++c) {
          const double g = adj.at(y, x, c);
          ga->at(tap.y0, tap.x0, c) += w00 * g;
          ga->at(tap.y0, tap.x1, c) += w10 * g;
          ga->at(tap.y1, tap.x0, c) += w01 * g;
          ga->at(tap.y1, tap.x1, c) += w11 * g;
        }
      }
    }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::grad_x(Var a) {
  check_tape(a);
  Grid out = hiervo::grad_x(value(a));
  const int ia = a.id();
  auto bw = [ia](Tape& t, int, const Grid& adj) {
    Grid* ga = t.adj(ia);
    if (!ga) return;
    for (int y = 0; y < adj.height(); ++y)
      for (int x = 0; x + 1 < adj.width(); ++x)
        for (int c = 0; c < adj.channels(); ++c) {
          const double g = adj.at(y, x, c);
          ga->at(y, x + 1, c) += g;
          ga->at(y, x, c) -= g;
        }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::grad_y(Var a) {
  check_tape(a);
  Grid out = hiervo::grad_y(value(a));
  const int ia = a.id();
  auto bw = [ia](Tape& t, int, const Grid& adj) {
    Grid* ga = t.adj(ia);
    if (!ga) return;
    for (int y = 0; y + 1 < adj.height(); ++y)
      for (int x = 0; x < adj.width(); ++x)
        for (int c = 0; c < adj.channels(); ++c) {
          const double g = adj.at(y, x, c);
          ga->at(y + 1, x, c) += g;
          ga->at(y, x, c) -= g;
        }
  };
  return make_node(std::move(out), {ia}, bw);
}

Var Tape::sample(Var img, Var u, Var v, Mask* valid_out) {
  check_tape(img);
  check_tape(u);
  check_tape(v);
  Grid out;
  Mask valid;
  sample_grid(value(img), value(u), value(v), &out, &valid);
  const int H = out.height(), W = out.width();
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const BilinearTap tap =
          bilinear_tap(value(img).height(), value(img).width(), value(u).at(y, x), value(v).at(y, x));
      note(tap.valid ? 1u : 0u);
      if (tap.valid) note((static_cast<uint64_t>(tap.y0) << 32) | static_cast<uint32_t>(tap.x0));
    }
  }
  if (valid_out) *valid_out = valid;
  const int ii = img.id(), iu = u.id(), iv = v.id();
  auto bw = [ii, iu, iv](Tape& t, int, const Grid& adj) {
    const Grid& img = t.value(ii);
    const Grid& u = t.value(iu);
    const Grid& v = t.value(iv);
    Grid* gi = t.adj(ii);
    Grid* gu = t.adj(iu);
    Grid* gv = t.adj(iv);
    if (!gi && !gu && !gv) return;
    const int C = img.channels();
    for (int y = 0; y < adj.height(); ++y) {
      for (int x = 0; x < adj.width(); ++x) {
        const BilinearTap tap = bilinear_tap(img.height(), img.width(), u.at(y, x), v.at(y, x));
        if (!tap.valid) continue;
        const double w00 = (1 - tap.wx) * (1 - tap.wy), w10 = tap.wx * (1 - tap.wy);
        const double w01 = (1 - tap.wx) * tap.wy, w11 = tap.wx * tap.wy;
        double du = 0.0, dv = 0.0;
        for (int c = 0; c < C; ++c) {
          const double g = adj.at(y, x, c);
          const double i00 = img.at(tap.y0, tap.x0, c), i10 = img.at(tap.y0, tap.x1, c);
          const double i01 = img.at(tap.y1, tap.x0, c), i11 = img.at(tap.y1, tap.x1, c);
          if (gi) {
            gi->at(tap.y0, tap.x0, c) += w00 * g;
            gi->at(tap.y0, tap.x1, c) += w10 * g;
            gi->at(tap.y1, tap.x0, c) += w01 * g;
            gi->at(tap.y1, tap.x1, c) += w11 * g;
          }
          du += g * ((i10 - i00) * (1 - tap.wy) + (i11 - i01) * tap.wy);
          dv += g * ((i01 - i00) * (1 - tap.wx) + (i11 - i10) * tap.wx);
        }
        if (gu) gu->at(y, x) += du;
        if (gv) gv->at(y, x) += dv;
      }
    }
  };
  return make_node(std::move(out), {ii, iu, iv}, bw);
}

Var Tape::stop_gradient(Var a) {
  check_tape(a);
  return make_node(value(a), {a.id()}, nullptr, /*force_inactive=*/true);
}

void Tape::backward(Var loss) {
  check_tape(loss);
  if (!value(loss).is_scalar()) throw std::invalid_argument("backward: loss must be scalar");
  adjoints_.assign(nodes_.size(), Grid{});
  if (!nodes_[loss.id()].active) return;  // no differentiable leaves reachable
  adjoints_[loss.id()] = Grid::scalar(1.0);
  for (int i = loss.id(); i >= 0; --i) {
    if (!nodes_[i].active || adjoints_[i].empty() || !nodes_[i].backward) continue;
    nodes_[i].backward(*this, i, adjoints_[i]);
  }
}

Grid Tape::grad(Var v) const {
  check_tape(v);
  const Grid& val = value(v);
  if (static_cast<size_t>(v.id()) < adjoints_.size() && !adjoints_[v.id()].empty()) {
    return adjoints_[v.id()];
  }
  return Grid(val.height(), val.width(), val.channels());
}

Grid* Tape::adj(int id) {
  if (!nodes_[id].active) return nullptr;
  if (adjoints_[id].empty()) {
    const Grid& val = nodes_[id].value;
    adjoints_[id] = Grid(val.height(), val.width(), val.channels());
  }
  return &adjoints_[id];
}

void Tape::clear() {
  nodes_.clear();
  adjoints_.clear();
  sig_ = 1469598103934665603ull;
}

}  // namespace hiervo::ad
