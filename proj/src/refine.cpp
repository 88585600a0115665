#include "hiervo/refine.hpp"

#include <cmath>

#include "hiervo/image_ops.hpp"
#include "hiervo/warp.hpp"

namespace hiervo::refine {

namespace {

struct PyramidLevel {
  Image a, b;
  DepthMap depth_b;
  Intrinsics k;
};

// Coarse-to-fine stack, finest last. Stops early at odd dimensions.
std::vector<PyramidLevel> build_levels(const Image& a, const Image& b, const DepthMap& depth_b,
                                       const Intrinsics& k, int num_levels) {
  std::vector<PyramidLevel> levels{{a, b, depth_b, k}};
  while (static_cast<int>(levels.size()) < num_levels) {
    const PyramidLevel& prev = levels.back();
    if (prev.k.width % 2 != 0 || prev.k.height % 2 != 0 || prev.k.width < 16 ||
        prev.k.height < 16) {
      break;
    }
    levels.push_back({downsample_half(prev.a), downsample_half(prev.b),
                      downsample_half(prev.depth_b), prev.k.half()});
  }
  std::reverse(levels.begin(), levels.end());
  return levels;
}

struct Objective {
  const PyramidLevel& lvl;
  const EstimatorConfig& cfg;
  Pose base;

  explicit Objective(const PyramidLevel& level, const EstimatorConfig& config, const Pose& b)
      : lvl(level), cfg(config), base(b) {}

  // Valid-normalized photometric mean; gradient optional. The training-time
  // auto-mask stays out of this objective: at the zero twist the warp equals
  // the source exactly, so a strict [sigma_warp < sigma_ident] mask would
  // zero the loss and its gradient at every initialization.
  double eval(const Twist& xi, Eigen::Matrix<double, 6, 1>* grad) const {
    ad::Tape t;
    Grid xi_grid(1, 6, 1);
    for (int i = 0; i < 6; ++i) xi_grid.data()[i] = xi.xi[i];
    ad::Var twist = t.leaf(xi_grid, grad != nullptr);
    ad::Var depth = t.constant(lvl.depth_b);
    const TapedWarp warp = inverse_warp_taped(t, lvl.a, depth, twist, base, lvl.k, false);
    ad::Var sigma =
        losses::photometric(t, warp.warped, t.constant(lvl.b), cfg.lambda_rho, cfg.ssim_radius,
                            cfg.eps);
    ad::Var mask = t.constant(warp.valid);
    const double valid_count = sum_value(warp.valid);
    ad::Var loss = t.mul_const(t.sum_reduce(sigma * mask), 1.0 / (valid_count + 1.0));
    const double value = t.value(loss).scalar_value();
    if (grad) {
      t.backward(loss);
      const Grid g = t.grad(twist);
      for (int i = 0; i < 6; ++i) (*grad)[i] = g.data()[i];
    }
    return value;
  }
};

// Plain gradient descent with step halving; returns the best iterate.
Twist descend(const Objective& obj, Twist xi, int iterations, const EstimatorConfig& cfg) {
  Eigen::Matrix<double, 6, 1> grad;
  double loss = obj.eval(xi, &grad);
  if (!std::isfinite(loss)) throw DivergedError(xi);
  double step = cfg.initial_step / (grad.norm() + 1e-12);
  for (int it = 0; it < iterations; ++it) {
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Twist candidate(Eigen::Matrix<double, 6, 1>(xi.xi - step * grad));
      const double cand_loss = obj.eval(candidate, nullptr);
      if (!std::isfinite(cand_loss)) throw DivergedError(xi);
      if (cand_loss < loss) {
        xi = candidate;
        loss = cand_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || step * grad.norm() < cfg.tolerance) break;
    const double prev_norm = grad.norm();
    loss = obj.eval(xi, &grad);
    if (!std::isfinite(loss)) throw DivergedError(xi);
    // Mild growth so the line search stays active after easy accepts.
    step *= 1.5 * (prev_norm + 1e-12) / (grad.norm() + 1e-12);
  }
  return xi;
}

}  // namespace

double photometric_alignment_loss(const Image& a, const Image& b, const DepthMap& depth_b,
                                  const Intrinsics& k, const Pose& pose,
                                  const EstimatorConfig& cfg) {
  const PyramidLevel lvl{a, b, depth_b, k};
  const Objective obj(lvl, cfg, pose);
  return obj.eval(Twist(), nullptr);
}

Pose direct_estimate(const Image& a, const Image& b, const DepthMap& depth_b, const Intrinsics& k,
                     const Twist& init, const EstimatorConfig& cfg) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels() ||
      depth_b.height() != b.height() || depth_b.width() != b.width()) {
    throw std::invalid_argument("direct_estimate: dimension mismatch");
  }
  const Pose base = exp_twist(init);
  const std::vector<PyramidLevel> levels = build_levels(a, b, depth_b, k, cfg.pyramid_levels);
  Twist xi;  // increment on top of base, starts at zero
  for (const PyramidLevel& lvl : levels) {
    const Objective obj(lvl, cfg, base);
    xi = descend(obj, xi, cfg.iterations, cfg);
  }
  // The contract guarantees no regression against the initial pose under
  // the finest-level objective.
  const Objective finest(levels.back(), cfg, base);
  if (finest.eval(xi, nullptr) > finest.eval(Twist(), nullptr)) xi = Twist();
  return compose(exp_twist(xi), base);
}

DepthPyramid DepthPyramid::build(const DepthMap& finest, int num_levels) {
  if (num_levels < 1) throw std::invalid_argument("DepthPyramid: need at least one level");
  std::vector<DepthMap> levels{finest};
  for (int i = 1; i < num_levels; ++i) {
    const DepthMap& prev = levels.back();
    if (prev.height() % 2 != 0 || prev.width() % 2 != 0) {
      throw std::invalid_argument("DepthPyramid: dimensions must halve exactly");
    }
    levels.push_back(downsample_half(prev));
  }
  std::reverse(levels.begin(), levels.end());
  DepthPyramid pyr;
  pyr.levels = std::move(levels);
  return pyr;
}

RefinementResult hierarchical_refine(const Image& xa, const Image& xb, const DepthPyramid&,
                                     const DepthPyramid& pyr_b, const Intrinsics& k, int m_levels,
                                     const EstimatorConfig& cfg, const Twist& init) {
  if (m_levels < 1) throw std::invalid_argument("hierarchical_refine: need at least one level");
  const DepthMap& depth_b = pyr_b.finest();
  RefinementResult result;
  try {
    result.poses.push_back(direct_estimate(xa, xb, depth_b, k, init, cfg));
  } catch (const DivergedError& e) {
    throw DivergedError(e.last_iterate, "hierarchical_refine: diverged at level 1");
  }
  EstimatorConfig residual_cfg = cfg;
  residual_cfg.iterations = cfg.residual_iterations;
  residual_cfg.initial_step = cfg.initial_step * 0.5;
  residual_cfg.pyramid_levels = std::max(1, cfg.pyramid_levels - 1);
  for (int m = 1; m < m_levels; ++m) {
    const WarpResult view = inverse_warp(xa, depth_b, result.poses.back(), k);
    result.intermediate_views.push_back(view.warped_image);
    Pose residual;
    try {
      residual = direct_estimate(view.warped_image, xb, depth_b, k, Twist(), residual_cfg);
    } catch (const DivergedError& e) {
      throw DivergedError(e.last_iterate,
                          "hierarchical_refine: diverged at level " + std::to_string(m + 1));
    }
    result.residuals.push_back(residual);
    result.residual_twists.push_back(log_pose(residual));
    result.poses.push_back(compose(residual, result.poses.back()));
  }
  for (const Pose& pose : result.poses) {
    result.level_losses.push_back(photometric_alignment_loss(xa, xb, depth_b, k, pose, cfg));
  }
  return result;
}

JointStepDiagnostics joint_refine_step(const Image& xa, const Image& xb, const Intrinsics& k,
                                       JointState* state, double depth_lr, double pose_lr,
                                       const losses::LossConfig& cfg) {
  ad::Tape t;
  losses::PairVariables vars;
  for (const DepthMap& d : state->depth_a) vars.depth_a.push_back(t.leaf(d));
  for (const DepthMap& d : state->depth_b) vars.depth_b.push_back(t.leaf(d));
  for (const Twist& x : state->twists) {
    Grid g(1, 6, 1);
    for (int i = 0; i < 6; ++i) g.data()[i] = x.xi[i];
    vars.twists.push_back(t.leaf(g));
  }
  losses::PairInputs inputs{&xa, &xb, k};
  const losses::PairLossBundle bundle = losses::build_pair_losses(t, inputs, vars, cfg);

  JointStepDiagnostics diag;
  diag.total = t.value(bundle.total).scalar_value();
  diag.recon = t.value(bundle.recon_total).scalar_value();
  diag.gc = t.value(bundle.gc_total).scalar_value();
  diag.smooth = t.value(bundle.smooth_total).scalar_value();
  for (const losses::LossTerm& term : bundle.terms) {
    diag.term_rows.push_back({static_cast<double>(term.pose_level),
                              static_cast<double>(term.depth_scale),
                              term.forward_direction ? 1.0 : 0.0,
                              t.value(term.recon).scalar_value(),
                              t.value(term.gc).scalar_value()});
  }
  if (!std::isfinite(diag.total)) throw DivergedError(state->twists.empty() ? Twist() : state->twists[0],
                                                      "joint_refine_step: non-finite loss");
  t.backward(bundle.total);
  for (size_t n = 0; n < vars.depth_a.size(); ++n) {
    const Grid ga = t.grad(vars.depth_a[n]);
    const Grid gb = t.grad(vars.depth_b[n]);
    for (size_t i = 0; i < ga.size(); ++i) {
      state->depth_a[n].data()[i] =
          std::max(1e-2, state->depth_a[n].data()[i] - depth_lr * ga.data()[i]);
      state->depth_b[n].data()[i] =
          std::max(1e-2, state->depth_b[n].data()[i] - depth_lr * gb.data()[i]);
    }
  }
  for (size_t m = 0; m < vars.twists.size(); ++m) {
    const Grid g = t.grad(vars.twists[m]);
    for (int i = 0; i < 6; ++i) state->twists[m].xi[i] -= pose_lr * g.data()[i];
  }
  return diag;
}

}  // namespace hiervo::refine
