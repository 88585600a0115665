#include "hiervo/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hiervo/image_ops.hpp"

namespace hiervo::losses {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

}  // namespace

ad::Var ssim_map(ad::Tape& t, ad::Var a, ad::Var b, int radius, double eps) {
  if (!t.value(a).same_shape(t.value(b))) throw std::invalid_argument("ssim_map: shape mismatch");
  ad::Var mu_a = t.box_mean(a, radius);
  ad::Var mu_b = t.box_mean(b, radius);
  ad::Var mu_aa = mu_a * mu_a;
  ad::Var mu_bb = mu_b * mu_b;
  ad::Var mu_ab = mu_a * mu_b;
  ad::Var var_a = t.box_mean(a * a, radius) - mu_aa;
  ad::Var var_b = t.box_mean(b * b, radius) - mu_bb;
  ad::Var cov = t.box_mean(a * b, radius) - mu_ab;
  ad::Var num = (2.0 * mu_ab + kC1) * (2.0 * cov + kC2);
  ad::Var den = (mu_aa + mu_bb + kC1) * (var_a + var_b + kC2) + eps;
  return t.clamp(num / den, -1.0, 1.0);
}

ad::Var photometric(ad::Tape& t, ad::Var a, ad::Var b, double lambda_rho, int ssim_radius,
                    double eps) {
  ad::Var l1 = t.channel_mean(t.abs(a - b));
  ad::Var dssim = t.channel_mean((1.0 - ssim_map(t, a, b, ssim_radius, eps)) * 0.5);
  return t.clamp(lambda_rho * l1 + (1.0 - lambda_rho) * dssim, 0.0,
                 std::numeric_limits<double>::infinity());
}

ad::Var depth_diff(ad::Tape& t, ad::Var dpro, ad::Var dwarp, double eps) {
  return t.abs(dpro - dwarp) / (dpro + dwarp + eps);
}

ad::Var weight_mask(ad::Tape&, ad::Var ddiff) { return 1.0 - ddiff; }

ad::Var auto_mask(ad::Tape& t, ad::Var sigma_warp, ad::Var sigma_ident) {
  return t.less(sigma_warp, sigma_ident);
}

ad::Var recon_loss(ad::Tape& t, ad::Var sigma, ad::Var weight, ad::Var auto_m, ad::Var valid) {
  return t.mean_reduce(weight * auto_m * valid * sigma);
}

ad::Var gc_loss(ad::Tape& t, ad::Var ddiff, ad::Var auto_m, ad::Var valid) {
  return t.mean_reduce(auto_m * valid * ddiff);
}

ad::Var smooth_loss(ad::Tape& t, ad::Var depth, const Image& reference, double eps) {
  ad::Var dmin = t.min_reduce(depth);
  ad::Var dhat = depth / (dmin + eps);
  const Grid ref_mean = channel_mean(reference);
  Grid ex = grad_x(ref_mean), ey = grad_y(ref_mean);
  for (auto& v : ex.data()) v = std::exp(-std::fabs(v));
  for (auto& v : ey.data()) v = std::exp(-std::fabs(v));
  ad::Var wx = t.constant(std::move(ex));
  ad::Var wy = t.constant(std::move(ey));
  return t.mean_reduce(t.abs(t.grad_x(dhat)) * wx + t.abs(t.grad_y(dhat)) * wy);
}

ad::Var aug_pose_loss(ad::Tape& t, ad::Var t_est, ad::Var q_est, const Eigen::Vector3d& t_label,
                      const Quat& q_label, ad::Var w_t, ad::Var w_q) {
  if (t.value(t_est).size() != 3 || t.value(q_est).size() != 4) {
    throw std::invalid_argument("aug_pose_loss: expected 1x3 translation and 1x4 quaternion");
  }
  Grid tl(1, 3, 1), ql(1, 4, 1);
  for (int i = 0; i < 3; ++i) tl.data()[i] = t_label[i];
  ql.data()[0] = q_label.w;
  ql.data()[1] = q_label.x;
  ql.data()[2] = q_label.y;
  ql.data()[3] = q_label.z;
  ad::Var et = t_est - t.constant(std::move(tl));
  ad::Var eq = q_est - t.constant(std::move(ql));
  ad::Var norm_t = t.sqrt(t.sum_reduce(et * et));
  ad::Var norm_q = t.sqrt(t.sum_reduce(eq * eq));
  return norm_t * t.exp(0.0 - w_t) + w_t + norm_q * t.exp(0.0 - w_q) + w_q;
}

ad::Var total_loss(ad::Tape&, ad::Var recon, ad::Var gc, ad::Var smooth,
                   std::optional<ad::Var> aug, const LossConfig& cfg) {
  ad::Var out = cfg.alpha1 * recon + cfg.alpha2 * gc + cfg.alpha3 * smooth;
  if (aug) out = out + cfg.alpha4 * (*aug);
  return out;
}

PairLossBundle build_pair_losses(ad::Tape& t, const PairInputs& inputs, const PairVariables& vars,
                                 const LossConfig& cfg) {
  if (!inputs.image_a || !inputs.image_b) throw std::invalid_argument("build_pair_losses: null images");
  if (vars.depth_a.size() != vars.depth_b.size() || vars.depth_a.empty() || vars.twists.empty()) {
    throw std::invalid_argument("build_pair_losses: inconsistent variables");
  }
  const int num_scales = static_cast<int>(vars.depth_a.size());
  const int num_levels = static_cast<int>(vars.twists.size());
  const int H = inputs.image_a->height(), W = inputs.image_a->width();

  // Low-scale depths are upsampled to the highest scale before any loss.
  std::vector<ad::Var> up_a(num_scales), up_b(num_scales);
  for (int n = 0; n < num_scales; ++n) {
    up_a[n] = t.upsample(vars.depth_a[n], H, W);
    up_b[n] = t.upsample(vars.depth_b[n], H, W);
  }

  ad::Var const_a = t.constant(*inputs.image_a);
  ad::Var const_b = t.constant(*inputs.image_b);
  // sigma(X^t, X^{t+1}), shared by the auto-masks of both directions.
  ad::Var sigma_ident = photometric(t, const_a, const_b, cfg.lambda_rho, cfg.ssim_radius, cfg.eps);

  PairLossBundle bundle;
  ad::Var recon_sum, gc_sum;
  bool first = true;
  for (int dir = 0; dir < 2; ++dir) {
    const bool forward = dir == 0;
    const Image& source = forward ? *inputs.image_a : *inputs.image_b;
    for (int m = 1; m <= num_levels; ++m) {
      const bool stop_depth =
          cfg.mode == AssociationMode::StopDepthForCoarsePose && m < num_levels;
      for (int n = 1; n <= num_scales; ++n) {
        ad::Var d_tgt = forward ? up_b[n - 1] : up_a[n - 1];
        ad::Var d_src = forward ? up_a[n - 1] : up_b[n - 1];
        if (stop_depth) {
          d_tgt = t.stop_gradient(d_tgt);
          d_src = t.stop_gradient(d_src);
        }
        const TapedWarp warp =
            inverse_warp_taped(t, source, d_tgt, vars.twists[m - 1], Pose::identity(), inputs.k,
                               /*invert_pose=*/!forward, d_src);
        ad::Var sigma = photometric(t, warp.warped, forward ? const_b : const_a, cfg.lambda_rho,
                                    cfg.ssim_radius, cfg.eps);
        ad::Var ddiff = depth_diff(t, warp.projected_depth, warp.sampled_depth, cfg.eps);
        ad::Var weight = weight_mask(t, ddiff);
        ad::Var am = auto_mask(t, sigma, sigma_ident);
        ad::Var valid = t.constant(warp.valid);
        LossTerm term;
        term.pose_level = m;
        term.depth_scale = n;
        term.forward_direction = forward;
        term.recon = recon_loss(t, sigma, weight, am, valid);
        term.gc = gc_loss(t, ddiff, am, valid);
        bundle.terms.push_back(term);
        if (first) {
          recon_sum = term.recon;
          gc_sum = term.gc;
          first = false;
        } else {
          recon_sum = recon_sum + term.recon;
          gc_sum = gc_sum + term.gc;
        }
      }
    }
  }
  bundle.recon_total = recon_sum;
  bundle.gc_total = gc_sum;
  bundle.smooth_total = smooth_loss(t, up_a[num_scales - 1], *inputs.image_a, cfg.eps) +
                        smooth_loss(t, up_b[num_scales - 1], *inputs.image_b, cfg.eps);
  bundle.total = total_loss(t, bundle.recon_total, bundle.gc_total, bundle.smooth_total,
                            std::nullopt, cfg);
  return bundle;
}

}  // namespace hiervo::losses
