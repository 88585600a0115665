#pragma once

#include <optional>
#include <vector>

#include "hiervo/autodiff.hpp"
#include "hiervo/geometry.hpp"
#include "hiervo/warp.hpp"

namespace hiervo::losses {

/// How multi-scale depths associate with multi-level poses: either all loss
/// terms train everything, or depth gradients are stopped for all terms that
/// use a coarse (non-final) pose.
enum class AssociationMode { AllDepthAllPose, StopDepthForCoarsePose };

struct LossConfig {
  double alpha1 = 1.0;  // reconstruction
  double alpha2 = 0.1;  // geometry consistency
  double alpha3 = 0.5;  // smoothness
  double alpha4 = 2.0;  // pose augmentation
  double lambda_rho = 0.15;
  int ssim_radius = 1;
  double eps = 1e-7;
  AssociationMode mode = AssociationMode::StopDepthForCoarsePose;
};

/// Learnable homoscedastic weights of the augmentation loss.
struct AugLossParams {
  double w_t = 0.0;
  double w_q = 0.0;
};

/// Per-pixel SSIM with (2r+1)^2 box statistics, C1 = 0.01^2, C2 = 0.03^2,
/// clamped to [-1, 1]. Same channel count as the inputs.
ad::Var ssim_map(ad::Tape& tape, ad::Var a, ad::Var b, int radius, double eps);

/// sigma(a, b) = lambda * |a-b|_1 + (1-lambda) * (1 - SSIM) / 2, channel-
/// meaned to a single-channel map and clamped at zero.
ad::Var photometric(ad::Tape& tape, ad::Var a, ad::Var b, double lambda_rho, int ssim_radius,
                    double eps);

/// |dpro - dwarp| / (dpro + dwarp + eps), in [0, 1) for positive depths.
ad::Var depth_diff(ad::Tape& tape, ad::Var dpro, ad::Var dwarp, double eps);

/// 1 - depth_diff.
ad::Var weight_mask(ad::Tape& tape, ad::Var ddiff);

/// Indicator [sigma_warp < sigma_ident]; a gradient-transparent constant.
ad::Var auto_mask(ad::Tape& tape, ad::Var sigma_warp, ad::Var sigma_ident);

/// Mean over all pixels of weight * auto * valid * sigma (division by the
/// full pixel count, not the mask sum).
ad::Var recon_loss(ad::Tape& tape, ad::Var sigma, ad::Var weight, ad::Var auto_m, ad::Var valid);

/// Mean over all pixels of auto * valid * depth_diff.
ad::Var gc_loss(ad::Tape& tape, ad::Var ddiff, ad::Var auto_m, ad::Var valid);

/// Edge-aware smoothness of depth normalized by its minimum; the image
/// gradient factor comes from the channel-mean of `reference`.
ad::Var smooth_loss(ad::Tape& tape, ad::Var depth, const Image& reference, double eps);

/// ||t - t_label|| exp(-w_t) + w_t + ||q - q_label|| exp(-w_q) + w_q.
/// `t_est` is a 1x3 grid, `q_est` a 1x4 grid (w, x, y, z), hemisphere-aligned.
ad::Var aug_pose_loss(ad::Tape& tape, ad::Var t_est, ad::Var q_est,
                      const Eigen::Vector3d& t_label, const Quat& q_label, ad::Var w_t,
                      ad::Var w_q);

/// alpha1 L^R + alpha2 L^GC + alpha3 L^smooth (+ alpha4 L^aug when given).
ad::Var total_loss(ad::Tape& tape, ad::Var recon, ad::Var gc, ad::Var smooth,
                   std::optional<ad::Var> aug, const LossConfig& cfg);

/// One reconstruction/geometry pair for pose level u and depth scale v in a
/// given temporal direction.
struct LossTerm {
  int pose_level = 1;   // 1-based, M = highest refinement
  int depth_scale = 1;  // 1-based, N = finest
  bool forward_direction = true;
  ad::Var recon, gc;
};

struct PairInputs {
  const Image* image_a = nullptr;  // X^t
  const Image* image_b = nullptr;  // X^{t+1}
  Intrinsics k;
};

/// Free variables of joint optimization. Depth scales run low to high
/// resolution; pose m is exp(twists[m]) mapping frame-b coordinates into
/// frame-a coordinates.
struct PairVariables {
  std::vector<ad::Var> depth_a;
  std::vector<ad::Var> depth_b;
  std::vector<ad::Var> twists;
};

struct PairLossBundle {
  std::vector<LossTerm> terms;
  ad::Var recon_total;   // L^R summed per the stop-gradient aggregation
  ad::Var gc_total;      // L^GC
  ad::Var smooth_total;  // finest-scale smoothness, both frames
  ad::Var total;         // Eq. 1 without the augmentation term
};

/// Builds every (pose level, depth scale, direction) term. Under
/// StopDepthForCoarsePose, terms with pose_level < M receive stop-gradient
/// wrapped depths, so depth gradients flow only from the finest pose while
/// pose gradients flow everywhere. Forward values are identical across modes.
PairLossBundle build_pair_losses(ad::Tape& tape, const PairInputs& inputs,
                                 const PairVariables& vars, const LossConfig& cfg);

}  // namespace hiervo::losses
