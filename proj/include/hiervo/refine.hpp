#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "hiervo/geometry.hpp"
#include "hiervo/grid.hpp"
#include "hiervo/losses.hpp"

namespace hiervo::refine {

/// Direct photometric pose optimizer configuration. The optimizer runs
/// coarse-to-fine over an internal image pyramid and plain gradient descent
/// with step halving on the 6-twist at each level.
struct EstimatorConfig {
  int iterations = 100;           // outer descent iterations per pyramid level
  int residual_iterations = 40;   // budget for residual refinement levels
  double initial_step = 0.02;     // first step moves roughly this twist norm
  double tolerance = 1e-7;        // stop when the accepted step falls below
  int pyramid_levels = 3;
  double lambda_rho = 0.15;
  int ssim_radius = 1;
  double eps = 1e-7;
};

/// Optimization produced a non-finite loss; carries the last finite iterate.
class DivergedError : public std::runtime_error {
 public:
  explicit DivergedError(const Twist& last, const std::string& what = "direct_estimate: diverged")
      : std::runtime_error(what), last_iterate(last) {}
  Twist last_iterate;
};

/// Estimation procedure contract: (image A, image B, depth of B, K, initial
/// twist) -> pose mapping B-frame coordinates into A-frame coordinates. The
/// returned pose never scores a worse masked photometric loss than the
/// initial one on the given pair.
using PoseEstimator = std::function<Pose(const Image&, const Image&, const DepthMap&,
                                         const Intrinsics&, const Twist&)>;

/// Masked photometric objective of a warp by `pose` (valid-mask normalized).
double photometric_alignment_loss(const Image& a, const Image& b, const DepthMap& depth_b,
                                  const Intrinsics& k, const Pose& pose,
                                  const EstimatorConfig& cfg);

/// Gradient descent on the 6-twist minimizing the masked photometric loss of
/// inverse_warp(a, depth_b, exp(xi) * exp(init)) against b.
Pose direct_estimate(const Image& a, const Image& b, const DepthMap& depth_b, const Intrinsics& k,
                     const Twist& init, const EstimatorConfig& cfg);

/// Multi-scale depth stack, low to high resolution, each level half the next.
struct DepthPyramid {
  std::vector<DepthMap> levels;

  static DepthPyramid build(const DepthMap& finest, int num_levels);
  const DepthMap& finest() const { return levels.back(); }
  int num_levels() const { return static_cast<int>(levels.size()); }
};

struct RefinementResult {
  std::vector<Pose> poses;               // T_1 .. T_M
  std::vector<Pose> residuals;           // T^r_1 .. T^r_{M-1}
  std::vector<Twist> residual_twists;    // log of each residual
  std::vector<Image> intermediate_views; // X^warp_1 .. X^warp_{M-1}
  std::vector<double> level_losses;      // masked photometric loss of T_m
};

/// Iterative intermediate-view synthesis and residual estimation:
/// T_1 from the raw pair, then for each level a virtual view is synthesized
/// with the current pose and the residual against X^{t+1} is composed on:
/// T_{m+1} = T^r_m * T_m. Residual levels run on a reduced budget.
RefinementResult hierarchical_refine(const Image& xa, const Image& xb, const DepthPyramid& pyr_a,
                                     const DepthPyramid& pyr_b, const Intrinsics& k, int m_levels,
                                     const EstimatorConfig& cfg, const Twist& init = Twist());

/// Free variables of joint depth + pose optimization.
struct JointState {
  std::vector<DepthMap> depth_a;  // pyramid scales, low to high resolution
  std::vector<DepthMap> depth_b;
  std::vector<Twist> twists;  // pose level m = exp(twists[m-1]), b -> a
};

struct JointStepDiagnostics {
  double total = 0, recon = 0, gc = 0, smooth = 0;
  // One row per term: pose level, depth scale, direction (1 = forward),
  // recon value, gc value.
  std::vector<std::array<double, 5>> term_rows;
};

/// One gradient step of the pair loss (Eq. 1 without augmentation) w.r.t.
/// all depth scales and all pose twists. Depths are clamped positive after
/// the step. Throws DivergedError on a non-finite loss.
JointStepDiagnostics joint_refine_step(const Image& xa, const Image& xb, const Intrinsics& k,
                                       JointState* state, double depth_lr, double pose_lr,
                                       const losses::LossConfig& cfg);

}  // namespace hiervo::refine
