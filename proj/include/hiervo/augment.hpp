#pragma once

#include <cstdint>
#include <utility>

#include "hiervo/geometry.hpp"
#include "hiervo/grid.hpp"
#include "hiervo/losses.hpp"
#include "hiervo/refine.hpp"
#include "hiervo/warp.hpp"

namespace hiervo::augment {

/// Uniform 6-DoF pose sampler. Rotations are composed from per-axis draws in
/// fixed x-y-z order; identical seeds reproduce identical sequences, and each
/// sample depends only on (seed, index) so generation parallelizes.
class PoseSampler {
 public:
  PoseSampler(double max_rotation_rad, double max_translation_m, uint64_t seed)
      : max_rotation_(max_rotation_rad), max_translation_(max_translation_m), seed_(seed) {
    if (max_rotation_rad < 0 || max_translation_m < 0) {
      throw std::invalid_argument("PoseSampler: negative range");
    }
  }

  Pose sample() { return sample_at(counter_++); }
  Pose sample_at(uint64_t index) const;

  double max_rotation() const { return max_rotation_; }
  double max_translation() const { return max_translation_; }

 private:
  double max_rotation_;
  double max_translation_;
  uint64_t seed_;
  uint64_t counter_ = 0;
};

struct FillConfig {
  int radius = 1;
  int iterations = 2;
};

/// Forward-warped view with hole treatment and the exact pose label
/// (T_aug maps source-frame coordinates into augmented-frame coordinates).
struct AugmentedSample {
  Image original;
  Image augmented;
  Pose label;
  Mask h_prime, h2, h3;
  DepthMap aug_depth;  // splatted depth, holes filled by nearest valid pixel
  Intrinsics k;
};

/// Depth holes filled with the value of the nearest (BFS) valid pixel.
DepthMap fill_depth_nearest(const DepthMap& depth, const Mask& valid);

AugmentedSample make_augmented_pair(const Image& image, const DepthMap& depth,
                                    const Intrinsics& k, PoseSampler& sampler,
                                    const FillConfig& fill);

/// Runs the estimator on (original, augmented) with the splatted depth,
/// brings the estimate into the label convention and scores Eq.-16 style:
/// returns the estimated pose (source -> augmented frame) and the loss.
std::pair<Pose, double> score_estimator(const AugmentedSample& sample,
                                        const refine::PoseEstimator& estimator,
                                        const losses::AugLossParams& params);

}  // namespace hiervo::augment
