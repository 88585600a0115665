#include "hiervo/augment.hpp"

#include <deque>

#include "hiervo/synthdata.hpp"

namespace hiervo::augment {

Pose PoseSampler::sample_at(uint64_t index) const {
  const auto draw = [&](uint64_t lane, double range) {
    return (2.0 * hash_unit(seed_, index + 1, lane) - 1.0) * range;
  };
  const double rx = draw(1, max_rotation_);
  const double ry = draw(2, max_rotation_);
  const double rz = draw(3, max_rotation_);
  const Eigen::Matrix3d rot =
      (so3::exp(Eigen::Vector3d(rx, 0, 0)) * so3::exp(Eigen::Vector3d(0, ry, 0)) *
       so3::exp(Eigen::Vector3d(0, 0, rz)));
  const Eigen::Vector3d trans(draw(4, max_translation_), draw(5, max_translation_),
                              draw(6, max_translation_));
  return Pose(rot, trans);
}

DepthMap fill_depth_nearest(const DepthMap& depth, const Mask& valid) {
  const int H = depth.height(), W = depth.width();
  DepthMap out = depth;
  std::vector<char> assigned(static_cast<size_t>(H) * W);
  std::deque<int> queue;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (valid.at(y, x) > 0.5) {
        assigned[static_cast<size_t>(y) * W + x] = 1;
        queue.push_back(y * W + x);
      }
    }
  }
  if (queue.empty()) return out;  // nothing to propagate from
  static constexpr int kDx[4] = {0, -1, 1, 0};
  static constexpr int kDy[4] = {-1, 0, 0, 1};
  while (!queue.empty()) {
    const int idx = queue.front();
    queue.pop_front();
    const int y = idx / W, x = idx % W;
    for (int n = 0; n < 4; ++n) {
      const int yy = y + kDy[n], xx = x + kDx[n];
      if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
      char& mark = assigned[static_cast<size_t>(yy) * W + xx];
      if (mark) continue;
      mark = 1;
      out.at(yy, xx) = out.at(y, x);
      queue.push_back(yy * W + xx);
    }
  }
  return out;
}

AugmentedSample make_augmented_pair(const Image& image, const DepthMap& depth,
                                    const Intrinsics& k, PoseSampler& sampler,
                                    const FillConfig& fill) {
  AugmentedSample sample;
  sample.original = image;
  sample.k = k;
  sample.label = sampler.sample();
  const ForwardWarpResult fw = forward_warp(image, depth, sample.label, k);
  const HoleFillResult hf = fill_holes(fw, fill.radius, fill.iterations);
  sample.augmented = hf.image;
  sample.h_prime = hf.h_prime;
  sample.h2 = hf.h2;
  sample.h3 = hf.h3;
  sample.aug_depth = fill_depth_nearest(fw.splat_depth, fw.hole_mask);
  return sample;
}

std::pair<Pose, double> score_estimator(const AugmentedSample& sample,
                                        const refine::PoseEstimator& estimator,
                                        const losses::AugLossParams& params) {
  // The estimator contract maps (A, B, depth of B) to the B -> A transform;
  // with A = original and B = augmented that is the inverse of the label
  // convention, so flip it before comparing.
  const Pose raw =
      estimator(sample.original, sample.augmented, sample.aug_depth, sample.k, Twist());
  const Pose estimate = invert(raw);
  const auto [t_est, q_est] = pose_to_tq(estimate);
  const auto [t_label, q_label] = pose_to_tq(sample.label);

  ad::Tape tape;
  Grid tg(1, 3, 1), qg(1, 4, 1);
  for (int i = 0; i < 3; ++i) tg.data()[i] = t_est[i];
  qg.data()[0] = q_est.w;
  qg.data()[1] = q_est.x;
  qg.data()[2] = q_est.y;
  qg.data()[3] = q_est.z;
  ad::Var loss = losses::aug_pose_loss(tape, tape.leaf(std::move(tg)), tape.leaf(std::move(qg)),
                                       t_label, q_label, tape.leaf(Grid::scalar(params.w_t)),
                                       tape.leaf(Grid::scalar(params.w_q)));
  return {estimate, tape.value(loss).scalar_value()};
}

}  // namespace hiervo::augment
