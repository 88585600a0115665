#include "hiervo/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hiervo {

namespace {

double median_of(std::vector<double> values) {
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    m = 0.5 * (m + lower);
  }
  return m;
}

double rotation_angle(const Eigen::Matrix3d& r) {
  return std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
}

std::vector<double> arc_lengths(const Trajectory& t) {
  std::vector<double> dist(t.poses.size(), 0.0);
  for (size_t i = 1; i < t.poses.size(); ++i) {
    dist[i] = dist[i - 1] + (t.poses[i].translation() - t.poses[i - 1].translation()).norm();
  }
  return dist;
}

int last_frame_for_length(const std::vector<double>& dist, int first, double len) {
  for (size_t i = first; i < dist.size(); ++i) {
    if (dist[i] > dist[first] + len) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& valid,
                           DepthScaling scaling, double cap) {
  if (!pred.same_shape(gt) || pred.channels() != 1 || !valid.same_shape(gt)) {
    throw std::invalid_argument("depth_metrics: shape mismatch");
  }
  std::vector<double> p, g;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (valid.data()[i] > 0.5) {
      p.push_back(pred.data()[i]);
      g.push_back(gt.data()[i]);
    }
  }
  if (p.empty()) throw std::invalid_argument("depth_metrics: empty valid set");
  if (scaling == DepthScaling::Median) {
    const double factor = median_of(g) / median_of(p);
    for (double& v : p) v *= factor;
  }
  for (double& v : p) v = std::clamp(v, 1e-3, cap);
  for (double& v : g) v = std::clamp(v, 1e-3, cap);
  DepthMetrics m;
  const double n = static_cast<double>(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - g[i];
    m.abs_rel += std::fabs(diff) / g[i];
    m.sq_rel += diff * diff / g[i];
    m.rmse += diff * diff;
    const double dl = std::log(p[i]) - std::log(g[i]);
    m.rmse_log += dl * dl;
    const double ratio = std::max(p[i] / g[i], g[i] / p[i]);
    m.delta1 += ratio < 1.25 ? 1 : 0;
    m.delta2 += ratio < 1.25 * 1.25 ? 1 : 0;
    m.delta3 += ratio < 1.25 * 1.25 * 1.25 ? 1 : 0;
  }
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(m.rmse / n);
  m.rmse_log = std::sqrt(m.rmse_log / n);
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  return m;
}

Trajectory Trajectory::from_poses(std::vector<Pose> poses) {
  Trajectory t;
  t.frame_indices.resize(poses.size());
  std::iota(t.frame_indices.begin(), t.frame_indices.end(), 0);
  t.poses = std::move(poses);
  return t;
}

OdomMetrics odom_metrics(const Trajectory& pred_in, const Trajectory& gt, OdomScale scale) {
  if (pred_in.poses.size() != gt.poses.size() || gt.poses.size() < 2) {
    throw std::invalid_argument("odom_metrics: trajectories must have equal length >= 2");
  }
  Trajectory pred = pred_in;
  if (scale == OdomScale::PathRatio) {
    const double len_gt = arc_lengths(gt).back();
    const double len_pred = arc_lengths(pred).back();
    if (len_pred > 1e-12) {
      const double s = len_gt / len_pred;
      for (Pose& p : pred.poses) p = Pose(p.rotation(), s * p.translation());
    }
  }

  OdomMetrics out;

  // ATE after Umeyama similarity alignment of the positions.
  const size_t n = gt.poses.size();
  Eigen::MatrixXd src(3, n), dst(3, n);
  for (size_t i = 0; i < n; ++i) {
    src.col(i) = pred.poses[i].translation();
    dst.col(i) = gt.poses[i].translation();
  }
  const Eigen::Matrix4d align = Eigen::umeyama(src, dst, true);
  double sq = 0;
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d aligned =
        align.topLeftCorner<3, 3>() * src.col(i) + align.topRightCorner<3, 1>();
    sq += (aligned - dst.col(i)).squaredNorm();
  }
  out.ate = std::sqrt(sq / static_cast<double>(n));

  // Relative errors over 100..800 m subsequences, every start frame.
  const std::vector<double> dist = arc_lengths(gt);
  out.length_sufficient = dist.back() >= 100.0;
  if (!out.length_sufficient) return out;
  double t_sum = 0, r_sum = 0;
  int count = 0;
  for (int first = 0; first < static_cast<int>(n); ++first) {
    for (int li = 0; li < 8; ++li) {
      const double len = 100.0 * (li + 1);
      const int last = last_frame_for_length(dist, first, len);
      if (last < 0) continue;
      const Pose delta_gt = compose(invert(gt.poses[first]), gt.poses[last]);
      const Pose delta_pred = compose(invert(pred.poses[first]), pred.poses[last]);
      const Pose err = compose(invert(delta_pred), delta_gt);
      t_sum += err.translation().norm() / len;
      r_sum += rotation_angle(err.rotation()) / len;
      ++count;
    }
  }
  if (count > 0) {
    out.t_rel = 100.0 * t_sum / count;                       // percent
    out.r_rel = (180.0 / M_PI) * 100.0 * r_sum / count;      // deg per 100 m
  }
  return out;
}

}  // namespace hiervo
