#include "hiervo/warp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hiervo {

namespace {

// Shared forward kernel: per target pixel, backproject with the target
// depth, transform by t and project. Behind-camera or non-positive-depth
// pixels are sanitized so they never sample and carry no gradient.
void warp_coords_kernel(const DepthMap& depth, const Pose& t, const Intrinsics& k, Grid* coords,
                        Mask* in_front) {
  const int H = depth.height(), W = depth.width();
  *coords = Grid(H, W, 3);
  *in_front = Mask(H, W, 1);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double d = depth.at(y, x);
      bool ok = d > 0;
      Eigen::Vector3d p;
      if (ok) {
        p = t.apply(d * Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0));
        ok = p.z() > kEpsZ;
      }
      if (ok) {
        coords->at(y, x, 0) = k.fx * p.x() / p.z() + k.cx;
        coords->at(y, x, 1) = k.fy * p.y() / p.z() + k.cy;
        coords->at(y, x, 2) = p.z();
        in_front->at(y, x) = 1.0;
      } else {
        coords->at(y, x, 0) = -10.0;
        coords->at(y, x, 1) = -10.0;
        coords->at(y, x, 2) = 1.0;
      }
    }
  }
}

Mask mask_and(const Mask& a, const Mask& b) {
  Mask out(a.height(), a.width(), 1);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

}  // namespace

WarpResult inverse_warp(const Image& source, const DepthMap& target_depth, const Pose& t,
                        const Intrinsics& k, const DepthMap* source_depth) {
  if (target_depth.channels() != 1) {
    throw std::invalid_argument("inverse_warp: depth must be single-channel");
  }
  if (source_depth && !(source_depth->height() == source.height() &&
                        source_depth->width() == source.width())) {
    throw std::invalid_argument("inverse_warp: source depth size mismatch");
  }
  Grid coords;
  Mask in_front;
  warp_coords_kernel(target_depth, t, k, &coords, &in_front);
  const int H = coords.height(), W = coords.width();
  Grid u(H, W, 1), v(H, W, 1);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      u.at(y, x) = coords.at(y, x, 0);
      v.at(y, x) = coords.at(y, x, 1);
    }
  }
  WarpResult out;
  Mask sample_valid;
  sample_grid(source, u, v, &out.warped_image, &sample_valid);
  out.projected_depth = DepthMap(H, W, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) out.projected_depth.at(y, x) = coords.at(y, x, 2);
  if (source_depth) {
    Mask dummy;
    sample_grid(*source_depth, u, v, &out.sampled_depth, &dummy);
  } else {
    out.sampled_depth = DepthMap(H, W, 1);
  }
  out.valid = mask_and(in_front, sample_valid);
  return out;
}

TapedWarpCoords warp_coords(ad::Tape& tape, ad::Var target_depth, ad::Var twist,
                            const Pose& base, const Intrinsics& k, bool invert_pose) {
  const Grid& depth = tape.value(target_depth);
  const Grid& xi_grid = tape.value(twist);
  if (depth.channels() != 1) throw std::invalid_argument("warp_coords: depth must be single-channel");
  if (xi_grid.size() != 6) throw std::invalid_argument("warp_coords: twist must have 6 elements");

  Eigen::Matrix<double, 6, 1> xi;
  for (int i = 0; i < 6; ++i) xi[i] = xi_grid.data()[i];
  const Pose delta = exp_twist(Twist(xi));
  const Pose t_total = invert_pose ? invert(compose(delta, base)) : compose(delta, base);

  Grid coords;
  Mask in_front;
  warp_coords_kernel(depth, t_total, k, &coords, &in_front);
  for (double m : in_front.data()) tape.note(m > 0.5 ? 1u : 0u);

  // Backward works in the frame of the exponential: mu = +-xi, with the
  // point X entering exp(mu) and adjoints mapped through the surrounding
  // constant transforms.
  const double sign = invert_pose ? -1.0 : 1.0;
  const Eigen::Matrix<double, 6, 1> mu = sign * xi;
  const Eigen::Vector3d mu_rho = mu.head<3>();
  const Eigen::Vector3d mu_phi = mu.tail<3>();
  const Eigen::Matrix3d r_mu = so3::exp(mu_phi);
  const Eigen::Matrix3d jl = so3::left_jacobian(mu_phi);
  const std::array<Eigen::Matrix3d, 3> djl = so3::left_jacobian_deriv(mu_phi);
  const Eigen::Matrix3d base_r = base.rotation();
  const Eigen::Vector3d base_t = base.translation();
  // d(output point)/d(depth) direction factor, per case.
  const Eigen::Matrix3d c_depth = invert_pose ? Eigen::Matrix3d(base_r.transpose() * r_mu)
                                              : Eigen::Matrix3d(r_mu * base_r);
  const Eigen::Vector3d jl_t = jl * mu_rho;  // translation of exp(mu)

  const int id_depth = target_depth.id();
  const int id_twist = twist.id();
  const Mask valid_copy = in_front;

  auto bw = [=](ad::Tape& t, int self, const Grid& adj) {
    const Grid& out = t.value(self);
    Grid* gd = t.adj(id_depth);
    Grid* gt = t.adj(id_twist);
    if (!gd && !gt) return;
    Eigen::Matrix<double, 6, 1> mu_bar = Eigen::Matrix<double, 6, 1>::Zero();
    const int H = out.height(), W = out.width();
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (valid_copy.at(y, x) < 0.5) continue;
        const double u = out.at(y, x, 0), v = out.at(y, x, 1), wz = out.at(y, x, 2);
        const double au = adj.at(y, x, 0), av = adj.at(y, x, 1), ad_ = adj.at(y, x, 2);
        // Adjoint of the transformed point from the projection chain.
        Eigen::Vector3d w_bar(au * k.fx / wz, av * k.fy / wz,
                              -(au * (u - k.cx) + av * (v - k.cy)) / wz + ad_);
        if (gd) {
          const Eigen::Vector3d dir((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
          gd->at(y, x) += w_bar.dot(c_depth * dir);
        }
        if (gt) {
          // Recover the exp(mu) output point m, then rot-part point via
          // R_mu X = m - Jl mu_rho.
          Eigen::Vector3d w_pt(wz * (u - k.cx) / k.fx, wz * (v - k.cy) / k.fy, wz);
          Eigen::Vector3d m_bar, m_pt;
          if (invert_pose) {
            m_bar = base_r * w_bar;
            m_pt = base_r * w_pt + base_t;
          } else {
            m_bar = w_bar;
            m_pt = w_pt;
          }
          const Eigen::Vector3d rx = m_pt - jl_t;
          mu_bar.head<3>() += jl.transpose() * m_bar;
          for (int i = 0; i < 3; ++i) {
            mu_bar[3 + i] += m_bar.dot(jl.col(i).cross(rx) + djl[i] * mu_rho);
          }
        }
      }
    }
    if (gt) {
      for (int i = 0; i < 6; ++i) gt->data()[i] += sign * mu_bar[i];
    }
  };

  TapedWarpCoords result;
  result.coords = tape.make_node(std::move(coords), {id_depth, id_twist}, bw);
  result.in_front = std::move(in_front);
  return result;
}

TapedWarp inverse_warp_taped(ad::Tape& tape, const Image& source, ad::Var target_depth,
                             ad::Var twist, const Pose& base, const Intrinsics& k,
                             bool invert_pose, ad::Var source_depth) {
  TapedWarpCoords wc = warp_coords(tape, target_depth, twist, base, k, invert_pose);
  ad::Var u = tape.channel_slice(wc.coords, 0);
  ad::Var v = tape.channel_slice(wc.coords, 1);
  TapedWarp out;
  out.projected_depth = tape.channel_slice(wc.coords, 2);
  Mask sample_valid;
  out.warped = tape.sample(tape.constant(source), u, v, &sample_valid);
  if (source_depth.valid()) {
    out.sampled_depth = tape.sample(source_depth, u, v);
  }
  out.valid = mask_and(wc.in_front, sample_valid);
  return out;
}

ForwardWarpResult forward_warp(const Image& source, const DepthMap& source_depth,
                               const Pose& t_aug, const Intrinsics& k) {
  std::vector<int> order(static_cast<size_t>(source.height()) * source.width());
  std::iota(order.begin(), order.end(), 0);
  return forward_warp_ordered(source, source_depth, t_aug, k, order);
}

ForwardWarpResult forward_warp_ordered(const Image& source, const DepthMap& source_depth,
                                       const Pose& t_aug, const Intrinsics& k,
                                       std::span<const int> order) {
  const int H = source.height(), W = source.width(), C = source.channels();
  if (source_depth.height() != H || source_depth.width() != W || source_depth.channels() != 1) {
    throw std::invalid_argument("forward_warp: depth size mismatch");
  }
  struct Winner {
    double src_depth = std::numeric_limits<double>::infinity();
    double proj_depth = 0.0;
    int index = std::numeric_limits<int>::max();
  };
  std::vector<Winner> winners(static_cast<size_t>(H) * W);
  for (int idx : order) {
    const int y = idx / W, x = idx % W;
    const double d = source_depth.at(y, x);
    if (!(d > 0)) continue;
    const Eigen::Vector3d p =
        t_aug.apply(d * Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0));
    if (p.z() <= kEpsZ) continue;
    const int tx = static_cast<int>(std::lround(k.fx * p.x() / p.z() + k.cx));
    const int ty = static_cast<int>(std::lround(k.fy * p.y() / p.z() + k.cy));
    if (tx < 0 || tx >= W || ty < 0 || ty >= H) continue;
    Winner& w = winners[static_cast<size_t>(ty) * W + tx];
    if (d < w.src_depth || (d == w.src_depth && idx < w.index)) {
      w.src_depth = d;
      w.proj_depth = p.z();
      w.index = idx;
    }
  }
  ForwardWarpResult out;
  out.image = Image(H, W, C);
  out.splat_depth = DepthMap(H, W, 1);
  out.hole_mask = Mask(H, W, 1);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const Winner& w = winners[static_cast<size_t>(y) * W + x];
      if (w.index == std::numeric_limits<int>::max()) continue;
      const int sy = w.index / W, sx = w.index % W;
      for (int c = 0; c < C; ++c) out.image.at(y, x, c) = source.at(sy, sx, c);
      out.splat_depth.at(y, x) = w.proj_depth;
      out.hole_mask.at(y, x) = 1.0;
    }
  }
  return out;
}

HoleFillResult fill_holes(const ForwardWarpResult& fw, int radius, int iterations) {
  if (radius < 1 || iterations < 1) throw std::invalid_argument("fill_holes: bad parameters");
  const int H = fw.image.height(), W = fw.image.width(), C = fw.image.channels();
  HoleFillResult out;
  out.h_prime = fw.hole_mask;
  out.h2 = dilate(fw.hole_mask, radius, iterations);
  out.h3 = Mask(H, W, 1);
  for (size_t i = 0; i < out.h3.size(); ++i) {
    out.h3.data()[i] = out.h2.data()[i] - out.h_prime.data()[i] > 0.5 ? 1.0 : 0.0;
  }
  out.image = fw.image;
  std::vector<char> assigned(static_cast<size_t>(H) * W);
  int pending = 0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      assigned[static_cast<size_t>(y) * W + x] = out.h_prime.at(y, x) > 0.5;
      if (out.h3.at(y, x) > 0.5) ++pending;
    }
  }
  static constexpr int kDx[4] = {0, 0, -1, 1};
  static constexpr int kDy[4] = {-1, 1, 0, 0};
  // Synchronous diffusion waves over the ring H3: every wave fills pixels
  // with at least one already-valid 4-neighbor using the neighbors' mean.
  while (pending > 0) {
    struct Fill {
      int y, x;
      double v[3];
    };
    std::vector<Fill> wave;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (out.h3.at(y, x) < 0.5 || assigned[static_cast<size_t>(y) * W + x]) continue;
        int n = 0;
        double acc[3] = {0, 0, 0};
        for (int k = 0; k < 4; ++k) {
          const int yy = y + kDy[k], xx = x + kDx[k];
          if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
          if (!assigned[static_cast<size_t>(yy) * W + xx]) continue;
          ++n;
          for (int c = 0; c < C; ++c) acc[c] += out.image.at(yy, xx, c);
        }
        if (n == 0) continue;
        Fill f{y, x, {0, 0, 0}};
        for (int c = 0; c < C; ++c) f.v[c] = acc[c] / n;
        wave.push_back(f);
      }
    }
    if (wave.empty()) break;  // enclosed ring pixels stay zero
    for (const Fill& f : wave) {
      for (int c = 0; c < C; ++c) out.image.at(f.y, f.x, c) = f.v[c];
      assigned[static_cast<size_t>(f.y) * W + f.x] = 1;
      --pending;
    }
  }
  // Continuous holes beyond the dilation reach are zeroed.
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (out.h2.at(y, x) < 0.5) {
        for (int c = 0; c < C; ++c) out.image.at(y, x, c) = 0.0;
      }
    }
  }
  return out;
}

}  // namespace hiervo
