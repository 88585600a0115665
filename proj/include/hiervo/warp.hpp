#pragma once

#include <span>

#include "hiervo/autodiff.hpp"
#include "hiervo/geometry.hpp"
#include "hiervo/grid.hpp"

namespace hiervo {

/// Per-target-pixel outputs of differentiable inverse warping.
struct WarpResult {
  Image warped_image;        // source sampled at projected coordinates
  DepthMap projected_depth;  // z after the transform (1.0 where invalid)
  DepthMap sampled_depth;    // source depth sampled like the image (0 without source depth)
  Mask valid;                // in front of camera AND sample in bounds
};

/// Warps `source` onto the target grid: every target pixel is backprojected
/// with `target_depth`, transformed by `t` (target frame -> source frame) and
/// bilinearly sampled. `source_depth`, when given, is sampled the same way.
WarpResult inverse_warp(const Image& source, const DepthMap& target_depth, const Pose& t,
                        const Intrinsics& k, const DepthMap* source_depth = nullptr);

/// Taped counterpart, differentiable w.r.t. the twist and both depth maps.
/// The effective pose is exp(twist) * base, inverted first when
/// `invert_pose` is set (used for the reverse temporal direction).
struct TapedWarp {
  ad::Var warped;
  ad::Var projected_depth;
  ad::Var sampled_depth;  // invalid Var when no source depth was given
  Mask valid;
};
TapedWarp inverse_warp_taped(ad::Tape& tape, const Image& source, ad::Var target_depth,
                             ad::Var twist, const Pose& base, const Intrinsics& k,
                             bool invert_pose = false, ad::Var source_depth = {});

/// Taped projection coordinates alone: an H x W x 3 node holding (u, v,
/// projected depth) per pixel, plus the in-front mask. Behind-camera pixels
/// are sanitized to u = v = -10 (never samples) and depth = 1.
struct TapedWarpCoords {
  ad::Var coords;  // channels: u, v, projected depth
  Mask in_front;
};
TapedWarpCoords warp_coords(ad::Tape& tape, ad::Var target_depth, ad::Var twist,
                            const Pose& base, const Intrinsics& k, bool invert_pose);

/// Forward splatting of source pixels into a new view (nearest target pixel,
/// z-buffered on *source* depth; ties go to the lowest row-major index).
struct ForwardWarpResult {
  Image image;           // 0 where hole_mask = 0
  DepthMap splat_depth;  // projected depth of the winning pixel, 0 in holes
  Mask hole_mask;        // 1 where some source pixel landed
};
ForwardWarpResult forward_warp(const Image& source, const DepthMap& source_depth,
                               const Pose& t_aug, const Intrinsics& k);
/// Test hook: identical result for any visiting order of source pixels.
ForwardWarpResult forward_warp_ordered(const Image& source, const DepthMap& source_depth,
                                       const Pose& t_aug, const Intrinsics& k,
                                       std::span<const int> order);

/// Hole treatment after forward warping: dilate the valid region (H2),
/// inpaint the thin ring H3 = H2 - H' by iterative 4-neighbor diffusion and
/// zero everything the dilation never reached.
struct HoleFillResult {
  Image image;
  Mask h_prime;  // copy of the input hole mask
  Mask h2;
  Mask h3;
};
HoleFillResult fill_holes(const ForwardWarpResult& fw, int radius, int iterations);

}  // namespace hiervo
