#pragma once

#include <cstdint>
#include <vector>

#include "hiervo/geometry.hpp"
#include "hiervo/grid.hpp"

namespace hiervo {

/// Fronto-parallel textured rectangle on the world plane z = depth.
struct SceneRect {
  double z = 10;
  double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
  uint32_t texture_id = 0;
};

/// Axis-aligned textured box.
struct SceneBox {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Ones();
  uint32_t texture_id = 0;
};

/// Deterministic scene: layered rectangles and boxes in front of a far
/// background plane so that every forward ray hits some surface. All depths
/// seen from cameras near the origin stay within [1, 80] m.
struct Scene {
  std::vector<SceneRect> rects;
  std::vector<SceneBox> boxes;
  double background_z = 60.0;
  uint32_t background_texture = 0;
  uint64_t seed = 0;
};

Scene make_random_scene(uint64_t seed);

/// Analytic per-pixel ray cast (nearest hit wins). `cam_to_world` is the
/// camera pose in world coordinates; depth is the camera-frame z of the hit.
void render(const Scene& scene, const Pose& cam_to_world, const Intrinsics& k, Image* image,
            DepthMap* depth);

/// Two rendered views with exact relative ground truth. `t_gt` maps frame-b
/// camera coordinates into frame-a camera coordinates (equivalently, the
/// camera motion a -> b applied to the camera-to-world pose).
struct FramePair {
  Image image_a, image_b;
  DepthMap depth_a, depth_b;
  Pose t_gt;
  Intrinsics k;
};

FramePair make_pair(const Scene& scene, const Pose& cam_a_to_world, const Pose& motion,
                    const Intrinsics& k);

/// Renders a camera-to-world pose sequence.
struct FrameSequence {
  std::vector<Image> images;
  std::vector<DepthMap> depths;
  std::vector<Pose> trajectory;  // camera-to-world, copied from the input
};
FrameSequence make_trajectory(const Scene& scene, const std::vector<Pose>& cams_to_world,
                              const Intrinsics& k);

/// Deterministic hash helpers shared with the samplers.
uint64_t splitmix64(uint64_t x);
double hash_unit(uint64_t seed, uint64_t a, uint64_t b);  // in [0, 1)

/// Convenience intrinsics: fx = fy = 0.9 * width, principal point centered.
Intrinsics default_intrinsics(int width, int height);

}  // namespace hiervo
