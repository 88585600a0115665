#pragma once

#include <string>

#include "hiervo/metrics.hpp"

namespace hiervo {

/// KITTI odometry pose file: one line per frame, the row-major top 3x4 of
/// the camera-to-world matrix as 12 space-separated reals.
Trajectory read_kitti_poses(const std::string& path);
void write_kitti_poses(const std::string& path, const Trajectory& trajectory);

}  // namespace hiervo
