#include "hiervo/kitti_io.hpp"

#include <fstream>
#include <sstream>

#include "hiervo/image_io.hpp"

namespace hiervo {

Trajectory read_kitti_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Pose> poses;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[12];
    int count = 0;
    double extra;
    while (count < 12 && (ls >> v[count])) ++count;
    if (count != 12 || (ls >> extra)) {
      throw ParseError(path, lineno, "expected 12 pose values on line " + std::to_string(lineno));
    }
    Eigen::Matrix3d r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    poses.emplace_back(orthonormalized(r), Eigen::Vector3d(v[3], v[7], v[11]));
  }
  return Trajectory::from_poses(std::move(poses));
}

void write_kitti_poses(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const Pose& p : trajectory.poses) {
    const Eigen::Matrix3d& r = p.rotation();
    const Eigen::Vector3d& t = p.translation();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        out << format_double(r(row, col)) << ' ';
      }
      out << format_double(t[row]);
      out << (row == 2 ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace hiervo
