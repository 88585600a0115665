#include "hiervo/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiervo/parallel.hpp"

namespace hiervo {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double hash_unit(uint64_t seed, uint64_t a, uint64_t b) {
  const uint64_t h = splitmix64(seed ^ splitmix64(a ^ splitmix64(b)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Intrinsics default_intrinsics(int width, int height) {
  return Intrinsics(0.58 * width, 0.58 * width, (width - 1) / 2.0, (height - 1) / 2.0, width,
                    height);
}

namespace {

// C1-smooth lattice value noise in [0, 1].
double value_noise(uint64_t seed, double u, double v, double wavelength) {
  const double su = u / wavelength, sv = v / wavelength;
  const double fu = std::floor(su), fv = std::floor(sv);
  const auto iu = static_cast<int64_t>(fu), iv = static_cast<int64_t>(fv);
  const double tu = su - fu, tv = sv - fv;
  const double wu = tu * tu * (3 - 2 * tu);  // smoothstep
  const double wv = tv * tv * (3 - 2 * tv);
  const auto corner = [&](int64_t du, int64_t dv) {
    return hash_unit(seed, static_cast<uint64_t>(iu + du) * 2654435761u,
                     static_cast<uint64_t>(iv + dv) * 40503u);
  };
  const double a = corner(0, 0), b = corner(1, 0), c = corner(0, 1), d = corner(1, 1);
  return (a * (1 - wu) + b * wu) * (1 - wv) + (c * (1 - wu) + d * wu) * wv;
}

// Diffuse procedural texture: value-noise octaves plus one stripe component.
// Texture coordinates arrive pre-divided by the surface's depth scale, so
// every surface shows roughly the same pixel-space frequency band and stays
// resolvable under 1-sample-per-pixel rendering.
double texture_value(uint64_t scene_seed, uint32_t texture_id, int channel, double u, double v) {
  const uint64_t tseed = splitmix64(scene_seed ^ (0x100000001b3ull * (texture_id + 1)) ^
                                    (0x9e3779b9ull * (channel + 1)));
  static constexpr double kWavelength[3] = {4.0, 1.8, 0.9};
  static constexpr double kAmplitude[3] = {0.18, 0.12, 0.07};
  double val = 0.5;
  for (int o = 0; o < 3; ++o) {
    val += kAmplitude[o] * (2.0 * value_noise(tseed + o, u, v, kWavelength[o]) - 1.0);
  }
  const double angle = 2 * M_PI * hash_unit(tseed, 71, 3);
  const double lambda = 1.4 + 1.6 * hash_unit(tseed, 72, 9);
  val += 0.06 * std::sin(2 * M_PI * (u * std::cos(angle) + v * std::sin(angle)) / lambda);
  return std::clamp(val, 0.03, 0.97);
}

// Depth-proportional texture coordinate scale (reference depth 10 m).
double tex_scale_for_depth(double z) { return std::max(z, 1.0) / 10.0; }

struct Hit {
  double s = std::numeric_limits<double>::infinity();
  uint32_t texture_id = 0;
  double u = 0, v = 0;  // texture coordinates, world meters / tex_scale
};

void hit_rect(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const SceneRect& r, Hit* best) {
  if (std::fabs(d.z()) < 1e-12) return;
  const double s = (r.z - o.z()) / d.z();
  if (s <= 1e-9 || s >= best->s) return;
  const double x = o.x() + s * d.x(), y = o.y() + s * d.y();
  if (x < r.x0 || x > r.x1 || y < r.y0 || y > r.y1) return;
  const double ts = tex_scale_for_depth(r.z);
  *best = Hit{s, r.texture_id, x / ts, y / ts};
}

void hit_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const SceneBox& b, Hit* best) {
  double s_enter = -std::numeric_limits<double>::infinity();
  double s_exit = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::fabs(d[a]) < 1e-12) {
      if (o[a] < b.lo[a] || o[a] > b.hi[a]) return;
      continue;
    }
    double s0 = (b.lo[a] - o[a]) / d[a];
    double s1 = (b.hi[a] - o[a]) / d[a];
    if (s0 > s1) std::swap(s0, s1);
    if (s0 > s_enter) {
      s_enter = s0;
      enter_axis = a;
    }
    s_exit = std::min(s_exit, s1);
  }
  if (enter_axis < 0 || s_enter > s_exit || s_enter <= 1e-9 || s_enter >= best->s) return;
  const Eigen::Vector3d p = o + s_enter * d;
  double tu, tv;
  switch (enter_axis) {
    case 0: tu = p.y(); tv = p.z(); break;
    case 1: tu = p.x(); tv = p.z(); break;
    default: tu = p.x(); tv = p.y(); break;
  }
  const double ts = tex_scale_for_depth(b.lo.z());
  *best = Hit{s_enter, b.texture_id, tu / ts, tv / ts};
}

}  // namespace

Scene make_random_scene(uint64_t seed) {
  Scene scene;
  scene.seed = seed;
  scene.background_z = 50.0 + 12.0 * hash_unit(seed, 0, 1);
  scene.background_texture = 0;
  uint32_t next_texture = 1;
  const int num_rects = 5 + static_cast<int>(hash_unit(seed, 0, 2) * 3);
  for (int i = 0; i < num_rects; ++i) {
    SceneRect r;
    r.z = 4.0 + 24.0 * hash_unit(seed, 1, i);
    const double cx = (hash_unit(seed, 2, i) - 0.5) * 0.9 * r.z;
    const double cy = (hash_unit(seed, 3, i) - 0.5) * 0.55 * r.z;
    const double hw = 1.2 + 4.0 * hash_unit(seed, 4, i);
    const double hh = 1.0 + 3.0 * hash_unit(seed, 5, i);
    r.x0 = cx - hw;
    r.x1 = cx + hw;
    r.y0 = cy - hh;
    r.y1 = cy + hh;
    r.texture_id = next_texture++;
    scene.rects.push_back(r);
  }
  const int num_boxes = 2 + static_cast<int>(hash_unit(seed, 0, 3) * 2);
  for (int i = 0; i < num_boxes; ++i) {
    SceneBox b;
    const double z0 = 5.0 + 14.0 * hash_unit(seed, 6, i);
    const double cx = (hash_unit(seed, 7, i) - 0.5) * 0.8 * z0;
    const double cy = (hash_unit(seed, 8, i) - 0.5) * 0.5 * z0;
    const double sx = 0.8 + 2.4 * hash_unit(seed, 9, i);
    const double sy = 0.8 + 2.0 * hash_unit(seed, 10, i);
    const double sz = 0.8 + 2.4 * hash_unit(seed, 11, i);
    b.lo = Eigen::Vector3d(cx - sx / 2, cy - sy / 2, z0);
    b.hi = Eigen::Vector3d(cx + sx / 2, cy + sy / 2, z0 + sz);
    b.texture_id = next_texture++;
    scene.boxes.push_back(b);
  }
  return scene;
}

void render(const Scene& scene, const Pose& cam_to_world, const Intrinsics& k, Image* image,
            DepthMap* depth) {
  const int H = k.height, W = k.width;
  *image = Image(H, W, 3);
  *depth = DepthMap(H, W, 1);
  const Eigen::Vector3d origin = cam_to_world.translation();
  const Eigen::Matrix3d rot = cam_to_world.rotation();
  parallel_for(0, H, [&](int y) {
    for (int x = 0; x < W; ++x) {
      // Camera ray with unit z in the camera frame, so the hit parameter s
      // is directly the camera-frame depth.
      const Eigen::Vector3d dir_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d d = rot * dir_cam;
      Hit hit;
      hit_rect(origin, d,
               SceneRect{scene.background_z, -1e9, 1e9, -1e9, 1e9, scene.background_texture},
               &hit);
      for (const SceneRect& r : scene.rects) hit_rect(origin, d, r, &hit);
      for (const SceneBox& b : scene.boxes) hit_box(origin, d, b, &hit);
      if (!std::isfinite(hit.s)) {  // ray parallel to the background; should not happen
        depth->at(y, x) = 80.0;
        for (int c = 0; c < 3; ++c) image->at(y, x, c) = 0.5;
        continue;
      }
      depth->at(y, x) = hit.s;
      for (int c = 0; c < 3; ++c) {
        image->at(y, x, c) = texture_value(scene.seed, hit.texture_id, c, hit.u, hit.v);
      }
    }
  });
}

FramePair make_pair(const Scene& scene, const Pose& cam_a_to_world, const Pose& motion,
                    const Intrinsics& k) {
  FramePair pair;
  pair.k = k;
  pair.t_gt = motion;
  render(scene, cam_a_to_world, k, &pair.image_a, &pair.depth_a);
  render(scene, compose(cam_a_to_world, motion), k, &pair.image_b, &pair.depth_b);
  return pair;
}

FrameSequence make_trajectory(const Scene& scene, const std::vector<Pose>& cams_to_world,
                              const Intrinsics& k) {
  FrameSequence seq;
  seq.trajectory = cams_to_world;
  seq.images.resize(cams_to_world.size());
  seq.depths.resize(cams_to_world.size());
  for (size_t i = 0; i < cams_to_world.size(); ++i) {
    render(scene, cams_to_world[i], k, &seq.images[i], &seq.depths[i]);
  }
  return seq;
}

}  // namespace hiervo
