#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hiervo/image_ops.hpp"
#include "hiervo/synthdata.hpp"
#include "hiervo/warp.hpp"
#include "testutil.hpp"

using namespace hiervo;

TEST_CASE("a bare background plane renders constant depth") {
  Scene scene;
  scene.background_z = 10.0;
  scene.seed = 3;
  const Intrinsics k = default_intrinsics(32, 24);
  Image img;
  DepthMap depth;
  render(scene, Pose::identity(), k, &img, &depth);
  for (double d : depth.data()) CHECK(d == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("advancing the camera by one meter brings the plane one meter closer") {
  Scene scene;
  scene.background_z = 10.0;
  const Intrinsics k = default_intrinsics(16, 16);
  Image img;
  DepthMap depth;
  const Pose cam = exp_twist(Twist(Eigen::Vector3d(0, 0, 1), Eigen::Vector3d::Zero()));
  render(scene, cam, k, &img, &depth);
  for (double d : depth.data()) CHECK(d == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("rendering is deterministic in the seed") {
  const Scene scene = make_random_scene(99);
  const Scene scene2 = make_random_scene(99);
  const Intrinsics k = default_intrinsics(48, 32);
  Image a, b;
  DepthMap da, db;
  render(scene, Pose::identity(), k, &a, &da);
  render(scene2, Pose::identity(), k, &b, &db);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
  for (size_t i = 0; i < da.size(); ++i) CHECK(da.data()[i] == db.data()[i]);
}

TEST_CASE("depth maps stay positive and within the 80 m cap") {
  for (uint64_t seed : {1ull, 2ull, 3ull, 17ull}) {
    const Scene scene = make_random_scene(seed);
    const Intrinsics k = default_intrinsics(64, 40);
    Image img;
    DepthMap depth;
    render(scene, exp_twist(Twist(Eigen::Vector3d(0.2, 0.1, -0.4), Eigen::Vector3d(0.02, -0.03, 0.01))),
           k, &img, &depth);
    for (double d : depth.data()) {
      CHECK(d > 0.0);
      CHECK(d <= 80.0);
    }
    for (double v : img.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("textures carry usable gradients on at least half the pixels") {
  const Scene scene = make_random_scene(5);
  const Intrinsics k = default_intrinsics(96, 64);
  Image img;
  DepthMap depth;
  render(scene, Pose::identity(), k, &img, &depth);
  const Grid mono = channel_mean(img);
  const Grid gx = grad_x(mono), gy = grad_y(mono);
  int strong = 0;
  for (size_t i = 0; i < gx.size(); ++i) {
    if (std::hypot(gx.data()[i], gy.data()[i]) > 5e-3) ++strong;
  }
  CHECK(strong >= static_cast<int>(gx.size()) / 2);
}

TEST_CASE("identity motion produces identical frames") {
  const Scene scene = make_random_scene(11);
  const Intrinsics k = default_intrinsics(40, 32);
  const FramePair pair = make_pair(scene, Pose::identity(), Pose::identity(), k);
  for (size_t i = 0; i < pair.image_a.size(); ++i)
    CHECK(pair.image_a.data()[i] == pair.image_b.data()[i]);
  for (size_t i = 0; i < pair.depth_a.size(); ++i)
    CHECK(pair.depth_a.data()[i] == pair.depth_b.data()[i]);
}

TEST_CASE("rendered pairs are warp-consistent under the ground-truth pose") {
  std::mt19937_64 rng(31);
  for (uint64_t seed : {7ull, 8ull, 9ull}) {
    const Scene scene = make_random_scene(seed);
    const Intrinsics k = default_intrinsics(96, 64);
    const Twist motion = testutil::random_twist(rng, 0.4, 4.0 * M_PI / 180.0);
    const FramePair pair = make_pair(scene, Pose::identity(), exp_twist(motion), k);
    const WarpResult warped = inverse_warp(pair.image_a, pair.depth_b, pair.t_gt, k, &pair.depth_a);
    double err = 0;
    int count = 0;
    int occluded = 0;
    for (int y = 0; y < warped.warped_image.height(); ++y) {
      for (int x = 0; x < warped.warped_image.width(); ++x) {
        if (warped.valid.at(y, x) < 0.5) continue;
        // Occlusions break photo-consistency by construction; the depth
        // inconsistency map flags them exactly.
        const double pro = warped.projected_depth.at(y, x);
        const double smp = warped.sampled_depth.at(y, x);
        if (std::fabs(pro - smp) / (pro + smp + 1e-7) > 0.1) {
          ++occluded;
          continue;
        }
        for (int c = 0; c < 3; ++c) {
          err += std::fabs(warped.warped_image.at(y, x, c) - pair.image_b.at(y, x, c));
          ++count;
        }
      }
    }
    REQUIRE(count > 0);
    CHECK(occluded < count);  // occlusion is the exception, not the rule
    CHECK(err / count < 0.02);
  }
}

TEST_CASE("projected and sampled depths agree away from occlusion edges") {
  std::mt19937_64 rng(77);
  const Scene scene = make_random_scene(21);
  const Intrinsics k = default_intrinsics(96, 64);
  const Twist motion = testutil::random_twist(rng, 0.3, 3.0 * M_PI / 180.0);
  const FramePair pair = make_pair(scene, Pose::identity(), exp_twist(motion), k);
  const WarpResult warped = inverse_warp(pair.image_a, pair.depth_b, pair.t_gt, k, &pair.depth_a);
  // Depth edges blur under bilinear sampling; exclude their neighborhoods
  // via a gradient threshold on the ground-truth target depth.
  const Grid egx = grad_x(pair.depth_b), egy = grad_y(pair.depth_b);
  Mask smooth_region(pair.depth_b.height(), pair.depth_b.width(), 1, 1.0);
  for (int y = 0; y < smooth_region.height(); ++y) {
    for (int x = 0; x < smooth_region.width(); ++x) {
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const int yy = std::clamp(y + dy, 0, smooth_region.height() - 1);
          const int xx = std::clamp(x + dx, 0, smooth_region.width() - 1);
          if (std::fabs(egx.at(yy, xx)) > 0.2 || std::fabs(egy.at(yy, xx)) > 0.2) {
            smooth_region.at(y, x) = 0.0;
          }
        }
      }
    }
  }
  // Same guard on the source depth at the sampled location.
  const Grid sgx = grad_x(pair.depth_a), sgy = grad_y(pair.depth_a);
  double max_rel = 0;
  int checked = 0;
  for (int y = 0; y < smooth_region.height(); ++y) {
    for (int x = 0; x < smooth_region.width(); ++x) {
      if (warped.valid.at(y, x) < 0.5 || smooth_region.at(y, x) < 0.5) continue;
      bool source_smooth = true;
      for (int dy = -2; dy <= 2 && source_smooth; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const int yy = std::clamp(y + dy, 0, smooth_region.height() - 1);
          const int xx = std::clamp(x + dx, 0, smooth_region.width() - 1);
          if (std::fabs(sgx.at(yy, xx)) > 0.2 || std::fabs(sgy.at(yy, xx)) > 0.2) {
            source_smooth = false;
            break;
          }
        }
      }
      if (!source_smooth) continue;
      const double pro = warped.projected_depth.at(y, x);
      const double smp = warped.sampled_depth.at(y, x);
      max_rel = std::max(max_rel, std::fabs(pro - smp) / pro);
      ++checked;
    }
  }
  REQUIRE(checked > 500);
  CHECK(max_rel < 1e-3);
}

TEST_CASE("trajectories render deterministically") {
  const Scene scene = make_random_scene(13);
  const Intrinsics k = default_intrinsics(32, 24);
  std::vector<Pose> cams;
  for (int i = 0; i < 5; ++i) {
    cams.push_back(exp_twist(Twist(Eigen::Vector3d(0, 0, 0.3 * i), Eigen::Vector3d::Zero())));
  }
  const FrameSequence seq1 = make_trajectory(scene, cams, k);
  const FrameSequence seq2 = make_trajectory(scene, cams, k);
  REQUIRE(seq1.images.size() == 5);
  CHECK(seq1.trajectory.size() == 5);
  for (size_t f = 0; f < 5; ++f) {
    for (size_t i = 0; i < seq1.images[f].size(); ++i) {
      CHECK(seq1.images[f].data()[i] == seq2.images[f].data()[i]);
    }
  }
}
