#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hiervo/refine.hpp"
#include "hiervo/synthdata.hpp"
#include "hiervo/warp.hpp"
#include "testutil.hpp"

using namespace hiervo;
using namespace hiervo::refine;

namespace {

std::mt19937_64 rng(67);

struct PairFixture {
  FramePair pair;
  Intrinsics k;
  Twist gt_twist;

  explicit PairFixture(uint64_t seed, double trans = 0.25, double rot_deg = 3.0, int w = 64,
                       int h = 48) {
    const Scene scene = make_random_scene(seed);
    k = default_intrinsics(w, h);
    gt_twist = testutil::random_twist(rng, trans, rot_deg * M_PI / 180.0);
    pair = make_pair(scene, Pose::identity(), exp_twist(gt_twist), k);
  }
};

EstimatorConfig fast_cfg() {
  EstimatorConfig cfg;
  cfg.iterations = 60;
  cfg.residual_iterations = 30;
  return cfg;
}

}  // namespace

TEST_CASE("identical images estimate the identity pose") {
  const Scene scene = make_random_scene(3);
  const Intrinsics k = default_intrinsics(48, 32);
  Image img;
  DepthMap depth;
  render(scene, Pose::identity(), k, &img, &depth);
  const Pose p = direct_estimate(img, img, depth, k, Twist(), fast_cfg());
  CHECK(log_pose(p).norm() < 1e-4);
}

TEST_CASE("a known translation is recovered within two percent") {
  const Scene scene = make_random_scene(9);
  const Intrinsics k = default_intrinsics(64, 48);
  const Pose gt = exp_twist(Twist(Eigen::Vector3d(0.1, 0, 0), Eigen::Vector3d::Zero()));
  const FramePair pair = make_pair(scene, Pose::identity(), gt, k);
  const Pose est = direct_estimate(pair.image_a, pair.image_b, pair.depth_b, k, Twist(), fast_cfg());
  CHECK((est.translation() - gt.translation()).norm() < 0.02 * gt.translation().norm());
}

TEST_CASE("an estimate initialized at ground truth stays there") {
  const PairFixture fx(21);
  const Pose est = direct_estimate(fx.pair.image_a, fx.pair.image_b, fx.pair.depth_b, fx.k,
                                   fx.gt_twist, fast_cfg());
  CHECK(testutil::rotation_error_deg(est, exp_twist(fx.gt_twist)) < 0.1);
  CHECK((est.translation() - exp_twist(fx.gt_twist).translation()).norm() < 5e-3);
}

TEST_CASE("the returned pose never scores worse than the initial pose") {
  for (uint64_t seed : {31ull, 32ull, 33ull}) {
    const PairFixture fx(seed);
    const EstimatorConfig cfg = fast_cfg();
    // A deliberately poor initialization.
    const Twist bad_init = testutil::random_twist(rng, 0.4, 6.0 * M_PI / 180.0);
    const Pose est =
        direct_estimate(fx.pair.image_a, fx.pair.image_b, fx.pair.depth_b, fx.k, bad_init, cfg);
    const double init_loss = photometric_alignment_loss(fx.pair.image_a, fx.pair.image_b,
                                                        fx.pair.depth_b, fx.k,
                                                        exp_twist(bad_init), cfg);
    const double final_loss = photometric_alignment_loss(fx.pair.image_a, fx.pair.image_b,
                                                         fx.pair.depth_b, fx.k, est, cfg);
    CHECK(final_loss <= init_loss + 1e-12);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  Image a(8, 8, 1), b(8, 10, 1);
  DepthMap d(8, 10, 1, 1.0);
  CHECK_THROWS_AS(direct_estimate(a, b, d, default_intrinsics(10, 8), Twist(), fast_cfg()),
                  std::invalid_argument);
}

TEST_CASE("depth pyramid construction validates exact halving") {
  DepthMap fine(32, 48, 1, 2.0);
  const DepthPyramid pyr = DepthPyramid::build(fine, 4);
  REQUIRE(pyr.num_levels() == 4);
  CHECK(pyr.levels[0].width() == 6);
  CHECK(pyr.levels[0].height() == 4);
  CHECK(pyr.finest().width() == 48);
  for (const DepthMap& d : pyr.levels) {
    for (double v : d.data()) CHECK(v == doctest::Approx(2.0));
  }
  DepthMap odd(15, 22, 1, 1.0);
  CHECK_THROWS_AS(DepthPyramid::build(odd, 2), std::invalid_argument);
}

TEST_CASE("hierarchical refinement with one level equals direct estimation") {
  const PairFixture fx(41);
  const EstimatorConfig cfg = fast_cfg();
  const DepthPyramid pa = DepthPyramid::build(fx.pair.depth_a, 2);
  const DepthPyramid pb = DepthPyramid::build(fx.pair.depth_b, 2);
  const RefinementResult r = hierarchical_refine(fx.pair.image_a, fx.pair.image_b, pa, pb, fx.k,
                                                 1, cfg);
  const Pose direct = direct_estimate(fx.pair.image_a, fx.pair.image_b, fx.pair.depth_b, fx.k,
                                      Twist(), cfg);
  REQUIRE(r.poses.size() == 1);
  CHECK((r.poses[0].matrix() - direct.matrix()).norm() < 1e-12);
  CHECK(r.residuals.empty());
  CHECK(r.intermediate_views.empty());
}

TEST_CASE("composition of residuals is exact") {
  const PairFixture fx(43);
  const DepthPyramid pa = DepthPyramid::build(fx.pair.depth_a, 2);
  const DepthPyramid pb = DepthPyramid::build(fx.pair.depth_b, 2);
  const RefinementResult r = hierarchical_refine(fx.pair.image_a, fx.pair.image_b, pa, pb, fx.k,
                                                 3, fast_cfg());
  REQUIRE(r.poses.size() == 3);
  REQUIRE(r.residuals.size() == 2);
  for (size_t m = 0; m + 1 < r.poses.size(); ++m) {
    const Pose recomposed = compose(r.residuals[m], r.poses[m]);
    CHECK((recomposed.matrix() - r.poses[m + 1].matrix()).norm() < 1e-9);
  }
}

TEST_CASE("starting from ground truth leaves all residuals near identity") {
  const PairFixture fx(47);
  const DepthPyramid pa = DepthPyramid::build(fx.pair.depth_a, 2);
  const DepthPyramid pb = DepthPyramid::build(fx.pair.depth_b, 2);
  const RefinementResult r = hierarchical_refine(fx.pair.image_a, fx.pair.image_b, pa, pb, fx.k,
                                                 3, fast_cfg(), fx.gt_twist);
  for (const Twist& res : r.residual_twists) CHECK(res.norm() < 1e-3);
}

TEST_CASE("intermediate views narrow the gap to the target frame") {
  const PairFixture fx(53, 0.35, 5.0);
  const DepthPyramid pa = DepthPyramid::build(fx.pair.depth_a, 2);
  const DepthPyramid pb = DepthPyramid::build(fx.pair.depth_b, 2);
  const RefinementResult r = hierarchical_refine(fx.pair.image_a, fx.pair.image_b, pa, pb, fx.k,
                                                 2, fast_cfg());
  REQUIRE(r.intermediate_views.size() == 1);
  const Image& view = r.intermediate_views[0];
  double mae_view = 0, mae_raw = 0;
  int count = 0;
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      bool hole = true;
      for (int c = 0; c < 3; ++c) hole = hole && view.at(y, x, c) == 0.0;
      if (hole) continue;  // out-of-view region of the warp
      for (int c = 0; c < 3; ++c) {
        mae_view += std::fabs(view.at(y, x, c) - fx.pair.image_b.at(y, x, c));
        mae_raw += std::fabs(fx.pair.image_a.at(y, x, c) - fx.pair.image_b.at(y, x, c));
        ++count;
      }
    }
  }
  REQUIRE(count > 0);
  CHECK(mae_view / count < mae_raw / count);
}

TEST_CASE("per-level photometric losses do not increase") {
  const PairFixture fx(59, 0.3, 4.0);
  const DepthPyramid pa = DepthPyramid::build(fx.pair.depth_a, 2);
  const DepthPyramid pb = DepthPyramid::build(fx.pair.depth_b, 2);
  const RefinementResult r = hierarchical_refine(fx.pair.image_a, fx.pair.image_b, pa, pb, fx.k,
                                                 3, fast_cfg());
  REQUIRE(r.level_losses.size() == 3);
  for (size_t m = 0; m + 1 < r.level_losses.size(); ++m) {
    CHECK(r.level_losses[m + 1] <= r.level_losses[m] * 1.05 + 1e-9);
  }
}

namespace {

JointState make_joint_state(const PairFixture& fx, int scales, int levels, double depth_noise,
                            double pose_noise) {
  JointState state;
  const DepthPyramid pa = DepthPyramid::build(fx.pair.depth_a, scales);
  const DepthPyramid pb = DepthPyramid::build(fx.pair.depth_b, scales);
  std::uniform_real_distribution<double> u(-depth_noise, depth_noise);
  for (int n = 0; n < scales; ++n) {
    DepthMap da = pa.levels[n], db = pb.levels[n];
    for (auto& v : da.data()) v *= 1.0 + u(rng);
    for (auto& v : db.data()) v *= 1.0 + u(rng);
    state.depth_a.push_back(da);
    state.depth_b.push_back(db);
  }
  for (int m = 0; m < levels; ++m) {
    const double scale = pose_noise * (levels - m);  // coarser levels start worse
    state.twists.push_back(
        Twist(fx.gt_twist.xi + scale * testutil::random_twist(rng, 1.0, 1.0).xi));
  }
  return state;
}

}  // namespace

TEST_CASE("a zero learning rate changes nothing") {
  const PairFixture fx(61, 0.2, 2.0, 32, 24);
  JointState state = make_joint_state(fx, 2, 2, 0.1, 0.05);
  const JointState before = state;
  losses::LossConfig cfg;
  joint_refine_step(fx.pair.image_a, fx.pair.image_b, fx.k, &state, 0.0, 0.0, cfg);
  for (size_t n = 0; n < state.depth_a.size(); ++n) {
    for (size_t i = 0; i < state.depth_a[n].size(); ++i) {
      CHECK(state.depth_a[n].data()[i] == before.depth_a[n].data()[i]);
      CHECK(state.depth_b[n].data()[i] == before.depth_b[n].data()[i]);
    }
  }
  for (size_t m = 0; m < state.twists.size(); ++m) {
    CHECK((state.twists[m].xi - before.twists[m].xi).norm() == 0.0);
  }
}

TEST_CASE("joint steps reduce the loss from a perturbed initialization") {
  const PairFixture fx(63, 0.2, 2.0, 32, 24);
  JointState state = make_joint_state(fx, 2, 2, 0.08, 0.04);
  losses::LossConfig cfg;
  std::vector<double> history;
  for (int it = 0; it < 50; ++it) {
    const JointStepDiagnostics diag =
        joint_refine_step(fx.pair.image_a, fx.pair.image_b, fx.k, &state, 40.0, 0.002, cfg);
    history.push_back(diag.total);
  }
  CHECK(history.back() < history.front());
}

TEST_CASE("diagnostics expose one row per term") {
  const PairFixture fx(65, 0.2, 2.0, 32, 24);
  JointState state = make_joint_state(fx, 2, 3, 0.05, 0.02);
  losses::LossConfig cfg;
  const JointStepDiagnostics diag =
      joint_refine_step(fx.pair.image_a, fx.pair.image_b, fx.k, &state, 0.0, 0.0, cfg);
  CHECK(diag.term_rows.size() == 2u * 3u * 2u);
  CHECK(std::isfinite(diag.total));
  CHECK(diag.total >= 0.0);
}
