#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "g2t/streaming.hpp"
#include "g2t/synth.hpp"
#include "test_support.hpp"

using namespace g2t;
using namespace g2t::testsup;

namespace {

Dataset tiny_dataset(uint64_t seed, int frames, int size = 24, int blobs = 3) {
  SceneSpec spec;
  spec.seed = seed;
  spec.frames = frames;
  spec.width = spec.height = size;
  spec.n_blobs = blobs;
  spec.depth_noise_sigma = 0.01;
  return generate_scene(spec).dataset;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.iters = 20;
  cfg.stride = 2;
  cfg.iters_kf = 4;
  cfg.iters_cand = 2;
  cfg.init_points = 25;
  cfg.budget.g_max = 25;
  cfg.budget.densify_interval = 1000000;  // off unless a test lowers it
  cfg.sched.vel_subsample = 512;
  return cfg;
}

}  // namespace

TEST_CASE("keyframe partition follows the stride rule") {
  const StreamPlan a = keyframe_partition(10, 3);
  CHECK(a.keyframes == std::vector<int>{1, 4, 7, 10});
  CHECK(a.candidates == std::vector<int>{2, 3, 5, 6, 8, 9});

  const StreamPlan b = keyframe_partition(12, 5);
  CHECK(b.keyframes == std::vector<int>{1, 6, 11});

  const StreamPlan c = keyframe_partition(7, 1);
  CHECK(c.keyframes == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
  CHECK(c.candidates.empty());
}

TEST_CASE("partition agrees with a direct loop filter") {
  for (int frames : {1, 2, 17, 63, 200}) {
    for (int stride : {1, 2, 3, 7, 20}) {
      const StreamPlan plan = keyframe_partition(frames, stride);
      std::vector<int> kf, cand;
      for (int f = 1; f <= frames; ++f) {
        if ((f - 1) % stride == 0)
          kf.push_back(f);
        else
          cand.push_back(f);
      }
      CHECK(plan.keyframes == kf);
      CHECK(plan.candidates == cand);
      CHECK(plan.keyframes.size() + plan.candidates.size() ==
            static_cast<size_t>(frames));
      CHECK(plan.keyframes.front() == 1);
    }
  }
}

TEST_CASE("partition rejects degenerate arguments") {
  CHECK_THROWS_AS(keyframe_partition(10, 0), UsageError);
  CHECK_THROWS_AS(keyframe_partition(10, -2), UsageError);
  CHECK_THROWS_AS(keyframe_partition(0, 1), UsageError);
}

TEST_CASE("densify leaves a quiet field alone") {
  std::mt19937_64 rng(91);
  const GaussianField field = random_field(rng, 8, 1);
  BudgetPolicy policy;
  const std::vector<double> grads(8, 1e-6);  // below 2e-4
  const FieldEdit edit = densify_and_prune(field, grads, policy, 0.5);
  REQUIRE(edit.field.count() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(edit.source[i] == i);
    CHECK(edit.field.primitives[i].center == field.primitives[i].center);
  }
}

TEST_CASE("one hot primitive clones exactly one child") {
  std::mt19937_64 rng(92);
  const GaussianField field = random_field(rng, 6, 1);
  BudgetPolicy policy;
  std::vector<double> grads(6, 0.0);
  grads[2] = 5e-4;
  const FieldEdit edit = densify_and_prune(field, grads, policy, 0.5);
  REQUIRE(edit.field.count() == 7);
  CHECK(edit.source.back() == -1);

  const GaussianPrimitive& parent = field.primitives[2];
  const GaussianPrimitive& child = edit.field.primitives.back();
  int dom = 0;
  for (int k = 1; k < 3; ++k)
    if (parent.log_scale[k] > parent.log_scale[dom]) dom = k;
  const Eigen::Vector3d offset =
      quat_to_mat(quat_normalize(parent.rotation)).col(dom) *
      std::exp(parent.log_scale[dom]);
  CHECK((child.center - (parent.center + offset)).norm() < 1e-12);
  for (int k = 0; k < 3; ++k)
    CHECK(child.log_scale[k] ==
          doctest::Approx(parent.log_scale[k] + std::log(0.8)).epsilon(1e-12));
  CHECK(child.opacity_logit == parent.opacity_logit);
}

TEST_CASE("a fully transparent field prunes to nothing") {
  GaussianField field;
  for (int i = 0; i < 100; ++i) {
    GaussianPrimitive p;
    p.opacity_logit = logit(0.001);  // below the 0.005 prune threshold
    field.primitives.push_back(p);
  }
  const FieldEdit edit =
      densify_and_prune(field, std::vector<double>(100, 0.0), BudgetPolicy{}, 0.5);
  CHECK(edit.field.count() == 0);
}

TEST_CASE("budget enforcement keeps the strongest primitives") {
  std::mt19937_64 rng(93);
  GaussianField field;
  for (int i = 0; i < 1200; ++i) {
    GaussianPrimitive p;
    p.opacity_logit = uniform_range(rng, -4.0, 4.0);
    field.primitives.push_back(p);
  }
  BudgetPolicy policy;
  policy.g_max = 1000;
  const GaussianField cut = enforce_budget(field, policy, 0.5);
  REQUIRE(cut.count() == 1000);

  double weakest_kept = 1e30;
  for (const auto& p : cut.primitives)
    weakest_kept = std::min(weakest_kept, temporal_opacity(p, 0.5));
  std::vector<double> all;
  for (const auto& p : field.primitives)
    all.push_back(temporal_opacity(p, 0.5));
  std::sort(all.begin(), all.end());
  // the 200 weakest were removed, so the weakest survivor is the 201st
  CHECK(weakest_kept == doctest::Approx(all[200]).epsilon(1e-12));
}

TEST_CASE("budget ties are shed from the high-index end") {
  GaussianField field;
  for (int i = 0; i < 10; ++i) field.primitives.emplace_back();  // all equal
  for (int i = 0; i < 10; ++i) field.primitives[i].center.x() = i;
  BudgetPolicy policy;
  policy.g_max = 6;
  const FieldEdit edit = enforce_budget_tracked(field, policy, 0.5);
  REQUIRE(edit.field.count() == 6);
  CHECK(edit.source == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("a field under budget passes through untouched") {
  std::mt19937_64 rng(94);
  const GaussianField field = random_field(rng, 12, 1);
  BudgetPolicy policy;
  policy.g_max = 12;
  const FieldEdit edit = enforce_budget_tracked(field, policy, 0.5);
  CHECK(edit.field.count() == 12);
  std::vector<int> iota(12);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(edit.source == iota);
}

TEST_CASE("seeded initialization respects the prior depth range") {
  const Dataset ds = tiny_dataset(3, 4);
  TrainConfig cfg = tiny_config();
  cfg.init_points = 40;
  const GaussianField field = init_field(ds, cfg);
  REQUIRE(field.count() == 40);
  const double lo = ds.priors[0].d_min, hi = ds.priors[0].d_max;
  for (const auto& p : field.primitives) {
    CHECK(p.center.z() >= lo - 1e-12);
    CHECK(p.center.z() <= hi + 1e-12);
    CHECK(p.sh_dim() == 4);
    CHECK(sigmoid(p.opacity_logit) == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("training respects the budget at every logged step") {
  const Dataset ds = tiny_dataset(5, 6);
  TrainConfig cfg = tiny_config();
  cfg.iters = 24;
  cfg.budget.densify_interval = 4;  // clone aggressively
  cfg.budget.densify_grad_threshold = 1e-12;
  const TrainResult res = train_sequence(ds, init_field(ds, cfg), cfg);
  REQUIRE_FALSE(res.log.empty());
  for (const auto& info : res.log) CHECK(info.count <= cfg.budget.g_max);
  CHECK(res.field.count() <= cfg.budget.g_max);
}

TEST_CASE("lifting the budget lets the count grow past the cap") {
  const Dataset ds = tiny_dataset(5, 6);
  TrainConfig cfg = tiny_config();
  cfg.iters = 16;
  cfg.no_budget = true;
  cfg.budget.densify_interval = 4;
  cfg.budget.densify_grad_threshold = 1e-12;
  const TrainResult res = train_sequence(ds, init_field(ds, cfg), cfg);
  int peak = 0;
  for (const auto& info : res.log) peak = std::max(peak, info.count);
  CHECK(peak > cfg.budget.g_max);
}

TEST_CASE("candidate steps never change the model size") {
  const Dataset ds = tiny_dataset(6, 6);
  TrainConfig cfg = tiny_config();
  cfg.iters = 30;
  cfg.budget.densify_interval = 7;
  cfg.budget.densify_grad_threshold = 1e-12;
  const TrainResult res = train_sequence(ds, init_field(ds, cfg), cfg);
  int prev_count = -1;
  for (const auto& info : res.log) {
    if (!info.keyframe && prev_count >= 0) CHECK(info.count == prev_count);
    prev_count = info.count;
  }
}

TEST_CASE("keyframe-only training visits keyframes alone") {
  const Dataset ds = tiny_dataset(7, 6);
  TrainConfig cfg = tiny_config();
  cfg.iters = 18;
  cfg.kf_only = true;
  const TrainResult res = train_sequence(ds, init_field(ds, cfg), cfg);
  for (const auto& info : res.log) {
    CHECK(info.keyframe);
    CHECK((info.frame - 1) % cfg.stride == 0);
  }
}

TEST_CASE("candidate visits freeze geometry but move appearance") {
  const Dataset ds = tiny_dataset(8, 3);
  TrainConfig cfg = tiny_config();
  cfg.stride = 3;  // frame 1 keyframe, frames 2..3 candidates
  cfg.iters_kf = 4;
  cfg.iters_cand = 2;
  cfg.holdout = 0;

  cfg.iters = 4;  // run A stops after the keyframe visit
  const TrainResult a = train_sequence(ds, init_field(ds, cfg), cfg);
  cfg.iters = 8;  // run B continues through both candidate visits
  const TrainResult b = train_sequence(ds, init_field(ds, cfg), cfg);

  REQUIRE(a.field.count() == b.field.count());
  bool appearance_moved = false;
  for (int i = 0; i < a.field.count(); ++i) {
    const auto& pa = a.field.primitives[i];
    const auto& pb = b.field.primitives[i];
    CHECK(pa.center == pb.center);
    CHECK(pa.log_scale == pb.log_scale);
    CHECK(pa.rotation == pb.rotation);
    CHECK(pa.velocity == pb.velocity);
    CHECK(pa.rotor_rate == pb.rotor_rate);
    if (pa.sh_coeffs[0] != pb.sh_coeffs[0] ||
        pa.opacity_logit != pb.opacity_logit)
      appearance_moved = true;
  }
  CHECK(appearance_moved);
}

TEST_CASE("held-out frames are never trained on") {
  const Dataset ds = tiny_dataset(9, 16, 20, 2);
  TrainConfig cfg = tiny_config();
  cfg.iters = 40;
  cfg.holdout = 8;
  const TrainResult res = train_sequence(ds, init_field(ds, cfg), cfg);
  for (const auto& info : res.log) {
    CHECK(info.frame % 8 != 0);
  }
}

TEST_CASE("a single-frame sequence trains with zero velocity loss") {
  const Dataset ds = tiny_dataset(10, 1);
  TrainConfig cfg = tiny_config();
  cfg.iters = 6;
  const TrainResult res = train_sequence(ds, init_field(ds, cfg), cfg);
  REQUIRE_FALSE(res.log.empty());
  for (const auto& info : res.log) {
    CHECK(info.frame == 1);
    CHECK(info.report.velocity == 0.0);
  }
}

TEST_CASE("training is reproducible and thread-count invariant") {
  const Dataset ds = tiny_dataset(11, 4);
  TrainConfig cfg = tiny_config();
  cfg.iters = 12;

  const TrainResult r1 = train_sequence(ds, init_field(ds, cfg), cfg);
  const TrainResult r2 = train_sequence(ds, init_field(ds, cfg), cfg);
  CHECK(flatten(r1.field) == flatten(r2.field));

  cfg.threads = 3;
  const TrainResult r3 = train_sequence(ds, init_field(ds, cfg), cfg);
  CHECK(flatten(r1.field) == flatten(r3.field));
  REQUIRE(r1.log.size() == r3.log.size());
  for (size_t i = 0; i < r1.log.size(); ++i)
    CHECK(r1.log[i].report.total == r3.log[i].report.total);
}

TEST_CASE("misaligned datasets are rejected before training") {
  Dataset ds = tiny_dataset(12, 3);
  ds.priors.pop_back();
  TrainConfig cfg = tiny_config();
  GaussianField init;
  init.primitives.emplace_back();
  CHECK_THROWS_AS(train_sequence(ds, init, cfg), DataError);
}
