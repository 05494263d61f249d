#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coherent/clustering.hpp"
#include "coherent/diagnostics.hpp"
#include "coherent/flows.hpp"
#include "reference_fcm.hpp"
#include "test_util.hpp"

using namespace coherent;

TEST_SUITE_BEGIN("clustering");

namespace {

ClusterState blank_state(const TrajectoryEnsemble& e, int K) {
  ClusterState s;
  s.K = K;
  s.d = e.d;
  s.num_times = e.num_times;
  s.n = e.n;
  s.centers.assign(static_cast<std::size_t>(K) * e.num_times * e.d, 0.0);
  s.center_defined.assign(static_cast<std::size_t>(K) * e.num_times, std::uint8_t{1});
  s.memberships.assign(static_cast<std::size_t>(e.n) * K, 0.0);
  return s;
}

void check_row_stochastic(const ClusterState& s) {
  for (int i = 0; i < s.n; ++i) {
    double total = 0.0;
    for (int k = 0; k < s.K; ++k) {
      const double u = s.membership(i, k);
      CHECK(u >= 0.0);
      CHECK(u <= 1.0);
      total += u;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

void check_monotone(const std::vector<double>& history) {
  for (std::size_t j = 1; j < history.size(); ++j) {
    CHECK(history[j] <= history[j - 1] + 1e-10);
  }
}

}  // namespace

TEST_CASE("config validation") {
  FcmConfig cfg;
  cfg.K = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.K = 2;
  cfg.m = 1.0 + 5e-7;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.m = 1.1;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.tol = 1e-6;
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.max_iter = 10;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("update_centers") {
  const auto g = GeometryConfig::euclidean();

  SUBCASE("one-hot memberships give per-cluster means") {
    auto e = make_ensemble(4, 1, 2);
    const double xs[4][2] = {{0.0, 1.0}, {2.0, 3.0}, {10.0, 11.0}, {14.0, 13.0}};
    for (int i = 0; i < 4; ++i) {
      for (int t = 0; t < 2; ++t) e.at_mutable(i, t)[0] = xs[i][t];
    }
    auto s = blank_state(e, 2);
    for (int i = 0; i < 4; ++i) s.memberships[static_cast<std::size_t>(i) * 2 + (i / 2)] = 1.0;
    FcmConfig cfg;
    cfg.m = 2.0;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK(s.center_slice(0, 0)[0] == doctest::Approx(1.0));
    CHECK(s.center_slice(0, 1)[0] == doctest::Approx(2.0));
    CHECK(s.center_slice(1, 0)[0] == doctest::Approx(12.0));
    CHECK(s.center_slice(1, 1)[0] == doctest::Approx(12.0));
  }

  SUBCASE("uniform memberships with m=2") {
    auto e = make_ensemble(2, 1, 1);
    e.at_mutable(0, 0)[0] = 0.0;
    e.at_mutable(1, 0)[0] = 2.0;
    auto s = blank_state(e, 2);
    for (auto& u : s.memberships) u = 0.5;
    FcmConfig cfg;
    cfg.m = 2.0;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK(s.center_slice(0, 0)[0] == doctest::Approx(1.0));
    CHECK(s.center_slice(1, 0)[0] == doctest::Approx(1.0));
  }

  SUBCASE("a slice observed by a single trajectory pins every center there") {
    auto e = testutil::random_full_ensemble(3, 1, 2, 5);
    e.mask[static_cast<std::size_t>(1) * 2 + 1] = 0;
    e.mask[static_cast<std::size_t>(2) * 2 + 1] = 0;
    auto s = blank_state(e, 2);
    for (auto& u : s.memberships) u = 0.5;
    FcmConfig cfg;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK(s.center_slice(0, 1)[0] == doctest::Approx(e.at(0, 1)[0]));
    CHECK(s.center_slice(1, 1)[0] == doctest::Approx(e.at(0, 1)[0]));
  }

  SUBCASE("masses weight the convex combination") {
    auto e = make_ensemble(2, 1, 1);
    e.at_mutable(0, 0)[0] = 0.0;
    e.at_mutable(1, 0)[0] = 4.0;
    e.masses = {3.0, 1.0};
    auto s = blank_state(e, 2);
    for (int i = 0; i < 2; ++i) s.memberships[static_cast<std::size_t>(i) * 2] = 1.0;
    FcmConfig cfg;
    cfg.use_masses = true;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK(s.center_slice(0, 0)[0] == doctest::Approx(1.0));
  }


  SUBCASE("zero total weight keeps the previous slice and counts it") {
    auto e = make_ensemble(2, 1, 2);
    e.at_mutable(0, 0)[0] = 1.0;
    e.at_mutable(0, 1)[0] = 2.0;
    e.at_mutable(1, 0)[0] = 3.0;
    e.at_mutable(1, 1)[0] = 4.0;
    auto s = blank_state(e, 2);
    // Both trajectories fully in cluster 0: cluster 1 gets zero weight
    // everywhere.
    for (int i = 0; i < 2; ++i) s.memberships[static_cast<std::size_t>(i) * 2] = 1.0;
    s.center_slice(1, 0)[0] = -7.0;
    s.center_slice(1, 1)[0] = -8.0;
    FcmConfig cfg;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK(s.center_slice(0, 0)[0] == doctest::Approx(2.0));
    CHECK(s.center_slice(1, 0)[0] == -7.0);
    CHECK(s.center_slice(1, 1)[0] == -8.0);
    CHECK(s.slice_defined(1, 0));
    CHECK(s.stale_center_slices == 2);
  }

  SUBCASE("zero weight with no previous slice falls back to the plain mean") {
    auto e = make_ensemble(2, 1, 1);
    e.at_mutable(0, 0)[0] = 1.0;
    e.at_mutable(1, 0)[0] = 3.0;
    auto s = blank_state(e, 2);
    std::fill(s.center_defined.begin(), s.center_defined.end(), std::uint8_t{0});
    for (int i = 0; i < 2; ++i) s.memberships[static_cast<std::size_t>(i) * 2] = 1.0;
    FcmConfig cfg;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK(s.slice_defined(1, 0));
    CHECK(s.center_slice(1, 0)[0] == doctest::Approx(2.0));
  }

  SUBCASE("an empty slice leaves the center undefined") {
    auto e = testutil::random_full_ensemble(2, 1, 3, 5);
    e.mask[1] = 0;
    e.mask[static_cast<std::size_t>(1) * 3 + 1] = 0;
    auto s = blank_state(e, 2);
    for (auto& u : s.memberships) u = 0.5;
    FcmConfig cfg;
    update_centers(s, e, build_availability_index(e), g, cfg);
    CHECK_FALSE(s.slice_defined(0, 1));
    CHECK_FALSE(s.slice_defined(1, 1));
    CHECK(s.slice_defined(0, 0));
  }
}

TEST_CASE("update_memberships") {
  const auto g = GeometryConfig::euclidean();
  auto e = make_ensemble(1, 1, 1);
  e.at_mutable(0, 0)[0] = 0.0;
  auto s = blank_state(e, 2);
  FcmConfig cfg;
  cfg.m = 2.0;

  SUBCASE("equal distances split the mass") {
    s.center_slice(0, 0)[0] = -1.0;
    s.center_slice(1, 0)[0] = 1.0;
    update_memberships(s, e, g, cfg);
    CHECK(s.membership(0, 0) == doctest::Approx(0.5));
    CHECK(s.membership(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("distances 1 and 3 at m=2") {
    s.center_slice(0, 0)[0] = 1.0;
    s.center_slice(1, 0)[0] = std::sqrt(3.0);
    update_memberships(s, e, g, cfg);
    CHECK(s.membership(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s.membership(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("zero distance takes the whole row") {
    s.center_slice(0, 0)[0] = 0.0;
    s.center_slice(1, 0)[0] = 2.0;
    update_memberships(s, e, g, cfg);
    CHECK(s.membership(0, 0) == 1.0);
    CHECK(s.membership(0, 1) == 0.0);
  }
}

TEST_CASE("evaluate_objective") {
  const auto g = GeometryConfig::euclidean();
  auto e = make_ensemble(1, 1, 2);
  e.at_mutable(0, 0)[0] = 0.0;
  e.at_mutable(0, 1)[0] = 0.0;
  auto s = blank_state(e, 1);
  s.memberships[0] = 1.0;
  s.center_slice(0, 0)[0] = 1.0;  // squared distance 1
  s.center_slice(0, 1)[0] = 2.0;  // squared distance 4
  FcmConfig cfg;
  cfg.m = 2.0;

  CHECK(evaluate_objective(s, e, g, cfg) == doctest::Approx(5.0).epsilon(1e-14));

  cfg.normalize_by_support = true;  // |T_i| = 2 halves the contribution
  CHECK(evaluate_objective(s, e, g, cfg) == doctest::Approx(2.5).epsilon(1e-14));

  cfg.normalize_by_support = false;
  cfg.use_masses = true;
  e.masses = {3.0};
  CHECK(evaluate_objective(s, e, g, cfg) == doctest::Approx(15.0).epsilon(1e-14));

  SUBCASE("perfect fit has zero objective") {
    s.center_slice(0, 0)[0] = 0.0;
    s.center_slice(0, 1)[0] = 0.0;
    e.masses.clear();
    cfg.use_masses = false;
    CHECK(evaluate_objective(s, e, g, cfg) == 0.0);
  }
}

TEST_CASE("initialize") {
  const auto g = GeometryConfig::euclidean();

  SUBCASE("random memberships are seeded and on the simplex") {
    const auto e = testutil::random_full_ensemble(40, 2, 3, 17);
    FcmConfig cfg;
    cfg.K = 3;
    cfg.seed = 9;
    const auto a = initialize(e, g, cfg);
    const auto b = initialize(e, g, cfg);
    CHECK(a.memberships == b.memberships);
    check_row_stochastic(a);
    cfg.seed = 10;
    const auto c = initialize(e, g, cfg);
    CHECK(a.memberships != c.memberships);
  }

  SUBCASE("kmeans++ with n == K seeds every trajectory") {
    const auto e = testutil::random_full_ensemble(3, 2, 4, 23);
    FcmConfig cfg;
    cfg.K = 3;
    cfg.init = InitMethod::KmeansppCenters;
    const auto s = initialize(e, g, cfg);
    check_row_stochastic(s);
    // Each trajectory sits at distance zero from its own seed center, so its
    // row is one-hot; over all rows every cluster is claimed exactly once.
    std::vector<int> claimed(3, 0);
    for (int i = 0; i < 3; ++i) {
      double best = -1.0;
      int arg = -1;
      for (int k = 0; k < 3; ++k) {
        if (s.membership(i, k) > best) {
          best = s.membership(i, k);
          arg = k;
        }
      }
      CHECK(best == doctest::Approx(1.0));
      ++claimed[arg];
    }
    CHECK(claimed == std::vector<int>{1, 1, 1});
  }

  SUBCASE("kmeans++ on gappy data stays valid") {
    const auto e = testutil::random_gappy_ensemble(30, 2, 6, 5, 0.5);
    FcmConfig cfg;
    cfg.K = 4;
    cfg.init = InitMethod::KmeansppCenters;
    cfg.seed = 3;
    const auto s = initialize(e, g, cfg);
    check_row_stochastic(s);
  }

  SUBCASE("interval map ensemble initializes to a valid state") {
    FlowSpec spec;
    spec.kind = FlowKind::IntervalMap3;
    spec.seeding = SeedingKind::UniformRandom;
    spec.n = 1000;
    spec.seed = 1;
    spec.t_end = 9;
    spec.output_stride = 1.0;
    const auto e = integrate_ensemble(spec);
    FcmConfig cfg;
    cfg.K = 3;
    cfg.m = 1.1;
    const auto s = initialize(e, GeometryConfig::circle(), cfg);
    check_row_stochastic(s);
    const double objective = evaluate_objective(s, e, GeometryConfig::circle(), cfg);
    CHECK(std::isfinite(objective));
  }


  SUBCASE("kmeans++ stalls to distinct random seeds on duplicate data") {
    // Every trajectory identical: all pairwise distances are zero.
    auto e = make_ensemble(6, 2, 3);
    for (int i = 0; i < 6; ++i) {
      for (int t = 0; t < 3; ++t) {
        e.at_mutable(i, t)[0] = 1.0;
        e.at_mutable(i, t)[1] = 2.0;
      }
    }
    FcmConfig cfg;
    cfg.K = 3;
    cfg.init = InitMethod::KmeansppCenters;
    cfg.seed = 5;
    const auto s = initialize(e, g, cfg);
    check_row_stochastic(s);
    // All seeds coincide, so every row splits its mass across the zero-
    // distance clusters.
    for (int i = 0; i < 6; ++i) {
      for (int k = 0; k < 3; ++k) {
        CHECK(s.membership(i, k) == doctest::Approx(1.0 / 3.0));
      }
    }
  }

  SUBCASE("kmeans++ centers copy the seed trajectories and their masks") {
    const auto e = testutil::random_gappy_ensemble(12, 2, 5, 31, 0.4);
    FcmConfig cfg;
    cfg.K = 3;
    cfg.init = InitMethod::KmeansppCenters;
    cfg.seed = 2;
    const auto s = initialize(e, g, cfg);
    for (int k = 0; k < 3; ++k) {
      // Each center matches some trajectory on exactly that trajectory's
      // support.
      bool found = false;
      for (int i = 0; i < e.n && !found; ++i) {
        bool matches = true;
        for (int t = 0; t < e.num_times; ++t) {
          if (s.slice_defined(k, t) != e.available(i, t)) {
            matches = false;
            break;
          }
          if (!e.available(i, t)) continue;
          for (int c = 0; c < e.d; ++c) {
            if (s.center_slice(k, t)[c] != e.at(i, t)[c]) matches = false;
          }
        }
        found = matches;
      }
      CHECK(found);
    }
  }

  SUBCASE("preconditions") {
    const auto e = testutil::random_full_ensemble(2, 1, 2, 1);
    FcmConfig cfg;
    cfg.K = 3;
    CHECK_THROWS_AS(initialize(e, g, cfg), std::invalid_argument);
  }
}


TEST_CASE("a time slice nobody observes stays undefined end to end") {
  testutil::TmpDir dir("empty_slice");
  const auto path = dir.file("e.csv");
  testutil::write_file(path,
                       "id,t0_c0,t1_c0,t2_c0\n"
                       "a,0.0,,0.2\n"
                       "b,1.0,,1.2\n"
                       "c,50.0,,50.2\n"
                       "d,51.0,,51.2\n");
  const auto e = load_ensemble(path, EnsembleFormat::WideCsv);
  REQUIRE(e.num_times == 3);
  FcmConfig cfg;
  cfg.K = 2;
  cfg.seed = 3;
  const auto s = run(e, GeometryConfig::euclidean(), cfg);
  CHECK(s.converged);
  for (int k = 0; k < 2; ++k) {
    CHECK(s.slice_defined(k, 0));
    CHECK_FALSE(s.slice_defined(k, 1));
    CHECK(s.slice_defined(k, 2));
  }
  check_row_stochastic(s);
  // The two value groups still separate using the observed slices.
  const int label0 = s.membership(0, 0) > 0.5 ? 0 : 1;
  CHECK(s.membership(1, label0) > 0.99);
  CHECK(s.membership(2, 1 - label0) > 0.99);
  CHECK(s.membership(3, 1 - label0) > 0.99);
}

TEST_CASE("run separates two stationary bundles") {
  Rng rng(33);
  auto e = make_ensemble(20, 2, 3);
  for (int i = 0; i < 20; ++i) {
    const double cx = i < 10 ? 0.0 : 1000.0;  // separation far above bundle diameter
    for (int t = 0; t < 3; ++t) {
      e.at_mutable(i, t)[0] = cx + rng.uniform(-0.1, 0.1);
      e.at_mutable(i, t)[1] = cx + rng.uniform(-0.1, 0.1);
    }
  }
  FcmConfig cfg;
  cfg.K = 2;
  cfg.m = 2.0;
  cfg.seed = 4;
  const auto s = run(e, GeometryConfig::euclidean(), cfg);
  CHECK(s.converged);
  check_row_stochastic(s);
  check_monotone(s.objective_history);

  const int label0 = s.membership(0, 0) > 0.5 ? 0 : 1;
  for (int i = 0; i < 20; ++i) {
    const int expect = i < 10 ? label0 : 1 - label0;
    CHECK(s.membership(i, expect) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("complete data reproduces the dense reference per iteration") {
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 12, d = 2, T = 3, K = 2 + rep % 2;
    const auto e = testutil::random_full_ensemble(n, d, T, 100 + rep);
    FcmConfig cfg;
    cfg.K = K;
    cfg.m = rep % 2 == 0 ? 2.0 : 1.5;
    cfg.seed = rep;
    auto state = initialize(e, GeometryConfig::euclidean(), cfg);

    reffcm::DenseFcm ref;
    ref.n = n;
    ref.dim = d * T;
    ref.K = K;
    ref.m = cfg.m;
    ref.points.resize(static_cast<std::size_t>(n) * ref.dim);
    for (int i = 0; i < n; ++i) {
      const auto p = embed_trajectory(e, i);
      std::copy(p.coords.begin(), p.coords.end(),
                ref.points.begin() + static_cast<std::size_t>(i) * ref.dim);
    }
    ref.memberships = state.memberships;

    const auto idx = build_availability_index(e);
    for (int it = 0; it < 8; ++it) {
      update_centers(state, e, idx, GeometryConfig::euclidean(), cfg);
      ref.update_centers();
      for (int k = 0; k < K; ++k) {
        for (int t = 0; t < T; ++t) {
          for (int c = 0; c < d; ++c) {
            CHECK(state.center_slice(k, t)[c] ==
                  doctest::Approx(ref.centers[(static_cast<std::size_t>(k) * T + t) * d + c])
                      .epsilon(1e-12));
          }
        }
      }
      update_memberships(state, e, GeometryConfig::euclidean(), cfg);
      ref.update_memberships();
      for (std::size_t j = 0; j < state.memberships.size(); ++j) {
        CHECK(state.memberships[j] == doctest::Approx(ref.memberships[j]).epsilon(1e-12));
      }
      CHECK(evaluate_objective(state, e, GeometryConfig::euclidean(), cfg) ==
            doctest::Approx(ref.objective()).epsilon(1e-12));
    }
  }
}

TEST_CASE("objective decreases monotonically across configurations") {
  const auto base = testutil::random_gappy_ensemble(60, 2, 8, 77, 0.4);

  FcmConfig cfg;
  cfg.K = 3;
  cfg.seed = 2;
  for (const double m : {1.2, 2.0, 3.0}) {
    cfg.m = m;
    const auto s = run(base, GeometryConfig::euclidean(), cfg);
    check_monotone(s.objective_history);
    check_row_stochastic(s);
  }

  cfg.m = 2.0;
  cfg.normalize_by_support = true;
  check_monotone(run(base, GeometryConfig::euclidean(), cfg).objective_history);
  cfg.normalize_by_support = false;

  auto weighted = base;
  weighted.masses.resize(weighted.n);
  Rng rng(3);
  for (auto& q : weighted.masses) q = rng.uniform(0.1, 3.0);
  cfg.use_masses = true;
  check_monotone(run(weighted, GeometryConfig::euclidean(), cfg).objective_history);
  cfg.use_masses = false;

  cfg.init = InitMethod::KmeansppCenters;
  check_monotone(run(base, GeometryConfig::euclidean(), cfg).objective_history);
}

TEST_CASE("determinism: reruns and thread counts") {
  const auto e = testutil::random_gappy_ensemble(80, 2, 10, 13, 0.3);
  FcmConfig cfg;
  cfg.K = 3;
  cfg.seed = 21;
  cfg.threads = 1;
  const auto a = run(e, GeometryConfig::euclidean(), cfg);
  const auto b = run(e, GeometryConfig::euclidean(), cfg);
  CHECK(a.memberships == b.memberships);
  CHECK(a.centers == b.centers);
  CHECK(a.objective_history == b.objective_history);

  cfg.threads = 4;
  const auto c = run(e, GeometryConfig::euclidean(), cfg);
  CHECK(a.memberships == c.memberships);
  CHECK(a.centers == c.centers);
  CHECK(a.objective_history == c.objective_history);
}

TEST_CASE("isotropic scaling leaves memberships unchanged") {
  const auto e = testutil::random_gappy_ensemble(40, 2, 6, 5, 0.3);
  const double alpha = 3.0;
  auto scaled = e;
  for (auto& v : scaled.positions) v *= alpha;

  FcmConfig cfg;
  cfg.K = 2;
  cfg.seed = 8;
  const auto a = run(e, GeometryConfig::euclidean(), cfg);
  const auto b = run(scaled, GeometryConfig::euclidean(), cfg);
  REQUIRE(a.objective_history.size() == b.objective_history.size());
  for (std::size_t j = 0; j < a.memberships.size(); ++j) {
    CHECK(a.memberships[j] == doctest::Approx(b.memberships[j]).epsilon(1e-8));
  }
  for (std::size_t j = 0; j < a.objective_history.size(); ++j) {
    CHECK(b.objective_history[j] ==
          doctest::Approx(alpha * alpha * a.objective_history[j]).epsilon(1e-8));
  }
  for (std::size_t j = 0; j < a.centers.size(); ++j) {
    CHECK(b.centers[j] == doctest::Approx(alpha * a.centers[j]).epsilon(1e-8));
  }
}

TEST_CASE("frame independence under per-time rigid motions") {
  Rng rng(41);
  const auto e = testutil::random_gappy_ensemble(30, 2, 5, 19, 0.3);
  auto moved = e;
  std::vector<std::vector<double>> orthos;
  std::vector<std::vector<double>> shifts;
  for (int t = 0; t < e.num_times; ++t) {
    orthos.push_back(testutil::random_orthogonal(2, rng));
    shifts.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4)});
  }
  for (int i = 0; i < e.n; ++i) {
    for (int t = 0; t < e.num_times; ++t) {
      if (!moved.available(i, t)) continue;
      testutil::apply_affine(moved.at_mutable(i, t), orthos[t], shifts[t]);
    }
  }

  FcmConfig cfg;
  cfg.K = 2;
  cfg.seed = 6;
  auto sa = initialize(e, GeometryConfig::euclidean(), cfg);
  auto sb = initialize(moved, GeometryConfig::euclidean(), cfg);
  CHECK(sa.memberships == sb.memberships);

  const auto idx = build_availability_index(e);
  for (int it = 0; it < 6; ++it) {
    update_centers(sa, e, idx, GeometryConfig::euclidean(), cfg);
    update_centers(sb, moved, idx, GeometryConfig::euclidean(), cfg);
    for (int k = 0; k < cfg.K; ++k) {
      for (int t = 0; t < e.num_times; ++t) {
        if (!sa.slice_defined(k, t)) continue;
        std::vector<double> expect(sa.center_slice(k, t).begin(), sa.center_slice(k, t).end());
        testutil::apply_affine(expect, orthos[t], shifts[t]);
        CHECK(sb.center_slice(k, t)[0] == doctest::Approx(expect[0]).epsilon(1e-8));
        CHECK(sb.center_slice(k, t)[1] == doctest::Approx(expect[1]).epsilon(1e-8));
      }
    }
    update_memberships(sa, e, GeometryConfig::euclidean(), cfg);
    update_memberships(sb, moved, GeometryConfig::euclidean(), cfg);
    for (std::size_t j = 0; j < sa.memberships.size(); ++j) {
      CHECK(sa.memberships[j] == doctest::Approx(sb.memberships[j]).epsilon(1e-8));
    }
  }
}

TEST_CASE("sphere geometry keeps centers on the sphere") {
  Rng rng(3);
  auto e = make_ensemble(24, 3, 4);
  for (int i = 0; i < e.n; ++i) {
    // Two antipodal caps.
    const double pole = i < 12 ? 1.0 : -1.0;
    for (int t = 0; t < e.num_times; ++t) {
      std::vector<double> v{rng.normal() * 0.2, rng.normal() * 0.2, pole};
      const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      auto slot = e.at_mutable(i, t);
      for (int c = 0; c < 3; ++c) slot[c] = v[c] / norm;
    }
  }
  FcmConfig cfg;
  cfg.K = 2;
  cfg.seed = 12;
  const auto s = run(e, GeometryConfig::sphere(), cfg);
  CHECK(s.converged);
  check_monotone(s.objective_history);
  for (int k = 0; k < 2; ++k) {
    for (int t = 0; t < e.num_times; ++t) {
      REQUIRE(s.slice_defined(k, t));
      const auto c = s.center_slice(k, t);
      const double norm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  // The two caps separate exactly.
  const auto labels = hard_partition(s);
  for (int i = 1; i < 12; ++i) CHECK(labels[i] == labels[0]);
  for (int i = 13; i < 24; ++i) CHECK(labels[i] == labels[12]);
  CHECK(labels[0] != labels[12]);

  // Non-unit data is rejected under the sphere kind.
  auto bad = e;
  bad.at_mutable(0, 0)[0] *= 2.0;
  CHECK_THROWS_AS(run(bad, GeometryConfig::sphere(), cfg), std::invalid_argument);
}

TEST_CASE("ellipsoid run equals euclidean run on pre-scaled data") {
  Rng rng(29);
  const auto e = testutil::random_gappy_ensemble(30, 2, 4, 61, 0.2);
  const auto axes = testutil::random_orthogonal(2, rng);
  const auto gell = GeometryConfig::ellipsoid(axes, {0.5, 2.0});

  FcmConfig cfg;
  cfg.K = 2;
  cfg.seed = 14;
  const auto direct = run(e, gell, cfg);
  const auto scaled_run = run(apply_ellipsoid_scaling(e, gell), GeometryConfig::euclidean(), cfg);
  CHECK(direct.memberships == scaled_run.memberships);
  CHECK(direct.objective_history == scaled_run.objective_history);
  // Centers map back through the inverse scaling.
  auto centers = scaled_run.centers;
  unscale_ellipsoid_points(centers, e.d, gell);
  for (std::size_t j = 0; j < centers.size(); ++j) {
    CHECK(direct.centers[j] == doctest::Approx(centers[j]).epsilon(1e-12));
  }
}

TEST_CASE("run_restarts keeps the best objective") {
  const auto e = testutil::random_full_ensemble(50, 2, 4, 301);
  FcmConfig cfg;
  cfg.K = 3;
  cfg.seed = 100;
  const auto best = run_restarts(e, GeometryConfig::euclidean(), cfg, 5);
  for (int r = 0; r < 5; ++r) {
    FcmConfig single = cfg;
    single.seed = cfg.seed + r;
    const auto s = run(e, GeometryConfig::euclidean(), single);
    CHECK(best.objective_history.back() <= s.objective_history.back() + 1e-12);
  }
}

TEST_SUITE_END();
