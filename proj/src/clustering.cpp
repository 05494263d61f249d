#include "coherent/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "coherent/parallel.hpp"
#include "coherent/rng.hpp"

namespace coherent {

namespace {

constexpr double kZeroDistanceFloor = 1e-14;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double dissim(std::span<const double> a, std::span<const double> b, const GeometryConfig& g) {
  switch (g.kind) {
    case GeometryKind::Euclidean: {
      double acc = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) {
        const double diff = a[c] - b[c];
        acc += diff * diff;
      }
      return acc;
    }
    case GeometryKind::Ellipsoid:
    case GeometryKind::Sphere:
    case GeometryKind::Circle:
      return slice_dissimilarity(a, b, g);
  }
  return 0.0;
}

ClusterState make_state(const TrajectoryEnsemble& e, const FcmConfig& cfg) {
  ClusterState s;
  s.K = cfg.K;
  s.d = e.d;
  s.num_times = e.num_times;
  s.n = e.n;
  s.centers.assign(static_cast<std::size_t>(cfg.K) * e.num_times * e.d, 0.0);
  s.center_defined.assign(static_cast<std::size_t>(cfg.K) * e.num_times, std::uint8_t{0});
  s.memberships.assign(static_cast<std::size_t>(e.n) * cfg.K, 0.0);
  return s;
}

/// Per-term weights u^m, optionally scaled by q_i and/or 1/|T_i|.
void compute_weights(const ClusterState& state, const TrajectoryEnsemble& e,
                     const FcmConfig& cfg, std::vector<double>& w) {
  const int K = state.K;
  w.resize(static_cast<std::size_t>(e.n) * K);
  parallel_for(e.n, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double scale = 1.0;
      if (cfg.use_masses) scale *= e.mass(static_cast<int>(i));
      if (cfg.normalize_by_support) scale /= e.support_size(static_cast<int>(i));
      for (int k = 0; k < K; ++k) {
        const double u = state.memberships[i * K + k];
        w[i * K + k] = scale * std::pow(u, cfg.m);
      }
    }
  });
}

void centers_from_weights(ClusterState& state, const TrajectoryEnsemble& e,
                          const AvailabilityIndex& idx, const GeometryConfig& g,
                          const std::vector<double>& w, int threads) {
  const int K = state.K;
  const int d = e.d;
  const int acc_dim = g.mean_accum_dim(d);
  std::atomic<int> stale{0};

  // One task per time slice; the reduction over I_t runs in index order, so
  // the result does not depend on the thread count.
  parallel_for(e.num_times, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(static_cast<std::size_t>(K) * acc_dim);
    std::vector<double> wsum(K);
    for (std::size_t t = begin; t < end; ++t) {
      const auto& present = idx.at_time[t];
      if (present.empty()) {
        for (int k = 0; k < K; ++k) {
          state.center_defined[static_cast<std::size_t>(k) * e.num_times + t] = 0;
        }
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      std::fill(wsum.begin(), wsum.end(), 0.0);
      for (const int i : present) {
        const auto x = e.at(i, static_cast<int>(t));
        for (int k = 0; k < K; ++k) {
          const double wk = w[static_cast<std::size_t>(i) * K + k];
          if (wk == 0.0) continue;
          accumulate_slice_point(g, x, wk,
                                 {acc.data() + static_cast<std::size_t>(k) * acc_dim,
                                  static_cast<std::size_t>(acc_dim)});
          wsum[k] += wk;
        }
      }
      for (int k = 0; k < K; ++k) {
        auto out = state.center_slice(k, static_cast<int>(t));
        auto& defined = state.center_defined[static_cast<std::size_t>(k) * e.num_times + t];
        const std::span<const double> acc_k{acc.data() + static_cast<std::size_t>(k) * acc_dim,
                                            static_cast<std::size_t>(acc_dim)};
        if (finalize_slice_mean(g, acc_k, wsum[k], out)) {
          defined = 1;
          continue;
        }
        // Zero total weight (or a degenerate spherical mean): keep the
        // previous slice when one exists, otherwise fall back to the
        // unweighted mean of the available points.
        stale.fetch_add(1, std::memory_order_relaxed);
        if (defined) continue;
        std::vector<double> flat_acc(acc_dim, 0.0);
        for (const int i : present) {
          accumulate_slice_point(g, e.at(i, static_cast<int>(t)), 1.0, flat_acc);
        }
        if (finalize_slice_mean(g, flat_acc, static_cast<double>(present.size()), out)) {
          defined = 1;
        } else {
          const auto first = e.at(present.front(), static_cast<int>(t));
          std::copy(first.begin(), first.end(), out.begin());
          defined = 1;
        }
      }
    }
  });
  state.stale_center_slices += stale.load();
}

void memberships_from_distances(ClusterState& state, const std::vector<double>& dist,
                                const FcmConfig& cfg) {
  const int K = state.K;
  const double exponent = 1.0 / (cfg.m - 1.0);
  parallel_for(state.n, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = dist.data() + i * K;
      double* u = state.memberships.data() + i * K;

      int zero_count = 0;
      for (int k = 0; k < K; ++k) {
        if (row[k] < kZeroDistanceFloor) ++zero_count;
      }
      if (zero_count > 0) {
        const double share = 1.0 / zero_count;
        for (int k = 0; k < K; ++k) u[k] = row[k] < kZeroDistanceFloor ? share : 0.0;
        continue;
      }

      double dmin = kInf;
      for (int k = 0; k < K; ++k) dmin = std::min(dmin, row[k]);
      if (!std::isfinite(dmin)) {
        // No center shares a slice with this trajectory (possible only before
        // the first center update); fall back to an uninformative row.
        const double share = 1.0 / K;
        for (int k = 0; k < K; ++k) u[k] = share;
        continue;
      }
      // Normalizing by the closest distance keeps every pow argument >= 1,
      // which avoids overflow for small m.
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        const double term = std::pow(row[k] / dmin, -exponent);
        u[k] = term;
        total += term;
      }
      for (int k = 0; k < K; ++k) u[k] /= total;
    }
  });
}

double objective_from(const std::vector<double>& dist, const std::vector<double>& w) {
  // Kahan summation over extended precision: the monotonicity of the
  // objective trace is checked to 1e-10 absolute, which plain double
  // accumulation cannot guarantee at large n.
  long double sum = 0.0L;
  long double comp = 0.0L;
  const std::size_t count = dist.size();
  for (std::size_t j = 0; j < count; ++j) {
    if (w[j] == 0.0 || !std::isfinite(dist[j])) continue;
    const long double term = static_cast<long double>(w[j]) * dist[j];
    const long double y = term - comp;
    const long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return static_cast<double>(sum);
}

void random_simplex_memberships(ClusterState& state, const FcmConfig& cfg) {
  Rng rng(cfg.seed);
  const int K = state.K;
  for (int i = 0; i < state.n; ++i) {
    double total = 0.0;
    double* u = state.memberships.data() + static_cast<std::size_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      u[k] = rng.exponential();
      total += u[k];
    }
    for (int k = 0; k < K; ++k) u[k] /= total;
  }
}

std::vector<int> kmeanspp_seeds(const TrajectoryEnsemble& e, const GeometryConfig& g,
                                const FcmConfig& cfg) {
  const int n = e.n;
  Rng rng(cfg.seed);
  std::vector<int> seeds;
  seeds.reserve(cfg.K);
  seeds.push_back(static_cast<int>(rng.below(n)));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> nearest(n, nan);  // NaN until a finite distance is seen
  std::vector<double> column(n);
  double max_finite = 0.0;
  std::vector<std::uint8_t> chosen(n, 0);
  chosen[seeds[0]] = 1;

  while (static_cast<int>(seeds.size()) < cfg.K) {
    const int s = seeds.back();
    parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto pd = dynamic_distance(static_cast<int>(i), s, e, g);
        column[i] = pd ? *pd : nan;
      }
    });
    for (int i = 0; i < n; ++i) {
      if (std::isnan(column[i])) continue;
      max_finite = std::max(max_finite, column[i]);
      if (std::isnan(nearest[i]) || column[i] < nearest[i]) nearest[i] = column[i];
    }

    // Pairs with no common support weigh in at the largest finite distance.
    double total = 0.0;
    std::vector<double> weight(n, 0.0);
    for (int i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      weight[i] = std::isnan(nearest[i]) ? max_finite : nearest[i];
      total += weight[i];
    }
    if (!(total > 0.0)) {
      // All remaining candidates sit at zero distance; pick distinct indices.
      while (static_cast<int>(seeds.size()) < cfg.K) {
        const int c = static_cast<int>(rng.below(n));
        if (!chosen[c]) {
          chosen[c] = 1;
          seeds.push_back(c);
        }
      }
      break;
    }
    const double r = rng.uniform01() * total;
    double acc = 0.0;
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (weight[i] <= 0.0) continue;
      acc += weight[i];
      pick = i;
      if (acc > r) break;
    }
    chosen[pick] = 1;
    seeds.push_back(pick);
  }
  return seeds;
}

ClusterState run_core(const TrajectoryEnsemble& e, const GeometryConfig& g,
                      const FcmConfig& cfg) {
  const AvailabilityIndex idx = build_availability_index(e);
  ClusterState state = initialize(e, g, cfg);

  std::vector<double> w;
  std::vector<double> dist;
  compute_weights(state, e, cfg, w);
  double prev = 0.0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    centers_from_weights(state, e, idx, g, w, cfg.threads);
    dist = center_distances(state, e, g, cfg.threads);
    memberships_from_distances(state, dist, cfg);
    compute_weights(state, e, cfg, w);
    const double objective = objective_from(dist, w);
    state.objective_history.push_back(objective);
    if (it >= 2) {
      const double denom = std::max(prev, std::numeric_limits<double>::min());
      if ((prev - objective) / denom < cfg.tol) {
        state.converged = true;
        break;
      }
    }
    prev = objective;
  }
  state.iterations = static_cast<int>(state.objective_history.size());
  return state;
}

}  // namespace

void FcmConfig::validate() const {
  if (K < 2) fail("K must be at least 2");
  if (!(m > 1.0 + 1e-6)) fail("fuzziness exponent m must exceed 1 + 1e-6");
  if (!(tol > 0.0)) fail("tol must be positive");
  if (max_iter < 1) fail("max_iter must be at least 1");
  if (threads < 0) fail("threads must be nonnegative");
}

std::vector<double> center_distances(const ClusterState& state, const TrajectoryEnsemble& e,
                                     const GeometryConfig& g, int threads) {
  const int K = state.K;
  std::vector<double> dist(static_cast<std::size_t>(e.n) * K, 0.0);
  parallel_for(e.n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<int> overlap(K);
    for (std::size_t i = begin; i < end; ++i) {
      double* row = dist.data() + i * K;
      std::fill(row, row + K, 0.0);
      std::fill(overlap.begin(), overlap.end(), 0);
      for (int t = 0; t < e.num_times; ++t) {
        if (!e.available(static_cast<int>(i), t)) continue;
        const auto x = e.at(static_cast<int>(i), t);
        for (int k = 0; k < K; ++k) {
          if (!state.slice_defined(k, t)) continue;
          row[k] += dissim(x, state.center_slice(k, t), g);
          ++overlap[k];
        }
      }
      for (int k = 0; k < K; ++k) {
        if (overlap[k] == 0) row[k] = kInf;
      }
    }
  });
  return dist;
}

ClusterState initialize(const TrajectoryEnsemble& e, const GeometryConfig& g,
                        const FcmConfig& cfg) {
  cfg.validate();
  e.validate();
  g.validate(e.d);
  if (e.n < cfg.K) fail("need at least K trajectories");

  ClusterState state = make_state(e, cfg);
  if (cfg.init == InitMethod::RandomMemberships) {
    random_simplex_memberships(state, cfg);
    return state;
  }

  const auto seeds = kmeanspp_seeds(e, g, cfg);
  for (int k = 0; k < cfg.K; ++k) {
    const int s = seeds[k];
    for (int t = 0; t < e.num_times; ++t) {
      if (!e.available(s, t)) continue;
      const auto src = e.at(s, t);
      auto dst = state.center_slice(k, t);
      std::copy(src.begin(), src.end(), dst.begin());
      state.center_defined[static_cast<std::size_t>(k) * e.num_times + t] = 1;
    }
  }
  update_memberships(state, e, g, cfg);
  return state;
}

void update_centers(ClusterState& state, const TrajectoryEnsemble& e,
                    const AvailabilityIndex& idx, const GeometryConfig& g,
                    const FcmConfig& cfg) {
  std::vector<double> w;
  compute_weights(state, e, cfg, w);
  centers_from_weights(state, e, idx, g, w, cfg.threads);
}

void update_memberships(ClusterState& state, const TrajectoryEnsemble& e,
                        const GeometryConfig& g, const FcmConfig& cfg) {
  const auto dist = center_distances(state, e, g, cfg.threads);
  memberships_from_distances(state, dist, cfg);
}

double evaluate_objective(const ClusterState& state, const TrajectoryEnsemble& e,
                          const GeometryConfig& g, const FcmConfig& cfg) {
  const auto dist = center_distances(state, e, g, cfg.threads);
  std::vector<double> w;
  compute_weights(state, e, cfg, w);
  return objective_from(dist, w);
}

ClusterState run(const TrajectoryEnsemble& e, const GeometryConfig& g, const FcmConfig& cfg) {
  cfg.validate();
  e.validate();
  g.validate(e.d);
  if (g.kind == GeometryKind::Ellipsoid) {
    // Scale data so the ellipsoid metric becomes Euclidean, cluster there,
    // then map the centers back to the original frame.
    const TrajectoryEnsemble scaled = apply_ellipsoid_scaling(e, g);
    ClusterState state = run_core(scaled, GeometryConfig::euclidean(), cfg);
    unscale_ellipsoid_points(state.centers, e.d, g);
    return state;
  }
  validate_geometry_data(e, g);
  return run_core(e, g, cfg);
}

ClusterState run_restarts(const TrajectoryEnsemble& e, const GeometryConfig& g,
                          const FcmConfig& cfg, int restarts) {
  if (restarts < 1) fail("restarts must be at least 1");
  ClusterState best;
  double best_objective = kInf;
  for (int r = 0; r < restarts; ++r) {
    FcmConfig attempt = cfg;
    attempt.seed = cfg.seed + static_cast<std::uint64_t>(r);
    ClusterState state = run(e, g, attempt);
    const double objective =
        state.objective_history.empty() ? kInf : state.objective_history.back();
    if (objective < best_objective) {
      best_objective = objective;
      best = std::move(state);
    }
  }
  return best;
}

}  // namespace coherent
