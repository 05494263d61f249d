#include "coherent/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "coherent/parallel.hpp"
#include "coherent/rng.hpp"

namespace coherent {

namespace {

constexpr int kCollapseSampleCap = 1000;
constexpr std::uint64_t kCollapseSampleSeed = 0x9e3779b97f4a7c15ull;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

int earliest_observed_slice(const TrajectoryEnsemble& e, int i) {
  for (int t = 0; t < e.num_times; ++t) {
    if (e.available(i, t)) return t;
  }
  fail("trajectory has no observations");
}

/// Root of the largest pairwise dynamic distance over a deterministic sample
/// of at most kCollapseSampleCap trajectories.
std::pair<double, int> sampled_diameter(const TrajectoryEnsemble& e, const GeometryConfig& g) {
  std::vector<int> sample(e.n);
  std::iota(sample.begin(), sample.end(), 0);
  if (e.n > kCollapseSampleCap) {
    Rng rng(kCollapseSampleSeed);
    for (int i = 0; i < kCollapseSampleCap; ++i) {
      const int j = i + static_cast<int>(rng.below(e.n - i));
      std::swap(sample[i], sample[j]);
    }
    sample.resize(kCollapseSampleCap);
  }
  const int s = static_cast<int>(sample.size());
  std::vector<double> row_max(s, 0.0);
  parallel_for(s, 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      double best = 0.0;
      for (int b = static_cast<int>(a) + 1; b < s; ++b) {
        const auto dd = dynamic_distance(sample[a], sample[b], e, g);
        if (dd && *dd > best) best = *dd;
      }
      row_max[a] = best;
    }
  });
  double best = 0.0;
  for (const double v : row_max) best = std::max(best, v);
  return {std::sqrt(best), s};
}

}  // namespace

std::vector<double> entropy_field(const ClusterState& state) {
  if (state.K < 2) fail("entropy requires K >= 2");
  const double log_k = std::log(static_cast<double>(state.K));
  std::vector<double> h(state.n, 0.0);
  for (int i = 0; i < state.n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < state.K; ++k) {
      const double u = state.membership(i, k);
      if (u > 0.0) acc += u * std::log(u);
    }
    h[i] = std::clamp(-acc / log_k, 0.0, 1.0);
  }
  return h;
}

std::vector<int> hard_partition(const ClusterState& state) {
  std::vector<int> labels(state.n, 0);
  for (int i = 0; i < state.n; ++i) {
    int best = 0;
    double best_u = state.membership(i, 0);
    for (int k = 1; k < state.K; ++k) {
      const double u = state.membership(i, k);
      if (u > best_u) {
        best_u = u;
        best = k;
      }
    }
    labels[i] = best;
  }
  return labels;
}

std::vector<int> max_likelihood_trajectories(const ClusterState& state) {
  std::vector<int> winners(state.K, 0);
  for (int k = 0; k < state.K; ++k) {
    int best = 0;
    double best_u = state.membership(0, k);
    for (int i = 1; i < state.n; ++i) {
      const double u = state.membership(i, k);
      if (u > best_u) {
        best_u = u;
        best = i;
      }
    }
    winners[k] = best;
  }
  return winners;
}

CollapseReport detect_center_collapse(const ClusterState& state, const TrajectoryEnsemble& e,
                                      const GeometryConfig& g, double ratio) {
  if (!(ratio > 0.0)) fail("collapse ratio must be positive");
  CollapseReport report;
  report.threshold_ratio = ratio;
  const auto [diameter, sample_size] = sampled_diameter(e, g);
  report.data_diameter = diameter;
  report.sample_size = sample_size;

  const double threshold = ratio * diameter;
  for (int k1 = 0; k1 < state.K; ++k1) {
    for (int k2 = k1 + 1; k2 < state.K; ++k2) {
      double acc = 0.0;
      bool any = false;
      for (int t = 0; t < state.num_times; ++t) {
        if (!state.slice_defined(k1, t) || !state.slice_defined(k2, t)) continue;
        acc += slice_dissimilarity(state.center_slice(k1, t), state.center_slice(k2, t), g);
        any = true;
      }
      if (!any) continue;
      const double dist = std::sqrt(acc);
      if (dist < threshold || dist == 0.0) {
        report.pairs.push_back(
            {k1, k2, dist, diameter > 0.0 ? dist / diameter : 0.0});
      }
    }
  }
  return report;
}

std::vector<std::size_t> confidence_counts(const ClusterState& state,
                                           const std::vector<double>& thresholds) {
  std::vector<std::size_t> counts(thresholds.size(), 0);
  for (int i = 0; i < state.n; ++i) {
    double best = 0.0;
    for (int k = 0; k < state.K; ++k) best = std::max(best, state.membership(i, k));
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
      if (best > thresholds[j]) ++counts[j];
    }
  }
  return counts;
}

ClusterDiagnostics diagnose(const ClusterState& state, const TrajectoryEnsemble& e,
                            const GeometryConfig& g, double collapse_ratio,
                            const std::vector<double>& confidence_thresholds) {
  ClusterDiagnostics d;
  d.entropy = entropy_field(state);
  d.hard_labels = hard_partition(state);
  d.ml_trajectory = max_likelihood_trajectories(state);
  d.collapse = detect_center_collapse(state, e, g, collapse_ratio);
  d.confidence_thresholds = confidence_thresholds;
  d.confidence_counts = confidence_counts(state, confidence_thresholds);
  return d;
}

std::vector<int> min_cost_assignment(const std::vector<double>& cost, int K) {
  if (K < 1 || cost.size() != static_cast<std::size_t>(K) * K) {
    fail("assignment needs a K x K cost matrix");
  }
  // Replace non-finite entries by a value larger than any finite cost so the
  // potentials stay well defined.
  std::vector<double> c(cost);
  double max_finite = 0.0;
  for (const double v : c) {
    if (std::isfinite(v)) max_finite = std::max(max_finite, std::abs(v));
  }
  for (double& v : c) {
    if (!std::isfinite(v)) v = max_finite * (K + 1) + 1.0;
  }

  // Hungarian algorithm with row/column potentials, O(K^3).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pot_row(K + 1, 0.0), pot_col(K + 1, 0.0);
  std::vector<int> match(K + 1, 0), way(K + 1, 0);
  for (int i = 1; i <= K; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_slack(K + 1, inf);
    std::vector<std::uint8_t> used(K + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= K; ++j) {
        if (used[j]) continue;
        const double cur =
            c[static_cast<std::size_t>(i0 - 1) * K + (j - 1)] - pot_row[i0] - pot_col[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= K; ++j) {
        if (used[j]) {
          pot_row[match[j]] += delta;
          pot_col[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> result(K, -1);
  for (int j = 1; j <= K; ++j) {
    if (match[j]) result[match[j] - 1] = j - 1;
  }
  return result;
}

std::vector<double> center_matching_costs(const ClusterState& a, const ClusterState& b,
                                          const GeometryConfig& g) {
  if (a.K != b.K || a.d != b.d || a.num_times != b.num_times) {
    fail("cluster states must share K, d and num_times to be matched");
  }
  const int K = a.K;
  std::vector<double> cost(static_cast<std::size_t>(K) * K,
                           std::numeric_limits<double>::quiet_NaN());
  for (int ka = 0; ka < K; ++ka) {
    for (int kb = 0; kb < K; ++kb) {
      double acc = 0.0;
      bool any = false;
      for (int t = 0; t < a.num_times; ++t) {
        if (!a.slice_defined(ka, t) || !b.slice_defined(kb, t)) continue;
        acc += slice_dissimilarity(a.center_slice(ka, t), b.center_slice(kb, t), g);
        any = true;
      }
      cost[static_cast<std::size_t>(ka) * K + kb] =
          any ? acc : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return cost;
}

std::vector<int> match_clusters(const ClusterState& a, const ClusterState& b,
                                const GeometryConfig& g) {
  return min_cost_assignment(center_matching_costs(a, b, g), a.K);
}

std::vector<MStabilityRow> m_stability_sweep(const TrajectoryEnsemble& e,
                                             const GeometryConfig& g, const FcmConfig& base_cfg,
                                             const std::vector<double>& m_values) {
  if (m_values.empty()) fail("m sweep needs at least one value");
  std::vector<MStabilityRow> rows;
  rows.reserve(m_values.size() * base_cfg.K);

  ClusterState prev_state;
  std::vector<int> mapping(base_cfg.K);  // canonical label -> cluster index in current run
  std::iota(mapping.begin(), mapping.end(), 0);
  std::vector<std::vector<double>> prev_positions(base_cfg.K);

  for (std::size_t j = 0; j < m_values.size(); ++j) {
    FcmConfig cfg = base_cfg;
    cfg.m = m_values[j];
    ClusterState state = run(e, g, cfg);
    if (j > 0) {
      const auto perm = match_clusters(prev_state, state, g);
      std::vector<int> next(base_cfg.K);
      for (int c = 0; c < base_cfg.K; ++c) next[c] = perm[mapping[c]];
      mapping = next;
    }
    const auto ml = max_likelihood_trajectories(state);
    for (int c = 0; c < base_cfg.K; ++c) {
      MStabilityRow row;
      row.m = m_values[j];
      row.cluster = c;
      row.ml_index = ml[mapping[c]];
      row.t0 = earliest_observed_slice(e, row.ml_index);
      const auto pos = e.at(row.ml_index, row.t0);
      row.position.assign(pos.begin(), pos.end());
      if (j == 0) {
        row.drift_from_prev = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.drift_from_prev =
            std::sqrt(slice_dissimilarity(prev_positions[c], row.position, g));
      }
      prev_positions[c] = row.position;
      rows.push_back(std::move(row));
    }
    prev_state = std::move(state);
  }
  return rows;
}

std::vector<KStabilityRow> k_stability_sweep(const TrajectoryEnsemble& e,
                                             const GeometryConfig& g, const FcmConfig& base_cfg,
                                             const std::vector<int>& k_values,
                                             double collapse_ratio,
                                             const std::vector<double>& confidence_thresholds) {
  if (k_values.empty()) fail("K sweep needs at least one value");
  std::vector<KStabilityRow> rows;
  rows.reserve(k_values.size());
  for (const int k : k_values) {
    FcmConfig cfg = base_cfg;
    cfg.K = k;
    const ClusterState state = run(e, g, cfg);
    KStabilityRow row;
    row.K = k;
    const auto h = entropy_field(state);
    row.mean_entropy = std::accumulate(h.begin(), h.end(), 0.0) / h.size();
    row.max_entropy = *std::max_element(h.begin(), h.end());
    row.collapse = detect_center_collapse(state, e, g, collapse_ratio);
    row.confidence_counts = confidence_counts(state, confidence_thresholds);
    row.converged = state.converged;
    row.iterations = state.iterations;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace coherent
