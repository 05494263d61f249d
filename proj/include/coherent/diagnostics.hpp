#pragma once

#include <cstddef>
#include <vector>

#include "coherent/clustering.hpp"
#include "coherent/ensemble.hpp"
#include "coherent/geometry.hpp"

namespace coherent {

/// Two centers whose summed per-slice separation falls under the collapse
/// threshold. `distance` is the root of the summed dissimilarity, `ratio` its
/// fraction of the sampled data diameter.
struct CollapsePair {
  int k1 = 0;
  int k2 = 0;
  double distance = 0.0;
  double ratio = 0.0;
};

struct CollapseReport {
  std::vector<CollapsePair> pairs;
  double data_diameter = 0.0;    ///< root of the largest sampled dynamic distance
  double threshold_ratio = 0.0;  ///< configured flagging ratio
  int sample_size = 0;
};

/// Normalized membership entropy per trajectory, in [0, 1]. Requires K >= 2.
std::vector<double> entropy_field(const ClusterState& state);

/// Argmax cluster per trajectory; ties resolve to the lowest index.
std::vector<int> hard_partition(const ClusterState& state);

/// Per cluster, the trajectory with the largest membership; ties resolve to
/// the lowest trajectory index.
std::vector<int> max_likelihood_trajectories(const ClusterState& state);

/// Flags center pairs closer than `ratio` times the data diameter, estimated
/// from a deterministic sample of at most 1000 trajectories.
CollapseReport detect_center_collapse(const ClusterState& state, const TrajectoryEnsemble& e,
                                      const GeometryConfig& g, double ratio = 0.05);

/// How many trajectories clear each max-membership threshold.
std::vector<std::size_t> confidence_counts(const ClusterState& state,
                                           const std::vector<double>& thresholds);

struct ClusterDiagnostics {
  std::vector<double> entropy;
  std::vector<int> hard_labels;
  std::vector<int> ml_trajectory;
  CollapseReport collapse;
  std::vector<double> confidence_thresholds;
  std::vector<std::size_t> confidence_counts;
};

ClusterDiagnostics diagnose(const ClusterState& state, const TrajectoryEnsemble& e,
                            const GeometryConfig& g, double collapse_ratio,
                            const std::vector<double>& confidence_thresholds);

/// Minimum-cost bipartite assignment on a K x K cost matrix (row-major).
/// Returns the column assigned to each row.
std::vector<int> min_cost_assignment(const std::vector<double>& cost, int K);

/// Summed per-slice center dissimilarity between clusters of two states, over
/// slices where both are defined; used as the assignment cost when matching
/// cluster labels across runs.
std::vector<double> center_matching_costs(const ClusterState& a, const ClusterState& b,
                                          const GeometryConfig& g);

/// Permutation p with p[k] = cluster of `b` matched to cluster k of `a`.
std::vector<int> match_clusters(const ClusterState& a, const ClusterState& b,
                                const GeometryConfig& g);

/// One row of the m-stability sweep: the maximum-likelihood trajectory of one
/// cluster at one fuzziness value, recorded at the earliest slice where that
/// trajectory is observed. `drift_from_prev` is the phase-space displacement
/// against the label-matched cluster at the previous m (NaN on the first m).
struct MStabilityRow {
  double m = 0.0;
  int cluster = 0;
  int ml_index = 0;
  int t0 = 0;
  std::vector<double> position;
  double drift_from_prev = 0.0;
};

/// Reruns the clustering over a list of fuzziness exponents (the protocol
/// starts at m=2 and decreases) and tracks where the maximum-likelihood
/// trajectories land. Cluster labels are chained to the previous run by
/// minimum-cost center matching.
std::vector<MStabilityRow> m_stability_sweep(const TrajectoryEnsemble& e,
                                             const GeometryConfig& g, const FcmConfig& base_cfg,
                                             const std::vector<double>& m_values);

struct KStabilityRow {
  int K = 0;
  double mean_entropy = 0.0;
  double max_entropy = 0.0;
  CollapseReport collapse;
  std::vector<std::size_t> confidence_counts;
  bool converged = false;
  int iterations = 0;
};

std::vector<KStabilityRow> k_stability_sweep(const TrajectoryEnsemble& e,
                                             const GeometryConfig& g, const FcmConfig& base_cfg,
                                             const std::vector<int>& k_values,
                                             double collapse_ratio,
                                             const std::vector<double>& confidence_thresholds);

}  // namespace coherent
