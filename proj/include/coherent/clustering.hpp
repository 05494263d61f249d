#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coherent/ensemble.hpp"
#include "coherent/geometry.hpp"

namespace coherent {

enum class InitMethod { RandomMemberships, KmeansppCenters };

struct FcmConfig {
  int K = 2;                  ///< number of clusters, >= 2
  double m = 2.0;             ///< fuzziness exponent, > 1
  InitMethod init = InitMethod::RandomMemberships;
  std::uint64_t seed = 0;
  double tol = 1e-6;          ///< relative objective-improvement stopping threshold
  int max_iter = 300;
  bool normalize_by_support = false;  ///< weight terms by 1/|T_i|
  bool use_masses = false;            ///< weight terms by q_i
  int threads = 0;                    ///< 0 = hardware concurrency

  void validate() const;
};

/// State of a fuzzy clustering: K centers in the product space, the n x K
/// membership matrix (rows sum to 1), and the objective trace.
struct ClusterState {
  int K = 0;
  int d = 0;
  int num_times = 0;
  int n = 0;
  std::vector<double> centers;              ///< K * num_times * d, time-major per center
  std::vector<std::uint8_t> center_defined; ///< K * num_times; false where no data ever lands
  std::vector<double> memberships;          ///< n * K, row i holds u_{., i}
  std::vector<double> objective_history;    ///< one entry per completed iteration
  int iterations = 0;
  bool converged = false;
  int stale_center_slices = 0;  ///< slices kept from the previous iterate (zero total weight)

  std::span<double> center_slice(int k, int t) {
    return {centers.data() + (static_cast<std::size_t>(k) * num_times + t) * d,
            static_cast<std::size_t>(d)};
  }
  std::span<const double> center_slice(int k, int t) const {
    return {centers.data() + (static_cast<std::size_t>(k) * num_times + t) * d,
            static_cast<std::size_t>(d)};
  }
  std::span<const double> center(int k) const {
    return {centers.data() + static_cast<std::size_t>(k) * num_times * d,
            static_cast<std::size_t>(num_times) * d};
  }
  bool slice_defined(int k, int t) const {
    return center_defined[static_cast<std::size_t>(k) * num_times + t] != 0;
  }
  double membership(int i, int k) const {
    return memberships[static_cast<std::size_t>(i) * K + k];
  }
};

/// Projected squared distances from every trajectory to every center,
/// summing only slices that are both observed and defined. A row/center pair
/// with no common slice gets +infinity. Layout: D[i*K + k].
std::vector<double> center_distances(const ClusterState& state, const TrajectoryEnsemble& e,
                                     const GeometryConfig& g, int threads = 0);

/// Seeds memberships (random simplex rows, or k-means++ trajectory seeding
/// followed by one membership update).
ClusterState initialize(const TrajectoryEnsemble& e, const GeometryConfig& g,
                        const FcmConfig& cfg);

/// Recomputes every center slice as the weighted slice mean over I_t with
/// weights u^m (times q_i and/or 1/|T_i| per config).
void update_centers(ClusterState& state, const TrajectoryEnsemble& e,
                    const AvailabilityIndex& idx, const GeometryConfig& g, const FcmConfig& cfg);

/// Recomputes memberships from projected distances to the current centers.
/// Distances at or below 1e-14 take the whole row mass, split across ties.
void update_memberships(ClusterState& state, const TrajectoryEnsemble& e,
                        const GeometryConfig& g, const FcmConfig& cfg);

/// Weighted sum of projected squared distances under the current state.
double evaluate_objective(const ClusterState& state, const TrajectoryEnsemble& e,
                          const GeometryConfig& g, const FcmConfig& cfg);

/// Full clustering loop: initialize, then alternate center and membership
/// updates until the relative objective improvement drops below tol or
/// max_iter is reached. Deterministic for fixed inputs and seed, regardless
/// of the thread count.
ClusterState run(const TrajectoryEnsemble& e, const GeometryConfig& g, const FcmConfig& cfg);

/// Runs `restarts` seeds (cfg.seed, cfg.seed+1, ...) and keeps the state with
/// the lowest final objective.
ClusterState run_restarts(const TrajectoryEnsemble& e, const GeometryConfig& g,
                          const FcmConfig& cfg, int restarts);

}  // namespace coherent
