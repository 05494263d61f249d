#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coherent {

enum class CoordinateConvention { Cartesian, LonLatDegrees };

/// A set of n trajectories sampled on the shared time grid 0..num_times-1 in
/// d phase-space dimensions. Missing observations are carried by an explicit
/// boolean mask; masked entries of `positions` hold zeros and are never read.
struct TrajectoryEnsemble {
  int n = 0;
  int d = 0;
  int num_times = 0;
  std::vector<double> positions;    ///< n * num_times * d, trajectory-major, time-major inside
  std::vector<std::uint8_t> mask;   ///< n * num_times; true iff observation is available
  std::vector<double> masses;       ///< optional per-trajectory weights; empty means all 1
  std::vector<double> time_labels;  ///< optional source timestamps, export only
  std::vector<std::string> ids;     ///< per-trajectory identifiers, export only
  CoordinateConvention coords = CoordinateConvention::Cartesian;

  std::span<const double> at(int i, int t) const {
    return {positions.data() + (static_cast<std::size_t>(i) * num_times + t) * d,
            static_cast<std::size_t>(d)};
  }
  std::span<double> at_mutable(int i, int t) {
    return {positions.data() + (static_cast<std::size_t>(i) * num_times + t) * d,
            static_cast<std::size_t>(d)};
  }
  bool available(int i, int t) const {
    return mask[static_cast<std::size_t>(i) * num_times + t] != 0;
  }
  /// |T_i|, the number of available observations of trajectory i.
  int support_size(int i) const;
  double mass(int i) const { return masses.empty() ? 1.0 : masses[i]; }
  std::size_t available_count() const;

  /// Checks the structural invariants: sizes, nonempty supports, finite
  /// positions on the mask, nonnegative not-all-zero masses.
  /// Throws std::invalid_argument on violation.
  void validate() const;
};

/// Per-time index sets I_t = { i : t in T_i }.
struct AvailabilityIndex {
  std::vector<std::vector<int>> at_time;
  std::size_t total_observations() const;
};

enum class EnsembleFormat { LongCsv, WideCsv };

/// Creates an all-available ensemble with zeroed positions and ids "0".."n-1".
TrajectoryEnsemble make_ensemble(int n, int d, int num_times);

/// Reads an ensemble from CSV. Long format carries one row per available
/// observation (`id,t,c0,..[,mass]`); wide format one row per trajectory with
/// empty cells marking missing observations. A `<stem>.manifest.json` sidecar,
/// when present, is cross-checked and supplies the coordinate convention.
TrajectoryEnsemble load_ensemble(const std::filesystem::path& path, EnsembleFormat format);

/// Writes the ensemble plus its manifest sidecar. Files are written atomically.
void save_ensemble(const TrajectoryEnsemble& e, const std::filesystem::path& path,
                   EnsembleFormat format);

/// Removes each available observation independently with probability
/// `fraction`, redrawing any trajectory that would lose all observations.
/// Deterministic for a fixed seed.
TrajectoryEnsemble thin_ensemble(const TrajectoryEnsemble& e, double fraction,
                                 std::uint64_t seed);

AvailabilityIndex build_availability_index(const TrajectoryEnsemble& e);

/// Path of the JSON manifest sidecar for a data file ("data.csv" ->
/// "data.manifest.json").
std::filesystem::path ensemble_manifest_path(const std::filesystem::path& data_path);

}  // namespace coherent
