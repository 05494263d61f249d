#pragma once

#include <cstdint>
#include <utility>

#include "coherent/ensemble.hpp"

namespace coherent {

enum class FlowKind { IntervalMap3, DoubleGyre, TransitoryDoubleGyre };
enum class SeedingKind { UniformRandom, UniformGrid };

/// A synthetic trajectory generator: one of the benchmark systems plus the
/// seeding layout, duration and sampling cadence.
struct FlowSpec {
  FlowKind kind = FlowKind::DoubleGyre;
  double gyre_amplitude = 0.25;        ///< A
  double gyre_delta = 0.25;            ///< delta
  double gyre_omega = 2.0 * 3.14159265358979323846;  ///< omega
  SeedingKind seeding = SeedingKind::UniformGrid;
  int n = 0;
  std::uint64_t seed = 0;              ///< for uniform-random seeding
  double t_end = 0.0;                  ///< flow time tau, or iterate count for the map
  double output_stride = 0.1;          ///< 1 per iterate for the map kind
  double integrator_step = 1e-2;       ///< internal fixed RK4 step

  void validate() const;
};

/// One step of the three-branch circle map that cyclically permutes
/// [0,1/3), [1/3,2/3) and [2/3,1) while expanding inside each interval.
/// The input is wrapped into [0,1); boundary points take the right-hand
/// branch.
double interval_map_step(double x);

/// Periodically perturbed double gyre velocity field on [0,2] x [0,1].
void double_gyre_velocity(double x, double y, double t, double amplitude, double delta,
                          double omega, double& dx, double& dy);

/// Transitory double gyre on [0,1]^2: a stream-function flow whose gyre pair
/// rotates by 90 degrees as t runs over [0,1] (frozen outside it).
void transitory_double_gyre_velocity(double x, double y, double t, double& dx, double& dy);

/// Integrates the configured flow with fixed-step RK4 (the map kind iterates
/// exactly), sampling every output_stride. The result has a full mask and
/// time labels at the output instants.
TrajectoryEnsemble integrate_ensemble(const FlowSpec& spec, int threads = 0);

/// Factors n into rows x cols with cols/rows as close as possible to the
/// domain aspect ratio (exact factorizations only).
std::pair<int, int> grid_shape(int n, double aspect);

}  // namespace coherent
