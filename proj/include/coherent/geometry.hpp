#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "coherent/ensemble.hpp"

namespace coherent {

enum class GeometryKind { Euclidean, Ellipsoid, Sphere, Circle };

/// Per-time-slice geometry: which dissimilarity rho^2 the dynamic metric sums
/// and which mean rule center updates use.
///
///   euclidean  squared Euclidean distance, arithmetic mean
///   ellipsoid  squared Euclidean after scaling components along each axis
///              v_j by 1/l_j, arithmetic mean
///   sphere     cosine dissimilarity 1 - <a,b> on unit vectors, mean
///              renormalized back onto the sphere
///   circle     d=1 angles in [0,1) on S^1, handled as the sphere case via
///              the planar lift x -> (cos 2*pi*x, sin 2*pi*x)
struct GeometryConfig {
  GeometryKind kind = GeometryKind::Euclidean;
  std::vector<double> ellipsoid_axes;     ///< d*d, row j is the unit axis v_j
  std::vector<double> ellipsoid_lengths;  ///< d positive semi-axis lengths
  bool sphere_lift = false;               ///< sphere: input is lon/lat degrees, lift before use

  static GeometryConfig euclidean();
  static GeometryConfig ellipsoid(std::vector<double> axes, std::vector<double> lengths);
  /// Ellipsoid with the coordinate axes as semi-axis directions.
  static GeometryConfig axis_aligned_ellipsoid(std::vector<double> lengths);
  static GeometryConfig sphere(bool lift_lonlat = false);
  static GeometryConfig circle();

  /// Checks the configuration against a data dimension: orthonormal ellipsoid
  /// axes (1e-10), positive lengths, circle requires d=1, sphere d>=2.
  void validate(int d) const;

  /// Dimension of the accumulation space used by slice means (2 for circle,
  /// d otherwise).
  int mean_accum_dim(int d) const { return kind == GeometryKind::Circle ? 2 : d; }
};

/// rho^2 between two phase-space points under the configured geometry.
/// Sphere inputs must be unit vectors within 1e-9.
double slice_dissimilarity(std::span<const double> a, std::span<const double> b,
                           const GeometryConfig& g);

/// Dynamic (squared) distance between trajectories i and j: the sum of slice
/// dissimilarities over the common support T_i intersect T_j. Empty common
/// support yields nullopt.
std::optional<double> dynamic_distance(int i, int j, const TrajectoryEnsemble& e,
                                       const GeometryConfig& g);

/// Sum of slice dissimilarities between trajectory i and a full center vector
/// (num_times * d, time-major) over T_i.
double projected_center_distance(int i, const TrajectoryEnsemble& e,
                                 std::span<const double> center, const GeometryConfig& g);

/// Weighted slice mean under the geometry's rule. Throws on nonpositive total
/// weight and on a degenerate spherical mean (norm below 1e-12).
std::vector<double> center_slice_mean(const std::vector<std::vector<double>>& points,
                                      const std::vector<double>& weights,
                                      const GeometryConfig& g);

/// Streaming form of the slice mean used by clustering: acc has
/// mean_accum_dim(d) entries and collects w-weighted (lifted) points;
/// finalize writes the center in data representation and reports failure for
/// zero weight or a degenerate spherical mean instead of throwing.
void accumulate_slice_point(const GeometryConfig& g, std::span<const double> p, double w,
                            std::span<double> acc);
bool finalize_slice_mean(const GeometryConfig& g, std::span<const double> acc, double weight_sum,
                         std::span<double> out);

/// (lon, lat) in degrees to a unit 3-vector; latitude must lie in [-90, 90].
std::array<double, 3> lift_lonlat(double lon_deg, double lat_deg);

/// Lifts a d=2 lon/lat ensemble to d=3 unit vectors on the sphere.
TrajectoryEnsemble lift_lonlat_ensemble(const TrajectoryEnsemble& e);

/// Checks that ensemble data is admissible for the geometry (unit norms for
/// the sphere, d=1 for the circle). Throws std::invalid_argument on failure.
void validate_geometry_data(const TrajectoryEnsemble& e, const GeometryConfig& g);

/// Pre-transform for the ellipsoid geometry: scales coordinates by 1/l_j
/// along each axis, after which the Euclidean rules apply.
TrajectoryEnsemble apply_ellipsoid_scaling(const TrajectoryEnsemble& e, const GeometryConfig& g);

/// Inverse post-transform for centers computed in the scaled frame. Operates
/// in place on a flat array of points of dimension d.
void unscale_ellipsoid_points(std::span<double> flat, int d, const GeometryConfig& g);

/// A trajectory as one point of the product space R^{d(T+1)}, time-major,
/// with its availability row for projections.
struct EmbeddedPoint {
  std::vector<double> coords;
  std::vector<std::uint8_t> mask;
};

EmbeddedPoint embed_trajectory(const TrajectoryEnsemble& e, int i);

}  // namespace coherent
