#include "coherent/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace coherent {

namespace {

constexpr double kSphereUnitTol = 1e-9;
constexpr double kDegenerateMeanNorm = 1e-12;
constexpr double kAxesOrthoTol = 1e-10;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double sq(double v) { return v * v; }

double euclidean_sq(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += sq(a[c] - b[c]);
  return acc;
}

double ellipsoid_sq(std::span<const double> a, std::span<const double> b,
                    const GeometryConfig& g) {
  const std::size_t d = a.size();
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double proj = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      proj += (a[c] - b[c]) * g.ellipsoid_axes[j * d + c];
    }
    acc += sq(proj / g.ellipsoid_lengths[j]);
  }
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += a[c] * b[c];
  return acc;
}

void check_unit(std::span<const double> p) {
  const double norm2 = dot(p, p);
  if (std::abs(norm2 - 1.0) > 2.0 * kSphereUnitTol) {
    fail("sphere geometry requires unit vectors (|norm^2 - 1| = " +
         std::to_string(std::abs(norm2 - 1.0)) + ")");
  }
}

/// Dispatch without sphere unit checks; callers on the hot path validate the
/// ensemble once via validate_geometry_data.
double dissim_unchecked(std::span<const double> a, std::span<const double> b,
                        const GeometryConfig& g) {
  switch (g.kind) {
    case GeometryKind::Euclidean:
      return euclidean_sq(a, b);
    case GeometryKind::Ellipsoid:
      return ellipsoid_sq(a, b, g);
    case GeometryKind::Sphere:
      return 1.0 - dot(a, b);
    case GeometryKind::Circle:
      return 1.0 - std::cos(2.0 * M_PI * (a[0] - b[0]));
  }
  fail("unknown geometry kind");
}

}  // namespace

GeometryConfig GeometryConfig::euclidean() { return {}; }

GeometryConfig GeometryConfig::ellipsoid(std::vector<double> axes, std::vector<double> lengths) {
  GeometryConfig g;
  g.kind = GeometryKind::Ellipsoid;
  g.ellipsoid_axes = std::move(axes);
  g.ellipsoid_lengths = std::move(lengths);
  return g;
}

GeometryConfig GeometryConfig::axis_aligned_ellipsoid(std::vector<double> lengths) {
  const std::size_t d = lengths.size();
  std::vector<double> axes(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) axes[j * d + j] = 1.0;
  return ellipsoid(std::move(axes), std::move(lengths));
}

GeometryConfig GeometryConfig::sphere(bool lift_lonlat) {
  GeometryConfig g;
  g.kind = GeometryKind::Sphere;
  g.sphere_lift = lift_lonlat;
  return g;
}

GeometryConfig GeometryConfig::circle() {
  GeometryConfig g;
  g.kind = GeometryKind::Circle;
  return g;
}

void GeometryConfig::validate(int d) const {
  switch (kind) {
    case GeometryKind::Euclidean:
      return;
    case GeometryKind::Ellipsoid: {
      const auto dd = static_cast<std::size_t>(d);
      if (ellipsoid_lengths.size() != dd) fail("ellipsoid needs d semi-axis lengths");
      if (ellipsoid_axes.size() != dd * dd) fail("ellipsoid needs d x d axis matrix");
      for (const double l : ellipsoid_lengths) {
        if (!(l > 0.0) || !std::isfinite(l)) fail("ellipsoid lengths must be positive");
      }
      for (std::size_t j = 0; j < dd; ++j) {
        for (std::size_t k = j; k < dd; ++k) {
          double proj = 0.0;
          for (std::size_t c = 0; c < dd; ++c) {
            proj += ellipsoid_axes[j * dd + c] * ellipsoid_axes[k * dd + c];
          }
          const double want = j == k ? 1.0 : 0.0;
          if (std::abs(proj - want) > kAxesOrthoTol) {
            fail("ellipsoid axes must be orthonormal within 1e-10");
          }
        }
      }
      return;
    }
    case GeometryKind::Sphere:
      if (d < 2) fail("sphere geometry requires d >= 2");
      return;
    case GeometryKind::Circle:
      if (d != 1) fail("circle geometry requires d = 1");
      return;
  }
  fail("unknown geometry kind");
}

double slice_dissimilarity(std::span<const double> a, std::span<const double> b,
                           const GeometryConfig& g) {
  if (a.size() != b.size()) fail("slice points must share a dimension");
  if (g.kind == GeometryKind::Sphere) {
    check_unit(a);
    check_unit(b);
  }
  return dissim_unchecked(a, b, g);
}

std::optional<double> dynamic_distance(int i, int j, const TrajectoryEnsemble& e,
                                       const GeometryConfig& g) {
  double acc = 0.0;
  bool any = false;
  for (int t = 0; t < e.num_times; ++t) {
    if (!e.available(i, t) || !e.available(j, t)) continue;
    acc += dissim_unchecked(e.at(i, t), e.at(j, t), g);
    any = true;
  }
  if (!any) return std::nullopt;
  return acc;
}

double projected_center_distance(int i, const TrajectoryEnsemble& e,
                                 std::span<const double> center, const GeometryConfig& g) {
  if (center.size() != static_cast<std::size_t>(e.num_times) * e.d) {
    fail("center vector must have num_times * d entries");
  }
  double acc = 0.0;
  for (int t = 0; t < e.num_times; ++t) {
    if (!e.available(i, t)) continue;
    acc += dissim_unchecked(e.at(i, t), center.subspan(static_cast<std::size_t>(t) * e.d, e.d), g);
  }
  return acc;
}

void accumulate_slice_point(const GeometryConfig& g, std::span<const double> p, double w,
                            std::span<double> acc) {
  if (g.kind == GeometryKind::Circle) {
    acc[0] += w * std::cos(2.0 * M_PI * p[0]);
    acc[1] += w * std::sin(2.0 * M_PI * p[0]);
    return;
  }
  for (std::size_t c = 0; c < p.size(); ++c) acc[c] += w * p[c];
}

bool finalize_slice_mean(const GeometryConfig& g, std::span<const double> acc, double weight_sum,
                         std::span<double> out) {
  if (!(weight_sum > 0.0)) return false;
  switch (g.kind) {
    case GeometryKind::Euclidean:
    case GeometryKind::Ellipsoid:
      for (std::size_t c = 0; c < out.size(); ++c) out[c] = acc[c] / weight_sum;
      return true;
    case GeometryKind::Sphere: {
      const double norm = std::sqrt(dot(acc, acc)) / weight_sum;
      if (norm < kDegenerateMeanNorm) return false;
      const double scale = 1.0 / (norm * weight_sum);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] = acc[c] * scale;
      return true;
    }
    case GeometryKind::Circle: {
      const double norm = std::hypot(acc[0], acc[1]) / weight_sum;
      if (norm < kDegenerateMeanNorm) return false;
      double angle = std::atan2(acc[1], acc[0]) / (2.0 * M_PI);
      if (angle < 0.0) angle += 1.0;
      if (angle >= 1.0) angle -= 1.0;
      out[0] = angle;
      return true;
    }
  }
  return false;
}

std::vector<double> center_slice_mean(const std::vector<std::vector<double>>& points,
                                      const std::vector<double>& weights,
                                      const GeometryConfig& g) {
  if (points.empty() || points.size() != weights.size()) {
    fail("center_slice_mean needs matching nonempty points and weights");
  }
  const int d = static_cast<int>(points.front().size());
  g.validate(d);
  for (const double w : weights) {
    if (!(w >= 0.0)) fail("weights must be nonnegative");
  }
  std::vector<double> acc(g.mean_accum_dim(d), 0.0);
  double weight_sum = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (points[p].size() != static_cast<std::size_t>(d)) fail("points must share a dimension");
    if (g.kind == GeometryKind::Sphere) check_unit(points[p]);
    accumulate_slice_point(g, points[p], weights[p], acc);
    weight_sum += weights[p];
  }
  std::vector<double> out(d, 0.0);
  if (!finalize_slice_mean(g, acc, weight_sum, out)) {
    if (!(weight_sum > 0.0)) fail("center_slice_mean requires a positive total weight");
    fail("degenerate spherical mean: weighted point sum has vanishing norm");
  }
  return out;
}

std::array<double, 3> lift_lonlat(double lon_deg, double lat_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
    fail("latitude out of range [-90, 90]: " + std::to_string(lat_deg));
  }
  const double lon = lon_deg * M_PI / 180.0;
  const double lat = lat_deg * M_PI / 180.0;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

TrajectoryEnsemble lift_lonlat_ensemble(const TrajectoryEnsemble& e) {
  if (e.d != 2) fail("lon/lat lift requires d = 2 input");
  TrajectoryEnsemble out = make_ensemble(e.n, 3, e.num_times);
  out.mask = e.mask;
  out.masses = e.masses;
  out.time_labels = e.time_labels;
  out.ids = e.ids;
  out.coords = CoordinateConvention::Cartesian;
  for (int i = 0; i < e.n; ++i) {
    for (int t = 0; t < e.num_times; ++t) {
      if (!e.available(i, t)) continue;
      const auto src = e.at(i, t);
      const auto lifted = lift_lonlat(src[0], src[1]);
      auto dst = out.at_mutable(i, t);
      std::copy(lifted.begin(), lifted.end(), dst.begin());
    }
  }
  return out;
}

void validate_geometry_data(const TrajectoryEnsemble& e, const GeometryConfig& g) {
  g.validate(e.d);
  if (g.kind != GeometryKind::Sphere) return;
  for (int i = 0; i < e.n; ++i) {
    for (int t = 0; t < e.num_times; ++t) {
      if (e.available(i, t)) check_unit(e.at(i, t));
    }
  }
}

TrajectoryEnsemble apply_ellipsoid_scaling(const TrajectoryEnsemble& e, const GeometryConfig& g) {
  g.validate(e.d);
  if (g.kind != GeometryKind::Ellipsoid) fail("ellipsoid scaling requires ellipsoid geometry");
  const auto d = static_cast<std::size_t>(e.d);
  TrajectoryEnsemble out = e;
  std::vector<double> scaled(d);
  for (int i = 0; i < e.n; ++i) {
    for (int t = 0; t < e.num_times; ++t) {
      if (!e.available(i, t)) continue;
      const auto src = e.at(i, t);
      for (std::size_t j = 0; j < d; ++j) {
        double proj = 0.0;
        for (std::size_t c = 0; c < d; ++c) proj += src[c] * g.ellipsoid_axes[j * d + c];
        scaled[j] = proj / g.ellipsoid_lengths[j];
      }
      // Re-express in the original frame: x' = sum_j scaled_j v_j.
      auto dst = out.at_mutable(i, t);
      for (std::size_t c = 0; c < d; ++c) {
        double v = 0.0;
        for (std::size_t j = 0; j < d; ++j) v += scaled[j] * g.ellipsoid_axes[j * d + c];
        dst[c] = v;
      }
    }
  }
  return out;
}

void unscale_ellipsoid_points(std::span<double> flat, int d, const GeometryConfig& g) {
  g.validate(d);
  const auto dd = static_cast<std::size_t>(d);
  std::vector<double> coeff(dd);
  for (std::size_t off = 0; off + dd <= flat.size(); off += dd) {
    auto p = flat.subspan(off, dd);
    for (std::size_t j = 0; j < dd; ++j) {
      double proj = 0.0;
      for (std::size_t c = 0; c < dd; ++c) proj += p[c] * g.ellipsoid_axes[j * dd + c];
      coeff[j] = proj * g.ellipsoid_lengths[j];
    }
    for (std::size_t c = 0; c < dd; ++c) {
      double v = 0.0;
      for (std::size_t j = 0; j < dd; ++j) v += coeff[j] * g.ellipsoid_axes[j * dd + c];
      p[c] = v;
    }
  }
}

EmbeddedPoint embed_trajectory(const TrajectoryEnsemble& e, int i) {
  EmbeddedPoint p;
  p.coords.resize(static_cast<std::size_t>(e.num_times) * e.d, 0.0);
  p.mask.resize(e.num_times);
  for (int t = 0; t < e.num_times; ++t) {
    p.mask[t] = e.available(i, t) ? 1 : 0;
    if (!p.mask[t]) continue;
    const auto src = e.at(i, t);
    std::copy(src.begin(), src.end(), p.coords.begin() + static_cast<std::size_t>(t) * e.d);
  }
  return p;
}

}  // namespace coherent
