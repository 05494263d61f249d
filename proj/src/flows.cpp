#include "coherent/flows.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "coherent/parallel.hpp"
#include "coherent/rng.hpp"

namespace coherent {

namespace {

constexpr double kThird = 1.0 / 3.0;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

/// v mod 1/3 with a guarded floor so values a hair under a multiple of 1/3
/// cannot round up out of [0, 1/3).
double mod_third(double v) {
  double r = v - std::floor(v * 3.0) * kThird;
  if (r >= kThird) r -= kThird;
  if (r < 0.0) r += kThird;
  return r;
}

double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;
  if (r < 0.0) r += 1.0;
  return r;
}

double transition(double t) {
  if (t < 0.0) return 0.0;
  if (t > 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

struct Domain {
  double width;
  double height;
};

Domain flow_domain(FlowKind kind) {
  switch (kind) {
    case FlowKind::DoubleGyre:
      return {2.0, 1.0};
    case FlowKind::TransitoryDoubleGyre:
      return {1.0, 1.0};
    case FlowKind::IntervalMap3:
      return {1.0, 0.0};
  }
  fail("unknown flow kind");
}

void eval_velocity(const FlowSpec& spec, double x, double y, double t, double& dx, double& dy) {
  if (spec.kind == FlowKind::DoubleGyre) {
    double_gyre_velocity(x, y, t, spec.gyre_amplitude, spec.gyre_delta, spec.gyre_omega, dx, dy);
  } else {
    transitory_double_gyre_velocity(x, y, t, dx, dy);
  }
}

void rk4_step(const FlowSpec& spec, double& x, double& y, double t, double h) {
  double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
  eval_velocity(spec, x, y, t, k1x, k1y);
  eval_velocity(spec, x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h, k2x, k2y);
  eval_velocity(spec, x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h, k3x, k3y);
  eval_velocity(spec, x + h * k3x, y + h * k3y, t + h, k4x, k4y);
  x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
}

std::vector<double> seed_positions(const FlowSpec& spec) {
  const Domain dom = flow_domain(spec.kind);
  std::vector<double> seeds;
  if (spec.kind == FlowKind::IntervalMap3) {
    seeds.resize(spec.n);
    if (spec.seeding == SeedingKind::UniformRandom) {
      Rng rng(spec.seed);
      for (int i = 0; i < spec.n; ++i) seeds[i] = rng.uniform01();
    } else {
      for (int i = 0; i < spec.n; ++i) seeds[i] = (i + 0.5) / spec.n;
    }
    return seeds;
  }
  seeds.resize(static_cast<std::size_t>(spec.n) * 2);
  if (spec.seeding == SeedingKind::UniformRandom) {
    Rng rng(spec.seed);
    for (int i = 0; i < spec.n; ++i) {
      seeds[2 * static_cast<std::size_t>(i)] = rng.uniform01() * dom.width;
      seeds[2 * static_cast<std::size_t>(i) + 1] = rng.uniform01() * dom.height;
    }
  } else {
    const auto [rows, cols] = grid_shape(spec.n, dom.width / dom.height);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const auto i = static_cast<std::size_t>(r) * cols + c;
        seeds[2 * i] = (c + 0.5) * dom.width / cols;
        seeds[2 * i + 1] = (r + 0.5) * dom.height / rows;
      }
    }
  }
  return seeds;
}

}  // namespace

void FlowSpec::validate() const {
  if (n < 1) fail("flow needs at least one trajectory");
  if (!(std::isfinite(gyre_amplitude) && std::isfinite(gyre_delta) && std::isfinite(gyre_omega))) {
    fail("flow parameters must be finite");
  }
  if (kind == FlowKind::IntervalMap3) {
    if (output_stride != 1.0) fail("interval map requires output stride 1");
    if (!(t_end >= 1.0) || std::abs(t_end - std::round(t_end)) > 1e-9) {
      fail("interval map duration must be a positive integer iterate count");
    }
    return;
  }
  if (!(t_end > 0.0)) fail("flow duration must be positive");
  if (!(output_stride > 0.0)) fail("output stride must be positive");
  const double count = t_end / output_stride;
  if (std::abs(count - std::round(count)) > 1e-9) {
    fail("output stride must divide the flow duration");
  }
  if (!(integrator_step > 0.0)) fail("integrator step must be positive");
}

double interval_map_step(double x) {
  const double v = wrap_unit(x);
  if (v < kThird) return mod_third(3.0 * v) + kThird;
  if (v < 2.0 * kThird) return mod_third(3.0 * v - kThird) + 2.0 * kThird;
  return mod_third(3.0 * v - 2.0 * kThird);
}

void double_gyre_velocity(double x, double y, double t, double amplitude, double delta,
                          double omega, double& dx, double& dy) {
  const double a = delta * std::sin(omega * t);
  const double b = 1.0 - 2.0 * a;
  const double f = a * x * x + b * x;
  const double dfdx = 2.0 * a * x + b;
  dx = -M_PI * amplitude * std::sin(M_PI * f) * std::cos(M_PI * y);
  dy = M_PI * amplitude * std::cos(M_PI * f) * std::sin(M_PI * y) * dfdx;
}

void transitory_double_gyre_velocity(double x, double y, double t, double& dx, double& dy) {
  const double s = transition(t);
  // Psi = (1-s) sin(2 pi x) sin(pi y) + s sin(pi x) sin(2 pi y);
  // dx = -dPsi/dy, dy = dPsi/dx.
  dx = -((1.0 - s) * M_PI * std::sin(2.0 * M_PI * x) * std::cos(M_PI * y) +
         s * 2.0 * M_PI * std::sin(M_PI * x) * std::cos(2.0 * M_PI * y));
  dy = (1.0 - s) * 2.0 * M_PI * std::cos(2.0 * M_PI * x) * std::sin(M_PI * y) +
       s * M_PI * std::cos(M_PI * x) * std::sin(2.0 * M_PI * y);
}

std::pair<int, int> grid_shape(int n, double aspect) {
  if (n < 1) fail("grid needs at least one point");
  if (!(aspect > 0.0)) fail("aspect must be positive");
  int best_rows = 1;
  double best_log = std::numeric_limits<double>::infinity();
  double best_lin = std::numeric_limits<double>::infinity();
  for (int rows = 1; rows <= n; ++rows) {
    if (n % rows != 0) continue;
    const int cols = n / rows;
    const double ratio = static_cast<double>(cols) / rows;
    const double log_dev = std::abs(std::log(ratio) - std::log(aspect));
    const double lin_dev = std::abs(ratio - aspect);
    if (log_dev < best_log - 1e-12 ||
        (std::abs(log_dev - best_log) <= 1e-12 && lin_dev < best_lin)) {
      best_log = log_dev;
      best_lin = lin_dev;
      best_rows = rows;
    }
  }
  return {best_rows, n / best_rows};
}

TrajectoryEnsemble integrate_ensemble(const FlowSpec& spec, int threads) {
  spec.validate();
  const auto seeds = seed_positions(spec);

  if (spec.kind == FlowKind::IntervalMap3) {
    const int iterates = static_cast<int>(std::llround(spec.t_end));
    TrajectoryEnsemble e = make_ensemble(spec.n, 1, iterates + 1);
    e.time_labels.resize(iterates + 1);
    for (int t = 0; t <= iterates; ++t) e.time_labels[t] = t;
    parallel_for(spec.n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double x = wrap_unit(seeds[i]);
        e.at_mutable(static_cast<int>(i), 0)[0] = x;
        for (int t = 1; t <= iterates; ++t) {
          x = interval_map_step(x);
          e.at_mutable(static_cast<int>(i), t)[0] = x;
        }
      }
    });
    return e;
  }

  const int strides = static_cast<int>(std::llround(spec.t_end / spec.output_stride));
  const int steps_per_stride =
      std::max(1, static_cast<int>(std::llround(spec.output_stride / spec.integrator_step)));
  const double h = spec.output_stride / steps_per_stride;

  TrajectoryEnsemble e = make_ensemble(spec.n, 2, strides + 1);
  e.time_labels.resize(strides + 1);
  for (int t = 0; t <= strides; ++t) e.time_labels[t] = t * spec.output_stride;

  parallel_for(spec.n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double x = seeds[2 * i];
      double y = seeds[2 * i + 1];
      auto first = e.at_mutable(static_cast<int>(i), 0);
      first[0] = x;
      first[1] = y;
      for (int out = 1; out <= strides; ++out) {
        const double t0 = (out - 1) * spec.output_stride;
        for (int s = 0; s < steps_per_stride; ++s) {
          rk4_step(spec, x, y, t0 + s * h, h);
        }
        auto slot = e.at_mutable(static_cast<int>(i), out);
        slot[0] = x;
        slot[1] = y;
      }
    }
  });
  return e;
}

}  // namespace coherent
