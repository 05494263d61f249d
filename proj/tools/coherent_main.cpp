// Command-line front end: generates benchmark trajectory data, thins it,
// clusters it into finite-time coherent sets, and reports diagnostics.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coherent/clustering.hpp"
#include "coherent/diagnostics.hpp"
#include "coherent/ensemble.hpp"
#include "coherent/flows.hpp"
#include "coherent/geometry.hpp"
#include "coherent/io.hpp"
#include "coherent/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coherent;

namespace {

EnsembleFormat parse_format(const std::string& name) {
  if (name == "long" || name == "long-csv") return EnsembleFormat::LongCsv;
  if (name == "wide" || name == "wide-csv") return EnsembleFormat::WideCsv;
  throw std::invalid_argument("unknown ensemble format: " + name);
}

std::string format_name(EnsembleFormat f) {
  return f == EnsembleFormat::LongCsv ? "long-csv" : "wide-csv";
}

/// Short number formatting for labels and messages (data values use the
/// 17-digit format_double).
std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::uint64_t env_or_default_seed(std::uint64_t flag_value, bool flag_given) {
  if (flag_given) return flag_value;
  if (const char* env = std::getenv("RUN_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return flag_value;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v;
    if (!parse_double(item, v)) throw std::invalid_argument("bad numeric list entry: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty numeric list");
  return out;
}

struct GeometryFlags {
  std::string name = "euclidean";
  std::string ellipsoid_lengths;
  std::string ellipsoid_axes;
};

/// Builds the geometry from flags and applies any input lift (lon/lat to the
/// unit sphere). Returns the geometry and the ensemble clustering will see.
std::pair<GeometryConfig, TrajectoryEnsemble> prepare_geometry(const GeometryFlags& flags,
                                                               TrajectoryEnsemble e) {
  if (flags.name == "euclidean") {
    return {GeometryConfig::euclidean(), std::move(e)};
  }
  if (flags.name == "ellipsoid") {
    if (flags.ellipsoid_lengths.empty()) {
      throw std::invalid_argument("ellipsoid geometry needs --ellipsoid-lengths");
    }
    const auto lengths = parse_double_list(flags.ellipsoid_lengths);
    GeometryConfig g;
    if (flags.ellipsoid_axes.empty()) {
      g = GeometryConfig::axis_aligned_ellipsoid(lengths);
    } else {
      g = GeometryConfig::ellipsoid(parse_double_list(flags.ellipsoid_axes), lengths);
    }
    g.validate(e.d);
    return {g, std::move(e)};
  }
  if (flags.name == "sphere") {
    const bool lift = e.coords == CoordinateConvention::LonLatDegrees;
    auto g = GeometryConfig::sphere(lift);
    if (lift) {
      auto lifted = lift_lonlat_ensemble(e);
      return {g, std::move(lifted)};
    }
    return {g, std::move(e)};
  }
  if (flags.name == "circle") {
    return {GeometryConfig::circle(), std::move(e)};
  }
  throw std::invalid_argument("unknown geometry: " + flags.name);
}

json geometry_to_json(const GeometryConfig& g, const GeometryFlags& flags) {
  json j;
  j["kind"] = flags.name;
  if (g.kind == GeometryKind::Sphere) j["lift"] = g.sphere_lift;
  if (g.kind == GeometryKind::Ellipsoid) {
    j["lengths"] = g.ellipsoid_lengths;
    j["axes"] = g.ellipsoid_axes;
  }
  return j;
}

struct ClusterFlags {
  std::string input;
  std::string format = "long";
  GeometryFlags geometry;
  int k = 2;
  double m = 2.0;
  std::string init = "random";
  std::uint64_t seed = 0;
  bool seed_given = false;
  double tol = 1e-6;
  int max_iter = 300;
  bool normalize_by_support = false;
  bool use_masses = false;
  int restarts = 1;
  int threads = 0;
};

FcmConfig to_config(const ClusterFlags& flags) {
  FcmConfig cfg;
  cfg.K = flags.k;
  cfg.m = flags.m;
  if (flags.init == "random" || flags.init == "random-memberships") {
    cfg.init = InitMethod::RandomMemberships;
  } else if (flags.init == "kmeanspp" || flags.init == "kmeanspp-centers") {
    cfg.init = InitMethod::KmeansppCenters;
  } else {
    throw std::invalid_argument("unknown init method: " + flags.init);
  }
  cfg.seed = env_or_default_seed(flags.seed, flags.seed_given);
  cfg.tol = flags.tol;
  cfg.max_iter = flags.max_iter;
  cfg.normalize_by_support = flags.normalize_by_support;
  cfg.use_masses = flags.use_masses;
  cfg.threads = flags.threads;
  return cfg;
}

void write_memberships_csv(const fs::path& path, const ClusterState& s,
                           const TrajectoryEnsemble& e) {
  atomic_write_file(path, [&](std::ostream& out) {
    out << "trajectory_id,k,u\n";
    for (int i = 0; i < s.n; ++i) {
      for (int k = 0; k < s.K; ++k) {
        out << e.ids[i] << "," << k << "," << format_double(s.membership(i, k)) << "\n";
      }
    }
  });
}

void write_centers_csv(const fs::path& path, const ClusterState& s) {
  atomic_write_file(path, [&](std::ostream& out) {
    out << "k,t";
    for (int c = 0; c < s.d; ++c) out << ",c" << c;
    out << ",defined\n";
    for (int k = 0; k < s.K; ++k) {
      for (int t = 0; t < s.num_times; ++t) {
        out << k << "," << t;
        for (const double v : s.center_slice(k, t)) out << "," << format_double(v);
        out << "," << (s.slice_defined(k, t) ? 1 : 0) << "\n";
      }
    }
  });
}

struct LoadedRun {
  TrajectoryEnsemble ensemble;  // already lifted if the run was
  GeometryConfig geometry;
  ClusterState state;
  json manifest;
};

GeometryConfig geometry_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "euclidean") return GeometryConfig::euclidean();
  if (kind == "circle") return GeometryConfig::circle();
  if (kind == "sphere") return GeometryConfig::sphere(j.value("lift", false));
  if (kind == "ellipsoid") {
    return GeometryConfig::ellipsoid(j.at("axes").get<std::vector<double>>(),
                                     j.at("lengths").get<std::vector<double>>());
  }
  throw std::runtime_error("unknown geometry kind in manifest: " + kind);
}

LoadedRun load_run(const fs::path& run_dir) {
  LoadedRun run;
  {
    std::ifstream in(run_dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot open " + (run_dir / "manifest.json").string());
    in >> run.manifest;
  }
  const auto input_path = run.manifest.at("input").at("path").get<std::string>();
  const auto format = parse_format(run.manifest.at("input").at("format").get<std::string>());
  run.ensemble = load_ensemble(input_path, format);
  run.geometry = geometry_from_json(run.manifest.at("geometry"));
  if (run.geometry.kind == GeometryKind::Sphere && run.geometry.sphere_lift) {
    run.ensemble = lift_lonlat_ensemble(run.ensemble);
  }

  ClusterState& s = run.state;
  s.K = run.manifest.at("config").at("k").get<int>();
  s.n = run.ensemble.n;
  s.d = run.ensemble.d;
  s.num_times = run.ensemble.num_times;
  s.centers.assign(static_cast<std::size_t>(s.K) * s.num_times * s.d, 0.0);
  s.center_defined.assign(static_cast<std::size_t>(s.K) * s.num_times, std::uint8_t{0});
  s.memberships.assign(static_cast<std::size_t>(s.n) * s.K, 0.0);

  std::map<std::string, int> id_index;
  for (int i = 0; i < run.ensemble.n; ++i) id_index[run.ensemble.ids[i]] = i;

  {
    std::ifstream in(run_dir / "memberships.csv");
    if (!in) throw std::runtime_error("cannot open memberships.csv in " + run_dir.string());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 3) throw std::runtime_error("bad memberships.csv row: " + line);
      const auto it = id_index.find(fields[0]);
      if (it == id_index.end()) {
        throw std::runtime_error("memberships.csv names unknown trajectory " + fields[0]);
      }
      const int k = std::stoi(fields[1]);
      double u;
      if (!parse_double(fields[2], u)) throw std::runtime_error("bad membership value: " + line);
      s.memberships[static_cast<std::size_t>(it->second) * s.K + k] = u;
    }
  }
  {
    std::ifstream in(run_dir / "centers.csv");
    if (!in) throw std::runtime_error("cannot open centers.csv in " + run_dir.string());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != static_cast<std::size_t>(s.d) + 3) {
        throw std::runtime_error("bad centers.csv row: " + line);
      }
      const int k = std::stoi(fields[0]);
      const int t = std::stoi(fields[1]);
      auto slice = s.center_slice(k, t);
      for (int c = 0; c < s.d; ++c) {
        if (!parse_double(fields[2 + c], slice[c])) {
          throw std::runtime_error("bad center value: " + line);
        }
      }
      s.center_defined[static_cast<std::size_t>(k) * s.num_times + t] =
          fields.back() == "1" ? 1 : 0;
    }
  }
  return run;
}

int cmd_generate(const std::string& flow, int n, double tau, int iters, double stride,
                 double step, std::uint64_t seed, const std::string& seeding,
                 const std::string& out, const std::string& format, int threads, double a,
                 double delta, double omega) {
  FlowSpec spec;
  if (flow == "double-gyre") {
    spec.kind = FlowKind::DoubleGyre;
  } else if (flow == "transitory-double-gyre") {
    spec.kind = FlowKind::TransitoryDoubleGyre;
  } else if (flow == "interval-map-3") {
    spec.kind = FlowKind::IntervalMap3;
  } else {
    throw std::invalid_argument("unknown flow: " + flow);
  }
  spec.n = n;
  spec.seed = seed;
  spec.gyre_amplitude = a;
  spec.gyre_delta = delta;
  spec.gyre_omega = omega;
  if (seeding == "grid") {
    spec.seeding = SeedingKind::UniformGrid;
  } else if (seeding == "random") {
    spec.seeding = SeedingKind::UniformRandom;
  } else {
    throw std::invalid_argument("unknown seeding: " + seeding);
  }
  if (spec.kind == FlowKind::IntervalMap3) {
    if (iters <= 0) throw std::invalid_argument("interval map needs --iters");
    spec.t_end = iters;
    spec.output_stride = 1.0;
  } else {
    if (!(tau > 0.0)) throw std::invalid_argument("continuous flows need --tau");
    spec.t_end = tau;
    spec.output_stride = stride;
    spec.integrator_step = step;
  }

  const auto e = integrate_ensemble(spec, threads);
  save_ensemble(e, out, parse_format(format));
  std::cout << "wrote " << out << ": n=" << e.n << " num_times=" << e.num_times << " d=" << e.d
            << "\n";
  return 0;
}

int cmd_thin(const std::string& input, const std::string& format, double fraction,
             std::uint64_t seed, const std::string& out) {
  const auto f = parse_format(format);
  const auto e = load_ensemble(input, f);
  const auto thinned = thin_ensemble(e, fraction, seed);
  save_ensemble(thinned, out, f);
  std::cout << "wrote " << out << ": kept " << thinned.available_count() << " of "
            << e.available_count() << " observations\n";
  return 0;
}

int cmd_cluster(const ClusterFlags& flags, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const auto format = parse_format(flags.format);
  auto loaded = load_ensemble(flags.input, format);
  auto [geometry, ensemble] = prepare_geometry(flags.geometry, std::move(loaded));
  const FcmConfig cfg = to_config(flags);

  const ClusterState state = run_restarts(ensemble, geometry, cfg, flags.restarts);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["command"] = "cluster";
  manifest["input"] = {{"path", fs::absolute(flags.input).string()},
                       {"format", format_name(format)}};
  manifest["geometry"] = geometry_to_json(geometry, flags.geometry);
  manifest["config"] = {{"k", cfg.K},
                        {"m", cfg.m},
                        {"init", cfg.init == InitMethod::RandomMemberships
                                     ? "random-memberships"
                                     : "kmeanspp-centers"},
                        {"seed", cfg.seed},
                        {"tol", cfg.tol},
                        {"max_iter", cfg.max_iter},
                        {"normalize_by_support", cfg.normalize_by_support},
                        {"use_masses", cfg.use_masses},
                        {"restarts", flags.restarts},
                        {"threads", cfg.threads}};
  manifest["result"] = {{"iterations", state.iterations},
                        {"converged", state.converged},
                        {"final_objective", state.objective_history.back()},
                        {"objective_history", state.objective_history},
                        {"stale_center_slices", state.stale_center_slices}};
  manifest["runtime_seconds"] = elapsed.count();
  manifest["outputs"] = {"memberships.csv", "centers.csv"};

  write_memberships_csv(dir / "memberships.csv", state, ensemble);
  write_centers_csv(dir / "centers.csv", state);
  atomic_write_file(dir / "manifest.json",
                    [&](std::ostream& out) { out << manifest.dump(2) << "\n"; });

  std::cout << (state.converged ? "converged" : "hit max_iter") << " after " << state.iterations
            << " iterations, objective " << format_double(state.objective_history.back())
            << ", outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_diagnose(const std::string& run_dir, double collapse_ratio,
                 const std::string& confidence, const std::string& out_dir) {
  const auto run = load_run(run_dir);
  const auto thresholds = parse_double_list(confidence);
  const auto diag = diagnose(run.state, run.ensemble, run.geometry, collapse_ratio, thresholds);

  const fs::path dir = out_dir.empty() ? fs::path(run_dir) : fs::path(out_dir);
  fs::create_directories(dir);

  atomic_write_file(dir / "entropy.csv", [&](std::ostream& out) {
    out << "trajectory_id,h\n";
    for (int i = 0; i < run.state.n; ++i) {
      out << run.ensemble.ids[i] << "," << format_double(diag.entropy[i]) << "\n";
    }
  });
  atomic_write_file(dir / "labels.csv", [&](std::ostream& out) {
    out << "trajectory_id,label\n";
    for (int i = 0; i < run.state.n; ++i) {
      out << run.ensemble.ids[i] << "," << diag.hard_labels[i] << "\n";
    }
  });
  json collapse;
  collapse["threshold_ratio"] = diag.collapse.threshold_ratio;
  collapse["data_diameter"] = diag.collapse.data_diameter;
  collapse["sample_size"] = diag.collapse.sample_size;
  collapse["pairs"] = json::array();
  for (const auto& p : diag.collapse.pairs) {
    collapse["pairs"].push_back(
        {{"k1", p.k1}, {"k2", p.k2}, {"distance", p.distance}, {"ratio", p.ratio}});
  }
  atomic_write_file(dir / "collapse.json",
                    [&](std::ostream& out) { out << collapse.dump(2) << "\n"; });

  std::cout << "diagnosed " << run_dir << ": " << diag.collapse.pairs.size()
            << " collapsed center pair(s)";
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    std::cout << ", " << diag.confidence_counts[j] << " trajectories above "
              << fmt_short(thresholds[j]);
  }
  std::cout << "\n";
  return 0;
}

int cmd_sweep(const ClusterFlags& flags, const std::string& vary, const std::string& values,
              double collapse_ratio, const std::string& confidence, const std::string& out) {
  const auto format = parse_format(flags.format);
  auto loaded = load_ensemble(flags.input, format);
  auto [geometry, ensemble] = prepare_geometry(flags.geometry, std::move(loaded));
  const FcmConfig cfg = to_config(flags);

  if (vary == "m") {
    const auto m_values = parse_double_list(values);
    const auto rows = m_stability_sweep(ensemble, geometry, cfg, m_values);
    atomic_write_file(out, [&](std::ostream& os) {
      os << "m,cluster,ml_trajectory_id,t0";
      for (int c = 0; c < ensemble.d; ++c) os << ",c" << c;
      os << ",drift_from_prev\n";
      for (const auto& row : rows) {
        os << format_double(row.m) << "," << row.cluster << "," << ensemble.ids[row.ml_index]
           << "," << row.t0;
        for (const double v : row.position) os << "," << format_double(v);
        os << ",";
        if (!std::isnan(row.drift_from_prev)) os << format_double(row.drift_from_prev);
        os << "\n";
      }
    });
    std::cout << "wrote " << out << " (" << rows.size() << " rows)\n";
    return 0;
  }
  if (vary == "k") {
    const auto k_list = parse_double_list(values);
    std::vector<int> k_values;
    k_values.reserve(k_list.size());
    for (const double v : k_list) k_values.push_back(static_cast<int>(std::llround(v)));
    const auto thresholds = parse_double_list(confidence);
    const auto rows =
        k_stability_sweep(ensemble, geometry, cfg, k_values, collapse_ratio, thresholds);
    atomic_write_file(out, [&](std::ostream& os) {
      os << "K,mean_entropy,max_entropy,collapsed_pairs,converged,iterations";
      for (const double thr : thresholds) os << ",conf_" << fmt_short(thr);
      os << "\n";
      for (const auto& row : rows) {
        os << row.K << "," << format_double(row.mean_entropy) << ","
           << format_double(row.max_entropy) << "," << row.collapse.pairs.size() << ","
           << (row.converged ? 1 : 0) << "," << row.iterations;
        for (const auto count : row.confidence_counts) os << "," << count;
        os << "\n";
      }
    });
    std::cout << "wrote " << out << " (" << rows.size() << " rows)\n";
    return 0;
  }
  throw std::invalid_argument("--vary must be m or k");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-time coherent set extraction from trajectory data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // generate
  auto* generate = app.add_subcommand("generate", "integrate a benchmark flow into an ensemble");
  std::string gen_flow, gen_seeding = "grid", gen_out, gen_format = "long";
  int gen_n = 0, gen_iters = 0, gen_threads = 0;
  double gen_tau = 0.0, gen_stride = 0.1, gen_step = 1e-2;
  double gen_a = 0.25, gen_delta = 0.25, gen_omega = 2.0 * M_PI;
  std::uint64_t gen_seed = 0;
  generate->add_option("--flow", gen_flow, "double-gyre | transitory-double-gyre | interval-map-3")
      ->required();
  generate->add_option("--n", gen_n, "number of trajectories")->required();
  generate->add_option("--tau", gen_tau, "flow duration (continuous flows)");
  generate->add_option("--iters", gen_iters, "iterate count (interval map)");
  generate->add_option("--stride", gen_stride, "output sampling stride");
  generate->add_option("--step", gen_step, "internal RK4 step");
  auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "seed for random seeding");
  generate->add_option("--seeding", gen_seeding, "grid | random");
  generate->add_option("--A", gen_a, "double gyre amplitude");
  generate->add_option("--delta", gen_delta, "double gyre perturbation");
  generate->add_option("--omega", gen_omega, "double gyre frequency");
  generate->add_option("--out", gen_out, "output CSV path")->required();
  generate->add_option("--format", gen_format, "long | wide");
  generate->add_option("--threads", gen_threads, "0 = auto");

  // thin
  auto* thin = app.add_subcommand("thin", "randomly remove observations from an ensemble");
  std::string thin_in, thin_out, thin_format = "long";
  double thin_fraction = 0.0;
  std::uint64_t thin_seed = 0;
  thin->add_option("--input", thin_in)->required();
  thin->add_option("--fraction", thin_fraction, "removal probability in [0,1)")->required();
  auto* thin_seed_opt = thin->add_option("--seed", thin_seed);
  thin->add_option("--out", thin_out)->required();
  thin->add_option("--format", thin_format, "long | wide");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "fuzzy-cluster an ensemble into coherent sets");
  ClusterFlags cf;
  std::string cluster_out;
  cluster->add_option("--input", cf.input)->required();
  cluster->add_option("--format", cf.format, "long | wide");
  cluster->add_option("--k", cf.k, "number of clusters")->required();
  cluster->add_option("--m", cf.m, "fuzziness exponent (> 1)");
  cluster->add_option("--geometry", cf.geometry.name, "euclidean | ellipsoid | sphere | circle");
  cluster->add_option("--ellipsoid-lengths", cf.geometry.ellipsoid_lengths,
                      "comma-separated semi-axis lengths");
  cluster->add_option("--ellipsoid-axes", cf.geometry.ellipsoid_axes,
                      "comma-separated row-major axis matrix");
  cluster->add_option("--init", cf.init, "random | kmeanspp");
  auto* cluster_seed_opt = cluster->add_option("--seed", cf.seed);
  cluster->add_option("--tol", cf.tol, "relative improvement threshold");
  cluster->add_option("--max-iter", cf.max_iter);
  cluster->add_flag("--normalize-by-support", cf.normalize_by_support,
                    "weight terms by 1/|T_i|");
  cluster->add_flag("--use-masses", cf.use_masses, "weight terms by trajectory mass");
  cluster->add_option("--restarts", cf.restarts, "random restarts, best objective kept");
  cluster->add_option("--threads", cf.threads, "0 = auto");
  cluster->add_option("--out-dir", cluster_out, "run output directory")->required();

  // diagnose
  auto* diagnose_cmd = app.add_subcommand("diagnose", "post-run diagnostics for a cluster run");
  std::string diag_run, diag_conf = "0.9,0.95", diag_out;
  double diag_ratio = 0.05;
  diagnose_cmd->add_option("--input-run", diag_run, "cluster output directory")->required();
  diagnose_cmd->add_option("--collapse-ratio", diag_ratio);
  diagnose_cmd->add_option("--confidence", diag_conf, "comma-separated thresholds");
  diagnose_cmd->add_option("--out-dir", diag_out, "defaults to the run directory");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "stability sweep over m or K");
  ClusterFlags sf;
  std::string sweep_vary, sweep_values, sweep_out, sweep_conf = "0.9,0.95";
  double sweep_ratio = 0.05;
  sweep->add_option("--input", sf.input)->required();
  sweep->add_option("--format", sf.format, "long | wide");
  sweep->add_option("--vary", sweep_vary, "m | k")->required();
  sweep->add_option("--values", sweep_values, "comma-separated sweep values")->required();
  sweep->add_option("--k", sf.k, "cluster count (fixed when varying m)");
  sweep->add_option("--m", sf.m, "fuzziness exponent (fixed when varying k)");
  sweep->add_option("--geometry", sf.geometry.name);
  sweep->add_option("--ellipsoid-lengths", sf.geometry.ellipsoid_lengths);
  sweep->add_option("--ellipsoid-axes", sf.geometry.ellipsoid_axes);
  sweep->add_option("--init", sf.init, "random | kmeanspp");
  auto* sweep_seed_opt = sweep->add_option("--seed", sf.seed);
  sweep->add_option("--tol", sf.tol);
  sweep->add_option("--max-iter", sf.max_iter);
  sweep->add_flag("--normalize-by-support", sf.normalize_by_support);
  sweep->add_flag("--use-masses", sf.use_masses);
  sweep->add_option("--threads", sf.threads);
  sweep->add_option("--collapse-ratio", sweep_ratio);
  sweep->add_option("--confidence", sweep_conf);
  sweep->add_option("--out", sweep_out, "report CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      return cmd_generate(gen_flow, gen_n, gen_tau, gen_iters, gen_stride, gen_step,
                          env_or_default_seed(gen_seed, gen_seed_opt->count() > 0), gen_seeding,
                          gen_out, gen_format, gen_threads, gen_a, gen_delta, gen_omega);
    }
    if (thin->parsed()) {
      return cmd_thin(thin_in, thin_format, thin_fraction,
                      env_or_default_seed(thin_seed, thin_seed_opt->count() > 0), thin_out);
    }
    if (cluster->parsed()) {
      cf.seed_given = cluster_seed_opt->count() > 0;
      return cmd_cluster(cf, cluster_out);
    }
    if (diagnose_cmd->parsed()) {
      return cmd_diagnose(diag_run, diag_ratio, diag_conf, diag_out);
    }
    if (sweep->parsed()) {
      sf.seed_given = sweep_seed_opt->count() > 0;
      return cmd_sweep(sf, sweep_vary, sweep_values, sweep_ratio, sweep_conf, sweep_out);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
