#include "coherent/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "coherent/io.hpp"
#include "coherent/rng.hpp"

namespace coherent {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line_no,
                             const std::string& msg) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
}

struct LongRow {
  std::string id;
  std::string t;
  std::vector<double> coords;
  std::optional<double> mass;
};

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool blank(const std::string& s) {
  return s.empty() || (s.size() == 1 && s[0] == '\r');
}

struct SidecarManifest {
  std::optional<int> d;
  std::optional<bool> mass_column;
  CoordinateConvention coords = CoordinateConvention::Cartesian;
  std::vector<double> time_labels;
  bool present = false;
};

SidecarManifest read_sidecar(const std::filesystem::path& data_path) {
  SidecarManifest m;
  const auto path = ensemble_manifest_path(data_path);
  std::ifstream in(path);
  if (!in) return m;
  m.present = true;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw std::runtime_error("bad manifest " + path.string() + ": " + ex.what());
  }
  if (j.contains("d")) m.d = j["d"].get<int>();
  if (j.contains("mass_column")) m.mass_column = j["mass_column"].get<bool>();
  if (j.contains("coordinate_convention")) {
    const auto conv = j["coordinate_convention"].get<std::string>();
    if (conv == "cartesian") {
      m.coords = CoordinateConvention::Cartesian;
    } else if (conv == "lonlat-degrees") {
      m.coords = CoordinateConvention::LonLatDegrees;
    } else {
      throw std::runtime_error("unknown coordinate_convention in " + path.string() + ": " + conv);
    }
  }
  if (j.contains("time_labels")) m.time_labels = j["time_labels"].get<std::vector<double>>();
  return m;
}

void write_sidecar(const TrajectoryEnsemble& e, const std::filesystem::path& data_path) {
  nlohmann::json j;
  j["d"] = e.d;
  j["mass_column"] = !e.masses.empty();
  j["coordinate_convention"] =
      e.coords == CoordinateConvention::LonLatDegrees ? "lonlat-degrees" : "cartesian";
  if (!e.time_labels.empty()) j["time_labels"] = e.time_labels;
  atomic_write_file(ensemble_manifest_path(data_path),
                    [&](std::ostream& out) { out << j.dump(2) << "\n"; });
}

TrajectoryEnsemble load_long_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) parse_fail(path, 1, "empty file");

  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "id" || header[1] != "t") {
    parse_fail(path, 1, "long header must start with id,t and carry coordinate columns");
  }
  const bool has_mass = header.back() == "mass";
  const int d = static_cast<int>(header.size()) - 2 - (has_mass ? 1 : 0);
  if (d < 1) parse_fail(path, 1, "no coordinate columns");

  std::vector<LongRow> rows;
  rows.reserve(lines.size());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (blank(lines[li])) continue;
    const auto fields = split_csv_line(lines[li]);
    if (static_cast<int>(fields.size()) != d + 2 + (has_mass ? 1 : 0)) {
      parse_fail(path, li + 1, "expected " + std::to_string(d + 2 + (has_mass ? 1 : 0)) +
                                   " fields, got " + std::to_string(fields.size()));
    }
    LongRow row;
    row.id = fields[0];
    row.t = fields[1];
    if (row.id.empty()) parse_fail(path, li + 1, "empty id");
    if (row.t.empty()) parse_fail(path, li + 1, "empty t");
    row.coords.resize(d);
    for (int c = 0; c < d; ++c) {
      if (!parse_double(fields[2 + c], row.coords[c]) || !std::isfinite(row.coords[c])) {
        parse_fail(path, li + 1, "bad coordinate value '" + fields[2 + c] + "'");
      }
    }
    if (has_mass) {
      double q;
      if (!parse_double(fields.back(), q)) {
        parse_fail(path, li + 1, "bad mass value '" + fields.back() + "'");
      }
      row.mass = q;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_fail(path, 1, "no data rows");

  // Time axis: if every t token is numeric, sort numerically and keep the
  // values as labels; otherwise rank timestamps lexicographically.
  bool numeric_times = true;
  for (const auto& r : rows) {
    double v;
    if (!parse_double(r.t, v)) {
      numeric_times = false;
      break;
    }
  }
  std::vector<double> numeric_labels;
  std::unordered_map<std::string, int> time_index;
  if (numeric_times) {
    std::map<double, int> rank;  // numeric order
    for (const auto& r : rows) {
      double v;
      parse_double(r.t, v);
      rank.emplace(v, 0);
    }
    int idx = 0;
    for (auto& [value, k] : rank) {
      k = idx++;
      numeric_labels.push_back(value);
    }
    for (const auto& r : rows) {
      double v;
      parse_double(r.t, v);
      time_index[r.t] = rank.at(v);
    }
  } else {
    std::vector<std::string> distinct;
    {
      std::unordered_set<std::string> seen;
      for (const auto& r : rows) {
        if (seen.insert(r.t).second) distinct.push_back(r.t);
      }
    }
    std::sort(distinct.begin(), distinct.end());
    for (std::size_t k = 0; k < distinct.size(); ++k) time_index[distinct[k]] = static_cast<int>(k);
  }
  const int num_times = static_cast<int>(time_index.size());

  // Trajectories ordered by first appearance of their id.
  std::unordered_map<std::string, int> id_index;
  std::vector<std::string> ids;
  for (const auto& r : rows) {
    if (id_index.emplace(r.id, static_cast<int>(ids.size())).second) ids.push_back(r.id);
  }
  const int n = static_cast<int>(ids.size());

  TrajectoryEnsemble e = make_ensemble(n, d, num_times);
  e.ids = ids;
  std::fill(e.mask.begin(), e.mask.end(), std::uint8_t{0});
  e.time_labels = numeric_labels;
  std::vector<std::optional<double>> masses(n);

  for (const auto& r : rows) {
    const int i = id_index.at(r.id);
    const int t = time_index.at(r.t);
    auto& cell = e.mask[static_cast<std::size_t>(i) * num_times + t];
    if (cell) {
      throw std::runtime_error(path.string() + ": duplicate observation (id=" + r.id +
                               ", t=" + r.t + ")");
    }
    cell = 1;
    auto dst = e.at_mutable(i, t);
    std::copy(r.coords.begin(), r.coords.end(), dst.begin());
    if (r.mass) {
      if (masses[i] && *masses[i] != *r.mass) {
        throw std::runtime_error(path.string() + ": inconsistent mass for id=" + r.id);
      }
      masses[i] = r.mass;
    }
  }
  if (has_mass) {
    e.masses.resize(n);
    for (int i = 0; i < n; ++i) e.masses[i] = masses[i].value_or(1.0);
  }
  return e;
}

TrajectoryEnsemble load_wide_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) parse_fail(path, 1, "empty file");

  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "id") {
    parse_fail(path, 1, "wide header must start with id");
  }
  const bool has_mass = header.back() == "mass";
  const int n_cells = static_cast<int>(header.size()) - 1 - (has_mass ? 1 : 0);
  if (n_cells < 1) parse_fail(path, 1, "no observation columns");

  // Column names must tile t0_c0 .. t{T}_c{d-1} in time-major order.
  int num_times = 0, d = 0;
  {
    int ti, ci;
    for (int j = 0; j < n_cells; ++j) {
      if (std::sscanf(header[1 + j].c_str(), "t%d_c%d", &ti, &ci) != 2) {
        parse_fail(path, 1, "bad wide column name '" + header[1 + j] + "'");
      }
      if (j == 0 && (ti != 0 || ci != 0)) parse_fail(path, 1, "wide columns must start at t0_c0");
      if (ti == 0) d = std::max(d, ci + 1);
      num_times = std::max(num_times, ti + 1);
    }
    if (d < 1 || num_times < 1 || n_cells != num_times * d) {
      parse_fail(path, 1, "wide columns do not tile a full time grid");
    }
    for (int j = 0; j < n_cells; ++j) {
      std::sscanf(header[1 + j].c_str(), "t%d_c%d", &ti, &ci);
      if (ti != j / d || ci != j % d) {
        parse_fail(path, 1, "wide columns out of order at '" + header[1 + j] + "'");
      }
    }
  }

  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> records;
  std::vector<double> masses;
  {
    std::unordered_set<std::string> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (blank(lines[li])) continue;
      auto fields = split_csv_line(lines[li]);
      if (fields.size() != header.size()) {
        parse_fail(path, li + 1, "expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
      }
      if (fields[0].empty()) parse_fail(path, li + 1, "empty id");
      if (!seen.insert(fields[0]).second) {
        parse_fail(path, li + 1, "duplicate id '" + fields[0] + "'");
      }
      ids.push_back(fields[0]);
      if (has_mass) {
        double q;
        if (!parse_double(fields.back(), q)) parse_fail(path, li + 1, "bad mass value");
        masses.push_back(q);
        fields.pop_back();
      }
      fields.erase(fields.begin());
      records.push_back(std::move(fields));
    }
  }
  const int n = static_cast<int>(ids.size());
  if (n == 0) parse_fail(path, 1, "no data rows");

  TrajectoryEnsemble e = make_ensemble(n, d, num_times);
  e.ids = ids;
  e.masses = masses;
  std::fill(e.mask.begin(), e.mask.end(), std::uint8_t{0});
  for (int i = 0; i < n; ++i) {
    int support = 0;
    for (int t = 0; t < num_times; ++t) {
      int present = 0;
      for (int c = 0; c < d; ++c) {
        if (!records[i][static_cast<std::size_t>(t) * d + c].empty()) ++present;
      }
      if (present == 0) continue;
      if (present != d) {
        throw std::runtime_error(path.string() + ": id=" + ids[i] + " t=" + std::to_string(t) +
                                 " has a partially empty observation");
      }
      auto dst = e.at_mutable(i, t);
      for (int c = 0; c < d; ++c) {
        const auto& cell = records[i][static_cast<std::size_t>(t) * d + c];
        if (!parse_double(cell, dst[c]) || !std::isfinite(dst[c])) {
          throw std::runtime_error(path.string() + ": bad coordinate '" + cell + "' for id=" +
                                   ids[i]);
        }
      }
      e.mask[static_cast<std::size_t>(i) * num_times + t] = 1;
      ++support;
    }
    if (support == 0) {
      throw std::runtime_error(path.string() + ": trajectory id=" + ids[i] +
                               " has no observations");
    }
  }
  return e;
}

std::string time_token(const TrajectoryEnsemble& e, int t) {
  if (!e.time_labels.empty()) return format_double(e.time_labels[t]);
  return std::to_string(t);
}

}  // namespace

int TrajectoryEnsemble::support_size(int i) const {
  int count = 0;
  for (int t = 0; t < num_times; ++t) count += available(i, t) ? 1 : 0;
  return count;
}

std::size_t TrajectoryEnsemble::available_count() const {
  std::size_t count = 0;
  for (const auto m : mask) count += m != 0 ? 1 : 0;
  return count;
}

void TrajectoryEnsemble::validate() const {
  if (n < 1 || d < 1 || num_times < 1) fail("ensemble dimensions must be positive");
  const auto cells = static_cast<std::size_t>(n) * num_times;
  if (positions.size() != cells * d) fail("positions size mismatch");
  if (mask.size() != cells) fail("mask size mismatch");
  if (!masses.empty() && masses.size() != static_cast<std::size_t>(n)) fail("masses size mismatch");
  if (!time_labels.empty() && time_labels.size() != static_cast<std::size_t>(num_times)) {
    fail("time_labels size mismatch");
  }
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(n)) fail("ids size mismatch");
  for (int i = 0; i < n; ++i) {
    int support = 0;
    for (int t = 0; t < num_times; ++t) {
      if (!available(i, t)) continue;
      ++support;
      for (const double v : at(i, t)) {
        if (!std::isfinite(v)) fail("non-finite position at available observation");
      }
    }
    if (support == 0) fail("trajectory " + std::to_string(i) + " has no observations");
  }
  if (!masses.empty()) {
    double total = 0.0;
    for (const double q : masses) {
      if (!(q >= 0.0)) fail("masses must be nonnegative");
      total += q;
    }
    if (total <= 0.0) fail("masses must not all be zero");
  }
}

std::size_t AvailabilityIndex::total_observations() const {
  std::size_t count = 0;
  for (const auto& slot : at_time) count += slot.size();
  return count;
}

TrajectoryEnsemble make_ensemble(int n, int d, int num_times) {
  if (n < 1 || d < 1 || num_times < 1) fail("ensemble dimensions must be positive");
  TrajectoryEnsemble e;
  e.n = n;
  e.d = d;
  e.num_times = num_times;
  e.positions.assign(static_cast<std::size_t>(n) * num_times * d, 0.0);
  e.mask.assign(static_cast<std::size_t>(n) * num_times, std::uint8_t{1});
  e.ids.resize(n);
  for (int i = 0; i < n; ++i) e.ids[i] = std::to_string(i);
  return e;
}

std::filesystem::path ensemble_manifest_path(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  p.replace_extension(".manifest.json");
  return p;
}

TrajectoryEnsemble load_ensemble(const std::filesystem::path& path, EnsembleFormat format) {
  TrajectoryEnsemble e =
      format == EnsembleFormat::LongCsv ? load_long_csv(path) : load_wide_csv(path);
  const auto sidecar = read_sidecar(path);
  if (sidecar.present) {
    if (sidecar.d && *sidecar.d != e.d) {
      throw std::runtime_error("manifest declares d=" + std::to_string(*sidecar.d) +
                               " but data has d=" + std::to_string(e.d));
    }
    if (sidecar.mass_column && *sidecar.mass_column != !e.masses.empty()) {
      throw std::runtime_error("manifest mass_column flag does not match data");
    }
    e.coords = sidecar.coords;
    if (e.time_labels.empty() &&
        sidecar.time_labels.size() == static_cast<std::size_t>(e.num_times)) {
      e.time_labels = sidecar.time_labels;
    }
  }
  e.validate();
  return e;
}

void save_ensemble(const TrajectoryEnsemble& e, const std::filesystem::path& path,
                   EnsembleFormat format) {
  e.validate();
  if (format == EnsembleFormat::LongCsv) {
    atomic_write_file(path, [&](std::ostream& out) {
      out << "id,t";
      for (int c = 0; c < e.d; ++c) out << ",c" << c;
      if (!e.masses.empty()) out << ",mass";
      out << "\n";
      for (int i = 0; i < e.n; ++i) {
        for (int t = 0; t < e.num_times; ++t) {
          if (!e.available(i, t)) continue;
          out << e.ids[i] << "," << time_token(e, t);
          for (const double v : e.at(i, t)) out << "," << format_double(v);
          if (!e.masses.empty()) out << "," << format_double(e.masses[i]);
          out << "\n";
        }
      }
    });
  } else {
    atomic_write_file(path, [&](std::ostream& out) {
      out << "id";
      for (int t = 0; t < e.num_times; ++t) {
        for (int c = 0; c < e.d; ++c) out << ",t" << t << "_c" << c;
      }
      if (!e.masses.empty()) out << ",mass";
      out << "\n";
      for (int i = 0; i < e.n; ++i) {
        out << e.ids[i];
        for (int t = 0; t < e.num_times; ++t) {
          if (e.available(i, t)) {
            for (const double v : e.at(i, t)) out << "," << format_double(v);
          } else {
            for (int c = 0; c < e.d; ++c) out << ",";
          }
        }
        if (!e.masses.empty()) out << "," << format_double(e.masses[i]);
        out << "\n";
      }
    });
  }
  write_sidecar(e, path);
}

TrajectoryEnsemble thin_ensemble(const TrajectoryEnsemble& e, double fraction,
                                 std::uint64_t seed) {
  e.validate();
  if (!(fraction >= 0.0 && fraction < 1.0)) fail("thinning fraction must lie in [0, 1)");
  TrajectoryEnsemble out = e;
  if (fraction == 0.0) return out;

  Rng rng(seed);
  std::vector<int> slots;
  for (int i = 0; i < e.n; ++i) {
    slots.clear();
    for (int t = 0; t < e.num_times; ++t) {
      if (e.available(i, t)) slots.push_back(t);
    }
    // Redraw the whole trajectory if every observation was removed, so the
    // nonempty-support invariant survives any fraction < 1.
    while (true) {
      int kept = 0;
      for (const int t : slots) {
        const bool remove = rng.uniform01() < fraction;
        out.mask[static_cast<std::size_t>(i) * e.num_times + t] = remove ? 0 : 1;
        if (!remove) ++kept;
      }
      if (kept > 0) break;
    }
  }
  for (int i = 0; i < out.n; ++i) {
    for (int t = 0; t < out.num_times; ++t) {
      if (!out.available(i, t)) {
        auto cell = out.at_mutable(i, t);
        std::fill(cell.begin(), cell.end(), 0.0);
      }
    }
  }
  return out;
}

AvailabilityIndex build_availability_index(const TrajectoryEnsemble& e) {
  AvailabilityIndex idx;
  idx.at_time.resize(e.num_times);
  for (int t = 0; t < e.num_times; ++t) {
    for (int i = 0; i < e.n; ++i) {
      if (e.available(i, t)) idx.at_time[t].push_back(i);
    }
  }
  return idx;
}

}  // namespace coherent
