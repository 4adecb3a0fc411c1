#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "config_io.hpp"
#include "metrology.hpp"
#include "population.hpp"
#include "variation.hpp"

namespace tsense {

inline constexpr const char* library_version = "1.0.0";

// ---------------------------------------------------------------------------
// Worker pool

/// Calls f(i) for i in [0, n) on `jobs` threads. Work is claimed through an
/// atomic counter and results must be stored by index, so the outcome does
/// not depend on the thread count. If several calls throw, the exception
/// from the lowest index is rethrown.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f) {
  if (n == 0) return;
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        f(i);
      } catch (...) {
        errs[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  if (workers == 1 || n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Runners

inline EvalOptions eval_options(const Scenario& s) { return {s.noise.enable, s.noise.cal_reads, s.noise.point_reads}; }

/// One entry per (die, supply), dies outer. Die configs come from the
/// scenario's variation spec, so zero spread gives the nominal sensor.
inline std::vector<DieVddResult> run_dies(const Scenario& s, int jobs) {
  const auto temps = s.sweep.temps();
  const auto& vdds = s.sweep.vdd_list;
  const auto n_dies = static_cast<std::size_t>(s.campaign.n_dies);
  std::vector<SensorConfig> dies(n_dies);
  for (std::size_t d = 0; d < n_dies; ++d) {
    dies[d] = campaign_die(s.sensor, s.variation, s.campaign.master_seed, static_cast<int>(d));
  }
  std::vector<DieVddResult> out(n_dies * vdds.size());
  const auto opt = eval_options(s);
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto d = i / vdds.size();
    const auto v = i % vdds.size();
    out[i] = evaluate_die_vdd(dies[d], static_cast<int>(d), die_seed(s.campaign.master_seed, static_cast<int>(d)),
                              vdds[v], temps, opt);
  });
  return out;
}

struct CornerResult {
  CornerName corner = CornerName::TT;
  DieVddResult result;
};

/// Noiseless corner sweeps, each corner calibrated at its own 10/90 degC
/// points for every supply.
inline std::vector<CornerResult> run_corners(const Scenario& s, int jobs) {
  const auto temps = s.sweep.temps();
  const auto& vdds = s.sweep.vdd_list;
  const auto& names = s.campaign.corners;
  std::vector<CornerResult> out(names.size() * vdds.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto c = names[i / vdds.size()];
    const auto cfg = apply_corner(s.sensor, make_corner(c, s.corner_magnitudes));
    out[i] = {c, evaluate_die_vdd(cfg, -1, 0, vdds[i % vdds.size()], temps, {})};
  });
  return out;
}

struct ResolutionRun {
  std::uint64_t seed = 0;
  double vdd = 0.0;
  double temp = 0.0;
  NoiseResolution res;
};

inline constexpr double resolution_temp_c = 25.0;

/// `noise.repeats` conversions at 25 degC for each of `noise.seeds` seeds,
/// at the first supply of the sweep. With noise disabled the jitter is
/// dropped and every code is the same.
inline std::vector<ResolutionRun> run_resolution(const Scenario& s, int jobs) {
  SensorConfig cfg = s.sensor;
  if (!s.noise.enable) cfg.osc.jitter_rel_sigma = 0.0;
  const double vdd = s.sweep.vdd_list.front();
  const auto cal = calibrate(cfg, vdd);
  std::vector<ResolutionRun> out(static_cast<std::size_t>(s.noise.seeds));
  parallel_for(out.size(), jobs, [&](std::size_t k) {
    const auto seed = derive_seed(s.campaign.master_seed, 0x7e50, k + 1);
    out[k] = {seed, vdd, resolution_temp_c,
              noise_resolution(cfg, cal, Celsius{resolution_temp_c}, vdd, s.noise.repeats, seed)};
  });
  return out;
}

// ---------------------------------------------------------------------------
// Tables

/// Column-typed rows written as CSV (with a leading hash comment) or JSON.
/// Reals use %.9e so files are stable across platforms and worker counts.
class Table {
 public:
  using Cell = std::variant<double, std::int64_t, std::string>;

  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw InputError("table row width does not match the header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }

  static std::string format(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.9e", *d);
      return buf;
    }
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
  }

  std::string csv(const std::string& hash) const {
    std::string out = "# config_hash=" + hash + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format(r[i]);
      out += "\n";
    }
    return out;
  }

  json to_json(const std::string& hash) const {
    json rows = json::array();
    for (const auto& r : rows_) {
      json row = json::array();
      for (const auto& c : r) {
        if (const auto* d = std::get_if<double>(&c)) {
          row.push_back(std::stod(format(c)));  // same rounding as the CSV
          (void)d;
        } else if (const auto* i = std::get_if<std::int64_t>(&c)) {
          row.push_back(*i);
        } else {
          row.push_back(std::get<std::string>(c));
        }
      }
      rows.push_back(std::move(row));
    }
    return {{"config_hash", hash}, {"columns", columns_}, {"rows", rows}};
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> c{"temp_C", "vdd_V",   "die_id", "v_vdd_V",     "i_supply_A", "f_h_Hz",
                                          "f_l_Hz", "code",    "t_est_C", "inaccuracy_C", "power_W",   "energy_J"};
  return c;
}

/// Rows ordered by die, supply, temperature. With several reads per point
/// `code` is the first read and t_est uses the average.
inline Table sweep_table(std::span<const DieVddResult> results) {
  Table t(sweep_columns());
  for (const auto& r : results) {
    for (const auto& p : r.points) {
      t.add({p.temp, p.vdd, std::int64_t{p.die}, p.fe.v_vdd, p.fe.i_supply, p.f.f_h, p.f.f_l, p.code, p.t_est,
             p.error(), p.power, p.energy});
    }
  }
  return t;
}

inline Table die_table(std::span<const DieVddResult> results) {
  Table t({"die_id", "vdd_V", "cal_code10", "cal_code90", "resolution_C_per_LSB", "min_C", "max_C", "rms_C",
           "peak_C", "relative_pct", "adj_r2"});
  for (const auto& r : results) {
    t.add({std::int64_t{r.die}, r.vdd, r.cal.code10, r.cal.code90, r.cal.celsius_per_lsb(), r.stats.min, r.stats.max,
           r.stats.rms, r.stats.peak(), r.stats.relative_pct, r.adj_r2});
  }
  return t;
}

inline Table corner_table(std::span<const CornerResult> results) {
  Table t({"corner", "vdd_V", "temp_C", "v_vdd_V", "f_h_Hz", "f_l_Hz", "code", "t_est_C", "inaccuracy_C"});
  for (const auto& c : results) {
    for (const auto& p : c.result.points) {
      t.add({std::string(to_string(c.corner)), p.vdd, p.temp, p.fe.v_vdd, p.f.f_h, p.f.f_l, p.code, p.t_est,
             p.error()});
    }
  }
  return t;
}

inline Table resolution_table(std::span<const ResolutionRun> runs) {
  Table t({"seed", "vdd_V", "temp_C", "repeats", "sigma_LSB", "sigma_C"});
  for (const auto& r : runs) {
    t.add({std::to_string(r.seed), r.vdd, r.temp, static_cast<std::int64_t>(r.res.codes.size()), r.res.sigma_lsb,
           r.res.sigma_c});
  }
  return t;
}

inline json summary_json(const PopulationSummary& s) {
  return {{"peak_min_C", s.peak_min},   {"peak_median_C", s.peak_median}, {"peak_max_C", s.peak_max},
          {"rms_min_C", s.rms_min},     {"rms_max_C", s.rms_max},         {"error_min_C", s.error_min},
          {"error_max_C", s.error_max}, {"adj_r2_min", s.adj_r2_min},     {"adj_r2_mean", s.adj_r2_mean},
          {"three_sigma_C", s.three_sigma}};
}

// ---------------------------------------------------------------------------
// Files

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

/// Collects a run's outputs and writes them together with the manifest.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, std::string command, const Scenario& s)
      : dir_(std::move(dir)), command_(std::move(command)), scenario_(s), hash_(config_hash(s)) {}

  const std::string& hash() const { return hash_; }

  /// Writes `t` as <stem>.csv and/or <stem>.json according to the formats.
  void table(const std::string& stem, const Table& t) {
    for (const auto& f : scenario_.outputs.formats) {
      if (f == "csv") put(stem + ".csv", t.csv(hash_));
      if (f == "json") put(stem + ".json", t.to_json(hash_).dump(1) + "\n");
    }
  }

  /// A JSON document; the hash is added under "config_hash".
  void document(const std::string& name, json j) {
    j["config_hash"] = hash_;
    put(name, j.dump(1) + "\n");
  }

  void finish() {
    json m = {
        {"command", command_},
        {"config_hash", hash_},
        {"seed", scenario_.campaign.master_seed},
        {"versions",
         {{"tsense", library_version},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", compiler_id()}}},
        {"outputs", files_},
        {"scenario", scenario_to_json(scenario_)},
    };
    write_text(dir_ / ("manifest_" + command_ + ".json"), m.dump(1) + "\n");
  }

  static std::string compiler_id() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
  }

 private:
  void put(const std::string& name, const std::string& text) {
    write_text(dir_ / name, text);
    files_.push_back(name);
  }

  std::filesystem::path dir_;
  std::string command_;
  Scenario scenario_;
  std::string hash_;
  std::vector<std::string> files_;
};

/// Reads the embedded hash from a CSV ("# config_hash=" first line) or a
/// JSON document ("config_hash" key). Returns empty when absent.
inline std::string embedded_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  if (p.extension() == ".csv") {
    std::string line;
    std::getline(in, line);
    const std::string key = "# config_hash=";
    return line.rfind(key, 0) == 0 ? line.substr(key.size()) : std::string{};
  }
  if (p.extension() == ".json") {
    try {
      const auto j = json::parse(in);
      if (j.is_object() && j.contains("config_hash") && j["config_hash"].is_string()) return j["config_hash"];
    } catch (const json::exception&) {
      throw InputError("malformed JSON in " + p.string());
    }
  }
  return {};
}

/// Every output in `dir` must carry the same hash. Returns it.
inline std::string common_hash(const std::filesystem::path& dir, const std::vector<std::string>& skip = {}) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (!e.is_regular_file() || (ext != ".csv" && ext != ".json")) continue;
    if (std::find(skip.begin(), skip.end(), e.path().filename().string()) != skip.end()) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string hash;
  std::string first;
  for (const auto& f : files) {
    const auto h = embedded_hash(f);
    if (h.empty()) throw InputError("no config hash in " + f.filename().string());
    if (hash.empty()) {
      hash = h;
      first = f.filename().string();
    } else if (h != hash) {
      throw ConfigError("mixed config hashes: " + first + " has " + hash + ", " + f.filename().string() + " has " + h,
                        "report");
    }
  }
  if (hash.empty()) throw InputError("no outputs found in " + dir.string());
  return hash;
}

}  // namespace tsense
