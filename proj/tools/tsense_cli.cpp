// tsense command-line driver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <tsense/tsense.hpp>

#ifndef TSENSE_DATA_DIR
#define TSENSE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace tsense;

namespace {

enum Exit { ok = 0, config_error = 2, domain_error = 3, io_error = 4 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string format;
  std::string table = std::string(TSENSE_DATA_DIR) + "/comparison_table.csv";
  bool skip_population = false;
};

Scenario load(const Options& o) {
  Scenario s = o.config.empty() ? Scenario{} : load_scenario(o.config);
  if (o.seed) s.campaign.master_seed = *o.seed;
  if (!o.out.empty()) s.outputs.directory = o.out;
  if (!o.format.empty()) s.outputs.formats = {o.format};
  validate(s);
  return s;
}

int cmd_validate(const Options& o) {
  const auto s = load(o);
  std::printf("valid config_hash=%s\n", config_hash(s).c_str());
  return ok;
}

int cmd_sweep(const Options& o) {
  const auto s = load(o);
  RunWriter w(s.outputs.directory, "sweep", s);
  const auto res = run_dies(s, o.jobs);
  w.table("sweep", sweep_table(res));
  w.table("sweep_dies", die_table(res));
  w.finish();
  return ok;
}

int cmd_montecarlo(const Options& o) {
  const auto s = load(o);
  RunWriter w(s.outputs.directory, "montecarlo", s);
  const auto res = run_dies(s, o.jobs);
  w.table("montecarlo_points", sweep_table(res));
  w.table("montecarlo_dies", die_table(res));
  json summary = summary_json(summarize(res));
  if (!s.campaign.corners.empty()) {
    const auto corners = run_corners(s, o.jobs);
    w.table("corners", corner_table(corners));
    json at50 = json::object();
    for (const auto& c : corners) {
      for (const auto& p : c.result.points) {
        if (p.temp == 50.0) at50[std::string(to_string(c.corner)) + "@" + Table::format(c.result.vdd)] = p.error();
      }
    }
    summary["corner_error_50C"] = at50;
  }
  w.document("montecarlo_summary.json", summary);
  w.finish();
  return ok;
}

int cmd_resolution(const Options& o) {
  const auto s = load(o);
  RunWriter w(s.outputs.directory, "resolution", s);
  const auto runs = run_resolution(s, o.jobs);
  w.table("resolution", resolution_table(runs));
  Table codes({"seed", "index", "code"});
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.res.codes.size(); ++i) {
      codes.add({std::to_string(r.seed), static_cast<std::int64_t>(i), r.res.codes[i]});
    }
  }
  w.table("resolution_codes", codes);
  std::vector<double> lsb, c;
  for (const auto& r : runs) {
    lsb.push_back(r.res.sigma_lsb);
    c.push_back(r.res.sigma_c);
  }
  const double m = mean(lsb);
  double spread = 0.0;
  for (double x : lsb) spread = std::max(spread, std::abs(x / m - 1.0));
  w.document("resolution_summary.json", {{"sigma_LSB_mean", m},
                                         {"sigma_C_mean", mean(c)},
                                         {"max_relative_deviation", spread},
                                         {"temp_C", resolution_temp_c},
                                         {"vdd_V", runs.front().vdd}});
  w.finish();
  return ok;
}

int cmd_compare(const Options& o) {
  const auto s = load(o);
  std::ifstream in(o.table);
  if (!in) throw IoError("cannot open comparison table " + o.table);
  const auto rows = parse_comparison_csv(in);
  const auto results = comparison_table(rows);
  RunWriter w(s.outputs.directory, "compare", s);
  Table t({"name", "energy_nJ", "resolution_C", "temp_min_C", "temp_max_C", "inacc_min_C", "inacc_max_C",
           "relative_pct", "r_fom_nJK2", "stated_relative_pct", "stated_r_fom_nJK2", "relative_flag", "r_fom_flag"});
  auto stated = [](const std::optional<double>& v) -> Table::Cell {
    return v ? Table::Cell{*v} : Table::Cell{std::string{}};
  };
  for (const auto& r : results) {
    t.add({r.row.name, r.row.energy_nj, r.row.resolution_c, r.row.temp_min_c, r.row.temp_max_c, r.row.inacc_min_c,
           r.row.inacc_max_c, r.relative_pct, r.r_fom, stated(r.row.stated_relative_pct), stated(r.row.stated_r_fom),
           std::int64_t{r.relative_mismatch}, std::int64_t{r.r_fom_mismatch}});
    if (r.relative_mismatch || r.r_fom_mismatch) {
      std::fprintf(stderr, "note: %s stated %s differs from recomputed value by more than 5%%\n", r.row.name.c_str(),
                   r.relative_mismatch && r.r_fom_mismatch ? "relative inaccuracy and R-FoM"
                   : r.relative_mismatch                    ? "relative inaccuracy"
                                                            : "R-FoM");
    }
  }
  w.table("comparison", t);
  w.finish();
  return ok;
}

int cmd_fit(const Options& o) {
  auto s = load(o);
  const auto hash = config_hash(s);
  std::fprintf(stderr, o.skip_population ? "fitting...\n" : "fitting (the population step takes a few minutes)...\n");
  PopulationTarget pt;
  pt.master_seed = s.campaign.master_seed;
  const auto r = fit_all(FitDesign{}, Anchors{}, pt, !o.skip_population);
  RunWriter w(s.outputs.directory, "fit", s);
  const auto& p = r.params;
  const auto& cfg = r.config;
  const auto op0 = operating_point(cfg, 0.6, Celsius{0.0});
  const auto op100 = operating_point(cfg, 0.6, Celsius{100.0});
  json report = {
      {"params",
       {{"vth_V", p.vth},
        {"ln_c_slow", p.ln_c_slow},
        {"ln_c_fast", p.ln_c_fast},
        {"ln_t_edge", p.ln_t_edge},
        {"ln_t_edge_slow", p.ln_t_edge_slow},
        {"v25_V", p.v25},
        {"a1", p.a1},
        {"a2", p.a2},
        {"a3", p.a3}}},
      {"lm", {{"cost", r.lm.cost}, {"iterations", r.lm.iterations}, {"converged", r.lm.converged}}},
      {"headroom", r.headroom},
      {"backend", {{"offset_W", r.backend.offset}, {"per_volt_W", r.backend.per_volt}}},
      {"jitter_rel_sigma", r.jitter},
      {"corners", {{"p_V", r.corners.p}, {"n_V", r.corners.n}}},
      {"variation", variation_to_json(r.variation)},
      {"achieved",
       {{"f_l_0C_Hz", op0.f.f_l},
        {"f_l_100C_Hz", op100.f.f_l},
        {"f_h_0C_Hz", op0.f.f_h},
        {"f_h_100C_Hz", op100.f.f_h},
        {"v_vdd_25C_V", frontend_state(cfg, 0.6, Celsius{25.0}).v_vdd}}},
  };
  w.document("fit_report.json", report);
  Scenario fitted = s;
  fitted.sensor = cfg;
  fitted.corner_magnitudes = r.corners;
  json fj = scenario_to_json(fitted);
  fj["variation"] = variation_to_json(r.variation);
  w.document("fitted_config.json", fj);
  w.finish();
  std::printf("fit done config_hash=%s\n", hash.c_str());
  return ok;
}

// --- report ---------------------------------------------------------------

struct ParsedTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw InputError("missing column " + name);
  }
};

ParsedTable read_table(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  ParsedTable t;
  auto split = [](const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    return f;
  };
  if (p.extension() == ".csv") {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (t.columns.empty()) {
        t.columns = split(line);
      } else {
        t.rows.push_back(split(line));
      }
    }
  } else {
    const auto j = json::parse(in);
    for (const auto& c : j.at("columns")) t.columns.push_back(c.get<std::string>());
    for (const auto& r : j.at("rows")) {
      std::vector<std::string> row;
      for (const auto& c : r) {
        row.push_back(c.is_string() ? c.get<std::string>() : Table::format(c.is_number_integer() ? Table::Cell{c.get<std::int64_t>()} : Table::Cell{c.get<double>()}));
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

std::optional<fs::path> find_output(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".csv", ".json"}) {
    const auto p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

int cmd_report(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  const std::string report_name = "report.json";
  const auto hash = common_hash(dir, {report_name, "manifest_report.json"});

  // The scenario comes from any manifest in the directory; its hash must
  // match the outputs.
  std::optional<Scenario> scenario;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("manifest_", 0) != 0 || name == "manifest_report.json") continue;
    std::ifstream in(e.path());
    const auto m = json::parse(in);
    scenario = scenario_from_json(m.at("scenario"));
    break;
  }
  if (!scenario) throw InputError("no run manifest found in " + dir.string());
  if (config_hash(*scenario) != hash) throw ConfigError("manifest scenario does not match the output hash", "report");
  Scenario s = *scenario;
  s.outputs.directory = dir.string();

  MetricsReport m;
  json extra = json::object();
  const auto points = find_output(dir, "montecarlo_points") ? find_output(dir, "montecarlo_points")
                                                            : find_output(dir, "sweep");
  if (points) {
    const auto t = read_table(*points);
    const auto ci = t.col("inaccuracy_C"), cd = t.col("die_id"), cv = t.col("vdd_V"), ct = t.col("temp_C");
    std::map<std::pair<long long, long long>, std::vector<double>> by;  // (vdd mV, temp mC) -> errors over dies
    double ss = 0.0, lo = 1e300, hi = -1e300, tmin = 1e300, tmax = -1e300;
    m.min_inacc = 1e300;
    m.max_inacc = -1e300;
    for (const auto& r : t.rows) {
      const double e = std::stod(r[ci]), temp = std::stod(r[ct]);
      m.min_inacc = std::min(m.min_inacc, e);
      m.max_inacc = std::max(m.max_inacc, e);
      ss += e * e;
      tmin = std::min(tmin, temp);
      tmax = std::max(tmax, temp);
      by[{std::llround(std::stod(r[cv]) * 1000), std::llround(temp * 1000)}].push_back(e);
      (void)cd;
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    if (t.rows.empty()) throw InputError("no rows in " + points->string());
    m.rms_inacc = std::sqrt(ss / static_cast<double>(t.rows.size()));
    m.relative_inacc = tmax > tmin ? (hi - lo) / (tmax - tmin) * 100.0 : 0.0;
    for (const auto& [k, v] : by) {
      if (v.size() > 1) m.three_sigma = std::max(m.three_sigma, 3.0 * stddev(v));
    }
  }
  const auto dies = find_output(dir, "montecarlo_dies") ? find_output(dir, "montecarlo_dies")
                                                        : find_output(dir, "sweep_dies");
  if (dies) {
    const auto t = read_table(*dies);
    const auto ca = t.col("adj_r2"), cv = t.col("vdd_V"), cp = t.col("peak_C");
    double low = 1e300;
    for (const auto& r : t.rows) low = std::min(low, std::stod(r[cv]));
    std::vector<double> adj, peaks;
    for (const auto& r : t.rows) {
      if (std::stod(r[cv]) == low) adj.push_back(std::stod(r[ca]));
      peaks.push_back(std::stod(r[cp]));
    }
    if (!adj.empty()) m.adj_r2 = mean(adj);
    if (!peaks.empty()) extra["peak_median_C"] = median(peaks);
  }
  if (const auto res = find_output(dir, "resolution")) {
    const auto t = read_table(*res);
    std::vector<double> sc;
    for (const auto& r : t.rows) sc.push_back(std::stod(r[t.col("sigma_C")]));
    if (!sc.empty()) m.noise_resolution = mean(sc);
  }
  if (m.noise_resolution == 0.0 && s.sensor.osc.jitter_rel_sigma > 0.0) {
    Scenario one = s;
    one.noise.seeds = 1;
    one.noise.enable = true;
    m.noise_resolution = run_resolution(one, 1).front().res.sigma_c;
  }
  // Model-side figures at the reference operating points.
  const auto& cfg = s.sensor;
  const auto cal = calibrate(cfg, min_supported_vdd);
  m.counter_resolution = cal.celsius_per_lsb();
  const auto sweep = line_sweep(0.9);
  m.line_sensitivity = line_sensitivity(cfg, Celsius{30.0}, 0.9, sweep, LineCalMode::single_point);
  const auto op30 = operating_point(cfg, 0.6, Celsius{30.0});
  m.conv_time = cfg.fdc.window_cycles / op30.f.f_l;
  m.energy_per_conv = conversion_energy(cfg, op30.fe, m.conv_time);
  m.r_fom = r_fom(m.energy_per_conv, m.noise_resolution > 0.0 ? m.noise_resolution : m.counter_resolution);

  RunWriter w(dir, "report", s);
  w.document(report_name, {{"min_inacc_C", m.min_inacc},
                           {"max_inacc_C", m.max_inacc},
                           {"rms_inacc_C", m.rms_inacc},
                           {"three_sigma_C", m.three_sigma},
                           {"relative_inacc_pct", m.relative_inacc},
                           {"counter_resolution_C_per_LSB", m.counter_resolution},
                           {"noise_resolution_C", m.noise_resolution},
                           {"line_sensitivity_C_per_V", m.line_sensitivity},
                           {"energy_per_conv_J", m.energy_per_conv},
                           {"conv_time_s", m.conv_time},
                           {"r_fom_nJK2", m.r_fom},
                           {"adj_r2", m.adj_r2},
                           {"extra", extra}});
  w.finish();
  std::printf("report config_hash=%s\n", hash.c_str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsense: behavioral model of a voltage-scalable subthreshold temperature sensor"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "scenario JSON (defaults to the canonical sensor)");
    c->add_option("--out", o.out, "output directory");
    c->add_option("--seed", o.seed, "master seed, overrides campaign.master_seed");
    c->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    c->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  };
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Sub subs[] = {
      {"validate", "check a scenario and print its hash", cmd_validate},
      {"fit", "run the parameter fit against the anchor set", cmd_fit},
      {"sweep", "temperature x supply sweep", cmd_sweep},
      {"montecarlo", "die population and corner runs", cmd_montecarlo},
      {"resolution", "repeated conversions at 25 degC", cmd_resolution},
      {"compare", "recompute figure-of-merit columns of a comparison table", cmd_compare},
      {"report", "summarize the outputs in --out", cmd_report},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const auto& s : subs) {
    auto* c = app.add_subcommand(s.name, s.help);
    common(c);
    if (std::string(s.name) == "compare") c->add_option("--table", o.table, "comparison CSV");
    if (std::string(s.name) == "fit") c->add_flag("--skip-population", o.skip_population, "keep the default lot scale");
    c->callback([&chosen, fn = s.fn] { chosen = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }
  try {
    return chosen(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config_error;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return config_error;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "model domain error: %s\n", e.what());
    return domain_error;
  } catch (const CalibrationError& e) {
    std::fprintf(stderr, "calibration error: %s\n", e.what());
    return domain_error;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return io_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return io_error;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return config_error;
  }
}
