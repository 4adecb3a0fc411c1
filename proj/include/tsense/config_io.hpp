#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "canonical.hpp"
#include "errors.hpp"
#include "sensor.hpp"
#include "variation.hpp"

namespace tsense {

using json = nlohmann::json;

struct SweepSpec {
  double temp_min = 0.0;   // degC
  double temp_max = 100.0;
  double temp_step = 1.0;
  std::vector<double> vdd_list{0.6};

  std::vector<double> temps() const {
    std::vector<double> t;
    const auto n = std::llround((temp_max - temp_min) / temp_step);
    for (long long i = 0; i <= n; ++i) t.push_back(temp_min + temp_step * static_cast<double>(i));
    return t;
  }
};

struct CampaignSpec {
  int n_dies = 1;
  std::uint64_t master_seed = 1;
  std::vector<CornerName> corners;
};

struct NoiseSpec {
  bool enable = false;
  int repeats = 200;  // conversions per resolution seed
  int seeds = 10;     // resolution seeds
  int cal_reads = canonical::cal_reads;
  int point_reads = canonical::point_reads;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};
};

/// Everything a run needs. The sensor defaults to the canonical fitted
/// device; variation defaults to zero spread.
struct Scenario {
  SensorConfig sensor = canonical_config();
  VariationSpec variation;
  CornerMagnitudes corner_magnitudes = canonical::corners;
  SweepSpec sweep;
  CampaignSpec campaign;
  NoiseSpec noise;
  OutputSpec outputs;
};

// ---------------------------------------------------------------------------
// JSON -> Scenario

namespace detail {

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError("unknown field", path.empty() ? k : path + "." + k);
  }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline void read_num(const json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError("expected a number", join(path, key));
  out = v.get<double>();
  if (!std::isfinite(out)) throw ConfigError("must be finite", join(path, key));
}

inline void read_int(const json& j, const std::string& path, const char* key, int& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("expected an integer", join(path, key));
  out = v.get<int>();
}

inline void read_u64(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError("expected a non-negative integer", join(path, key));
  }
  out = v.get<std::uint64_t>();
}

inline void read_bool(const json& j, const std::string& path, const char* key, bool& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_boolean()) throw ConfigError("expected true or false", join(path, key));
  out = j.at(key).get<bool>();
}

inline std::vector<double> num_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError("expected an array of numbers", path);
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("expected an array of numbers", path);
    out.push_back(x.get<double>());
  }
  return out;
}

inline void read_device(const json& j, const std::string& path, DeviceParams& d) {
  check_keys(j, path, {"w_over_l", "i0_A", "vth_V", "n"});
  read_num(j, path, "w_over_l", d.w_over_l);
  read_num(j, path, "i0_A", d.i0);
  read_num(j, path, "vth_V", d.vth);
  read_num(j, path, "n", d.n);
}

inline void read_iv(const json& j, const std::string& path, const std::vector<double>& knots, ExpIVCoeffs& c) {
  check_keys(j, path, {"alpha_A", "beta"});
  try {
    if (j.contains("alpha_A")) c.alpha = PiecewiseLinear(knots, num_array(j.at("alpha_A"), join(path, "alpha_A")));
    if (j.contains("beta")) c.beta = PiecewiseLinear(knots, num_array(j.at("beta"), join(path, "beta")));
  } catch (const ConfigError& e) {
    if (!e.path().empty()) throw;
    throw ConfigError(e.what(), path);
  }
}

inline void read_osc(const json& j, const std::string& path, OscParams& o) {
  check_keys(j, path, {"n_stages", "c_load_F", "delta_v_V", "t_edge_s"});
  read_int(j, path, "n_stages", o.n_stages);
  read_num(j, path, "c_load_F", o.c_load);
  read_num(j, path, "delta_v_V", o.delta_v);
  read_num(j, path, "t_edge_s", o.t_edge);
}

inline void read_sensor(const json& j, SensorConfig& s) {
  const std::string p = "sensor";
  check_keys(j, p, {"tcc", "regulator", "osc", "fdc", "backend"});
  if (j.contains("tcc")) {
    const auto& t = j.at("tcc");
    check_keys(t, "sensor.tcc", {"m1", "m2"});
    if (t.contains("m1")) read_device(t.at("m1"), "sensor.tcc.m1", s.tcc.m1);
    if (t.contains("m2")) read_device(t.at("m2"), "sensor.tcc.m2", s.tcc.m2);
  }
  if (j.contains("regulator")) {
    const auto& r = j.at("regulator");
    const std::string rp = "sensor.regulator";
    check_keys(r, rp, {"knots_C", "reg", "load", "headroom", "headroom_ref_vdd_V"});
    std::vector<double> knots(s.regulator.reg.alpha.knots().begin(), s.regulator.reg.alpha.knots().end());
    if (r.contains("knots_C")) {
      knots = num_array(r.at("knots_C"), rp + ".knots_C");
      if (!r.contains("reg") || !r.contains("load")) {
        throw ConfigError("new knots need both reg and load tables", rp + ".knots_C");
      }
    }
    if (r.contains("reg")) read_iv(r.at("reg"), rp + ".reg", knots, s.regulator.reg);
    if (r.contains("load")) read_iv(r.at("load"), rp + ".load", knots, s.regulator.load);
    read_num(r, rp, "headroom", s.regulator.headroom);
    read_num(r, rp, "headroom_ref_vdd_V", s.regulator.headroom_ref_vdd);
    for (const auto* t : {&s.regulator.reg.alpha, &s.regulator.reg.beta, &s.regulator.load.alpha,
                          &s.regulator.load.beta}) {
      if (t->knots().size() != knots.size() || !std::equal(knots.begin(), knots.end(), t->knots().begin())) {
        throw ConfigError("all regulator tables must share knots_C", rp);
      }
    }
  }
  if (j.contains("osc")) {
    const auto& o = j.at("osc");
    check_keys(o, "sensor.osc", {"slow", "fast", "jitter_rel_sigma"});
    if (o.contains("slow")) read_osc(o.at("slow"), "sensor.osc.slow", s.osc.slow);
    if (o.contains("fast")) read_osc(o.at("fast"), "sensor.osc.fast", s.osc.fast);
    read_num(o, "sensor.osc", "jitter_rel_sigma", s.osc.jitter_rel_sigma);
  }
  if (j.contains("fdc")) {
    const auto& f = j.at("fdc");
    check_keys(f, "sensor.fdc", {"ref_bits", "code_bits", "window_cycles"});
    read_int(f, "sensor.fdc", "ref_bits", s.fdc.ref_bits);
    read_int(f, "sensor.fdc", "code_bits", s.fdc.code_bits);
    read_int(f, "sensor.fdc", "window_cycles", s.fdc.window_cycles);
  }
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    check_keys(b, "sensor.backend", {"offset_W", "per_volt_W"});
    read_num(b, "sensor.backend", "offset_W", s.backend.offset);
    read_num(b, "sensor.backend", "per_volt_W", s.backend.per_volt);
  }
}

}  // namespace detail

/// Structural validation of a whole scenario. Errors carry the field path.
inline void validate(const Scenario& s) {
  try {
    validate(s.sensor);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const auto msg = e.path().empty() ? what : what.substr(e.path().size() + 2);
    throw ConfigError(msg, e.path().empty() ? "sensor" : "sensor." + e.path());
  }
  auto v = s.variation;
  v.jitter_rel_sigma = s.sensor.osc.jitter_rel_sigma;
  validate(v);
  if (!(s.corner_magnitudes.p >= 0.0)) throw ConfigError("must be non-negative", "corners.p_V");
  if (!(s.corner_magnitudes.n >= 0.0)) throw ConfigError("must be non-negative", "corners.n_V");
  const auto& w = s.sweep;
  if (!(w.temp_step > 0.0)) throw ConfigError("must be positive", "sweep.temp_step_C");
  if (!(w.temp_max >= w.temp_min)) throw ConfigError("must not be below temp_min_C", "sweep.temp_max_C");
  const double lo = s.sensor.regulator.reg.alpha.lo(), hi = s.sensor.regulator.reg.alpha.hi();
  if (w.temp_min < lo || w.temp_max > hi) {
    throw ConfigError("sweep must stay inside the regulator table range", "sweep.temp_min_C");
  }
  const double steps = (w.temp_max - w.temp_min) / w.temp_step;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw ConfigError("range must be a whole number of steps", "sweep.temp_step_C");
  }
  if (w.vdd_list.empty()) throw ConfigError("must not be empty", "sweep.vdd_list_V");
  for (double v_dd : w.vdd_list) {
    if (!(v_dd >= min_supported_vdd - 1e-12 && v_dd <= max_supported_vdd + 1e-12)) {
      throw ConfigError("supplies must lie in [0.6, 1.8] V", "sweep.vdd_list_V");
    }
  }
  if (!(s.campaign.n_dies >= 1)) throw ConfigError("must be at least 1", "campaign.n_dies");
  if (!(s.noise.repeats >= 2)) throw ConfigError("must be at least 2", "noise.repeats");
  if (!(s.noise.seeds >= 1)) throw ConfigError("must be at least 1", "noise.seeds");
  if (!(s.noise.cal_reads >= 1)) throw ConfigError("must be at least 1", "noise.cal_reads");
  if (!(s.noise.point_reads >= 1)) throw ConfigError("must be at least 1", "noise.point_reads");
  for (const auto& f : s.outputs.formats) {
    if (f != "csv" && f != "json") throw ConfigError("formats are csv or json", "outputs.formats");
  }
}

inline Scenario scenario_from_json(const json& j) {
  Scenario s;
  // config_hash may be present in files written by `fit`; it is ignored.
  detail::check_keys(j, "", {"sensor", "variation", "corners", "sweep", "campaign", "noise", "outputs", "config_hash"});
  if (j.contains("sensor")) detail::read_sensor(j.at("sensor"), s.sensor);
  if (j.contains("variation")) {
    const auto& v = j.at("variation");
    const std::string p = "variation";
    if (v.is_string()) {
      if (v.get<std::string>() != "canonical") throw ConfigError("only \"canonical\" is a named variation", p);
      s.variation = canonical::variation;
      s.variation.jitter_rel_sigma = 0.0;  // campaigns take jitter from the sensor
    } else {
      detail::check_keys(v, p, {"sigma_vth_V", "sigma_native_V", "sigma_i0", "sigma_cap", "lot_i0_scale"});
      detail::read_num(v, p, "sigma_vth_V", s.variation.sigma_vth);
      detail::read_num(v, p, "sigma_native_V", s.variation.sigma_native);
      detail::read_num(v, p, "sigma_i0", s.variation.sigma_i0);
      detail::read_num(v, p, "sigma_cap", s.variation.sigma_cap);
      detail::read_num(v, p, "lot_i0_scale", s.variation.lot_i0_scale);
    }
  }
  if (j.contains("corners")) {
    const auto& c = j.at("corners");
    detail::check_keys(c, "corners", {"p_V", "n_V"});
    detail::read_num(c, "corners", "p_V", s.corner_magnitudes.p);
    detail::read_num(c, "corners", "n_V", s.corner_magnitudes.n);
  }
  if (j.contains("sweep")) {
    const auto& w = j.at("sweep");
    detail::check_keys(w, "sweep", {"temp_min_C", "temp_max_C", "temp_step_C", "vdd_list_V"});
    detail::read_num(w, "sweep", "temp_min_C", s.sweep.temp_min);
    detail::read_num(w, "sweep", "temp_max_C", s.sweep.temp_max);
    detail::read_num(w, "sweep", "temp_step_C", s.sweep.temp_step);
    if (w.contains("vdd_list_V")) s.sweep.vdd_list = detail::num_array(w.at("vdd_list_V"), "sweep.vdd_list_V");
  }
  if (j.contains("campaign")) {
    const auto& c = j.at("campaign");
    detail::check_keys(c, "campaign", {"n_dies", "master_seed", "corners"});
    detail::read_int(c, "campaign", "n_dies", s.campaign.n_dies);
    detail::read_u64(c, "campaign", "master_seed", s.campaign.master_seed);
    if (c.contains("corners")) {
      if (!c.at("corners").is_array()) throw ConfigError("expected an array of corner names", "campaign.corners");
      for (const auto& x : c.at("corners")) {
        const auto name = x.is_string() ? parse_corner(x.get<std::string>()) : std::nullopt;
        if (!name) throw ConfigError("corners are TT, FF, SS, FS or SF", "campaign.corners");
        s.campaign.corners.push_back(*name);
      }
    }
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    detail::check_keys(n, "noise", {"enable", "repeats", "seeds", "cal_reads", "point_reads"});
    detail::read_bool(n, "noise", "enable", s.noise.enable);
    detail::read_int(n, "noise", "repeats", s.noise.repeats);
    detail::read_int(n, "noise", "seeds", s.noise.seeds);
    detail::read_int(n, "noise", "cal_reads", s.noise.cal_reads);
    detail::read_int(n, "noise", "point_reads", s.noise.point_reads);
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    detail::check_keys(o, "outputs", {"directory", "formats"});
    if (o.contains("directory")) {
      if (!o.at("directory").is_string()) throw ConfigError("expected a string", "outputs.directory");
      s.outputs.directory = o.at("directory").get<std::string>();
    }
    if (o.contains("formats")) {
      s.outputs.formats.clear();
      if (!o.at("formats").is_array()) throw ConfigError("expected an array", "outputs.formats");
      for (const auto& f : o.at("formats")) {
        if (!f.is_string()) throw ConfigError("expected strings", "outputs.formats");
        s.outputs.formats.push_back(f.get<std::string>());
      }
    }
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what(), path);
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Scenario -> JSON

namespace detail {

inline json device_json(const DeviceParams& d) {
  return {{"w_over_l", d.w_over_l}, {"i0_A", d.i0}, {"vth_V", d.vth}, {"n", d.n}};
}

inline json osc_json(const OscParams& o) {
  return {{"n_stages", o.n_stages}, {"c_load_F", o.c_load}, {"delta_v_V", o.delta_v}, {"t_edge_s", o.t_edge}};
}

inline json vec_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

}  // namespace detail

inline json sensor_to_json(const SensorConfig& s) {
  const auto& r = s.regulator;
  return {
      {"tcc", {{"m1", detail::device_json(s.tcc.m1)}, {"m2", detail::device_json(s.tcc.m2)}}},
      {"regulator",
       {{"knots_C", detail::vec_json(r.reg.alpha.knots())},
        {"reg", {{"alpha_A", detail::vec_json(r.reg.alpha.values())}, {"beta", detail::vec_json(r.reg.beta.values())}}},
        {"load",
         {{"alpha_A", detail::vec_json(r.load.alpha.values())}, {"beta", detail::vec_json(r.load.beta.values())}}},
        {"headroom", r.headroom},
        {"headroom_ref_vdd_V", r.headroom_ref_vdd}}},
      {"osc",
       {{"slow", detail::osc_json(s.osc.slow)},
        {"fast", detail::osc_json(s.osc.fast)},
        {"jitter_rel_sigma", s.osc.jitter_rel_sigma}}},
      {"fdc", {{"ref_bits", s.fdc.ref_bits}, {"code_bits", s.fdc.code_bits}, {"window_cycles", s.fdc.window_cycles}}},
      {"backend", {{"offset_W", s.backend.offset}, {"per_volt_W", s.backend.per_volt}}},
  };
}

inline json variation_to_json(const VariationSpec& v) {
  return {{"sigma_vth_V", v.sigma_vth},
          {"sigma_native_V", v.sigma_native},
          {"sigma_i0", v.sigma_i0},
          {"sigma_cap", v.sigma_cap},
          {"lot_i0_scale", v.lot_i0_scale}};
}

/// Fully resolved scenario. Output settings are left out unless asked for,
/// so they never enter the hash.
inline json scenario_to_json(const Scenario& s, bool with_outputs = false) {
  json corners = json::array();
  for (auto c : s.campaign.corners) corners.push_back(std::string(to_string(c)));
  json j = {
      {"sensor", sensor_to_json(s.sensor)},
      {"variation", variation_to_json(s.variation)},
      {"corners", {{"p_V", s.corner_magnitudes.p}, {"n_V", s.corner_magnitudes.n}}},
      {"sweep",
       {{"temp_min_C", s.sweep.temp_min},
        {"temp_max_C", s.sweep.temp_max},
        {"temp_step_C", s.sweep.temp_step},
        {"vdd_list_V", s.sweep.vdd_list}}},
      {"campaign", {{"n_dies", s.campaign.n_dies}, {"master_seed", s.campaign.master_seed}, {"corners", corners}}},
      {"noise",
       {{"enable", s.noise.enable},
        {"repeats", s.noise.repeats},
        {"seeds", s.noise.seeds},
        {"cal_reads", s.noise.cal_reads},
        {"point_reads", s.noise.point_reads}}},
  };
  if (with_outputs) j["outputs"] = {{"directory", s.outputs.directory}, {"formats", s.outputs.formats}};
  return j;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// FNV-1a 64 over the compact dump of the resolved scenario. Keys are
/// sorted by the JSON library, so field order in the input file does not
/// matter.
inline std::string config_hash(const Scenario& s) { return hex64(fnv1a64(scenario_to_json(s).dump())); }

}  // namespace tsense
