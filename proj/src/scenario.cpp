#include "mandet/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mandet/elements.hpp"
#include "mandet/estimation.hpp"
#include "mandet/frames.hpp"

namespace mandet {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

struct CivilTime {
  long long year;
  unsigned month, day, hour, minute;
  double second;
};

CivilTime parse_utc(const std::string& text) {
  std::string s = text;
  // Normalize "YYYY-MM-DD, HH:..." and "YYYY-MM-DDTHH:..." to a space.
  for (char& c : s) {
    if (c == 'T' || c == ',') c = ' ';
  }
  CivilTime ct{};
  int matched = std::sscanf(s.c_str(), "%lld-%u-%u %u:%u:%lf", &ct.year, &ct.month, &ct.day,
                            &ct.hour, &ct.minute, &ct.second);
  if (matched != 6 || ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31 ||
      ct.hour > 23 || ct.minute > 59 || ct.second < 0.0 || ct.second >= 61.0) {
    throw InputError("cannot parse UTC timestamp '" + text + "'");
  }
  return ct;
}

double utc_to_seconds(const std::string& text) {
  const CivilTime ct = parse_utc(text);
  return static_cast<double>(days_from_civil(ct.year, ct.month, ct.day)) * 86400.0 +
         ct.hour * 3600.0 + ct.minute * 60.0 + ct.second;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

double utc_offset_seconds(const std::string& utc, const std::string& reference_utc) {
  return utc_to_seconds(utc) - utc_to_seconds(reference_utc);
}

std::string utc_from_offset(double offset_s, const std::string& reference_utc) {
  double total = utc_to_seconds(reference_utc) + offset_s;
  long long days = static_cast<long long>(std::floor(total / 86400.0));
  double rem = total - days * 86400.0;

  // Invert days_from_civil (Hinnant's civil_from_days).
  long long z = days + 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);

  const unsigned hh = static_cast<unsigned>(rem / 3600.0);
  rem -= hh * 3600.0;
  const unsigned mm = static_cast<unsigned>(rem / 60.0);
  rem -= mm * 60.0;

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02u:%02u:%05.2f", y + (m <= 2 ? 1 : 0), m,
                d, hh, mm, rem);
  return buf;
}

Scenario parse_scenario(std::istream& in, const std::string& filename) {
  Scenario sc;
  std::string section;
  std::string line;
  int lineno = 0;

  std::string maneuver_type = "none";
  std::string maneuver_start, maneuver_end, impulse_epoch;
  std::optional<Vec3> u_vvlh, dv_eci;
  double sigma_arcsec = 5.0;
  bool saw_reference = false;

  const auto fail = [&](const std::string& msg) -> void {
    throw ScenarioError(filename + ":" + std::to_string(lineno) + ": " + msg);
  };

  const auto to_double = [&](const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &pos);
    } catch (const std::exception&) {
      fail("expected a number, got '" + v + "'");
    }
    if (pos != v.size()) fail("trailing characters after number '" + v + "'");
    return d;
  };

  const auto to_vec3 = [&](const std::string& v) {
    const auto parts = split_ws(v);
    if (parts.size() != 3) fail("expected three numbers, got '" + v + "'");
    return Vec3(to_double(parts[0]), to_double(parts[1]), to_double(parts[2]));
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = line.substr(1, line.size() - 2);
      const bool known = section == "force_model" || section == "observer" ||
                         section == "target" || section == "maneuver" ||
                         section == "observation" || section == "windows";
      if (!known) fail("unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto kb = key.find_last_not_of(" \t");
    key = key.substr(0, kb + 1);
    const auto vb = value.find_first_not_of(" \t");
    if (vb == std::string::npos) fail("empty value for '" + key + "'");
    value = value.substr(vb);

    const auto element_key = [&](OrbitalElements& el) {
      if (key == "a_km") el.a_km = to_double(value);
      else if (key == "e") el.e = to_double(value);
      else if (key == "inc_deg") el.inc_deg = to_double(value);
      else if (key == "raan_deg") el.raan_deg = to_double(value);
      else if (key == "argp_deg") el.argp_deg = to_double(value);
      else if (key == "mean_anomaly_deg") el.mean_anom_deg = to_double(value);
      else fail("unknown key '" + key + "' in [" + section + "]");
    };

    if (section.empty()) {
      if (key == "name") sc.name = value;
      else if (key == "reference_epoch_utc") {
        sc.reference_epoch_utc = value;
        saw_reference = true;
      } else fail("unknown top-level key '" + key + "'");
    } else if (section == "force_model") {
      if (key == "mu_m3_s2") sc.force.mu = to_double(value);
      else if (key == "zonal_degree") {
        const double z = to_double(value);
        if (z != 0.0 && z != 2.0) fail("zonal_degree must be 0 or 2");
        sc.force.zonal_degree = static_cast<int>(z);
      } else if (key == "j2") sc.force.j2 = to_double(value);
      else if (key == "earth_radius_m") sc.force.earth_radius = to_double(value);
      else fail("unknown key '" + key + "' in [force_model]");
    } else if (section == "observer") {
      element_key(sc.observer);
    } else if (section == "target") {
      element_key(sc.target);
    } else if (section == "maneuver") {
      if (key == "type") maneuver_type = value;
      else if (key == "start_utc") maneuver_start = value;
      else if (key == "end_utc") maneuver_end = value;
      else if (key == "epoch_utc") impulse_epoch = value;
      else if (key == "u_vvlh_m_s2") u_vvlh = to_vec3(value);
      else if (key == "dv_eci_m_s") dv_eci = to_vec3(value);
      else fail("unknown key '" + key + "' in [maneuver]");
    } else if (section == "observation") {
      if (key == "sigma_arcsec") sigma_arcsec = to_double(value);
      else if (key == "cadence_s") sc.cadence_s = to_double(value);
      else if (key == "seed") sc.seed = static_cast<std::uint64_t>(to_double(value));
      else fail("unknown key '" + key + "' in [observation]");
    } else if (section == "windows") {
      if (key != "window") fail("unknown key '" + key + "' in [windows]");
      const auto parts = split_ws(value);
      if (parts.size() != 2) fail("window needs 'start_offset_s duration_s'");
      TrackletWindow w{to_double(parts[0]), to_double(parts[1])};
      if (w.duration_s <= 0.0) fail("window duration must be positive");
      if (!sc.windows.empty() &&
          w.start_offset_s <= sc.windows.back().start_offset_s + sc.windows.back().duration_s) {
        fail("windows must be increasing and non-overlapping");
      }
      sc.windows.push_back(w);
    }
  }

  lineno = 0;  // end-of-file validation reports without a line number
  const auto fail_eof = [&](const std::string& msg) -> void {
    throw ScenarioError(filename + ": " + msg);
  };
  if (!saw_reference) fail_eof("missing reference_epoch_utc");
  if (sigma_arcsec < 0.0) fail_eof("sigma_arcsec must be nonnegative");
  sc.sigma_rad = sigma_arcsec * constants::arcsec;
  if (sc.cadence_s <= 0.0) fail_eof("cadence_s must be positive");

  if (maneuver_type == "constant_thrust") {
    if (maneuver_start.empty() || maneuver_end.empty() || !u_vvlh) {
      fail_eof("[maneuver] type constant_thrust needs start_utc, end_utc, u_vvlh_m_s2");
    }
    ManeuverPolicy pol;
    pol.burn_start = Epoch{utc_offset_seconds(maneuver_start, sc.reference_epoch_utc)};
    pol.burn_end = Epoch{utc_offset_seconds(maneuver_end, sc.reference_epoch_utc)};
    pol.u_vvlh = *u_vvlh;
    if (!(pol.burn_start < pol.burn_end)) fail_eof("maneuver start must precede its end");
    sc.thrust_truth = pol;
  } else if (maneuver_type == "impulse") {
    if (impulse_epoch.empty() || !dv_eci) {
      fail_eof("[maneuver] type impulse needs epoch_utc and dv_eci_m_s");
    }
    ImpulsiveManeuver imp;
    imp.epoch = Epoch{utc_offset_seconds(impulse_epoch, sc.reference_epoch_utc)};
    imp.dv_eci = *dv_eci;
    sc.impulse_truth = imp;
  } else if (maneuver_type != "none") {
    fail_eof("unknown maneuver type '" + maneuver_type + "'");
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  return parse_scenario(in, path);
}

Ephemeris make_observer_ephemeris(const Scenario& sc, const StepControl& ctrl) {
  return Ephemeris(elements_to_state(sc.observer, sc.force.mu, Epoch{0.0}), sc.force, ctrl);
}

Ephemeris make_target_truth_ephemeris(const Scenario& sc, const StepControl& ctrl) {
  const InertialState s0 = elements_to_state(sc.target, sc.force.mu, Epoch{0.0});
  if (sc.thrust_truth) return Ephemeris(s0, sc.force, *sc.thrust_truth, ctrl);
  if (sc.impulse_truth) return Ephemeris(s0, sc.force, *sc.impulse_truth, ctrl);
  return Ephemeris(s0, sc.force, ctrl);
}

InertialState pre_maneuver_state(const Scenario& sc) {
  return elements_to_state(sc.target, sc.force.mu, Epoch{0.0});
}

std::vector<Tracklet> simulate_scenario_tracklets(const Scenario& sc, const StepControl& ctrl) {
  const Ephemeris target = make_target_truth_ephemeris(sc, ctrl);
  const Ephemeris observer = make_observer_ephemeris(sc, ctrl);
  return simulate_tracklets(sc.windows, target, observer, sc.sigma_rad, sc.cadence_s, sc.seed);
}

TrackletSplit split_tracklets(const std::vector<Tracklet>& tracklets,
                              const InertialState& catalog_state, const Ephemeris& observer,
                              const ForceModelConfig& cfg, double wrms_gate,
                              const StepControl& ctrl) {
  TrackletSplit out;
  const Ephemeris catalog(catalog_state, cfg, ctrl);
  for (const Tracklet& trk : tracklets) {
    std::vector<Epoch> epochs;
    epochs.reserve(trk.measurements.size());
    for (const auto& m : trk.measurements) epochs.push_back(m.epoch);
    const auto predicted = catalog.at(epochs);
    const auto obs_states = observer.at(epochs);
    std::vector<double> resid, sig;
    for (std::size_t k = 0; k < epochs.size(); ++k) {
      const AnglePair pred = measure_corrected(predicted[k], obs_states[k]);
      resid.push_back(wrap_angle(trk.measurements[k].alpha - pred.alpha));
      resid.push_back(trk.measurements[k].delta - pred.delta);
      sig.push_back(trk.measurements[k].sigma);
    }
    const double wrms = performance_index(resid, sig);
    (wrms <= wrms_gate ? out.pre : out.post).push_back(trk);
  }
  return out;
}

void write_tracklets_csv(std::ostream& os, const std::vector<Tracklet>& tracklets) {
  os << "epoch_s,alpha_rad,delta_rad,sigma_rad,tracklet_id,observer_id\n";
  os.precision(17);
  for (const Tracklet& trk : tracklets) {
    for (const AngularMeasurement& m : trk.measurements) {
      os << m.epoch.sec << ',' << m.alpha << ',' << m.delta << ',' << m.sigma << ',' << trk.id
         << ',' << trk.observer_id << '\n';
    }
  }
}

std::vector<Tracklet> read_tracklets_csv(std::istream& in, const std::string& filename) {
  std::vector<Tracklet> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || lineno == 1) continue;  // header
    AngularMeasurement m;
    int id = 0, obs_id = 0;
    char c;
    std::istringstream iss(line);
    if (!(iss >> m.epoch.sec >> c >> m.alpha >> c >> m.delta >> c >> m.sigma >> c >> id >> c >>
          obs_id)) {
      throw InputError(filename + ":" + std::to_string(lineno) + ": malformed tracklet row");
    }
    if (out.empty() || out.back().id != id) {
      Tracklet trk;
      trk.id = id;
      trk.observer_id = obs_id;
      out.push_back(trk);
    }
    out.back().measurements.push_back(m);
  }
  if (out.empty()) throw InputError(filename + ": no tracklet rows");
  return out;
}

void write_truth_states_csv(std::ostream& os, const std::vector<InertialState>& states) {
  os << "epoch_s,rx_m,ry_m,rz_m,vx_mps,vy_mps,vz_mps\n";
  os.precision(17);
  for (const InertialState& s : states) {
    os << s.epoch.sec << ',' << s.r.x() << ',' << s.r.y() << ',' << s.r.z() << ',' << s.v.x()
       << ',' << s.v.y() << ',' << s.v.z() << '\n';
  }
}

void write_correlation_csv(std::ostream& os, const CorrelationReport& report) {
  os << "epoch_s,chi_strict,chi_relaxed\n";
  os.precision(17);
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    os << report.epochs[i].sec << ',' << report.chi_strict[i] << ',';
    if (!report.chi_relaxed.empty()) os << report.chi_relaxed[i];
    os << '\n';
  }
}

void write_candidates_csv(std::ostream& os, const DetectionResult& result) {
  os << "tb_s,tf_s,J,dV_mps,accepted\n";
  os.precision(17);
  for (const ManeuverCandidate& c : result.candidates) {
    os << c.burn_start.sec << ',' << c.burn_end.sec << ',' << c.j << ',' << c.delta_v << ','
       << (c.accepted ? 1 : 0) << '\n';
  }
}

std::string detection_summary_json(const DetectionResult& result, const Scenario& sc,
                                   std::size_t post_tracklets_used) {
  nlohmann::json j;
  switch (result.mode) {
    case DetectionMode::None: j["mode"] = "none"; break;
    case DetectionMode::Impulsive: j["mode"] = "impulsive"; break;
    case DetectionMode::LongDuration: j["mode"] = "long-duration"; break;
  }
  j["j_threshold"] = result.j_threshold;
  j["candidates"] = result.candidates.size();
  std::size_t accepted = 0;
  for (const auto& c : result.candidates) accepted += c.accepted ? 1 : 0;
  j["accepted"] = accepted;
  j["post_tracklets_used"] = post_tracklets_used;
  if (const ManeuverCandidate* sel = result.chosen()) {
    j["tb_s"] = sel->burn_start.sec;
    j["tf_s"] = sel->burn_end.sec;
    j["tb_utc"] = utc_from_offset(sel->burn_start.sec, sc.reference_epoch_utc);
    j["tf_utc"] = utc_from_offset(sel->burn_end.sec, sc.reference_epoch_utc);
    j["u_vvlh_m_s2"] = {sel->estimate.u_vvlh.x(), sel->estimate.u_vvlh.y(),
                        sel->estimate.u_vvlh.z()};
    j["dV_mps"] = sel->delta_v;
    j["J"] = sel->j;
    j["iterations"] = sel->estimate.iterations;
  }
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open '" + tmp + "' for writing");
    os << content;
    if (!os) throw InputError("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mandet
