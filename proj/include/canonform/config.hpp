#pragma once

// Configuration documents: JSON text describing the Hamiltonian, the time
// window and the integrator tolerances.
//
//   {
//     "system": 3,
//     "time": {"start": 0, "end": 10},
//     "integrator": {"rel_tol": 1e-9, "abs_tol": 1e-12, "max_step": 0.1},
//     "hamiltonian": {"h1": <drive>, "h2": <drive>, "v1": <drive>, ...}
//   }
//
// <drive> is one of
//   {"shape": "constant", "value": c}
//   {"shape": "cosine", "amplitude": c, "angular_frequency": w, "phase_offset": d}
//   {"shape": "gaussian", "amplitude": c, "center": t0, "width": s}
//   {"shape": "piecewise", "knots": [[t, c], ...]}
//   {"shape": "sum", "terms": [<drive>, ...]}
// where a complex value c is written [re, im] or as a plain real number.

#include "canonform/drives.hpp"
#include "canonform/integrate.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <variant>

namespace canonform {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using AnyHamiltonian = std::variant<Hamiltonian2, Hamiltonian3>;

struct RunConfig {
  AnyHamiltonian hamiltonian;
  double t_start = 0.0;
  double t_end = 1.0;
  IntegratorSettings integrator;

  int system() const { return hamiltonian.index() == 0 ? 2 : 3; }
};

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(path, "unknown field '" + key + "'");
  }
}

inline const json& field(const json& obj, const std::string& path, const char* name) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(name);
  if (it == obj.end()) fail(path, std::string("missing field '") + name + "'");
  return *it;
}

inline double read_real(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

inline Complex read_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {read_real(j, path), 0.0};
  if (j.is_array() && j.size() == 2)
    return {read_real(j[0], path + "[0]"), read_real(j[1], path + "[1]")};
  fail(path, "expected a number or a [re, im] pair");
}

inline double optional_real(const json& obj, const std::string& path, const char* name,
                            double fallback) {
  const auto it = obj.find(name);
  return it == obj.end() ? fallback : read_real(*it, path + "." + name);
}

inline DriveSignal read_drive(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "drive must be an object");
  const json& shape_j = field(j, path, "shape");
  if (!shape_j.is_string()) fail(path + ".shape", "expected a string");
  const auto shape = shape_j.get<std::string>();
  try {
    if (shape == "constant") {
      reject_unknown_keys(j, path, {"shape", "value"});
      return DriveSignal::constant(read_complex(field(j, path, "value"), path + ".value"));
    }
    if (shape == "cosine") {
      reject_unknown_keys(j, path, {"shape", "amplitude", "angular_frequency", "phase_offset"});
      return DriveSignal::cosine(
          read_complex(field(j, path, "amplitude"), path + ".amplitude"),
          read_real(field(j, path, "angular_frequency"), path + ".angular_frequency"),
          optional_real(j, path, "phase_offset", 0.0));
    }
    if (shape == "gaussian") {
      reject_unknown_keys(j, path, {"shape", "amplitude", "center", "width"});
      return DriveSignal::gaussian(read_complex(field(j, path, "amplitude"), path + ".amplitude"),
                                   read_real(field(j, path, "center"), path + ".center"),
                                   read_real(field(j, path, "width"), path + ".width"));
    }
    if (shape == "piecewise") {
      reject_unknown_keys(j, path, {"shape", "knots"});
      const json& kj = field(j, path, "knots");
      if (!kj.is_array()) fail(path + ".knots", "expected an array of [t, value] pairs");
      std::vector<Knot> knots;
      for (std::size_t i = 0; i < kj.size(); ++i) {
        const auto kp = path + ".knots[" + std::to_string(i) + "]";
        if (!kj[i].is_array() || kj[i].size() != 2) fail(kp, "expected a [t, value] pair");
        knots.push_back({read_real(kj[i][0], kp + "[0]"), read_complex(kj[i][1], kp + "[1]")});
      }
      return DriveSignal::piecewise(std::move(knots));
    }
    if (shape == "sum") {
      reject_unknown_keys(j, path, {"shape", "terms"});
      const json& tj = field(j, path, "terms");
      if (!tj.is_array()) fail(path + ".terms", "expected an array of drives");
      std::vector<DriveSignal> terms;
      for (std::size_t i = 0; i < tj.size(); ++i)
        terms.push_back(read_drive(tj[i], path + ".terms[" + std::to_string(i) + "]"));
      return DriveSignal::sum(std::move(terms));
    }
  } catch (const InvalidDrive& e) {
    fail(path, e.what());
  }
  fail(path + ".shape", "unknown shape '" + shape + "'");
}

inline DriveSignal read_real_drive(const json& obj, const std::string& path, const char* name) {
  auto d = read_drive(field(obj, path, name), path + "." + name);
  if (!d.is_real()) fail(path + "." + name, "diagonal drive must be real-valued");
  return d;
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

}  // namespace config_detail

inline nlohmann::json drive_to_json(const DriveSignal& d) {
  using nlohmann::json;
  using config_detail::complex_to_json;
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConstantDrive>) {
          return {{"shape", "constant"}, {"value", complex_to_json(s.value)}};
        } else if constexpr (std::is_same_v<S, CosineDrive>) {
          return {{"shape", "cosine"},
                  {"amplitude", complex_to_json(s.amplitude)},
                  {"angular_frequency", s.angular_frequency},
                  {"phase_offset", s.phase_offset}};
        } else if constexpr (std::is_same_v<S, GaussianPulse>) {
          return {{"shape", "gaussian"},
                  {"amplitude", complex_to_json(s.amplitude)},
                  {"center", s.center},
                  {"width", s.width}};
        } else if constexpr (std::is_same_v<S, PiecewiseLinear>) {
          json knots = json::array();
          for (const auto& k : s.knots) knots.push_back(json::array({k.time, complex_to_json(k.value)}));
          return {{"shape", "piecewise"}, {"knots", knots}};
        } else {
          json terms = json::array();
          for (const auto& t : s.terms) terms.push_back(drive_to_json(t));
          return {{"shape", "sum"}, {"terms", terms}};
        }
      },
      d.shape());
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  using nlohmann::json;
  json ham;
  if (const auto* h2 = std::get_if<Hamiltonian2>(&cfg.hamiltonian)) {
    ham = {{"h", drive_to_json(h2->h)}, {"v", drive_to_json(h2->v)}};
  } else {
    const auto& h3 = std::get<Hamiltonian3>(cfg.hamiltonian);
    ham = {{"h1", drive_to_json(h3.h1)},
           {"h2", drive_to_json(h3.h2)},
           {"v1", drive_to_json(h3.v1)},
           {"v2", drive_to_json(h3.v2)},
           {"v3", drive_to_json(h3.v3)}};
  }
  return {{"system", cfg.system()},
          {"time", {{"start", cfg.t_start}, {"end", cfg.t_end}}},
          {"integrator",
           {{"rel_tol", cfg.integrator.rel_tol},
            {"abs_tol", cfg.integrator.abs_tol},
            {"max_step", cfg.integrator.max_step},
            {"initial_step", cfg.integrator.initial_step},
            {"max_steps", cfg.integrator.max_steps}}},
          {"hamiltonian", ham}};
}

/// Points at which an explicitly supplied h3 is checked against −h1 − h2.
inline std::vector<double> trace_validation_times(double t_start, double t_end) {
  constexpr int kPoints = 33;
  std::vector<double> ts;
  for (int i = 0; i < kPoints; ++i) ts.push_back(t_start + (t_end - t_start) * i / (kPoints - 1));
  return ts;
}

inline RunConfig parse_config(const std::string& document) {
  using config_detail::fail;
  using config_detail::field;
  using config_detail::json;
  using config_detail::read_real;
  using config_detail::read_real_drive;
  using config_detail::read_drive;

  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  if (!root.is_object()) fail("<root>", "expected an object");
  config_detail::reject_unknown_keys(root, "<root>", {"system", "time", "integrator", "hamiltonian"});

  const json& sys_j = field(root, "<root>", "system");
  if (!sys_j.is_number_integer()) fail("system", "expected 2 or 3");
  const int system = sys_j.get<int>();
  if (system != 2 && system != 3) fail("system", "expected 2 or 3");

  RunConfig cfg;
  const json& time_j = field(root, "<root>", "time");
  config_detail::reject_unknown_keys(time_j, "time", {"start", "end"});
  cfg.t_start = read_real(field(time_j, "time", "start"), "time.start");
  cfg.t_end = read_real(field(time_j, "time", "end"), "time.end");
  if (!(cfg.t_end > cfg.t_start)) fail("time", "end must be greater than start");

  cfg.integrator = IntegratorSettings::defaults_for(cfg.t_start, cfg.t_end);
  if (const auto it = root.find("integrator"); it != root.end()) {
    const json& ij = *it;
    if (!ij.is_object()) fail("integrator", "expected an object");
    config_detail::reject_unknown_keys(ij, "integrator",
                                       {"rel_tol", "abs_tol", "max_step", "initial_step", "max_steps"});
    auto& s = cfg.integrator;
    s.rel_tol = config_detail::optional_real(ij, "integrator", "rel_tol", s.rel_tol);
    s.abs_tol = config_detail::optional_real(ij, "integrator", "abs_tol", s.abs_tol);
    const bool has_max_step = ij.contains("max_step");
    s.max_step = config_detail::optional_real(ij, "integrator", "max_step", s.max_step);
    s.initial_step = config_detail::optional_real(ij, "integrator", "initial_step",
                                                  has_max_step ? s.max_step / 100.0 : s.initial_step);
    if (const auto ms = ij.find("max_steps"); ms != ij.end()) {
      if (!ms->is_number_integer()) fail("integrator.max_steps", "expected an integer");
      s.max_steps = ms->get<long long>();
    }
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      fail("integrator", e.what());
    }
  }

  const json& hj = field(root, "<root>", "hamiltonian");
  if (!hj.is_object()) fail("hamiltonian", "expected an object");
  if (system == 2) {
    config_detail::reject_unknown_keys(hj, "hamiltonian", {"h", "v"});
    Hamiltonian2 ham;
    ham.h = read_real_drive(hj, "hamiltonian", "h");
    ham.v = read_drive(field(hj, "hamiltonian", "v"), "hamiltonian.v");
    cfg.hamiltonian = std::move(ham);
  } else {
    config_detail::reject_unknown_keys(hj, "hamiltonian", {"h1", "h2", "h3", "v1", "v2", "v3"});
    Hamiltonian3 ham;
    ham.h1 = read_real_drive(hj, "hamiltonian", "h1");
    ham.h2 = read_real_drive(hj, "hamiltonian", "h2");
    ham.v1 = read_drive(field(hj, "hamiltonian", "v1"), "hamiltonian.v1");
    ham.v2 = read_drive(field(hj, "hamiltonian", "v2"), "hamiltonian.v2");
    ham.v3 = read_drive(field(hj, "hamiltonian", "v3"), "hamiltonian.v3");
    if (hj.contains("h3")) {
      const auto h3 = read_real_drive(hj, "hamiltonian", "h3");
      for (double t : trace_validation_times(cfg.t_start, cfg.t_end)) {
        const double expected = -(ham.h1(t).real() + ham.h2(t).real());
        if (std::abs(h3(t).real() - expected) > 1e-12)
          fail("hamiltonian.h3", "must equal -(h1 + h2) (trace constraint violated at t = " +
                                     std::to_string(t) + ")");
      }
    }
    cfg.hamiltonian = std::move(ham);
  }
  return cfg;
}

}  // namespace canonform
