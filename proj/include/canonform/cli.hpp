#pragma once

// Front-end logic behind the `canonform` executable: load a config, run the
// canonical integration (and optionally the oracle), write trajectory and
// report files.

#include "canonform/config.hpp"
#include "canonform/evolution.hpp"
#include "canonform/oracle.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace canonform::cli {

enum class OutputFormat { csv, json };

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSingularity = 2;

struct RunRequest {
  std::filesystem::path config_path;
  int samples = 200;
  bool compare_oracle = false;
  OutputFormat output_format = OutputFormat::csv;
  /// Empty: trajectory goes to standard output.
  std::filesystem::path output_path;
  /// Empty: `<output_path>.report.json` when output_path is set, else none.
  std::filesystem::path report_path;
  std::optional<double> rel_tol;
  std::optional<double> abs_tol;
};

struct OracleSummary {
  double max_frobenius_error = 0.0;
  double time_of_max = 0.0;
  double oracle_drift = 0.0;
};

struct RunReport {
  int system = 0;
  TrajectoryStatus status = TrajectoryStatus::completed;
  std::optional<double> singularity_time;
  double max_unitarity_error = 0.0;
  double max_schrodinger_residual = 0.0;
  std::optional<double> max_delta1_residual;
  std::optional<double> max_delta2_residual;
  std::optional<OracleSummary> oracle;
  IntegratorStats stats;
  double wall_time_seconds = 0.0;
};

/// %.17g, round-trip exact for doubles. Non-finite values print as "nan"/"inf";
/// negative zero prints as 0.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (x == 0.0) x = 0.0;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One emitted row: column names and values in normative order.
struct SampleTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

template <int N>
void append_unitary_columns(std::vector<std::string>& cols) {
  for (int r = 1; r <= N; ++r)
    for (int c = 1; c <= N; ++c) {
      const std::string base = "u" + std::to_string(r) + std::to_string(c);
      cols.push_back(base + "_re");
      cols.push_back(base + "_im");
    }
}

template <int N>
void append_unitary_values(std::vector<double>& row, const UnitaryMatrix<N>& u) {
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) {
      row.push_back(u(r, c).real());
      row.push_back(u(r, c).imag());
    }
}

inline SampleTable tabulate(const CanonicalRun<TwoLevel>& run) {
  SampleTable tab;
  tab.columns = {"t", "re_z", "im_z", "phi"};
  append_unitary_columns<2>(tab.columns);
  tab.columns.push_back("residual_schrodinger");
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    const auto& s = run.trajectory.states[i];
    std::vector<double> row = {run.trajectory.times[i], s.z.real(), s.z.imag(), s.phi};
    append_unitary_values<2>(row, run.unitaries[i]);
    row.push_back(run.schrodinger_residual[i]);
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

inline SampleTable tabulate(const CanonicalRun<ThreeLevel>& run) {
  SampleTable tab;
  tab.columns = {"t", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z", "phi1", "phi2", "phi3"};
  append_unitary_columns<3>(tab.columns);
  tab.columns.insert(tab.columns.end(),
                     {"residual_schrodinger", "residual_delta1", "residual_delta2"});
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    const auto& s = run.trajectory.states[i];
    std::vector<double> row = {run.trajectory.times[i], s.x.real(), s.x.imag(), s.y.real(),
                               s.y.imag(), s.z.real(), s.z.imag(), s.phi1, s.phi2, s.phi3()};
    append_unitary_values<3>(row, run.unitaries[i]);
    row.push_back(run.schrodinger_residual[i]);
    row.push_back(run.delta1_residual[i]);
    row.push_back(run.delta2_residual[i]);
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

inline void write_csv(std::ostream& os, const SampleTable& tab) {
  for (std::size_t c = 0; c < tab.columns.size(); ++c) os << (c ? "," : "") << tab.columns[c];
  os << '\n';
  for (const auto& row : tab.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

/// {"header": {...}, "samples": [{column: value, ...}, ...]}; non-finite
/// values are written as null.
inline void write_json(std::ostream& os, const SampleTable& tab, const nlohmann::json& header) {
  os << "{\"header\":" << header.dump() << ",\"samples\":[";
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    os << (r ? ",\n" : "\n") << '{';
    for (std::size_t c = 0; c < tab.columns.size(); ++c) {
      const double x = tab.rows[r][c];
      os << (c ? "," : "") << '"' << tab.columns[c] << "\":"
         << (std::isfinite(x) ? format_number(x) : std::string("null"));
    }
    os << '}';
  }
  os << "\n]}\n";
}

inline nlohmann::json trajectory_header(const RunConfig& cfg, const SampleTable& tab) {
  return {{"system", cfg.system()},
          {"settings",
           {{"t_start", cfg.t_start},
            {"t_end", cfg.t_end},
            {"rel_tol", cfg.integrator.rel_tol},
            {"abs_tol", cfg.integrator.abs_tol},
            {"max_step", cfg.integrator.max_step}}},
          {"config", config_to_json(cfg)},
          {"columns", tab.columns}};
}

inline void emit_trajectory(std::ostream& os, const RunConfig& cfg, const SampleTable& tab,
                            OutputFormat format) {
  if (format == OutputFormat::csv)
    write_csv(os, tab);
  else
    write_json(os, tab, trajectory_header(cfg, tab));
}

inline nlohmann::json report_to_json(const RunReport& rep) {
  using nlohmann::json;
  auto num = [](double x) -> json { return std::isfinite(x) ? json(x) : json(nullptr); };
  json j = {{"system", rep.system},
            {"status", to_string(rep.status)},
            {"max_unitarity_error", num(rep.max_unitarity_error)},
            {"max_schrodinger_residual", num(rep.max_schrodinger_residual)},
            {"accepted_steps", rep.stats.accepted_steps},
            {"rejected_steps", rep.stats.rejected_steps},
            {"rhs_evaluations", rep.stats.rhs_evaluations},
            {"wall_time_seconds", rep.wall_time_seconds}};
  if (rep.singularity_time) j["singularity_time"] = *rep.singularity_time;
  if (rep.max_delta1_residual) j["max_delta1_residual"] = num(*rep.max_delta1_residual);
  if (rep.max_delta2_residual) j["max_delta2_residual"] = num(*rep.max_delta2_residual);
  if (rep.oracle)
    j["oracle"] = {{"max_frobenius_error", num(rep.oracle->max_frobenius_error)},
                   {"time_of_max", rep.oracle->time_of_max},
                   {"oracle_drift", num(rep.oracle->oracle_drift)}};
  return j;
}

struct RunOutcome {
  int exit_code = kExitOk;
  std::optional<RunReport> report;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class Ham>
RunReport execute(const Ham& ham, const RunConfig& cfg, const RunRequest& req,
                  std::ostream& trajectory_out) {
  const auto grid = uniform_grid(cfg.t_start, cfg.t_end, req.samples);
  const auto run = solve_canonical(ham, cfg.t_start, cfg.t_end, cfg.integrator, grid);

  RunReport rep;
  rep.system = cfg.system();
  rep.status = run.trajectory.status;
  rep.singularity_time = run.trajectory.singularity_time;
  rep.stats = run.trajectory.stats;
  rep.max_unitarity_error = run.max_unitarity_error;
  rep.max_schrodinger_residual = max_residual(run.schrodinger_residual);
  if constexpr (std::is_same_v<Ham, Hamiltonian3>) {
    rep.max_delta1_residual = max_residual(run.delta1_residual);
    rep.max_delta2_residual = max_residual(run.delta2_residual);
  }

  if (req.compare_oracle) {
    auto oracle = integrate_schrodinger(ham, cfg.t_start, cfg.t_end, cfg.integrator, grid);
    const std::size_t n = std::min(oracle.times.size(), run.trajectory.times.size());
    oracle.times.resize(n);
    oracle.unitaries.resize(n);
    const auto cmp = compare(run, oracle);
    rep.oracle = OracleSummary{cmp.max_frobenius_error, cmp.time_of_max, cmp.oracle_drift};
  }

  emit_trajectory(trajectory_out, cfg, tabulate(run), req.output_format);
  return rep;
}

}  // namespace detail

inline void print_summary(std::ostream& diag, const RunReport& rep) {
  diag << "status: " << to_string(rep.status) << '\n'
       << "max unitarity error (canonical): " << format_number(rep.max_unitarity_error) << '\n'
       << "max Schrodinger residual: " << format_number(rep.max_schrodinger_residual) << '\n';
  if (rep.max_delta1_residual)
    diag << "max Delta1 identity residual: " << format_number(*rep.max_delta1_residual) << '\n'
         << "max Delta2 identity residual: " << format_number(*rep.max_delta2_residual) << '\n';
  if (rep.oracle)
    diag << "oracle max Frobenius error: " << format_number(rep.oracle->max_frobenius_error)
         << " at t = " << format_number(rep.oracle->time_of_max) << '\n'
         << "oracle unitarity drift: " << format_number(rep.oracle->oracle_drift) << '\n';
}

/// Runs one request. Exit codes: 0 completed, 2 chart singularity, 1 on
/// config or IO errors. Diagnostics go to `diag`; `stdout_sink` receives the
/// trajectory when no output path is given.
inline RunOutcome run(const RunRequest& req, std::ostream& diag,
                      std::ostream& stdout_sink = std::cout) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome outcome;
  try {
    if (req.samples < 2) throw std::invalid_argument("--samples must be at least 2");
    RunConfig cfg = parse_config(detail::read_file(req.config_path));
    if (req.rel_tol) cfg.integrator.rel_tol = *req.rel_tol;
    if (req.abs_tol) cfg.integrator.abs_tol = *req.abs_tol;
    cfg.integrator.validate();

    std::ostringstream buffer;
    RunReport rep = std::visit(
        [&](const auto& ham) { return detail::execute(ham, cfg, req, buffer); }, cfg.hamiltonian);
    rep.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (req.output_path.empty()) {
      stdout_sink << buffer.str();
    } else {
      std::ofstream out(req.output_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + req.output_path.string() + "'");
      out << buffer.str();
      if (!out) throw std::runtime_error("write failed for '" + req.output_path.string() + "'");
    }
    std::filesystem::path report_path = req.report_path;
    if (report_path.empty() && !req.output_path.empty())
      report_path = req.output_path.string() + ".report.json";
    if (!report_path.empty()) {
      std::ofstream out(report_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + report_path.string() + "'");
      out << report_to_json(rep).dump(2) << '\n';
    }

    print_summary(diag, rep);
    if (rep.status == TrajectoryStatus::singularity) {
      diag << "error: chart singularity near t=" << std::setprecision(6) << *rep.singularity_time
           << " (a chart coordinate exceeded " << kSingularityThreshold << ")\n";
      outcome.exit_code = kExitSingularity;
    } else if (rep.status == TrajectoryStatus::step_limit) {
      diag << "error: integrator step limit exceeded\n";
      outcome.exit_code = kExitError;
    }
    outcome.report = std::move(rep);
  } catch (const ConfigError& e) {
    diag << "config error (" << req.config_path.string() << "): " << e.what() << '\n';
    outcome.exit_code = kExitError;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    outcome.exit_code = kExitError;
  }
  return outcome;
}

}  // namespace canonform::cli
