// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include "canonform/cli.hpp"
#include "canonform/evolution.hpp"
#include "canonform/oracle.hpp"
#include "support/reference.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace canonform;
namespace ref = canonform::testing;
namespace fs = std::filesystem;

namespace {

const Complex I(0.0, 1.0);
constexpr double kPi = 3.14159265358979323846;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

IntegratorSettings settings_for(double t0, double t1, double rel_tol = 1e-9) {
  auto s = IntegratorSettings::defaults_for(t0, t1);
  s.rel_tol = rel_tol;
  return s;
}

// Scenarios shared by criteria 3, 4, 5 and 7.
struct DrivenScenario {
  Hamiltonian3 ham;
  OracleTrajectory<3> oracle;
};

const std::vector<double>& driven_grid() {
  static const auto g = uniform_grid(0.0, 10.0, 201);
  return g;
}

std::vector<DrivenScenario> make_driven_scenarios() {
  std::mt19937_64 rng(2024);
  std::vector<DrivenScenario> out;
  for (int i = 0; i < 20; ++i) {
    DrivenScenario sc{ref::random_driven_hamiltonian3(rng), {}};
    sc.oracle = integrate_schrodinger(sc.ham, 0.0, 10.0, settings_for(0.0, 10.0), driven_grid());
    out.push_back(std::move(sc));
  }
  return out;
}

template <int N, class Sample>
double three_way(const Sample& sample, const std::vector<double>& grid, bool& completed) {
  const auto ham = ref::constant_hamiltonian(sample);
  const auto h = assemble(sample);
  const auto run = solve_canonical(ham, 0.0, 10.0, settings_for(0.0, 10.0), grid);
  const auto oracle = integrate_schrodinger(ham, 0.0, 10.0, settings_for(0.0, 10.0), grid);
  completed = run.trajectory.status == TrajectoryStatus::completed &&
              run.trajectory.times.size() == grid.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    const auto exact = hermitian_expm(h, run.trajectory.times[i]).matrix();
    const auto& canon = run.unitaries[i].matrix();
    const auto& direct = oracle.unitaries[i];
    worst = std::max({worst, frobenius_distance(canon, direct), frobenius_distance(canon, exact),
                      frobenius_distance(direct, exact)});
  }
  return worst;
}

Verdict ac1_constant_three_way() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const auto grid = uniform_grid(0.0, 10.0, 101);
  double worst2 = 0.0, worst3 = 0.0;
  int incomplete = 0;
  for (int i = 0; i < 50; ++i) {
    bool ok2 = false, ok3 = false;
    worst2 = std::max(worst2, three_way<2>(ref::random_sample2(rng, 2.0), grid, ok2));
    worst3 = std::max(worst3, three_way<3>(ref::random_sample3(rng, 2.0), grid, ok3));
    incomplete += !ok2 + !ok3;
  }
  const double elapsed = seconds_since(t0);
  const bool pass = incomplete == 0 && worst2 <= 1e-6 && worst3 <= 1e-6 && elapsed < 10.0;
  return {pass, fmt("50+50 constant H, max pairwise distance n=2 %.3e, n=3 %.3e (tol 1e-6), "
                    "incomplete runs %d, %.2f s (limit 10 s)",
                    worst2, worst3, incomplete, elapsed)};
}

Verdict ac2_tangent_closed_form() {
  Hamiltonian2 ham{DriveSignal::zero(), DriveSignal::constant(1.0)};
  const auto grid = uniform_grid(0.0, 1.4, 141);
  const auto run = solve_canonical(ham, 0.0, 1.4, settings_for(0.0, 1.4), grid);
  double worst = 0.0, worst_phi = 0.0;
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    const double t = run.trajectory.times[i];
    worst = std::max(worst, std::abs(run.trajectory.states[i].z + I * std::tan(t)));
    worst_phi = std::max(worst_phi, std::abs(run.trajectory.states[i].phi));
  }
  const bool completed = run.trajectory.status == TrajectoryStatus::completed &&
                         run.trajectory.times.size() == grid.size();

  const auto blow = solve_canonical(ham, 0.0, 2.0, settings_for(0.0, 2.0), uniform_grid(0.0, 2.0, 201));
  const bool singular = blow.trajectory.status == TrajectoryStatus::singularity;
  const double t_sing = singular ? *blow.trajectory.singularity_time : NAN;
  const double miss = std::abs(t_sing - kPi / 2);
  const bool pass = completed && worst <= 1e-8 && worst_phi <= 1e-8 && singular && miss <= 0.01;
  return {pass, fmt("max |z + i tan t| on [0,1.4] %.3e, max |phi| %.3e (tol 1e-8); "
                    "singularity reported at t=%.6f, |t - pi/2| = %.2e (tol 0.01)",
                    worst, worst_phi, t_sing, miss)};
}

struct DrivenResults {
  double max_error = 0.0;
  double max_unitarity = 0.0;
  double min_drift = INFINITY;
  double max_delta_residual = 0.0;
  int incomplete = 0;
  double seconds = 0.0;
};

DrivenResults run_driven(const std::vector<DrivenScenario>& scenarios, double oracle_seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  DrivenResults r;
  for (const auto& sc : scenarios) {
    const auto run = solve_canonical(sc.ham, 0.0, 10.0, settings_for(0.0, 10.0), driven_grid());
    if (run.trajectory.status != TrajectoryStatus::completed) {
      ++r.incomplete;
      continue;
    }
    r.max_error = std::max(r.max_error, compare(run, sc.oracle).max_frobenius_error);
    r.max_unitarity = std::max(r.max_unitarity, run.max_unitarity_error);
    r.min_drift = std::min(r.min_drift, sc.oracle.drift);
    r.max_delta_residual = std::max({r.max_delta_residual, max_residual(run.delta1_residual),
                                     max_residual(run.delta2_residual)});
  }
  r.seconds = seconds_since(t0) + oracle_seconds;
  return r;
}

Verdict ac3_driven_equivalence(const DrivenResults& r) {
  const bool pass = r.incomplete == 0 && r.max_error <= 1e-6 && r.seconds < 30.0;
  return {pass, fmt("20 driven n=3 scenarios on [0,10], max Frobenius error vs oracle %.3e (tol 1e-6), "
                    "incomplete runs %d, %.2f s including oracle (limit 30 s)",
                    r.max_error, r.incomplete, r.seconds)};
}

// The long run integrates one of the pulse scenarios over [0, 100] through
// the CLI so the report file itself carries both numbers.
Verdict ac4_structural_unitarity(const DrivenResults& r, const std::vector<DrivenScenario>& scenarios) {
  const fs::path dir = fs::temp_directory_path() / "canonform_acceptance_ac4";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RunConfig cfg{scenarios.front().ham, 0.0, 100.0, IntegratorSettings::defaults_for(0.0, 100.0)};
  std::ofstream(dir / "long.json") << config_to_json(cfg).dump(2);

  cli::RunRequest req;
  req.config_path = dir / "long.json";
  req.compare_oracle = true;
  req.samples = 1001;
  req.output_path = dir / "long.csv";
  std::ostringstream diag;
  const int code = cli::run(req, diag).exit_code;

  double canon = NAN, drift = NAN;
  bool fields = false;
  try {
    std::ifstream in(dir / "long.csv.report.json");
    const auto rep = nlohmann::json::parse(in);
    canon = rep.at("max_unitarity_error").get<double>();
    drift = rep.at("oracle").at("oracle_drift").get<double>();
    fields = true;
  } catch (const std::exception&) {
  }
  fs::remove_all(dir);

  const bool pass = r.incomplete == 0 && r.max_unitarity <= 1e-11 && r.min_drift > r.max_unitarity &&
                    code == 0 && fields && canon <= 1e-11 && drift > canon;
  return {pass, fmt("[0,10] x20: canonical max |U'U - I| %.3e (tol 1e-11), smallest oracle drift %.3e; "
                    "[0,100] report: canonical %.3e, oracle drift %.3e",
                    r.max_unitarity, r.min_drift, canon, drift)};
}

Verdict ac5_delta_identities(const DrivenResults& r) {
  const bool pass = r.incomplete == 0 && r.max_delta_residual <= 1e-5;
  return {pass, fmt("max |FD d(ln Delta_k)/dt - identity| over 20 scenarios %.3e (tol 1e-5)",
                    r.max_delta_residual)};
}

struct EmbeddingGap {
  double x = 0.0, phi = 0.0, yz = 0.0;
  int incomplete = 0;
};

// The criterion fixes no integration tolerance. The two systems take
// different adaptive steps (3 against 8 error-norm components), so their
// gap is integrator noise that scales with rel_tol; it is measured at 1e-10
// and the 1e-9 figure is printed alongside.
EmbeddingGap embedding_gap(double rel_tol) {
  std::mt19937_64 rng(606);
  const auto grid = uniform_grid(0.0, 10.0, 201);
  EmbeddingGap gap;
  for (int i = 0; i < 10; ++i) {
    // Cosine plus Gaussian diagonal drive, built twice so that h2 = −h1 exactly.
    const double a = ref::uniform(rng, -1, 1), w = ref::uniform(rng, 0, 3), ph = ref::uniform(rng, 0, 2 * kPi);
    const double b = ref::uniform(rng, -1, 1), c = ref::uniform(rng, 0, 10), width = ref::uniform(rng, 0.5, 3);
    auto diagonal = [&](double sign) {
      return DriveSignal::sum({DriveSignal::cosine(sign * a, w, ph), DriveSignal::gaussian(sign * b, c, width)});
    };
    const auto v = ref::random_drive(rng, false);
    Hamiltonian2 two{diagonal(1.0), v};
    Hamiltonian3 three;
    three.h1 = diagonal(1.0);
    three.h2 = diagonal(-1.0);
    three.v1 = v;
    const auto r2 = solve_canonical(two, 0.0, 10.0, settings_for(0.0, 10.0, rel_tol), grid);
    const auto r3 = solve_canonical(three, 0.0, 10.0, settings_for(0.0, 10.0, rel_tol), grid);
    if (r2.trajectory.status != TrajectoryStatus::completed ||
        r3.trajectory.status != TrajectoryStatus::completed) {
      ++gap.incomplete;
      continue;
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto& p = r2.trajectory.states[k];
      const auto& q = r3.trajectory.states[k];
      gap.x = std::max(gap.x, std::abs(p.z - q.x));
      gap.phi = std::max(gap.phi, std::abs(p.phi - q.phi1));
      gap.yz = std::max({gap.yz, std::abs(q.y), std::abs(q.z)});
    }
  }
  return gap;
}

Verdict ac6_block_embedding() {
  const auto g = embedding_gap(1e-10);
  const auto loose = embedding_gap(1e-9);
  const bool pass = g.incomplete == 0 && g.x <= 1e-8 && g.phi <= 1e-8 && g.yz <= 1e-10;
  return {pass, fmt("10 driven embeddings at rel_tol 1e-10: max |x - z| %.3e, max |phi1 - phi| %.3e "
                    "(tol 1e-8), max |y|,|z| %.3e (tol 1e-10); at rel_tol 1e-9 the gaps are %.3e, %.3e",
                    g.x, g.phi, g.yz, loose.x, loose.phi)};
}

Verdict ac7_mutation_sensitivity(const std::vector<DrivenScenario>& scenarios) {
  int detected = 0;
  std::string missed;
  double weakest = INFINITY;
  for (std::size_t t = 0; t < kCanonicalTermCount; ++t) {
    const auto signs = TermSigns::flipped(static_cast<CanonicalTerm>(t));
    auto mutated = [&](const ChartState3& s, const HamiltonianSample3& h) {
      const auto d = rhs3(s, h, signs);
      return ChartState3{d.dx, d.dy, d.dz, d.dphi1, d.dphi2};
    };
    double best = 0.0;
    for (const auto& sc : scenarios) {
      const auto run = solve_canonical<ThreeLevel>(sc.ham, 0.0, 10.0, settings_for(0.0, 10.0),
                                                   driven_grid(), mutated);
      if (run.trajectory.status != TrajectoryStatus::completed) {
        best = INFINITY;
        break;
      }
      best = std::max(best, compare(run, sc.oracle).max_frobenius_error);
      if (best >= 1e-2) break;
    }
    weakest = std::min(weakest, best);
    if (best >= 1e-2)
      ++detected;
    else
      missed += " " + std::to_string(t);
  }
  const bool pass = detected == static_cast<int>(kCanonicalTermCount);
  return {pass, fmt("%d/%zu single-term sign flips push the oracle error >= 1e-2 (weakest %.3e)%s%s",
                    detected, kCanonicalTermCount, weakest, missed.empty() ? "" : "; missed terms:",
                    missed.c_str())};
}

Verdict ac8_determinism_and_parity() {
  const fs::path samples = CANONFORM_SAMPLES_DIR;
  bool identical = true, parity = true;
  std::size_t compared = 0;
  for (const char* name : {"rabi_detuned.json", "lambda_pulses.json"}) {
    cli::RunRequest req;
    req.config_path = samples / name;
    std::ostringstream diag, csv1, csv2, json1, json2;
    cli::run(req, diag, csv1);
    cli::run(req, diag, csv2);
    req.output_format = cli::OutputFormat::json;
    cli::run(req, diag, json1);
    cli::run(req, diag, json2);
    identical = identical && csv1.str() == csv2.str() && json1.str() == json2.str() && !csv1.str().empty();

    std::istringstream in(csv1.str());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    {
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const auto doc = nlohmann::json::parse(json1.str());
    std::size_t row = 0;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      for (std::size_t c = 0; std::getline(ss, cell, ','); ++c) {
        const auto& j = doc["samples"][row][cols[c]];
        const double x = std::strtod(cell.c_str(), nullptr);
        // Both carry 17 significant digits, so equal text means equal doubles.
        const bool same = j.is_null() ? std::isnan(x) : cli::format_number(j.get<double>()) == cell;
        parity = parity && same;
        ++compared;
      }
      ++row;
    }
    parity = parity && row == doc["samples"].size();
  }
  return {identical && parity, fmt("repeat runs byte-identical: %s; CSV/JSON parity over %zu values: %s",
                                   identical ? "yes" : "no", compared, parity ? "yes" : "no")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* title, const Verdict& v) {
    std::printf("[%s] %s %s: %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };
  auto guarded = [](const std::function<Verdict()>& f) -> Verdict {
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report("AC1", "constant-Hamiltonian three-way agreement", guarded(ac1_constant_three_way));
  report("AC2", "closed-form SU(2) trajectory and blow-up", guarded(ac2_tangent_closed_form));

  std::vector<DrivenScenario> scenarios;
  DrivenResults driven;
  const auto prepared = guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    scenarios = make_driven_scenarios();
    driven = run_driven(scenarios, seconds_since(t0));
    return Verdict{true, ""};
  });
  if (!prepared.pass) {
    for (const char* id : {"AC3", "AC4", "AC5", "AC7"}) report(id, "driven scenarios", prepared);
  } else {
    report("AC3", "time-dependent oracle equivalence", guarded([&] { return ac3_driven_equivalence(driven); }));
    report("AC4", "structural unitarity", guarded([&] { return ac4_structural_unitarity(driven, scenarios); }));
    report("AC5", "Delta-identity residuals", guarded([&] { return ac5_delta_identities(driven); }));
  }
  report("AC6", "SU(2)-in-SU(3) block embedding", guarded(ac6_block_embedding));
  if (prepared.pass)
    report("AC7", "mutation sensitivity", guarded([&] { return ac7_mutation_sensitivity(scenarios); }));
  report("AC8", "determinism and CSV/JSON parity", guarded(ac8_determinism_and_parity));

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
