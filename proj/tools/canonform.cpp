// canonform: integrate the canonical-form equations for a two- or three-level
// Hamiltonian described by a JSON config.
//
//   canonform run CONFIG [CONFIG...] [--samples N] [--compare-oracle]
//                 [--format csv|json] [--output PATH] [--report PATH]
//                 [--rel-tol X] [--abs-tol X]
//
// With several configs the runs are spread over worker threads and --output
// names a directory that receives <config stem>.<format> per config.

#include "canonform/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using canonform::cli::OutputFormat;
using canonform::cli::RunRequest;

int run_sweep(const std::vector<std::string>& configs, const RunRequest& base) {
  namespace fs = std::filesystem;
  const fs::path dir = base.output_path.empty() ? fs::current_path() : base.output_path;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << dir.string() << "'\n";
    return canonform::cli::kExitError;
  }
  const char* ext = base.output_format == OutputFormat::csv ? ".csv" : ".json";

  std::vector<std::ostringstream> diags(configs.size());
  std::vector<int> codes(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      RunRequest req = base;
      req.config_path = configs[i];
      req.output_path = dir / (fs::path(configs[i]).stem().string() + ext);
      req.report_path.clear();
      codes[i] = canonform::cli::run(req, diags[i]).exit_code;
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(configs.size(), std::max(1u, std::thread::hardware_concurrency()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  int worst = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cerr << "== " << configs[i] << '\n' << diags[i].str();
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonical-form evolution operators for two- and three-level Hamiltonians"};
  app.require_subcommand(1);

  RunRequest req;
  std::vector<std::string> configs;
  std::string format = "csv";
  std::string output;
  std::string report;
  double rel_tol = 0.0;
  double abs_tol = 0.0;

  auto* run = app.add_subcommand("run", "Integrate a Hamiltonian config");
  run->add_option("config", configs, "Config file(s)")->required()->check(CLI::ExistingFile);
  run->add_option("--samples", req.samples, "Number of uniform output samples")
      ->check(CLI::Range(2, 100'000'000));
  run->add_flag("--compare-oracle", req.compare_oracle,
                "Also integrate iU' = HU directly and compare");
  run->add_option("--format", format, "Trajectory format")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--output", output, "Trajectory file (directory when sweeping)");
  run->add_option("--report", report, "Report file (default: <output>.report.json)");
  auto* rel_opt = run->add_option("--rel-tol", rel_tol, "Relative tolerance (overrides config)")
                      ->check(CLI::PositiveNumber);
  auto* abs_opt = run->add_option("--abs-tol", abs_tol, "Absolute tolerance (overrides config)")
                      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : canonform::cli::kExitError;
  }

  req.output_format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  req.output_path = output;
  req.report_path = report;
  if (*rel_opt) req.rel_tol = rel_tol;
  if (*abs_opt) req.abs_tol = abs_tol;

  if (configs.size() > 1) return run_sweep(configs, req);
  req.config_path = configs.front();
  return canonform::cli::run(req, std::cerr).exit_code;
}
