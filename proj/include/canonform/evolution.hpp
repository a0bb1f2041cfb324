#pragma once

// Canonical-form solves: integrate the chart ODEs, rebuild U(t) at every
// sample, and measure how well the rebuilt U satisfies iU̇ = HU by finite
// differences of the dense output.

#include "canonform/algebra.hpp"
#include "canonform/canonical2.hpp"
#include "canonform/canonical3.hpp"
#include "canonform/drives.hpp"
#include "canonform/integrate.hpp"
#include "canonform/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace canonform {

struct TwoLevel {
  static constexpr int dim = 2;
  using State = ChartState2;
  using Hamiltonian = Hamiltonian2;
  using Sample = HamiltonianSample2;

  static State initial() { return initial_state2(); }
  static State derivative(const State& s, const Sample& h) {
    const auto d = rhs2(s, h);
    return {d.dz, d.dphi};
  }
  static UnitaryMatrix<2> reconstruct(const State& s) { return reconstruct_u2(s); }
};

struct ThreeLevel {
  static constexpr int dim = 3;
  using State = ChartState3;
  using Hamiltonian = Hamiltonian3;
  using Sample = HamiltonianSample3;

  static State initial() { return initial_state3(); }
  static State derivative(const State& s, const Sample& h) {
    const auto d = rhs3(s, h);
    return {d.dx, d.dy, d.dz, d.dphi1, d.dphi2};
  }
  static UnitaryMatrix<3> reconstruct(const State& s) { return reconstruct_u3(s); }
};

template <class Ham>
struct SystemOf;
template <>
struct SystemOf<Hamiltonian2> {
  using type = TwoLevel;
};
template <>
struct SystemOf<Hamiltonian3> {
  using type = ThreeLevel;
};

template <class System>
struct CanonicalRun {
  static constexpr int dim = System::dim;

  /// Chart states on output_grid(t_start, t_end, sample_times).
  Trajectory<typename System::State> trajectory;
  std::vector<UnitaryMatrix<dim>> unitaries;
  /// ‖i·dU/dt − H U‖_F per sample, dU/dt by finite differences.
  std::vector<double> schrodinger_residual;
  /// |FD d(ln Δₖ)/dt − closed-form rate| per sample; three-level runs only.
  std::vector<double> delta1_residual;
  std::vector<double> delta2_residual;
  double max_unitarity_error = 0.0;
  double fd_step = 0.0;

  std::vector<ComplexMatrix<dim>> matrices() const {
    std::vector<ComplexMatrix<dim>> out;
    out.reserve(unitaries.size());
    for (const auto& u : unitaries) out.push_back(u.matrix());
    return out;
  }
};

struct ResidualOptions {
  /// Base finite-difference spacing; 0 selects min(1e-3, 1e-4·(t_end − t_start)).
  double fd_step = 0.0;
};

namespace detail {

enum class Stencil { central, backward, forward };

// Five-point first-derivative weights over offsets (in units of δ).
struct StencilWeights {
  std::array<int, 5> offsets;
  std::array<double, 5> weights;  // divide by 12δ
};

inline StencilWeights stencil_weights(Stencil s) {
  switch (s) {
    case Stencil::central: return {{-2, -1, 0, 1, 2}, {1, -8, 0, 8, -1}};
    case Stencil::forward: return {{0, 1, 2, 3, 4}, {-25, 48, -36, 16, -3}};
    case Stencil::backward: return {{0, -1, -2, -3, -4}, {25, -48, 36, -16, 3}};
  }
  return {};
}

inline double max_finite(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v)
    if (std::isfinite(x)) m = std::max(m, x);
  return m;
}

template <class State>
State negated(const State& s) {
  using Traits = StateTraits<State>;
  std::array<double, Traits::size> v{};
  Traits::pack(s, std::span<double, Traits::size>(v));
  for (double& x : v) x = -x;
  return Traits::unpack(std::span<const double, Traits::size>(v));
}

// States at t + k·δ, k = 1..count, following the flow through `state` at t
// forwards (direction +1) or backwards (−1). Step sizes are a small fraction
// of δ so the stencil carries no interpolation error; empty if the local
// flow leaves the chart.
template <class State, class Rhs>
std::vector<State> local_flow(const Rhs& rhs, const State& state, double t, double delta, int count,
                              int direction) {
  IntegratorSettings s;
  s.rel_tol = 1e-13;
  s.abs_tol = 1e-15;
  s.max_step = delta / 4;
  s.initial_step = delta / 16;
  std::vector<double> offsets;
  for (int k = 1; k <= count; ++k) offsets.push_back(k * delta);
  const double span = count * delta;
  const auto traj =
      direction > 0
          ? integrate([&](double tau, const State& x) { return rhs(t + tau, x); }, state, 0.0, span, s,
                      offsets)
          : integrate([&](double tau, const State& x) { return negated(rhs(t - tau, x)); }, state, 0.0,
                      span, s, offsets);
  if (traj.status != TrajectoryStatus::completed) return {};
  return {traj.states.begin() + 1, traj.states.end()};
}

}  // namespace detail

inline double max_residual(const std::vector<double>& v) { return detail::max_finite(v); }

/// Integrates the chart equations given by `derivative(state, sample)`.
///
/// Residual diagnostics differentiate along the flow through each sampled
/// state: a five-point stencil is built by short local integrations from that
/// state (central where it fits inside the window, one-sided near the ends).
/// Its spacing is δ/(1 + largest chart coordinate), since near a chart
/// singularity the coordinates vary on a time scale of order 1/|coordinate|.
template <class System, class Derivative>
CanonicalRun<System> solve_canonical(const typename System::Hamiltonian& ham, double t_start,
                                     double t_end, const IntegratorSettings& settings,
                                     std::span<const double> sample_times, Derivative&& derivative,
                                     ResidualOptions opts = {}) {
  using State = typename System::State;
  constexpr int N = System::dim;

  const double span = t_end - t_start;
  const double delta = opts.fd_step > 0.0 ? opts.fd_step : std::min(1e-3, 1e-4 * span);

  auto rhs = [&](double t, const State& s) { return derivative(s, ham.sample(t)); };
  auto traj = integrate(rhs, System::initial(), t_start, t_end, settings, sample_times);

  CanonicalRun<System> run;
  run.fd_step = delta;
  run.trajectory = std::move(traj);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    const double t = run.trajectory.times[i];
    const State& state = run.trajectory.states[i];
    const double d = delta / (1.0 + StateTraits<State>::chart_magnitude(state));
    const auto u = System::reconstruct(state);
    run.unitaries.push_back(u);
    run.max_unitarity_error = std::max(run.max_unitarity_error, unitarity_error(u.matrix()));

    // Stencil states indexed by offset + 4.
    std::array<std::optional<State>, 9> at;
    at[4] = state;
    auto fill = [&](int count, int direction) {
      const auto states = detail::local_flow(rhs, state, t, d, count, direction);
      for (std::size_t k = 0; k < states.size(); ++k) at[4 + direction * static_cast<int>(k + 1)] = states[k];
      return !states.empty();
    };
    std::optional<detail::StencilWeights> sw;
    if (t - 2 * d >= t_start && t + 2 * d <= t_end && fill(2, -1) && fill(2, +1))
      sw = detail::stencil_weights(detail::Stencil::central);
    else if (t - 4 * d >= t_start && fill(4, -1))
      sw = detail::stencil_weights(detail::Stencil::backward);
    else if (t + 4 * d <= t_end && fill(4, +1))
      sw = detail::stencil_weights(detail::Stencil::forward);

    const auto sample = ham.sample(t);
    if (!sw) {
      run.schrodinger_residual.push_back(nan);
      if constexpr (N == 3) {
        run.delta1_residual.push_back(nan);
        run.delta2_residual.push_back(nan);
      }
      continue;
    }

    ComplexMatrix<N> du = ComplexMatrix<N>::Zero();
    for (int j = 0; j < 5; ++j)
      if (sw->weights[j] != 0.0)
        du += sw->weights[j] * System::reconstruct(*at[4 + sw->offsets[j]]).matrix();
    du /= 12.0 * d;
    const Complex i_unit(0.0, 1.0);
    run.schrodinger_residual.push_back((i_unit * du - assemble(sample).matrix() * u.matrix()).norm());

    if constexpr (N == 3) {
      double dl1 = 0.0, dl2 = 0.0;
      for (int j = 0; j < 5; ++j) {
        const auto& sj = *at[4 + sw->offsets[j]];
        dl1 += sw->weights[j] * std::log(delta1(sj));
        dl2 += sw->weights[j] * std::log(delta2(sj));
      }
      dl1 /= 12.0 * d;
      dl2 /= 12.0 * d;
      const auto [r1, r2] = log_delta_rates(state, sample);
      run.delta1_residual.push_back(std::abs(dl1 - r1));
      run.delta2_residual.push_back(std::abs(dl2 - r2));
    }
  }
  return run;
}

template <class Ham>
CanonicalRun<typename SystemOf<Ham>::type> solve_canonical(const Ham& ham, double t_start,
                                                           double t_end,
                                                           const IntegratorSettings& settings,
                                                           std::span<const double> sample_times,
                                                           ResidualOptions opts = {}) {
  using System = typename SystemOf<Ham>::type;
  return solve_canonical<System>(
      ham, t_start, t_end, settings, sample_times,
      [](const typename System::State& s, const typename System::Sample& h) {
        return System::derivative(s, h);
      },
      opts);
}

template <class System>
ComparisonReport compare(const CanonicalRun<System>& run,
                         const OracleTrajectory<System::dim>& reference) {
  const auto mats = run.matrices();
  return compare<System::dim>(std::span<const double>(run.trajectory.times),
                              std::span<const ComplexMatrix<System::dim>>(mats), reference);
}

/// Uniform grid of `count` points covering [t_start, t_end].
inline std::vector<double> uniform_grid(double t_start, double t_end, int count) {
  std::vector<double> ts;
  ts.reserve(count);
  for (int i = 0; i < count; ++i)
    ts.push_back(i + 1 == count ? t_end : t_start + (t_end - t_start) * i / (count - 1));
  return ts;
}

struct ConvergenceRow {
  double rel_tol;
  double final_error;
};

/// Final-time ‖U_canonical − U_reference‖_F for each relative tolerance.
template <class Ham>
std::vector<ConvergenceRow> convergence_probe(
    const Ham& ham, double t_start, double t_end, std::span<const double> tolerances,
    const std::function<ComplexMatrix<SystemOf<Ham>::type::dim>(double)>& reference,
    IntegratorSettings base) {
  std::vector<ConvergenceRow> table;
  const double ts[] = {t_end};
  for (double tol : tolerances) {
    IntegratorSettings s = base;
    s.rel_tol = tol;
    const auto run = solve_canonical(ham, t_start, t_end, s, ts);
    require_completed(run.trajectory);
    table.push_back({tol, frobenius_distance(run.unitaries.back().matrix(), reference(t_end))});
  }
  return table;
}

}  // namespace canonform
