#pragma once

// Reference solutions: direct integration of iU̇ = HU on all 2n² real
// components of U, and Frobenius comparison of trajectories.

#include "canonform/algebra.hpp"
#include "canonform/drives.hpp"
#include "canonform/integrate.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace canonform {

template <int N, int Options>
struct StateTraits<Eigen::Matrix<Complex, N, N, Options, N, N>> {
  static constexpr std::size_t size = 2 * N * N;
  // The matrix flow has no chart.
  static constexpr double singularity_threshold = std::numeric_limits<double>::infinity();
  static void pack(const ComplexMatrix<N>& m, std::span<double, size> out) {
    std::size_t k = 0;
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) {
        out[k++] = m(r, c).real();
        out[k++] = m(r, c).imag();
      }
  }
  static ComplexMatrix<N> unpack(std::span<const double, size> in) {
    ComplexMatrix<N> m;
    std::size_t k = 0;
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) {
        m(r, c) = Complex(in[k], in[k + 1]);
        k += 2;
      }
    return m;
  }
  static double chart_magnitude(const ComplexMatrix<N>&) { return 0.0; }
};

template <int N>
struct OracleTrajectory {
  std::vector<double> times;
  std::vector<ComplexMatrix<N>> unitaries;
  /// max over samples of ‖U†U − I‖_F; measured, never corrected.
  double drift = 0.0;
  TrajectoryStatus status = TrajectoryStatus::completed;
  IntegratorStats stats;
};

struct ComparisonReport {
  double max_frobenius_error = 0.0;
  double time_of_max = 0.0;
  std::vector<double> errors;
  double oracle_drift = 0.0;
};

class SampleGridMismatch : public std::invalid_argument {
public:
  SampleGridMismatch() : std::invalid_argument("trajectories are sampled on different grids") {}
};

namespace detail {

template <int N, class Ham>
OracleTrajectory<N> integrate_matrix_flow(const Ham& ham, double t_start, double t_end,
                                          const IntegratorSettings& settings,
                                          std::span<const double> sample_times) {
  const Complex minus_i(0.0, -1.0);
  auto rhs = [&](double t, const ComplexMatrix<N>& u) -> ComplexMatrix<N> {
    return minus_i * (assemble(ham.sample(t)).matrix() * u);
  };
  auto traj = integrate(rhs, identity<N>(), t_start, t_end, settings, sample_times);
  OracleTrajectory<N> out;
  out.times = std::move(traj.times);
  out.unitaries = std::move(traj.states);
  out.status = traj.status;
  out.stats = traj.stats;
  for (const auto& u : out.unitaries) out.drift = std::max(out.drift, unitarity_error(u));
  return out;
}

}  // namespace detail

inline OracleTrajectory<2> integrate_schrodinger(const Hamiltonian2& ham, double t_start,
                                                 double t_end, const IntegratorSettings& settings,
                                                 std::span<const double> sample_times) {
  return detail::integrate_matrix_flow<2>(ham, t_start, t_end, settings, sample_times);
}

inline OracleTrajectory<3> integrate_schrodinger(const Hamiltonian3& ham, double t_start,
                                                 double t_end, const IntegratorSettings& settings,
                                                 std::span<const double> sample_times) {
  return detail::integrate_matrix_flow<3>(ham, t_start, t_end, settings, sample_times);
}

/// Per-sample ‖A(t) − B(t)‖_F of two trajectories on identical grids.
template <int N>
ComparisonReport compare(std::span<const double> times_a,
                         std::span<const ComplexMatrix<N>> unitaries_a,
                         const OracleTrajectory<N>& reference) {
  if (times_a.size() != reference.times.size() ||
      !std::equal(times_a.begin(), times_a.end(), reference.times.begin()))
    throw SampleGridMismatch();
  ComparisonReport rep;
  rep.oracle_drift = reference.drift;
  rep.errors.reserve(times_a.size());
  for (std::size_t i = 0; i < times_a.size(); ++i) {
    const double e = frobenius_distance(unitaries_a[i], reference.unitaries[i]);
    rep.errors.push_back(e);
    if (i == 0 || e > rep.max_frobenius_error) {
      rep.max_frobenius_error = e;
      rep.time_of_max = times_a[i];
    }
  }
  return rep;
}

}  // namespace canonform
