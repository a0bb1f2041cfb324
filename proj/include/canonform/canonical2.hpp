#pragma once

// Two-level canonical form. The evolution operator is written as
//
//   U = (1 + |z|²)^(-1/2) [[1, −z̄], [z, 1]] · diag(e^{iφ}, e^{−iφ})
//
// and iU̇ = HU with H = [[h, v̄], [v, −h]] reduces to
//
//   ż = i(v̄ z² + 2h z − v)           (Riccati)
//   φ̇ = −(v z̄ + v̄ z + 2h) / 2       (phase)

#include "canonform/algebra.hpp"
#include "canonform/drives.hpp"
#include "canonform/integrate.hpp"

#include <cmath>
#include <span>
#include <string>

namespace canonform {

/// Largest chart-coordinate magnitude accepted before reporting a singularity.
inline constexpr double kSingularityThreshold = 1e6;

struct ChartState2 {
  Complex z = 0.0;
  double phi = 0.0;
};

struct ChartDerivative2 {
  Complex dz = 0.0;
  double dphi = 0.0;
};

inline bool is_valid(const ChartState2& s) {
  return std::isfinite(s.z.real()) && std::isfinite(s.z.imag()) && std::isfinite(s.phi) &&
         std::abs(s.z) < kSingularityThreshold;
}

inline ChartState2 initial_state2() { return {}; }

/// |Im(v z̄ + v̄ z + 2h)| of the phase rate before its real part is taken.
inline double phase_rate_imag_residual2(const ChartState2& s, double h, Complex v) {
  return std::abs((v * std::conj(s.z) + std::conj(v) * s.z + 2.0 * h).imag());
}

inline ChartDerivative2 rhs2(const ChartState2& s, double h, Complex v) {
  const Complex z = s.z;
  const Complex dz = Complex(0.0, 1.0) * (std::conj(v) * z * z + 2.0 * h * z - v);
  const Complex phase = v * std::conj(z) + std::conj(v) * z + 2.0 * h;
  if (std::abs(phase.imag()) > 1e-13 * (1.0 + std::abs(v) * std::abs(z) + std::abs(h)))
    throw InvariantViolation("phase rate has a non-negligible imaginary part");
  return {dz, -0.5 * phase.real()};
}

inline ChartDerivative2 rhs2(const ChartState2& s, const HamiltonianSample2& ham) {
  return rhs2(s, ham.h, ham.v);
}

inline UnitaryMatrix<2> reconstruct_u2(const ChartState2& s) {
  const Complex z = s.z;
  const double norm = 1.0 / std::sqrt(1.0 + std::norm(z));
  const Complex e = std::polar(1.0, s.phi);
  ComplexMatrix<2> u;
  u << norm * e, -norm * std::conj(z) * std::conj(e),
       norm * z * e, norm * std::conj(e);
  return UnitaryMatrix<2>::make(u);
}

template <>
struct StateTraits<ChartState2> {
  static constexpr std::size_t size = 3;
  static constexpr double singularity_threshold = kSingularityThreshold;
  static void pack(const ChartState2& s, std::span<double, size> out) {
    out[0] = s.z.real();
    out[1] = s.z.imag();
    out[2] = s.phi;
  }
  static ChartState2 unpack(std::span<const double, size> in) {
    return {Complex(in[0], in[1]), in[2]};
  }
  static double chart_magnitude(const ChartState2& s) { return std::abs(s.z); }
};

}  // namespace canonform
