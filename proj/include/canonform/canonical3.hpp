#pragma once

// Three-level canonical form on the flag manifold SU(3)/U(1)².
//
// U = V · D_Δ · U₂ with chart coordinates (x, y, z), phases (φ₁, φ₂) and
//
//   Δ₁ = 1 + |x|² + |y|²,   Δ₂ = 1 + |z|² + |xz − y|²
//
//   V   = [[1, −(x̄ + ȳz)/Δ₁,            (x̄z̄ − ȳ)/Δ₂],
//          [x, 1 − x(x̄ + ȳz)/Δ₁,         −z̄/Δ₂     ],
//          [y, z − y(x̄ + ȳz)/Δ₁,          1/Δ₂      ]]
//   D_Δ = diag(Δ₁^(-1/2), (Δ₁/Δ₂)^(1/2), Δ₂^(1/2))
//   U₂  = diag(e^{iφ₁}, e^{iφ₂}, e^{−i(φ₁+φ₂)})
//
// The flow iU̇ = HU becomes three coupled Riccati equations
//
//   iẋ = v₁ + (h₂−h₁)x − v̄₁x² + v̄₃y − v̄₂xy
//   iẏ = v₂ + (h₃−h₁)y − v̄₂y² + v₃x − v̄₁xy
//   iż = v₃ + (h₃−h₂)z − v̄₃z² + (xz − y)(v̄₁ + v̄₂z)
//
// and two real phase equations
//
//   φ̇₁ = −[(h₁ + v̄₁x + v̄₂y) + (h₁ + v₁x̄ + v₂ȳ)] / 2
//   φ̇₂ =  [(−h₂ − v̄₃z + v̄₁x + v̄₂xz) + (−h₂ − v₃z̄ + v₁x̄ + v₂x̄z̄)] / 2

#include "canonform/algebra.hpp"
#include "canonform/canonical2.hpp"
#include "canonform/drives.hpp"
#include "canonform/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <utility>

namespace canonform {

struct ChartState3 {
  Complex x = 0.0;
  Complex y = 0.0;
  Complex z = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;

  /// φ₃ = −(φ₁ + φ₂); derived, never integrated.
  double phi3() const { return -(phi1 + phi2); }
};

struct ChartDerivative3 {
  Complex dx = 0.0;
  Complex dy = 0.0;
  Complex dz = 0.0;
  double dphi1 = 0.0;
  double dphi2 = 0.0;
};

inline bool is_valid(const ChartState3& s) {
  auto finite = [](Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
  return finite(s.x) && finite(s.y) && finite(s.z) && std::isfinite(s.phi1) &&
         std::isfinite(s.phi2) &&
         std::max({std::abs(s.x), std::abs(s.y), std::abs(s.z)}) < kSingularityThreshold;
}

inline ChartState3 initial_state3() { return {}; }

inline double delta1(const ChartState3& s) { return 1.0 + std::norm(s.x) + std::norm(s.y); }

inline double delta2(const ChartState3& s) {
  return 1.0 + std::norm(s.z) + std::norm(s.x * s.z - s.y);
}

/// Individual terms of the five canonical equations, in the order written.
/// Each phase equation is a sum of a bracket and its conjugate; both copies
/// are listed.
enum class CanonicalTerm : std::size_t {
  x_v1, x_h2_minus_h1, x_v1bar_xx, x_v3bar_y, x_v2bar_xy,
  y_v2, y_h3_minus_h1, y_v2bar_yy, y_v3_x, y_v1bar_xy,
  z_v3, z_h3_minus_h2, z_v3bar_zz, z_w_v1bar, z_w_v2bar_z,
  phi1_h1, phi1_v1bar_x, phi1_v2bar_y, phi1_h1_conj, phi1_v1_xbar, phi1_v2_ybar,
  phi2_h2, phi2_v3bar_z, phi2_v1bar_x, phi2_v2bar_xz,
  phi2_h2_conj, phi2_v3_zbar, phi2_v1_xbar, phi2_v2_xbar_zbar,
  count_
};

inline constexpr std::size_t kCanonicalTermCount = static_cast<std::size_t>(CanonicalTerm::count_);

/// Sign policy of the canonical equations: every term enters with +1.
struct CanonicalSigns {
  constexpr double operator[](CanonicalTerm) const { return 1.0; }
  constexpr bool check_realness() const { return true; }
};

/// Runtime sign table, used to evaluate perturbed equations.
struct TermSigns {
  std::array<double, kCanonicalTermCount> sign;
  bool realness_check = true;

  static TermSigns unit() {
    TermSigns s;
    s.sign.fill(1.0);
    return s;
  }
  static TermSigns flipped(CanonicalTerm term) {
    TermSigns s = unit();
    s.sign[static_cast<std::size_t>(term)] = -1.0;
    s.realness_check = false;
    return s;
  }
  double operator[](CanonicalTerm t) const { return sign[static_cast<std::size_t>(t)]; }
  bool check_realness() const { return realness_check; }
};

namespace detail {

struct PhaseBrackets3 {
  Complex phi1_sum;  // (h₁ + v̄₁x + v̄₂y) + (h₁ + v₁x̄ + v₂ȳ)
  Complex phi2_sum;  // (−h₂ − v̄₃z + v̄₁x + v̄₂xz) + conjugate
};

template <class Signs>
PhaseBrackets3 phase_brackets3(const ChartState3& s, const HamiltonianSample3& h,
                               const Signs& sg) {
  using T = CanonicalTerm;
  const Complex x = s.x, y = s.y, z = s.z;
  const Complex v1 = h.v1, v2 = h.v2, v3 = h.v3;
  const Complex v1c = std::conj(v1), v2c = std::conj(v2), v3c = std::conj(v3);
  const Complex xc = std::conj(x), yc = std::conj(y), zc = std::conj(z);

  const Complex a = sg[T::phi1_h1] * h.h1 + sg[T::phi1_v1bar_x] * (v1c * x) +
                    sg[T::phi1_v2bar_y] * (v2c * y);
  const Complex a_conj = sg[T::phi1_h1_conj] * h.h1 + sg[T::phi1_v1_xbar] * (v1 * xc) +
                         sg[T::phi1_v2_ybar] * (v2 * yc);
  const Complex b = -sg[T::phi2_h2] * h.h2 - sg[T::phi2_v3bar_z] * (v3c * z) +
                    sg[T::phi2_v1bar_x] * (v1c * x) + sg[T::phi2_v2bar_xz] * (v2c * (x * z));
  const Complex b_conj = -sg[T::phi2_h2_conj] * h.h2 - sg[T::phi2_v3_zbar] * (v3 * zc) +
                         sg[T::phi2_v1_xbar] * (v1 * xc) +
                         sg[T::phi2_v2_xbar_zbar] * (v2 * (xc * zc));
  return {a + a_conj, b + b_conj};
}

inline double magnitude_scale3(const ChartState3& s, const HamiltonianSample3& h) {
  const double c = std::max({1.0, std::abs(s.x), std::abs(s.y), std::abs(s.z)});
  const double v = std::max({std::abs(h.v1), std::abs(h.v2), std::abs(h.v3)});
  const double e = std::max({std::abs(h.h1), std::abs(h.h2), std::abs(h.h3)});
  return 1.0 + e + v * c * c;
}

}  // namespace detail

/// Imaginary parts of the two phase brackets before their real parts are
/// taken; analytically zero.
inline std::pair<double, double> phase_rate_imag_residuals3(const ChartState3& s,
                                                            const HamiltonianSample3& h) {
  const auto br = detail::phase_brackets3(s, h, CanonicalSigns{});
  return {std::abs(br.phi1_sum.imag()), std::abs(br.phi2_sum.imag())};
}

template <class Signs = CanonicalSigns>
ChartDerivative3 rhs3(const ChartState3& s, const HamiltonianSample3& h, const Signs& sg = {}) {
  using T = CanonicalTerm;
  const Complex x = s.x, y = s.y, z = s.z;
  const Complex v1 = h.v1, v2 = h.v2, v3 = h.v3;
  const Complex v1c = std::conj(v1), v2c = std::conj(v2), v3c = std::conj(v3);
  const Complex minus_i(0.0, -1.0);
  const Complex w = x * z - y;

  const Complex rx = sg[T::x_v1] * v1 + sg[T::x_h2_minus_h1] * ((h.h2 - h.h1) * x) -
                     sg[T::x_v1bar_xx] * (v1c * (x * x)) + sg[T::x_v3bar_y] * (v3c * y) -
                     sg[T::x_v2bar_xy] * (v2c * (x * y));
  const Complex ry = sg[T::y_v2] * v2 + sg[T::y_h3_minus_h1] * ((h.h3 - h.h1) * y) -
                     sg[T::y_v2bar_yy] * (v2c * (y * y)) + sg[T::y_v3_x] * (v3 * x) -
                     sg[T::y_v1bar_xy] * (v1c * (x * y));
  const Complex rz = sg[T::z_v3] * v3 + sg[T::z_h3_minus_h2] * ((h.h3 - h.h2) * z) -
                     sg[T::z_v3bar_zz] * (v3c * (z * z)) + sg[T::z_w_v1bar] * (w * v1c) +
                     sg[T::z_w_v2bar_z] * (w * (v2c * z));

  const auto br = detail::phase_brackets3(s, h, sg);
  if (sg.check_realness()) {
    const double tol = 1e-13 * detail::magnitude_scale3(s, h);
    if (std::abs(br.phi1_sum.imag()) > tol || std::abs(br.phi2_sum.imag()) > tol)
      throw InvariantViolation("phase rate has a non-negligible imaginary part");
  }
  return {minus_i * rx, minus_i * ry, minus_i * rz, -0.5 * br.phi1_sum.real(),
          0.5 * br.phi2_sum.real()};
}

/// (Δ̇₁/Δ₁, Δ̇₂/Δ₂) from the closed-form logarithmic-derivative identities
///   iΔ̇₁/Δ₁ = (h₁ + v₁x̄ + v₂ȳ) − (h₁ + v̄₁x + v̄₂y)
///   iΔ̇₂/Δ₂ = −v̄₃z + v₃z̄ + v̄₂(xz − y) − v₂(x̄z̄ − ȳ)
inline std::pair<double, double> log_delta_rates(const ChartState3& s,
                                                 const HamiltonianSample3& h) {
  const Complex x = s.x, y = s.y, z = s.z;
  const Complex xc = std::conj(x), yc = std::conj(y), zc = std::conj(z);
  const Complex v1c = std::conj(h.v1), v2c = std::conj(h.v2), v3c = std::conj(h.v3);
  const Complex minus_i(0.0, -1.0);
  const Complex r1 = minus_i * ((h.h1 + h.v1 * xc + h.v2 * yc) - (h.h1 + v1c * x + v2c * y));
  const Complex r2 =
      minus_i * (-v3c * z + h.v3 * zc + v2c * (x * z - y) - h.v2 * (xc * zc - yc));
  const double tol = 1e-13 * detail::magnitude_scale3(s, h);
  if (std::abs(r1.imag()) > tol || std::abs(r2.imag()) > tol)
    throw InvariantViolation("logarithmic Delta rate has a non-negligible imaginary part");
  return {r1.real(), r2.real()};
}

/// U = V · D_Δ · U₂
inline UnitaryMatrix<3> reconstruct_u3(const ChartState3& s) {
  const Complex x = s.x, y = s.y, z = s.z;
  const Complex xc = std::conj(x), yc = std::conj(y), zc = std::conj(z);
  const double d1 = delta1(s);
  const double d2 = delta2(s);
  const Complex w = (xc + yc * z) / d1;

  ComplexMatrix<3> v;
  v << 1.0, -w, (xc * zc - yc) / d2,
       x, 1.0 - x * w, -zc / d2,
       y, z - y * w, 1.0 / d2;

  const double s1 = 1.0 / std::sqrt(d1);
  const double s2 = std::sqrt(d1 / d2);
  const double s3 = std::sqrt(d2);
  const Complex p1 = std::polar(1.0, s.phi1);
  const Complex p2 = std::polar(1.0, s.phi2);
  const Complex p3 = std::polar(1.0, s.phi3());
  const Complex col[3] = {s1 * p1, s2 * p2, s3 * p3};

  ComplexMatrix<3> u;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) u(r, c) = v(r, c) * col[c];
  return UnitaryMatrix<3>::make(u);
}

template <>
struct StateTraits<ChartState3> {
  static constexpr std::size_t size = 8;
  static constexpr double singularity_threshold = kSingularityThreshold;
  static void pack(const ChartState3& s, std::span<double, size> out) {
    out[0] = s.x.real();
    out[1] = s.x.imag();
    out[2] = s.y.real();
    out[3] = s.y.imag();
    out[4] = s.z.real();
    out[5] = s.z.imag();
    out[6] = s.phi1;
    out[7] = s.phi2;
  }
  static ChartState3 unpack(std::span<const double, size> in) {
    return {Complex(in[0], in[1]), Complex(in[2], in[3]), Complex(in[4], in[5]), in[6], in[7]};
  }
  static double chart_magnitude(const ChartState3& s) {
    return std::max({std::abs(s.x), std::abs(s.y), std::abs(s.z)});
  }
};

}  // namespace canonform
