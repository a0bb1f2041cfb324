#pragma once

// Time-dependent Hamiltonian coefficients and assembly of H(t).

#include "canonform/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace canonform {

class InvalidDrive : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class DriveSignal;

struct ConstantDrive {
  Complex value;
};

/// amplitude·cos(ω t + δ)
struct CosineDrive {
  Complex amplitude;
  double angular_frequency;
  double phase_offset;
};

/// amplitude·exp(−(t − center)² / (2 width²))
struct GaussianPulse {
  Complex amplitude;
  double center;
  double width;
};

struct Knot {
  double time;
  Complex value;
};

/// Linear interpolation between knots, clamped to the end values outside.
struct PiecewiseLinear {
  std::vector<Knot> knots;
};

struct DriveSum {
  std::vector<DriveSignal> terms;
};

/// Complex-valued function of time built from primitive shapes.
class DriveSignal {
public:
  using Shape = std::variant<ConstantDrive, CosineDrive, GaussianPulse, PiecewiseLinear, DriveSum>;

  static DriveSignal constant(Complex value) {
    require_finite(value, "constant value");
    return DriveSignal(ConstantDrive{value});
  }

  static DriveSignal cosine(Complex amplitude, double angular_frequency, double phase_offset = 0.0) {
    require_finite(amplitude, "cosine amplitude");
    require_finite(angular_frequency, "cosine angular_frequency");
    require_finite(phase_offset, "cosine phase_offset");
    return DriveSignal(CosineDrive{amplitude, angular_frequency, phase_offset});
  }

  static DriveSignal gaussian(Complex amplitude, double center, double width) {
    require_finite(amplitude, "gaussian amplitude");
    require_finite(center, "gaussian center");
    require_finite(width, "gaussian width");
    if (!(width > 0.0)) throw InvalidDrive("gaussian width must be > 0");
    return DriveSignal(GaussianPulse{amplitude, center, width});
  }

  static DriveSignal piecewise(std::vector<Knot> knots) {
    if (knots.size() < 2) throw InvalidDrive("piecewise drive needs at least 2 knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      require_finite(knots[i].time, "piecewise knot time");
      require_finite(knots[i].value, "piecewise knot value");
      if (i > 0 && !(knots[i].time > knots[i - 1].time))
        throw InvalidDrive("piecewise knot times must be strictly increasing");
    }
    return DriveSignal(PiecewiseLinear{std::move(knots)});
  }

  static DriveSignal sum(std::vector<DriveSignal> terms) {
    return DriveSignal(DriveSum{std::move(terms)});
  }

  static DriveSignal zero() { return constant(0.0); }

  const Shape& shape() const noexcept { return shape_; }

  Complex operator()(double t) const;

  /// True when every parameter is real, so the signal is real for all t.
  bool is_real() const;

private:
  explicit DriveSignal(Shape shape) : shape_(std::move(shape)) {}

  static void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw InvalidDrive(std::string(what) + " must be finite");
  }
  static void require_finite(Complex z, const char* what) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InvalidDrive(std::string(what) + " must be finite");
  }

  Shape shape_;
};

inline Complex eval_drive(const DriveSignal& d, double t) {
  return std::visit(
      [t](const auto& s) -> Complex {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConstantDrive>) {
          return s.value;
        } else if constexpr (std::is_same_v<S, CosineDrive>) {
          return s.amplitude * std::cos(s.angular_frequency * t + s.phase_offset);
        } else if constexpr (std::is_same_v<S, GaussianPulse>) {
          const double u = (t - s.center) / s.width;
          return s.amplitude * std::exp(-0.5 * u * u);
        } else if constexpr (std::is_same_v<S, PiecewiseLinear>) {
          const auto& k = s.knots;
          if (t <= k.front().time) return k.front().value;
          if (t >= k.back().time) return k.back().value;
          const auto hi = std::upper_bound(k.begin(), k.end(), t,
                                           [](double x, const Knot& kn) { return x < kn.time; });
          const auto lo = hi - 1;
          const double w = (t - lo->time) / (hi->time - lo->time);
          return lo->value + w * (hi->value - lo->value);
        } else {
          Complex acc = 0.0;
          for (const auto& term : s.terms) acc += eval_drive(term, t);
          return acc;
        }
      },
      d.shape());
}

inline Complex DriveSignal::operator()(double t) const { return eval_drive(*this, t); }

inline bool DriveSignal::is_real() const {
  return std::visit(
      [](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConstantDrive>) {
          return s.value.imag() == 0.0;
        } else if constexpr (std::is_same_v<S, CosineDrive> || std::is_same_v<S, GaussianPulse>) {
          return s.amplitude.imag() == 0.0;
        } else if constexpr (std::is_same_v<S, PiecewiseLinear>) {
          return std::all_of(s.knots.begin(), s.knots.end(),
                             [](const Knot& k) { return k.value.imag() == 0.0; });
        } else {
          return std::all_of(s.terms.begin(), s.terms.end(),
                             [](const DriveSignal& d) { return d.is_real(); });
        }
      },
      shape_);
}

namespace detail {

inline double real_part_checked(Complex value, const char* name, double t) {
  if (std::abs(value.imag()) > 1e-14 * std::max(1.0, std::abs(value.real())))
    throw InvariantViolation(std::string("diagonal drive ") + name +
                             " is not real at t = " + std::to_string(t));
  return value.real();
}

}  // namespace detail

/// Coefficients of the two-level Hamiltonian at a fixed time.
struct HamiltonianSample2 {
  double h = 0.0;
  Complex v = 0.0;
};

/// Coefficients of the three-level Hamiltonian at a fixed time; h3 = −h1 − h2.
struct HamiltonianSample3 {
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
  Complex v1 = 0.0;
  Complex v2 = 0.0;
  Complex v3 = 0.0;

  static HamiltonianSample3 make(double h1, double h2, Complex v1, Complex v2, Complex v3) {
    return {h1, h2, -(h1 + h2), v1, v2, v3};
  }
};

/// H(t) = [[h, v̄], [v, −h]]
struct Hamiltonian2 {
  DriveSignal h = DriveSignal::zero();
  DriveSignal v = DriveSignal::zero();

  HamiltonianSample2 sample(double t) const {
    return {detail::real_part_checked(h(t), "h", t), v(t)};
  }
};

/// H(t) = [[h1, v̄1, v̄2], [v1, h2, v̄3], [v2, v3, h3]] with h3 derived as −h1 − h2.
struct Hamiltonian3 {
  DriveSignal h1 = DriveSignal::zero();
  DriveSignal h2 = DriveSignal::zero();
  DriveSignal v1 = DriveSignal::zero();
  DriveSignal v2 = DriveSignal::zero();
  DriveSignal v3 = DriveSignal::zero();

  HamiltonianSample3 sample(double t) const {
    return HamiltonianSample3::make(detail::real_part_checked(h1(t), "h1", t),
                                    detail::real_part_checked(h2(t), "h2", t), v1(t), v2(t),
                                    v3(t));
  }
};

inline HermitianTraceless<2> assemble(const HamiltonianSample2& s) {
  ComplexMatrix<2> m;
  m << s.h, std::conj(s.v),
       s.v, -s.h;
  return HermitianTraceless<2>::make(m);
}

inline HermitianTraceless<3> assemble(const HamiltonianSample3& s) {
  ComplexMatrix<3> m;
  m << s.h1, std::conj(s.v1), std::conj(s.v2),
       s.v1, s.h2, std::conj(s.v3),
       s.v2, s.v3, s.h3;
  return HermitianTraceless<3>::make(m);
}

inline HermitianTraceless<2> assemble_h2(const Hamiltonian2& ham, double t) {
  return assemble(ham.sample(t));
}

inline HermitianTraceless<3> assemble_h3(const Hamiltonian3& ham, double t) {
  return assemble(ham.sample(t));
}

}  // namespace canonform
