#pragma once

// Adaptive Dormand–Prince 5(4) integration with dense output.
//
// The state type is mapped onto a flat array of reals through StateTraits,
// which every state type must specialise:
//
//   template <> struct StateTraits<S> {
//     static constexpr std::size_t size;           // number of real components
//     static void pack(const S&, std::span<double, size>);
//     static S unpack(std::span<const double, size>);
//     static double chart_magnitude(const S&);     // compared to singularity_threshold
//     static constexpr double singularity_threshold;
//   };

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace canonform {

template <class State>
struct StateTraits;

template <class S>
concept OdeState = requires(const S& s, std::span<double, StateTraits<S>::size> out,
                            std::span<const double, StateTraits<S>::size> in) {
  StateTraits<S>::pack(s, out);
  { StateTraits<S>::unpack(in) } -> std::same_as<S>;
  { StateTraits<S>::chart_magnitude(s) } -> std::convertible_to<double>;
  { StateTraits<S>::singularity_threshold } -> std::convertible_to<double>;
};

struct IntegratorSettings {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.01;
  double initial_step = 1e-4;
  long long max_steps = 10'000'000;

  /// Defaults tied to the integration window: max_step = span/100,
  /// initial_step = max_step/100.
  static IntegratorSettings defaults_for(double t_start, double t_end) {
    IntegratorSettings s;
    s.max_step = (t_end - t_start) / 100.0;
    s.initial_step = s.max_step / 100.0;
    return s;
  }

  void validate() const {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be > 0");
    if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be > 0");
    if (!(max_steps > 0)) throw std::invalid_argument("max_steps must be > 0");
  }
};

enum class TrajectoryStatus { completed, singularity, step_limit };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed: return "completed";
    case TrajectoryStatus::singularity: return "singularity";
    case TrajectoryStatus::step_limit: return "step_limit";
  }
  return "unknown";
}

struct IntegratorStats {
  long long accepted_steps = 0;
  long long rejected_steps = 0;
  long long rhs_evaluations = 0;
};

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  TrajectoryStatus status = TrajectoryStatus::completed;
  /// Set when status is singularity: the flow could not be continued past
  /// this time (blow-up lies within one step width of it).
  std::optional<double> singularity_time;
  IntegratorStats stats;
};

class NonFiniteDerivative : public std::runtime_error {
public:
  explicit NonFiniteDerivative(double t)
      : std::runtime_error("right-hand side returned a non-finite derivative at t = " +
                           std::to_string(t)),
        time_(t) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

/// Escape of a chart coordinate past the singularity threshold.
class ChartSingularity : public std::runtime_error {
public:
  explicit ChartSingularity(double t)
      : std::runtime_error("chart singularity detected near t = " + std::to_string(t)),
        time_(t) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

template <class State>
const Trajectory<State>& require_completed(const Trajectory<State>& traj) {
  if (traj.status == TrajectoryStatus::singularity) throw ChartSingularity(*traj.singularity_time);
  if (traj.status == TrajectoryStatus::step_limit)
    throw std::runtime_error("integrator step limit exceeded");
  return traj;
}

namespace dopri {

inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Nørsett & Wanner, DOPRI5).
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// PI step-size control.
inline constexpr double kSafety = 0.9;
inline constexpr double kBeta = 0.04;
inline constexpr double kAlpha = 0.2 - 0.75 * kBeta;
inline constexpr double kMinFactor = 0.2;
inline constexpr double kMaxFactor = 10.0;

}  // namespace dopri

/// Sorted union of {t_start} ∪ sample_times ∪ {t_end}.
inline std::vector<double> output_grid(double t_start, double t_end,
                                       std::span<const double> sample_times) {
  std::vector<double> grid(sample_times.begin(), sample_times.end());
  grid.push_back(t_start);
  grid.push_back(t_end);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// Integrates dy/dt = rhs(t, y) from t_start to t_end and reports the state at
/// every time of output_grid(t_start, t_end, sample_times) that was reached.
///
/// A trial step whose stages leave the chart (non-finite or beyond the
/// threshold) is halved; once the step falls below 1e-12·(t_end − t_start)
/// the run stops with singularity status.
template <OdeState State, class Rhs>
Trajectory<State> integrate(Rhs&& rhs, const State& initial, double t_start, double t_end,
                            const IntegratorSettings& settings,
                            std::span<const double> sample_times) {
  using Traits = StateTraits<State>;
  constexpr std::size_t K = Traits::size;
  using Vec = std::array<double, K>;

  if (!(t_end > t_start)) throw std::invalid_argument("integrate: t_end must exceed t_start");
  settings.validate();
  for (double s : sample_times)
    if (!(s >= t_start && s <= t_end))
      throw std::invalid_argument("integrate: sample time outside [t_start, t_end]");

  const std::vector<double> grid = output_grid(t_start, t_end, sample_times);
  const double span = t_end - t_start;
  const double h_min = 1e-12 * span;

  Trajectory<State> traj;
  traj.times.reserve(grid.size());
  traj.states.reserve(grid.size());

  auto to_state = [](const Vec& v) { return Traits::unpack(std::span<const double, K>(v)); };
  auto on_chart = [&](const Vec& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return Traits::chart_magnitude(to_state(v)) < Traits::singularity_threshold;
  };
  auto eval = [&](double t, const Vec& y) {
    const State d = rhs(t, to_state(y));
    ++traj.stats.rhs_evaluations;
    Vec out{};
    Traits::pack(d, std::span<double, K>(out));
    for (double x : out)
      if (!std::isfinite(x)) throw NonFiniteDerivative(t);
    return out;
  };

  Vec y{};
  Traits::pack(initial, std::span<double, K>(y));
  if (!on_chart(y)) {
    traj.status = TrajectoryStatus::singularity;
    traj.singularity_time = t_start;
    return traj;
  }

  std::size_t next = 0;
  traj.times.push_back(grid[next++]);
  traj.states.push_back(to_state(y));

  double t = t_start;
  double h = std::min({settings.initial_step, settings.max_step, span});
  double err_prev = 1e-4;
  bool last_rejected = false;
  long long attempts = 0;
  Vec k1 = eval(t, y), k2, k3, k4, k5, k6, k7, stage, y_new;

  auto combine = [&](const Vec& base, double hh, std::initializer_list<std::pair<double, const Vec*>> terms) {
    Vec r = base;
    for (const auto& [coef, k] : terms)
      for (std::size_t i = 0; i < K; ++i) r[i] += hh * coef * (*k)[i];
    return r;
  };

  while (t < t_end) {
    if (attempts >= settings.max_steps) {
      traj.status = TrajectoryStatus::step_limit;
      return traj;
    }
    ++attempts;

    h = std::min(h, settings.max_step);
    bool last = false;
    if (t + h >= t_end || t + 1.0001 * h >= t_end) {
      h = t_end - t;
      last = true;
    }
    const double t_new = last ? t_end : t + h;

    using namespace dopri;
    bool left_chart = false;
    auto stage_ok = [&](const Vec& s) {
      if (!on_chart(s)) left_chart = true;
      return !left_chart;
    };

    stage = combine(y, h, {{a21, &k1}});
    if (stage_ok(stage)) k2 = eval(t + c2 * h, stage);
    if (!left_chart) {
      stage = combine(y, h, {{a31, &k1}, {a32, &k2}});
      if (stage_ok(stage)) k3 = eval(t + c3 * h, stage);
    }
    if (!left_chart) {
      stage = combine(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
      if (stage_ok(stage)) k4 = eval(t + c4 * h, stage);
    }
    if (!left_chart) {
      stage = combine(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
      if (stage_ok(stage)) k5 = eval(t + c5 * h, stage);
    }
    if (!left_chart) {
      stage = combine(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
      if (stage_ok(stage)) k6 = eval(t_new, stage);
    }
    if (!left_chart) {
      y_new = combine(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
      if (stage_ok(y_new)) k7 = eval(t_new, y_new);
    }

    if (left_chart) {
      ++traj.stats.rejected_steps;
      h *= 0.5;
      last_rejected = true;
      if (h < h_min) {
        traj.status = TrajectoryStatus::singularity;
        traj.singularity_time = t;
        return traj;
      }
      continue;
    }

    double sq = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
      const double sc = settings.abs_tol + settings.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      sq += (e / sc) * (e / sc);
    }
    const double err = std::sqrt(sq / static_cast<double>(K));

    if (err <= 1.0) {
      ++traj.stats.accepted_steps;
      // Dense output for the samples inside (t, t_new].
      if (next < grid.size() && grid[next] <= t_new) {
        Vec r2, r3, r4, r5;
        for (std::size_t i = 0; i < K; ++i) {
          r2[i] = y_new[i] - y[i];
          r3[i] = h * k1[i] - r2[i];
          r4[i] = r2[i] - h * k7[i] - r3[i];
          r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        while (next < grid.size() && grid[next] <= t_new) {
          const double ts = grid[next++];
          if (ts == t_new) {
            traj.states.push_back(to_state(y_new));
          } else {
            const double th = (ts - t) / h;
            const double th1 = 1.0 - th;
            Vec ys;
            for (std::size_t i = 0; i < K; ++i)
              ys[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
            traj.states.push_back(to_state(ys));
          }
          traj.times.push_back(ts);
        }
      }

      double factor = kSafety * std::pow(err, -kAlpha) * std::pow(err_prev, kBeta);
      if (err == 0.0) factor = kMaxFactor;
      factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      err_prev = std::max(err, 1e-4);
      last_rejected = false;

      t = t_new;
      y = y_new;
      k1 = k7;
      h *= factor;
    } else {
      ++traj.stats.rejected_steps;
      h *= std::max(kMinFactor, kSafety * std::pow(err, -kAlpha));
      last_rejected = true;
      if (h < h_min) {
        traj.status = TrajectoryStatus::singularity;
        traj.singularity_time = t;
        return traj;
      }
    }
  }
  traj.status = TrajectoryStatus::completed;
  return traj;
}

}  // namespace canonform
