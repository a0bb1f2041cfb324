#include "canonform/evolution.hpp"
#include "canonform/oracle.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace canonform;
namespace ref = canonform::testing;

namespace {

const Complex I(0.0, 1.0);

template <int N>
double max_distance_to_exact(const OracleTrajectory<N>& o, const HermitianTraceless<N>& h) {
  double worst = 0.0;
  for (std::size_t i = 0; i < o.times.size(); ++i)
    worst = std::max(worst, frobenius_distance(o.unitaries[i], hermitian_expm(h, o.times[i]).matrix()));
  return worst;
}

}  // namespace

TEST(Schrodinger, ZeroHamiltonianStaysIdentity) {
  const auto grid = uniform_grid(0.0, 10.0, 51);
  const auto o = integrate_schrodinger(Hamiltonian3{}, 0.0, 10.0, IntegratorSettings::defaults_for(0.0, 10.0), grid);
  ASSERT_EQ(o.times.size(), 51u);
  for (const auto& u : o.unitaries) EXPECT_EQ(u, identity<3>());
  EXPECT_EQ(o.drift, 0.0);
}

TEST(Schrodinger, ConstantHamiltonianMatchesExponential) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 5; ++i) {
    auto s = IntegratorSettings::defaults_for(0.0, 10.0);
    s.rel_tol = 1e-10;
    const auto grid = uniform_grid(0.0, 10.0, 41);
    const auto h2 = ref::random_sample2(rng);
    const auto o2 = integrate_schrodinger(ref::constant_hamiltonian(h2), 0.0, 10.0, s, grid);
    EXPECT_LE(max_distance_to_exact(o2, assemble(h2)), 1e-9);
    const auto h3 = ref::random_sample3(rng);
    const auto o3 = integrate_schrodinger(ref::constant_hamiltonian(h3), 0.0, 10.0, s, grid);
    EXPECT_LE(max_distance_to_exact(o3, assemble(h3)), 1e-9);
  }
}

TEST(Schrodinger, SigmaXRotation) {
  Hamiltonian2 ham{DriveSignal::zero(), DriveSignal::constant(1.0)};
  const auto grid = uniform_grid(0.0, 10.0, 101);
  auto s = IntegratorSettings::defaults_for(0.0, 10.0);
  s.rel_tol = 1e-10;
  const auto o = integrate_schrodinger(ham, 0.0, 10.0, s, grid);
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    const double t = o.times[i];
    ComplexMatrix<2> u;
    u << std::cos(t), -I * std::sin(t), -I * std::sin(t), std::cos(t);
    EXPECT_LE(frobenius_distance(o.unitaries[i], u), 1e-9) << "t = " << t;
  }
}

TEST(Schrodinger, DriftIsMeasuredNotCorrected) {
  std::mt19937_64 rng(52);
  const auto ham = ref::random_driven_hamiltonian3(rng);
  const auto grid = uniform_grid(0.0, 10.0, 201);
  const auto o = integrate_schrodinger(ham, 0.0, 10.0, IntegratorSettings::defaults_for(0.0, 10.0), grid);
  double worst = 0.0;
  for (const auto& u : o.unitaries) worst = std::max(worst, unitarity_error(u));
  EXPECT_EQ(o.drift, worst);
  EXPECT_GT(o.drift, 0.0);
  EXPECT_LT(o.drift, 1e-7);
}

TEST(Compare, TrajectoryWithItself) {
  std::mt19937_64 rng(53);
  const auto ham = ref::random_driven_hamiltonian3(rng);
  const auto grid = uniform_grid(0.0, 4.0, 21);
  const auto o = integrate_schrodinger(ham, 0.0, 4.0, IntegratorSettings::defaults_for(0.0, 4.0), grid);
  const auto rep = compare<3>(o.times, std::span<const ComplexMatrix<3>>(o.unitaries), o);
  EXPECT_EQ(rep.max_frobenius_error, 0.0);
  EXPECT_EQ(rep.errors.size(), 21u);
  EXPECT_EQ(rep.oracle_drift, o.drift);
}

TEST(Compare, GridMismatch) {
  const auto a = integrate_schrodinger(Hamiltonian2{}, 0.0, 1.0, IntegratorSettings::defaults_for(0.0, 1.0),
                                       uniform_grid(0.0, 1.0, 5));
  const auto b = integrate_schrodinger(Hamiltonian2{}, 0.0, 1.0, IntegratorSettings::defaults_for(0.0, 1.0),
                                       uniform_grid(0.0, 1.0, 6));
  EXPECT_THROW(compare<2>(a.times, std::span<const ComplexMatrix<2>>(a.unitaries), b), SampleGridMismatch);
}

TEST(Compare, MaximumAndLocation) {
  OracleTrajectory<2> ref_traj;
  ref_traj.times = {0.0, 1.0, 2.0};
  ref_traj.unitaries = {identity<2>(), identity<2>(), identity<2>()};
  std::vector<ComplexMatrix<2>> other = ref_traj.unitaries;
  other[1](0, 0) = 1.5;
  other[2](0, 0) = 1.25;
  const auto rep = compare<2>(ref_traj.times, std::span<const ComplexMatrix<2>>(other), ref_traj);
  EXPECT_EQ(rep.max_frobenius_error, 0.5);
  EXPECT_EQ(rep.time_of_max, 1.0);
  EXPECT_EQ(rep.errors, (std::vector<double>{0.0, 0.5, 0.25}));
}

TEST(Compare, DiagonalThreeLevelAgainstClosedPhases) {
  Hamiltonian3 ham;
  ham.h1 = DriveSignal::constant(0.7);
  ham.h2 = DriveSignal::constant(-1.9);
  const auto grid = uniform_grid(0.0, 10.0, 101);
  const auto settings = IntegratorSettings::defaults_for(0.0, 10.0);
  const auto run = solve_canonical(ham, 0.0, 10.0, settings, grid);
  const auto o = integrate_schrodinger(ham, 0.0, 10.0, settings, grid);
  EXPECT_LE(compare(run, o).max_frobenius_error, 1e-7);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = run.trajectory.times[i];
    EXPECT_NEAR(run.trajectory.states[i].phi1, -0.7 * t, 1e-9);
    EXPECT_NEAR(run.trajectory.states[i].phi2, 1.9 * t, 1e-9);
  }
}

TEST(Compare, CorruptedSignInRiccatiIsDetected) {
  std::mt19937_64 rng(54);
  const auto ham = ref::random_driven_hamiltonian3(rng);
  const auto grid = uniform_grid(0.0, 10.0, 101);
  const auto settings = IntegratorSettings::defaults_for(0.0, 10.0);
  const auto o = integrate_schrodinger(ham, 0.0, 10.0, settings, grid);

  const auto good = solve_canonical(ham, 0.0, 10.0, settings, grid);
  ASSERT_EQ(good.trajectory.status, TrajectoryStatus::completed);
  EXPECT_LE(compare(good, o).max_frobenius_error, 1e-6);

  const auto signs = TermSigns::flipped(CanonicalTerm::z_v3);
  const auto bad = solve_canonical<ThreeLevel>(
      ham, 0.0, 10.0, settings, grid, [&](const ChartState3& s, const HamiltonianSample3& h) {
        const auto d = rhs3(s, h, signs);
        return ChartState3{d.dx, d.dy, d.dz, d.dphi1, d.dphi2};
      });
  if (bad.trajectory.status == TrajectoryStatus::completed) {
    EXPECT_GE(compare(bad, o).max_frobenius_error, 1e-2);
  } else {
    SUCCEED() << "mutated equations left the chart";
  }
}
