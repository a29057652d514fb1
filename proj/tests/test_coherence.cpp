#include <gtest/gtest.h>

#include <boost/math/tools/roots.hpp>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>

#include "test_util.hpp"
#include "vsp/coherence.hpp"

using namespace vsp;
using vsp::test::cesium;

namespace {

struct Fixture {
  ThermalEnsemble e = test::room_temperature();
  std::shared_ptr<const VelocityGrid> grid = test::grid_for(e, cesium());
  PopulationState state = thermal_state(e, cesium(), grid);
  VelocityDistribution thermal = VelocityDistribution::of_level(state, ground_slot);
  LadderConfig ladder = LadderConfig::from(cesium().ladder("Cs 6D5/2"), cesium(), e.temperature);
  double sigma = thermal_velocity_sigma(e.temperature, cesium().mass);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

VelocityDistribution narrow(double center, double width) {
  const auto& f = fx();
  std::vector<double> v(f.grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = (f.grid->velocity(i) - center) / width;
    v[i] = 1.0 / (1.0 + u * u);
  }
  return VelocityDistribution(f.grid, v);
}

}  // namespace

TEST(Ladder, WavevectorMismatch) {
  const auto& f = fx();
  const double k = wavevector_mismatch(f.ladder);
  EXPECT_NEAR(k, constants::two_pi * (1 / 852.34727582e-9 - 1 / 917.483e-9), 1e-6 * k);
  LadderConfig bad = f.ladder;
  bad.signal_wavelength = 0;
  EXPECT_THROW((void)wavevector_mismatch(bad), std::domain_error);
}

TEST(Distribution, NormalisedWithThermalMoments) {
  const auto& f = fx();
  EXPECT_NEAR(f.thermal.grid().integrate(f.thermal.values()), 1.0, 1e-12);
  EXPECT_NEAR(f.thermal.mean(), 0.0, 1e-9);
  EXPECT_NEAR(f.thermal.rms_spread() / f.sigma, 1.0, 1e-6);
  EXPECT_THROW(VelocityDistribution(f.grid, std::vector<double>(f.grid->size(), 0.0)), std::domain_error);
}

TEST(Overlap, GaussianCharacteristicFunction) {
  // A +-8 sigma grid keeps the truncated tail below the tolerance at 5 / (k sigma).
  const auto& f = fx();
  const auto wide = std::make_shared<const VelocityGrid>(VelocityGrid::thermal(f.sigma, 2001, 8.0));
  const auto thermal = VelocityDistribution::of_level(thermal_state(f.e, cesium(), wide), ground_slot);
  const double k = wavevector_mismatch(f.ladder);
  const double scale = 1.0 / (k * f.sigma);
  for (int i = 0; i <= 100; ++i) {
    const double t = 5.0 * scale * i / 100.0;
    const double expected = std::exp(-0.5 * std::pow(k * f.sigma * t, 2));
    const double got = std::abs(overlap(thermal, k, t));
    EXPECT_NEAR(got, expected, 1e-6 * expected + 1e-12) << "t = " << t;
  }
}

TEST(Overlap, MatchesDiscreteFourierTransform) {
  // On a uniform grid the overlap at k_r t dv = 2 pi m / N is the m-th DFT
  // coefficient of the weighted samples.
  const auto& f = fx();
  const auto dist = narrow(-100.0, 8.0);
  const std::size_t n = f.grid->size();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = f.grid->weight(i) * dist.values()[i];
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), a.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  const double k = wavevector_mismatch(f.ladder);
  const double dv = f.grid->velocity(1) - f.grid->velocity(0);
  for (std::size_t m : {1u, 2u, 5u, 17u, 60u}) {
    const double t = constants::two_pi * static_cast<double>(m) / (static_cast<double>(n) * dv * k);
    const double fft_mag = std::hypot(out[m][0], out[m][1]);
    EXPECT_NEAR(std::abs(overlap(dist, k, t)), fft_mag, 1e-12) << "m = " << m;
  }
}

TEST(Overlap, RejectsUnnormalisedInput) {
  const auto& f = fx();
  std::vector<double> v(f.grid->size(), 1.0);
  EXPECT_THROW((void)overlap(*f.grid, v, 1.0, 0.0), std::domain_error);
}

TEST(Dephasing, ThermalFourteenNanoseconds) {
  const auto& f = fx();
  const double k = wavevector_mismatch(f.ladder);
  const double tau = dephasing_time(f.thermal, k);
  EXPECT_NEAR(tau / 14e-9, 1.0, 0.05);
  // Gaussian: |overlap|^2 = exp(-(k sigma t)^2) reaches 1/e at 1 / (k sigma).
  EXPECT_NEAR(tau * k * f.sigma, 1.0, 1e-6);
}

TEST(Dephasing, ZeroMismatchIsUnbounded) {
  const auto& f = fx();
  EXPECT_TRUE(is_unbounded(dephasing_time(f.thermal, 0.0)));
  LadderConfig same = f.ladder;
  same.control_wavelength = same.signal_wavelength;
  EXPECT_EQ(memory_lifetime(f.thermal, same), same.storage_lifetime);
  EXPECT_THROW((void)dephasing_time(f.thermal, -1.0), std::domain_error);
}

TEST(Dephasing, NarrowerDistributionDephasesSlower) {
  const auto& f = fx();
  const double k = wavevector_mismatch(f.ladder);
  const double a = dephasing_time(narrow(-100.0, 20.0), k);
  const double b = dephasing_time(narrow(-100.0, 5.0), k);
  EXPECT_GT(a, dephasing_time(f.thermal, k));
  EXPECT_GT(b, a);
  // Lorentzian velocity profile: |overlap|^2 = exp(-2 k w t), 1/e at 1 / (2 k w),
  // up to the truncation of the tails by the grid.
  EXPECT_NEAR(b * 2 * k * 5.0, 1.0, 0.05);
}

TEST(Lifetime, GaussianRootOfEfficiency) {
  const auto& f = fx();
  const double k = wavevector_mismatch(f.ladder);
  const double tau = f.ladder.storage_lifetime;
  auto g = [&](double t) { return std::pow(k * f.sigma * t, 2) + t / tau - 1.0; };
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(g, 0.0, tau, boost::math::tools::eps_tolerance<double>(50), iters);
  EXPECT_NEAR(memory_lifetime(f.thermal, f.ladder) / (0.5 * (lo + hi)), 1.0, 1e-6);
}

TEST(Lifetime, ShortStorageLifetimeDominates) {
  const auto& f = fx();
  LadderConfig l = f.ladder;
  l.storage_lifetime = 1e-12;
  EXPECT_NEAR(memory_lifetime(narrow(0.0, 5.0), l) / 1e-12, 1.0, 1e-3);
}

TEST(Enhancement, SelectionHelpsAndUnboundedThrows) {
  const auto& f = fx();
  EXPECT_GT(enhancement_factor(narrow(0.0, 10.0), f.thermal, f.ladder), 2.0);
  EXPECT_NEAR(enhancement_factor(f.thermal, f.thermal, f.ladder), 1.0, 1e-12);
  LadderConfig forever = f.ladder;
  forever.storage_lifetime = unbounded_time;
  forever.control_wavelength = forever.signal_wavelength;
  EXPECT_THROW((void)enhancement_factor(f.thermal, f.thermal, forever), std::domain_error);
}

TEST(Decay, SampledCurveAndSummary) {
  const auto& f = fx();
  const auto d = coherence_decay(f.thermal, f.ladder, 100e-9, 201);
  ASSERT_EQ(d.time.size(), 201u);
  EXPECT_NEAR(d.overlap_sq.front(), 1.0, 1e-12);
  for (std::size_t i = 1; i < d.time.size(); ++i) EXPECT_LE(d.overlap_sq[i], d.overlap_sq[i - 1] + 1e-15);
  EXPECT_NEAR(d.dephasing_rate * d.dephasing_time, 1.0, 1e-12);
  EXPECT_LT(d.memory_lifetime, d.dephasing_time);
  EXPECT_THROW((void)coherence_decay(f.thermal, f.ladder, 0.0, 10), std::invalid_argument);
}
