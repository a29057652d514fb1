#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "vsp/atomic_data.hpp"
#include "vsp/species_io.hpp"

using namespace vsp;
using vsp::test::cesium;
using vsp::test::rubidium;

namespace {

double integrate_line(const std::function<double(double)>& f, double center, double width) {
  // Substitution x = center + width * tan(u) keeps the Lorentzian tails finite.
  auto g = [&](double u) {
    const double c = std::cos(u);
    return f(center + width * std::tan(u)) * width / (c * c);
  };
  const double h = std::numbers::pi / 2;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, -h, h, 15, 1e-12);
}

}  // namespace

TEST(Species, CesiumStructure) {
  const Species& cs = cesium();
  EXPECT_EQ(cs.name, "Cs133");
  ASSERT_EQ(cs.ground().levels.size(), 2u);
  EXPECT_EQ(cs.degeneracy(cs.memory_ground_ref()), 9);
  EXPECT_EQ(cs.degeneracy(cs.auxiliary_ref()), 7);
  const Transition& cyc = cs.transition("D2 F=4->F'=5");
  // 351.72196 THz is the tabulated F=4 -> F'=5 frequency.
  EXPECT_NEAR(cyc.omega0 / constants::two_pi * 1e-12, 351.7219607, 1e-6);
  EXPECT_EQ(cs.find_transition("D2 F=3->F'=5"), nullptr);
  EXPECT_THROW((void)cs.ladder("nope"), ConfigError);
}

TEST(Species, DecayOfEveryUpperLevelSumsToLineWidth) {
  for (const Species* s : {&cesium(), &rubidium()})
    for (std::size_t m = 1; m < s->manifolds.size(); ++m)
      for (std::size_t l = 0; l < s->manifolds[m].levels.size(); ++l) {
        const LevelRef up{static_cast<int>(m), static_cast<int>(l)};
        const double sum = s->einstein_a(up, s->auxiliary_ref()) + s->einstein_a(up, s->memory_ground_ref());
        EXPECT_NEAR(sum / s->manifolds[m].linewidth, 1.0, 1e-12) << s->name << " " << s->manifolds[m].line;
      }
}

TEST(Species, EinsteinCoefficientsRoundTrip) {
  for (const auto& t : cesium().transitions) {
    const int gl = cesium().degeneracy(t.lower), gu = cesium().degeneracy(t.upper);
    EXPECT_NEAR(einstein_a_from_b(t.einstein_b, t.omega0, gl, gu) / t.einstein_a, 1.0, 1e-13) << t.label;
  }
}

TEST(Species, CyclingTransitionHasNoLeak) {
  const Species& cs = cesium();
  const LevelRef f5 = cs.transition("D2 F=4->F'=5").upper;
  EXPECT_EQ(cs.einstein_a(f5, cs.auxiliary_ref()), 0.0);
  EXPECT_GT(cs.einstein_a(f5, cs.memory_ground_ref()), 0.0);
}

TEST(Species, RejectsUnknownKeyWithLine) {
  const auto dir = test::scratch("species_bad");
  std::string text = test::read_file(VSP_DATA_DIR "/species/cs133.yaml");
  text.replace(text.find("mass_kg:"), 0, "colour: blue\n");
  test::write_file(dir / "bad.yaml", text);
  try {
    (void)load_species((dir / "bad.yaml").string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GT(e.line(), 0);
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(Species, RejectsStrengthsThatDoNotSumToOne) {
  const auto dir = test::scratch("species_strength");
  std::string text = test::read_file(VSP_DATA_DIR "/species/cs133.yaml");
  const auto pos = text.find("S: \"11/18\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "S: \"12/18\"");
  test::write_file(dir / "bad.yaml", text);
  EXPECT_THROW((void)load_species((dir / "bad.yaml").string()), ConfigError);
}

TEST(Lineshape, UnitArea) {
  const double w0 = 2.2e15, fwhm = constants::mhz_to_rad_s(6.0);
  EXPECT_NEAR(integrate_line([&](double w) { return lorentzian_lineshape(w, w0, fwhm); }, w0, fwhm), 1.0, 1e-10);
  EXPECT_NEAR(integrate_line([&](double w) { return gaussian_lineshape(w, w0, fwhm); }, w0, fwhm), 1.0, 1e-10);
  EXPECT_NEAR(integrate_line([&](double w) { return voigt_lineshape(w, w0, fwhm, 0.3 * fwhm); }, w0, fwhm), 1.0, 1e-4);
}

TEST(Lineshape, VoigtMatchesNumericConvolution) {
  const double g = 2.0, l = 0.7;
  for (double x : {0.0, 0.4, 1.3, 3.0, 8.0}) {
    auto integrand = [&](double u) { return gaussian_lineshape(u, 0.0, g) * lorentzian_lineshape(x, u, l); };
    const double conv = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 20, 1e-13);
    EXPECT_NEAR(voigt_lineshape(x, 0.0, g, l) / conv, 1.0, 2e-4) << "x = " << x;
  }
}

TEST(Lineshape, RejectsNonPositiveWidth) {
  EXPECT_THROW((void)lorentzian_lineshape(0, 0, 0), std::domain_error);
  EXPECT_THROW((void)gaussian_lineshape(0, 0, -1), std::domain_error);
  EXPECT_THROW((void)voigt_lineshape(0, 0, 1, 0), std::domain_error);
}

TEST(Doppler, ShiftDirection) {
  const double w0 = 2.0e15, v = 100.0;
  EXPECT_GT(doppler_shifted_resonance(w0, v, +1), w0);
  EXPECT_LT(doppler_shifted_resonance(w0, v, -1), w0);
  EXPECT_NEAR((doppler_shifted_resonance(w0, v, +1) - w0) / (w0 * v / constants::speed_of_light), 1.0, 1e-6);
}

TEST(Thermal, MaxwellBoltzmannNormalisedWithKnownVariance) {
  ThermalEnsemble e = test::room_temperature();
  const Species& cs = cesium();
  const double sigma = thermal_velocity_sigma(e.temperature, cs.mass);
  EXPECT_NEAR(sigma, 136.11, 0.05);
  using boost::math::quadrature::exp_sinh;
  exp_sinh<double> es;
  // Even integrands over [0, inf).
  const double norm = 2 * es.integrate([&](double v) { return maxwell_boltzmann_pdf(v, e, cs); });
  const double var = 2 * es.integrate([&](double v) { return v * v * maxwell_boltzmann_pdf(v, e, cs); });
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_NEAR(var / (sigma * sigma), 1.0, 1e-10);
}

TEST(Thermal, CesiumVapourDensityAt25C) {
  // Solid-phase log10(P / torr) = 7.592 - 3999 / T; the tabulated 25 C value
  // 1.488e-6 torr comes from a finer fit and agrees to 2%.
  const double T = 298.15;
  const double model = std::pow(10.0, 7.592 - 3999.0 / T) * constants::torr / (constants::boltzmann * T);
  EXPECT_NEAR(vapour_number_density(cesium(), T) / model, 1.0, 1e-12);
  const double table = 1.488e-6 * constants::torr / (constants::boltzmann * T);
  EXPECT_NEAR(vapour_number_density(cesium(), T) / table, 1.0, 0.02);
  EXPECT_GT(vapour_number_density(cesium(), 363.15), 100 * vapour_number_density(cesium(), 296.15));
}

TEST(Drift, ThreeSigmaDistanceAndRate) {
  ThermalEnsemble e = test::room_temperature();
  BeamGeometry g;
  const auto d = drift_estimates(g, e, cesium(), 2e-6);
  EXPECT_NEAR(d.three_sigma_distance * 1e3, 0.82, 0.02);
  EXPECT_GT(d.drift_rate, 1.4e5 / 2);
  EXPECT_LT(d.drift_rate, 1.4e5 * 2);
  EXPECT_THROW((void)drift_estimates(g, e, cesium(), 0.0), std::domain_error);
  g.probe_radius = 2e-3;
  EXPECT_THROW((void)drift_estimates(g, e, cesium(), 1e-6), std::domain_error);
}
