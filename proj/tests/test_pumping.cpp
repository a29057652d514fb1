#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

#include "test_util.hpp"
#include "vsp/pumping.hpp"

using namespace vsp;
using vsp::test::cesium;

namespace {

const double six_mhz = constants::mhz_to_rad_s(6.0);

LaserStage stage_on(const std::string& label, StageRole role, double power, double duration, double velocity = 0.0) {
  return make_stage(role, cesium().transition(label), power, six_mhz, velocity, duration, 1.5e-3);
}

double max_relative_drift(const PopulationState& a, const PopulationState& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ta = total(a.classes[i]);
    if (ta > 0.0) worst = std::max(worst, std::abs(total(b.classes[i]) - ta) / ta);
  }
  return worst;
}

}  // namespace

TEST(VelocityGrid, UniformTrapezoid) {
  const auto g = VelocityGrid::uniform(10.0, 21);
  EXPECT_EQ(g.size(), 21u);
  EXPECT_DOUBLE_EQ(g.velocity(0), -10.0);
  EXPECT_DOUBLE_EQ(g.velocity(10), 0.0);
  EXPECT_DOUBLE_EQ(g.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(g.weight(5), 1.0);
  std::vector<double> ones(21, 1.0);
  EXPECT_DOUBLE_EQ(g.integrate(ones), 20.0);
  EXPECT_THROW(VelocityGrid::uniform(1.0, 1), std::invalid_argument);
  EXPECT_THROW(VelocityGrid({0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST(ThermalState, DensityAndDegeneracySplit) {
  const auto e = test::room_temperature();
  const auto s = thermal_state(e, cesium(), test::grid_for(e, cesium()));
  EXPECT_NEAR((s.integrated(aux_slot) + s.integrated(ground_slot)) / e.density, 1.0, 1e-7);
  EXPECT_NEAR(s.integrated(ground_slot) / s.integrated(aux_slot), 9.0 / 7.0, 1e-12);
  EXPECT_EQ(s.integrated(excited1_slot), 0.0);
}

TEST(OverlapRate, LorentzianMatchesNumericIntegral) {
  const Transition& t = cesium().transition("D1 F=3->F'=4");
  const auto st = stage_on("D1 F=3->F'=4", StageRole::pump_back, 4.1e-3, 1e-6, -100.0);
  for (double v : {-100.0, -95.0, -80.0, 0.0}) {
    const double res = doppler_shifted_resonance(t.omega0, v, +1);
    auto f = [&](double u) {
      const double w = st.center_omega + 3 * six_mhz * std::tan(u);
      const double c = std::cos(u);
      return spectral_intensity(st, w) * lorentzian_lineshape(w, res, t.linewidth) * 3 * six_mhz / (c * c);
    };
    const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -std::numbers::pi / 2,
                                                                                      std::numbers::pi / 2, 20, 1e-13);
    EXPECT_NEAR(overlap_rate(st, t, v) / (t.einstein_b / constants::speed_of_light * num), 1.0, 1e-8) << v;
  }
}

TEST(OverlapRate, GaussianProfileMatchesNumericIntegral) {
  const Transition& t = cesium().transition("D1 F=3->F'=4");
  auto st = stage_on("D1 F=3->F'=4", StageRole::pump_back, 1e-3, 1e-6);
  st.profile = LaserProfile::gaussian;
  for (double v : {0.0, 4.0, 10.0}) {
    const double res = doppler_shifted_resonance(t.omega0, v, +1);
    auto f = [&](double w) { return spectral_intensity(st, w) * lorentzian_lineshape(w, res, t.linewidth); };
    const double span = 12 * six_mhz;
    const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, st.center_omega - span,
                                                                                      st.center_omega + span, 25, 1e-13);
    EXPECT_NEAR(overlap_rate(st, t, v) / (t.einstein_b / constants::speed_of_light * num), 1.0, 5e-4) << v;
  }
}

TEST(OverlapRate, PeaksAtSelectedClass) {
  const Transition& t = cesium().transition("D1 F=3->F'=4");
  const auto st = stage_on("D1 F=3->F'=4", StageRole::pump_back, 1e-3, 1e-6, -100.0);
  EXPECT_NEAR(selected_velocity(st, t), -100.0, 1e-6);
  EXPECT_GT(overlap_rate(st, t, -100.0), overlap_rate(st, t, -99.0));
  EXPECT_GT(overlap_rate(st, t, -100.0), overlap_rate(st, t, -101.0));
  EXPECT_EQ(overlap_rate(dark_stage(1e-6), t, 0.0), 0.0);
}

TEST(RateModel, DerivativesConserveEachClass) {
  const auto st = stage_on("D2 F=4->F'=4", StageRole::pump, 20e-3, 1e-3);
  const auto model = RateModel::for_stage(cesium(), st);
  const ClassPopulation n{0.3, 0.5, 0.15, 0.05};
  ClassPopulation d{};
  model.derivatives(n, model.drive(st, 3.0), d);
  EXPECT_NEAR(d[0] + d[1] + d[2] + d[3], 0.0, 1e-9 * std::abs(d[2]));
}

TEST(RateModel, RejectsTransitionOutsideModel) {
  const auto pump = stage_on("D2 F=4->F'=4", StageRole::pump, 1e-3, 1e-6);
  const auto model = RateModel::for_stage(cesium(), pump);
  const auto other = stage_on("D2 F=4->F'=5", StageRole::pump, 1e-3, 1e-6);
  EXPECT_THROW((void)model.drive(other, 0.0), ConfigError);
}

// Cycling transition: F'=5 decays only to F=4, so the class reaches the
// closed two-level steady state n_e / N = R / (A + R (1 + g_g / g_e)).
TEST(Evolution, CyclingSteadyState) {
  const auto st = stage_on("D2 F=4->F'=5", StageRole::pump, 0.5e-3, 20e-6);
  const auto model = RateModel::for_stage(cesium(), st);
  const Drive d = model.drive(st, 0.0);
  const double R = d.rate;
  const double A = model.decay_to_ground(0);
  const double r = 9.0 / 11.0;
  const double N = 1e14;
  ClassPopulation n{2e14, N, 0.0, 0.0};
  evolve_class(n, d, model, st.duration, EvolveControls{}, 0);
  const double ne = N * R / (A + R * (1.0 + r));
  EXPECT_NEAR(n[excited1_slot] / ne, 1.0, 1e-6);
  EXPECT_NEAR(n[ground_slot] / (N - ne), 1.0, 1e-6);
  EXPECT_NEAR(n[aux_slot] / 2e14, 1.0, 1e-12);
}

TEST(Evolution, DarkDecayIsExponential) {
  const auto pump = stage_on("D2 F=4->F'=4", StageRole::pump, 1e-3, 1e-6);
  const auto model = RateModel::for_stage(cesium(), pump);
  ClassPopulation n{0.0, 0.0, 1.0, 0.0};
  const double t = 40e-9;
  evolve_class(n, Drive{}, model, t, EvolveControls{}, 0);
  EXPECT_NEAR(n[excited1_slot] / std::exp(-model.decay_total(0) * t), 1.0, 1e-7);
  const double branch = model.decay_to_aux(0) / model.decay_total(0);
  EXPECT_NEAR(n[aux_slot] / ((1.0 - n[excited1_slot]) * branch), 1.0, 1e-7);
}

TEST(Evolution, PumpEmptiesMemoryGroundAndConserves) {
  const auto e = test::room_temperature();
  const auto s0 = thermal_state(e, cesium(), test::grid_for(e, cesium(), 201));
  const auto st = stage_on("D2 F=4->F'=4", StageRole::pump, 20e-3, 2e-3);
  const auto s1 = evolve_stage(s0, st, cesium());
  EXPECT_LT(s1.integrated(ground_slot) / e.density, 1e-3);
  EXPECT_LT(max_relative_drift(s0, s1), 1e-9);
  EXPECT_DOUBLE_EQ(s1.time, 2e-3);
}

TEST(Evolution, SequenceConservesAndIsThreadIndependent) {
  const auto e = test::room_temperature();
  const auto s0 = thermal_state(e, cesium(), test::grid_for(e, cesium(), 201));
  PulseSequence seq;
  seq.preamble.push_back(stage_on("D2 F=4->F'=4", StageRole::pump, 20e-3, 500e-6));
  seq.stages.push_back(stage_on("D1 F=3->F'=4", StageRole::pump_back, 4.1e-3, 2e-6, -100.0));
  seq.stages.push_back(dark_stage(1.5e-6));
  seq.stages.push_back(stage_on("D2 F=4->F'=4", StageRole::reset, 20e-3, 100e-6));
  seq.repeat = 2;
  EvolveControls one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = run_sequence(s0, seq, cesium(), one);
  const auto b = run_sequence(s0, seq, cesium(), four);
  ASSERT_EQ(a.snapshots.size(), 7u);
  EXPECT_EQ(a.roles[1], StageRole::pump_back);
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    EXPECT_LT(max_relative_drift(s0, a.snapshots[k]), 1e-9);
    for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_EQ(a.snapshots[k].classes[i], b.snapshots[k].classes[i]);
  }
  // The pump-back repopulates F=4, the reset empties it again.
  EXPECT_GT(a.snapshots[1].integrated(ground_slot), 100 * a.snapshots[0].integrated(ground_slot));
  EXPECT_LT(a.snapshots[3].integrated(ground_slot), a.snapshots[1].integrated(ground_slot));
}

TEST(Evolution, DriftRelaxesTowardsThermal) {
  const auto e = test::room_temperature();
  const auto grid = test::grid_for(e, cesium(), 21);
  const auto thermal = std::make_shared<const PopulationState>(thermal_state(e, cesium(), grid));
  PopulationState s = *thermal;
  for (auto& c : s.classes) {
    c[aux_slot] += c[ground_slot];
    c[ground_slot] = 0.0;
  }
  EvolveControls ctl;
  ctl.drift_rate = 1.4e5;
  ctl.thermal_reference = thermal;
  const double t = 5e-6;
  const auto out = evolve_stage(s, dark_stage(t), cesium(), ctl);
  const double expected = 1.0 - std::exp(-ctl.drift_rate * t);
  for (std::size_t i = 0; i < out.size(); ++i)
    EXPECT_NEAR(out.classes[i][ground_slot] / thermal->classes[i][ground_slot], expected, 1e-7);
}

TEST(Stage, Validation) {
  LaserStage s;
  s.power = 1e-3;
  EXPECT_THROW(s.validate(), std::invalid_argument);  // no transition
  s = dark_stage(-1.0);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  PulseSequence empty;
  EXPECT_THROW(empty.validate(), std::invalid_argument);
}
