#include <gtest/gtest.h>

#include <cmath>

#include "vsp/ode.hpp"

using namespace vsp::ode;

TEST(Dopri5, ExponentialDecay) {
  State<1> y{1.0};
  Controls c;
  const auto st = integrate_dopri5<1>([](double, const State<1>& x, State<1>& d) { d[0] = -3.0 * x[0]; }, y, 0.0, 2.0, c);
  EXPECT_EQ(st.status, Status::ok);
  EXPECT_NEAR(y[0] / std::exp(-6.0), 1.0, 1e-7);
  EXPECT_DOUBLE_EQ(st.t_end, 2.0);
}

TEST(Dopri5, HarmonicOscillatorPhase) {
  State<2> y{1.0, 0.0};
  Controls c;
  c.rtol = 1e-10;
  c.atol = 1e-14;
  auto rhs = [](double, const State<2>& x, State<2>& d) {
    d[0] = x[1];
    d[1] = -x[0];
  };
  integrate_dopri5<2>(rhs, y, 0.0, 10.0, c);
  EXPECT_NEAR(y[0], std::cos(10.0), 1e-8);
  EXPECT_NEAR(y[1], -std::sin(10.0), 1e-8);
}

TEST(Dopri5, TimeDependentRhs) {
  State<1> y{0.0};
  Controls c;
  integrate_dopri5<1>([](double t, const State<1>&, State<1>& d) { d[0] = std::cos(t); }, y, 0.0, 1.5, c);
  EXPECT_NEAR(y[0], std::sin(1.5), 1e-9);
}

TEST(Dopri5, MonitorStopsEarly) {
  State<1> y{1.0};
  Controls c;
  auto stop = [](State<1>& x) { return x[0] < 0.5; };
  const auto st =
      integrate_dopri5<1>([](double, const State<1>& x, State<1>& d) { d[0] = -x[0]; }, y, 0.0, 10.0, c, stop);
  EXPECT_LT(y[0], 0.5);
  EXPECT_LT(st.t_end, 10.0);
  EXPECT_NEAR(y[0], std::exp(-st.t_end), 1e-8);
}

TEST(Dopri5, MaxStepIsRespected) {
  State<1> y{0.0};
  Controls c;
  c.max_step = 0.01;
  const auto st = integrate_dopri5<1>([](double, const State<1>&, State<1>& d) { d[0] = 1.0; }, y, 0.0, 1.0, c);
  EXPECT_GE(st.accepted, 100);
  EXPECT_NEAR(y[0], 1.0, 1e-14);
}

TEST(Dopri5, ReportsNonFiniteState) {
  State<1> y{1.0};
  Controls c;
  const auto st =
      integrate_dopri5<1>([](double, const State<1>&, State<1>& d) { d[0] = std::nan(""); }, y, 0.0, 1.0, c);
  EXPECT_EQ(st.status, Status::non_finite);
}

TEST(Dopri5, ReportsStepBudget) {
  State<1> y{1.0};
  Controls c;
  c.max_steps = 5;
  c.max_step = 1e-3;
  const auto st = integrate_dopri5<1>([](double, const State<1>& x, State<1>& d) { d[0] = -x[0]; }, y, 0.0, 1.0, c);
  EXPECT_EQ(st.status, Status::too_many_steps);
}

TEST(Dopri5, EmptySpanIsNoOp) {
  State<1> y{2.0};
  const auto st = integrate_dopri5<1>([](double, const State<1>&, State<1>& d) { d[0] = 1.0; }, y, 1.0, 1.0, Controls{});
  EXPECT_EQ(y[0], 2.0);
  EXPECT_EQ(st.accepted, 0);
}
