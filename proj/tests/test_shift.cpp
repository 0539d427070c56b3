#include <catch2/catch_amalgamated.hpp>

#include "cbf/shift.hpp"
#include "oracles.hpp"

using namespace cbf;

namespace {
// benchmark schedule: amplitude 4 around offset 9, period parameter 20
ShiftSchedule bench_sin() { return sinusoid_shift(9.0, 4.0, 20.0, 0.0); }
ClassKe bench_alpha() {
  ClassKe a;
  a.c = 2.0;
  a.gamma_floor = 2.0;
  return a;
}
}  // namespace

TEST_CASE("shift values at known instants", "[shift]") {
  const auto s = bench_sin();
  CHECK(lambda_eval(s, 0.0) == Catch::Approx(9.0));
  CHECK(lambda_eval(s, 10.0) == Catch::Approx(5.0));  // |sin| peak
  CHECK(lambda_eval(s, 20.0) == Catch::Approx(9.0).margin(1e-12));
  for (double t : {0.0, 3.7, 11.2, 19.9, 35.0}) {
    const double lam = lambda_eval(s, t);
    CHECK(lam >= 5.0 - 1e-12);
    CHECK(lam <= 9.0 + 1e-12);
  }
  const auto c = constant_shift(2.5);
  CHECK(lambda_eval(c, 0.0) == 2.5);
  CHECK(lambda_eval(c, 123.0) == 2.5);
  CHECK(lambda_dot(c, 7.0) == 0.0);
}

TEST_CASE("shift slope: smooth points, kinks, finite differences", "[shift]") {
  const auto s = bench_sin();
  // kinks of |sin| take the conservative one-sided slope
  CHECK(lambda_dot(s, 0.0) == Catch::Approx(-4.0 * M_PI / 20.0).epsilon(1e-12));
  CHECK(lambda_dot(s, 20.0) == Catch::Approx(-0.6283185307).epsilon(1e-9));
  // smooth point
  CHECK(lambda_dot(s, 5.0) == Catch::Approx(-0.4442882938).epsilon(1e-9));
  // rising branch after the peak
  CHECK(lambda_dot(s, 15.0) > 0.0);

  for (double t : {1.1, 4.0, 8.3, 13.7, 26.0}) {
    const auto fd = oracle::numeric_gradient(
        [&](const Eigen::VectorXd& p) { return lambda_eval(s, p[0]); },
        Eigen::VectorXd::Constant(1, t));
    CHECK(lambda_dot(s, t) == Catch::Approx(fd[0]).epsilon(1e-6));
  }
}

TEST_CASE("kink enumeration covers the horizon", "[shift]") {
  const auto ks = shift_kinks(bench_sin(), 40.0);
  REQUIRE(ks.size() == 3);
  CHECK(ks[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(ks[1] == Catch::Approx(20.0));
  CHECK(ks[2] == Catch::Approx(40.0));

  // phase offset moves the kinks to sigma*tau_p/pi + j*tau_p
  const auto off = shift_kinks(sinusoid_shift(9.0, 4.0, 20.0, M_PI / 2.0), 40.0);
  REQUIRE(off.size() == 2);
  CHECK(off[0] == Catch::Approx(10.0));
  CHECK(off[1] == Catch::Approx(30.0));

  CHECK(shift_kinks(constant_shift(1.0), 40.0).empty());
}

TEST_CASE("shiftability certificate on the benchmark schedule", "[shift]") {
  const auto rep = check_shiftable(bench_sin(), bench_alpha(), ShiftBound{9.0}, 40.0);
  CHECK(rep.pass);
  CHECK(rep.amplitude_ok);
  CHECK(rep.bounds_ok);
  CHECK(rep.certificate_ok);
  CHECK(rep.samples >= 10001);
  CHECK(rep.kink_instants.size() == 3);
  // pointwise worst margin sits on the falling branch near t ~ 1.3; the
  // margin is tau_p-periodic so the argmin may land in any period
  CHECK(rep.margin == Catch::Approx(1.319).margin(0.005));
  const double phase = std::fmod(rep.worst_t, 20.0);
  CHECK(phase > 0.0);
  CHECK(phase < 3.0);
  // decoupled bound: min slope minus the saturated rate at lambda = 5
  CHECK(rep.conservative_margin == Catch::Approx(1.0682488).margin(5e-4));
  CHECK(rep.conservative_margin <= rep.margin);

  const auto tight = check_shiftable(bench_sin(), bench_alpha(), ShiftBound{3.0}, 40.0);
  CHECK_FALSE(tight.pass);  // lambda exceeds the stated ceiling
  CHECK_FALSE(tight.bounds_ok);

  ShiftSchedule bad = bench_sin();
  bad.r_max = 10.0;  // amplitude above offset drives lambda negative
  CHECK_FALSE(check_shiftable(bad, bench_alpha(), ShiftBound{9.0}, 40.0).amplitude_ok);
}

TEST_CASE("constant schedules certify trivially", "[shift]") {
  const auto rep = check_shiftable(constant_shift(0.0), bench_alpha(), ShiftBound{9.0}, 30.0);
  CHECK(rep.pass);
  CHECK(rep.margin == Catch::Approx(0.0).margin(1e-12));  // dot = alpha(0) = 0

  const auto pos = check_shiftable(constant_shift(2.0), bench_alpha(), ShiftBound{9.0}, 30.0);
  CHECK(pos.pass);
  // dot = 0, so the margin is -alpha(-2) = 4*(1/2 - 1/(1+e))
  CHECK(pos.margin == Catch::Approx(0.9242343142).epsilon(1e-8));

  const auto neg = check_shiftable(constant_shift(-1.0), bench_alpha(), ShiftBound{9.0}, 30.0);
  CHECK_FALSE(neg.bounds_ok);
}

TEST_CASE("faster periods trade away the certificate margin", "[shift]") {
  const auto a = bench_alpha();
  double prev = -std::numeric_limits<double>::infinity();
  for (double tau : {6.0, 10.0, 20.0, 30.0}) {
    const auto rep = check_shiftable(sinusoid_shift(9.0, 4.0, tau, 0.0), a, ShiftBound{9.0}, 40.0);
    CHECK(rep.margin >= prev);
    prev = rep.margin;
    if (tau == 6.0) CHECK_FALSE(rep.pass);  // slope outruns the allowed rate
    if (tau >= 10.0) CHECK(rep.pass);
  }
}

TEST_CASE("shifted surface query adds the schedule value", "[shift]") {
  CbfGrid g;
  g.axes = {GridAxis{0.0, 1.0, 2, false}, GridAxis{0.0, 1.0, 2, false}};
  g.values = {0.0, 1.0, 2.0, 3.0};  // value = 2*x0 + x1 at the corners
  g.feas_bits = {0x0F};
  g.meta.spec.htilde = 1.0;
  const auto s = bench_sin();
  CHECK(shifted_value(g, s, 0.0, make_vec({0.5, 0.5})) == Catch::Approx(1.5 + 9.0));
  CHECK(shifted_value(g, s, 10.0, make_vec({0.0, 0.0})) == Catch::Approx(0.0 + 5.0));
  CHECK_THROWS_AS(shifted_value(g, s, 0.0, make_vec({2.0, 0.0})), std::out_of_range);
}

TEST_CASE("schedule serialization round trip", "[shift]") {
  json j = bench_sin();
  CHECK(j.at("kind") == "sinusoid_abs");
  ShiftSchedule s = j.get<ShiftSchedule>();
  CHECK(s.r == 9.0);
  CHECK(s.r_max == 4.0);
  CHECK(s.tau_p == 20.0);
  CHECK(s.sigma_shift == 0.0);

  json jc = constant_shift(3.0);
  CHECK(jc.at("kind") == "constant");
  CHECK(jc.get<ShiftSchedule>().lambda0 == 3.0);

  json bad = {{"kind", "triangle"}};
  CHECK_THROWS_AS(bad.get<ShiftSchedule>(), std::invalid_argument);
}
