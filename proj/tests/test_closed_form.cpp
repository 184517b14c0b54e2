#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "qvdw/closed_form.hpp"

using namespace qvdw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PairSystem single_line(double nu_a_cm = 12578.95, double nu_b_cm = 12985.17,
                       double mu_debye = 1.0) {
  auto a = TransitionLine::from_cm(nu_a_cm, mu_debye, 6.0e6);
  auto b = TransitionLine::from_cm(nu_b_cm, mu_debye, 6.0e6);
  return PairSystem(a, {b}, {0, 0, 1}, 30e-6, "single");
}

}  // namespace

TEST_CASE("dimensionless core against frozen independent values") {
  DipoleContractions s{0.31, 0.12, 0.57, OrientationMode::fixed};
  const double theta = (10.0 - 9.3) * 2.6;
  CHECK_THAT(cf::core(10.0, 9.3, theta, s),
             WithinRel(1205.1843621865133, 1e-13));

  DipoleContractions iso{2.0 / 9.0, 2.0 / 9.0, 2.0 / 3.0,
                         OrientationMode::isotropic};
  CHECK_THAT(cf::core(12.0, 11.5, (12.0 - 11.5) * 3.0, iso),
             WithinRel(-838.92772705505584, 1e-13));
}

TEST_CASE("full energy at a frozen reference point") {
  const auto sys = single_line();
  const auto r = energy_full(sys, 3.0e-12);
  CHECK_THAT(r.value, WithinRel(2.0379859584556483e-43, 1e-10));
  CHECK_THAT(r.value_scaled, WithinRel(119885524.92433504, 1e-10));
  CHECK(r.method == "closed-form");
  CHECK_THAT(r.error_scale, WithinRel(0.031780479828759996, 1e-12));
}

TEST_CASE("energy vanishes identically before the round-trip time") {
  const auto sys = single_line();
  const double R = *sys.R_default;
  const double front = 2.0 * R / si::c;
  CHECK(energy_full(sys, 1.9 * R / si::c).value == 0.0);
  CHECK(energy_full(sys, front).value == 0.0);  // the front itself counts as before
  CHECK(energy_full(sys, 0.0).value == 0.0);
  CHECK(energy_full_at(sys, R, front * 1.0000001).value != 0.0);

  std::mt19937 rng(8);
  std::uniform_real_distribution<double> Rs(1e-6, 100e-6), u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double Rm = Rs(rng);
    const double T = u(rng) * 2.0 * Rm / si::c;
    CHECK(energy_full_at(sys, Rm, T).value == 0.0);
  }
}

TEST_CASE("joule and scaled outputs stay consistent") {
  const auto sys = single_line();
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> Rs(5e-6, 60e-6), Ts(1.0, 4.0);
  for (int i = 0; i < 50; ++i) {
    const double Rm = Rs(rng);
    const double T = Ts(rng) * 2.0 * Rm / si::c;
    const auto r = energy_full_at(sys, Rm, T);
    const double mu4 = sqr(sqr(si::debye));
    const double u0 = mu4 / (sqr(4.0 * pi * si::eps0) * si::hbar *
                             std::abs(sys.mean_detuning()));
    if (r.value == 0.0) continue;
    CHECK_THAT(r.value_scaled, WithinRel(r.value * std::pow(Rm, 6) / u0, 1e-12));
  }
}

TEST_CASE("scaled output depends on dipoles only through orientation") {
  const auto base = single_line();
  const auto rescaled = single_line(12578.95, 12985.17, 3.0);
  const double T = 3.0e-12;
  const auto r0 = energy_full(base, T);
  const auto r1 = energy_full(rescaled, T);
  CHECK_THAT(r1.value_scaled, WithinRel(r0.value_scaled, 1e-12));
  CHECK_THAT(r1.value, WithinRel(r0.value * std::pow(3.0, 4), 1e-12));
}

TEST_CASE("far field matches the full form where the dropped terms vanish") {
  // x_a = 500 pi and tau = 4 put both retarded phases on cosine antinodes,
  // so only the x^2 cosine corrections of order x^-2 are left out.
  const auto sys = single_line(12578.95, 0.97 * 12578.95);
  const double R = 500.0 * pi / sys.atom_A.k();
  const double T = 4.0 * R / si::c;
  const auto full = energy_full_at(sys, R, T);
  const auto ff = energy_far_field_at(sys, R, T);
  CHECK(ff.method == "far-field");
  CHECK_THAT(ff.value, WithinRel(full.value, 1e-4));
}

TEST_CASE("far field stays within the expected truncation error elsewhere") {
  const auto sys = single_line(12578.95, 0.97 * 12578.95);
  const double R = 1000.0 / sys.atom_A.k();
  const double T = 3.0 * R / si::c;
  const auto full = energy_full_at(sys, R, T);
  const auto ff = energy_far_field_at(sys, R, T);
  CHECK_THAT(ff.value, WithinRel(full.value, 1e-2));

  // the product form replaces one fourth-power weight, an error of the order
  // of the frequency mismatch
  REQUIRE(ff.value_factorized.has_value());
  const double xa = sys.atom_A.k() * R, xb = sys.atom_B_lines[0].k() * R;
  const double pref = 1.0 / (sqr(4.0 * pi * si::eps0) * si::hbar *
                             std::abs(sys.detunings[0]));
  const double scale =
      (2.0 / 9.0) * sqr(sqr(si::debye)) * (sqr(sqr(xa)) + sqr(sqr(xb))) * pref /
      std::pow(R, 6);
  CHECK(std::abs(*ff.value_factorized - ff.value) < 4.0 * ff.error_scale * scale);
  CHECK(std::abs(*ff.value_factorized - ff.value) > 0.0);
}

TEST_CASE("product form has its node exactly at the front") {
  CHECK(cf::far_field_factorized(40.0, 38.5, 2.0, 2.0 / 9.0) == 0.0);
}

TEST_CASE("far-field two-product rewriting is exact") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> xs(10.0, 2000.0), th(-20.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const double xa = xs(rng), xb = 0.95 * xa, theta = th(rng);
    const double direct = cf::far_field_core(xa, xb, theta, 2.0 / 9.0);
    const double rewritten = cf::far_field_two_product(xa, xb, theta, 2.0 / 9.0);
    const double scale = (2.0 / 9.0) * (sqr(sqr(xa)) + sqr(sqr(xb)));
    CHECK_THAT(direct, WithinAbs(rewritten, 1e-12 * scale));
  }
}

TEST_CASE("far field refuses short separations") {
  const auto sys = single_line();
  const double R = 9.9 / sys.atom_A.k();
  CHECK_THROWS_AS(energy_far_field_at(sys, R, 3.0 * R / si::c),
                  FarFieldDomainError);
}

TEST_CASE("cosine-group reduction of the time-independent part") {
  DipoleContractions s{0.31, 0.12, 0.57, OrientationMode::fixed};
  const double x = pi / 2;  // cos 2x = -1, sin 2x = 0
  const double expect =
      -(s.bb - x * x * (s.bb + 2.0 * s.ab) + sqr(sqr(x)) * s.aa);
  CHECK_THAT(cf::stationary_group(x, s), WithinRel(expect, 1e-13));

  // far out, only the transverse fourth-power cosine term is left
  const double xl = 5000.0;
  CHECK_THAT(cf::stationary_group(xl, s),
             WithinRel(s.aa * sqr(sqr(xl)) * std::cos(2.0 * xl), 1e-3));
}

TEST_CASE("adiabatic part equals the long-window mean of the full energy") {
  const auto sys = single_line();
  const double R = *sys.R_default;
  const double front = 2.0 * R / si::c;
  const double dabs = std::abs(sys.detunings[0]);
  const double T0 = front * 1.05;
  const double dT = 200.0 * pi / dabs;

  const auto ad = energy_adiabatic(sys);
  CHECK(ad.method == "adiabatic");

  SECTION("trapezoidal average as an oracle") {
    const int n = 40000;
    double acc = 0.5 * (energy_full(sys, T0).value +
                        energy_full(sys, T0 + dT).value);
    for (int i = 1; i < n; ++i)
      acc += energy_full(sys, T0 + dT * i / n).value;
    const double mean = acc / n;
    CHECK_THAT(mean, WithinRel(ad.value, 1e-2));
    // the analytic window mean reproduces the trapezoidal one
    const auto win = time_average_at(sys, R, T0, dT);
    CHECK_THAT(win.value, WithinRel(mean, 1e-4));
  }

  SECTION("whole-period windows agree with the adiabatic part to full precision") {
    const double dTp = 2.0 * pi * 100.0 / dabs;
    const auto win = time_average_at(sys, R, T0, dTp);
    CHECK_THAT(win.value, WithinRel(ad.value, 1e-10));
  }

  SECTION("windows straddling the front include the silent stretch") {
    const double dT2 = 4.0 * pi / dabs;  // short enough to keep T >= 0
    const double lo = front - 0.25 * dT2;
    REQUIRE(lo > 0.0);
    const auto win = time_average_at(sys, R, lo, dT2);
    const int n = 40000;
    double acc = 0.5 * (energy_full(sys, lo).value +
                        energy_full(sys, lo + dT2).value);
    for (int i = 1; i < n; ++i)
      acc += energy_full(sys, lo + dT2 * i / n).value;
    CHECK_THAT(win.value, WithinRel(acc / n, 1e-3));
  }

  SECTION("windows entirely before the front average to zero") {
    CHECK(time_average_at(sys, R, 0.0, 0.5 * front).value == 0.0);
  }
}

TEST_CASE("difference from the adiabatic part is a single tone at the detuning") {
  const auto sys = single_line();
  const double R = *sys.R_default;
  const double dabs = std::abs(sys.detunings[0]);
  const double T0 = 2.0 * R / si::c * 1.1;
  const int periods = 20, n = 2048;
  const double span = periods * 2.0 * pi / dabs;
  const auto ad = energy_adiabatic(sys);

  std::vector<double> sig(n);
  for (int i = 0; i < n; ++i)
    sig[i] = energy_full(sys, T0 + span * i / n).value - ad.value;

  // plain DFT; the tone lies exactly on bin `periods`, so no leakage
  double total = 0, tone = 0;
  for (int k = 1; k <= n / 2; ++k) {
    double re = 0, im = 0;
    for (int i = 0; i < n; ++i) {
      re += sig[i] * std::cos(2.0 * pi * k * i / n);
      im -= sig[i] * std::sin(2.0 * pi * k * i / n);
    }
    const double p = re * re + im * im;
    total += p;
    if (k == periods) tone = p;
  }
  CHECK(tone > 0.99 * total);
}

TEST_CASE("first swing of the retarded term peaks one half-period after the front") {
  // 2 k_A R an even multiple of pi makes the time-independent part sit on a
  // positive cosine antinode, so the first magnitude maximum lands where the
  // retarded cosine reaches its trough.
  const auto sys = single_line(12578.95, 0.97 * 12578.95);
  const double R = 20.0 * pi / sys.atom_A.k();
  const double front = 2.0 * R / si::c;
  const double dabs = std::abs(sys.detunings[0]);

  SECTION("far-field evaluator, fine grid") {
    const int n = 4000;
    const double span = 2.0 * pi / dabs;
    int first_max = -1;
    double prev = std::abs(energy_far_field_at(sys, R, front * (1 + 1e-12)).value);
    for (int i = 1; i <= n; ++i) {
      const double v =
          std::abs(energy_far_field_at(sys, R, front + span * i / n).value);
      if (v < prev) {
        first_max = i - 1;
        break;
      }
      prev = v;
    }
    REQUIRE(first_max > 0);
    const double t_peak = front + span * first_max / n;
    CHECK_THAT(t_peak - front, WithinAbs(pi / dabs, 1.01 * span / n));
  }

  SECTION("full evaluator, grid coarse enough to absorb the 1/x phase shift") {
    const int n = 80;
    const double span = 2.0 * pi / dabs;
    int first_max = -1;
    double prev = std::abs(energy_full_at(sys, R, front * (1 + 1e-12)).value);
    for (int i = 1; i <= n; ++i) {
      const double v =
          std::abs(energy_full_at(sys, R, front + span * i / n).value);
      if (v < prev) {
        first_max = i - 1;
        break;
      }
      prev = v;
    }
    REQUIRE(first_max > 0);
    const double t_peak = front + span * first_max / n;
    CHECK_THAT(t_peak - front, WithinAbs(pi / dabs, 1.01 * span / n));
  }
}

TEST_CASE("excitation probability of the partner atom") {
  const auto sys = single_line();
  const double R = *sys.R_default;
  const double dabs = std::abs(sys.detunings[0]);
  const double t1 = R / si::c;
  CHECK(excitation_probability(sys, 0.5 * t1) == 0.0);
  CHECK(excitation_probability(sys, t1) == 0.0);
  CHECK_THAT(excitation_probability(sys, t1 + pi / dabs), WithinRel(1.0, 1e-12));
  CHECK_THAT(excitation_probability(sys, t1 + 2.0 * pi / dabs),
             WithinAbs(0.0, 1e-12));
  for (double f : {0.3, 0.7, 1.9, 4.2}) {
    const double p = excitation_probability(sys, t1 * (1.0 + f));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("probability is only defined for a single line") {
  auto a = TransitionLine::from_cm(12578.95, 1.0, 0.0);
  std::vector<TransitionLine> b{TransitionLine::from_cm(12985.17, 1.0, 0.0),
                                TransitionLine::from_cm(13045.876, 1.0, 0.0)};
  const PairSystem sys(a, b, {0, 0, 1}, 30e-6);
  CHECK_THROWS_AS(excitation_probability(sys, 1e-12), MultiLineError);
}

TEST_CASE("multi-line energies sum the per-line contributions") {
  auto a = TransitionLine::from_cm(12578.95, 1.0, 0.0);
  auto b1 = TransitionLine::from_cm(12985.17, 1.0, 0.0);
  auto b2 = TransitionLine::from_cm(13045.876, 1.0, 0.0);
  const PairSystem both(a, {b1, b2}, {0, 0, 1}, 30e-6);
  const PairSystem only1(a, {b1}, {0, 0, 1}, 30e-6);
  const PairSystem only2(a, {b2}, {0, 0, 1}, 30e-6);
  const double T = 3.0e-12;
  CHECK_THAT(energy_full(both, T).value,
             WithinRel(energy_full(only1, T).value + energy_full(only2, T).value,
                       1e-12));
  CHECK_THAT(energy_adiabatic(both).value,
             WithinRel(energy_adiabatic(only1).value +
                           energy_adiabatic(only2).value,
                       1e-12));
}
