#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "qvdw/contour.hpp"
#include "qvdw/richardson.hpp"

using namespace qvdw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DipoleContractions iso_unit() {
  return {2.0 / 9, 2.0 / 9, 2.0 / 3, OrientationMode::isotropic};
}

DipoleContractions random_weights(std::mt19937& rng) {
  // alternate isotropic-pattern and fixed-orientation-pattern weights
  std::uniform_real_distribution<double> mag(0.2, 1.5);
  std::uniform_real_distribution<double> ch(-1.0, 1.0);
  if (rng() & 1u) {
    const double m = mag(rng);
    return {m * 2 / 9, m * 2 / 9, m * 2 / 3, OrientationMode::isotropic};
  }
  double a = ch(rng), b = ch(rng);
  if (std::abs(a) < 0.1) a = 0.1;
  if (std::abs(b) < 0.1) b = 0.1;
  return {a * a, a * b, b * b, OrientationMode::fixed};
}

double core_scale(double x_a, double x_b, const DipoleContractions& s) {
  return std::abs(gg_sum(x_a, s)) + std::abs(gg_sum(x_b, s)) +
         std::abs(ss_sum(x_a, s)) + std::abs(ss_sum(x_b, s));
}

PairSystem one_line_pair(double nu_a_cm = 12578.95, double nu_b_cm = 12985.17,
                         double R_m = 30e-6) {
  TransitionLine a = TransitionLine::from_cm(nu_a_cm, 1.0, 0.0, {}, "A");
  TransitionLine b = TransitionLine::from_cm(nu_b_cm, 1.0, 0.0, {}, "B");
  return PairSystem(a, {b}, {0, 0, 1}, R_m, "pair");
}

}  // namespace

TEST_CASE("dimensionless causal core matches frozen values") {
  DipoleContractions s{0.31, 0.12, 0.57, OrientationMode::fixed};
  CHECK_THAT(causal_core(10.0, 9.3, 2.6, s),
             WithinRel(1205.1843621865133, 1e-12));
  CHECK_THAT(causal_core(12.0, 11.5, 3.0, iso_unit()),
             WithinRel(-838.92772705505584, 1e-12));
}

TEST_CASE("residue engine agrees with the closed form everywhere sampled") {
  std::mt19937 rng(20260823);
  std::uniform_real_distribution<double> lx(std::log(0.5), std::log(200.0));
  std::uniform_real_distribution<double> ratio_draw(0.90, 1.10);
  std::uniform_real_distribution<double> u_draw(0.02, 1.0);

  for (int trial = 0; trial < 60; ++trial) {
    const double x_a = std::exp(lx(rng));
    double ratio = ratio_draw(rng);
    if (std::abs(ratio - 1.0) < 0.03) ratio = ratio < 1.0 ? 0.97 : 1.03;
    const double x_b = ratio * x_a;
    const double tau = 2.0 + u_draw(rng) * 50.0 / std::abs(x_a - x_b);
    const DipoleContractions s = random_weights(rng);

    const double via_residues = causal_core(x_a, x_b, tau, s);
    const double via_closed_form = cf::core(x_a, x_b, (x_a - x_b) * tau, s);
    const double scale = core_scale(x_a, x_b, s) + std::abs(via_closed_form);
    INFO("x_a=" << x_a << " x_b=" << x_b << " tau=" << tau);
    CHECK_THAT(via_residues, WithinAbs(via_closed_form, 1e-9 * scale));
  }
}

TEST_CASE("iteration order does not change the coupled-term total") {
  std::mt19937 rng(7001);
  std::uniform_real_distribution<double> lx(std::log(0.5), std::log(200.0));
  std::uniform_real_distribution<double> u_draw(0.05, 1.0);

  for (int trial = 0; trial < 40; ++trial) {
    const double x_a = std::exp(lx(rng));
    const double x_b = 0.93 * x_a;
    const double tau = 2.0 + u_draw(rng) * 50.0 / std::abs(x_a - x_b);
    const DipoleContractions s = random_weights(rng);

    const complexd both_kp =
        mixed_core(x_a, x_b, tau, s, IterationOrder::kprime_then_k);
    const complexd both_k =
        mixed_core(x_a, x_b, tau, s, IterationOrder::k_then_kprime);
    const double scale = core_scale(x_a, x_b, s);
    INFO("x_a=" << x_a << " tau=" << tau);
    CHECK(std::abs(both_kp - both_k) < 1e-10 * scale);
  }
}

TEST_CASE("individual coupled terms depend on the order but their sum does not") {
  auto sys = one_line_pair();
  const double R = 30e-6;
  const double T = 3e-12;
  const Prescription causal{PrescriptionKind::causal, 0.0};
  const auto spec_k = make_pole_spec(TermKind::mixed_k, causal, sys, 0, R);
  const auto spec_k1 = make_pole_spec(TermKind::mixed_kprime, causal, sys, 0, R);

  const complexd k_kp = evaluate_term(sys, R, T, 0, spec_k,
                                      IterationOrder::kprime_then_k);
  const complexd k_k = evaluate_term(sys, R, T, 0, spec_k,
                                     IterationOrder::k_then_kprime);
  const complexd k1_kp = evaluate_term(sys, R, T, 0, spec_k1,
                                       IterationOrder::kprime_then_k);
  const complexd k1_k = evaluate_term(sys, R, T, 0, spec_k1,
                                      IterationOrder::k_then_kprime);

  const double scale = std::abs(k_kp) + std::abs(k1_kp);
  CHECK(std::abs(k_kp - k_k) > 1e-6 * scale);        // pieces shift around
  CHECK(std::abs((k_kp + k1_kp) - (k_k + k1_k)) < 1e-10 * scale);
}

TEST_CASE("term catalogue assembles the full causal energy") {
  auto sys = one_line_pair();
  const double R = 30e-6;
  const double T = 3e-12;
  const Prescription causal{PrescriptionKind::causal, 0.0};

  complexd assembled = 0;
  for (TermKind kind : {TermKind::aa, TermKind::bb_cos, TermKind::mixed_k,
                        TermKind::mixed_kprime})
    assembled += evaluate_term(sys, R, T, 0, make_pole_spec(kind, causal, sys, 0, R));

  const EnergyResult whole = evaluate_causal(sys, R, T);
  CHECK_THAT(assembled.real(), WithinRel(whole.value, 1e-10));
  CHECK(std::abs(assembled.imag()) < 1e-10 * std::abs(whole.value));
}

TEST_CASE("pole descriptions carry the prescription's shifts") {
  auto sys = one_line_pair();
  const double R = 30e-6;
  const double k_a = sys.atom_A.k();
  const double k_b = sys.atom_B_lines[0].k();

  SECTION("causal terms keep every pole on the axis") {
    auto aa = make_pole_spec(TermKind::aa, {PrescriptionKind::causal, 0.0}, sys, 0, R);
    REQUIRE(aa.poles_k.size() == 1);
    CHECK(aa.poles_k[0].location == k_a);
    CHECK(aa.poles_k[0].shift == 0.0);
    CHECK_FALSE(aa.coupled);
    CHECK(aa.time_factor == TimeFactor::none);

    auto bb = make_pole_spec(TermKind::bb_cos, {PrescriptionKind::causal, 0.0}, sys, 0, R);
    CHECK(bb.poles_k[0].location == k_b);
    CHECK(bb.time_factor == TimeFactor::cos_detuning);

    auto mk = make_pole_spec(TermKind::mixed_k, {PrescriptionKind::causal, 0.0}, sys, 0, R);
    REQUIRE(mk.poles_k.size() == 2);
    CHECK(mk.poles_k1.empty());
    CHECK(mk.coupled);

    auto mk1 = make_pole_spec(TermKind::mixed_kprime, {PrescriptionKind::causal, 0.0}, sys, 0, R);
    CHECK(mk1.poles_k.empty());
    REQUIRE(mk1.poles_k1.size() == 2);
  }

  SECTION("shifted prescriptions move the single-frequency poles") {
    const double eta_x = 0.01;
    auto ad = make_pole_spec(TermKind::aa, {PrescriptionKind::adiabatic, eta_x}, sys, 0, R);
    CHECK_THAT(ad.poles_k[0].shift, WithinRel(-eta_x / R, 1e-15));
    CHECK_THAT(ad.poles_k1[0].shift, WithinRel(-eta_x / R, 1e-15));

    auto pt = make_pole_spec(TermKind::aa, {PrescriptionKind::pt1995, eta_x}, sys, 0, R);
    CHECK_THAT(pt.poles_k[0].shift, WithinRel(+eta_x / R, 1e-15));
    CHECK_THAT(pt.poles_k1[0].shift, WithinRel(-eta_x / R, 1e-15));
  }

  SECTION("retarded terms only exist in the causal treatment") {
    CHECK_THROWS_AS(
        make_pole_spec(TermKind::bb_cos, {PrescriptionKind::adiabatic, 0.0}, sys, 0, R),
        UsageError);
    CHECK_THROWS_AS(
        make_pole_spec(TermKind::mixed_k, {PrescriptionKind::pt1995, 0.0}, sys, 0, R),
        UsageError);
  }
}

TEST_CASE("residue evaluation reproduces the frozen physical reference point") {
  auto sys = one_line_pair();
  const EnergyResult r = evaluate_causal(sys, 30e-6, 3e-12);
  CHECK_THAT(r.value, WithinRel(2.0379859584556483e-43, 1e-10));
  CHECK_THAT(r.value_scaled, WithinRel(119885524.92433504, 1e-10));
  CHECK(r.method == "contour:causal");

  const EnergyResult direct = energy_full_at(sys, 30e-6, 3e-12);
  CHECK_THAT(r.value, WithinRel(direct.value, 1e-10));
}

TEST_CASE("causality gate and closure guards") {
  auto sys = one_line_pair();
  const double R = 30e-6;
  const double front = 2.0 * R / si::c;

  CHECK(evaluate_causal(sys, R, 0.5 * front).value == 0.0);
  CHECK(evaluate_causal(sys, R, front).value == 0.0);
  CHECK(evaluate_causal(sys, R, front).value_scaled == 0.0);
  CHECK_THROWS_AS(evaluate_causal(sys, R, -1e-12), DomainError);

  DipoleContractions s = iso_unit();
  CHECK_THROWS_AS(causal_core(10.0, 9.3, 2.0, s), DomainError);
  CHECK_THROWS_AS(causal_core(10.0, 9.3, 1.5, s), DomainError);
  CHECK_THROWS_AS(mixed_core(10.0, 9.3, 2.0, s), ContourAmbiguity);
  CHECK_THROWS_AS(mixed_core(10.0, 10.0, 3.0, s), DomainError);

  contour_detail::ExpAtom undecided{1.0, 0, 0.0, {{complexd(1.0, 0.0), true}}};
  CHECK_THROWS_AS(contour_detail::eval_atom(undecided), ContourAmbiguity);
}

TEST_CASE("term masks decompose the total") {
  auto sys = one_line_pair();
  const double R = 30e-6;
  const double T = 3e-12;

  const double full = evaluate_causal(sys, R, T).value;
  const double aa = evaluate_causal(sys, R, T, IterationOrder::kprime_then_k,
                                    term_mask_aa).value;
  const double bb = evaluate_causal(sys, R, T, IterationOrder::kprime_then_k,
                                    term_mask_bb).value;
  const double mixed = evaluate_causal(sys, R, T, IterationOrder::kprime_then_k,
                                       term_mask_mixed).value;
  CHECK_THAT(aa + bb + mixed, WithinRel(full, 1e-12));

  // dropping the coupled terms leaves a defect whose time average over one
  // beat period is the (time-independent) adiabatic-minus-PV offset
  const DipoleContractions s = iso_unit();
  const double x_a = 9.0, x_b = 8.3, tau0 = 5.0;
  const double period = 2.0 * pi / std::abs(x_a - x_b);
  const int n = 16;
  complexd acc = 0;
  for (int j = 0; j < n; ++j)
    acc += mixed_core(x_a, x_b, tau0 + period * j / n, s);
  const double averaged_defect = (acc / double(n)).real();

  const double ad = prescription_core({PrescriptionKind::adiabatic, 0.0}, x_a, s).real();
  const double st = prescription_core({PrescriptionKind::stationary_pv, 0.0}, x_a, s).real();
  CHECK_THAT(averaged_defect, WithinRel(ad - st, 1e-10));
  CHECK_THAT(averaged_defect, WithinRel(-ss_sum(x_a, s), 1e-10));
}

TEST_CASE("pole-shift prescriptions collapse to their analytic forms") {
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> lx(std::log(0.5), std::log(200.0));
  for (int trial = 0; trial < 50; ++trial) {
    const double x = std::exp(lx(rng));
    const DipoleContractions s = random_weights(rng);
    const double gg = gg_sum(x, s);
    const double ss = ss_sum(x, s);
    const double scale = std::abs(gg) + std::abs(ss) + 1.0;

    const complexd ad = prescription_core({PrescriptionKind::adiabatic, 0.0}, x, s);
    const complexd st = prescription_core({PrescriptionKind::stationary_pv, 0.0}, x, s);
    const complexd pt = prescription_core({PrescriptionKind::pt1995, 0.0}, x, s);

    INFO("x=" << x);
    CHECK(std::abs(ad.real() - (gg - ss)) < 5e-13 * scale);
    CHECK(std::abs(ad.real() - cf::stationary_group(x, s)) < 5e-13 * scale);
    CHECK(std::abs(st.real() - gg) < 5e-13 * scale);
    CHECK(std::abs(st.imag()) < 1e-14 * scale);
    CHECK(std::abs(pt.real() - (gg + ss)) < 5e-13 * scale);
    CHECK(std::abs(pt.imag()) < 1e-13 * scale);
    CHECK(std::abs(st.real() - 0.5 * (ad.real() + pt.real())) < 5e-13 * scale);
  }

  // the adiabatic value is genuinely complex before taking the real part
  CHECK(std::abs(prescription_core({PrescriptionKind::adiabatic, 0.0}, 7.3,
                                   iso_unit()).imag()) > 1.0);
  CHECK_THROWS_AS(prescription_core({PrescriptionKind::causal, 0.0}, 7.3, iso_unit()),
                  UsageError);
  CHECK_THROWS_AS(prescription_core({PrescriptionKind::adiabatic, -0.1}, 7.3, iso_unit()),
                  DomainError);
}

TEST_CASE("finite-shift ladder converges linearly to the unshifted value") {
  const DipoleContractions s = iso_unit();
  for (double x : {7.3, 40.0 * pi}) {
    for (auto kind : {PrescriptionKind::adiabatic, PrescriptionKind::pt1995}) {
      const double exact = prescription_core({kind, 0.0}, x, s).real();
      std::vector<double> shifts, values;
      for (int n = 0; n <= 6; ++n) {
        const double eta = 0.1 / std::pow(2.0, n);
        shifts.push_back(eta);
        values.push_back(prescription_core({kind, eta}, x, s).real());
      }
      for (int n = 0; n + 1 < 7; ++n) {
        const double ratio =
            (values[n] - exact) / (values[n + 1] - exact);
        INFO("x=" << x << " n=" << n);
        CHECK(ratio > 1.85);
        CHECK(ratio < 2.15);
      }
      const double extrapolated = extrapolate_to_zero(shifts, values);
      CHECK_THAT(extrapolated, WithinRel(exact, 1e-8));
    }
  }
}

TEST_CASE("no secular growth over long observation windows") {
  const DipoleContractions s = iso_unit();
  const double x_a = 9.0, x_b = 8.3;
  const double period = 2.0 * pi / std::abs(x_a - x_b);

  // exactly periodic in the beat phase: late windows repeat early ones
  for (double tau : {2.3, 3.7, 5.1}) {
    const double late = causal_core(x_a, x_b, tau + 16.0 * period, s);
    CHECK_THAT(causal_core(x_a, x_b, tau, s), WithinRel(late, 1e-9));
  }

  // bounded over the long window
  const double span = 100.0 / std::abs(x_a - x_b);
  double peak = 0.0;
  for (int j = 0; j <= 500; ++j) {
    const double tau = 2.05 + span * j / 500.0;
    peak = std::max(peak, std::abs(causal_core(x_a, x_b, tau, s)));
  }
  const double bound = 3.0 * (std::abs(gg_sum(x_a, s)) + std::abs(gg_sum(x_b, s)) +
                              std::abs(ss_sum(x_a, s)) + std::abs(ss_sum(x_b, s)));
  CHECK(peak < bound);
}

TEST_CASE("prescription comparison table") {
  TransitionLine a = TransitionLine::from_cm(12578.95, 1.0, 6e6, {}, "A");
  TransitionLine b1 = TransitionLine::from_cm(12985.17, 1.0, 6e6, {}, "B1");
  TransitionLine b2 = TransitionLine::from_cm(13045.876, 1.0, 6.2e6, {}, "B2");
  PairSystem sys(a, {b1, b2}, {0, 0, 1}, 30e-6, "rbk");

  const double T = 3e-12;
  const std::vector<double> grid{30e-6, 45e-6};
  const auto rows = compare_prescriptions(sys, T, grid);
  REQUIRE(rows.size() == 8);

  const char* expected[] = {"causal", "adiabatic", "stationary-pv", "pt1995"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].name == expected[i % 4]);
    CHECK(rows[i].R_m == grid[i / 4]);
  }

  // the causal row is the full evaluation
  CHECK_THAT(rows[0].result.value,
             WithinRel(energy_full_at(sys, 30e-6, T).value, 1e-9));

  // far-field columns approximate the full rows, deviations shrinking with kR
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const double scale = std::abs(rows[(i / 4) * 4 + 3].far_field_value);
    REQUIRE(scale > 0.0);
    const double miss = std::abs(row.result.value - row.far_field_value) / scale;
    INFO(row.name << " at R=" << row.R_m << " miss=" << miss);
    if (row.name == "pt1995")
      CHECK(miss < 1e-3);
    else
      CHECK(miss < 1.2e-2);
  }

  CHECK_THROWS_AS(compare_prescriptions(sys, T, {}), UsageError);
  CHECK_THROWS_AS(
      evaluate_prescription(sys, 30e-6, {PrescriptionKind::causal, 0.0}),
      UsageError);
}
