#pragma once

// Built-in verification suite behind the `report` CLI subcommand. Each check
// pins an analytic value of the four-photon interference scenarios (or a
// statistical property of the fitting machinery) and compares the simulation
// against it at a fixed tolerance. All randomness is seeded, so the rendered
// report is identical from run to run; the one timing check contributes only
// a pass/fail flag.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fourphoton/fit.hpp"
#include "fourphoton/io.hpp"
#include "fourphoton/optics.hpp"
#include "fourphoton/rng.hpp"
#include "fourphoton/scan.hpp"
#include "fourphoton/source.hpp"

namespace fourphoton {

struct SubCheck {
    std::string label;
    std::string expected;
    std::string measured;
    bool pass = false;
};

struct CheckResult {
    int id = 0;
    std::string title;
    std::vector<SubCheck> subchecks;

    bool pass() const {
        return std::all_of(subchecks.begin(), subchecks.end(),
                           [](const SubCheck& s) { return s.pass; });
    }
};

namespace selfcheck_detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// |measured| <= bound
inline void check_abs_le(CheckResult& r, const std::string& label, double measured,
                         double bound) {
    r.subchecks.push_back(SubCheck{label, "|x| <= " + num(bound), num(measured),
                                   std::abs(measured) <= bound});
}

// |measured - expected| <= tol
inline void check_near(CheckResult& r, const std::string& label, double measured,
                       double expected, double tol) {
    r.subchecks.push_back(SubCheck{label, num(expected) + " +/- " + num(tol), num(measured),
                                   std::abs(measured - expected) <= tol});
}

inline void check_ge(CheckResult& r, const std::string& label, double measured, double bound) {
    r.subchecks.push_back(
        SubCheck{label, ">= " + num(bound), num(measured), measured >= bound});
}

inline void check_flag(CheckResult& r, const std::string& label, bool ok,
                       const std::string& expected, const std::string& measured) {
    r.subchecks.push_back(SubCheck{label, expected, measured, ok});
}

inline FockState fock2(int na, int nb) {
    return FockState({{ModeId{0, 0}, na}, {ModeId{1, 0}, nb}});
}

inline Eigen::MatrixXcd haar_unitary(Pcg32& rng, int dim) {
    Eigen::MatrixXcd g(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) g(r, c) = Complex{rng.normal(), rng.normal()};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd rm = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < dim; ++c) {
        const Complex d = rm(c, c);
        q.col(c) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex{1.0, 0.0};
    }
    return q;
}

inline std::vector<FockState> four_photon_basis(int channels, int temporals) {
    const int slots = channels * temporals;
    std::vector<FockState> out;
    std::vector<int> counts(static_cast<size_t>(slots), 0);
    const std::function<void(int, int)> walk = [&](int slot, int remaining) {
        if (slot == slots - 1) {
            counts[static_cast<size_t>(slot)] = remaining;
            std::vector<std::pair<ModeId, int>> occ;
            for (int s = 0; s < slots; ++s)
                if (counts[static_cast<size_t>(s)] > 0)
                    occ.push_back(
                        {ModeId{s / temporals, s % temporals}, counts[static_cast<size_t>(s)]});
            out.push_back(FockState(occ));
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            counts[static_cast<size_t>(slot)] = k;
            walk(slot + 1, remaining - k);
        }
    };
    walk(0, 4);
    return out;
}

inline std::vector<double> phase_grid(int steps) {
    std::vector<double> v(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) v[static_cast<size_t>(i)] = 2.0 * kPi * i / steps;
    return v;
}

inline std::vector<double> model_samples(FitModel model, const std::vector<double>& params,
                                         const std::vector<double>& x) {
    std::vector<double> y;
    y.reserve(x.size());
    for (double xi : x) y.push_back(eval_model(model, params, xi));
    return y;
}

// --- the ten checks -------------------------------------------------------

inline CheckResult check_expansion_coefficients() {
    CheckResult r{1, "two-pair beam-splitter expansion coefficients", {}};
    Pcg32 rng(1001);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double t = rng.uniform(1e-3, 1.0 - 1e-3);
        const double rr = 1.0 - t;
        const Ket out = run_circuit(Ket::basis(fock2(2, 2)),
                                    Circuit{2, {BeamSplitter{t, {0, 1}}}});
        const double a40 = std::sqrt(6.0) * t * rr;
        const double a31 = std::sqrt(6.0 * t * rr) * (t - rr);
        const double a22 = (t - rr) * (t - rr) - 2.0 * t * rr;
        worst = std::max({worst, std::abs(out.amplitude(fock2(4, 0)) - Complex{a40, 0.0}),
                          std::abs(out.amplitude(fock2(0, 4)) - Complex{a40, 0.0}),
                          std::abs(out.amplitude(fock2(3, 1)) - Complex{a31, 0.0}),
                          std::abs(out.amplitude(fock2(1, 3)) - Complex{-a31, 0.0}),
                          std::abs(out.amplitude(fock2(2, 2)) - Complex{a22, 0.0})});
    }
    check_abs_le(r, "max coefficient deviation over 100 random T", worst, 1e-12);
    return r;
}

inline CheckResult check_hom_zero() {
    CheckResult r{2, "four-photon coincidence null and distinguishable baseline", {}};
    const Ket in = ideal_two_pairs().ket;
    for (double t : {kHomNullTransmissivityHigh, kHomNullTransmissivityLow}) {
        const double p = detect_prob(run_circuit(in, Circuit{2, {BeamSplitter{t, {0, 1}}}}),
                                     DetectionPattern({2, 2}));
        check_abs_le(r, "P(2,2) at T=" + num(t), p, 1e-12);
    }
    const SourceState far = apply_delay(ideal_two_pairs(), DelayModel{2400.0, 120.0});
    const double base = detect_prob(
        run_circuit(far.ket, Circuit{2, {BeamSplitter{kHomNullTransmissivityHigh, {0, 1}}}}),
        DetectionPattern({2, 2}));
    check_near(r, "fully delayed baseline P(2,2)", base, 0.5, 1e-9);
    return r;
}

inline CheckResult check_low_order_nulls() {
    CheckResult r{3, "two- and three-photon coincidence nulls", {}};
    const double p11 =
        detect_prob(run_circuit(Ket::basis(fock2(1, 1)), Circuit{2, {BeamSplitter{0.5, {0, 1}}}}),
                    DetectionPattern({1, 1}));
    check_abs_le(r, "|1,1> at T=1/2 -> P(1,1)", p11, 1e-12);
    const double p21 = detect_prob(
        run_circuit(Ket::basis(fock2(2, 1)), Circuit{2, {BeamSplitter{2.0 / 3.0, {0, 1}}}}),
        DetectionPattern({2, 1}));
    check_abs_le(r, "|2,1> at T=2/3 -> P(2,1)", p21, 1e-12);
    return r;
}

inline CheckResult check_de_broglie_fringe() {
    CheckResult r{4, "four-photon de Broglie fringe (1 + cos 4phi)/8", {}};
    ScanConfig cfg;
    cfg.theta1 = hom_null_hwp_angle();
    cfg.theta2 = 22.5 * kDegToRad;
    cfg.variable = SweepVariable::phi;
    const SourceState src = build_source(cfg.source);
    const std::vector<double> grid = phase_grid(72);
    std::vector<double> probs;
    double worst = 0.0;
    for (double phi : grid) {
        const double p = scan_point(cfg, src, phi);
        probs.push_back(p);
        worst = std::max(worst, std::abs(p - (1.0 + std::cos(4.0 * phi)) / 8.0));
    }
    check_abs_le(r, "max |P - (1+cos 4phi)/8| at 72 points", worst, 1e-12);

    const FitReport fr = fit(grid, probs, FitModel::fringe);
    check_near(r, "fitted V4", fr.param("V4"), 1.0, 1e-9);
    check_abs_le(r, "fitted V2", fr.param("V2"), 1e-9);

    double period_dev = 0.0;  // pi/2 is 18 steps on this grid
    for (size_t i = 0; i + 18 < probs.size(); ++i)
        period_dev = std::max(period_dev, std::abs(probs[i] - probs[i + 18]));
    check_abs_le(r, "max |P(phi) - P(phi + pi/2)|", period_dev, 1e-12);
    return r;
}

inline CheckResult check_theta_scan() {
    CheckResult r{5, "coincidence scan against the HWP2 angle", {}};
    ScanConfig cfg;
    cfg.variable = SweepVariable::theta2;
    cfg.sweep_from = 0.0;
    cfg.sweep_to = 90.0;
    cfg.steps = 181;
    const ScanTable t = theta_scan(cfg);
    double worst = 0.0;
    for (size_t i = 0; i < t.rows(); ++i) {
        const double s = std::pow(std::sin(4.0 * t.x[i] * kDegToRad), 2);
        worst = std::max(worst, std::abs(t.probability[i] - std::pow(1.0 - 1.5 * s, 2)));
    }
    check_abs_le(r, "max |P - (1-1.5 sin^2 4theta)^2| on 0.5 deg grid", worst, 1e-12);

    const double null_deg = hom_null_hwp_angle() / kDegToRad;
    const SourceState src = build_source(cfg.source);
    for (double expected :
         {null_deg, 45.0 - null_deg, 45.0 + null_deg, 90.0 - null_deg}) {
        double best_x = expected - 0.3, best_p = 2.0;
        for (int i = 0; i <= 300; ++i) {
            const double x = expected - 0.3 + 0.002 * i;
            const double p = scan_point(cfg, src, x);
            if (p < best_p) {
                best_p = p;
                best_x = x;
            }
        }
        check_near(r, "minimum near " + num(expected) + " deg", best_x, expected, 0.01);
    }
    return r;
}

inline CheckResult check_mode_match_recovery() {
    CheckResult r{6, "mode-match parameter from a two-mode Schmidt source", {}};
    ScanConfig cfg;
    cfg.source.kind = SourceSpec::Kind::schmidt;
    cfg.source.lambdas = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    cfg.variable = SweepVariable::theta2;
    cfg.sweep_from = 0.0;
    cfg.sweep_to = 90.0;
    cfg.steps = 181;
    const ScanTable t = theta_scan(cfg);
    const FitReport fr = fit(t, FitModel::theta);
    check_near(r, "fitted E/A", fr.param("e_over_a"), 0.5, 1e-6);
    check_ge(r, "fit R^2", fr.r2, 1.0 - 1e-9);

    const SourceState src = build_source(cfg.source);
    const double null_deg = std::asin(std::sqrt(2.0 / 3.0)) / 4.0 / kDegToRad;
    const double floor = scan_point(cfg, src, null_deg);
    const double peak = scan_point(cfg, src, 0.0);
    check_near(r, "min/max coincidence ratio", floor / peak, 1.0 / 9.0, 1e-9);
    return r;
}

inline CheckResult check_fit_recovery() {
    CheckResult r{7, "fit recovery of published fringe and dip parameters", {}};
    const std::vector<double> phases = phase_grid(36);
    for (const auto& truth : {std::vector<double>{100.0, 0.62, 0.39},
                              std::vector<double>{100.0, 0.59, -0.03}}) {
        const FitReport fr =
            fit(phases, model_samples(FitModel::fringe, truth, phases), FitModel::fringe);
        check_abs_le(r, "V4=" + num(truth[1]) + " recovery error",
                     fr.param("V4") - truth[1], 1e-9);
        check_abs_le(r, "V2=" + num(truth[2]) + " recovery error",
                     fr.param("V2") - truth[2], 1e-9);
    }

    std::vector<double> delays(81);
    for (int i = 0; i < 81; ++i) delays[static_cast<size_t>(i)] = -500.0 + 1000.0 * i / 80.0;
    const std::vector<double> dip_truth = {1000.0, 0.88, 0.0, dip_width_from_fwhm(196.0)};
    const FitReport dip_fit =
        fit(delays, model_samples(FitModel::dip, dip_truth, delays), FitModel::dip);
    check_abs_le(r, "dip visibility relative error", dip_fit.param("V") / 0.88 - 1.0, 1e-6);
    check_abs_le(r, "dip FWHM relative error",
                 dip_fwhm_from_width(dip_fit.param("w")) / 196.0 - 1.0, 1e-6);

    // Poisson replicates at ~1000 counts: 3-sigma coverage per parameter
    Pcg32 rng(7007);
    const int reps = 200;
    int v4_hits = 0, v2_hits = 0;
    const std::vector<double> fringe_truth = {1000.0, 0.62, 0.39};
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> y;
        for (double phi : phases)
            y.push_back(static_cast<double>(
                poisson_sample(rng, eval_model(FitModel::fringe, fringe_truth, phi))));
        const FitReport fr = fit(phases, y, FitModel::fringe);
        if (std::abs(fr.param("V4") - 0.62) <= 3.0 * fr.stderr_of("V4")) ++v4_hits;
        if (std::abs(fr.param("V2") - 0.39) <= 3.0 * fr.stderr_of("V2")) ++v2_hits;
    }
    int v_hits = 0, w_hits = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> y;
        for (double d : delays)
            y.push_back(static_cast<double>(
                poisson_sample(rng, eval_model(FitModel::dip, dip_truth, d))));
        const FitReport fr = fit(delays, y, FitModel::dip);
        if (std::abs(fr.param("V") - 0.88) <= 3.0 * fr.stderr_of("V")) ++v_hits;
        if (std::abs(dip_fwhm_from_width(fr.param("w")) - 196.0) <=
            3.0 * dip_fwhm_from_width(fr.stderr_of("w")))
            ++w_hits;
    }
    check_ge(r, "V4 within 3 sigma (fraction of 200)", v4_hits / 200.0, 0.95);
    check_ge(r, "V2 within 3 sigma (fraction of 200)", v2_hits / 200.0, 0.95);
    check_ge(r, "dip V within 3 sigma (fraction of 200)", v_hits / 200.0, 0.95);
    check_ge(r, "dip FWHM within 3 sigma (fraction of 200)", w_hits / 200.0, 0.95);
    return r;
}

inline CheckResult check_balance() {
    CheckResult r{8, "HWP1 balance search nulls the cos 2phi fringe term", {}};
    const BalanceResult ideal = balance_theta1(SchmidtSpec{{1.0}});
    check_near(r, "ideal-source theta1 (deg)", ideal.theta1 / kDegToRad,
               hom_null_hwp_angle() / kDegToRad, 0.05);
    check_abs_le(r, "ideal-source |V2|", ideal.v2, 1e-9);

    const BalanceResult mixed =
        balance_theta1(SchmidtSpec{{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}});
    check_abs_le(r, "two-mode-source |V2|", mixed.v2, 0.02);
    check_ge(r, "two-mode-source V4", mixed.v4, 0.5 - 1e-9);
    return r;
}

inline CheckResult check_oracle_equivalence() {
    CheckResult r{9, "permanent oracle and normally-ordered moment identity", {}};
    Pcg32 rng(9009);
    double worst_amp = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const ModeTransform u{haar_unitary(rng, 2)};
        for (int n = 1; n <= 4; ++n)
            for (int in_a = 0; in_a <= n; ++in_a)
                for (int out_a = 0; out_a <= n; ++out_a) {
                    const FockState in = fock2(in_a, n - in_a);
                    const FockState out = fock2(out_a, n - out_a);
                    const Complex direct =
                        apply_mode_transform(Ket::basis(in), u).amplitude(out);
                    worst_amp = std::max(worst_amp,
                                         std::abs(transition_amplitude(in, out, u) - direct));
                }
    }
    check_abs_le(r, "max |permanent amp - expansion amp| (50 unitaries)", worst_amp, 1e-10);

    const auto basis = four_photon_basis(2, 2);
    double worst_moment = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        Ket k;
        for (const auto& state : basis) k.add(state, Complex{rng.normal(), rng.normal()});
        k = k.normalized();
        worst_moment = std::max(
            worst_moment, std::abs(normally_ordered_moment(k) -
                                   4.0 * detect_prob(k, DetectionPattern({2, 2}))));
    }
    check_abs_le(r, "max |moment - 4 P(2,2)| (200 states)", worst_moment, 1e-12);
    return r;
}

inline CheckResult check_determinism_and_speed() {
    CheckResult r{10, "determinism and scan speed", {}};
    ScanConfig cfg;
    cfg.source.kind = SourceSpec::Kind::schmidt;
    const double raw[4] = {0.7, 0.5, 0.4, 0.32};
    double norm = 0.0;
    for (double v : raw) norm += v * v;
    for (double v : raw) cfg.source.lambdas.push_back(v / std::sqrt(norm));
    cfg.theta2 = hom_null_hwp_angle();
    cfg.variable = SweepVariable::delay;
    cfg.sweep_from = -360.0;
    cfg.sweep_to = 360.0;
    cfg.steps = 100;

    const auto t0 = std::chrono::steady_clock::now();
    const ScanTable a = run_scan(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check_flag(r, "100-point scan with 4 Schmidt modes under 1 s", seconds < 1.0, "< 1 s",
               seconds < 1.0 ? "within budget" : "over budget");

    const ScanTable b = run_scan(cfg);
    check_flag(r, "repeated scans produce equal tables", a == b, "equal", a == b ? "equal" : "differ");

    const std::string csv1 = to_csv(poissonize(a, 2000.0, 77));
    const std::string csv2 = to_csv(poissonize(b, 2000.0, 77));
    check_flag(r, "fixed seed gives byte-identical sampled CSV", csv1 == csv2, "identical",
               csv1 == csv2 ? "identical" : "differ");
    return r;
}

}  // namespace selfcheck_detail

inline std::vector<CheckResult> run_selfchecks() {
    using namespace selfcheck_detail;
    return {check_expansion_coefficients(),
            check_hom_zero(),
            check_low_order_nulls(),
            check_de_broglie_fringe(),
            check_theta_scan(),
            check_mode_match_recovery(),
            check_fit_recovery(),
            check_balance(),
            check_oracle_equivalence(),
            check_determinism_and_speed()};
}

inline bool all_pass(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.pass(); });
}

inline std::string render_selfcheck_report(const std::vector<CheckResult>& results) {
    std::ostringstream os;
    os << "fourphoton self-check\n";
    int passed = 0;
    for (const auto& r : results) {
        os << (r.pass() ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.title << '\n';
        for (const auto& s : r.subchecks) {
            os << "       " << (s.pass ? "ok   " : "FAIL ") << s.label << ": measured "
               << s.measured << ", expected " << s.expected << '\n';
        }
        if (r.pass()) ++passed;
    }
    os << "RESULT: " << passed << '/' << results.size() << " checks passed\n";
    return os.str();
}

}  // namespace fourphoton
