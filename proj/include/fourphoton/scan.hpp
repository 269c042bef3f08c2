#pragma once

// Scenario runners producing sampled coincidence curves: the four-photon
// Hong-Ou-Mandel dip against delay, the coincidence scan against the HWP2
// angle, and the de Broglie fringe against the interferometer phase. All runs
// share one pipeline: source -> delay -> HWP1 -> phase shifter -> HWP2 ->
// post-selected (2,2) detection.
//
// Sweep positions are expressed in the natural unit of each variable: µm for
// the delay, degrees for wave-plate angles, radians for the phase. Fixed
// circuit angles are radians.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fourphoton/optics.hpp"
#include "fourphoton/rng.hpp"
#include "fourphoton/source.hpp"

namespace fourphoton {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;

enum class SweepVariable { delay, theta1, theta2, phi };

inline std::string scenario_name(SweepVariable v) {
    switch (v) {
        case SweepVariable::delay: return "hom-dip";
        case SweepVariable::theta1: return "theta1-scan";
        case SweepVariable::theta2: return "theta-scan";
        case SweepVariable::phi: return "fringe";
    }
    throw std::invalid_argument("scenario_name: unknown sweep variable");
}

struct SourceSpec {
    enum class Kind { ideal, schmidt, effective };
    Kind kind = Kind::ideal;
    std::vector<double> lambdas;  // Kind::schmidt
    double e_over_a = 1.0;        // Kind::effective
};

inline SchmidtSpec source_schmidt_spec(const SourceSpec& spec) {
    switch (spec.kind) {
        case SourceSpec::Kind::ideal: return SchmidtSpec{{1.0}};
        case SourceSpec::Kind::schmidt: return SchmidtSpec{spec.lambdas};
        case SourceSpec::Kind::effective: return schmidt_from_e_over_a(spec.e_over_a);
    }
    throw std::invalid_argument("source_schmidt_spec: unknown source kind");
}

inline SourceState build_source(const SourceSpec& spec) {
    return schmidt_two_pairs(source_schmidt_spec(spec));
}

struct ScanConfig {
    SourceSpec source;
    double theta1 = 0.0;  // HWP1 angle, radians
    double theta2 = 0.0;  // HWP2 angle, radians
    double phi = 0.0;     // phase between the arms, radians
    SweepVariable variable = SweepVariable::delay;
    double sweep_from = 0.0;
    double sweep_to = 1.0;
    int steps = 2;
    DelayModel delay;

    void validate() const {
        if (steps < 2) throw std::invalid_argument("ScanConfig: need at least 2 sweep steps");
        if (!(sweep_from < sweep_to))
            throw std::invalid_argument("ScanConfig: sweep range must satisfy from < to");
        delay.validate();
    }
};

// One sampled curve; `counts` stays empty until Poisson sampling is applied.
struct ScanTable {
    std::string scenario;
    std::vector<double> x;
    std::vector<double> probability;
    std::vector<std::uint64_t> counts;

    bool has_counts() const { return !counts.empty(); }
    size_t rows() const { return x.size(); }

    friend bool operator==(const ScanTable&, const ScanTable&) = default;
};

// Coincidence probability at one sweep position (natural units, see header).
inline double scan_point(const ScanConfig& cfg, const SourceState& base, double x) {
    double theta1 = cfg.theta1, theta2 = cfg.theta2, phi = cfg.phi;
    DelayModel delay = cfg.delay;
    switch (cfg.variable) {
        case SweepVariable::delay: delay.delta_um = x; break;
        case SweepVariable::theta1: theta1 = x * kDegToRad; break;
        case SweepVariable::theta2: theta2 = x * kDegToRad; break;
        case SweepVariable::phi: phi = x; break;
    }
    const SourceState delayed = apply_delay(base, delay);
    const Circuit circuit{2,
                          {HalfWavePlate{theta1, {0, 1}}, PhaseShifter{phi, 1},
                           HalfWavePlate{theta2, {0, 1}}}};
    return detect_prob(run_circuit(delayed.ket, circuit), DetectionPattern({2, 2}));
}

inline ScanTable run_scan(const ScanConfig& cfg) {
    cfg.validate();
    const SourceState base = build_source(cfg.source);
    ScanTable table;
    table.scenario = scenario_name(cfg.variable);
    table.x.reserve(static_cast<size_t>(cfg.steps));
    table.probability.reserve(static_cast<size_t>(cfg.steps));
    for (int i = 0; i < cfg.steps; ++i) {
        const double x =
            cfg.sweep_from + (cfg.sweep_to - cfg.sweep_from) * i / (cfg.steps - 1);
        table.x.push_back(x);
        table.probability.push_back(scan_point(cfg, base, x));
    }
    return table;
}

namespace detail {

inline ScanTable run_scan_as(const ScanConfig& cfg, SweepVariable expected, const char* name) {
    if (cfg.variable != expected)
        throw std::invalid_argument(std::string(name) + ": config sweeps the wrong variable");
    return run_scan(cfg);
}

}  // namespace detail

inline ScanTable hom_dip_scan(const ScanConfig& cfg) {
    return detail::run_scan_as(cfg, SweepVariable::delay, "hom_dip_scan");
}

inline ScanTable theta_scan(const ScanConfig& cfg) {
    return detail::run_scan_as(cfg, SweepVariable::theta2, "theta_scan");
}

inline ScanTable fringe_scan(const ScanConfig& cfg) {
    return detail::run_scan_as(cfg, SweepVariable::phi, "fringe_scan");
}

// Adds a Poisson counts column with mean scaled so the row of maximum
// probability expects `mean_counts_at_max`. Sampling is row-sequential from a
// PCG32 stream, so a given seed yields one exact byte stream.
inline ScanTable poissonize(const ScanTable& table, double mean_counts_at_max,
                            std::uint64_t seed) {
    if (!(mean_counts_at_max >= 0.0))
        throw std::invalid_argument("poissonize: mean counts must be >= 0");
    ScanTable out = table;
    out.counts.assign(table.rows(), 0);
    const double max_p =
        table.probability.empty()
            ? 0.0
            : *std::max_element(table.probability.begin(), table.probability.end());
    if (max_p <= 0.0 || mean_counts_at_max == 0.0) return out;

    Pcg32 rng(seed);
    for (size_t i = 0; i < table.rows(); ++i) {
        const double mean = std::max(0.0, table.probability[i]) / max_p * mean_counts_at_max;
        out.counts[i] = poisson_sample(rng, mean);
    }
    return out;
}

}  // namespace fourphoton
