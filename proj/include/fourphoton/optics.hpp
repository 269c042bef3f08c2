#pragma once

// Optical elements and circuits on top of the Fock-state engine, plus
// temporal-mode-blind detection probabilities for post-selected coincidence
// patterns.
//
// Beam-splitter convention: annihilation operators transform as
//   out_0 = sqrt(T) in_0 + sqrt(R) in_1
//   out_1 = sqrt(T) in_1 - sqrt(R) in_0
// with R = 1 - T. A half-wave plate at angle theta followed by a polarizing
// beam splitter acts as a beam splitter with T = cos^2(2 theta), and is
// modeled exactly that way. A phase shifter multiplies its channel by
// exp(i phi).

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fourphoton/fock.hpp"

namespace fourphoton {

struct BeamSplitter {
    double transmissivity = 0.5;
    std::array<int, 2> ports{0, 1};
};

struct HalfWavePlate {
    double theta = 0.0;  // radians
    std::array<int, 2> ports{0, 1};
};

struct PhaseShifter {
    double phi = 0.0;  // radians
    int port = 1;
};

using Element = std::variant<BeamSplitter, HalfWavePlate, PhaseShifter>;

struct Circuit {
    int channels = 2;
    std::vector<Element> elements;
};

// Photon counts per channel, blind to temporal modes.
struct DetectionPattern {
    std::vector<int> counts;

    explicit DetectionPattern(std::vector<int> c) : counts(std::move(c)) {
        for (int n : counts)
            if (n < 0) throw std::invalid_argument("DetectionPattern: negative count");
    }

    int total() const { return std::accumulate(counts.begin(), counts.end(), 0); }
};

inline double hwp_transmissivity(double theta) {
    const double c = std::cos(2.0 * theta);
    return c * c;
}

// Transmissivities (3 ± sqrt(3))/6 at which the |2,2> output term of a
// two-pair input cancels, giving the four-photon coincidence null.
inline const double kHomNullTransmissivityHigh = (3.0 + std::sqrt(3.0)) / 6.0;
inline const double kHomNullTransmissivityLow = (3.0 - std::sqrt(3.0)) / 6.0;

// Half-wave-plate angle (radians, ~13.68 deg) realizing the high null
// transmissivity: cos^2(2 theta) = (3 + sqrt(3))/6.
inline double hom_null_hwp_angle() {
    return 0.5 * std::acos(std::sqrt(kHomNullTransmissivityHigh));
}

namespace detail {

inline Eigen::MatrixXcd embed_beam_splitter(double transmissivity, std::array<int, 2> ports,
                                            int channels) {
    if (transmissivity < 0.0 || transmissivity > 1.0)
        throw std::invalid_argument("BeamSplitter: transmissivity outside [0, 1]");
    if (ports[0] == ports[1] || ports[0] < 0 || ports[1] < 0 || ports[0] >= channels ||
        ports[1] >= channels)
        throw std::invalid_argument("BeamSplitter: ports must be distinct and in range");
    const double t = std::sqrt(transmissivity);
    const double r = std::sqrt(1.0 - transmissivity);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(channels, channels);
    u(ports[0], ports[0]) = t;
    u(ports[0], ports[1]) = r;
    u(ports[1], ports[0]) = -r;
    u(ports[1], ports[1]) = t;
    return u;
}

}  // namespace detail

inline ModeTransform element_transform(const Element& element, int channels) {
    if (std::holds_alternative<BeamSplitter>(element)) {
        const auto& bs = std::get<BeamSplitter>(element);
        return ModeTransform(detail::embed_beam_splitter(bs.transmissivity, bs.ports, channels),
                             "beam-splitter");
    }
    if (std::holds_alternative<HalfWavePlate>(element)) {
        const auto& hwp = std::get<HalfWavePlate>(element);
        return ModeTransform(
            detail::embed_beam_splitter(hwp_transmissivity(hwp.theta), hwp.ports, channels),
            "half-wave-plate");
    }
    const auto& ps = std::get<PhaseShifter>(element);
    if (ps.port < 0 || ps.port >= channels)
        throw std::invalid_argument("PhaseShifter: port out of range");
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(channels, channels);
    u(ps.port, ps.port) = std::polar(1.0, ps.phi);
    return ModeTransform(u, "phase-shifter");
}

// Net transform of the ordered element sequence (later elements leftmost).
inline ModeTransform circuit_transform(const Circuit& circuit) {
    ModeTransform net = ModeTransform::identity(circuit.channels);
    for (const Element& element : circuit.elements)
        net = element_transform(element, circuit.channels).after(net);
    return net;
}

inline Ket run_circuit(const Ket& input, const Circuit& circuit) {
    if (input.max_channel() >= circuit.channels)
        throw std::invalid_argument("run_circuit: input channel exceeds circuit size");
    return apply_mode_transform(input, circuit_transform(circuit));
}

// Probability of seeing `pattern` photon counts per channel, summed over all
// temporal assignments. The state must be normalized within 1e-9 unless
// `renormalize` is set.
inline double detect_prob(const Ket& state, const DetectionPattern& pattern,
                          bool renormalize = false) {
    const double n2 = state.norm2();
    if (!renormalize && std::abs(n2 - 1.0) > 1e-9)
        throw std::runtime_error("detect_prob: state is not normalized (pass renormalize=true)");
    if (n2 <= 0.0) throw std::runtime_error("detect_prob: zero state");

    const auto channels = static_cast<int>(pattern.counts.size());
    double prob = 0.0;
    for (const auto& [fock, amp] : state.terms()) {
        if (fock.max_channel() >= channels) continue;  // photons outside the pattern
        if (fock.channel_totals(channels) == pattern.counts) prob += std::norm(amp);
    }
    return prob / n2;
}

// All count patterns with `total` photons over `channels` channels, in
// lexicographic order.
inline std::vector<DetectionPattern> all_detection_patterns(int total, int channels) {
    std::vector<DetectionPattern> out;
    std::vector<int> counts(static_cast<size_t>(channels), 0);
    const std::function<void(int, int)> walk = [&](int ch, int remaining) {
        if (ch == channels - 1) {
            counts[static_cast<size_t>(ch)] = remaining;
            out.push_back(DetectionPattern(counts));
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            counts[static_cast<size_t>(ch)] = k;
            walk(ch + 1, remaining - k);
        }
    };
    if (channels < 1) throw std::invalid_argument("all_detection_patterns: need >= 1 channel");
    walk(0, total);
    return out;
}

// Normally ordered four-photon moment <c†² d†² d² c²> over the two channels,
// temporal-blind. Diagonal in the Fock basis: each term contributes
// |amp|² n_c (n_c - 1) n_d (n_d - 1), so for four photons it equals
// 4 * detect_prob(pattern (2,2)).
inline double normally_ordered_moment(const Ket& state, std::pair<int, int> channel_pair = {0, 1}) {
    if (state.empty() || state.photons() != 4)
        throw std::invalid_argument("normally_ordered_moment: state must carry exactly 4 photons");
    const int needed = std::max(channel_pair.first, channel_pair.second) + 1;
    double moment = 0.0;
    for (const auto& [fock, amp] : state.terms()) {
        const auto totals = fock.channel_totals(std::max(needed, fock.max_channel() + 1));
        const double nc = totals[static_cast<size_t>(channel_pair.first)];
        const double nd = totals[static_cast<size_t>(channel_pair.second)];
        moment += std::norm(amp) * nc * (nc - 1.0) * nd * (nd - 1.0);
    }
    return moment;
}

}  // namespace fourphoton
