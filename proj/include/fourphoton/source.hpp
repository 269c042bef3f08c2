#pragma once

// Double-pair input states for the four-photon experiments. The ideal input
// is |2_H, 2_V> with every photon in one temporal mode. Partial
// distinguishability between the two down-converted pairs is modeled
// structurally: the pair amplitude is decomposed over orthonormal Schmidt
// modes with weights lambda_k, and the double-pair state is
// (sum_k lambda_k h†_k v†_k)^2 |0>, normalized. The temporal-mismatch
// parameter of the theta-scan model then comes out as sum_k lambda_k^4.
//
// A relative delay between the H and V photons rotates each H temporal mode
// partly into a fresh orthogonal mode, with overlap eta = exp(-d²/(2 Lc²)).

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fourphoton/fock.hpp"

namespace fourphoton {

inline constexpr int kChannelH = 0;
inline constexpr int kChannelV = 1;

struct SchmidtSpec {
    std::vector<double> lambdas;

    void validate() const {
        if (lambdas.empty() || lambdas.size() > 4)
            throw std::invalid_argument("SchmidtSpec: need between 1 and 4 Schmidt modes");
        double sum2 = 0.0, max_l = 0.0;
        for (double l : lambdas) {
            if (l < 0.0) throw std::invalid_argument("SchmidtSpec: negative weight");
            sum2 += l * l;
            max_l = std::max(max_l, l);
        }
        if (max_l == 0.0) throw std::invalid_argument("SchmidtSpec: all weights zero");
        if (std::abs(sum2 - 1.0) > 1e-12)
            throw std::invalid_argument("SchmidtSpec: weights must satisfy sum lambda^2 = 1");
    }
};

struct DelayModel {
    double delta_um = 0.0;              // relative H-V delay
    double coherence_length_um = 120.0;  // Gaussian overlap scale Lc

    void validate() const {
        if (!(coherence_length_um > 0.0))
            throw std::invalid_argument("DelayModel: coherence length must be positive");
    }
};

// Overlap between a delayed H temporal mode and its undelayed counterpart.
inline double delay_overlap(const DelayModel& d) {
    d.validate();
    const double ratio = d.delta_um / d.coherence_length_um;
    return std::exp(-0.5 * ratio * ratio);
}

struct SourceState {
    Ket ket;
    SchmidtSpec schmidt;
    DelayModel delay;
};

// Normalized (sum_k lambda_k h†_k v†_k)^2 |0>.
inline SourceState schmidt_two_pairs(const SchmidtSpec& spec) {
    spec.validate();
    const auto modes = static_cast<int>(spec.lambdas.size());
    Ket ket;
    for (int k = 0; k < modes; ++k) {
        const double lk = spec.lambdas[static_cast<size_t>(k)];
        if (lk == 0.0) continue;
        // h†_k² v†_k² |0> = 2 |2_Hk, 2_Vk>
        ket.add(FockState({{ModeId{kChannelH, k}, 2}, {ModeId{kChannelV, k}, 2}}),
                2.0 * lk * lk);
        for (int l = k + 1; l < modes; ++l) {
            const double ll = spec.lambdas[static_cast<size_t>(l)];
            if (ll == 0.0) continue;
            ket.add(FockState({{ModeId{kChannelH, k}, 1},
                               {ModeId{kChannelH, l}, 1},
                               {ModeId{kChannelV, k}, 1},
                               {ModeId{kChannelV, l}, 1}}),
                    2.0 * lk * ll);
        }
    }
    return SourceState{ket.normalized(), spec, DelayModel{}};
}

inline SourceState ideal_two_pairs() { return schmidt_two_pairs(SchmidtSpec{{1.0}}); }

// Pair-pair mode-match parameter: sum_k lambda_k^4, in (0, 1]; equal to 1
// exactly when a single Schmidt mode carries all the weight.
inline double e_over_a(const SchmidtSpec& spec) {
    spec.validate();
    double sum4 = 0.0;
    for (double l : spec.lambdas) sum4 += l * l * l * l;
    return sum4;
}

// Two-mode spec realizing a requested mode-match value x = sum lambda^4;
// solvable with two modes for x in [1/2, 1].
inline SchmidtSpec schmidt_from_e_over_a(double x) {
    if (!(x >= 0.5 && x <= 1.0))
        throw std::invalid_argument(
            "schmidt_from_e_over_a: two Schmidt modes cover only [0.5, 1]; pass explicit "
            "weights for lower values");
    if (x == 1.0) return SchmidtSpec{{1.0}};
    const double l1sq = 0.5 * (1.0 + std::sqrt(2.0 * x - 1.0));
    return SchmidtSpec{{std::sqrt(l1sq), std::sqrt(1.0 - l1sq)}};
}

// Delays the H photons against the V photons. Temporal mode k moves to slot
// 2k and each H creation operator rotates partly into the fresh orthogonal
// slot 2k+1: h†_k -> eta h†_{2k} + sqrt(1-eta²) h†_{2k+1}. V photons keep
// their (relabeled) modes, so delayed components of distinct Schmidt modes
// stay mutually orthogonal.
inline SourceState apply_delay(const SourceState& src, const DelayModel& d) {
    const double eta = delay_overlap(d);
    if (d.delta_um == 0.0) return SourceState{src.ket, src.schmidt, d};

    const double ortho = std::sqrt(std::max(0.0, 1.0 - eta * eta));
    const Ket delayed = substitute_modes(src.ket, [eta, ortho](const ModeId& mode) {
        std::vector<std::pair<ModeId, Complex>> targets;
        if (mode.channel == kChannelH) {
            if (eta > 0.0) targets.push_back({ModeId{kChannelH, 2 * mode.temporal}, eta});
            if (ortho > 0.0) targets.push_back({ModeId{kChannelH, 2 * mode.temporal + 1}, ortho});
        } else {
            targets.push_back({ModeId{mode.channel, 2 * mode.temporal}, 1.0});
        }
        return targets;
    });
    return SourceState{delayed, src.schmidt, d};
}

}  // namespace fourphoton
