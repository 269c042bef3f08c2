#pragma once

// Shared helpers for the test suites: deterministic random states and Haar
// unitaries, plus small closeness predicates.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fourphoton/fock.hpp"
#include "fourphoton/rng.hpp"

namespace testutil {

using fourphoton::Complex;
using fourphoton::FockState;
using fourphoton::Ket;
using fourphoton::ModeId;
using fourphoton::Pcg32;

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol; }

// Haar-distributed unitary: complex Ginibre matrix, QR, R-diagonal phase fix.
inline Eigen::MatrixXcd haar_unitary(Pcg32& rng, int dim) {
    Eigen::MatrixXcd g(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) g(r, c) = Complex{rng.normal(), rng.normal()};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < dim; ++c) {
        const Complex d = r(c, c);
        q.col(c) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex{1.0, 0.0};
    }
    return q;
}

// Beam-splitter convention used throughout: transmitted +sqrt(T) on both
// ports, reflected +sqrt(R) into output 0 and -sqrt(R) into output 1.
inline Eigen::MatrixXcd bs_matrix(double transmissivity) {
    const double t = std::sqrt(transmissivity);
    const double r = std::sqrt(1.0 - transmissivity);
    Eigen::MatrixXcd u(2, 2);
    u << t, r, -r, t;
    return u;
}

// All Fock states with `total` photons over channels x temporal slots.
inline std::vector<FockState> enumerate_fock(int total, int channels, int temporals) {
    const int slots = channels * temporals;
    std::vector<FockState> out;
    std::vector<int> counts(static_cast<size_t>(slots), 0);
    const std::function<void(int, int)> walk = [&](int slot, int remaining) {
        if (slot == slots - 1) {
            counts[static_cast<size_t>(slot)] = remaining;
            std::vector<std::pair<ModeId, int>> occ;
            for (int s = 0; s < slots; ++s)
                if (counts[static_cast<size_t>(s)] > 0)
                    occ.push_back({ModeId{s / temporals, s % temporals}, counts[static_cast<size_t>(s)]});
            out.push_back(FockState(occ));
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            counts[static_cast<size_t>(slot)] = k;
            walk(slot + 1, remaining - k);
        }
    };
    walk(0, total);
    return out;
}

inline Ket random_ket(Pcg32& rng, int photons, int channels, int temporals) {
    Ket k;
    for (const auto& state : enumerate_fock(photons, channels, temporals))
        k.add(state, Complex{rng.normal(), rng.normal()});
    return k.normalized();
}

}  // namespace testutil
