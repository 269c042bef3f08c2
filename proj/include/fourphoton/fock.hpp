#pragma once

// Exact algebra of multimode bosonic Fock states: sparse kets with complex
// amplitudes, linear mode transforms by creation-operator substitution, and a
// permanent-based transition-amplitude oracle.
//
// A mode is a (channel, temporal) pair: `channel` indexes the optical channel
// (spatial path or polarization), `temporal` indexes an orthonormal internal
// mode (temporal / Schmidt mode). Transforms mix channels and leave temporal
// indices alone; distinguishability enters through superpositions over
// temporal indices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fourphoton {

using Complex = std::complex<double>;

// Amplitudes with magnitude below this are dropped from kets.
inline constexpr double kAmplitudePrune = 1e-14;

// Exact in double for n <= 18; callers here never exceed 10.
inline double factorial(int n) {
    if (n < 0) throw std::invalid_argument("factorial: negative argument");
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

struct ModeId {
    int channel = 0;
    int temporal = 0;

    friend auto operator<=>(const ModeId&, const ModeId&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const ModeId& m) {
    return os << m.channel << '.' << m.temporal;
}

// Occupation-number basis state. Entries are kept sorted by (channel,
// temporal) with no zero counts, so equality and ordering are canonical.
class FockState {
  public:
    FockState() = default;

    explicit FockState(std::vector<std::pair<ModeId, int>> occupations) {
        std::sort(occupations.begin(), occupations.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [mode, count] : occupations) {
            if (count < 0) throw std::invalid_argument("FockState: negative photon count");
            if (count == 0) continue;
            if (!occ_.empty() && occ_.back().first == mode) {
                occ_.back().second += count;  // duplicate modes merge by summation
            } else {
                occ_.emplace_back(mode, count);
            }
            total_ += count;
        }
    }

    const std::vector<std::pair<ModeId, int>>& occupations() const { return occ_; }
    int total() const { return total_; }

    int count(const ModeId& mode) const {
        auto it = std::lower_bound(occ_.begin(), occ_.end(), mode,
                                   [](const auto& e, const ModeId& m) { return e.first < m; });
        return (it != occ_.end() && it->first == mode) ? it->second : 0;
    }

    int max_channel() const {
        int m = -1;
        for (const auto& [mode, count] : occ_) m = std::max(m, mode.channel);
        return m;
    }

    // Photon count per channel, temporal-blind; `channels` fixes the size.
    std::vector<int> channel_totals(int channels) const {
        std::vector<int> totals(static_cast<size_t>(channels), 0);
        for (const auto& [mode, count] : occ_) {
            if (mode.channel >= channels)
                throw std::invalid_argument("FockState: channel outside requested range");
            totals[static_cast<size_t>(mode.channel)] += count;
        }
        return totals;
    }

    // Sum of two occupation lists (product of creation monomials).
    static FockState merged(const FockState& a, const FockState& b) {
        FockState out;
        out.occ_.reserve(a.occ_.size() + b.occ_.size());
        auto ia = a.occ_.begin(), ib = b.occ_.begin();
        while (ia != a.occ_.end() || ib != b.occ_.end()) {
            if (ib == b.occ_.end() || (ia != a.occ_.end() && ia->first < ib->first)) {
                out.occ_.push_back(*ia++);
            } else if (ia == a.occ_.end() || ib->first < ia->first) {
                out.occ_.push_back(*ib++);
            } else {
                out.occ_.emplace_back(ia->first, ia->second + ib->second);
                ++ia, ++ib;
            }
        }
        out.total_ = a.total_ + b.total_;
        return out;
    }

    friend auto operator<=>(const FockState&, const FockState&) = default;

  private:
    std::vector<std::pair<ModeId, int>> occ_;
    int total_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const FockState& f) {
    if (f.occupations().empty()) return os << "|vac>";
    os << '|';
    bool first = true;
    for (const auto& [mode, count] : f.occupations()) {
        if (!first) os << ' ';
        os << count << '@' << mode;
        first = false;
    }
    return os << '>';
}

// prod_i sqrt(n_i!) over the occupations of `f`.
inline double sqrt_factorial_product(const FockState& f) {
    double p = 1.0;
    for (const auto& [mode, count] : f.occupations()) p *= std::sqrt(factorial(count));
    return p;
}

// Sparse superposition of Fock states with a fixed total photon number.
class Ket {
  public:
    Ket() = default;

    void add(const FockState& state, Complex amplitude) {
        if (!terms_.empty() && state.total() != photons_)
            throw std::invalid_argument("Ket: mixed photon numbers in one ket");
        photons_ = state.total();
        auto [it, inserted] = terms_.try_emplace(state, amplitude);
        if (!inserted) it->second += amplitude;
        if (std::abs(it->second) < kAmplitudePrune) terms_.erase(it);
    }

    const std::map<FockState, Complex>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    size_t size() const { return terms_.size(); }

    // Total photon number; only meaningful while non-empty.
    int photons() const { return photons_; }

    Complex amplitude(const FockState& state) const {
        auto it = terms_.find(state);
        return it == terms_.end() ? Complex{0.0, 0.0} : it->second;
    }

    double norm2() const {
        double n = 0.0;
        for (const auto& [state, amp] : terms_) n += std::norm(amp);
        return n;
    }

    void scale(Complex factor) {
        for (auto& [state, amp] : terms_) amp *= factor;
        prune();
    }

    Ket normalized() const {
        const double n2 = norm2();
        if (n2 <= 0.0) throw std::invalid_argument("Ket: cannot normalize a zero ket");
        Ket out = *this;
        out.scale(1.0 / std::sqrt(n2));
        return out;
    }

    void prune(double eps = kAmplitudePrune) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            it = std::abs(it->second) < eps ? terms_.erase(it) : std::next(it);
        }
    }

    int max_channel() const {
        int m = -1;
        for (const auto& [state, amp] : terms_) m = std::max(m, state.max_channel());
        return m;
    }

    static Ket basis(const FockState& state) {
        Ket k;
        k.add(state, 1.0);
        return k;
    }

  private:
    std::map<FockState, Complex> terms_;
    int photons_ = 0;
};

// <x|y>: conjugate-linear in x, linear in y.
inline Complex inner(const Ket& x, const Ket& y) {
    const auto& a = x.terms();
    const auto& b = y.terms();
    Complex s{0.0, 0.0};
    if (a.size() <= b.size()) {
        for (const auto& [state, amp] : a) s += std::conj(amp) * y.amplitude(state);
    } else {
        for (const auto& [state, amp] : b) s += std::conj(x.amplitude(state)) * amp;
    }
    return s;
}

inline std::ostream& operator<<(std::ostream& os, const Ket& k) {
    if (k.empty()) return os << "0";
    bool first = true;
    for (const auto& [state, amp] : k.terms()) {
        if (!first) os << " + ";
        os << '(' << amp.real() << (amp.imag() < 0 ? "-" : "+") << std::abs(amp.imag()) << "i)"
           << state;
        first = false;
    }
    return os;
}

// Unitary acting on channels (identity on temporal indices). The matrix maps
// input-mode annihilation operators to output ones: out_e = sum_e' U[e,e'] in_e'.
class ModeTransform {
  public:
    explicit ModeTransform(Eigen::MatrixXcd matrix, std::string label = "")
        : u_(std::move(matrix)), label_(std::move(label)) {
        if (u_.rows() != u_.cols() || u_.rows() < 1)
            throw std::invalid_argument("ModeTransform: matrix must be square and non-empty");
        const Eigen::MatrixXcd defect =
            u_ * u_.adjoint() - Eigen::MatrixXcd::Identity(u_.rows(), u_.cols());
        if (defect.cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("ModeTransform: matrix is not unitary (tolerance 1e-12)");
    }

    static ModeTransform identity(int channels, std::string label = "identity") {
        return ModeTransform(Eigen::MatrixXcd::Identity(channels, channels), std::move(label));
    }

    int channels() const { return static_cast<int>(u_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return u_; }
    const std::string& label() const { return label_; }

    // Composition: result acts as `first`, then `*this`.
    ModeTransform after(const ModeTransform& first) const {
        if (channels() != first.channels())
            throw std::invalid_argument("ModeTransform: dimension mismatch in composition");
        return ModeTransform(u_ * first.u_, label_.empty() ? first.label_ : first.label_ + ";" + label_);
    }

  private:
    Eigen::MatrixXcd u_;
    std::string label_;
};

// One creation operator rewritten as a linear combination of others.
using ModeSubstitution =
    std::function<std::vector<std::pair<ModeId, Complex>>(const ModeId&)>;

namespace detail {

// n! / prod(parts!), exact for n <= 18.
inline double multinomial(int n, const std::vector<int>& parts) {
    double m = factorial(n);
    for (int p : parts) m /= factorial(p);
    return std::round(m);
}

inline Complex int_pow(Complex base, int exp) {
    Complex r{1.0, 0.0};
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Expansion of (sum_j c_j a†_{m_j})^n as a creation-monomial polynomial.
inline std::map<FockState, Complex> operator_power(
    const std::vector<std::pair<ModeId, Complex>>& targets, int n) {
    std::map<FockState, Complex> poly;
    const int j_count = static_cast<int>(targets.size());
    std::vector<int> parts(static_cast<size_t>(j_count), 0);
    const std::function<void(int, int)> walk = [&](int j, int remaining) {
        if (j == j_count - 1) {
            parts[static_cast<size_t>(j)] = remaining;
            Complex coeff = detail::multinomial(n, parts);
            std::vector<std::pair<ModeId, int>> occ;
            for (int t = 0; t < j_count; ++t) {
                if (parts[static_cast<size_t>(t)] == 0) continue;
                coeff *= int_pow(targets[static_cast<size_t>(t)].second,
                                 parts[static_cast<size_t>(t)]);
                occ.emplace_back(targets[static_cast<size_t>(t)].first,
                                 parts[static_cast<size_t>(t)]);
            }
            poly[FockState(std::move(occ))] += coeff;
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            parts[static_cast<size_t>(j)] = k;
            walk(j + 1, remaining - k);
        }
    };
    walk(0, n);
    return poly;
}

inline std::map<FockState, Complex> polynomial_product(
    const std::map<FockState, Complex>& a, const std::map<FockState, Complex>& b) {
    std::map<FockState, Complex> out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) out[FockState::merged(ma, mb)] += ca * cb;
    return out;
}

}  // namespace detail

// Rewrites every creation operator of `in` through `sub` and re-expands the
// result multinomially. Norm is preserved whenever `sub` is an isometry;
// photon number is preserved always.
inline Ket substitute_modes(const Ket& in, const ModeSubstitution& sub) {
    Ket out;
    for (const auto& [state, amplitude] : in.terms()) {
        std::map<FockState, Complex> poly;
        poly.emplace(FockState{}, amplitude / sqrt_factorial_product(state));
        for (const auto& [mode, count] : state.occupations()) {
            const auto targets = sub(mode);
            if (targets.empty())
                throw std::invalid_argument("substitute_modes: empty substitution target");
            poly = detail::polynomial_product(poly, detail::operator_power(targets, count));
        }
        for (const auto& [monomial, coeff] : poly)
            out.add(monomial, coeff * sqrt_factorial_product(monomial));
    }
    out.prune();
    return out;
}

// Applies a channel unitary: a†_{e,k} -> sum_e' U[e',e] a†_{e',k}.
inline Ket apply_mode_transform(const Ket& state, const ModeTransform& u) {
    if (state.max_channel() >= u.channels())
        throw std::invalid_argument("apply_mode_transform: state channel exceeds transform size");
    const auto& m = u.matrix();
    return substitute_modes(state, [&m](const ModeId& mode) {
        std::vector<std::pair<ModeId, Complex>> targets;
        targets.reserve(static_cast<size_t>(m.rows()));
        for (int out_ch = 0; out_ch < m.rows(); ++out_ch) {
            const Complex c = m(out_ch, mode.channel);
            if (std::abs(c) > 0.0)
                targets.emplace_back(ModeId{out_ch, mode.temporal}, c);
        }
        return targets;
    });
}

// Matrix permanent by Ryser's formula with Gray-code subset iteration,
// O(2^N * N). N <= 20 keeps this well under a second.
inline Complex permanent(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("permanent: matrix must be square");
    const int n = static_cast<int>(m.rows());
    if (n == 0) return {1.0, 0.0};
    if (n > 20) throw std::invalid_argument("permanent: dimension > 20 not supported");

    std::vector<Complex> row_sum(static_cast<size_t>(n), Complex{0.0, 0.0});
    Complex total{0.0, 0.0};
    std::uint32_t prev_gray = 0;
    const std::uint64_t subsets = std::uint64_t{1} << n;
    for (std::uint64_t k = 1; k < subsets; ++k) {
        const auto gray = static_cast<std::uint32_t>(k ^ (k >> 1));
        const std::uint32_t flipped = gray ^ prev_gray;
        int col = 0;
        while (!((flipped >> col) & 1u)) ++col;
        const double direction = (gray & flipped) ? 1.0 : -1.0;
        for (int i = 0; i < n; ++i) row_sum[static_cast<size_t>(i)] += direction * m(i, col);

        Complex prod{1.0, 0.0};
        for (int i = 0; i < n; ++i) prod *= row_sum[static_cast<size_t>(i)];
        int bits = 0;
        for (std::uint32_t g = gray; g; g &= g - 1) ++bits;
        total += (((n - bits) & 1) ? -1.0 : 1.0) * prod;
        prev_gray = gray;
    }
    return total;
}

// Single-temporal-mode transition amplitude <out| U |in> via the permanent of
// the row/column-repeated submatrix. Independent oracle for
// apply_mode_transform: amp = per(U[out|in]) / sqrt(prod n_i! prod m_j!).
inline Complex transition_amplitude(const FockState& input, const FockState& output,
                                    const ModeTransform& u) {
    if (input.total() != output.total())
        throw std::invalid_argument("transition_amplitude: photon-number mismatch");
    if (input.total() > 10)
        throw std::invalid_argument("transition_amplitude: more than 10 photons");

    auto expand = [&u](const FockState& f) {
        std::vector<int> channels;
        for (const auto& [mode, count] : f.occupations()) {
            if (mode.temporal != 0)
                throw std::invalid_argument(
                    "transition_amplitude: only single-temporal-mode states supported");
            if (mode.channel >= u.channels())
                throw std::invalid_argument("transition_amplitude: channel exceeds transform size");
            for (int i = 0; i < count; ++i) channels.push_back(mode.channel);
        }
        return channels;
    };
    const std::vector<int> cols = expand(input);
    const std::vector<int> rows = expand(output);

    const int n = static_cast<int>(cols.size());
    Eigen::MatrixXcd sub(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            sub(r, c) = u.matrix()(rows[static_cast<size_t>(r)], cols[static_cast<size_t>(c)]);

    double norm = 1.0;
    for (const auto& [mode, count] : input.occupations()) norm *= factorial(count);
    for (const auto& [mode, count] : output.occupations()) norm *= factorial(count);
    return permanent(sub) / std::sqrt(norm);
}

}  // namespace fourphoton
