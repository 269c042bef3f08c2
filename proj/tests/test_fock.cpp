#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "fourphoton/fock.hpp"
#include "test_util.hpp"

using namespace fourphoton;
using testutil::bs_matrix;
using testutil::close;
using testutil::enumerate_fock;
using testutil::haar_unitary;
using testutil::random_ket;

namespace {

const ModeId kA{0, 0};
const ModeId kB{1, 0};

FockState fock2(int na, int nb) { return FockState({{kA, na}, {kB, nb}}); }

// Output of |2,2> at a beam splitter of transmissivity T, expanded by hand
// from the creation-operator substitution a† -> sqrt(T)A† - sqrt(R)B†,
// b† -> sqrt(R)A† + sqrt(T)B†. Independent oracle for the expansion engine.
struct TwoPairExpansion {
    double amp40, amp31, amp22, amp13, amp04;
    explicit TwoPairExpansion(double t) {
        const double r = 1.0 - t;
        amp40 = std::sqrt(6.0) * t * r;
        amp04 = amp40;
        amp31 = std::sqrt(6.0 * t * r) * (t - r);
        amp13 = -amp31;
        amp22 = (t - r) * (t - r) - 2.0 * t * r;
    }
};

const double kMagicT = (3.0 + std::sqrt(3.0)) / 6.0;

}  // namespace

TEST_CASE("fock state construction canonicalizes", "[fock]") {
    const FockState f({{kA, 2}, {kB, 2}});
    CHECK(f.total() == 4);
    CHECK(f.count(kA) == 2);
    CHECK(f.count(kB) == 2);

    const FockState vacuum(std::vector<std::pair<ModeId, int>>{});
    CHECK(vacuum.total() == 0);
    CHECK(vacuum.occupations().empty());

    // duplicate entries merge by summation
    const FockState merged({{kA, 2}, {kA, 1}});
    CHECK(merged.total() == 3);
    CHECK(merged.count(kA) == 3);

    // zero counts are dropped, order does not matter
    CHECK(FockState({{kB, 2}, {kA, 2}, {ModeId{2, 0}, 0}}) == f);

    CHECK_THROWS_AS(FockState({{kA, -1}}), std::invalid_argument);
}

TEST_CASE("inner product is a conjugate-linear form", "[fock]") {
    const Ket k22 = Ket::basis(fock2(2, 2));
    const Ket k40 = Ket::basis(fock2(4, 0));
    CHECK(close(inner(k22, k22), Complex{1.0, 0.0}, 1e-15));
    CHECK(close(inner(k40, k22), Complex{0.0, 0.0}, 1e-15));

    Ket x, y;
    x.add(fock2(2, 2), Complex{0.5, -0.25});
    x.add(fock2(4, 0), Complex{0.0, 1.0});
    y.add(fock2(2, 2), Complex{-0.75, 0.1});
    y.add(fock2(3, 1), Complex{0.3, 0.0});
    const Complex a{0.4, 1.2}, b{-0.8, 0.3};
    Ket ax = x, by = y;
    ax.scale(a);
    by.scale(b);
    CHECK(close(inner(ax, by), std::conj(a) * b * inner(x, y), 1e-14));
    CHECK(inner(x, x).imag() == 0.0);
    CHECK(inner(x, x).real() >= 0.0);
}

TEST_CASE("two-pair expansion stays normalized at any transmissivity", "[fock]") {
    Pcg32 rng(11);
    for (int i = 0; i < 20; ++i) {
        const double t = rng.uniform(0.01, 0.99);
        const Ket out = apply_mode_transform(Ket::basis(fock2(2, 2)),
                                             ModeTransform(bs_matrix(t)));
        CHECK(close(inner(out, out), Complex{1.0, 0.0}, 1e-12));
    }
}

TEST_CASE("beam splitter expansion of |2,2>", "[fock]") {
    SECTION("symmetric splitter") {
        const Ket out = apply_mode_transform(Ket::basis(fock2(2, 2)),
                                             ModeTransform(bs_matrix(0.5)));
        CHECK(close(out.amplitude(fock2(2, 2)), Complex{-0.5, 0.0}, 1e-14));
        CHECK(close(out.amplitude(fock2(4, 0)), Complex{std::sqrt(6.0) / 4.0, 0.0}, 1e-14));
        CHECK(close(out.amplitude(fock2(0, 4)), Complex{std::sqrt(6.0) / 4.0, 0.0}, 1e-14));
        CHECK(close(out.amplitude(fock2(3, 1)), Complex{0.0, 0.0}, 1e-14));
        CHECK(close(out.amplitude(fock2(1, 3)), Complex{0.0, 0.0}, 1e-14));
    }

    SECTION("the |2,2> term vanishes at T=(3+sqrt(3))/6") {
        const Ket out = apply_mode_transform(Ket::basis(fock2(2, 2)),
                                             ModeTransform(bs_matrix(kMagicT)));
        CHECK(close(out.amplitude(fock2(2, 2)), Complex{0.0, 0.0}, 1e-12));
        CHECK(close(out.amplitude(fock2(3, 1)), Complex{1.0 / std::sqrt(3.0), 0.0}, 1e-12));
        CHECK(close(out.amplitude(fock2(1, 3)), Complex{-1.0 / std::sqrt(3.0), 0.0}, 1e-12));
        CHECK(close(out.amplitude(fock2(4, 0)), Complex{1.0 / std::sqrt(6.0), 0.0}, 1e-12));
        CHECK(close(out.amplitude(fock2(0, 4)), Complex{1.0 / std::sqrt(6.0), 0.0}, 1e-12));
    }

    SECTION("full coefficient law over random transmissivities") {
        Pcg32 rng(20260809);
        for (int i = 0; i < 100; ++i) {
            const double t = rng.uniform(1e-3, 1.0 - 1e-3);
            const TwoPairExpansion expect(t);
            const Ket out = apply_mode_transform(Ket::basis(fock2(2, 2)),
                                                 ModeTransform(bs_matrix(t)));
            CHECK(close(out.amplitude(fock2(4, 0)), Complex{expect.amp40, 0.0}, 1e-12));
            CHECK(close(out.amplitude(fock2(3, 1)), Complex{expect.amp31, 0.0}, 1e-12));
            CHECK(close(out.amplitude(fock2(2, 2)), Complex{expect.amp22, 0.0}, 1e-12));
            CHECK(close(out.amplitude(fock2(1, 3)), Complex{expect.amp13, 0.0}, 1e-12));
            CHECK(close(out.amplitude(fock2(0, 4)), Complex{expect.amp04, 0.0}, 1e-12));
        }
    }
}

TEST_CASE("two-photon Hong-Ou-Mandel zero", "[fock]") {
    const Ket out = apply_mode_transform(Ket::basis(fock2(1, 1)),
                                         ModeTransform(bs_matrix(0.5)));
    CHECK(close(out.amplitude(fock2(1, 1)), Complex{0.0, 0.0}, 1e-14));
}

TEST_CASE("identity transform is a no-op", "[fock]") {
    Pcg32 rng(7);
    const Ket k = random_ket(rng, 4, 2, 2);
    const Ket out = apply_mode_transform(k, ModeTransform::identity(2));
    REQUIRE(out.size() == k.size());
    for (const auto& [state, amp] : k.terms()) CHECK(close(out.amplitude(state), amp, 1e-14));
}

TEST_CASE("transform dimension mismatch is rejected", "[fock]") {
    const Ket k = Ket::basis(FockState({{ModeId{2, 0}, 1}}));
    CHECK_THROWS_AS(apply_mode_transform(k, ModeTransform(bs_matrix(0.5))),
                    std::invalid_argument);
}

TEST_CASE("norm is preserved by random unitaries", "[fock]") {
    Pcg32 rng(101);
    for (int i = 0; i < 100; ++i) {
        const int channels = (i % 4 == 3) ? 3 : 2;
        const Ket k = random_ket(rng, 4, channels, 2);
        const Ket out = apply_mode_transform(k, ModeTransform(haar_unitary(rng, channels)));
        CHECK(close(out.norm2(), k.norm2(), 1e-12));
    }
}

TEST_CASE("sequential transforms compose as a matrix product", "[fock]") {
    Pcg32 rng(55);
    for (int i = 0; i < 20; ++i) {
        const int channels = (i % 2) ? 3 : 2;
        const ModeTransform u{haar_unitary(rng, channels)};
        const ModeTransform v{haar_unitary(rng, channels)};
        const Ket k = random_ket(rng, 3, channels, 1);
        const Ket two_step = apply_mode_transform(apply_mode_transform(k, u), v);
        const Ket one_step = apply_mode_transform(k, v.after(u));
        for (const auto& [state, amp] : two_step.terms())
            CHECK(close(one_step.amplitude(state), amp, 1e-12));
        CHECK(close(one_step.norm2(), two_step.norm2(), 1e-12));
    }
}

TEST_CASE("non-unitary matrices are rejected", "[fock]") {
    Eigen::MatrixXcd m(2, 2);
    m << 1.0, 0.0, 0.5, 1.0;
    CHECK_THROWS_AS(ModeTransform(m), std::invalid_argument);
}

TEST_CASE("permanent on small closed forms", "[fock]") {
    Eigen::MatrixXcd m(2, 2);
    m << Complex{1.0, 2.0}, Complex{0.5, -1.0}, Complex{-2.0, 0.25}, Complex{3.0, 3.0};
    // [[a,b],[c,d]] -> a*d + b*c
    CHECK(close(permanent(m), m(0, 0) * m(1, 1) + m(0, 1) * m(1, 0), 1e-14));

    for (int n = 1; n <= 6; ++n)
        CHECK(close(permanent(Eigen::MatrixXcd::Identity(n, n)), Complex{1.0, 0.0}, 1e-13));

    CHECK(close(permanent(Eigen::MatrixXcd::Ones(4, 4)), Complex{24.0, 0.0}, 1e-12));

    CHECK_THROWS_AS(permanent(Eigen::MatrixXcd::Ones(2, 3)), std::invalid_argument);
}

TEST_CASE("transition amplitudes at the published zeros", "[fock]") {
    CHECK(close(transition_amplitude(fock2(1, 1), fock2(1, 1), ModeTransform(bs_matrix(0.5))),
                Complex{0.0, 0.0}, 1e-14));
    CHECK(close(transition_amplitude(fock2(2, 2), fock2(2, 2), ModeTransform(bs_matrix(kMagicT))),
                Complex{0.0, 0.0}, 1e-12));
    CHECK_THROWS_AS(transition_amplitude(fock2(2, 2), fock2(3, 0), ModeTransform(bs_matrix(0.5))),
                    std::invalid_argument);
}

TEST_CASE("permanent oracle agrees with the expansion engine", "[fock]") {
    Pcg32 rng(4242);
    for (int trial = 0; trial < 50; ++trial) {
        const ModeTransform u{haar_unitary(rng, 2)};
        for (int n = 1; n <= 4; ++n) {
            for (const auto& in : enumerate_fock(n, 2, 1)) {
                const Ket expanded = apply_mode_transform(Ket::basis(in), u);
                for (const auto& out : enumerate_fock(n, 2, 1)) {
                    const Complex oracle = transition_amplitude(in, out, u);
                    CHECK(close(oracle, expanded.amplitude(out), 1e-10));
                }
            }
        }
    }
}

TEST_CASE("ket photon-number uniformity is enforced", "[fock]") {
    Ket k;
    k.add(fock2(2, 2), 1.0);
    CHECK_THROWS_AS(k.add(fock2(1, 0), 1.0), std::invalid_argument);
}
