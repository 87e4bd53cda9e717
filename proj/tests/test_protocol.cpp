#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cvqkd/protocol.hpp"

using namespace cvqkd;

namespace {

constexpr double cosh1 = 1.54308063481524377848;
constexpr double sinh1 = 1.17520119364380145688;

std::vector<ProtocolParams> grid_protocols() {
    std::vector<ProtocolParams> out;
    for (int i = 0; i < 20; ++i) {
        const double r = 3.0 * i / 19.0;
        out.push_back(ProtocolParams::coherent(r));
        out.push_back(ProtocolParams::squeezed(r));
    }
    return out;
}

std::vector<ChannelParams> grid_channels() {
    std::vector<ChannelParams> out;
    for (int j = 1; j <= 10; ++j) {
        const double t = j / 11.0;
        for (double eps : {0.0, 0.1, 0.5}) {
            out.emplace_back(t, eps);
        }
    }
    return out;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST(ChannelParamsTest, Validation) {
    EXPECT_THROW(ChannelParams(0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(ChannelParams(1.2, 0.0), std::invalid_argument);
    EXPECT_THROW(ChannelParams(0.5, -0.1), std::invalid_argument);
    EXPECT_NO_THROW(ChannelParams(1.0, 0.0));
    EXPECT_DOUBLE_EQ(ChannelParams(0.3, 0.0).loss(), 0.7);
}

TEST(ProtocolParamsTest, DefaultsByKind) {
    EXPECT_DOUBLE_EQ(ProtocolParams(ProtocolKind::coherent, 1.0).alice_transmittivity(), 0.5);
    EXPECT_DOUBLE_EQ(ProtocolParams(ProtocolKind::squeezed, 1.0).alice_transmittivity(), 1.0);
    EXPECT_DOUBLE_EQ(ProtocolParams::coherent(1.0, 0.3).alice_reflectivity(), 0.7);
    EXPECT_THROW(ProtocolParams::coherent(-1.0), std::invalid_argument);
    EXPECT_THROW(ProtocolParams::coherent(1.0, 0.0), std::invalid_argument);
}

TEST(Cloner, LossyLineUsesVacuum) {
    const auto c = cloner_from_channel(ChannelParams(0.7, 0.0));
    EXPECT_EQ(c.eve_squeezing, 0.0);
    EXPECT_DOUBLE_EQ(c.reflected_fraction(), 1.0 - 0.7);
}

TEST(Cloner, NoisyChannel) {
    const auto c = cloner_from_channel(ChannelParams(0.5, 0.5));
    EXPECT_NEAR(std::cosh(c.eve_squeezing), 1.5, 1e-14);
    EXPECT_NEAR(c.eve_squeezing, 0.962423650119206895, 1e-14);
}

TEST(Cloner, ConstraintHolds) {
    for (const auto& ch : grid_channels()) {
        const auto c = cloner_from_channel(ch);
        const double lhs = ch.loss() * std::cosh(c.eve_squeezing);
        const double rhs = ch.loss() + ch.excess_noise() * ch.transmission();
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * rhs);
    }
}

TEST(Cloner, LosslessChannel) {
    EXPECT_THROW(cloner_from_channel(ChannelParams(1.0, 0.1)), InfeasibleCloner);
    EXPECT_EQ(cloner_from_channel(ChannelParams(1.0, 0.0)).eve_squeezing, 0.0);
}

TEST(Cloner, OutsideEnvelope) {
    EXPECT_NO_THROW(cloner_from_channel(ChannelParams(1.0 - 1e-6, 10.0 * 0.999)));
    EXPECT_THROW(cloner_from_channel(ChannelParams(1.0 - 1e-9, 1.0)), std::invalid_argument);
}

TEST(GlobalState, NothingSent) {
    const auto g = build_global_state(ProtocolParams::coherent(0.0), ChannelParams(1.0, 0.0));
    EXPECT_TRUE(g.covariance().isApprox(Matrix::Identity(10, 10), 1e-15));
    EXPECT_DOUBLE_EQ(g.variance({mode::bob, Quadrature::X}), 1.0);
}

TEST(GlobalState, SqueezedOverIdentityChannel) {
    const double r = 0.8;
    const auto g = build_global_state(ProtocolParams::squeezed(r), ChannelParams(1.0, 0.0));
    const auto ab = partial_trace(g, {mode::alice_key, mode::bob});
    EXPECT_TRUE(ab.covariance().isApprox(two_mode_squeezed(r).covariance(), 1e-14));
    const auto rest = partial_trace(g, {mode::alice_ancilla, mode::eve_cloner, mode::eve_idler});
    EXPECT_TRUE(rest.covariance().isApprox(Matrix::Identity(6, 6), 1e-14));
}

TEST(GlobalState, PureOnGrid) {
    for (const auto& p : grid_protocols()) {
        for (const auto& ch : grid_channels()) {
            const auto spectrum = symplectic_eigenvalues(build_global_state(p, ch));
            ASSERT_EQ(spectrum.values.size(), 5u);
            for (double nu : spectrum.values) {
                ASSERT_NEAR(nu, 1.0, 1e-9) << "r=" << p.modulation() << " T=" << ch.transmission();
            }
        }
    }
}

TEST(GlobalState, EntropyBalance) {
    for (const auto& p : grid_protocols()) {
        for (const auto& ch : grid_channels()) {
            const auto g = build_global_state(p, ch);
            const double s_ab = von_neumann_entropy(partial_trace(g, {0, 1, 2}));
            const double s_e = von_neumann_entropy(partial_trace(g, {3, 4}));
            ASSERT_LE(std::abs(s_ab - s_e), 1e-8);
        }
    }
}

TEST(QuadratureCov, NoModulation) {
    const ChannelParams ch(0.6, 0.2);
    const auto cov = alice_bob_quadrature_cov(ProtocolParams::coherent(0.0), ch);
    EXPECT_DOUBLE_EQ(cov.v_a, 1.0);
    EXPECT_DOUBLE_EQ(cov.c, 0.0);
    EXPECT_NEAR(cov.v_b, 0.6 + 0.4 * 1.3, 1e-14);
}

TEST(QuadratureCov, IdentityChannel) {
    const auto cov = alice_bob_quadrature_cov(ProtocolParams::squeezed(1.0), ChannelParams(1.0, 0.0));
    EXPECT_NEAR(cov.v_a, cosh1, 1e-15);
    EXPECT_NEAR(cov.c, sinh1, 1e-15);
    EXPECT_NEAR(cov.v_b, cosh1, 1e-15);
}

TEST(QuadratureCov, NoisyChannel) {
    const auto cov = alice_bob_quadrature_cov(ProtocolParams::coherent(1.0), ChannelParams(0.6, 0.2));
    EXPECT_NEAR(cov.v_b, 1.44584838088914625, 1e-14);
}

TEST(QuadratureCov, MatchesModelOnGrid) {
    for (const auto& p : grid_protocols()) {
        for (const auto& ch : grid_channels()) {
            const auto g = build_global_state(p, ch);
            const auto closed = alice_bob_quadrature_cov(p, ch);
            const auto x = model_quadrature_cov(g, Quadrature::X);
            const auto pq = model_quadrature_cov(g, Quadrature::P);
            EXPECT_LE(rel_diff(x.v_a, closed.v_a), 1e-12);
            EXPECT_LE(rel_diff(x.v_b, closed.v_b), 1e-12);
            EXPECT_LE(rel_diff(x.c, closed.c), 1e-12);
            EXPECT_LE(rel_diff(pq.v_a, closed.v_a), 1e-12);
            EXPECT_LE(rel_diff(pq.v_b, closed.v_b), 1e-12);
            EXPECT_LE(rel_diff(pq.c, -closed.c), 1e-12);
        }
    }
}

// Bob's variance: T cosh r_A + (1 - T) + eps T.
TEST(QuadratureCov, ExcessNoiseReferredToInput) {
    for (const auto& p : grid_protocols()) {
        for (const auto& ch : grid_channels()) {
            const double model = build_global_state(p, ch).variance({mode::bob, Quadrature::X});
            const double expected = ch.transmission() * std::cosh(p.modulation()) + ch.loss() +
                                    ch.excess_noise() * ch.transmission();
            EXPECT_LE(rel_diff(model, expected), 1e-12);
        }
    }
}

TEST(QuadratureCov, BobVarianceMonotoneInNoise) {
    const auto p = ProtocolParams::coherent(1.3);
    double prev = 0.0;
    for (double eps = 0.0; eps <= 2.0; eps += 0.1) {
        const double vb = alice_bob_quadrature_cov(p, ChannelParams(0.4, eps)).v_b;
        EXPECT_GE(vb, prev);
        prev = vb;
    }
}

TEST(EveState, DecoupledOnIdentityChannel) {
    const auto e = eve_reduced_state(ProtocolParams::coherent(2.0), ChannelParams(1.0, 0.0));
    EXPECT_TRUE(e.covariance().isApprox(Matrix::Identity(4, 4), 1e-14));
}

TEST(EveState, LossyLineVariances) {
    for (double ta : {0.3, 0.5, 1.0}) {
        const auto e = eve_reduced_state(ProtocolParams::coherent(1.0, ta), ChannelParams(0.4, 0.0));
        EXPECT_NEAR(e.variance({0, Quadrature::X}), 1.32584838088914626, 1e-14);
        EXPECT_NEAR(e.variance({0, Quadrature::P}), 1.32584838088914626, 1e-14);
        EXPECT_NEAR(e.variance({1, Quadrature::X}), 1.0, 1e-15);
        EXPECT_NEAR(e.covariance()(0, 1), 0.0, 1e-15);
    }
}

TEST(EveState, UncorrelatedFormAgreesOnLossyLine) {
    const auto p = ProtocolParams::squeezed(1.7);
    const ChannelParams ch(0.35, 0.0);
    EXPECT_NEAR(eve_entropy_uncorrelated_form(p, ch), von_neumann_entropy(eve_reduced_state(p, ch)), 1e-10);
}

// With excess noise the cloner output and idler are correlated; the product form
// over-estimates Eve's entropy (subadditivity).
TEST(EveState, UncorrelatedFormIsAnUpperBound) {
    const auto p = ProtocolParams::coherent(1.0);
    const ChannelParams ch(0.5, 0.3);
    const auto e = eve_reduced_state(p, ch);
    EXPECT_GT(std::abs(e.covariance()(0, 1)), 0.1);
    EXPECT_GT(eve_entropy_uncorrelated_form(p, ch), von_neumann_entropy(e) + 1e-3);
}

TEST(PmModulation, ReferenceValues) {
    EXPECT_EQ(pm_modulation_variance(ProtocolParams::coherent(0.0)), 0.0);
    EXPECT_EQ(pm_modulation_variance(ProtocolParams::squeezed(0.0)), 0.0);
    EXPECT_NEAR(pm_modulation_variance(ProtocolParams::coherent(1.0)), 0.271540317407621889, 1e-15);
    EXPECT_NEAR(pm_modulation_variance(ProtocolParams::squeezed(1.0)), 0.447513180575679189, 1e-15);
    EXPECT_THROW(pm_modulation_variance(ProtocolParams::coherent(1.0, 0.3)), std::invalid_argument);
}
