#pragma once

// Entanglement-based picture of the prepare-and-measure protocols plus the
// entangling-cloner attack, as one pure five-mode Gaussian state.
//
// Mode roles:
//   0  Alice's key mode (first output of her beam splitter)
//   1  Alice's ancilla mode (second output; vacuum input)
//   2  Bob's mode
//   3  Eve's cloner output (the reflected part of the signal)
//   4  Eve's idler (the half of her two-mode squeezed state she keeps)

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/symplectic.hpp"

namespace cvqkd {

namespace mode {
inline constexpr std::size_t alice_key = 0;
inline constexpr std::size_t alice_ancilla = 1;
inline constexpr std::size_t bob = 2;
inline constexpr std::size_t eve_cloner = 3;
inline constexpr std::size_t eve_idler = 4;
inline constexpr std::size_t count = 5;
} // namespace mode

enum class ProtocolKind { coherent, squeezed };

inline const char* to_string(ProtocolKind kind) { return kind == ProtocolKind::coherent ? "coherent" : "squeezed"; }

inline double default_alice_transmittivity(ProtocolKind kind) { return kind == ProtocolKind::coherent ? 0.5 : 1.0; }

/// Largest cosh(r_E) - 1 accepted for Eve's squeezing.
inline constexpr double max_cloner_excess = 1e7;

class ChannelParams {
  public:
    ChannelParams(double transmission, double excess_noise) : transmission_(transmission), excess_noise_(excess_noise) {
        if (!(transmission > 0.0 && transmission <= 1.0)) {
            throw std::invalid_argument("channel transmission must lie in (0, 1]");
        }
        if (!(excess_noise >= 0.0) || !std::isfinite(excess_noise)) {
            throw std::invalid_argument("excess noise must be finite and >= 0");
        }
    }

    double transmission() const { return transmission_; }
    double excess_noise() const { return excess_noise_; }
    double loss() const { return 1.0 - transmission_; }

  private:
    double transmission_;
    double excess_noise_;
};

class ProtocolParams {
  public:
    ProtocolParams(ProtocolKind kind, double modulation, double alice_transmittivity)
        : kind_(kind), modulation_(modulation), alice_transmittivity_(alice_transmittivity) {
        if (!(modulation >= 0.0) || !std::isfinite(modulation)) {
            throw std::invalid_argument("modulation r_A must be finite and >= 0");
        }
        if (!(alice_transmittivity > 0.0 && alice_transmittivity <= 1.0)) {
            throw std::invalid_argument("Alice's transmittivity T_A must lie in (0, 1]");
        }
    }

    ProtocolParams(ProtocolKind kind, double modulation)
        : ProtocolParams(kind, modulation, default_alice_transmittivity(kind)) {}

    static ProtocolParams coherent(double modulation, double alice_transmittivity = 0.5) {
        return {ProtocolKind::coherent, modulation, alice_transmittivity};
    }
    static ProtocolParams squeezed(double modulation, double alice_transmittivity = 1.0) {
        return {ProtocolKind::squeezed, modulation, alice_transmittivity};
    }

    ProtocolKind kind() const { return kind_; }
    double modulation() const { return modulation_; }
    double alice_transmittivity() const { return alice_transmittivity_; }
    double alice_reflectivity() const { return 1.0 - alice_transmittivity_; }

    ProtocolParams with_modulation(double r) const { return {kind_, r, alice_transmittivity_}; }

  private:
    ProtocolKind kind_;
    double modulation_;
    double alice_transmittivity_;
};

/// Eve's beam splitter passes sqrt(T) of the signal on to Bob; the fraction she
/// reflects into her own mode is 1 - T.
struct EntanglingCloner {
    double eve_squeezing = 0.0;
    double signal_transmission = 1.0;

    double reflected_fraction() const { return 1.0 - signal_transmission; }
};

/// Per-quadrature classical covariance of Alice's and Bob's homodyne data.
struct BivariateCov {
    double v_a = 1.0;
    double v_b = 1.0;
    double c = 0.0;

    double determinant() const { return v_a * v_b - c * c; }
};

/// Picks r_E with (1 - T) cosh r_E = 1 - T + eps T, i.e. excess noise referred to the channel input.
inline EntanglingCloner cloner_from_channel(const ChannelParams& ch) {
    const double t = ch.transmission();
    const double eps = ch.excess_noise();
    if (eps == 0.0) {
        return {0.0, t};
    }
    if (t == 1.0) {
        throw InfeasibleCloner("no entangling cloner reproduces excess noise on a lossless channel (T = 1, eps > 0)");
    }
    const double excess = eps * t / (1.0 - t);
    if (excess > max_cloner_excess) {
        throw std::invalid_argument("channel outside the supported envelope: eps*T/(1-T) = " + std::to_string(excess) +
                                    " exceeds 1e7");
    }
    return {std::acosh(1.0 + excess), t};
}

/// Pure five-mode state; see the mode table at the top of this header.
inline GaussianState build_global_state(const ProtocolParams& p, const ChannelParams& ch) {
    const EntanglingCloner cloner = cloner_from_channel(ch);

    // [alice, signal] + [ancilla] + [eve cloner, eve idler], then put the ancilla in slot 1.
    const GaussianState sources =
        direct_sum(direct_sum(two_mode_squeezed(p.modulation()), vacuum_state(1)), two_mode_squeezed(cloner.eve_squeezing));
    GaussianState state = partial_trace(sources, {0, 2, 1, 3, 4});

    state = apply(beam_splitter(p.alice_transmittivity(), mode::alice_key, mode::alice_ancilla, mode::count), state);
    state = apply(beam_splitter(cloner.signal_transmission, mode::bob, mode::eve_cloner, mode::count), state);
    return state;
}

/// Closed-form Alice/Bob covariance for one matched quadrature.
inline BivariateCov alice_bob_quadrature_cov(const ProtocolParams& p, const ChannelParams& ch) {
    const EntanglingCloner cloner = cloner_from_channel(ch);
    const double ta = p.alice_transmittivity();
    const double t = ch.transmission();
    const double r = p.modulation();
    return {
        .v_a = ta * std::cosh(r) + p.alice_reflectivity(),
        .v_b = t * std::cosh(r) + ch.loss() * std::cosh(cloner.eve_squeezing),
        .c = std::sqrt(ta * t) * std::sinh(r),
    };
}

/// Reads the (Alice key mode, Bob) block of one quadrature from a global state.
inline BivariateCov model_quadrature_cov(const GaussianState& global, Quadrature q) {
    const QuadratureSelector a{mode::alice_key, q};
    const QuadratureSelector b{mode::bob, q};
    const Matrix& cov = global.covariance();
    return {
        .v_a = cov(global.index(a), global.index(a)),
        .v_b = cov(global.index(b), global.index(b)),
        .c = cov(global.index(a), global.index(b)),
    };
}

inline GaussianState eve_reduced_state(const ProtocolParams& p, const ChannelParams& ch) {
    return partial_trace(build_global_state(p, ch), {mode::eve_cloner, mode::eve_idler});
}

/// Eve's entropy if her two modes were the uncorrelated thermal pair with variances
/// (T cosh r_E + (1-T) cosh r_A, cosh r_E). Matches the full model only when eps = 0;
/// for eps > 0 the model's cloner/idler correlations lower the true entropy.
inline double eve_entropy_uncorrelated_form(const ProtocolParams& p, const ChannelParams& ch) {
    const EntanglingCloner cloner = cloner_from_channel(ch);
    const double ce = std::cosh(cloner.eve_squeezing);
    const double cloner_variance = ch.transmission() * ce + ch.loss() * std::cosh(p.modulation());
    return entropy_g(cloner_variance) + entropy_g(ce);
}

/// Prepare-and-measure modulation variance equivalent to the entangled source.
/// Requires the kind's default T_A.
inline double pm_modulation_variance(const ProtocolParams& p) {
    if (p.alice_transmittivity() != default_alice_transmittivity(p.kind())) {
        throw std::invalid_argument("pm_modulation_variance: defined only for the default T_A of each protocol kind");
    }
    const double r = p.modulation();
    if (p.kind() == ProtocolKind::coherent) {
        return 0.5 * (std::cosh(r) - 1.0);
    }
    const double s = std::sinh(r);
    return s * s / (2.0 * std::cosh(r));
}

} // namespace cvqkd
