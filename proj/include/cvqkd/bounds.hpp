#pragma once

// Secret key rate bounds on the five-mode model:
//   general     I_AB - S(rho_AB)          (no assumption on Eve's attack)
//   general_w   I_AB - S(rho_E | W)       (Alice discloses her second quadrature)
//   collective  I_AB - chi(A:E) or I_AB - chi(B:E)
// All quantities are computed in nats and converted at the reporting boundary.
// Rates are per matched channel use (no sifting factor).

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "cvqkd/protocol.hpp"
#include "cvqkd/symplectic.hpp"

namespace cvqkd {

enum class BoundKind { general, general_w, collective };
enum class Direction { direct, reverse };
enum class LogBase { nats, bits };

inline const char* to_string(BoundKind kind) {
    switch (kind) {
    case BoundKind::general:
        return "general";
    case BoundKind::general_w:
        return "general_w";
    case BoundKind::collective:
        return "collective";
    }
    return "?";
}

inline const char* to_string(Direction dir) { return dir == Direction::direct ? "direct" : "reverse"; }
inline const char* to_string(LogBase base) { return base == LogBase::nats ? "nats" : "bits"; }

struct KeyRateReport {
    double i_ab = 0.0;
    double eve_term = 0.0;
    double key_rate = 0.0;
    LogBase base = LogBase::nats;
    BoundKind bound = BoundKind::general;
    std::optional<Direction> direction;
    ProtocolParams protocol;
    ChannelParams channel;

    /// Same report expressed in another logarithm base.
    KeyRateReport in(LogBase target) const {
        if (target == base) {
            return *this;
        }
        auto convert = [target](double v) {
            return target == LogBase::bits ? v / std::numbers::ln2 : v * std::numbers::ln2;
        };
        KeyRateReport out = *this;
        out.i_ab = convert(i_ab);
        out.eve_term = convert(eve_term);
        out.key_rate = convert(key_rate);
        out.base = target;
        return out;
    }
};

/// Throws std::invalid_argument for combinations that have no meaning:
/// a direction on a general bound, none on the collective one, or W disclosure
/// with squeezed states.
inline void validate_bound_selection(BoundKind bound, std::optional<Direction> dir, ProtocolKind kind) {
    if (bound == BoundKind::collective && !dir) {
        throw std::invalid_argument("collective bound requires a reconciliation direction");
    }
    if (bound != BoundKind::collective && dir) {
        throw std::invalid_argument("a reconciliation direction is only meaningful for the collective bound");
    }
    if (bound == BoundKind::general_w && kind != ProtocolKind::coherent) {
        throw std::invalid_argument("general_w requires coherent states");
    }
}

inline double mutual_information(const BivariateCov& cov) {
    if (!(cov.v_a > 0.0 && cov.v_b > 0.0)) {
        throw std::invalid_argument("mutual_information: variances must be positive");
    }
    const double det = cov.determinant();
    if (!(det > 0.0)) {
        throw std::invalid_argument("mutual_information: covariance determinant must be positive");
    }
    return 0.5 * std::log(cov.v_a * cov.v_b / det);
}

namespace detail {

/// Entropy of Eve's two modes in a state from which `removed` has been measured out.
inline double eve_entropy_after_measuring(const GaussianState& global, std::size_t removed, Quadrature q) {
    const GaussianState conditioned = condition_on_quadrature(global, {removed, q});
    auto shifted = [removed](std::size_t m) { return m > removed ? m - 1 : m; };
    return von_neumann_entropy(partial_trace(conditioned, {shifted(mode::eve_cloner), shifted(mode::eve_idler)}),
                               max_abs(global.covariance()));
}

inline double eve_entropy(const GaussianState& global) {
    return von_neumann_entropy(partial_trace(global, {mode::eve_cloner, mode::eve_idler}),
                               max_abs(global.covariance()));
}

inline KeyRateReport make_report(double i_ab, double eve_term, BoundKind bound, std::optional<Direction> dir,
                                 const ProtocolParams& p, const ChannelParams& ch) {
    return KeyRateReport{
        .i_ab = i_ab,
        .eve_term = eve_term,
        .key_rate = i_ab - eve_term,
        .base = LogBase::nats,
        .bound = bound,
        .direction = dir,
        .protocol = p,
        .channel = ch,
    };
}

} // namespace detail

/// I_AB minus S(rho_AB); the entropy is taken on Eve's side, equal by purity.
inline KeyRateReport key_rate_general(const ProtocolParams& p, const ChannelParams& ch) {
    const double i_ab = mutual_information(alice_bob_quadrature_cov(p, ch));
    const double eve = detail::eve_entropy(build_global_state(p, ch));
    return detail::make_report(i_ab, eve, BoundKind::general, std::nullopt, p, ch);
}

/// General bound with Alice's P outcome (ancilla mode) made public.
inline KeyRateReport key_rate_general_w(const ProtocolParams& p, const ChannelParams& ch) {
    validate_bound_selection(BoundKind::general_w, std::nullopt, p.kind());
    const double i_ab = mutual_information(alice_bob_quadrature_cov(p, ch));
    const double eve = detail::eve_entropy_after_measuring(build_global_state(p, ch), mode::alice_ancilla, Quadrature::P);
    return detail::make_report(i_ab, eve, BoundKind::general_w, std::nullopt, p, ch);
}

/// chi(A:E) for direct, chi(B:E) for reverse reconciliation: S(E) - S(E | X of the reference mode).
inline double holevo(const ProtocolParams& p, const ChannelParams& ch, Direction dir) {
    const GaussianState global = build_global_state(p, ch);
    const std::size_t reference = dir == Direction::direct ? mode::alice_key : mode::bob;
    return detail::eve_entropy(global) - detail::eve_entropy_after_measuring(global, reference, Quadrature::X);
}

inline KeyRateReport key_rate_collective(const ProtocolParams& p, const ChannelParams& ch, Direction dir) {
    const double i_ab = mutual_information(alice_bob_quadrature_cov(p, ch));
    return detail::make_report(i_ab, holevo(p, ch, dir), BoundKind::collective, dir, p, ch);
}

inline KeyRateReport key_rate(BoundKind bound, std::optional<Direction> dir, const ProtocolParams& p,
                              const ChannelParams& ch) {
    validate_bound_selection(bound, dir, p.kind());
    switch (bound) {
    case BoundKind::general:
        return key_rate_general(p, ch);
    case BoundKind::general_w:
        return key_rate_general_w(p, ch);
    case BoundKind::collective:
        return key_rate_collective(p, ch, *dir);
    }
    throw std::invalid_argument("unknown bound kind");
}

/// Bound, direction and protocol bundled; the channel is left free for scans.
struct RateSelection {
    BoundKind bound = BoundKind::general;
    std::optional<Direction> direction;
    ProtocolParams protocol = ProtocolParams::coherent(1.0);

    double operator()(const ChannelParams& ch) const { return key_rate(bound, direction, protocol, ch).key_rate; }
};

} // namespace cvqkd
