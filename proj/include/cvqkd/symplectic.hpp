#pragma once

// Zero-mean Gaussian states in shot-noise units (vacuum variance 1).
// Covariance matrices use the xx|pp layout: rows 0..N-1 are the X quadratures
// of modes 0..N-1, rows N..2N-1 the P quadratures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvqkd/errors.hpp"

namespace cvqkd {

using Matrix = Eigen::MatrixXd;

enum class Quadrature { X, P };

struct QuadratureSelector {
    std::size_t mode = 0;
    Quadrature quadrature = Quadrature::X;
};

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline void check_even_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0 || m.rows() % 2 != 0) {
        throw std::invalid_argument(std::string(what) + ": matrix must be square with even, nonzero size");
    }
}

} // namespace detail

/// Canonical symplectic form [[0, I], [-I, 0]] for n modes.
inline Matrix symplectic_form(std::size_t n_modes) {
    const auto n = static_cast<Eigen::Index>(n_modes);
    Matrix omega = Matrix::Zero(2 * n, 2 * n);
    omega.topRightCorner(n, n) = Matrix::Identity(n, n);
    omega.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
    return omega;
}

class GaussianState {
  public:
    /// Takes ownership of a covariance matrix; throws if it is not square,
    /// even-sized and symmetric to 1e-12 (relative to its largest entry when that exceeds 1).
    explicit GaussianState(Matrix cov) : cov_(std::move(cov)) {
        detail::check_even_square(cov_, "GaussianState");
        const double scale = std::max(1.0, detail::max_abs(cov_));
        if (detail::max_abs(cov_ - cov_.transpose()) > 1e-12 * scale) {
            throw std::invalid_argument("GaussianState: covariance matrix is not symmetric");
        }
    }

    std::size_t n_modes() const { return static_cast<std::size_t>(cov_.rows() / 2); }
    const Matrix& covariance() const { return cov_; }

    Eigen::Index x_index(std::size_t mode) const { return static_cast<Eigen::Index>(mode); }
    Eigen::Index p_index(std::size_t mode) const { return static_cast<Eigen::Index>(n_modes() + mode); }
    Eigen::Index index(QuadratureSelector sel) const {
        return sel.quadrature == Quadrature::X ? x_index(sel.mode) : p_index(sel.mode);
    }

    double variance(QuadratureSelector sel) const { return cov_(index(sel), index(sel)); }

  private:
    Matrix cov_;
};

class SymplecticTransform {
  public:
    /// Throws unless S Omega S^T = Omega (tolerance 1e-12 scaled by the squared largest entry).
    explicit SymplecticTransform(Matrix s) : s_(std::move(s)) {
        detail::check_even_square(s_, "SymplecticTransform");
        const auto n = static_cast<std::size_t>(s_.rows() / 2);
        const Matrix omega = symplectic_form(n);
        const double scale = std::max(1.0, detail::max_abs(s_) * detail::max_abs(s_));
        if (detail::max_abs(s_ * omega * s_.transpose() - omega) > 1e-12 * scale) {
            throw std::invalid_argument("SymplecticTransform: matrix does not preserve the symplectic form");
        }
    }

    static SymplecticTransform identity(std::size_t n_modes) {
        const auto n = static_cast<Eigen::Index>(2 * n_modes);
        return SymplecticTransform(Matrix::Identity(n, n));
    }

    std::size_t n_modes() const { return static_cast<std::size_t>(s_.rows() / 2); }
    const Matrix& matrix() const { return s_; }

  private:
    Matrix s_;
};

struct SymplecticSpectrum {
    std::vector<double> values; // descending
};

inline GaussianState vacuum_state(std::size_t n_modes) {
    if (n_modes == 0) {
        throw std::invalid_argument("vacuum_state: need at least one mode");
    }
    const auto n = static_cast<Eigen::Index>(2 * n_modes);
    return GaussianState(Matrix::Identity(n, n));
}

/// Single-mode thermal state with both quadrature variances equal to nu.
inline GaussianState thermal_state(double nu) {
    if (!(nu >= 1.0)) {
        throw std::invalid_argument("thermal_state: variance must be >= 1");
    }
    return GaussianState(nu * Matrix::Identity(2, 2));
}

/// Two-mode squeezed vacuum whose halves each have local variance cosh r.
inline GaussianState two_mode_squeezed(double r) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw std::invalid_argument("two_mode_squeezed: squeezing must be finite and >= 0");
    }
    const double c = std::cosh(r);
    const double s = std::sinh(r);
    Matrix cov(4, 4);
    // x0 x1 p0 p1
    cov << c, s, 0, 0,
           s, c, 0, 0,
           0, 0, c, -s,
           0, 0, -s, c;
    return GaussianState(std::move(cov));
}

/// Passive two-mode coupling, same action on X and P:
///   out_a =  sqrt(T) in_a + sqrt(1-T) in_b
///   out_b = -sqrt(1-T) in_a + sqrt(T) in_b
inline SymplecticTransform beam_splitter(double transmittivity, std::size_t mode_a, std::size_t mode_b,
                                         std::size_t n_modes) {
    if (!(transmittivity >= 0.0 && transmittivity <= 1.0)) {
        throw std::invalid_argument("beam_splitter: transmittivity must lie in [0, 1]");
    }
    if (mode_a == mode_b || mode_a >= n_modes || mode_b >= n_modes) {
        throw std::invalid_argument("beam_splitter: mode indices must be distinct and < n_modes");
    }
    const auto n = static_cast<Eigen::Index>(n_modes);
    const double t = std::sqrt(transmittivity);
    const double r = std::sqrt(1.0 - transmittivity);
    Matrix s = Matrix::Identity(2 * n, 2 * n);
    for (Eigen::Index offset : {Eigen::Index{0}, n}) {
        const Eigen::Index a = offset + static_cast<Eigen::Index>(mode_a);
        const Eigen::Index b = offset + static_cast<Eigen::Index>(mode_b);
        s(a, a) = t;
        s(a, b) = r;
        s(b, a) = -r;
        s(b, b) = t;
    }
    return SymplecticTransform(std::move(s));
}

inline GaussianState apply(const SymplecticTransform& transform, const GaussianState& state) {
    if (transform.n_modes() != state.n_modes()) {
        throw std::invalid_argument("apply: transform and state have different mode counts");
    }
    const Matrix& s = transform.matrix();
    Matrix out = s * state.covariance() * s.transpose();
    Matrix sym = 0.5 * (out + out.transpose());
    return GaussianState(std::move(sym));
}

/// Restricts to the listed modes, re-indexed in the order given. A permutation of
/// all modes is a valid `keep` and simply reorders them.
inline GaussianState partial_trace(const GaussianState& state, std::span<const std::size_t> keep) {
    const std::size_t n = state.n_modes();
    if (keep.empty()) {
        throw std::invalid_argument("partial_trace: nothing to keep");
    }
    std::vector<bool> seen(n, false);
    for (std::size_t m : keep) {
        if (m >= n || seen[m]) {
            throw std::invalid_argument("partial_trace: mode indices must be valid and distinct");
        }
        seen[m] = true;
    }
    const auto k = static_cast<Eigen::Index>(keep.size());
    std::vector<Eigen::Index> rows(2 * keep.size());
    for (Eigen::Index i = 0; i < k; ++i) {
        rows[static_cast<std::size_t>(i)] = state.x_index(keep[static_cast<std::size_t>(i)]);
        rows[static_cast<std::size_t>(i + k)] = state.p_index(keep[static_cast<std::size_t>(i)]);
    }
    Matrix out(2 * k, 2 * k);
    const Matrix& cov = state.covariance();
    for (Eigen::Index i = 0; i < 2 * k; ++i) {
        for (Eigen::Index j = 0; j < 2 * k; ++j) {
            out(i, j) = cov(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
        }
    }
    return GaussianState(std::move(out));
}

inline GaussianState partial_trace(const GaussianState& state, std::initializer_list<std::size_t> keep) {
    return partial_trace(state, std::span<const std::size_t>(keep.begin(), keep.size()));
}

/// Uncorrelated joint state; the modes of `b` follow those of `a`.
inline GaussianState direct_sum(const GaussianState& a, const GaussianState& b) {
    const auto na = static_cast<Eigen::Index>(a.n_modes());
    const auto nb = static_cast<Eigen::Index>(b.n_modes());
    const Eigen::Index n = na + nb;
    Matrix out = Matrix::Zero(2 * n, 2 * n);
    const Matrix& ca = a.covariance();
    const Matrix& cb = b.covariance();
    // Scatter each state's (xx, xp, px, pp) blocks into the enlarged layout.
    for (int qi = 0; qi < 2; ++qi) {
        for (int qj = 0; qj < 2; ++qj) {
            out.block(qi * n, qj * n, na, na) = ca.block(qi * na, qj * na, na, na);
            out.block(qi * n + na, qj * n + na, nb, nb) = cb.block(qi * nb, qj * nb, nb, nb);
        }
    }
    return GaussianState(std::move(out));
}

/// Homodyne detection of one quadrature. The measured mode is removed; the
/// conditional covariance does not depend on the outcome.
inline GaussianState condition_on_quadrature(const GaussianState& state, QuadratureSelector sel) {
    const std::size_t n = state.n_modes();
    if (sel.mode >= n) {
        throw std::invalid_argument("condition_on_quadrature: mode index out of range");
    }
    if (n == 1) {
        throw std::invalid_argument("condition_on_quadrature: cannot measure the only mode of a state");
    }
    std::vector<std::size_t> rest;
    rest.reserve(n - 1);
    for (std::size_t m = 0; m < n; ++m) {
        if (m != sel.mode) {
            rest.push_back(m);
        }
    }
    const auto k = static_cast<Eigen::Index>(rest.size());
    std::vector<Eigen::Index> a_idx(2 * rest.size());
    for (Eigen::Index i = 0; i < k; ++i) {
        a_idx[static_cast<std::size_t>(i)] = state.x_index(rest[static_cast<std::size_t>(i)]);
        a_idx[static_cast<std::size_t>(i + k)] = state.p_index(rest[static_cast<std::size_t>(i)]);
    }
    const std::array<Eigen::Index, 2> b_idx{state.x_index(sel.mode), state.p_index(sel.mode)};

    const Matrix& cov = state.covariance();
    Matrix a(2 * k, 2 * k);
    Matrix c(2 * k, 2);
    for (Eigen::Index i = 0; i < 2 * k; ++i) {
        for (Eigen::Index j = 0; j < 2 * k; ++j) {
            a(i, j) = cov(a_idx[static_cast<std::size_t>(i)], a_idx[static_cast<std::size_t>(j)]);
        }
        for (Eigen::Index j = 0; j < 2; ++j) {
            c(i, j) = cov(a_idx[static_cast<std::size_t>(i)], b_idx[static_cast<std::size_t>(j)]);
        }
    }
    Matrix b(2, 2);
    for (Eigen::Index i = 0; i < 2; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            b(i, j) = cov(b_idx[static_cast<std::size_t>(i)], b_idx[static_cast<std::size_t>(j)]);
        }
    }

    Matrix proj = Matrix::Zero(2, 2);
    const Eigen::Index q = sel.quadrature == Quadrature::X ? 0 : 1;
    proj(q, q) = 1.0;
    const Matrix projected = proj * b * proj;

    // Moore-Penrose pseudoinverse, singular values below 1e-12 * largest dropped.
    Eigen::JacobiSVD<Matrix> svd(projected, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Matrix sv_inv = Matrix::Zero(2, 2);
    const double cutoff = 1e-12 * sv(0);
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            sv_inv(i, i) = 1.0 / sv(i);
        }
    }
    const Matrix pinv = svd.matrixV() * sv_inv * svd.matrixU().transpose();

    Matrix out = a - c * pinv * c.transpose();
    Matrix sym = 0.5 * (out + out.transpose());
    return GaussianState(std::move(sym));
}

/// How far below 1 a computed symplectic eigenvalue may fall through rounding alone.
/// Rounding the entries of cov already perturbs nu by up to ~eps * max|cov|^2
/// (e.g. cosh^2 r - sinh^2 r for a strongly squeezed pair). A state derived from a
/// larger one inherits its errors; pass the parent's max|cov| as `reference_scale`.
inline double spectrum_rounding_floor(const GaussianState& state, double reference_scale = 0.0) {
    const double scale = std::max(detail::max_abs(state.covariance()), reference_scale);
    return std::max(1e-9, std::numeric_limits<double>::epsilon() * scale * scale);
}

/// Symplectic eigenvalues nu_k, i.e. the positive square roots of the eigenvalues
/// of -(Omega cov)^2. They are computed as the singular values of the antisymmetric
/// matrix cov^{1/2} Omega cov^{1/2}, which is similar to Omega cov; every value
/// appears twice and one representative of each pair is kept. Values below 1 by
/// less than spectrum_rounding_floor() are reported as exactly 1.
inline SymplecticSpectrum symplectic_eigenvalues(const GaussianState& state, double reference_scale = 0.0) {
    const std::size_t n = state.n_modes();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(state.covariance());
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("symplectic_eigenvalues: covariance eigen-decomposition failed");
    }
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalFailure("symplectic_eigenvalues: covariance matrix is not positive definite");
    }
    const Matrix root = eig.operatorSqrt();
    const Matrix m = root * symplectic_form(n) * root;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues(); // descending

    SymplecticSpectrum spectrum;
    spectrum.values.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double hi = sv(static_cast<Eigen::Index>(2 * k));
        const double lo = sv(static_cast<Eigen::Index>(2 * k + 1));
        if (hi - lo > 1e-8 * hi) {
            throw NumericalFailure("symplectic_eigenvalues: unpaired eigenvalue (" + std::to_string(hi) + " vs " +
                                   std::to_string(lo) + ")");
        }
        spectrum.values.push_back(0.5 * (hi + lo));
    }
    const double floor = 1.0 - spectrum_rounding_floor(state, reference_scale);
    for (double& nu : spectrum.values) {
        if (nu < 1.0 && nu >= floor) {
            nu = 1.0;
        }
    }
    return spectrum;
}

/// Entropy in nats of a thermal mode with symplectic eigenvalue nu.
inline double entropy_g(double nu) {
    if (!(nu >= 1.0 - 1e-9)) {
        throw std::invalid_argument("entropy_g: symplectic eigenvalue below 1 (unphysical state)");
    }
    if (nu - 1.0 < 1e-12) {
        return 0.0;
    }
    const double plus = 0.5 * (nu + 1.0);
    const double minus = 0.5 * (nu - 1.0);
    return plus * std::log(plus) - minus * std::log(minus);
}

inline double von_neumann_entropy(const GaussianState& state, double reference_scale = 0.0) {
    double total = 0.0;
    for (double nu : symplectic_eigenvalues(state, reference_scale).values) {
        total += entropy_g(nu);
    }
    return total;
}

inline bool is_physical(const GaussianState& state, double tol = 1e-9) {
    try {
        const auto spectrum = symplectic_eigenvalues(state);
        return std::all_of(spectrum.values.begin(), spectrum.values.end(),
                           [tol](double nu) { return nu >= 1.0 - tol; });
    } catch (const NumericalFailure&) {
        return false;
    }
}

} // namespace cvqkd
