#pragma once

#include <cmath>
#include <string>

#include "usqed/hilbert.hpp"

namespace usqed {

/// Model frequencies and couplings, all in units of the qubit-B frequency.
struct SystemParams {
    double omega_c = 2.0;
    double omega_b = 1.0;
    double delta = 0.4;
    double omega_fg = 0.3;
    double omega_ef = 0.7;
    double omega_a = 1.0;
    double lambda_a = 0.1;
    double lambda_b = 0.1;
    int n_max = 10;

    /// omega_a = omega_b, omega_fg = (omega_b - delta)/2, lambda_a = lambda_b = lambda.
    static SystemParams standard(double omega_c, double delta, double lambda, int n_max = 10) {
        return standard(omega_c, delta, lambda, lambda, n_max);
    }

    static SystemParams standard(double omega_c, double delta, double lambda_a, double lambda_b, int n_max) {
        SystemParams p;
        p.omega_c = omega_c;
        p.omega_b = 1.0;
        p.delta = delta;
        p.omega_fg = (p.omega_b - delta) / 2.0;
        p.omega_ef = p.omega_fg + delta;
        p.omega_a = p.omega_fg + p.omega_ef;
        p.lambda_a = lambda_a;
        p.lambda_b = lambda_b;
        p.n_max = n_max;
        p.validate();
        return p;
    }

    /// Qutrit frequencies from an explicit omega_fg and anharmonicity.
    static SystemParams explicit_levels(double omega_c, double omega_fg, double delta, double lambda_a,
                                        double lambda_b, int n_max = 10) {
        SystemParams p;
        p.omega_c = omega_c;
        p.delta = delta;
        p.omega_fg = omega_fg;
        p.omega_ef = omega_fg + delta;
        p.omega_a = p.omega_fg + p.omega_ef;
        p.lambda_a = lambda_a;
        p.lambda_b = lambda_b;
        p.n_max = n_max;
        p.validate();
        return p;
    }

    SystemParams with_omega_c(double w) const {
        SystemParams p = *this;
        p.omega_c = w;
        p.validate();
        return p;
    }

    SystemParams with_n_max(int n) const {
        SystemParams p = *this;
        p.n_max = n;
        p.validate();
        return p;
    }

    /// Cavity frequency at which |g,g,1> and |e,e,0> are degenerate for vanishing coupling.
    double bare_resonance() const noexcept { return omega_a + omega_b; }

    bool uses_standard_levels(double tol = 1e-12) const noexcept {
        return std::abs(omega_a - omega_b) <= tol && std::abs(omega_fg - (omega_b - delta) / 2.0) <= tol &&
               std::abs(lambda_a - lambda_b) <= tol;
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw InvalidArgument("SystemParams: " + m); };
        constexpr double tol = 1e-12;
        if (!(omega_c > 0.0)) fail("omega_c must be > 0");
        if (!(omega_b > 0.0)) fail("omega_b must be > 0");
        if (!(lambda_a >= 0.0) || !(lambda_b >= 0.0)) fail("couplings must be >= 0");
        if (n_max < 0) fail("n_max must be >= 0");
        if (std::abs(omega_ef - (omega_fg + delta)) > tol) fail("omega_ef != omega_fg + delta");
        if (std::abs(omega_a - (omega_fg + omega_ef)) > tol) fail("omega_a != omega_fg + omega_ef");
        if (!(omega_fg > 0.0) || !(omega_ef > 0.0))
            fail("qutrit transition frequencies must be positive (delta=" + std::to_string(delta) + ")");
    }
};

inline double bare_energy(const BasisState& s, const SystemParams& p) {
    double e = s.photons * p.omega_c;
    if (s.qutrit == QutritLevel::F) e += p.omega_fg;
    if (s.qutrit == QutritLevel::E) e += p.omega_a;
    if (s.qubit == QubitLevel::E) e += p.omega_b;
    return e;
}

inline OperatorMatrix build_h0(const HilbertSpace& space, const SystemParams& p) {
    p.validate();
    Matrix h = Matrix::Zero(space.dim(), space.dim());
    for (int k = 0; k < space.dim(); ++k) h(k, k) = bare_energy(space.state(k), p);
    return {std::move(h), true};
}

/// Quadrature X = a + a^dagger.
inline OperatorMatrix field_quadrature(const HilbertSpace& space) {
    const Matrix a = bare_operator(space, LoweringKind::annihilation).entries;
    return {a + a.adjoint(), true};
}

/// Qubit-side factor of one coupling term, before the (a + a^dagger) factor.
inline OperatorMatrix transition_sum(const HilbertSpace& space, LoweringKind kind) {
    const Matrix l = bare_operator(space, kind).entries;
    return {l + l.adjoint(), true};
}

/// Every rotating and counter-rotating term; no |g><e| transition on qutrit A.
inline OperatorMatrix build_interaction(const HilbertSpace& space, const SystemParams& p) {
    p.validate();
    const Matrix x = field_quadrature(space).entries;
    const Matrix a_ladder = std::sqrt(2.0) * bare_operator(space, LoweringKind::A_ef_lower).entries +
                            bare_operator(space, LoweringKind::A_fg_lower).entries;
    const Matrix b_ladder = bare_operator(space, LoweringKind::B_lower).entries;
    // x commutes with the atomic factors, so x * (L + L^dag) = x L + (x L)^dag exactly.
    const Matrix half = p.lambda_a * (x * a_ladder) + p.lambda_b * (x * b_ladder);
    return {half + half.adjoint(), true};
}

inline OperatorMatrix build_total(const HilbertSpace& space, const SystemParams& p) {
    return {build_h0(space, p).entries + build_interaction(space, p).entries, true};
}

} // namespace usqed
