#pragma once

// Effective |g,g,1> <-> |e,e,0> coupling, two routes: the closed third-order
// formula and an explicit sum over enumerated virtual-transition paths.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "usqed/hamiltonian.hpp"

namespace usqed {

enum class Coupler { A, B };

/// initial -> i_1 -> ... -> final, each step a single interaction term.
struct TransitionPath {
    std::vector<BasisState> states;
    std::vector<double> step_amplitudes;      ///< <next|H_I|prev> divided by the step's coupling
    std::vector<Coupler> couplers;            ///< which coupling drives each step
    std::vector<double> energy_denominators;  ///< E_initial - E_intermediate (bare, at resonance)

    int order() const noexcept { return static_cast<int>(step_amplitudes.size()); }

    std::string describe() const {
        std::string out;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (i) out += " -> ";
            out += label(states[i]);
        }
        return out;
    }
};

struct PathEnumeration {
    std::vector<TransitionPath> paths;
    int excluded_by_truncation = 0; ///< paths that need more than n_max photons
};

inline double closed_form_coupling(const SystemParams& p) {
    p.validate();
    if (!p.uses_standard_levels())
        throw InvalidArgument("closed_form_coupling needs omega_a = omega_b, omega_fg = (omega_b - delta)/2, lambda_a = lambda_b");
    const double denom = p.omega_b * (9.0 * p.omega_b * p.omega_b - p.delta * p.delta);
    if (std::abs(denom) < 1e-300) throw SingularityError("closed_form_coupling: delta = +-3 omega_b");
    const double lambda = p.lambda_a;
    return std::abs(16.0 * std::numbers::sqrt2 / 3.0 * p.delta * lambda * lambda * lambda / denom);
}

namespace detail {

struct Step {
    BasisState to;
    double amplitude;
    Coupler coupler;
};

/// All single-term moves of H_I out of `s` (photon floor 0, no ceiling).
inline std::vector<Step> interaction_steps(const BasisState& s) {
    std::vector<Step> out;
    const int photon_moves[2] = {-1, +1};
    for (int dn : photon_moves) {
        const int n = s.photons + dn;
        if (n < 0) continue;
        const double ph = std::sqrt(static_cast<double>(dn > 0 ? s.photons + 1 : s.photons));
        auto add = [&](BasisState t, double atomic, Coupler c) {
            t.photons = n;
            out.push_back({t, ph * atomic, c});
        };
        BasisState t = s;
        switch (s.qutrit) {
        case QutritLevel::G:
            t.qutrit = QutritLevel::F;
            add(t, 1.0, Coupler::A);
            break;
        case QutritLevel::F:
            t.qutrit = QutritLevel::G;
            add(t, 1.0, Coupler::A);
            t.qutrit = QutritLevel::E;
            add(t, std::numbers::sqrt2, Coupler::A);
            break;
        case QutritLevel::E:
            t.qutrit = QutritLevel::F;
            add(t, std::numbers::sqrt2, Coupler::A);
            break;
        }
        t = s;
        t.qubit = s.qubit == QubitLevel::G ? QubitLevel::E : QubitLevel::G;
        add(t, 1.0, Coupler::B);
    }
    auto key = [](const BasisState& b) {
        return HilbertSpace::kAtomicDim * b.photons + 2 * static_cast<int>(b.qutrit) + static_cast<int>(b.qubit);
    };
    std::sort(out.begin(), out.end(), [&](const Step& x, const Step& y) { return key(x.to) < key(y.to); });
    return out;
}

inline double atomic_energy(const BasisState& s, const SystemParams& p) {
    return bare_energy(BasisState{s.qutrit, s.qubit, 0}, p);
}

/// Cavity frequency making the endpoints degenerate; p.omega_c if they do not depend on it.
inline double resonant_omega_c(const BasisState& i, const BasisState& f, const SystemParams& p) {
    if (i.photons == f.photons) return p.omega_c;
    const double w = (atomic_energy(f, p) - atomic_energy(i, p)) / static_cast<double>(i.photons - f.photons);
    return w > 0.0 ? w : p.omega_c;
}

inline double coupling_of(Coupler c, const SystemParams& p) { return c == Coupler::A ? p.lambda_a : p.lambda_b; }

} // namespace detail

inline PathEnumeration enumerate_paths(const HilbertSpace& space, const SystemParams& p, const BasisState& initial,
                                       const BasisState& final_state, int order) {
    if (order < 1) throw InvalidArgument("enumerate_paths: order must be >= 1");
    if (initial == final_state) throw InvalidArgument("enumerate_paths: initial and final states coincide");
    if (!space.contains(initial) || !space.contains(final_state))
        throw InvalidArgument("enumerate_paths: endpoint outside the truncated space");
    PathEnumeration out;
    if (parity(initial) != parity(final_state)) return out;

    const SystemParams at_res = p.with_omega_c(detail::resonant_omega_c(initial, final_state, p));
    const double e_initial = bare_energy(initial, at_res);
    const int chain = parity(initial);

    TransitionPath current;
    current.states.push_back(initial);
    auto recurse = [&](auto&& self, const BasisState& s, int depth) -> void {
        if (depth == order) {
            if (!(s == final_state)) return;
            const bool fits = std::all_of(current.states.begin(), current.states.end(),
                                          [&](const BasisState& b) { return space.contains(b); });
            if (!fits) {
                ++out.excluded_by_truncation;
                return;
            }
            TransitionPath path = current;
            for (std::size_t k = 1; k + 1 < path.states.size(); ++k)
                path.energy_denominators.push_back(e_initial - bare_energy(path.states[k], at_res));
            out.paths.push_back(std::move(path));
            return;
        }
        for (const auto& step : detail::interaction_steps(s)) {
            if (parity(step.to) != chain) throw Error("enumerate_paths: step left the parity chain");
            const bool last = depth + 1 == order;
            // intermediate states must lie outside the degenerate pair
            if (!last && (step.to == initial || step.to == final_state)) continue;
            current.states.push_back(step.to);
            current.step_amplitudes.push_back(step.amplitude);
            current.couplers.push_back(step.coupler);
            self(self, step.to, depth + 1);
            current.states.pop_back();
            current.step_amplitudes.pop_back();
            current.couplers.pop_back();
        }
    };
    recurse(recurse, initial, 0);
    return out;
}

/// Signed contribution  prod(m_k) / prod(E_initial - E_intermediate)  of one path.
inline double path_contribution(const TransitionPath& path, const SystemParams& p) {
    if (path.states.size() < 2) throw InvalidArgument("path_contribution: empty path");
    const BasisState& initial = path.states.front();
    const BasisState& final_state = path.states.back();
    const SystemParams at_res = p.with_omega_c(detail::resonant_omega_c(initial, final_state, p));
    const double e_initial = bare_energy(initial, at_res);
    if (std::abs(e_initial - bare_energy(final_state, at_res)) > 1e-12)
        throw InvalidArgument("path_contribution: endpoints are not degenerate at any cavity frequency");
    double num = 1.0;
    for (int k = 0; k < path.order(); ++k) num *= path.step_amplitudes[k] * detail::coupling_of(path.couplers[k], p);
    double den = 1.0;
    for (std::size_t k = 1; k + 1 < path.states.size(); ++k) {
        const double d = e_initial - bare_energy(path.states[k], at_res);
        if (std::abs(d) < 1e-14)
            throw SingularityError("vanishing energy denominator at " + label(path.states[k]) + " on path " +
                                   path.describe());
        den *= d;
    }
    return num / den;
}

inline double path_sum_coupling(const std::vector<TransitionPath>& paths, const SystemParams& p) {
    p.validate();
    double sum = 0.0;
    for (const auto& path : paths) {
        if (path.order() != 3) throw InvalidArgument("path_sum_coupling: only third-order paths are supported");
        sum += path_contribution(path, p);
    }
    return std::abs(sum);
}

} // namespace usqed
