#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usqed/hamiltonian.hpp"

namespace usqed {

/// Spectral decomposition in the bare basis; energies ascending, states as columns.
struct EigenSystem {
    Eigen::VectorXd energies;
    Matrix states;
    std::optional<SystemParams> params;

    int dim() const noexcept { return static_cast<int>(energies.size()); }
    HilbertSpace space() const { return space_for_dim(states.rows()); }

    /// Bare operator expressed in the eigenbasis: V^dag O V.
    Matrix to_dressed(const Matrix& bare) const { return states.adjoint() * bare * states; }
    Matrix to_bare(const Matrix& dressed) const { return states * dressed * states.adjoint(); }
};

namespace detail {

constexpr double kDegeneracyTol = 1e-12;

/// Rotate the columns `cols` of `v` into eigenvectors of `op` restricted to their span.
inline void rotate_block(Matrix& v, const std::vector<int>& cols, const Matrix& op) {
    const int r = static_cast<int>(cols.size());
    Matrix block(v.rows(), r);
    for (int j = 0; j < r; ++j) block.col(j) = v.col(cols[j]);
    const Matrix restricted = block.adjoint() * op * block;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (restricted + restricted.adjoint()));
    const Matrix rotated = block * es.eigenvectors();
    for (int j = 0; j < r; ++j) v.col(cols[j]) = rotated.col(j);
}

/// Degenerate multiplets: parity-pure representatives, then bare-index order inside each parity.
inline void resolve_multiplet(Matrix& v, const std::vector<int>& cols, const Matrix& parity_op) {
    rotate_block(v, cols, parity_op);
    const Eigen::Index d = v.rows();
    Matrix index_op = Matrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) index_op(k, k) = static_cast<double>(k);
    std::vector<int> even, odd;
    for (int c : cols) {
        const double p = (v.col(c).adjoint() * parity_op * v.col(c))(0).real();
        (p >= 0.0 ? even : odd).push_back(c);
    }
    for (auto* group : {&even, &odd})
        if (group->size() > 1) rotate_block(v, *group, index_op);
}

inline void fix_phase(Eigen::Ref<Vector> col) {
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index k = 0; k < col.size(); ++k) {
        const double mag = std::abs(col(k));
        // first index wins near-ties so the choice is stable across runs
        if (mag > best_mag * (1.0 + 1e-9)) {
            best_mag = mag;
            best = k;
        }
    }
    if (best_mag > 0.0) col *= std::conj(col(best)) / best_mag;
}

inline void require_hermitian(const OperatorMatrix& h) {
    if (h.entries.rows() != h.entries.cols()) throw InvalidArgument("operator is not square");
    const double scale = std::max(1.0, max_abs(h.entries));
    const double asym = max_abs(h.entries - h.entries.adjoint());
    if (asym > 1e-12 * scale)
        throw InvalidArgument("diagonalize: operator is not Hermitian (max|H-H^dag| = " + std::to_string(asym) + ")");
}

} // namespace detail

inline EigenSystem diagonalize(const OperatorMatrix& h) {
    detail::require_hermitian(h);
    const HilbertSpace space = space_for_dim(h.dim());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries);
    if (es.info() != Eigen::Success) throw Error("diagonalize: eigensolver did not converge");

    EigenSystem out;
    out.energies = es.eigenvalues();
    out.states = es.eigenvectors();

    const Matrix parity_op = parity_operator(space).entries;
    const int d = out.dim();
    for (int k = 0; k < d;) {
        int end = k + 1;
        while (end < d && out.energies(end) - out.energies(end - 1) < detail::kDegeneracyTol) ++end;
        if (end - k > 1) {
            std::vector<int> cols;
            for (int j = k; j < end; ++j) cols.push_back(j);
            detail::resolve_multiplet(out.states, cols, parity_op);
        }
        k = end;
    }
    for (int k = 0; k < d; ++k) detail::fix_phase(out.states.col(k));
    return out;
}

inline EigenSystem solve(const SystemParams& p) {
    const HilbertSpace space(p.n_max);
    EigenSystem eig = diagonalize(build_total(space, p));
    eig.params = p;
    return eig;
}

/// <phi_k| Pi |phi_k>
inline double parity_expectation(const EigenSystem& eig, int k) {
    const HilbertSpace space = eig.space();
    double acc = 0.0;
    for (int j = 0; j < space.dim(); ++j) acc += std::norm(eig.states(j, k)) * parity(space.state(j));
    return acc;
}

inline double overlap_sq(const EigenSystem& eig, const HilbertSpace& space, const BasisState& s, int k) {
    return std::norm(eig.states(space.index_of(s), k));
}

struct LevelPair {
    int lo = 0;
    int hi = 1;
};

namespace detail {

/// Among same-parity levels (consecutive within that parity), the adjacent pair with the
/// largest combined weight on span{s1, s2}. `energies` ascending; `weight(k)` and
/// `in_sector(k)` index the same levels.
template <class Weight, class InSector>
std::optional<LevelPair> pick_pair(int count, Weight weight, InSector in_sector) {
    std::vector<int> sector;
    for (int k = 0; k < count; ++k)
        if (in_sector(k)) sector.push_back(k);
    std::optional<LevelPair> best;
    double best_w = -1.0;
    for (std::size_t j = 0; j + 1 < sector.size(); ++j) {
        const double w = weight(sector[j]) + weight(sector[j + 1]);
        if (w > best_w + 1e-14) {
            best_w = w;
            best = LevelPair{sector[j], sector[j + 1]};
        }
    }
    return best;
}

} // namespace detail

/// Levels hybridizing |s1> and |s2>, identified by overlap rather than by sorted index.
inline LevelPair track_hybrid_pair(const EigenSystem& eig, const BasisState& s1 = kSinglePhoton,
                                   const BasisState& s2 = kDoubleExcited) {
    const HilbertSpace space = eig.space();
    if (parity(s1) != parity(s2)) throw InvalidArgument("tracked states must share a parity chain");
    const int chain = parity(s1);
    auto pair = detail::pick_pair(
        eig.dim(), [&](int k) { return overlap_sq(eig, space, s1, k) + overlap_sq(eig, space, s2, k); },
        [&](int k) { return parity_expectation(eig, k) * chain > 0.0; });
    if (!pair) throw Error("track_hybrid_pair: fewer than two levels in the parity chain");
    return *pair;
}

struct LevelTable {
    std::vector<double> omega_c;
    std::vector<int> levels;
    std::vector<std::vector<double>> energies; ///< energies[grid point][requested level]
};

inline LevelTable level_curve(const SystemParams& p, const std::vector<double>& omega_c_grid,
                              const std::vector<int>& levels) {
    const int dim = HilbertSpace::kAtomicDim * (p.n_max + 1);
    for (int l : levels)
        if (l < 0 || l >= dim) throw InvalidArgument("level_curve: level index " + std::to_string(l) + " out of range");
    for (std::size_t i = 1; i < omega_c_grid.size(); ++i)
        if (!(omega_c_grid[i] > omega_c_grid[i - 1])) throw InvalidArgument("level_curve: grid not ascending");
    LevelTable table{omega_c_grid, levels, {}};
    const HilbertSpace space(p.n_max);
    for (double w : omega_c_grid) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(build_total(space, p.with_omega_c(w)).entries, Eigen::EigenvaluesOnly);
        std::vector<double> row;
        for (int l : levels) row.push_back(es.eigenvalues()(l));
        table.energies.push_back(std::move(row));
    }
    return table;
}

struct CrossingOptions {
    double tolerance = 1e-8;  ///< width of the final omega_c bracket
    int scan_points = 41;     ///< coarse samples used to isolate the minimum
    BasisState initial = kSinglePhoton;
    BasisState final_state = kDoubleExcited;
};

struct CrossingResult {
    double omega_c_star = 0.0;
    double gap = 0.0; ///< E_hi - E_lo at omega_c_star (= 2 Omega_eff)
    int level_lo = 0;
    int level_hi = 0;
    double lo_initial_overlap = 0.0; ///< |<initial|phi_lo>|^2
    double lo_final_overlap = 0.0;
    double hi_initial_overlap = 0.0;
    double hi_final_overlap = 0.0;
    bool resolved = true; ///< false when the gap is below what the omega_c tolerance can locate
    int evaluations = 0;
    EigenSystem eigensystem; ///< full solution at omega_c_star
};

namespace detail {

/// Gap of the overlap-tracked pair, from the parity sector containing the tracked states only.
class SectorGap {
public:
    SectorGap(const SystemParams& p, const BasisState& s1, const BasisState& s2)
        : params_(p), space_(p.n_max), s1_(s1), s2_(s2) {
        if (parity(s1) != parity(s2)) throw InvalidArgument("find_avoided_crossing: tracked states have opposite parity");
        for (int k = 0; k < space_.dim(); ++k)
            if (parity(space_.state(k)) == parity(s1)) sector_.push_back(k);
        const int i1 = space_.index_of(s1), i2 = space_.index_of(s2);
        for (std::size_t j = 0; j < sector_.size(); ++j) {
            if (sector_[j] == i1) row1_ = static_cast<int>(j);
            if (sector_[j] == i2) row2_ = static_cast<int>(j);
        }
    }

    double operator()(double omega_c) const {
        const Matrix h = build_total(space_, params_.with_omega_c(omega_c)).entries;
        const int n = static_cast<int>(sector_.size());
        Eigen::MatrixXd hs(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) hs(r, c) = h(sector_[r], sector_[c]).real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs);
        const auto& v = es.eigenvectors();
        auto pair = pick_pair(
            n, [&](int k) { return v(row1_, k) * v(row1_, k) + v(row2_, k) * v(row2_, k); }, [](int) { return true; });
        return es.eigenvalues()(pair->hi) - es.eigenvalues()(pair->lo);
    }

private:
    SystemParams params_;
    HilbertSpace space_;
    BasisState s1_, s2_;
    std::vector<int> sector_;
    int row1_ = 0, row2_ = 0;
};

/// Golden-section minimization of a unimodal f on [a, b] until the bracket is narrower than tol.
template <class F>
std::pair<double, double> golden_minimize(F&& f, double a, double b, double tol, int& evaluations) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    evaluations += 2;
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++evaluations;
    }
    return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

} // namespace detail

inline CrossingResult find_avoided_crossing(const SystemParams& p, std::pair<double, double> bracket,
                                            std::optional<LevelPair> level_pair = std::nullopt,
                                            const CrossingOptions& opt = {}) {
    p.validate();
    auto [lo, hi] = bracket;
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("find_avoided_crossing: invalid bracket");
    if (opt.scan_points < 3) throw InvalidArgument("find_avoided_crossing: scan_points must be >= 3");
    const HilbertSpace space(p.n_max);
    if (level_pair && (level_pair->lo < 0 || level_pair->hi <= level_pair->lo || level_pair->hi >= space.dim()))
        throw InvalidArgument("find_avoided_crossing: invalid level pair");

    std::function<double(double)> gap_fn;
    std::optional<detail::SectorGap> sector;
    if (level_pair) {
        gap_fn = [&](double w) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(build_total(space, p.with_omega_c(w)).entries,
                                                     Eigen::EigenvaluesOnly);
            return es.eigenvalues()(level_pair->hi) - es.eigenvalues()(level_pair->lo);
        };
    } else {
        sector.emplace(p, opt.initial, opt.final_state);
        gap_fn = [&](double w) { return (*sector)(w); };
    }

    CrossingResult res;
    const int n = opt.scan_points;
    std::vector<double> xs(n), gs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        gs[i] = gap_fn(xs[i]);
    }
    res.evaluations = n;
    const int k = static_cast<int>(std::min_element(gs.begin(), gs.end()) - gs.begin());
    if (k == 0 || k == n - 1)
        throw CrossingNotFound("no interior gap minimum in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "]: gap is monotone over the bracket");
    auto [w_star, g_star] = detail::golden_minimize(gap_fn, xs[k - 1], xs[k + 1], opt.tolerance, res.evaluations);
    if (gs[k] < g_star) {
        w_star = xs[k];
        g_star = gs[k];
    }

    res.omega_c_star = w_star;
    res.eigensystem = solve(p.with_omega_c(w_star));
    const LevelPair pair = level_pair ? *level_pair
                                      : track_hybrid_pair(res.eigensystem, opt.initial, opt.final_state);
    res.level_lo = pair.lo;
    res.level_hi = pair.hi;
    res.gap = res.eigensystem.energies(pair.hi) - res.eigensystem.energies(pair.lo);
    res.lo_initial_overlap = overlap_sq(res.eigensystem, space, opt.initial, pair.lo);
    res.lo_final_overlap = overlap_sq(res.eigensystem, space, opt.final_state, pair.lo);
    res.hi_initial_overlap = overlap_sq(res.eigensystem, space, opt.initial, pair.hi);
    res.hi_final_overlap = overlap_sq(res.eigensystem, space, opt.final_state, pair.hi);
    res.resolved = res.gap > 10.0 * opt.tolerance;
    return res;
}

struct HybridFidelities {
    double f_a = 0.0; ///< max_n |<a|phi_n>|, |a> = (|s1> + |s2>)/sqrt2
    double f_b = 0.0; ///< max_{m != n} |<b|phi_m>|, |b> = (|s1> - |s2>)/sqrt2
    int n = 0;
    int m = 0;
    bool adjacent = true; ///< false flags maximizers that are not neighbouring levels
};

inline HybridFidelities hybrid_fidelities(const EigenSystem& eig, const HilbertSpace& space,
                                          const BasisState& s1 = kSinglePhoton,
                                          const BasisState& s2 = kDoubleExcited) {
    const int i1 = space.index_of(s1), i2 = space.index_of(s2);
    HybridFidelities out;
    out.f_a = -1.0;
    for (int k = 0; k < eig.dim(); ++k) {
        const double fa = std::abs(eig.states(i1, k) + eig.states(i2, k)) / std::sqrt(2.0);
        if (fa > out.f_a + 1e-14) {
            out.f_a = fa;
            out.n = k;
        }
    }
    out.f_b = -1.0;
    for (int k = 0; k < eig.dim(); ++k) {
        if (k == out.n) continue;
        const double fb = std::abs(eig.states(i1, k) - eig.states(i2, k)) / std::sqrt(2.0);
        if (fb > out.f_b + 1e-14) {
            out.f_b = fb;
            out.m = k;
        }
    }
    out.adjacent = std::abs(out.n - out.m) == 1;
    return out;
}

} // namespace usqed
