#pragma once

// Zero-temperature master equation in the dressed (eigen)basis of H.
//
// Jump operators are the dressed transitions |phi_n><phi_m| (E_m > E_n) with rates
// Gamma^{nm}_mu = gamma_mu |<phi_n| S_mu + S_mu^dag |phi_m>|^2. In that basis the coherent
// part only rotates phases, so evolve() integrates the dissipator in the rotating frame and
// re-applies exp(-i (E_k - E_l) t) at each sample.

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "usqed/spectral.hpp"

namespace usqed {

struct DissipationRates {
    double kappa = 0.0;      ///< cavity
    double gamma_ef_a = 0.0; ///< |e>_A -> |f>_A
    double gamma_fg_a = 0.0; ///< |f>_A -> |g>_A
    double gamma_eg_b = 0.0; ///< |e>_B -> |g>_B

    /// gamma_fg^A = gamma_eg^B = kappa and gamma_ef^A = sqrt2 kappa.
    static DissipationRates from_cavity_rate(double kappa) {
        DissipationRates r{kappa, std::numbers::sqrt2 * kappa, kappa, kappa};
        r.validate();
        return r;
    }

    void validate() const {
        if (!(kappa >= 0.0) || !(gamma_ef_a >= 0.0) || !(gamma_fg_a >= 0.0) || !(gamma_eg_b >= 0.0))
            throw InvalidArgument("DissipationRates: all rates must be >= 0");
    }

    bool all_zero() const noexcept { return kappa == 0.0 && gamma_ef_a == 0.0 && gamma_fg_a == 0.0 && gamma_eg_b == 0.0; }
};

enum class Channel { cavity, A_ef, A_fg, B_eg };

inline const char* channel_name(Channel c) {
    switch (c) {
    case Channel::cavity: return "cavity";
    case Channel::A_ef: return "A_ef";
    case Channel::A_fg: return "A_fg";
    case Channel::B_eg: return "B_eg";
    }
    return "?";
}

struct JumpChannel {
    int lower = 0; ///< n
    int upper = 0; ///< m, with E_m > E_n
    double rate = 0.0;
    Channel channel = Channel::cavity;
};

enum class BasisTag { bare, dressed };
enum class Estimator { dressed, bare };

struct DensityMatrix {
    Matrix entries;
    BasisTag basis = BasisTag::dressed;

    static DensityMatrix pure(const Vector& psi, BasisTag basis) { return {psi * psi.adjoint(), basis}; }

    double trace() const { return entries.trace().real(); }
    double purity() const { return (entries * entries).trace().real(); }
    double hermiticity_error() const { return max_abs(entries - entries.adjoint()); }
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (entries + entries.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }
};

inline DensityMatrix to_dressed(const DensityMatrix& rho, const EigenSystem& eig) {
    if (rho.basis == BasisTag::dressed) return rho;
    return {eig.to_dressed(rho.entries), BasisTag::dressed};
}

/// |s><s| for a bare product state, expressed in the dressed basis.
inline DensityMatrix dressed_from_bare_state(const EigenSystem& eig, const BasisState& s) {
    const Vector psi = eig.states.adjoint() * eig.space().ket(s);
    return DensityMatrix::pure(psi, BasisTag::dressed);
}

namespace detail {
constexpr double kFrequencyTol = 1e-12;
}

/// Dressed-basis part of a bare Hermitian operator that lowers the energy:
/// sum over E_m > E_n of O_nm |phi_n><phi_m|.
inline OperatorMatrix positive_frequency_part(const EigenSystem& eig, const Matrix& bare_hermitian) {
    const Matrix dressed = eig.to_dressed(bare_hermitian);
    Matrix out = Matrix::Zero(eig.dim(), eig.dim());
    for (int m = 0; m < eig.dim(); ++m)
        for (int n = 0; n < m; ++n)
            if (eig.energies(m) - eig.energies(n) > detail::kFrequencyTol) out(n, m) = dressed(n, m);
    return {std::move(out), false};
}

/// X^+ for X = a + a^dag.
inline OperatorMatrix positive_frequency_field_op(const EigenSystem& eig) {
    return positive_frequency_part(eig, field_quadrature(eig.space()).entries);
}

/// C_1^+ (|e><f|_A + h.c.), C_2^+ (|f><g|_A + h.c.), C_3^+ (|e><g|_B + h.c.).
inline std::array<OperatorMatrix, 3> positive_frequency_qubit_ops(const EigenSystem& eig) {
    const HilbertSpace space = eig.space();
    return {positive_frequency_part(eig, transition_sum(space, LoweringKind::A_ef_lower).entries),
            positive_frequency_part(eig, transition_sum(space, LoweringKind::A_fg_lower).entries),
            positive_frequency_part(eig, transition_sum(space, LoweringKind::B_lower).entries)};
}

/// Channels between the lowest `cutoff` dressed states; rates below 1e-16 are dropped.
inline std::vector<JumpChannel> dressed_jump_channels(const EigenSystem& eig, const DissipationRates& rates,
                                                      int cutoff) {
    rates.validate();
    if (cutoff < 0 || cutoff > eig.dim())
        throw InvalidArgument("dressed_jump_channels: cutoff " + std::to_string(cutoff) + " outside [0, dim]");
    const HilbertSpace space = eig.space();
    const std::array<std::pair<Channel, double>, 4> sources{{{Channel::cavity, rates.kappa},
                                                          {Channel::A_ef, rates.gamma_ef_a},
                                                          {Channel::A_fg, rates.gamma_fg_a},
                                                          {Channel::B_eg, rates.gamma_eg_b}}};
    std::vector<JumpChannel> out;
    for (const auto& [channel, gamma] : sources) {
        if (gamma == 0.0) continue;
        Matrix bare;
        switch (channel) {
        case Channel::cavity: bare = field_quadrature(space).entries; break;
        case Channel::A_ef: bare = transition_sum(space, LoweringKind::A_ef_lower).entries; break;
        case Channel::A_fg: bare = transition_sum(space, LoweringKind::A_fg_lower).entries; break;
        case Channel::B_eg: bare = transition_sum(space, LoweringKind::B_lower).entries; break;
        }
        const Matrix dressed = eig.to_dressed(bare);
        for (int m = 0; m < cutoff; ++m)
            for (int n = 0; n < m; ++n) {
                if (!(eig.energies(m) - eig.energies(n) > detail::kFrequencyTol)) continue;
                const double rate = gamma * std::norm(dressed(n, m));
                if (rate >= 1e-16) out.push_back({n, m, rate, channel});
            }
    }
    return out;
}

/// Tr[rho O] for matrices in the same basis.
inline double expectation(const Matrix& rho, const Matrix& op) {
    return (rho.cwiseProduct(op.transpose())).sum().real();
}

/// Dressed-basis matrices of every sampled observable, built once per eigensystem.
struct ObservableSet {
    Matrix photon;      ///< X^- X^+
    Matrix bare_photon; ///< a^dag a
    Matrix p_a;         ///< estimator for qutrit A in |e>
    Matrix p_ab;        ///< estimator for both excited

    static ObservableSet build(const EigenSystem& eig, Estimator estimator) {
        const HilbertSpace space = eig.space();
        ObservableSet s;
        const Matrix xp = positive_frequency_field_op(eig).entries;
        s.photon = xp.adjoint() * xp;
        const Matrix a = bare_operator(space, LoweringKind::annihilation).entries;
        s.bare_photon = eig.to_dressed(a.adjoint() * a);
        if (estimator == Estimator::dressed) {
            const auto c = positive_frequency_qubit_ops(eig);
            const Matrix& c1 = c[0].entries;
            const Matrix& c3 = c[2].entries;
            s.p_a = c1.adjoint() * c1;
            s.p_ab = c1.adjoint() * c3.adjoint() * c3 * c1;
        } else {
            s.p_a = eig.to_dressed(
                bare_projector(space, [](const BasisState& b) { return b.qutrit == QutritLevel::E; }).entries);
            s.p_ab = eig.to_dressed(bare_projector(space, [](const BasisState& b) {
                                        return b.qutrit == QutritLevel::E && b.qubit == QubitLevel::E;
                                    }).entries);
        }
        return s;
    }
};

/// (P_A^e, P_AB^e). Dressed: <C1^- C1^+>, <C1^- C3^- C3^+ C1^+>; bare: projector expectations.
inline std::pair<double, double> qubit_populations(const DensityMatrix& rho, const EigenSystem& eig,
                                                   Estimator estimator = Estimator::dressed) {
    const Matrix r = to_dressed(rho, eig).entries;
    const ObservableSet obs = ObservableSet::build(eig, estimator);
    return {expectation(r, obs.p_a), expectation(r, obs.p_ab)};
}

/// Phi = kappa Tr[rho X^- X^+].
inline double output_flux(const DensityMatrix& rho, const EigenSystem& eig, double kappa) {
    if (kappa == 0.0) return 0.0;
    const Matrix xp = positive_frequency_field_op(eig).entries;
    return kappa * expectation(to_dressed(rho, eig).entries, xp.adjoint() * xp);
}

struct EvolutionOptions {
    double kappa = 0.0; ///< only used for the flux series
    Estimator estimator = Estimator::dressed;
    double rtol = 1e-9;
    double atol = 1e-12;
    int cutoff = -1; ///< audited channel cutoff; -1 infers it from the channel list
    int max_steps_between_samples = 1000000;
};

struct EvolutionRecord {
    std::vector<double> times;
    std::vector<double> photon_number;      ///< <X^- X^+>
    std::vector<double> bare_photon_number; ///< <a^dag a>
    std::vector<double> p_a_excited;
    std::vector<double> p_ab_excited;
    std::vector<double> flux;
    std::vector<double> trace_error;
    std::vector<double> min_eigenvalue;
    std::vector<double> hermiticity_error;
    std::vector<double> purity;
    double max_population_above_cutoff = 0.0;
    int cutoff = 0;
    Estimator estimator = Estimator::dressed;
    DensityMatrix final_state;

    std::size_t size() const noexcept { return times.size(); }

    static double max_of(const std::vector<double>& v) {
        return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    }
    double max_trace_error() const { return max_of(trace_error); }
    double max_hermiticity_error() const { return max_of(hermiticity_error); }
    double min_min_eigenvalue() const {
        return min_eigenvalue.empty() ? 0.0 : *std::min_element(min_eigenvalue.begin(), min_eigenvalue.end());
    }
    bool probabilities_in_range(double slack = 1e-7) const {
        for (const auto* s : {&p_a_excited, &p_ab_excited})
            for (double v : *s)
                if (v < -slack || v > 1.0 + slack) return false;
        return true;
    }
};

namespace detail {

inline void validate_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw InvalidArgument("evolve: empty time grid");
    if (t_grid.front() != 0.0) throw InvalidArgument("evolve: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw InvalidArgument("evolve: time grid must be strictly increasing");
}

inline void sample(EvolutionRecord& rec, const Matrix& rho, double t, const ObservableSet& obs, double kappa,
                   int cutoff) {
    rec.times.push_back(t);
    const double photons = expectation(rho, obs.photon);
    rec.photon_number.push_back(photons);
    rec.bare_photon_number.push_back(expectation(rho, obs.bare_photon));
    rec.p_a_excited.push_back(expectation(rho, obs.p_a));
    rec.p_ab_excited.push_back(expectation(rho, obs.p_ab));
    rec.flux.push_back(kappa * photons);
    const DensityMatrix dm{rho, BasisTag::dressed};
    rec.trace_error.push_back(std::abs(dm.trace() - 1.0));
    rec.min_eigenvalue.push_back(dm.min_eigenvalue());
    rec.hermiticity_error.push_back(dm.hermiticity_error());
    rec.purity.push_back(dm.purity());
    double above = 0.0;
    for (Eigen::Index k = cutoff; k < rho.rows(); ++k) above += rho(k, k).real();
    rec.max_population_above_cutoff = std::max(rec.max_population_above_cutoff, above);
}

/// Dissipator of the dressed jump channels acting on the rotating-frame density matrix,
/// stored as interleaved (re, im) pairs in row-major order.
class DressedDissipator {
public:
    DressedDissipator(int dim, const std::vector<JumpChannel>& channels) : dim_(dim), decay_out_(dim, 0.0) {
        for (const auto& ch : channels) {
            if (ch.lower < 0 || ch.upper >= dim || ch.lower >= ch.upper || !(ch.rate >= 0.0))
                throw InvalidArgument("evolve: malformed jump channel");
            decay_out_[ch.upper] += ch.rate;
            feeds_.push_back({ch.lower, ch.upper, ch.rate});
        }
    }

    void operator()(const std::vector<double>& y, std::vector<double>& dy, double /*t*/) const {
        const int d = dim_;
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                const std::size_t i = 2 * static_cast<std::size_t>(k * d + l);
                const double g = -0.5 * (decay_out_[k] + decay_out_[l]);
                dy[i] = g * y[i];
                dy[i + 1] = g * y[i + 1];
            }
        for (const auto& f : feeds_) {
            const std::size_t to = 2 * static_cast<std::size_t>(f.lower * d + f.lower);
            const std::size_t from = 2 * static_cast<std::size_t>(f.upper * d + f.upper);
            dy[to] += f.rate * y[from];
        }
    }

private:
    struct Feed {
        int lower, upper;
        double rate;
    };
    int dim_;
    std::vector<double> decay_out_;
    std::vector<Feed> feeds_;
};

inline std::vector<double> pack(const Matrix& m) {
    const int d = static_cast<int>(m.rows());
    std::vector<double> y(2 * static_cast<std::size_t>(d) * d);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            const std::size_t i = 2 * static_cast<std::size_t>(k * d + l);
            y[i] = m(k, l).real();
            y[i + 1] = m(k, l).imag();
        }
    return y;
}

/// Unpack the rotating-frame state and apply the coherent phases exp(-i (E_k - E_l) t).
inline Matrix unpack_lab_frame(const std::vector<double>& y, const Eigen::VectorXd& energies, double t) {
    const int d = static_cast<int>(energies.size());
    Matrix m(d, d);
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            const std::size_t i = 2 * static_cast<std::size_t>(k * d + l);
            const double phase = -(energies(k) - energies(l)) * t;
            m(k, l) = Complex(y[i], y[i + 1]) * std::polar(1.0, phase);
        }
    return m;
}

} // namespace detail

inline int inferred_cutoff(const std::vector<JumpChannel>& channels, int dim) {
    if (channels.empty()) return dim;
    int top = 0;
    for (const auto& ch : channels) top = std::max(top, ch.upper + 1);
    return top;
}

/// Integrate the dressed master equation from rho0 over t_grid (t_grid[0] = 0).
inline EvolutionRecord evolve(const DensityMatrix& rho0, const EigenSystem& eig,
                              const std::vector<JumpChannel>& channels, const std::vector<double>& t_grid,
                              const EvolutionOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    detail::validate_grid(t_grid);
    const Matrix start = to_dressed(rho0, eig).entries;
    if (start.rows() != eig.dim()) throw InvalidArgument("evolve: density matrix dimension mismatch");

    EvolutionRecord rec;
    rec.estimator = opt.estimator;
    rec.cutoff = opt.cutoff >= 0 ? std::min(opt.cutoff, eig.dim()) : inferred_cutoff(channels, eig.dim());
    const ObservableSet obs = ObservableSet::build(eig, opt.estimator);
    const detail::DressedDissipator rhs(eig.dim(), channels);

    std::vector<double> y = detail::pack(start);
    Matrix last = start;
    double last_t = 0.0;
    auto observer = [&](const std::vector<double>& state, double t) {
        last = detail::unpack_lab_frame(state, eig.energies, t);
        last_t = t;
        detail::sample(rec, last, t, obs, opt.kappa, rec.cutoff);
    };

    if (channels.empty()) {
        // no dissipation: the rotating-frame state is constant
        for (double t : t_grid) observer(y, t);
    } else {
        using State = std::vector<double>;
        auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
        const double horizon = t_grid.back();
        const double dt0 = std::max(horizon, 1.0) * 1e-6;
        try {
            odeint::integrate_times(stepper, rhs, y, t_grid.begin(), t_grid.end(), dt0, observer,
                                    odeint::max_step_checker(opt.max_steps_between_samples));
        } catch (const std::exception& e) {
            throw IntegrationError(std::string("evolve: integration failed after t=") + std::to_string(last_t) +
                                       ": " + e.what(),
                                   last_t);
        }
        if (rec.size() != t_grid.size()) throw IntegrationError("evolve: integrator stopped early", last_t);
    }
    rec.final_state = {last, BasisTag::dressed};
    return rec;
}

/// D = max over window samples of P_AB^e(t) - <X^- X^+>(t).
inline double max_difference(const EvolutionRecord& record, std::pair<double, double> window) {
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < record.size(); ++i) {
        const double t = record.times[i];
        if (t < window.first || t > window.second) continue;
        best = std::max(best, record.p_ab_excited[i] - record.photon_number[i]);
        any = true;
    }
    if (!any) throw InvalidArgument("max_difference: window contains no samples");
    return best;
}

/// Column-stacked Lindblad generator  -i[H, .] + sum_j D[L_j]  on a d x d block.
inline Matrix lindblad_superoperator(const Matrix& h, const std::vector<Matrix>& jumps) {
    const Eigen::Index d = h.rows();
    const Matrix id = Matrix::Identity(d, d);
    auto kron = [](const Matrix& a, const Matrix& b) {
        Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    };
    // vec(A X B) = (B^T kron A) vec(X)
    Matrix l = Complex(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
    for (const Matrix& op : jumps) {
        const Matrix ldl = op.adjoint() * op;
        l += kron(op.conjugate(), op) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
    }
    return l;
}

/// Comparison mode: the bare-operator dissipators (a, |f><e|_A, |g><f|_A, |g><e|_B) with the
/// full H, restricted to the lowest `cutoff` dressed states and propagated exactly.
/// Not accurate in the ultrastrong regime; kept for contrast with evolve().
inline EvolutionRecord evolve_bare_dissipators(const DensityMatrix& rho0, const EigenSystem& eig,
                                               const DissipationRates& rates, const std::vector<double>& t_grid,
                                               int cutoff = 20, Estimator estimator = Estimator::dressed) {
    detail::validate_grid(t_grid);
    rates.validate();
    if (cutoff < 1 || cutoff > eig.dim()) throw InvalidArgument("evolve_bare_dissipators: invalid cutoff");
    const HilbertSpace space = eig.space();
    const int c = cutoff;
    auto restrict = [&](const Matrix& bare) { return Matrix(eig.to_dressed(bare).topLeftCorner(c, c)); };

    std::vector<Matrix> jumps;
    const std::array<std::pair<LoweringKind, double>, 4> sources{{{LoweringKind::annihilation, rates.kappa},
                                                               {LoweringKind::A_ef_lower, rates.gamma_ef_a},
                                                               {LoweringKind::A_fg_lower, rates.gamma_fg_a},
                                                               {LoweringKind::B_lower, rates.gamma_eg_b}}};
    for (const auto& [kind, gamma] : sources)
        if (gamma > 0.0) jumps.push_back(std::sqrt(gamma) * restrict(bare_operator(space, kind).entries));
    const Matrix h = eig.energies.head(c).cast<Complex>().asDiagonal();
    const Matrix generator = lindblad_superoperator(h, jumps);

    const Matrix full0 = to_dressed(rho0, eig).entries;
    Vector v = Eigen::Map<const Vector>(Matrix(full0.topLeftCorner(c, c)).data(), c * c);

    EvolutionRecord rec;
    rec.estimator = estimator;
    rec.cutoff = c;
    const ObservableSet obs = ObservableSet::build(eig, estimator);
    Matrix propagator;
    double propagator_dt = -1.0;
    double t_prev = 0.0;
    for (double t : t_grid) {
        const double dt = t - t_prev;
        if (dt > 0.0) {
            if (std::abs(dt - propagator_dt) > 1e-12 * std::max(1.0, dt)) {
                propagator = (generator * dt).exp();
                propagator_dt = dt;
            }
            v = propagator * v;
        }
        Matrix rho = Matrix::Zero(eig.dim(), eig.dim());
        rho.topLeftCorner(c, c) = Eigen::Map<const Matrix>(v.data(), c, c);
        detail::sample(rec, rho, t, obs, rates.kappa, eig.dim());
        rec.final_state = {rho, BasisTag::dressed};
        t_prev = t;
    }
    return rec;
}

} // namespace usqed
