#pragma once

// Truncated product space  qutrit A (g, f, e)  x  qubit B (g, e)  x  Fock(0..n_max)
// together with the bare ladder operators and the weighted-excitation parity.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "usqed/error.hpp"

namespace usqed {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class QutritLevel : int { G = 0, F = 1, E = 2 };
enum class QubitLevel : int { G = 0, E = 1 };

struct BasisState {
    QutritLevel qutrit = QutritLevel::G;
    QubitLevel qubit = QubitLevel::G;
    int photons = 0;

    friend bool operator==(const BasisState&, const BasisState&) = default;
};

inline const BasisState kSinglePhoton{QutritLevel::G, QubitLevel::G, 1};  // |g,g,1>
inline const BasisState kDoubleExcited{QutritLevel::E, QubitLevel::E, 0}; // |e,e,0>

/// Weighted excitation number: each photon and each F/B-excitation counts 1, A in E counts 2.
constexpr int excitation_number(const BasisState& s) noexcept {
    return s.photons + static_cast<int>(s.qutrit) + static_cast<int>(s.qubit);
}

constexpr int parity(const BasisState& s) noexcept {
    return excitation_number(s) % 2 == 0 ? 1 : -1;
}

inline char level_char(QutritLevel q) {
    switch (q) {
    case QutritLevel::G: return 'g';
    case QutritLevel::F: return 'f';
    case QutritLevel::E: return 'e';
    }
    return '?';
}

inline char level_char(QubitLevel q) { return q == QubitLevel::G ? 'g' : 'e'; }

/// Ket label in the |A,B,n> convention, e.g. "|f,e,1>".
inline std::string label(const BasisState& s) {
    std::string out = "|";
    out += level_char(s.qutrit);
    out += ',';
    out += level_char(s.qubit);
    out += ',';
    out += std::to_string(s.photons);
    out += '>';
    return out;
}

/// Parse "g,g,1", "|g,g,1>" or "gg1".
inline BasisState parse_state(const std::string& text) {
    std::string t;
    for (char c : text)
        if (c != '|' && c != '>' && c != ',' && c != ' ') t += c;
    if (t.size() < 3) throw InvalidArgument("cannot parse basis state '" + text + "'");
    BasisState s;
    switch (t[0]) {
    case 'g': s.qutrit = QutritLevel::G; break;
    case 'f': s.qutrit = QutritLevel::F; break;
    case 'e': s.qutrit = QutritLevel::E; break;
    default: throw InvalidArgument("bad qutrit level in '" + text + "'");
    }
    switch (t[1]) {
    case 'g': s.qubit = QubitLevel::G; break;
    case 'e': s.qubit = QubitLevel::E; break;
    default: throw InvalidArgument("bad qubit level in '" + text + "'");
    }
    try {
        std::size_t used = 0;
        s.photons = std::stoi(t.substr(2), &used);
        if (used != t.size() - 2) throw InvalidArgument("trailing characters");
    } catch (const std::exception&) {
        throw InvalidArgument("bad photon number in '" + text + "'");
    }
    if (s.photons < 0) throw InvalidArgument("negative photon number in '" + text + "'");
    return s;
}

/// Dense operator on a HilbertSpace. Entries are indexed by the space's basis order.
struct OperatorMatrix {
    Matrix entries;
    bool hermitian = false;

    Eigen::Index dim() const noexcept { return entries.rows(); }

    OperatorMatrix adjoint() const { return {entries.adjoint(), hermitian}; }
};

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

class HilbertSpace {
public:
    static constexpr int kAtomicDim = 6;

    explicit HilbertSpace(int n_max) : n_max_(n_max) {
        if (n_max < 0) throw InvalidArgument("n_max must be >= 0, got " + std::to_string(n_max));
        basis_.reserve(static_cast<std::size_t>(dim()));
        for (int n = 0; n <= n_max; ++n)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 2; ++b)
                    basis_.push_back({static_cast<QutritLevel>(a), static_cast<QubitLevel>(b), n});
    }

    int n_max() const noexcept { return n_max_; }
    int dim() const noexcept { return kAtomicDim * (n_max_ + 1); }
    const std::vector<BasisState>& basis() const noexcept { return basis_; }
    const BasisState& state(int k) const { return basis_.at(static_cast<std::size_t>(k)); }

    bool contains(const BasisState& s) const noexcept { return s.photons >= 0 && s.photons <= n_max_; }

    /// Position of `s` in the lexicographic (photons, qutrit, qubit) order.
    int index_of(const BasisState& s) const {
        if (!contains(s)) throw InvalidArgument(label(s) + " lies outside the space (n_max=" + std::to_string(n_max_) + ")");
        return kAtomicDim * s.photons + 2 * static_cast<int>(s.qutrit) + static_cast<int>(s.qubit);
    }

    Vector ket(const BasisState& s) const {
        Vector v = Vector::Zero(dim());
        v(index_of(s)) = 1.0;
        return v;
    }

private:
    int n_max_;
    std::vector<BasisState> basis_;
};

inline HilbertSpace build_space(int n_max) { return HilbertSpace(n_max); }

/// Canonical space an operator of dimension `dim` lives in.
inline HilbertSpace space_for_dim(Eigen::Index dim) {
    if (dim <= 0 || dim % HilbertSpace::kAtomicDim != 0)
        throw InvalidArgument("dimension " + std::to_string(dim) + " is not 6*(n_max+1)");
    return HilbertSpace(static_cast<int>(dim / HilbertSpace::kAtomicDim) - 1);
}

inline OperatorMatrix parity_operator(const HilbertSpace& space) {
    Matrix p = Matrix::Zero(space.dim(), space.dim());
    for (int k = 0; k < space.dim(); ++k) p(k, k) = parity(space.state(k));
    return {std::move(p), true};
}

enum class LoweringKind {
    annihilation, ///< cavity a
    A_ef_lower,   ///< |f><e| on qutrit A
    A_fg_lower,   ///< |g><f| on qutrit A
    B_lower,      ///< |g><e| on qubit B
};

/// Image of `s` under the lowering operator and its amplitude; nullopt if annihilated.
inline std::optional<std::pair<BasisState, double>> apply_lowering(LoweringKind kind, const BasisState& s) {
    BasisState t = s;
    switch (kind) {
    case LoweringKind::annihilation:
        if (s.photons == 0) return std::nullopt;
        t.photons -= 1;
        return std::pair{t, std::sqrt(static_cast<double>(s.photons))};
    case LoweringKind::A_ef_lower:
        if (s.qutrit != QutritLevel::E) return std::nullopt;
        t.qutrit = QutritLevel::F;
        return std::pair{t, 1.0};
    case LoweringKind::A_fg_lower:
        if (s.qutrit != QutritLevel::F) return std::nullopt;
        t.qutrit = QutritLevel::G;
        return std::pair{t, 1.0};
    case LoweringKind::B_lower:
        if (s.qubit != QubitLevel::E) return std::nullopt;
        t.qubit = QubitLevel::G;
        return std::pair{t, 1.0};
    }
    return std::nullopt;
}

inline OperatorMatrix bare_operator(const HilbertSpace& space, LoweringKind kind) {
    Matrix m = Matrix::Zero(space.dim(), space.dim());
    for (int c = 0; c < space.dim(); ++c) {
        if (auto img = apply_lowering(kind, space.state(c)))
            m(space.index_of(img->first), c) = img->second;
    }
    return {std::move(m), false};
}

/// Diagonal projector onto the bare states satisfying `pred`.
template <class Pred>
OperatorMatrix bare_projector(const HilbertSpace& space, Pred pred) {
    Matrix m = Matrix::Zero(space.dim(), space.dim());
    for (int k = 0; k < space.dim(); ++k)
        if (pred(space.state(k))) m(k, k) = 1.0;
    return {std::move(m), true};
}

} // namespace usqed
