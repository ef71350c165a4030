#include <catch_amalgamated.hpp>

#include <numbers>
#include <set>

#include "oracles.hpp"
#include "usqed/spectral.hpp"

using namespace usqed;
using Catch::Approx;

namespace {

// closed third-order formula, evaluated independently of the library
double closed_gap(double delta, double lambda) {
    return 2.0 * 16.0 * std::numbers::sqrt2 / 3.0 * delta * std::pow(lambda, 3) / (9.0 - delta * delta);
}

Eigen::VectorXd oracle_levels(double wc, double delta, double la, double lb, int n_max) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle::hamiltonian(oracle::standard_model(wc, delta, la, lb, n_max)).real(),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

const CrossingResult& default_crossing() {
    static const CrossingResult cr =
        find_avoided_crossing(SystemParams::standard(2.0, 0.4, 0.1), {1.7, 2.1});
    return cr;
}

} // namespace

TEST_CASE("zero-coupling spectrum at resonance", "[spectral]") {
    const EigenSystem eig = solve(SystemParams::standard(2.0, 0.4, 0.0));
    REQUIRE(eig.dim() == 66);
    REQUIRE(eig.energies.size() == 66);
    const std::vector<double> expected{0.0, 0.3, 1.0, 1.0, 1.3, 2.0, 2.0};
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(eig.energies(static_cast<Eigen::Index>(k)) == Approx(expected[k]).margin(1e-14));
    const HilbertSpace s(10);
    // the degenerate pair at indices 5, 6 is resolved into the bare states gg1 and ee0
    CHECK(overlap_sq(eig, s, kSinglePhoton, 5) + overlap_sq(eig, s, kSinglePhoton, 6) == Approx(1.0));
    CHECK(std::max(overlap_sq(eig, s, kDoubleExcited, 5), overlap_sq(eig, s, kDoubleExcited, 6)) == Approx(1.0));
}

TEST_CASE("eigensystem is orthonormal and solves the eigenproblem", "[spectral]") {
    const auto p = SystemParams::standard(1.9736, 0.4, 0.1);
    const EigenSystem eig = solve(p);
    const Matrix h = build_total(HilbertSpace(10), p).entries;
    const Matrix gram = eig.states.adjoint() * eig.states;
    CHECK(max_abs(gram - Matrix::Identity(66, 66)) < 1e-10);
    const double scale = eig.energies.cwiseAbs().maxCoeff();
    for (int k = 0; k < eig.dim(); ++k) {
        CHECK((h * eig.states.col(k) - eig.energies(k) * eig.states.col(k)).norm() < 1e-9 * scale);
        if (k) CHECK(eig.energies(k) >= eig.energies(k - 1));
    }
    // independent real-symmetric solve of the Kronecker-built Hamiltonian
    const Eigen::VectorXd ref = oracle_levels(1.9736, 0.4, 0.1, 0.1, 10);
    CHECK((eig.energies - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(max_abs(eig.to_bare(eig.to_dressed(h)) - h) < 1e-12);
}

TEST_CASE("eigenvector phase convention: largest component real and positive", "[spectral]") {
    for (double lambda : {0.0, 0.1, 0.2}) {
        const EigenSystem eig = solve(SystemParams::standard(1.95, 0.4, lambda));
        for (int k = 0; k < eig.dim(); ++k) {
            Eigen::Index i = 0;
            eig.states.col(k).cwiseAbs().maxCoeff(&i);
            CHECK(eig.states(i, k).real() > 0.0);
            CHECK(std::abs(eig.states(i, k).imag()) < 1e-14);
        }
    }
}

TEST_CASE("diagonalization is deterministic", "[spectral]") {
    const auto p = SystemParams::standard(1.99, 0.3, 0.12);
    const EigenSystem a = solve(p), b = solve(p);
    CHECK(a.energies == b.energies);
    CHECK(a.states == b.states);
}

TEST_CASE("non-Hermitian input is rejected", "[spectral]") {
    OperatorMatrix h{Matrix::Zero(6, 6), false};
    h.entries(0, 1) = 1.0;
    CHECK_THROWS_AS(diagonalize(h), InvalidArgument);
}

TEST_CASE("every eigenstate has definite parity, including degenerate multiplets", "[spectral]") {
    for (double lambda : {0.0, 0.1}) {
        for (double wc : {1.0, 2.0, 1.9736}) {
            const EigenSystem eig = solve(SystemParams::standard(wc, 0.4, lambda));
            for (int k = 0; k < eig.dim(); ++k) CHECK(std::abs(parity_expectation(eig, k)) > 1.0 - 1e-10);
        }
    }
}

TEST_CASE("level curve slopes away from the crossing", "[spectral]") {
    const auto p = SystemParams::standard(2.0, 0.4, 0.1);
    const auto left = level_curve(p, {1.9, 1.901}, {5, 6});
    const auto right = level_curve(p, {2.099, 2.1}, {5, 6});
    auto slope = [](const LevelTable& t, int j) { return (t.energies[1][j] - t.energies[0][j]) / (t.omega_c[1] - t.omega_c[0]); };
    CHECK(slope(left, 0) == Approx(1.0).margin(0.05));
    CHECK(std::abs(slope(left, 1)) < 0.05);
    CHECK(std::abs(slope(right, 0)) < 0.05);
    CHECK(slope(right, 1) == Approx(1.0).margin(0.05));
    CHECK_THROWS_AS(level_curve(p, {1.9, 2.0}, {66}), InvalidArgument);
    CHECK_THROWS_AS(level_curve(p, {1.9, 2.0}, {-1}), InvalidArgument);
    CHECK_THROWS_AS(level_curve(p, {2.0, 1.9}, {5}), InvalidArgument);
}

TEST_CASE("zero-coupling level curve crosses exactly at the bare resonance", "[spectral]") {
    const auto t = level_curve(SystemParams::standard(2.0, 0.4, 0.0), {1.99, 2.0, 2.01}, {5, 6});
    CHECK(t.energies[1][1] - t.energies[1][0] == Approx(0.0).margin(1e-14));
    CHECK(t.energies[0][1] - t.energies[0][0] == Approx(0.01).margin(1e-12));
    const auto cr = find_avoided_crossing(SystemParams::standard(2.0, 0.4, 0.0), {1.9, 2.1});
    CHECK(cr.gap < 1e-7);
    CHECK(cr.omega_c_star == Approx(2.0).margin(1e-7));
    CHECK_FALSE(cr.resolved);
}

TEST_CASE("avoided crossing at the default point", "[spectral]") {
    const auto& cr = default_crossing();
    CHECK(cr.gap == Approx(7.58e-4).epsilon(0.05));
    CHECK(cr.level_lo == 5);
    CHECK(cr.level_hi == 6);
    CHECK(cr.resolved);
    CHECK(cr.omega_c_star > 1.7);
    CHECK(cr.omega_c_star < 2.1);
    // both hybrid levels are near-equal mixtures of the two bare states
    for (double w : {cr.lo_initial_overlap, cr.lo_final_overlap, cr.hi_initial_overlap, cr.hi_final_overlap})
        CHECK(w == Approx(0.49).margin(0.02));

    const auto narrow = find_avoided_crossing(SystemParams::standard(2.0, 0.4, 0.1), {1.95, 2.05});
    CHECK(narrow.gap == Approx(7.58e-4).epsilon(0.05));
    CHECK(narrow.omega_c_star == Approx(cr.omega_c_star).margin(2e-8));
    CHECK(narrow.omega_c_star >= 1.95);
    CHECK(narrow.omega_c_star <= 2.05);
}

TEST_CASE("located minimum agrees with a dense independent scan", "[spectral]") {
    const auto& cr = default_crossing();
    double best = 1e9;
    for (int i = -20; i <= 20; ++i) {
        const double w = cr.omega_c_star + i * 2e-7;
        const Eigen::VectorXd e = oracle_levels(w, 0.4, 0.1, 0.1, 10);
        best = std::min(best, e(6) - e(5));
    }
    // eigenvalue round-off on a 7.6e-4 gap is ~1e-12 relative
    CHECK(cr.gap <= best * (1.0 + 1e-10));
    CHECK(cr.gap == Approx(best).epsilon(1e-9));
}

TEST_CASE("fixed level pair mode gives the same crossing", "[spectral]") {
    const auto p = SystemParams::standard(2.0, 0.4, 0.1);
    const auto fixed = find_avoided_crossing(p, {1.7, 2.1}, LevelPair{5, 6});
    CHECK(fixed.gap == Approx(default_crossing().gap).epsilon(1e-9));
    CHECK_THROWS_AS(find_avoided_crossing(p, {1.7, 2.1}, LevelPair{6, 5}), InvalidArgument);
    CHECK_THROWS_AS(find_avoided_crossing(p, {1.7, 2.1}, LevelPair{5, 66}), InvalidArgument);
}

TEST_CASE("monotone bracket is reported, not extrapolated", "[spectral]") {
    const auto p = SystemParams::standard(2.0, 0.4, 0.1);
    CHECK_THROWS_AS(find_avoided_crossing(p, {2.05, 2.3}), CrossingNotFound);
    CHECK_THROWS_AS(find_avoided_crossing(p, {2.1, 1.9}), InvalidArgument);
    CHECK_THROWS_AS(find_avoided_crossing(p, {0.0, 1.9}), InvalidArgument);
}

TEST_CASE("gap follows the cubic closed-form scaling at weak coupling", "[spectral]") {
    const auto g10 = default_crossing().gap;
    const auto g05 = find_avoided_crossing(SystemParams::standard(2.0, 0.4, 0.05), {1.7, 2.1}).gap;
    CHECK(g05 == Approx(g10 / 8.0).epsilon(0.25));
    CHECK(g05 == Approx(closed_gap(0.4, 0.05)).epsilon(0.25));
    CHECK(std::abs(closed_gap(0.4, 0.1) - g10) / g10 <= 0.15);
}

TEST_CASE("crossing gap has converged in the Fock truncation", "[spectral]") {
    const auto p = SystemParams::standard(2.0, 0.4, 0.1);
    const auto a = find_avoided_crossing(p, {1.7, 2.1});
    const auto b = find_avoided_crossing(p.with_n_max(14), {1.7, 2.1});
    CHECK(std::abs(a.gap - b.gap) / b.gap < 1e-8);
}

TEST_CASE("hybrid pair tracking by overlap", "[spectral]") {
    const auto& cr = default_crossing();
    const LevelPair pair = track_hybrid_pair(cr.eigensystem);
    CHECK(pair.lo == 5);
    CHECK(pair.hi == 6);
    CHECK_THROWS_AS(track_hybrid_pair(cr.eigensystem, kSinglePhoton, parse_state("eg0")), InvalidArgument);
}

TEST_CASE("hybrid fidelities at zero coupling equal one over root two", "[spectral]") {
    const EigenSystem eig = solve(SystemParams::standard(2.0, 0.4, 0.0));
    const auto f = hybrid_fidelities(eig, HilbertSpace(10));
    CHECK(f.f_a == Approx(1.0 / std::numbers::sqrt2).margin(1e-12));
    CHECK(f.f_b == Approx(1.0 / std::numbers::sqrt2).margin(1e-12));
    CHECK(f.n != f.m);
    CHECK(f.adjacent);
}

TEST_CASE("hybrid fidelities at the crossing", "[spectral]") {
    const auto& cr = default_crossing();
    const HilbertSpace s(10);
    const auto f = hybrid_fidelities(cr.eigensystem, s);
    CHECK(f.f_a > 0.984);
    CHECK(f.f_b > 0.984);
    CHECK(f.adjacent);
    CHECK(std::set<int>{f.n, f.m} == std::set<int>{5, 6});
    // Bessel bound: |a> against the two orthogonal hybrid levels
    const int i1 = s.index_of(kSinglePhoton), i2 = s.index_of(kDoubleExcited);
    const double a_on_m = std::abs(cr.eigensystem.states(i1, f.m) + cr.eigensystem.states(i2, f.m)) / std::numbers::sqrt2;
    CHECK(f.f_a * f.f_a + a_on_m * a_on_m <= 1.0 + 1e-12);

    const auto asym_p = SystemParams::standard(2.0, 0.4, 0.105, 0.095, 10);
    const auto asym = hybrid_fidelities(find_avoided_crossing(asym_p, {1.7, 2.1}).eigensystem, s);
    CHECK(std::abs(asym.f_a - f.f_a) < 0.01);
    CHECK(std::abs(asym.f_b - f.f_b) < 0.01);
}

TEST_CASE("fidelity drops through 0.95 near lambda = 0.178", "[spectral]") {
    const HilbertSpace s(10);
    auto fid = [&](double lambda) {
        const auto cr = find_avoided_crossing(SystemParams::standard(2.0, 0.4, lambda), {1.7, 2.1});
        return hybrid_fidelities(cr.eigensystem, s);
    };
    const auto f17 = fid(0.17), f178 = fid(0.178), f19 = fid(0.19), f20 = fid(0.20), f10 = fid(0.10);
    CHECK(std::min(f17.f_a, f17.f_b) > 0.95);
    CHECK(std::min(f19.f_a, f19.f_b) <= 0.95);
    CHECK(std::min(f178.f_a, f178.f_b) == Approx(0.95).margin(0.005));
    CHECK(f20.f_a < f10.f_a);
    CHECK(f20.f_b < f10.f_b);
}
