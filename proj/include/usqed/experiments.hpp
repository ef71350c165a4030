#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "usqed/config.hpp"
#include "usqed/dynamics.hpp"
#include "usqed/parallel.hpp"
#include "usqed/perturbation.hpp"
#include "usqed/spectral.hpp"
#include "usqed/table.hpp"

namespace usqed {

inline constexpr const char* kCodeVersion = "0.1.0";

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::vector<double> linspace(double a, double b, int n) { return GridSpec{a, b, n}.values(); }

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + ResultTable::format_double(v[i]);
    return out;
}

/// Labels for every default that stands in for an unstated axis range or an interpretation choice.
inline Json decision_labels(const ExperimentConfig& cfg) {
    Json d = Json::array();
    auto defaulted = [&](const std::string& key) {
        return std::find(cfg.defaulted.begin(), cfg.defaulted.end(), key) != cfg.defaulted.end() ||
               std::find(cfg.defaulted.begin(), cfg.defaulted.end(), "grid") != cfg.defaulted.end();
    };
    switch (cfg.experiment) {
    case ExperimentKind::spectrum_sweep:
        if (defaulted("grid.omega_c")) d.push_back("declared default: omega_c grid [1.9, 2.1], 201 points");
        d.push_back("sampled minimum refined by golden section; refined row inserted with refined = 1");
        break;
    case ExperimentKind::fidelity_vs_delta:
        if (defaulted("grid.delta")) d.push_back("declared default: delta grid [0.05, 0.95], 46 points");
        d.push_back("F_b maximized over levels other than the F_a maximizer");
        break;
    case ExperimentKind::fidelity_vs_lambda:
        if (defaulted("grid.lambda")) d.push_back("declared default: lambda grid [0.02, 0.25], 47 points");
        d.push_back("F_b maximized over levels other than the F_a maximizer");
        break;
    case ExperimentKind::time_evolution:
        d.push_back("initial state is the bare product state; omega_c at the located crossing");
        d.push_back("P_A_e / P_AB_e estimator selected by 'estimator'");
        break;
    case ExperimentKind::max_difference_sweep:
        if (defaulted("grid.lambda")) d.push_back("declared default: lambda grid [0.02, 0.25], 24 points");
        d.push_back("D = max over one exchange period 2 pi / gap of P_AB_e - <X^- X^+> (signed)");
        break;
    case ExperimentKind::coupling_map:
        if (defaulted("grid.lambda")) d.push_back("declared default: lambda grid [0.01, 0.2], 20 points");
        if (defaulted("grid.delta")) d.push_back("declared default: delta grid [-0.9, 0.9], 37 points");
        break;
    case ExperimentKind::paths:
        d.push_back("intermediate states exclude both endpoints; denominators at the bare resonance");
        break;
    case ExperimentKind::crossing: break;
    }
    if (!cfg.bracket) d.push_back("crossing bracket relative to the bare resonance omega_a + omega_b: [0.85, 1.05]");
    if (!cfg.cutoff) d.push_back("dressed jump channels kept over the full truncated space");
    return d;
}

/// Crossing gap at n_max and n_max + extra for the configured base point.
inline Json truncation_report(const ExperimentConfig& cfg) {
    Json r;
    r["n_max"] = cfg.n_max;
    r["n_max_compare"] = cfg.n_max + cfg.audit_extra_photons;
    try {
        const SystemParams lo = cfg.base_params();
        const SystemParams hi = lo.with_n_max(cfg.n_max + cfg.audit_extra_photons);
        const auto a = find_avoided_crossing(lo, cfg.bracket_for(lo), std::nullopt, cfg.crossing_options());
        const auto b = find_avoided_crossing(hi, cfg.bracket_for(hi), std::nullopt, cfg.crossing_options());
        r["gap"] = a.gap;
        r["gap_compare"] = b.gap;
        const double drift = std::abs(a.gap - b.gap) / std::max({std::abs(a.gap), std::abs(b.gap), 1e-300});
        r["relative_drift"] = drift;
        r["converged"] = drift <= cfg.audit_threshold;
    } catch (const std::exception& e) {
        r["error"] = e.what();
        r["converged"] = false;
    }
    return r;
}

inline void attach_metadata(ResultTable& t, const ExperimentConfig& cfg) {
    Json& m = t.metadata();
    m["experiment"] = experiment_name(cfg.experiment);
    m["code_version"] = kCodeVersion;
    m["config"] = cfg.to_json();
    m["defaulted_fields"] = cfg.defaulted;
    m["decisions"] = decision_labels(cfg);
    m["units"] = "energies, frequencies and rates in units of omega_b; time in 1/omega_b";
    const Json report = truncation_report(cfg);
    m["truncation"] = report;
    t.set_diagnostic("truncation_converged", report.value("converged", false));
}

struct CrossingPoint {
    bool found = false;
    std::string status = "ok";
    CrossingResult crossing;
};

inline CrossingPoint locate(const ExperimentConfig& cfg, const SystemParams& p) {
    CrossingPoint out;
    try {
        out.crossing = find_avoided_crossing(p, cfg.bracket_for(p), std::nullopt, cfg.crossing_options());
        out.found = true;
        out.status = out.crossing.resolved ? "ok" : "unresolved";
    } catch (const CrossingNotFound&) {
        out.status = "not_found";
    }
    return out;
}

inline std::vector<double> time_grid(double horizon, int samples) { return linspace(0.0, horizon, samples); }

inline EvolutionRecord evolve_at(const ExperimentConfig& cfg, const EigenSystem& eig, const DissipationRates& rates,
                                 const std::vector<double>& t) {
    const DensityMatrix rho0 = dressed_from_bare_state(eig, cfg.initial);
    if (cfg.bare_operator_master_equation)
        return evolve_bare_dissipators(rho0, eig, rates, t, cfg.cutoff ? std::min(*cfg.cutoff, eig.dim()) : 20,
                                       cfg.estimator);
    const int cutoff = cfg.cutoff_for(eig.dim());
    EvolutionOptions opt;
    opt.kappa = rates.kappa;
    opt.estimator = cfg.estimator;
    opt.cutoff = cutoff;
    return evolve(rho0, eig, dressed_jump_channels(eig, rates, cutoff), t, opt);
}

inline void evolution_diagnostics(ResultTable& t, const std::vector<const EvolutionRecord*>& recs,
                                  double cutoff_threshold) {
    double trace = 0.0, herm = 0.0, min_eig = 0.0, above = 0.0;
    bool in_range = true;
    for (const auto* r : recs) {
        trace = std::max(trace, r->max_trace_error());
        herm = std::max(herm, r->max_hermiticity_error());
        min_eig = std::min(min_eig, r->min_min_eigenvalue());
        above = std::max(above, r->max_population_above_cutoff);
        in_range = in_range && r->probabilities_in_range();
    }
    t.metadata()["max_trace_error"] = trace;
    t.metadata()["max_hermiticity_error"] = herm;
    t.metadata()["min_eigenvalue"] = min_eig;
    t.metadata()["max_population_above_cutoff"] = above;
    t.set_diagnostic("trace_preserved", trace <= 1e-8);
    t.set_diagnostic("hermitian", herm <= 1e-9);
    t.set_diagnostic("positive", min_eig >= -1e-7);
    t.set_diagnostic("probabilities_in_range", in_range);
    t.set_diagnostic("cutoff_population", above < cutoff_threshold);
}

} // namespace detail

inline ResultTable run_spectrum_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams base = cfg.base_params();
    const std::vector<double> grid = cfg.omega_c_grid.values();
    const int l0 = cfg.levels[0], l1 = cfg.levels[1];

    std::vector<Column> cols{{"omega_c", false}};
    for (int l : cfg.levels) cols.push_back({"E" + std::to_string(l), true});
    cols.push_back({"gap", true});
    cols.push_back({"is_min", false});
    cols.push_back({"refined", false});
    ResultTable t(cols);

    const auto curve = level_curve(base, grid, cfg.levels);
    std::size_t k_min = 0;
    std::vector<double> gaps(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        gaps[i] = curve.energies[i][1] - curve.energies[i][0];
        if (gaps[i] < gaps[k_min]) k_min = i;
    }

    std::optional<CrossingResult> refined;
    if (k_min > 0 && k_min + 1 < grid.size()) {
        refined = find_avoided_crossing(base, {grid[k_min - 1], grid[k_min + 1]}, LevelPair{l0, l1},
                                        cfg.crossing_options());
        if (refined->gap > gaps[k_min]) refined.reset();
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<Cell> row{grid[i]};
        for (double e : curve.energies[i]) row.emplace_back(e);
        row.emplace_back(gaps[i]);
        row.emplace_back(static_cast<long long>(!refined && i == k_min));
        row.emplace_back(0LL);
        t.add_row(std::move(row));
    }
    t.metadata()["sampled_min_gap"] = gaps[k_min];
    t.metadata()["sampled_min_omega_c"] = grid[k_min];
    if (refined) {
        std::vector<Cell> row{refined->omega_c_star};
        for (int l : cfg.levels) row.emplace_back(refined->eigensystem.energies(l));
        row.emplace_back(refined->gap);
        row.emplace_back(1LL);
        row.emplace_back(1LL);
        const std::size_t at = static_cast<std::size_t>(
            std::upper_bound(grid.begin(), grid.end(), refined->omega_c_star) - grid.begin());
        t.insert_row(at, std::move(row));
        t.metadata()["min_gap"] = refined->gap;
        t.metadata()["min_omega_c"] = refined->omega_c_star;
    } else {
        t.metadata()["min_gap"] = gaps[k_min];
        t.metadata()["min_omega_c"] = grid[k_min];
        t.metadata()["refinement"] = "skipped: sampled minimum on the grid boundary or already optimal";
    }
    detail::attach_metadata(t, cfg);
    return t;
}

namespace detail {

struct FidelityPoint {
    CrossingPoint where;
    HybridFidelities fid;
};

inline FidelityPoint fidelity_point(const ExperimentConfig& cfg, const SystemParams& p) {
    FidelityPoint out{locate(cfg, p), {}};
    if (out.where.found)
        out.fid = hybrid_fidelities(out.where.crossing.eigensystem, out.where.crossing.eigensystem.space(),
                                    cfg.initial, cfg.final_state);
    return out;
}

inline void push_fidelity_cells(std::vector<Cell>& row, const FidelityPoint& f) {
    const bool ok = f.where.found;
    row.emplace_back(ok ? f.where.crossing.omega_c_star : nan());
    row.emplace_back(ok ? f.where.crossing.gap : nan());
    row.emplace_back(ok ? f.fid.f_a : nan());
    row.emplace_back(ok ? f.fid.f_b : nan());
    row.emplace_back(ok ? static_cast<long long>(f.fid.n) : -1LL);
    row.emplace_back(ok ? static_cast<long long>(f.fid.m) : -1LL);
    row.emplace_back(static_cast<long long>(ok && f.fid.adjacent));
    row.emplace_back(f.where.status);
}

inline void fidelity_diagnostics(ResultTable& t, const std::vector<std::string>& f_cols) {
    bool in_range = true;
    for (const auto& c : f_cols)
        for (double v : t.numeric(c))
            if (!std::isnan(v) && (v < 0.0 || v > 1.0 + 1e-12)) in_range = false;
    t.set_diagnostic("fidelities_in_range", in_range);
}

} // namespace detail

inline ResultTable run_fidelity_vs_delta(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> grid = cfg.delta_grid.values();
    std::vector<Column> cols{{"delta"},      {"omega_c_star", true}, {"gap", true}, {"F_a"}, {"F_b"},
                             {"n"},          {"m"},                  {"adjacent"},  {"status"}};
    if (cfg.inset)
        for (const char* c : {"omega_c_star_inset", "gap_inset", "F_a_inset", "F_b_inset", "status_inset"})
            cols.push_back({c, std::string(c) != "status_inset"});
    ResultTable t(cols);

    struct Point {
        detail::FidelityPoint sym, inset;
    };
    const auto points = parallel_map(grid.size(), resolve_thread_count(cfg.threads), [&](std::size_t i) {
        Point pt;
        pt.sym = detail::fidelity_point(cfg, cfg.params_for(grid[i], cfg.lambda_a, cfg.lambda_b, cfg.omega_c, cfg.n_max));
        if (cfg.inset)
            pt.inset = detail::fidelity_point(
                cfg, cfg.params_for(grid[i], cfg.inset_lambda_a, cfg.inset_lambda_b, cfg.omega_c, cfg.n_max));
        return pt;
    });
    int flagged = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<Cell> row{grid[i]};
        detail::push_fidelity_cells(row, points[i].sym);
        if (points[i].sym.where.status != "ok") ++flagged;
        if (cfg.inset) {
            const auto& f = points[i].inset;
            const bool ok = f.where.found;
            row.emplace_back(ok ? f.where.crossing.omega_c_star : detail::nan());
            row.emplace_back(ok ? f.where.crossing.gap : detail::nan());
            row.emplace_back(ok ? f.fid.f_a : detail::nan());
            row.emplace_back(ok ? f.fid.f_b : detail::nan());
            row.emplace_back(f.where.status);
        }
        t.add_row(std::move(row));
    }
    t.metadata()["flagged_rows"] = flagged;
    detail::attach_metadata(t, cfg);
    std::vector<std::string> f_cols{"F_a", "F_b"};
    if (cfg.inset) f_cols.insert(f_cols.end(), {"F_a_inset", "F_b_inset"});
    detail::fidelity_diagnostics(t, f_cols);
    return t;
}

inline ResultTable run_fidelity_vs_lambda(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> grid = cfg.lambda_grid.values();
    ResultTable t({{"lambda"}, {"omega_c_star", true}, {"gap", true}, {"F_a"}, {"F_b"},
                   {"n"}, {"m"}, {"adjacent"}, {"status"}});
    const auto points = parallel_map(grid.size(), resolve_thread_count(cfg.threads), [&](std::size_t i) {
        return detail::fidelity_point(cfg, cfg.params_for(cfg.delta, grid[i], grid[i], cfg.omega_c, cfg.n_max));
    });
    int flagged = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<Cell> row{grid[i]};
        detail::push_fidelity_cells(row, points[i]);
        if (points[i].where.status != "ok") ++flagged;
        t.add_row(std::move(row));
    }
    t.metadata()["flagged_rows"] = flagged;
    detail::attach_metadata(t, cfg);
    detail::fidelity_diagnostics(t, {"F_a", "F_b"});
    return t;
}

inline ResultTable run_time_evolution(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams base = cfg.base_params();
    const CrossingResult cr = find_avoided_crossing(base, cfg.bracket_for(base), std::nullopt, cfg.crossing_options());
    const double period = 2.0 * std::numbers::pi / cr.gap;
    const std::vector<double> times = detail::time_grid(cfg.periods * period, cfg.samples);
    const EvolutionRecord rec = detail::evolve_at(cfg, cr.eigensystem, cfg.rates, times);

    ResultTable t({{"t"},
                   {"photon_number", true},
                   {"bare_photon_number", true},
                   {"P_A_e", true},
                   {"P_AB_e", true},
                   {"flux", true},
                   {"trace_error"},
                   {"min_eigenvalue"},
                   {"purity"}});
    for (std::size_t i = 0; i < rec.size(); ++i)
        t.add_row({rec.times[i], rec.photon_number[i], rec.bare_photon_number[i], rec.p_a_excited[i],
                   rec.p_ab_excited[i], rec.flux[i], rec.trace_error[i], rec.min_eigenvalue[i], rec.purity[i]});

    const auto peak = std::max_element(rec.p_ab_excited.begin(), rec.p_ab_excited.end()) - rec.p_ab_excited.begin();
    Json& m = t.metadata();
    m["omega_c_star"] = cr.omega_c_star;
    m["gap"] = cr.gap;
    m["exchange_period"] = period;
    m["predicted_peak_time"] = std::numbers::pi / cr.gap;
    m["peak_P_AB_e"] = rec.p_ab_excited[static_cast<std::size_t>(peak)];
    m["peak_time"] = rec.times[static_cast<std::size_t>(peak)];
    m["cutoff"] = rec.cutoff;
    m["master_equation"] = cfg.bare_operator_master_equation ? "bare_operators" : "dressed";
    detail::attach_metadata(t, cfg);
    detail::evolution_diagnostics(t, {&rec}, cfg.audit_threshold);
    return t;
}

inline ResultTable run_max_difference_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> lambdas = cfg.lambda_grid.values();
    const std::size_t nl = lambdas.size();
    struct Point {
        detail::CrossingPoint where;
        double d = detail::nan();
        double window = detail::nan();
        EvolutionRecord rec;
    };
    const auto points = parallel_map(cfg.deltas.size() * nl, resolve_thread_count(cfg.threads), [&](std::size_t i) {
        const double delta = cfg.deltas[i / nl];
        const double lambda = lambdas[i % nl];
        Point pt;
        pt.where = detail::locate(cfg, cfg.params_for(delta, lambda, lambda, cfg.omega_c, cfg.n_max));
        if (!pt.where.found) return pt;
        pt.window = std::min(2.0 * std::numbers::pi / pt.where.crossing.gap, cfg.max_window);
        pt.rec = detail::evolve_at(cfg, pt.where.crossing.eigensystem, cfg.rates,
                                   detail::time_grid(pt.window, cfg.samples));
        pt.d = max_difference(pt.rec, {0.0, pt.window});
        pt.rec.final_state = {};
        return pt;
    });

    ResultTable t({{"delta"}, {"lambda"}, {"D", true}, {"lambda_at_max"}, {"omega_c_star", true}, {"gap", true},
                   {"window"}, {"status"}});
    std::vector<const EvolutionRecord*> recs;
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
        std::size_t best = nl;
        for (std::size_t li = 0; li < nl; ++li) {
            const double d = points[di * nl + li].d;
            if (!std::isnan(d) && (best == nl || d > points[di * nl + best].d)) best = li;
        }
        for (std::size_t li = 0; li < nl; ++li) {
            const Point& pt = points[di * nl + li];
            if (pt.where.found) recs.push_back(&pt.rec);
            t.add_row({cfg.deltas[di], lambdas[li], pt.d, static_cast<long long>(li == best),
                       pt.where.found ? pt.where.crossing.omega_c_star : detail::nan(),
                       pt.where.found ? pt.where.crossing.gap : detail::nan(), pt.window, pt.where.status});
        }
    }
    detail::attach_metadata(t, cfg);
    detail::evolution_diagnostics(t, recs, cfg.audit_threshold);
    return t;
}

inline ResultTable run_coupling_map(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> lambdas = cfg.lambda_grid.values();
    const std::vector<double> deltas = cfg.delta_grid.values();
    const std::size_t nd = deltas.size();
    struct Cellv {
        detail::CrossingPoint where;
        double closed = detail::nan();
    };
    const auto cells = parallel_map(lambdas.size() * nd, resolve_thread_count(cfg.threads), [&](std::size_t i) {
        const SystemParams p = cfg.params_for(deltas[i % nd], lambdas[i / nd], lambdas[i / nd], cfg.omega_c, cfg.n_max);
        Cellv c;
        c.where = detail::locate(cfg, p);
        c.where.crossing.eigensystem = {};
        if (p.uses_standard_levels()) c.closed = 2.0 * closed_form_coupling(p);
        return c;
    });
    ResultTable t({{"lambda"},
                   {"delta"},
                   {"two_omega_eff_numeric", true},
                   {"two_omega_eff_closed_form"},
                   {"omega_c_star", true},
                   {"status"}});
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        t.add_row({lambdas[i / nd], deltas[i % nd], c.where.found ? c.where.crossing.gap : detail::nan(), c.closed,
                   c.where.found ? c.where.crossing.omega_c_star : detail::nan(), c.where.status});
    }
    detail::attach_metadata(t, cfg);
    return t;
}

inline ResultTable run_paths(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams p = cfg.base_params();
    const HilbertSpace space(p.n_max);
    const PathEnumeration en = enumerate_paths(space, p, cfg.initial, cfg.final_state, cfg.order);
    ResultTable t({{"index"},
                   {"path"},
                   {"couplers"},
                   {"step_amplitudes"},
                   {"energy_denominators"},
                   {"numerator", true},
                   {"denominator", true},
                   {"contribution", true}});
    for (std::size_t i = 0; i < en.paths.size(); ++i) {
        const auto& path = en.paths[i];
        std::string couplers;
        double num = 1.0, den = 1.0;
        for (int k = 0; k < path.order(); ++k) {
            couplers += std::string(k ? ";" : "") + (path.couplers[k] == Coupler::A ? "A" : "B");
            num *= path.step_amplitudes[k] * detail::coupling_of(path.couplers[k], p);
        }
        for (double d : path.energy_denominators) den *= d;
        t.add_row({static_cast<long long>(i), path.describe(), couplers, detail::join_doubles(path.step_amplitudes),
                   detail::join_doubles(path.energy_denominators), num, den, path_contribution(path, p)});
    }
    Json& m = t.metadata();
    m["path_count"] = en.paths.size();
    m["excluded_by_truncation"] = en.excluded_by_truncation;
    if (cfg.order == 3) {
        const double sum = path_sum_coupling(en.paths, p);
        m["path_sum_coupling"] = sum;
        m["two_omega_eff_path_sum"] = 2.0 * sum;
    }
    if (p.uses_standard_levels() && cfg.initial == kSinglePhoton && cfg.final_state == kDoubleExcited) {
        const double closed = closed_form_coupling(p);
        m["closed_form_coupling"] = closed;
        m["two_omega_eff_closed_form"] = 2.0 * closed;
    }
    detail::attach_metadata(t, cfg);
    return t;
}

inline ResultTable run_crossing(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams p = cfg.base_params();
    const CrossingResult cr = find_avoided_crossing(p, cfg.bracket_for(p), std::nullopt, cfg.crossing_options());
    const HybridFidelities fid = hybrid_fidelities(cr.eigensystem, cr.eigensystem.space(), cfg.initial, cfg.final_state);
    const bool closed_ok = p.uses_standard_levels() && cfg.initial == kSinglePhoton && cfg.final_state == kDoubleExcited;
    ResultTable t({{"omega_c_star", true},
                   {"gap", true},
                   {"two_omega_eff_closed_form", true},
                   {"level_lo"},
                   {"level_hi"},
                   {"lo_initial_overlap"},
                   {"lo_final_overlap"},
                   {"hi_initial_overlap"},
                   {"hi_final_overlap"},
                   {"F_a"},
                   {"F_b"},
                   {"resolved"},
                   {"evaluations"}});
    t.add_row({cr.omega_c_star, cr.gap, closed_ok ? 2.0 * closed_form_coupling(p) : detail::nan(),
               static_cast<long long>(cr.level_lo), static_cast<long long>(cr.level_hi), cr.lo_initial_overlap,
               cr.lo_final_overlap, cr.hi_initial_overlap, cr.hi_final_overlap, fid.f_a, fid.f_b,
               static_cast<long long>(cr.resolved), static_cast<long long>(cr.evaluations)});
    detail::attach_metadata(t, cfg);
    return t;
}

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
    case ExperimentKind::spectrum_sweep: return run_spectrum_sweep(cfg);
    case ExperimentKind::fidelity_vs_delta: return run_fidelity_vs_delta(cfg);
    case ExperimentKind::fidelity_vs_lambda: return run_fidelity_vs_lambda(cfg);
    case ExperimentKind::time_evolution: return run_time_evolution(cfg);
    case ExperimentKind::max_difference_sweep: return run_max_difference_sweep(cfg);
    case ExperimentKind::coupling_map: return run_coupling_map(cfg);
    case ExperimentKind::paths: return run_paths(cfg);
    case ExperimentKind::crossing: return run_crossing(cfg);
    }
    throw ConfigError("unhandled experiment");
}

struct AuditReport {
    ExperimentKind experiment = ExperimentKind::crossing;
    int n_max = 0;
    int n_max_compare = 0;
    double max_drift = 0.0;
    std::string worst_column;
    std::size_t worst_row = 0;
    double threshold = 1e-6;
    bool passed = true;

    ResultTable table() const {
        ResultTable t({{"experiment"}, {"n_max"}, {"n_max_compare"}, {"max_relative_drift"}, {"worst_column"},
                       {"worst_row"}, {"threshold"}, {"passed"}});
        t.add_row({experiment_name(experiment), static_cast<long long>(n_max), static_cast<long long>(n_max_compare),
                   max_drift, worst_column, static_cast<long long>(worst_row), threshold,
                   static_cast<long long>(passed)});
        t.set_diagnostic("converged", passed);
        return t;
    }
};

/// Rerun the audited experiment at n_max and n_max + extra; drift is max |a - b| / max(|a|, |b|, 1e-12)
/// over every audited column.
inline AuditReport convergence_audit(const ExperimentConfig& cfg) {
    ExperimentConfig lo = cfg;
    lo.experiment = cfg.audit_experiment;
    lo.validate();
    ExperimentConfig hi = lo;
    hi.n_max = cfg.n_max + cfg.audit_extra_photons;
    const ResultTable a = run_experiment(lo);
    const ResultTable b = run_experiment(hi);
    if (a.row_count() != b.row_count()) throw Error("convergence_audit: row counts differ between truncations");

    AuditReport r;
    r.experiment = lo.experiment;
    r.n_max = lo.n_max;
    r.n_max_compare = hi.n_max;
    r.threshold = cfg.audit_threshold;
    for (const auto& col : a.columns()) {
        if (!col.audited) continue;
        const auto va = a.numeric(col.name), vb = b.numeric(col.name);
        for (std::size_t i = 0; i < va.size(); ++i) {
            if (std::isnan(va[i]) && std::isnan(vb[i])) continue;
            const double drift = std::abs(va[i] - vb[i]) / std::max({std::abs(va[i]), std::abs(vb[i]), 1e-12});
            if (std::isnan(drift) || drift > r.max_drift) {
                r.max_drift = std::isnan(drift) ? std::numeric_limits<double>::infinity() : drift;
                r.worst_column = col.name;
                r.worst_row = i;
            }
        }
    }
    r.passed = r.max_drift <= r.threshold;
    return r;
}

} // namespace usqed
