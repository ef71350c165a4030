#pragma once

// Experiment configuration: a single JSON document, every field optional.
//
//   {
//     "experiment": "crossing",
//     "n_max": 10, "threads": 0, "estimator": "dressed",
//     "params": {"omega_c": 2.0, "delta": 0.4, "lambda": 0.1, "lambda_a": 0.1, "lambda_b": 0.1, "omega_fg": 0.3},
//     "rates":  {"kappa": 0.0, "gamma_ef_a": 0.0, "gamma_fg_a": 0.0, "gamma_eg_b": 0.0},
//     "bracket": [1.7, 2.1], "bracket_relative": [0.85, 1.05], "scan_points": 41, "tolerance": 1e-8,
//     "grid": {"omega_c": {"start": 1.9, "stop": 2.1, "count": 201}, "delta": {...}, "lambda": {...}},
//     "levels": [5, 6], "deltas": [0.0, -0.4, 0.4],
//     "periods": 3, "samples": 2001, "cutoff": 66, "max_window": 1e9,
//     "master_equation": "dressed",
//     "inset": false, "inset_lambda_a": 0.105, "inset_lambda_b": 0.095,
//     "order": 3, "initial": "g,g,1", "final": "e,e,0",
//     "audit_experiment": "crossing", "audit_threshold": 1e-6, "audit_extra_photons": 4,
//     "output_path": "out.csv"
//   }
//
// "params" without "omega_fg" uses omega_a = omega_b = 1, omega_fg = (1 - delta)/2.
// "rates" with only "kappa" applies gamma_fg^A = gamma_eg^B = kappa, gamma_ef^A = sqrt2 kappa.

#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "usqed/dynamics.hpp"
#include "usqed/table.hpp"

namespace usqed {

enum class ExperimentKind {
    spectrum_sweep,
    fidelity_vs_delta,
    fidelity_vs_lambda,
    time_evolution,
    max_difference_sweep,
    coupling_map,
    paths,
    crossing,
};

inline constexpr std::array<ExperimentKind, 8> kAllExperiments{
    ExperimentKind::spectrum_sweep, ExperimentKind::fidelity_vs_delta,    ExperimentKind::fidelity_vs_lambda,
    ExperimentKind::time_evolution, ExperimentKind::max_difference_sweep, ExperimentKind::coupling_map,
    ExperimentKind::paths,          ExperimentKind::crossing};

inline std::string experiment_name(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::spectrum_sweep: return "spectrum_sweep";
    case ExperimentKind::fidelity_vs_delta: return "fidelity_vs_delta";
    case ExperimentKind::fidelity_vs_lambda: return "fidelity_vs_lambda";
    case ExperimentKind::time_evolution: return "time_evolution";
    case ExperimentKind::max_difference_sweep: return "max_difference_sweep";
    case ExperimentKind::coupling_map: return "coupling_map";
    case ExperimentKind::paths: return "paths";
    case ExperimentKind::crossing: return "crossing";
    }
    return "?";
}

inline ExperimentKind parse_experiment(std::string name) {
    for (char& c : name)
        if (c == '-') c = '_';
    for (auto k : kAllExperiments)
        if (experiment_name(k) == name) return k;
    throw ConfigError("unknown experiment '" + name + "'");
}

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    int count = 1;

    /// Endpoints are copied; interior points are weighted so a symmetric midpoint lands on zero exactly.
    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i)
            v[static_cast<std::size_t>(i)] =
                i == 0 ? start
                : i == count - 1 ? stop
                           : (start * static_cast<double>(count - 1 - i) + stop * static_cast<double>(i)) /
                                 static_cast<double>(count - 1);
        return v;
    }

    void validate(const std::string& axis) const {
        if (count < 1) throw ConfigError("grid '" + axis + "': count must be >= 1");
        if (count > 1 && !(stop > start)) throw ConfigError("grid '" + axis + "': stop must exceed start");
    }

    Json to_json() const { return {{"start", start}, {"stop", stop}, {"count", count}}; }
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::crossing;
    int n_max = 10;
    int threads = 0;
    Estimator estimator = Estimator::dressed;
    bool bare_operator_master_equation = false;
    std::string output_path;

    double omega_c = 2.0;
    double delta = 0.4;
    double lambda_a = 0.1;
    double lambda_b = 0.1;
    std::optional<double> omega_fg;
    DissipationRates rates;

    std::optional<std::pair<double, double>> bracket;
    std::pair<double, double> bracket_relative{0.85, 1.05};
    int scan_points = 41;
    double tolerance = 1e-8;

    GridSpec omega_c_grid{1.9, 2.1, 201};
    GridSpec delta_grid{0.05, 0.95, 46};
    GridSpec lambda_grid{0.02, 0.25, 47};
    std::vector<int> levels{5, 6};
    std::vector<double> deltas{0.0, -0.4, 0.4};

    int periods = 3;
    int samples = 2001;
    std::optional<int> cutoff;
    double max_window = 1e9;

    bool inset = false;
    double inset_lambda_a = 0.105;
    double inset_lambda_b = 0.095;

    int order = 3;
    BasisState initial = kSinglePhoton;
    BasisState final_state = kDoubleExcited;

    ExperimentKind audit_experiment = ExperimentKind::crossing;
    double audit_threshold = 1e-6;
    int audit_extra_photons = 4;

    std::vector<std::string> defaulted; ///< fields taken from declared defaults

    /// Parameters of this config with delta / couplings / cavity frequency replaced.
    SystemParams params_for(double delta_value, double la, double lb, double wc, int n) const {
        if (omega_fg) return SystemParams::explicit_levels(wc, *omega_fg, delta_value, la, lb, n);
        return SystemParams::standard(wc, delta_value, la, lb, n);
    }
    SystemParams base_params() const { return params_for(delta, lambda_a, lambda_b, omega_c, n_max); }

    std::pair<double, double> bracket_for(const SystemParams& p) const {
        if (bracket) return *bracket;
        const double res = p.bare_resonance();
        return {bracket_relative.first * res, bracket_relative.second * res};
    }

    CrossingOptions crossing_options() const {
        CrossingOptions o;
        o.tolerance = tolerance;
        o.scan_points = scan_points;
        o.initial = initial;
        o.final_state = final_state;
        return o;
    }

    int cutoff_for(int dim) const { return cutoff ? std::min(*cutoff, dim) : dim; }

    static ExperimentConfig from_json(const Json& j, std::optional<ExperimentKind> forced = std::nullopt);
    Json to_json() const;
    void validate() const;
};

namespace detail {

inline void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

template <class T>
T get_as(const Json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

inline GridSpec parse_grid(const Json& j, const std::string& axis) {
    reject_unknown(j, {"start", "stop", "count"}, "grid." + axis);
    GridSpec g{get_as<double>(j, "start"), get_as<double>(j, "stop"), get_as<int>(j, "count")};
    g.validate(axis);
    return g;
}

inline std::pair<double, double> parse_pair(const Json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("field '" + key + "' must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const Json& j, std::optional<ExperimentKind> forced) {
    using detail::get_as;
    static const std::set<std::string> known{
        "experiment", "n_max", "threads", "estimator", "master_equation", "output_path", "params", "rates",
        "bracket", "bracket_relative", "scan_points", "tolerance", "grid", "levels", "deltas", "periods", "samples",
        "cutoff", "max_window", "inset", "inset_lambda_a", "inset_lambda_b", "order", "initial", "final",
        "audit_experiment", "audit_threshold", "audit_extra_photons",
        "parameterization"}; // last one is informational, written by to_json
    const Json doc = j.is_null() ? Json::object() : j;
    detail::reject_unknown(doc, known, "config");

    ExperimentConfig c;
    if (forced)
        c.experiment = *forced;
    else if (doc.contains("experiment"))
        c.experiment = parse_experiment(get_as<std::string>(doc, "experiment"));
    else
        c.defaulted.push_back("experiment");

    // experiment-specific defaults
    if (c.experiment == ExperimentKind::max_difference_sweep) {
        c.rates = DissipationRates::from_cavity_rate(1e-5);
        c.samples = 1001;
        c.lambda_grid = {0.02, 0.25, 24};
    }
    if (c.experiment == ExperimentKind::fidelity_vs_lambda) c.lambda_grid = {0.02, 0.25, 47};
    if (c.experiment == ExperimentKind::coupling_map) {
        c.lambda_grid = {0.01, 0.2, 20};
        c.delta_grid = {-0.9, 0.9, 37};
    }

    auto note_default = [&](const char* key) {
        if (!doc.contains(key)) c.defaulted.push_back(key);
    };
    if (doc.contains("n_max")) c.n_max = get_as<int>(doc, "n_max");
    note_default("n_max");
    if (doc.contains("threads")) c.threads = get_as<int>(doc, "threads");
    if (doc.contains("estimator")) {
        const auto e = get_as<std::string>(doc, "estimator");
        if (e == "dressed")
            c.estimator = Estimator::dressed;
        else if (e == "bare")
            c.estimator = Estimator::bare;
        else
            throw ConfigError("estimator must be 'dressed' or 'bare'");
    }
    if (doc.contains("master_equation")) {
        const auto m = get_as<std::string>(doc, "master_equation");
        if (m == "dressed")
            c.bare_operator_master_equation = false;
        else if (m == "bare_operators")
            c.bare_operator_master_equation = true;
        else
            throw ConfigError("master_equation must be 'dressed' or 'bare_operators'");
    }
    if (doc.contains("output_path")) c.output_path = get_as<std::string>(doc, "output_path");

    if (doc.contains("params")) {
        const Json& p = doc["params"];
        detail::reject_unknown(p, {"omega_c", "delta", "lambda", "lambda_a", "lambda_b", "omega_fg"}, "params");
        if (p.contains("omega_c")) c.omega_c = get_as<double>(p, "omega_c");
        if (p.contains("delta")) c.delta = get_as<double>(p, "delta");
        if (p.contains("lambda")) c.lambda_a = c.lambda_b = get_as<double>(p, "lambda");
        if (p.contains("lambda_a")) c.lambda_a = get_as<double>(p, "lambda_a");
        if (p.contains("lambda_b")) c.lambda_b = get_as<double>(p, "lambda_b");
        if (p.contains("omega_fg")) c.omega_fg = get_as<double>(p, "omega_fg");
    } else {
        c.defaulted.push_back("params");
    }
    if (doc.contains("rates")) {
        const Json& r = doc["rates"];
        detail::reject_unknown(r, {"kappa", "gamma_ef_a", "gamma_fg_a", "gamma_eg_b"}, "rates");
        if (r.contains("kappa")) {
            const double kappa = get_as<double>(r, "kappa");
            if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("rates.kappa must be finite and >= 0");
            c.rates = DissipationRates::from_cavity_rate(kappa);
        }
        if (r.contains("gamma_ef_a")) c.rates.gamma_ef_a = get_as<double>(r, "gamma_ef_a");
        if (r.contains("gamma_fg_a")) c.rates.gamma_fg_a = get_as<double>(r, "gamma_fg_a");
        if (r.contains("gamma_eg_b")) c.rates.gamma_eg_b = get_as<double>(r, "gamma_eg_b");
        for (double v : {c.rates.kappa, c.rates.gamma_ef_a, c.rates.gamma_fg_a, c.rates.gamma_eg_b})
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("rates must be finite and >= 0");
    } else {
        c.defaulted.push_back("rates");
    }

    if (doc.contains("bracket")) c.bracket = detail::parse_pair(doc["bracket"], "bracket");
    if (doc.contains("bracket_relative")) c.bracket_relative = detail::parse_pair(doc["bracket_relative"], "bracket_relative");
    if (!c.bracket) note_default("bracket_relative");
    if (doc.contains("scan_points")) c.scan_points = get_as<int>(doc, "scan_points");
    if (doc.contains("tolerance")) c.tolerance = get_as<double>(doc, "tolerance");

    if (doc.contains("grid")) {
        const Json& g = doc["grid"];
        detail::reject_unknown(g, {"omega_c", "delta", "lambda"}, "grid");
        if (g.contains("omega_c")) c.omega_c_grid = detail::parse_grid(g["omega_c"], "omega_c");
        if (g.contains("delta")) c.delta_grid = detail::parse_grid(g["delta"], "delta");
        if (g.contains("lambda")) c.lambda_grid = detail::parse_grid(g["lambda"], "lambda");
        for (const char* axis : {"omega_c", "delta", "lambda"})
            if (!g.contains(axis)) c.defaulted.push_back(std::string("grid.") + axis);
    } else {
        c.defaulted.push_back("grid");
    }
    if (doc.contains("levels")) c.levels = get_as<std::vector<int>>(doc, "levels");
    if (doc.contains("deltas")) c.deltas = get_as<std::vector<double>>(doc, "deltas");
    note_default("deltas");
    if (doc.contains("periods")) c.periods = get_as<int>(doc, "periods");
    if (doc.contains("samples")) c.samples = get_as<int>(doc, "samples");
    if (doc.contains("cutoff") && !doc["cutoff"].is_null()) c.cutoff = get_as<int>(doc, "cutoff");
    if (doc.contains("max_window")) c.max_window = get_as<double>(doc, "max_window");
    if (doc.contains("inset")) c.inset = get_as<bool>(doc, "inset");
    if (doc.contains("inset_lambda_a")) c.inset_lambda_a = get_as<double>(doc, "inset_lambda_a");
    if (doc.contains("inset_lambda_b")) c.inset_lambda_b = get_as<double>(doc, "inset_lambda_b");
    if (doc.contains("order")) c.order = get_as<int>(doc, "order");
    try {
        if (doc.contains("initial")) c.initial = parse_state(get_as<std::string>(doc, "initial"));
        if (doc.contains("final")) c.final_state = parse_state(get_as<std::string>(doc, "final"));
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (doc.contains("audit_experiment")) c.audit_experiment = parse_experiment(get_as<std::string>(doc, "audit_experiment"));
    if (doc.contains("audit_threshold")) c.audit_threshold = get_as<double>(doc, "audit_threshold");
    if (doc.contains("audit_extra_photons")) c.audit_extra_photons = get_as<int>(doc, "audit_extra_photons");

    c.validate();
    return c;
}

inline void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (n_max < 0) fail("n_max must be >= 0");
    if (threads < 0) fail("threads must be >= 0");
    if (scan_points < 3) fail("scan_points must be >= 3");
    if (!(tolerance > 0.0)) fail("tolerance must be > 0");
    if (periods < 1) fail("periods must be >= 1");
    if (samples < 2) fail("samples must be >= 2");
    if (cutoff && *cutoff < 1) fail("cutoff must be >= 1");
    if (!(max_window > 0.0)) fail("max_window must be > 0");
    if (order < 1) fail("order must be >= 1");
    if (audit_extra_photons < 1) fail("audit_extra_photons must be >= 1");
    if (bracket && !(bracket->second > bracket->first && bracket->first > 0.0)) fail("bracket must satisfy 0 < lo < hi");
    if (!(bracket_relative.second > bracket_relative.first && bracket_relative.first > 0.0))
        fail("bracket_relative must satisfy 0 < lo < hi");
    if (levels.size() < 2) fail("levels needs at least two indices");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1]) fail("levels must be ascending");
    if (!levels.empty() && (levels.front() < 0 || levels.back() >= HilbertSpace::kAtomicDim * (n_max + 1)))
        fail("levels outside [0, dim)");
    omega_c_grid.validate("omega_c");
    delta_grid.validate("delta");
    lambda_grid.validate("lambda");
    try {
        rates.validate();
        (void)base_params();
        // every point the experiment will visit has to be a valid parameter set
        switch (experiment) {
        case ExperimentKind::spectrum_sweep:
            for (double w : omega_c_grid.values()) (void)params_for(delta, lambda_a, lambda_b, w, n_max);
            break;
        case ExperimentKind::fidelity_vs_delta:
            for (double d : delta_grid.values()) {
                (void)params_for(d, lambda_a, lambda_b, omega_c, n_max);
                if (inset) (void)params_for(d, inset_lambda_a, inset_lambda_b, omega_c, n_max);
            }
            break;
        case ExperimentKind::fidelity_vs_lambda:
            for (double l : lambda_grid.values()) (void)params_for(delta, l, l, omega_c, n_max);
            break;
        case ExperimentKind::max_difference_sweep:
            if (deltas.empty()) fail("deltas must not be empty");
            for (double d : deltas)
                for (double l : lambda_grid.values()) (void)params_for(d, l, l, omega_c, n_max);
            break;
        case ExperimentKind::coupling_map:
            for (double d : delta_grid.values())
                for (double l : lambda_grid.values()) (void)params_for(d, l, l, omega_c, n_max);
            break;
        default: break;
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

inline Json ExperimentConfig::to_json() const {
    Json j;
    j["experiment"] = experiment_name(experiment);
    j["n_max"] = n_max;
    j["estimator"] = estimator == Estimator::dressed ? "dressed" : "bare";
    j["master_equation"] = bare_operator_master_equation ? "bare_operators" : "dressed";
    Json p{{"omega_c", omega_c}, {"delta", delta}, {"lambda_a", lambda_a}, {"lambda_b", lambda_b}};
    if (omega_fg) p["omega_fg"] = *omega_fg;
    j["params"] = p;
    j["parameterization"] = omega_fg ? "explicit omega_fg" : "omega_a = omega_b = 1, omega_fg = (1 - delta)/2";
    j["rates"] = {{"kappa", rates.kappa},
                  {"gamma_ef_a", rates.gamma_ef_a},
                  {"gamma_fg_a", rates.gamma_fg_a},
                  {"gamma_eg_b", rates.gamma_eg_b}};
    if (bracket) j["bracket"] = {bracket->first, bracket->second};
    j["bracket_relative"] = {bracket_relative.first, bracket_relative.second};
    j["scan_points"] = scan_points;
    j["tolerance"] = tolerance;
    j["grid"] = {{"omega_c", omega_c_grid.to_json()}, {"delta", delta_grid.to_json()}, {"lambda", lambda_grid.to_json()}};
    j["levels"] = levels;
    j["deltas"] = deltas;
    j["periods"] = periods;
    j["samples"] = samples;
    j["cutoff"] = cutoff ? Json(*cutoff) : Json(nullptr);
    j["max_window"] = max_window;
    j["inset"] = inset;
    j["inset_lambda_a"] = inset_lambda_a;
    j["inset_lambda_b"] = inset_lambda_b;
    j["order"] = order;
    j["initial"] = label(initial);
    j["final"] = label(final_state);
    j["audit_experiment"] = experiment_name(audit_experiment);
    j["audit_threshold"] = audit_threshold;
    j["audit_extra_photons"] = audit_extra_photons;
    return j;
}

} // namespace usqed
