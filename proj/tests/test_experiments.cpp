#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <numbers>
#include <numeric>
#include <sstream>

#include "usqed/experiments.hpp"

using namespace usqed;
using Catch::Approx;

namespace {

ExperimentConfig config(const char* json) { return ExperimentConfig::from_json(Json::parse(json)); }

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);)
        if (line.empty() || line[0] != '#') out.push_back(line);
    return out;
}

} // namespace

TEST_CASE("empty config resolves every default", "[config]") {
    const auto c = ExperimentConfig::from_json(Json::object());
    CHECK(c.experiment == ExperimentKind::crossing);
    CHECK(c.n_max == 10);
    CHECK(c.delta == 0.4);
    CHECK(c.lambda_a == 0.1);
    CHECK(c.rates.all_zero());
    CHECK(c.estimator == Estimator::dressed);
    CHECK(c.omega_c_grid.count == 201);
    const auto base = c.base_params();
    CHECK(base.omega_fg == Approx(0.3));
    CHECK(c.bracket_for(base).first == Approx(1.7));
    CHECK(c.bracket_for(base).second == Approx(2.1));
    const Json echo = c.to_json();
    for (const char* key : {"params", "rates", "grid", "n_max", "bracket_relative", "tolerance", "samples", "periods",
                            "initial", "final", "estimator", "deltas", "levels", "inset_lambda_a", "max_window"})
        CHECK(echo.contains(key));
}

TEST_CASE("experiment-specific defaults", "[config]") {
    const auto md = config(R"({"experiment": "max_difference_sweep"})");
    CHECK(md.rates.kappa == 1e-5);
    CHECK(md.rates.gamma_ef_a == Approx(std::numbers::sqrt2 * 1e-5));
    CHECK(md.lambda_grid.start == 0.02);
    CHECK(md.lambda_grid.stop == 0.25);
    CHECK(md.deltas == std::vector<double>{0.0, -0.4, 0.4});
    const auto cm = config(R"({"experiment": "coupling-map"})");
    CHECK(cm.lambda_grid.start == 0.01);
    CHECK(cm.lambda_grid.stop == 0.2);
    CHECK(cm.delta_grid.start == -0.9);
    CHECK(cm.delta_grid.stop == 0.9);
    const auto fl = config(R"({"experiment": "fidelity_vs_lambda"})");
    CHECK(fl.lambda_grid.count == 47);
    const auto fd = config(R"({"experiment": "fidelity_vs_delta"})");
    CHECK(fd.delta_grid.start == 0.05);
    CHECK(fd.delta_grid.count == 46);
}

TEST_CASE("config overrides and rate relation", "[config]") {
    const auto c = config(R"({"params": {"lambda": 0.15, "lambda_b": 0.12, "delta": -0.3},
                              "rates": {"kappa": 1e-4, "gamma_eg_b": 0.0}, "n_max": 8, "estimator": "bare",
                              "bracket": [1.8, 2.05], "initial": "|g,g,1>", "final": "e,e,0"})");
    CHECK(c.lambda_a == 0.15);
    CHECK(c.lambda_b == 0.12);
    CHECK(c.delta == -0.3);
    CHECK(c.rates.gamma_ef_a == Approx(std::numbers::sqrt2 * 1e-4));
    CHECK(c.rates.gamma_eg_b == 0.0);
    CHECK(c.n_max == 8);
    CHECK(c.estimator == Estimator::bare);
    CHECK(c.bracket_for(c.base_params()).first == 1.8);
    const auto roundtrip = ExperimentConfig::from_json(c.to_json());
    CHECK(roundtrip.to_json() == c.to_json());
}

TEST_CASE("config validation rejects bad input before any computation", "[config]") {
    for (const char* bad : {R"({"unknown": 1})", R"({"params": {"lambda_c": 0.1}})", R"({"rates": {"kappa": -1}})",
                            R"({"experiment": "nope"})", R"({"params": {"delta": 1.0}})", R"({"params": {"delta": -1.2}})",
                            R"({"grid": {"omega_c": {"start": 2.1, "stop": 1.9, "count": 10}}})",
                            R"({"grid": {"omega_c": {"start": 1.9, "stop": 2.1, "count": 0}}})",
                            R"({"grid": {"omega_c": {"start": 1.9, "stop": 2.1}}})", R"({"n_max": -1})",
                            R"({"estimator": "foo"})", R"({"bracket": [2.0, 1.0]})", R"({"levels": [6, 5]})",
                            R"({"levels": [5, 66]})", R"({"samples": 1})", R"({"initial": "x,g,1"})",
                            R"({"params": {"lambda": "big"}})", R"([1, 2])",
                            R"({"experiment": "fidelity_vs_delta", "grid": {"delta": {"start": 0.5, "stop": 1.5, "count": 3}}})",
                            R"({"experiment": "coupling_map", "grid": {"lambda": {"start": -0.1, "stop": 0.1, "count": 3}}})"})
        CHECK_THROWS_AS(config(bad), ConfigError);
}

TEST_CASE("grids hit the endpoints and a symmetric zero exactly", "[config]") {
    const auto v = GridSpec{-0.9, 0.9, 37}.values();
    CHECK(v.front() == -0.9);
    CHECK(v.back() == 0.9);
    CHECK(v[18] == 0.0);
    CHECK(GridSpec{0.3, 0.3, 1}.values() == std::vector<double>{0.3});
}

TEST_CASE("CSV rendering", "[table]") {
    ResultTable t({{"x"}, {"n"}, {"s"}});
    t.add_row({0.1, 3LL, std::string("a,b")});
    t.metadata()["k"] = 1;
    t.set_diagnostic("ok", true);
    const std::string csv = t.to_csv();
    CHECK(csv.rfind("# {", 0) == 0);
    const auto lines = data_lines(csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "x,n,s");
    CHECK(lines[1] == "1.0000000000000001e-01,3,\"a,b\"");
    CHECK(ResultTable::format_double(std::nan("")) == "nan");
    CHECK(ResultTable::format_double(-1.0 / 0.0) == "-inf");
    CHECK_THROWS_AS(t.add_row({1.0}), Error);
    CHECK(t.diagnostics_pass());
    t.set_diagnostic("bad", false);
    CHECK_FALSE(t.diagnostics_pass());
    CHECK(t.to_json()["rows"][0][0] == 0.1);
}

TEST_CASE("parallel map keeps index order and surfaces the first failure", "[parallel]") {
    const auto v = parallel_map(100, 4, [](std::size_t i) { return static_cast<int>(i * i); });
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
    try {
        (void)parallel_map(50, 3, [](std::size_t i) -> int {
            if (i == 7 || i == 31) throw std::runtime_error("fail " + std::to_string(i));
            return 0;
        });
        FAIL("expected exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "fail 7");
    }
    CHECK(resolve_thread_count(3) == 3);
    ::setenv("SIM_THREADS", "5", 1);
    CHECK(resolve_thread_count(0) == 5);
    ::unsetenv("SIM_THREADS");
    CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("crossing experiment", "[experiments]") {
    const auto t = run_experiment(config("{}"));
    REQUIRE(t.row_count() == 1);
    CHECK(ResultTable::as_double(t.at(0, "gap")) == Approx(7.58e-4).epsilon(0.05));
    CHECK(ResultTable::as_double(t.at(0, "two_omega_eff_closed_form")) == Approx(6.83e-4).margin(1e-6));
    CHECK(t.diagnostics_pass());
    const Json& m = t.metadata();
    CHECK(m["code_version"] == kCodeVersion);
    CHECK(m["truncation"]["relative_drift"].get<double>() < 1e-8);
    CHECK(m.contains("decisions"));
    CHECK(m["config"]["params"]["delta"] == 0.4);
}

TEST_CASE("spectrum sweep flags and refines the minimum", "[experiments]") {
    const auto t = run_spectrum_sweep(config(R"({"grid": {"omega_c": {"start": 1.9, "stop": 2.1, "count": 81}}})"));
    CHECK(t.row_count() == 82);
    const auto gap = t.numeric("gap"), is_min = t.numeric("is_min"), refined = t.numeric("refined"), w = t.numeric("omega_c");
    std::size_t k = 0;
    for (std::size_t i = 0; i < gap.size(); ++i) {
        if (gap[i] < gap[k]) k = i;
        if (i) CHECK(w[i] > w[i - 1]);
    }
    CHECK(is_min[k] == 1.0);
    CHECK(refined[k] == 1.0);
    CHECK(std::accumulate(is_min.begin(), is_min.end(), 0.0) == 1.0);
    CHECK(gap[k] == Approx(7.58e-4).epsilon(0.05));
    // single minimum: gap decreases toward it and increases after it
    for (std::size_t i = 1; i <= k; ++i) CHECK(gap[i] < gap[i - 1]);
    for (std::size_t i = k + 1; i < gap.size(); ++i) CHECK(gap[i] > gap[i - 1]);
    // discrete convexity on the uniform grid within 0.01 of the minimum; further out the bare lines carry their own dispersive curvature
    for (std::size_t i = 1; i + 1 < gap.size(); ++i)
        if (std::abs(w[i] - w[k]) < 0.01 && refined[i - 1] == 0.0 && refined[i] == 0.0 && refined[i + 1] == 0.0)
            CHECK(gap[i + 1] + gap[i - 1] - 2.0 * gap[i] >= -1e-12);
}

TEST_CASE("spectrum sweep without coupling closes the gap", "[experiments]") {
    const auto t = run_spectrum_sweep(config(R"({"params": {"lambda": 0.0}})"));
    const auto gap = t.numeric("gap");
    CHECK(*std::min_element(gap.begin(), gap.end()) < 1e-10);
}

TEST_CASE("fidelity versus anharmonicity", "[experiments]") {
    const auto t = run_fidelity_vs_delta(config(
        R"({"experiment": "fidelity_vs_delta", "inset": true, "grid": {"delta": {"start": 0.05, "stop": 0.95, "count": 4}}})"));
    REQUIRE(t.row_count() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::get<std::string>(t.at(i, "status")) == "ok");
        CHECK(ResultTable::as_double(t.at(i, "F_a")) > 0.984);
        CHECK(ResultTable::as_double(t.at(i, "F_b")) > 0.984);
        CHECK(std::abs(ResultTable::as_double(t.at(i, "F_a")) - ResultTable::as_double(t.at(i, "F_a_inset"))) < 0.01);
        CHECK(std::abs(ResultTable::as_double(t.at(i, "F_b")) - ResultTable::as_double(t.at(i, "F_b_inset"))) < 0.01);
        CHECK(ResultTable::as_double(t.at(i, "adjacent")) == 1.0);
    }
    CHECK(t.diagnostics_pass());
}

TEST_CASE("vanishing anharmonicity rows are flagged, not dropped", "[experiments]") {
    const auto t = run_fidelity_vs_delta(config(
        R"({"experiment": "fidelity_vs_delta", "params": {"lambda": 0.02}, "grid": {"delta": {"start": 0.0, "stop": 0.4, "count": 2}}})"));
    REQUIRE(t.row_count() == 2);
    CHECK(std::get<std::string>(t.at(0, "status")) != "ok");
    CHECK(std::get<std::string>(t.at(1, "status")) == "ok");
}

TEST_CASE("fidelity versus coupling", "[experiments]") {
    const auto t = run_fidelity_vs_lambda(config(
        R"({"experiment": "fidelity_vs_lambda", "grid": {"lambda": {"start": 0.1, "stop": 0.2, "count": 11}}})"));
    const auto fa = t.numeric("F_a"), fb = t.numeric("F_b"), l = t.numeric("lambda");
    for (std::size_t i = 1; i < fa.size(); ++i) {
        CHECK(fa[i] < fa[i - 1]);
        CHECK(fb[i] < fb[i - 1]);
    }
    for (std::size_t i = 0; i < l.size(); ++i)
        if (l[i] <= 0.17 + 1e-12) CHECK(std::min(fa[i], fb[i]) > 0.95);
    CHECK(fa.back() < fa.front());
}

TEST_CASE("closed-system time evolution table", "[experiments]") {
    const auto t = run_time_evolution(config(R"({"experiment": "time_evolution", "periods": 1, "samples": 2001})"));
    REQUIRE(t.row_count() == 2001);
    const auto p = t.numeric("P_AB_e");
    CHECK(*std::max_element(p.begin(), p.end()) >= 0.95);
    CHECK(t.diagnostics_pass());
    CHECK(t.metadata()["predicted_peak_time"].get<double>() == Approx(std::numbers::pi / t.metadata()["gap"].get<double>()));
    for (const char* col : {"t", "photon_number", "bare_photon_number", "P_A_e", "P_AB_e", "flux", "trace_error"})
        CHECK_NOTHROW(t.column_index(col));
}

TEST_CASE("truncated channel cutoff fails the population audit", "[experiments]") {
    const auto t = run_time_evolution(
        config(R"({"experiment": "time_evolution", "periods": 1, "samples": 101, "cutoff": 20, "rates": {"kappa": 1e-5}})"));
    CHECK_FALSE(t.diagnostics().at("cutoff_population"));
    CHECK_FALSE(t.diagnostics_pass());
}

TEST_CASE("bare-operator master equation mode runs", "[experiments]") {
    const auto t = run_time_evolution(config(
        R"({"experiment": "time_evolution", "periods": 1, "samples": 101, "master_equation": "bare_operators", "rates": {"kappa": 1e-5}})"));
    CHECK(t.row_count() == 101);
    CHECK(t.metadata()["master_equation"] == "bare_operators");
}

TEST_CASE("maximum difference sweep marks the maximum per curve", "[experiments]") {
    const auto t = run_max_difference_sweep(config(
        R"({"experiment": "max_difference_sweep", "deltas": [0.0, 0.4], "samples": 401, "grid": {"lambda": {"start": 0.02, "stop": 0.2, "count": 4}}})"));
    REQUIRE(t.row_count() == 8);
    const auto d = t.numeric("D"), flag = t.numeric("lambda_at_max"), delta = t.numeric("delta");
    for (double target : {0.0, 0.4}) {
        double best = -1e9, flagged = 0.0, count = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (delta[i] == target) {
                best = std::max(best, d[i]);
                count += flag[i];
            }
        for (std::size_t i = 0; i < d.size(); ++i)
            if (delta[i] == target && flag[i] == 1.0) flagged = d[i];
        CHECK(count == 1.0);
        CHECK(flagged == best);
    }
    CHECK(d[4] < 0.1); // delta 0.4, lambda 0.02
    CHECK(t.diagnostics_pass());
}

TEST_CASE("coupling map cells", "[experiments]") {
    const auto t = run_coupling_map(config(
        R"({"experiment": "coupling_map", "grid": {"lambda": {"start": 0.1, "stop": 0.2, "count": 2}, "delta": {"start": -0.4, "stop": 0.4, "count": 3}}})"));
    REQUIRE(t.row_count() == 6);
    const auto l = t.numeric("lambda"), d = t.numeric("delta"), num = t.numeric("two_omega_eff_numeric"),
               closed = t.numeric("two_omega_eff_closed_form");
    for (std::size_t i = 0; i < t.row_count(); ++i) {
        if (d[i] == 0.0) CHECK(closed[i] == 0.0);
        if (l[i] == 0.1 && d[i] == 0.4) {
            CHECK(num[i] == Approx(7.58e-4).epsilon(0.05));
            CHECK(closed[i] == Approx(6.83e-4).margin(1e-6));
        }
    }
    const auto k = std::max_element(num.begin(), num.end()) - num.begin();
    CHECK(l[static_cast<std::size_t>(k)] == 0.2);
    CHECK(std::abs(d[static_cast<std::size_t>(k)]) == 0.4);
}

TEST_CASE("paths table", "[experiments]") {
    const auto t = run_paths(config(R"({"experiment": "paths"})"));
    CHECK(t.row_count() == 6);
    const Json& m = t.metadata();
    CHECK(m["path_count"] == 6);
    CHECK(m["path_sum_coupling"].get<double>() == Approx(m["closed_form_coupling"].get<double>()).epsilon(1e-10));
    const auto c = t.numeric("contribution");
    CHECK(std::abs(std::accumulate(c.begin(), c.end(), 0.0)) == Approx(m["path_sum_coupling"].get<double>()));
    const auto five = run_paths(config(R"({"experiment": "paths", "order": 5})"));
    CHECK(five.row_count() > 6);
    CHECK_FALSE(five.metadata().contains("path_sum_coupling"));
}

TEST_CASE("truncation audit", "[experiments]") {
    const auto ok = convergence_audit(config("{}"));
    CHECK(ok.passed);
    CHECK(ok.max_drift < 1e-8);
    CHECK(ok.n_max_compare == 14);
    const auto coarse = convergence_audit(config(R"({"n_max": 2})"));
    CHECK_FALSE(coarse.passed);
    CHECK(coarse.max_drift > 1e-6);
    CHECK_FALSE(coarse.table().diagnostics_pass());
}

TEST_CASE("identical configs give byte-identical CSV at any thread count", "[experiments]") {
    const char* base = R"({"experiment": "fidelity_vs_lambda", "grid": {"lambda": {"start": 0.05, "stop": 0.2, "count": 6}}, "threads": %d})";
    char one[512], four[512];
    std::snprintf(one, sizeof one, base, 1);
    std::snprintf(four, sizeof four, base, 4);
    const std::string a = run_experiment(config(one)).to_csv();
    const std::string b = run_experiment(config(one)).to_csv();
    const std::string c = run_experiment(config(four)).to_csv();
    CHECK(a == b);
    CHECK(a == c);
}
