// sim <experiment> [--config file] [--out csv] [--json file] [--n-max N] [--estimator dressed|bare]
//     [--threads N] [--params k=v,...] [--rates k=v,...]
//
// Exit status: 0 when every diagnostic passes, 1 when one fails, 2 on any error.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "usqed/experiments.hpp"

namespace {

using usqed::Json;

Json load_config(const std::string& path) {
    if (path.empty()) return Json::object();
    std::ifstream in(path);
    if (!in) throw usqed::ConfigError("cannot open config '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw usqed::ConfigError("config '" + path + "': " + e.what());
    }
}

// "k=v,k=v" into doc[section]
void merge_pairs(Json& doc, const std::string& section, const std::string& pairs) {
    if (pairs.empty()) return;
    Json& target = doc[section];
    if (target.is_null()) target = Json::object();
    std::stringstream ss(pairs);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw usqed::ConfigError("--" + section + ": expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            target[key] = v;
        } catch (const std::exception&) {
            throw usqed::ConfigError("--" + section + ": '" + value + "' is not a number");
        }
    }
}

void write_outputs(const usqed::ResultTable& t, const std::string& out, const std::string& json_path) {
    if (out.empty() || out == "-") {
        t.write_csv(std::cout);
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw usqed::Error("cannot write '" + out + "'");
        t.write_csv(f);
    }
    if (!json_path.empty()) {
        std::ofstream f(json_path, std::ios::binary);
        if (!f) throw usqed::Error("cannot write '" + json_path + "'");
        f << t.to_json().dump(2) << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ultrastrong-coupling qutrit-qubit-cavity simulations"};
    app.require_subcommand(1);

    std::string config_path, out_path, json_path, estimator, params, rates;
    int n_max = -1, threads = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_path, "CSV output path (default: config output_path, else stdout)");
        sub->add_option("--json", json_path, "also write the table as JSON");
        sub->add_option("--n-max", n_max, "Fock truncation")->check(CLI::NonNegativeNumber);
        sub->add_option("--estimator", estimator, "population estimator")->check(CLI::IsMember({"dressed", "bare"}));
        sub->add_option("--threads", threads, "worker threads (0: SIM_THREADS or all cores)")->check(CLI::NonNegativeNumber);
        sub->add_option("--params", params, "parameter overrides, e.g. lambda=0.1,delta=0.4");
        sub->add_option("--rates", rates, "rate overrides, e.g. kappa=1e-5");
    };

    std::vector<std::pair<CLI::App*, std::optional<usqed::ExperimentKind>>> subs;
    for (auto kind : usqed::kAllExperiments) {
        std::string name = usqed::experiment_name(kind);
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        add_common(sub);
        subs.push_back({sub, kind});
        std::replace(name.begin(), name.end(), '_', '-');
        sub->alias(name);
    }
    auto* run = app.add_subcommand("run", "run the experiment named in the config");
    add_common(run);
    auto* audit = app.add_subcommand("audit", "truncation audit of the config's audit_experiment");
    add_common(audit);

    CLI11_PARSE(app, argc, argv);

    try {
        Json doc = load_config(config_path);
        if (n_max >= 0) doc["n_max"] = n_max;
        if (threads >= 0) doc["threads"] = threads;
        if (!estimator.empty()) doc["estimator"] = estimator;
        merge_pairs(doc, "params", params);
        merge_pairs(doc, "rates", rates);

        std::optional<usqed::ExperimentKind> forced;
        for (const auto& [sub, kind] : subs)
            if (sub->parsed()) forced = kind;

        usqed::ResultTable table;
        std::string default_out;
        if (audit->parsed()) {
            // experiment-specific defaults follow the audited experiment
            const auto audited = doc.contains("audit_experiment")
                                     ? usqed::parse_experiment(doc["audit_experiment"].get<std::string>())
                                     : usqed::ExperimentKind::crossing;
            const auto cfg = usqed::ExperimentConfig::from_json(doc, audited);
            const auto report = usqed::convergence_audit(cfg);
            table = report.table();
            table.metadata()["config"] = cfg.to_json();
            if (!report.passed)
                std::cerr << "audit failed: drift " << report.max_drift << " in column '" << report.worst_column
                          << "' exceeds " << report.threshold << '\n';
            default_out = cfg.output_path;
        } else {
            const auto cfg = usqed::ExperimentConfig::from_json(doc, forced);
            table = usqed::run_experiment(cfg);
            default_out = cfg.output_path;
        }
        write_outputs(table, out_path.empty() ? default_out : out_path, json_path);
        if (!table.diagnostics_pass()) {
            for (const auto& [name, ok] : table.diagnostics())
                if (!ok) std::cerr << "diagnostic failed: " << name << '\n';
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
