// fourphoton CLI: simulate coincidence scans, sample synthetic counts, fit
// the published curve models, search the HWP1 balance point, and run the
// built-in verification report.
//
// Exit codes: 0 success, 1 input or config error, 2 numerical failure.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fourphoton/fit.hpp"
#include "fourphoton/io.hpp"
#include "fourphoton/scan.hpp"
#include "fourphoton/selfcheck.hpp"

namespace {

using namespace fourphoton;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNumericalFailure = 2;

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    const ScanConfig cfg = parse_scan_config(load_json(config_path));
    const ScanTable table = run_scan(cfg);
    for (double p : table.probability)
        if (!std::isfinite(p)) {
            std::cerr << "simulate: non-finite probability produced\n";
            return kExitNumericalFailure;
        }
    save_scan_csv(table, out_path);
    std::cout << "wrote " << out_path << " (" << table.rows() << " rows, scenario "
              << table.scenario << ")\n";
    return kExitOk;
}

int cmd_sample(const std::string& table_path, double counts, std::uint64_t seed,
               const std::string& out_path) {
    const ScanTable table = load_scan_csv(table_path);
    const ScanTable sampled = poissonize(table, counts, seed);
    save_scan_csv(sampled, out_path);
    std::cout << "wrote " << out_path << " (" << sampled.rows() << " rows, seed " << seed
              << ")\n";
    return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& model_name, bool weighted,
            bool free_phase, const std::string& out_path) {
    const ScanTable table = load_scan_csv(data_path);
    FitOptions options;
    options.weighted = weighted;
    options.free_phase = free_phase;
    const FitReport report = fit(table, fit_model_from_name(model_name), options);
    const std::string text = fit_report_to_json(report).dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) save_text(text, out_path);
    if (!report.converged) {
        std::cerr << "fit: did not converge after " << report.iterations << " iterations\n";
        return kExitNumericalFailure;
    }
    return kExitOk;
}

int cmd_balance(const std::string& config_path, const std::string& out_path) {
    const BalanceConfig cfg = parse_balance_config(load_json(config_path));
    const BalanceResult result =
        balance_theta1(source_schmidt_spec(cfg.source), cfg.tolerance);
    const std::string text = balance_result_to_json(result).dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) save_text(text, out_path);
    if (!result.balanced) {
        std::cerr << "balance: |V2| = " << std::abs(result.v2) << " above tolerance "
                  << cfg.tolerance << "\n";
        return kExitNumericalFailure;
    }
    return kExitOk;
}

int cmd_report(const std::string& out_path) {
    const auto results = run_selfchecks();
    const std::string text = render_selfcheck_report(results);
    std::cout << text;
    if (!out_path.empty()) save_text(text, out_path);
    return all_pass(results) ? kExitOk : kExitNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"four-photon interference simulator and fringe-fitting toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, model_name;
    double counts = 0.0;
    std::uint64_t seed = 0;
    bool weighted = false, free_phase = false;

    CLI::App* simulate = app.add_subcommand("simulate", "run a scan config and write CSV");
    simulate->add_option("--config", config_path, "scan config JSON")->required();
    simulate->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* sample = app.add_subcommand("sample", "add Poisson counts to a scan table");
    sample->add_option("table", data_path, "input scan CSV")->required();
    sample->add_option("--counts", counts, "mean counts at the curve maximum")
        ->required()
        ->check(CLI::NonNegativeNumber);
    sample->add_option("--seed", seed, "RNG seed (default 0)");
    sample->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* fit_cmd = app.add_subcommand("fit", "least-squares fit of a scan table");
    fit_cmd->add_option("data", data_path, "input scan CSV")->required();
    fit_cmd->add_option("--model", model_name, "dip|theta|fringe")->required();
    fit_cmd->add_flag("--weighted", weighted, "Poisson-weighted least squares");
    fit_cmd->add_flag("--free-phase", free_phase, "fringe model with a free phase offset");
    fit_cmd->add_option("--out", out_path, "write the fit report JSON here");

    CLI::App* balance = app.add_subcommand("balance", "search the HWP1 angle nulling V2");
    balance->add_option("--config", config_path, "balance config JSON")->required();
    balance->add_option("--out", out_path, "write the balance report JSON here");

    CLI::App* report = app.add_subcommand("report", "run the built-in verification suite");
    report->add_option("--out", out_path, "write the report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, out_path);
        if (sample->parsed()) return cmd_sample(data_path, counts, seed, out_path);
        if (fit_cmd->parsed())
            return cmd_fit(data_path, model_name, weighted, free_phase, out_path);
        if (balance->parsed()) return cmd_balance(config_path, out_path);
        if (report->parsed()) return cmd_report(out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
