// cannibal_lv: fit, compare and forecast competing-product diffusion models.
//
// Exit codes: 0 success, 1 user error (bad arguments or unreadable/invalid
// input), 2 numeric failure (a fit, integration or forecast stage failed).

#include <array>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cannlv/estimation.hpp"
#include "cannlv/models.hpp"
#include "cannlv/pipeline.hpp"
#include "cannlv/series.hpp"

using namespace cannlv;

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kNumericError = 2;

struct CommonOpts {
    std::string input;
    std::string config_path;
    std::string output_dir = ".";
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::string> fit_mode;
    bool unconstrained = false;
    bool smooth = false;
    int smooth_window = 5;
    std::vector<std::string> candidates;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_input = true) {
    auto* in = cmd->add_option("input", o.input, "Input CSV (product,quarter,units)");
    if (needs_input) in->required();
    cmd->add_option("-c,--config", o.config_path, "JSON config file");
    cmd->add_option("-o,--output-dir", o.output_dir, "Directory for report/params/series files");
    cmd->add_option("--seed", o.seed_flag, "RNG seed (overrides CANNIBAL_LV_SEED and config)");
    cmd->add_option("--fit-mode", o.fit_mode, "instantaneous|cumulative")
        ->check(CLI::IsMember({"instantaneous", "cumulative"}));
    cmd->add_flag("--unconstrained", o.unconstrained, "Lift box constraints on alphas/p");
    cmd->add_flag("--smooth", o.smooth, "Apply the moving-average smoother before fitting");
    cmd->add_option("--smooth-window", o.smooth_window, "Odd smoother window length");
    cmd->add_option("--candidates", o.candidates,
                    "Model ladder, e.g. FullLVch LVac IndependentBass");
}

RunConfig build_config(const CommonOpts& o, CLI::App* cmd) {
    RunConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in.good()) throw ParseError("cannot read config file: " + o.config_path);
        nlohmann::json j = nlohmann::json::parse(in);
        cfg = RunConfig::from_json(j);
    }
    if (!o.input.empty()) cfg.input_path = o.input;
    if (cmd->count("--output-dir")) cfg.output_dir = o.output_dir;
    if (o.fit_mode)
        cfg.fit_mode = *o.fit_mode == "cumulative" ? FitMode::Cumulative : FitMode::Instantaneous;
    if (o.unconstrained) cfg.unconstrained = true;
    if (o.smooth) cfg.smooth_before_fit = true;
    if (cmd->count("--smooth-window")) cfg.smooth_window = o.smooth_window;
    if (!o.candidates.empty()) {
        nlohmann::json j;
        j["candidates"] = o.candidates;
        j["input"] = cfg.input_path;  // reuse the validating parser
        auto parsed = RunConfig::from_json(j);
        cfg.candidates = parsed.candidates;
    }
    cfg.seed = resolve_seed(o.seed_flag, cfg);
    return cfg;
}

int run_and_report(const RunConfig& cfg, bool print_ladder) {
    auto result = run_pipeline(cfg);
    if (!result.ok) {
        std::cerr << "error: stage '" << result.failed_stage << "' failed";
        if (result.report.contains("status") && result.report["status"].contains("error"))
            std::cerr << ": " << result.report["status"]["error"].get<std::string>();
        std::cerr << "\n";
        return result.failed_stage == "load" ? kUserError : kNumericError;
    }
    if (print_ladder && result.report.contains("ladder")) {
        const auto& ladder = result.report["ladder"];
        std::cout << "model comparison (reference: "
                  << ladder["entries"][0]["model"].get<std::string>() << ")\n";
        for (const auto& entry : ladder["entries"]) {
            std::cout << "  " << entry["model"].get<std::string>();
            if (entry.contains("failed")) {
                std::cout << "  FAILED\n";
                continue;
            }
            std::cout << "  R2=" << entry["fit"]["r2"].get<double>();
            if (entry.contains("vs_full"))
                std::cout << "  F=" << entry["vs_full"]["f_ratio"].get<double>() << "  "
                          << entry["vs_full"]["verdict"].get<std::string>();
            std::cout << "\n";
        }
        std::cout << "selected: " << ladder["selected"].get<std::string>() << "\n";
    }
    std::cout << "wrote " << result.report_path << "\n"
              << "wrote " << result.params_path << "\n"
              << "wrote " << result.series_path << "\n";
    return kOk;
}

int cmd_simulate(const std::string& out_path, double m, double p, double q, int c2, double a1,
                 double b1, double m1, double p2, double a2, double m2, int horizon,
                 double noise_sd, const std::vector<double>& seasonal,
                 std::optional<std::uint64_t> seed_flag) {
    LVacParams params;
    params.standalone = {m, p, q};
    params.c2 = c2;
    params.a1 = a1;
    params.b1 = b1;
    params.m1 = m1;
    params.p2 = p2;
    params.a2 = a2;
    params.m2 = m2;
    params.validate();
    std::array<double, 4> amps = {1, 1, 1, 1};
    if (!seasonal.empty()) {
        if (seasonal.size() != 4) throw ParseError("--seasonal needs exactly 4 factors");
        std::copy(seasonal.begin(), seasonal.end(), amps.begin());
    }
    RunConfig cfg;
    const std::uint64_t seed = resolve_seed(seed_flag, cfg);
    auto [s1, s2] = simulate(params.to_lvch(), horizon, amps, noise_sd, seed);
    write_csv(out_path, {s1, s2});
    std::cout << "wrote " << out_path << "\n";
    return kOk;
}

int cmd_smooth(const std::string& input, const std::string& output, int window) {
    auto series = load_csv(input);
    for (auto& s : series) s = moving_average(s, window);
    write_csv(output, series);
    std::cout << "wrote " << output << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Competing-product diffusion models: fitting, selection and forecasting"};
    app.require_subcommand(1);

    CommonOpts fit_o, cmp_o, fc_o, nd_o;
    auto* fit = app.add_subcommand("fit", "Fit the model ladder without forecasting");
    add_common(fit, fit_o);
    auto* cmp = app.add_subcommand("compare", "Fit and print the nested-model comparison table");
    add_common(cmp, cmp_o);
    auto* fc = app.add_subcommand("forecast", "Fit, select and forecast");
    add_common(fc, fc_o);
    int horizon = 8, holdout = 0;
    fc->add_option("-k,--horizon", horizon, "Forecast quarters");
    fc->add_option("--holdout", holdout, "Trailing quarters held out for validation");
    auto* nd = app.add_subcommand("nondim", "Fit and print the non-dimensional analysis");
    add_common(nd, nd_o);

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic two-product dataset");
    std::string sim_out = "simulated.csv";
    double m = 800, p = 0.01, q = 0.35, a1 = 0.25, b1 = -0.20, m1 = 1000, p2 = 0.035, a2 = 0.35,
           m2 = 400, noise_sd = 0;
    int c2 = 8, sim_horizon = 40;
    std::vector<double> seasonal;
    std::optional<std::uint64_t> sim_seed;
    sim->add_option("-o,--output", sim_out, "Output CSV path");
    sim->add_option("--m", m, "Stand-alone market potential");
    sim->add_option("--p", p, "Stand-alone innovation coefficient");
    sim->add_option("--q", q, "Stand-alone imitation coefficient");
    sim->add_option("--c2", c2, "Entry quarter of product 2");
    sim->add_option("--a1", a1, "Product-1 within word-of-mouth");
    sim->add_option("--b1", b1, "Product-1 cross word-of-mouth");
    sim->add_option("--m1", m1, "Product-1 competition potential");
    sim->add_option("--p2", p2, "Product-2 innovation coefficient");
    sim->add_option("--a2", a2, "Product-2 within word-of-mouth");
    sim->add_option("--m2", m2, "Product-2 competition potential");
    sim->add_option("-k,--horizon", sim_horizon, "Quarters to simulate");
    sim->add_option("--noise-sd", noise_sd, "Additive Gaussian noise sd, millions");
    sim->add_option("--seasonal", seasonal, "Four calendar-quarter factors");
    sim->add_option("--seed", sim_seed, "RNG seed");

    auto* sm = app.add_subcommand("smooth", "Moving-average smooth a dataset");
    std::string sm_in, sm_out = "smoothed.csv";
    int sm_window = 5;
    sm->add_option("input", sm_in, "Input CSV")->required();
    sm->add_option("-o,--output", sm_out, "Output CSV path");
    sm->add_option("-w,--window", sm_window, "Odd window length");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_out, m, p, q, c2, a1, b1, m1, p2, a2, m2, sim_horizon,
                                noise_sd, seasonal, sim_seed);
        if (sm->parsed()) return cmd_smooth(sm_in, sm_out, sm_window);

        CommonOpts* opts = nullptr;
        CLI::App* cmd = nullptr;
        if (fit->parsed()) {
            opts = &fit_o;
            cmd = fit;
        } else if (cmp->parsed()) {
            opts = &cmp_o;
            cmd = cmp;
        } else if (fc->parsed()) {
            opts = &fc_o;
            cmd = fc;
        } else {
            opts = &nd_o;
            cmd = nd;
        }
        RunConfig cfg = build_config(*opts, cmd);
        if (fc->parsed()) {
            if (cmd->count("--horizon") || cfg.horizon <= 0) cfg.horizon = horizon;
            if (cmd->count("--holdout")) cfg.holdout = holdout;
        } else {
            cfg.horizon = 0;  // fit/compare/nondim skip forecasting
        }
        const int rc = run_and_report(cfg, cmp->parsed());
        if (rc == kOk && nd->parsed()) {
            std::ifstream in(cfg.output_dir + "/report.json");
            auto report = nlohmann::json::parse(in);
            if (report.contains("nondim"))
                std::cout << report["nondim"].dump(2) << "\n";
            else
                std::cout << "no non-dimensional block: selected model is not the "
                             "asymmetric-competition reduction\n";
        }
        return rc;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUserError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return kUserError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUserError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericError;
    }
}
