#include "cannlv/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cannlv {

namespace {

using nlohmann::ordered_json;

ModelSpec spec_from_name(const std::string& name) {
    if (name == "FullLVch") return {ReductionCase::FullLVch, false};
    if (name == "UCRCD") return {ReductionCase::UCRCD, false};
    if (name == "IndependentBass") return {ReductionCase::IndependentBass, false};
    if (name == "DirectCannibalisation") return {ReductionCase::DirectCannibalisation, false};
    if (name == "InverseCannibalisation") return {ReductionCase::InverseCannibalisation, false};
    if (name == "LVac") return {ReductionCase::InverseCannibalisation, true};
    throw std::invalid_argument("unknown model candidate '" + name + "'");
}

std::vector<ModelSpec> default_candidates() {
    return {{ReductionCase::FullLVch, false},
            {ReductionCase::InverseCannibalisation, true},
            {ReductionCase::IndependentBass, false}};
}

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

double fit_param(const FitResult& fit, const std::string& name, double fallback = 0) {
    for (const auto& p : fit.params)
        if (p.name == name) return p.value;
    return fallback;
}

ordered_json sarmax_to_json(const SarmaxFit& f) {
    ordered_json j;
    j["orders"] = {{"ar", f.spec.ar}, {"ma", f.spec.ma}, {"sar", f.spec.sar},
                   {"sma", f.spec.sma}, {"season", f.spec.season}};
    j["c_exog"] = f.c_exog;
    j["phi"] = f.phi;
    j["theta"] = f.theta;
    j["sphi"] = f.sphi;
    j["stheta"] = f.stheta;
    j["sigma2"] = f.sigma2;
    j["stationary"] = f.stationary;
    j["invertible"] = f.invertible;
    j["note"] = "prediction limits assume normal innovations (approximate)";
    return j;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("input")) c.input_path = j.at("input").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("fit_mode"))
        c.fit_mode = j.at("fit_mode").get<std::string>() == "cumulative" ? FitMode::Cumulative
                                                                         : FitMode::Instantaneous;
    if (j.contains("unconstrained")) c.unconstrained = j.at("unconstrained").get<bool>();
    if (j.contains("smooth_before_fit")) c.smooth_before_fit = j.at("smooth_before_fit").get<bool>();
    if (j.contains("smooth_window")) c.smooth_window = j.at("smooth_window").get<int>();
    if (j.contains("horizon")) c.horizon = j.at("horizon").get<int>();
    if (j.contains("holdout")) c.holdout = j.at("holdout").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sarmax")) {
        const auto& s = j.at("sarmax");
        SarmaxSpec spec;
        spec.ar = s.value("ar", 0);
        spec.ma = s.value("ma", 0);
        spec.sar = s.value("sar", 0);
        spec.sma = s.value("sma", 0);
        spec.season = s.value("season", 4);
        c.sarmax = spec;
    }
    if (j.contains("candidates"))
        for (const auto& name : j.at("candidates"))
            c.candidates.push_back(spec_from_name(name.get<std::string>()));
    if (c.horizon < 0) throw std::invalid_argument("config: horizon must be >= 0");
    return c;
}

nlohmann::ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["input"] = input_path;
    j["output_dir"] = output_dir;
    j["fit_mode"] = to_string(fit_mode);
    j["unconstrained"] = unconstrained;
    j["smooth_before_fit"] = smooth_before_fit;
    j["horizon"] = horizon;
    j["holdout"] = holdout;
    j["seed"] = seed;
    ordered_json cand = ordered_json::array();
    for (const auto& c : candidates) cand.push_back(c.name());
    j["candidates"] = cand;
    return j;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed, const RunConfig& config) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("CANNIBAL_LV_SEED")) return std::strtoull(env, nullptr, 10);
    return config.seed;
}

ordered_json fit_to_json(const FitResult& fit) {
    ordered_json j;
    j["model"] = fit.spec.name();
    j["fit_mode"] = to_string(fit.fit_mode);
    j["converged"] = fit.converged;
    j["n_obs"] = fit.n_obs;
    j["n_params"] = fit.n_params;
    j["r2"] = fit.r2;
    j["dw"] = fit.dw;
    j["sse"] = fit.sse;
    ordered_json params = ordered_json::array();
    for (const auto& p : fit.params) {
        ordered_json e;
        e["name"] = p.name;
        e["estimate"] = p.value;
        e["lower95"] = p.lower95;
        e["upper95"] = p.upper95;
        e["unstable"] = p.unstable;
        params.push_back(e);
    }
    j["params"] = params;
    return j;
}

ordered_json comparison_to_json(const ModelComparison& cmp) {
    ordered_json j;
    j["r2_reduced"] = cmp.r2_reduced;
    j["r2_extended"] = cmp.r2_extended;
    j["r2_partial"] = cmp.r2_partial;
    j["f_ratio"] = cmp.f_ratio;
    j["n"] = cmp.n;
    j["v"] = cmp.v;
    j["u"] = cmp.u;
    j["verdict"] =
        cmp.verdict == Verdict::ExtendedSignificant ? "ExtendedSignificant" : "ReducedAccepted";
    return j;
}

PipelineResult run_pipeline(const RunConfig& config) {
    PipelineResult result;
    std::vector<SalesSeries> series;
    try {
        series = load_csv(config.input_path);
        if (series.size() < 2)
            throw ParseError("pipeline needs two products, found " +
                             std::to_string(series.size()));
    } catch (const std::exception& e) {
        result.failed_stage = "load";
        result.report["status"] = {{"ok", false}, {"failed_stage", "load"}, {"error", e.what()}};
        return result;
    }
    return run_pipeline(config, series[0], series[1]);
}

PipelineResult run_pipeline(const RunConfig& config, const SalesSeries& s1_in,
                            const SalesSeries& s2_in) {
    namespace fs = std::filesystem;
    PipelineResult result;
    ordered_json& report = result.report;
    report["metadata"] = {{"tool", "cannibal_lv"},
                          {"version", "0.1.0"},
                          {"seed", config.seed},
                          {"timestamp", iso_now()}};
    report["config"] = config.to_json();

    SalesSeries s1 = s1_in, s2 = s2_in;
    std::string stage = "prepare";
    try {
        s1.validate();
        s2.validate();
        if (config.smooth_before_fit) {
            s1 = moving_average(s1, config.smooth_window);
            s2 = moving_average(s2, config.smooth_window);
            s1.product_id = s1_in.product_id;
            s2.product_id = s2_in.product_id;
        }
        const int c2 = s2.quarters.front().index() - s1.quarters.front().index();
        report["data"] = {{"product1", s1.product_id},
                          {"product2", s2.product_id},
                          {"launch", s1.quarters.front().str()},
                          {"entry2", s2.quarters.front().str()},
                          {"c2", c2},
                          {"n1", s1.size()},
                          {"n2", s2.size()}};

        // --- stand-alone phase ---
        stage = "standalone";
        std::vector<double> t_sa, w_sa;
        for (int t = 1; t <= c2 && t <= static_cast<int>(s1.size()); ++t) {
            t_sa.push_back(t);
            w_sa.push_back(s1.cumulative[static_cast<std::size_t>(t - 1)]);
        }
        FitOptions options;
        options.unconstrained = config.unconstrained;
        FitResult sa_fit = fit_bass(t_sa, w_sa, FitMode::Cumulative, options);
        BassParams standalone{fit_param(sa_fit, "m"), fit_param(sa_fit, "p"),
                              fit_param(sa_fit, "q")};
        {
            ordered_json j = fit_to_json(sa_fit);
            j["model"] = "StandaloneBass";
            report["standalone"] = j;
        }

        // --- selection ladder ---
        stage = "ladder";
        CompetitionData data = CompetitionData::from_series(s1, s2, config.fit_mode);
        auto candidates = config.candidates.empty() ? default_candidates() : config.candidates;
        SelectionReport ladder = selection_ladder(data, standalone, candidates, options);
        ordered_json entries = ordered_json::array();
        for (const auto& entry : ladder.entries) {
            ordered_json j;
            j["model"] = entry.spec.name();
            if (entry.failed) {
                j["failed"] = true;
                j["error"] = entry.error;
            } else {
                j["fit"] = fit_to_json(entry.fit);
                if (entry.vs_full) j["vs_full"] = comparison_to_json(*entry.vs_full);
            }
            entries.push_back(j);
        }
        if (ladder.selected < 0) throw std::runtime_error("every candidate fit failed");
        const LadderEntry& sel = ladder.entries[static_cast<std::size_t>(ladder.selected)];
        report["ladder"] = {{"entries", entries}, {"selected", sel.spec.name()}};

        LVchParams fitted = sel.spec.unpack(sel.fit.beta(), standalone, c2);

        // --- fitted in-sample trajectory ---
        const int T = static_cast<int>(s1.size());
        Trajectory fitted_traj = integrate(fitted, T + config.horizon);

        // --- forecast ---
        stage = "forecast";
        std::optional<ForecastBand> band1, band2;
        if (config.horizon > 0) {
            const int K = config.horizon;
            const int Tc = T - c2;
            const bool lvac_path = sel.spec.reduction == ReductionCase::InverseCannibalisation;

            MeanTrajectory f1, f2;
            if (lvac_path) {
                LVacParams lp;
                lp.standalone = standalone;
                lp.c2 = c2;
                lp.a1 = fitted.a1;
                lp.b1 = fitted.b1;
                lp.m1 = fitted.m1;
                lp.p2 = fitted.p2;
                lp.a2 = fitted.a2;
                lp.m2 = fitted.m2;
                f2 = mean_forecast_z2(lp, Tc, K);
                std::vector<double> z1_fit;
                for (int t = c2 + 1; t <= T; ++t)
                    z1_fit.push_back(fitted_traj.z1[static_cast<std::size_t>(t)]);
                f1 = mean_forecast_z1(lp, z1_fit, f2, Tc, K);
            } else {
                f1.T = f2.T = Tc;
                f1.K = f2.K = K;
                f1.used_integration = f2.used_integration = true;
                for (int t = c2 + 1; t <= T + K; ++t) {
                    f1.values.push_back(fitted_traj.z1[static_cast<std::size_t>(t)]);
                    f2.values.push_back(fitted_traj.z2[static_cast<std::size_t>(t)]);
                }
            }

            std::vector<double> w1, w2;
            for (int t = c2 + 1; t <= T; ++t)
                w1.push_back(s1.cumulative[static_cast<std::size_t>(t - 1)]);
            for (std::size_t i = 0; i < s2.size(); ++i) w2.push_back(s2.cumulative[i]);

            SarmaxSpec spec1 = config.sarmax ? *config.sarmax
                                             : select_sarmax_spec(w1, f1.values);
            SarmaxSpec spec2 = config.sarmax ? *config.sarmax
                                             : select_sarmax_spec(w2, f2.values);
            SarmaxFit sfit1 = fit_sarmax(w1, f1.values, spec1);
            SarmaxFit sfit2 = fit_sarmax(w2, f2.values, spec2);
            band1 = sarmax_forecast(sfit1, w1, f1.values, K);
            band2 = sarmax_forecast(sfit2, w2, f2.values, K);

            auto band_json = [&](const ForecastBand& b, int origin_index) {
                ordered_json j;
                ordered_json qs = ordered_json::array();
                for (std::size_t h = 0; h < b.point.size(); ++h)
                    qs.push_back(Quarter::from_index(origin_index + static_cast<int>(h)).str());
                j["quarters"] = qs;
                j["point"] = b.point;
                j["lower95"] = b.lower95;
                j["upper95"] = b.upper95;
                j["sigma2"] = b.sigma2;
                return j;
            };
            const int next1 = s1.quarters.back().index() + 1;
            report["forecast"] = {
                {"horizon", K},
                {"product1", band_json(*band1, next1)},
                {"product2", band_json(*band2, next1)},
                {"sarmax1", sarmax_to_json(sfit1)},
                {"sarmax2", sarmax_to_json(sfit2)},
            };
        }

        // --- non-dimensional analysis ---
        stage = "nondim";
        if (sel.spec.reduction == ReductionCase::InverseCannibalisation && fitted.b1 != 0) {
            LVacParams lp;
            lp.standalone = standalone;
            lp.c2 = c2;
            lp.a1 = fitted.a1;
            lp.b1 = fitted.b1;
            lp.m1 = fitted.m1;
            lp.p2 = fitted.p2;
            lp.a2 = fitted.a2;
            lp.m2 = fitted.m2;
            NonDimParams nd = to_nondim(lp);
            PeakReport peak = peak_delay_report(lp, PeakFormula::Literal);
            ordered_json j;
            j["v"] = nd.v;
            j["s"] = nd.s;
            j["r"] = nd.r;
            j["t0"] = nd.t0;
            j["z10"] = nd.z10;
            j["z20"] = nd.z20;
            j["peak"] = {
                {"x1_hat", peak.x1_hat},
                {"z1_hat", peak.z1_hat},
                {"f2_at_peak", peak.f2_at_peak},
                {"interval_literal", {peak.interval_literal.first, peak.interval_literal.second}},
                {"interval_paper_numeric",
                 {peak_fraction(nd.v, nd.s, 0.0, PeakFormula::PaperNumeric),
                  peak_fraction(nd.v, nd.s, 1.0, PeakFormula::PaperNumeric)}},
                {"formula_discrepancy", peak.formula_discrepancy},
                {"delay_vs_monopoly", peak.delay_vs_monopoly},
                {"simulated_peak_fraction", peak.simulated_peak_fraction},
                {"simulated_peak_time", peak.simulated_peak_time},
            };
            report["nondim"] = j;
        }

        // --- outputs ---
        stage = "write";
        fs::create_directories(config.output_dir);
        result.report_path = (fs::path(config.output_dir) / "report.json").string();
        result.params_path = (fs::path(config.output_dir) / "params.csv").string();
        result.series_path = (fs::path(config.output_dir) / "series.csv").string();

        {
            std::ofstream out(result.params_path);
            out << "model,param,estimate,lower95,upper95,unstable\n";
            char buf[256];
            auto dump = [&](const std::string& model, const FitResult& fit) {
                for (const auto& p : fit.params) {
                    std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g,%.10g,%d\n", model.c_str(),
                                  p.name.c_str(), p.value, p.lower95, p.upper95,
                                  p.unstable ? 1 : 0);
                    out << buf;
                }
            };
            dump("StandaloneBass", sa_fit);
            for (const auto& entry : ladder.entries)
                if (!entry.failed) dump(entry.spec.name(), entry.fit);
        }

        {
            std::ofstream out(result.series_path);
            out << "product,quarter,observed_units,observed_cumulative,fitted_cumulative,"
                   "forecast,lower95,upper95\n";
            char buf[512];
            auto row = [&](const std::string& product, const Quarter& q, double obs_u,
                           double obs_c, double fit_c, const std::optional<double>& fc,
                           const std::optional<double>& lo, const std::optional<double>& hi) {
                auto cell = [](const std::optional<double>& x) {
                    if (!x) return std::string();
                    char b[64];
                    std::snprintf(b, sizeof(b), "%.10g", *x);
                    return std::string(b);
                };
                std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g,%.10g,%s,%s,%s\n",
                              product.c_str(), q.str().c_str(), obs_u, obs_c, fit_c,
                              cell(fc).c_str(), cell(lo).c_str(), cell(hi).c_str());
                out << buf;
            };
            for (std::size_t i = 0; i < s1.size(); ++i)
                row(s1.product_id, s1.quarters[i], s1.units[i], s1.cumulative[i],
                    fitted_traj.z1[i + 1], std::nullopt, std::nullopt, std::nullopt);
            for (std::size_t i = 0; i < s2.size(); ++i)
                row(s2.product_id, s2.quarters[i], s2.units[i], s2.cumulative[i],
                    fitted_traj.z2[i + 1 + static_cast<std::size_t>(c2)], std::nullopt,
                    std::nullopt, std::nullopt);
            if (band1 && band2) {
                const int next1 = s1.quarters.back().index() + 1;
                for (std::size_t h = 0; h < band1->point.size(); ++h) {
                    const Quarter q = Quarter::from_index(next1 + static_cast<int>(h));
                    const std::size_t tz = s1.size() + 1 + h;
                    row(s1.product_id, q, 0, 0, fitted_traj.z1[tz], band1->point[h],
                        band1->lower95[h], band1->upper95[h]);
                    row(s2.product_id, q, 0, 0, fitted_traj.z2[tz], band2->point[h],
                        band2->lower95[h], band2->upper95[h]);
                }
            }
        }

        report["status"] = {{"ok", true}, {"failed_stage", ""}};
        result.ok = true;
        std::ofstream out(result.report_path);
        out << report.dump(2) << '\n';
    } catch (const std::exception& e) {
        report["status"] = {{"ok", false}, {"failed_stage", stage}, {"error", e.what()}};
        result.failed_stage = stage;
        try {
            fs::create_directories(config.output_dir);
            result.report_path = (fs::path(config.output_dir) / "report.json").string();
            std::ofstream out(result.report_path);
            out << report.dump(2) << '\n';
        } catch (...) {
        }
    }
    return result;
}

}  // namespace cannlv
