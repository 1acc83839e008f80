#ifndef CANNLV_PIPELINE_HPP
#define CANNLV_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cannlv/estimation.hpp"
#include "cannlv/forecasting.hpp"
#include "cannlv/nondim.hpp"
#include "cannlv/series.hpp"

namespace cannlv {

struct RunConfig {
    std::string input_path;
    std::string output_dir = ".";
    FitMode fit_mode = FitMode::Instantaneous;
    bool unconstrained = false;
    bool smooth_before_fit = false;  // five-term moving average ahead of fitting
    int smooth_window = 5;
    std::optional<SarmaxSpec> sarmax;  // absent -> AICc order search
    int horizon = 8;                   // forecast quarters K; 0 disables forecasting
    int holdout = 0;                   // trailing quarters held out for validation
    std::uint64_t seed = 0;
    std::vector<ModelSpec> candidates;  // empty -> default ladder

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

/// Seed precedence: CLI flag > CANNIBAL_LV_SEED env > config file.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed, const RunConfig& config);

struct PipelineResult {
    nlohmann::ordered_json report;
    std::string report_path, params_path, series_path;
    bool ok = false;
    std::string failed_stage;
};

/// fit -> selection ladder -> forecast -> non-dimensional analysis; writes
/// report.json, params.csv and the plot-ready series.csv to the output
/// directory. Stage failures are recorded in the report and stop the
/// pipeline at that stage.
PipelineResult run_pipeline(const RunConfig& config);
PipelineResult run_pipeline(const RunConfig& config, const SalesSeries& s1,
                            const SalesSeries& s2);

nlohmann::ordered_json fit_to_json(const FitResult& fit);
nlohmann::ordered_json comparison_to_json(const ModelComparison& cmp);

}  // namespace cannlv

#endif
