#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cannlv/pipeline.hpp"
#include "helpers.hpp"

using namespace cannlv;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("cannlv_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// the metadata block carries a wall-clock timestamp and the two runs write
// to different directories; drop both before comparing
std::string strip_metadata(const std::string& report_text) {
    auto j = nlohmann::ordered_json::parse(report_text);
    j.erase("metadata");
    if (j.contains("config")) j["config"].erase("output_dir");
    return j.dump(2);
}

RunConfig base_config(const fs::path& input, const fs::path& outdir) {
    RunConfig cfg;
    cfg.input_path = input.string();
    cfg.output_dir = outdir.string();
    cfg.horizon = 8;
    cfg.seed = 42;
    SarmaxSpec spec;
    spec.ar = 1;
    cfg.sarmax = spec;  // skip the order search to keep the test fast
    return cfg;
}

fs::path write_synthetic(const fs::path& dir) {
    auto p = testutil::bench_params();
    auto [s1, s2] = testutil::noisy_pair(p.to_lvch(), 40, 0.02, 42);
    const fs::path path = dir / "input.csv";
    write_csv(path.string(), {s1, s2});
    return path;
}

}  // namespace

TEST_CASE("run config json round trip") {
    nlohmann::json j = {
        {"input", "data.csv"},       {"output_dir", "out"},
        {"fit_mode", "cumulative"},  {"unconstrained", true},
        {"smooth_before_fit", true}, {"smooth_window", 3},
        {"horizon", 6},              {"holdout", 4},
        {"seed", 99},                {"sarmax", {{"ar", 1}, {"sma", 1}}},
        {"candidates", {"FullLVch", "LVac"}},
    };
    auto cfg = RunConfig::from_json(j);
    CHECK(cfg.input_path == "data.csv");
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.fit_mode == FitMode::Cumulative);
    CHECK(cfg.unconstrained);
    CHECK(cfg.smooth_before_fit);
    CHECK(cfg.smooth_window == 3);
    CHECK(cfg.horizon == 6);
    CHECK(cfg.holdout == 4);
    CHECK(cfg.seed == 99);
    REQUIRE(cfg.sarmax.has_value());
    CHECK(cfg.sarmax->ar == 1);
    CHECK(cfg.sarmax->sma == 1);
    CHECK(cfg.sarmax->season == 4);
    REQUIRE(cfg.candidates.size() == 2);
    CHECK(cfg.candidates[0].reduction == ReductionCase::FullLVch);
    CHECK(cfg.candidates[1].name() == "LVac");

    CHECK_THROWS(RunConfig::from_json(nlohmann::json{{"horizon", -1}}));
    CHECK_THROWS(RunConfig::from_json(nlohmann::json{{"candidates", {"NotAModel"}}}));

    auto back = cfg.to_json();
    CHECK(back["input"] == "data.csv");
    CHECK(back["fit_mode"] == "cumulative");
    CHECK(back["candidates"][1] == "LVac");
}

TEST_CASE("seed precedence: flag beats env beats config") {
    RunConfig cfg;
    cfg.seed = 10;
    unsetenv("CANNIBAL_LV_SEED");
    CHECK(resolve_seed(std::nullopt, cfg) == 10);
    setenv("CANNIBAL_LV_SEED", "20", 1);
    CHECK(resolve_seed(std::nullopt, cfg) == 20);
    CHECK(resolve_seed(30, cfg) == 30);
    unsetenv("CANNIBAL_LV_SEED");
}

TEST_CASE("pipeline end to end on synthetic data") {
    auto dir = fresh_dir("e2e");
    auto input = write_synthetic(dir);
    auto cfg = base_config(input, dir / "out");
    auto result = run_pipeline(cfg);

    REQUIRE(result.ok);
    CHECK(result.failed_stage.empty());
    CHECK(fs::exists(result.report_path));
    CHECK(fs::exists(result.params_path));
    CHECK(fs::exists(result.series_path));

    auto report = nlohmann::json::parse(slurp(result.report_path));
    CHECK(report["status"]["ok"] == true);
    CHECK(report["data"]["c2"] == 8);
    CHECK(report["data"]["n1"] == 40);
    CHECK(report["data"]["n2"] == 32);
    CHECK(report["standalone"]["model"] == "StandaloneBass");

    // every ladder entry reports the full diagnostic block
    REQUIRE(report["ladder"]["entries"].is_array());
    for (const auto& entry : report["ladder"]["entries"]) {
        if (entry.contains("failed")) continue;
        const auto& fit = entry["fit"];
        for (const char* key : {"converged", "n_obs", "n_params", "r2", "dw", "sse", "params"})
            CHECK(fit.contains(key));
        for (const auto& param : fit["params"]) {
            CHECK(param.contains("estimate"));
            CHECK(param.contains("lower95"));
            CHECK(param.contains("upper95"));
            CHECK(double(param["lower95"]) <= double(param["estimate"]) + 1e-9);
            CHECK(double(param["estimate"]) <= double(param["upper95"]) + 1e-9);
        }
    }
    CHECK(report["ladder"]["selected"] == "LVac");

    // reduced-model comparisons are present for the non-reference entries
    int with_cmp = 0;
    for (const auto& entry : report["ladder"]["entries"])
        if (entry.contains("vs_full")) {
            ++with_cmp;
            CHECK(entry["vs_full"].contains("f_ratio"));
            CHECK(entry["vs_full"].contains("verdict"));
        }
    CHECK(with_cmp == 2);

    // forecast block covers both products over the horizon
    REQUIRE(report.contains("forecast"));
    CHECK(report["forecast"]["horizon"] == 8);
    CHECK(report["forecast"]["product1"]["point"].size() == 8);
    CHECK(report["forecast"]["product2"]["upper95"].size() == 8);

    // nondim block present for the lvac selection
    REQUIRE(report.contains("nondim"));
    CHECK(double(report["nondim"]["v"]) < 0.0);
    CHECK(report["nondim"]["peak"].contains("interval_literal"));

    // params.csv: header plus one row per (model, param)
    {
        std::istringstream in(slurp(result.params_path));
        std::string line;
        std::getline(in, line);
        CHECK(line == "model,param,estimate,lower95,upper95,unstable");
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows >= 3 + 10 + 6 + 6);  // standalone + full + lvac + independent
    }

    // series.csv: schema line, one row per observed quarter per product and
    // per forecast quarter per product, with non-empty observed cells
    {
        std::istringstream in(slurp(result.series_path));
        std::string line;
        std::getline(in, line);
        CHECK(line ==
              "product,quarter,observed_units,observed_cumulative,fitted_cumulative,forecast,"
              "lower95,upper95");
        int in_sample = 0, forecast_rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            // trailing empties may be dropped by the splitter; pad
            cells.resize(8);
            REQUIRE(cells.size() == 8);
            CHECK_FALSE(cells[0].empty());
            CHECK_FALSE(cells[1].empty());
            CHECK_FALSE(cells[4].empty());
            if (cells[5].empty())
                ++in_sample;
            else
                ++forecast_rows;
        }
        CHECK(in_sample == 40 + 32);
        CHECK(forecast_rows == 2 * 8);
    }
}

TEST_CASE("pipeline is deterministic given a seed") {
    auto dir = fresh_dir("det");
    auto input = write_synthetic(dir);
    auto a = run_pipeline(base_config(input, dir / "a"));
    auto b = run_pipeline(base_config(input, dir / "b"));
    REQUIRE(a.ok);
    REQUIRE(b.ok);
    CHECK(strip_metadata(slurp(a.report_path)) == strip_metadata(slurp(b.report_path)));
    CHECK(slurp(a.params_path) == slurp(b.params_path));
    CHECK(slurp(a.series_path) == slurp(b.series_path));
}

TEST_CASE("horizon zero disables forecasting but keeps the rest") {
    auto dir = fresh_dir("nofc");
    auto input = write_synthetic(dir);
    auto cfg = base_config(input, dir / "out");
    cfg.horizon = 0;
    auto result = run_pipeline(cfg);
    REQUIRE(result.ok);
    auto report = nlohmann::json::parse(slurp(result.report_path));
    CHECK_FALSE(report.contains("forecast"));
    CHECK(report.contains("nondim"));
}

TEST_CASE("smoothing before the fit is wired through") {
    auto dir = fresh_dir("smooth");
    auto input = write_synthetic(dir);
    auto cfg = base_config(input, dir / "out");
    cfg.smooth_before_fit = true;
    cfg.candidates = {ModelSpec{ReductionCase::InverseCannibalisation, true}};
    auto result = run_pipeline(cfg);
    REQUIRE(result.ok);
    auto report = nlohmann::json::parse(slurp(result.report_path));
    CHECK(report["config"]["smooth_before_fit"] == true);
    CHECK(report["ladder"]["selected"] == "LVac");
}

TEST_CASE("load failures are reported with the stage") {
    auto dir = fresh_dir("badload");

    SUBCASE("missing file") {
        RunConfig cfg;
        cfg.input_path = (dir / "nope.csv").string();
        cfg.output_dir = (dir / "out").string();
        auto result = run_pipeline(cfg);
        CHECK_FALSE(result.ok);
        CHECK(result.failed_stage == "load");
        CHECK(result.report["status"]["ok"] == false);
    }

    SUBCASE("corrupt csv") {
        const fs::path bad = dir / "bad.csv";
        std::ofstream(bad) << "product,quarter,units\na,2000Q1,1\na,2000Q4,2\n";
        RunConfig cfg;
        cfg.input_path = bad.string();
        cfg.output_dir = (dir / "out").string();
        auto result = run_pipeline(cfg);
        CHECK_FALSE(result.ok);
        CHECK(result.failed_stage == "load");
    }

    SUBCASE("single product") {
        const fs::path one = dir / "one.csv";
        std::ofstream(one) << "product,quarter,units\na,2000Q1,1\na,2000Q2,2\n";
        RunConfig cfg;
        cfg.input_path = one.string();
        cfg.output_dir = (dir / "out").string();
        auto result = run_pipeline(cfg);
        CHECK_FALSE(result.ok);
        CHECK(result.failed_stage == "load");
    }
}

TEST_CASE("a mid-pipeline failure still writes a partial report") {
    auto dir = fresh_dir("midfail");
    // two products launching in the same quarter: c2 = 0 is invalid
    std::ofstream(dir / "same.csv") << "product,quarter,units\n"
                                       "a,2000Q1,1\na,2000Q2,2\na,2000Q3,3\na,2000Q4,4\n"
                                       "a,2001Q1,5\na,2001Q2,6\na,2001Q3,7\na,2001Q4,8\n"
                                       "b,2000Q1,1\nb,2000Q2,2\nb,2000Q3,3\nb,2000Q4,4\n"
                                       "b,2001Q1,5\nb,2001Q2,6\nb,2001Q3,7\nb,2001Q4,8\n";
    RunConfig cfg;
    cfg.input_path = (dir / "same.csv").string();
    cfg.output_dir = (dir / "out").string();
    auto result = run_pipeline(cfg);
    CHECK_FALSE(result.ok);
    CHECK_FALSE(result.failed_stage.empty());
    CHECK(fs::exists(result.report_path));
    auto report = nlohmann::json::parse(slurp(result.report_path));
    CHECK(report["status"]["ok"] == false);
    CHECK(report["status"]["failed_stage"] == result.failed_stage);
}
