#include <benchmark/benchmark.h>

#include "cannlv/estimation.hpp"
#include "cannlv/forecasting.hpp"
#include "cannlv/models.hpp"

namespace {

cannlv::LVacParams table_like_params() {
    cannlv::LVacParams p;
    p.standalone = {120.0, 0.006, 0.290};
    p.c2 = 12;
    p.a1 = 0.202;
    p.b1 = -0.196;
    p.m1 = 1886.0;
    p.p2 = 0.013;
    p.a2 = 0.122;
    p.m2 = 454.0;
    return p;
}

void BM_Integrate40Quarters(benchmark::State& state) {
    const auto params = table_like_params().to_lvch();
    for (auto _ : state) {
        auto traj = cannlv::integrate(params, 40, 0.01);
        benchmark::DoNotOptimize(traj.z1.back());
    }
}
BENCHMARK(BM_Integrate40Quarters);

void BM_FitBassNoiseless(benchmark::State& state) {
    cannlv::BassParams truth{415.0, 0.013, 0.143};
    std::vector<double> t, w;
    for (int i = 1; i <= 40; ++i) {
        t.push_back(i);
        w.push_back(cannlv::bass_cumulative(truth, i));
    }
    for (auto _ : state) {
        auto fit = cannlv::fit_bass(t, w, cannlv::FitMode::Cumulative);
        benchmark::DoNotOptimize(fit.sse);
    }
}
BENCHMARK(BM_FitBassNoiseless);

void BM_FitLVacNoiseless(benchmark::State& state) {
    const auto params = table_like_params();
    auto [s1, s2] = cannlv::simulate(params.to_lvch(), 40, {1, 1, 1, 1}, 0.0, 7);
    auto data = cannlv::CompetitionData::from_series(s1, s2, cannlv::FitMode::Instantaneous);
    cannlv::ModelSpec spec{cannlv::ReductionCase::InverseCannibalisation, true};
    cannlv::FitOptions options;
    options.init = spec.pack(params.to_lvch());
    for (auto _ : state) {
        auto fit = cannlv::fit_competition(spec, data, params.standalone, options);
        benchmark::DoNotOptimize(fit.sse);
    }
}
BENCHMARK(BM_FitLVacNoiseless);

void BM_SarmaxFitAr1(benchmark::State& state) {
    std::vector<double> mean(200), obs(200);
    double d = 0;
    for (int i = 0; i < 200; ++i) {
        mean[static_cast<std::size_t>(i)] = 10.0 + i;
        d = 0.5 * d + ((i * 2654435761u) % 1000 / 1000.0 - 0.5);
        obs[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] + d;
    }
    cannlv::SarmaxSpec spec;
    spec.ar = 1;
    for (auto _ : state) {
        auto fit = cannlv::fit_sarmax(obs, mean, spec);
        benchmark::DoNotOptimize(fit.sigma2);
    }
}
BENCHMARK(BM_SarmaxFitAr1);

}  // namespace

BENCHMARK_MAIN();
