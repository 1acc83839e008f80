#include <doctest.h>

#include <cmath>
#include <random>

#include "cannlv/forecasting.hpp"
#include "helpers.hpp"

using namespace cannlv;

TEST_CASE("product-2 mean trajectory is the closed-form bass curve") {
    auto p = testutil::table4_params();
    auto f2 = mean_forecast_z2(p, 12, 10);
    REQUIRE(f2.values.size() == 22);
    CHECK_FALSE(f2.used_integration);
    CHECK(f2.at(20) == doctest::Approx(259.698).epsilon(1e-4));
    CHECK(f2.at(1) == doctest::Approx(bass_cumulative({p.m2, p.p2, p.a2}, 1.0)).epsilon(1e-12));

    // long-run limit is the market potential
    auto tail = mean_forecast_z2(p, 400, 100);
    CHECK(tail.at(500) == doctest::Approx(p.m2).epsilon(1e-6));

    // monotone non-decreasing
    for (std::size_t i = 1; i < f2.values.size(); ++i)
        CHECK(f2.values[i] >= f2.values[i - 1] - 1e-12);

    CHECK_THROWS(mean_forecast_z2(p, 0, 5));
}

TEST_CASE("p2 = 0 falls back to numeric integration") {
    auto p = testutil::bench_params();
    p.p2 = 0.0;
    auto f2 = mean_forecast_z2(p, 10, 5);
    CHECK(f2.used_integration);
    // with no innovation and z2(0) = 0 the product never takes off
    for (double v : f2.values) CHECK(v == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("product-1 euler extension") {
    auto p = testutil::table4_params();

    SUBCASE("single frozen step") {
        MeanTrajectory z2;
        z2.T = 1;
        z2.K = 1;
        z2.values = {400.0, 400.0};
        std::vector<double> in = {1200.0};
        auto f1 = mean_forecast_z1(p, in, z2, 1, 1);
        REQUIRE(f1.values.size() == 2);
        CHECK(f1.values[0] == doctest::Approx(1200.0));
        CHECK(f1.values[1] == doctest::Approx(1251.8632478632).epsilon(1e-10));
    }

    SUBCASE("total saturation is a fixed point") {
        MeanTrajectory z2;
        z2.T = 1;
        z2.K = 4;
        z2.values.assign(5, p.m2);
        std::vector<double> in = {p.m1};
        auto f1 = mean_forecast_z1(p, in, z2, 1, 4);
        for (double v : f1.values) CHECK(v == doctest::Approx(p.m1).epsilon(1e-12));
    }

    SUBCASE("euler recursion tracks the dense integrator within 1% of m1") {
        auto q = testutil::bench_params();
        const int T = 40, K = 8;
        auto traj = integrate(q, T + K, 0.01);
        const int Tc = T - q.c2;
        auto f2 = mean_forecast_z2(q, Tc, K);
        std::vector<double> in;
        for (int t = q.c2 + 1; t <= T; ++t) in.push_back(traj.z1[static_cast<std::size_t>(t)]);
        auto f1 = mean_forecast_z1(q, in, f2, Tc, K);
        for (int h = 1; h <= K; ++h)
            CHECK(f1.at(Tc + h) ==
                  doctest::Approx(traj.z1[static_cast<std::size_t>(T + h)]).epsilon(0.01));
    }

    SUBCASE("argument validation") {
        MeanTrajectory z2;
        z2.values = {1.0, 2.0};
        std::vector<double> in = {1.0, 2.0};
        CHECK_THROWS(mean_forecast_z1(p, in, z2, 3, 1));  // in-sample length mismatch
        CHECK_THROWS(mean_forecast_z1(p, in, z2, 2, 4));  // z2 too short
    }
}

TEST_CASE("sarmax with zero orders on exact data is the identity") {
    std::vector<double> mean(60), obs(60);
    for (int i = 0; i < 60; ++i) mean[static_cast<std::size_t>(i)] = 5.0 + 2.0 * i;
    obs = mean;
    SarmaxSpec spec;  // all orders zero, c included
    auto fit = fit_sarmax(obs, mean, spec);
    CHECK(fit.converged);
    CHECK(fit.c_exog == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.sigma2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(fit.stationary);
    CHECK(fit.invertible);

    // a doubled series is absorbed by the exogenous scale
    std::vector<double> obs2 = mean;
    for (auto& x : obs2) x *= 2.0;
    auto fit2 = fit_sarmax(obs2, mean, spec);
    CHECK(fit2.c_exog == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sarmax recovers an injected ar(1) deviation") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int n = 400;
    std::vector<double> mean(n), obs(n);
    double d = 0;
    for (int i = 0; i < n; ++i) {
        mean[static_cast<std::size_t>(i)] = 100.0 + 3.0 * i;
        d = 0.7 * d + nd(rng);
        obs[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] + d;
    }
    SarmaxSpec spec;
    spec.ar = 1;
    auto fit = fit_sarmax(obs, mean, spec);
    REQUIRE(fit.phi.size() == 1);
    CHECK(fit.c_exog == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fit.phi[0] == doctest::Approx(0.7).epsilon(0.1));
    CHECK(fit.sigma2 == doctest::Approx(1.0).epsilon(0.2));
    CHECK(fit.stationary);
    REQUIRE(fit.ar_roots.size() == 1);
    CHECK(std::abs(fit.ar_roots[0]) == doctest::Approx(1.0 / fit.phi[0]).epsilon(1e-6));
}

TEST_CASE("sarmax recovers an injected seasonal ar term") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int n = 400;
    std::vector<double> mean(n), obs(n), dev(n);
    for (int i = 0; i < n; ++i) {
        mean[static_cast<std::size_t>(i)] = 50.0 + 2.0 * i;
        const double prev = i >= 4 ? dev[static_cast<std::size_t>(i - 4)] : 0.0;
        dev[static_cast<std::size_t>(i)] = 0.6 * prev + nd(rng);
        obs[static_cast<std::size_t>(i)] =
            mean[static_cast<std::size_t>(i)] + dev[static_cast<std::size_t>(i)];
    }
    SarmaxSpec spec;
    spec.sar = 1;
    auto fit = fit_sarmax(obs, mean, spec);
    REQUIRE(fit.sphi.size() == 1);
    CHECK(fit.sphi[0] == doctest::Approx(0.6).epsilon(0.15));

    // the expanded AR polynomial acts at lag 4
    auto poly = fit.ar_poly();
    REQUIRE(poly.size() == 5);
    CHECK(poly[0] == doctest::Approx(1.0));
    CHECK(poly[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(poly[4] == doctest::Approx(-fit.sphi[0]).epsilon(1e-12));

    // aicc search should spot the seasonal structure
    auto chosen = select_sarmax_spec(obs, mean, 4);
    CHECK(chosen.sar == 1);
}

TEST_CASE("an explosive deviation is reported as non-stationary") {
    const int n = 60;
    std::vector<double> mean(n, 10.0), obs(n);
    double d = 0.5;
    for (int i = 0; i < n; ++i) {
        obs[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] + d;
        d *= 1.1;  // the AR(1) deviation that generated this has phi = 1.1
    }
    SarmaxSpec spec;
    spec.ar = 1;
    auto fit = fit_sarmax(obs, mean, spec);
    CHECK(fit.phi[0] > 1.0);
    REQUIRE(fit.ar_roots.size() == 1);
    CHECK(std::abs(fit.ar_roots[0]) < 1.0);
    CHECK_FALSE(fit.stationary);
}

TEST_CASE("forecast bands: zero orders give a flat band around the mean") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> nd(0.0, 2.0);
    const int T = 80, K = 6;
    std::vector<double> mean(T + K), obs(T);
    for (int i = 0; i < T + K; ++i) mean[static_cast<std::size_t>(i)] = 10.0 + 1.5 * i;
    for (int i = 0; i < T; ++i)
        obs[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] + nd(rng);

    SarmaxSpec spec;  // ARMA(0,0) + c
    auto fit = fit_sarmax(obs, mean, spec);
    auto band = sarmax_forecast(fit, obs, mean, K);
    REQUIRE(band.point.size() == K);
    const double width0 = band.upper95[0] - band.lower95[0];
    CHECK(width0 == doctest::Approx(2 * 1.96 * std::sqrt(fit.sigma2)).epsilon(1e-3));
    for (int h = 0; h < K; ++h) {
        CHECK(band.point[static_cast<std::size_t>(h)] ==
              doctest::Approx(fit.c_exog * mean[static_cast<std::size_t>(T + h)]).epsilon(1e-9));
        CHECK(band.upper95[static_cast<std::size_t>(h)] -
                  band.lower95[static_cast<std::size_t>(h)] ==
              doctest::Approx(width0).epsilon(1e-9));
    }
}

TEST_CASE("forecast bands: ar(1) variance follows the psi-weight sum") {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int T = 300, K = 8;
    std::vector<double> mean(T + K), obs(T);
    double d = 0;
    for (int i = 0; i < T + K; ++i) mean[static_cast<std::size_t>(i)] = 20.0 + 0.5 * i;
    for (int i = 0; i < T; ++i) {
        d = 0.6 * d + nd(rng);
        obs[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] + d;
    }
    SarmaxSpec spec;
    spec.ar = 1;
    auto fit = fit_sarmax(obs, mean, spec);
    auto band = sarmax_forecast(fit, obs, mean, K);

    const double phi = fit.phi[0];
    double var = 0;
    for (int h = 1; h <= K; ++h) {
        var += std::pow(phi, 2 * (h - 1)) * fit.sigma2;
        const double half = 1.96 * std::sqrt(var);
        const double got =
            0.5 * (band.upper95[static_cast<std::size_t>(h - 1)] -
                   band.lower95[static_cast<std::size_t>(h - 1)]);
        CHECK(got == doctest::Approx(half).epsilon(0.01));
    }

    // the deviation forecast decays geometrically toward c * mean
    const double dT = obs[T - 1] - fit.c_exog * mean[T - 1];
    for (int h = 1; h <= K; ++h)
        CHECK(band.point[static_cast<std::size_t>(h - 1)] -
                  fit.c_exog * mean[static_cast<std::size_t>(T + h - 1)] ==
              doctest::Approx(dT * std::pow(phi, h)).epsilon(1e-6));
}

TEST_CASE("noiseless data yields zero-width bands") {
    std::vector<double> mean(50), obs(40);
    for (int i = 0; i < 50; ++i) mean[static_cast<std::size_t>(i)] = std::sqrt(1.0 + i);
    for (int i = 0; i < 40; ++i) obs[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)];
    SarmaxSpec spec;
    auto fit = fit_sarmax(obs, mean, spec);
    auto band = sarmax_forecast(fit, obs, mean, 10);
    for (std::size_t h = 0; h < 10; ++h) {
        CHECK(band.upper95[h] - band.lower95[h] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        CHECK(band.point[h] == doctest::Approx(mean[40 + h]).epsilon(1e-9));
    }
}

TEST_CASE("ljung-box") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> wn(500);
    for (auto& x : wn) x = nd(rng);
    auto ok = ljung_box(wn, 8);
    CHECK(ok.dof == 8);
    CHECK(ok.pass);

    std::vector<double> ar(500);
    double prev = 0;
    for (auto& x : ar) {
        prev = 0.8 * prev + nd(rng);
        x = prev;
    }
    auto bad = ljung_box(ar, 8);
    CHECK_FALSE(bad.pass);
    CHECK(bad.statistic > bad.threshold);

    CHECK(ljung_box(wn, 8, 2).dof == 6);
    CHECK_THROWS(ljung_box(std::vector<double>(10, 1.0), 4));  // constant residuals
    CHECK_THROWS(ljung_box(wn, 0));
    CHECK_THROWS(ljung_box(std::vector<double>{1.0, 2.0}, 5));

    // false-alarm rate across seeds stays near the nominal 5%
    int rejections = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        std::mt19937_64 r2(1000 + seed);
        std::vector<double> x(300);
        for (auto& v : x) v = nd(r2);
        if (!ljung_box(x, 8).pass) ++rejections;
    }
    CHECK(rejections <= 24);  // ~5% expected, generous ceiling
}

TEST_CASE("holdout evaluation on noiseless data") {
    auto p = testutil::bench_params();
    auto [s1, s2] = simulate(p.to_lvch(), 40, {1, 1, 1, 1}, 0.0, 7);
    SarmaxSpec spec;
    auto h = holdout_evaluate(s1, s2, 32, spec, spec);
    CHECK(h.T == 32);
    REQUIRE(h.product1.actual.size() == 8);
    REQUIRE(h.product2.actual.size() == 8);
    for (double e : h.product2.abs_error) CHECK(e < 1e-3);
    // product 1 carries the deliberate one-quarter discretisation gap
    for (double e : h.product1.abs_error) CHECK(e < 0.01 * p.m1);

    CHECK_THROWS(holdout_evaluate(s1, s2, 40, spec, spec));  // nothing held out
    CHECK_THROWS(holdout_evaluate(s1, s2, 10, spec, spec));  // window too short
}

TEST_CASE("cumulative point forecasts do not decrease") {
    auto p = testutil::bench_params();
    auto [s1, s2] = testutil::noisy_pair(p.to_lvch(), 40, 0.02, 55);
    const int T = 40, K = 8, Tc = T - p.c2;
    auto f2 = mean_forecast_z2(p, Tc, K);
    std::vector<double> w2(s2.cumulative.begin(), s2.cumulative.end());
    SarmaxSpec spec;
    spec.ar = 1;
    auto fit = fit_sarmax(w2, f2.values, spec);
    auto band = sarmax_forecast(fit, w2, f2.values, K);
    for (std::size_t h = 1; h < band.point.size(); ++h)
        CHECK(band.point[h] >= band.point[h - 1] - 1e-6);
}
