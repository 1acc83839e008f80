#ifndef CANNLV_TESTS_HELPERS_HPP
#define CANNLV_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "cannlv/models.hpp"
#include "cannlv/series.hpp"

namespace testutil {

// Independent fixed-step RK4, kept deliberately separate from the library
// integrator so trajectory checks have a second implementation to disagree
// with.
inline std::vector<double> rk4(const std::function<std::vector<double>(double,
                                                                       const std::vector<double>&)>& f,
                               std::vector<double> y, double t0, double t1, int steps) {
    const double h = (t1 - t0) / steps;
    const std::size_t d = y.size();
    for (int i = 0; i < steps; ++i) {
        const double t = t0 + i * h;
        auto k1 = f(t, y);
        std::vector<double> tmp(d);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
        auto k2 = f(t + 0.5 * h, tmp);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
        auto k3 = f(t + 0.5 * h, tmp);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = y[j] + h * k3[j];
        auto k4 = f(t + h, tmp);
        for (std::size_t j = 0; j < d; ++j)
            y[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    }
    return y;
}

// iPhone/iPad-scale parameters matching the published reduced triple
// (v = -1.0306, s = 0.2407, r = 0.10656). Only used for arithmetic-level
// checks; the trajectory is weakly identified over a 40-quarter window.
inline cannlv::LVacParams table4_params() {
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

// Well-identified two-product scenario: product 1 saturates inside a
// 40-quarter window and the cross coupling is strong enough to pin b1.
inline cannlv::LVacParams bench_params() {
    cannlv::LVacParams p;
    p.standalone = {800.0, 0.010, 0.350};
    p.c2 = 8;
    p.a1 = 0.25;
    p.b1 = -0.20;
    p.m1 = 1000.0;
    p.p2 = 0.035;
    p.a2 = 0.35;
    p.m2 = 400.0;
    return p;
}

// Noise-free pair with 2%-style multiplicative perturbation applied on top,
// cumulative rebuilt from the perturbed units.
inline std::pair<cannlv::SalesSeries, cannlv::SalesSeries> noisy_pair(
    const cannlv::LVchParams& params, int horizon, double rel_sd, std::uint64_t seed) {
    auto [s1, s2] = cannlv::simulate(params, horizon, {1, 1, 1, 1}, 0.0, 0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, rel_sd);
    for (auto* s : {&s1, &s2}) {
        std::vector<double> u = s->units;
        for (auto& x : u) x = std::max(0.0, x * (1.0 + noise(rng)));
        *s = cannlv::SalesSeries::from_units(s->product_id, s->quarters.front(), std::move(u));
    }
    return {std::move(s1), std::move(s2)};
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testutil

#endif
