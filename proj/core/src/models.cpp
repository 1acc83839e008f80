#include "cannlv/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cannlv {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double bass_rate_raw(const BassParams& p, double z) {
    return (p.p + p.q * z / p.m) * (p.m - z);
}

// Competition-phase right-hand sides of the LVch system.
std::pair<double, double> competition_rates(const LVchParams& P, double z1, double z2) {
    const double pool1 = P.m1 + P.alpha2 * P.m2;
    const double pool2 = P.m2 + P.alpha1 * P.m1;
    const double r1 = (P.p1 + (P.a1 * z1 + P.alpha2 * P.b1 * z2) / pool1) *
                      ((P.m1 - z1) + P.alpha2 * (P.m2 - z2));
    const double r2 = (P.p2 + (P.a2 * z2 + P.alpha1 * P.b2 * z1) / pool2) *
                      ((P.m2 - z2) + P.alpha1 * (P.m1 - z1));
    return {r1, r2};
}

}  // namespace

void BassParams::validate() const {
    require(std::isfinite(m) && std::isfinite(p) && std::isfinite(q), "Bass: non-finite parameter");
    require(m > 0, "Bass: m must be > 0");
    require(p >= 0 && q >= 0, "Bass: p and q must be >= 0");
    require(p + q > 0, "Bass: p + q must be > 0");
}

void LVchParams::validate() const {
    standalone.validate();
    require(c2 >= 1, "LVch: c2 must be >= 1");
    require(a1 > 0 && a2 > 0, "LVch: a1 and a2 must be > 0");
    require(m1 > 0 && m2 > 0, "LVch: m1 and m2 must be > 0");
    require(alpha1 >= 0 && alpha1 <= 1, "LVch: alpha1 outside [0, 1]");
    require(alpha2 >= 0 && alpha2 <= 1, "LVch: alpha2 outside [0, 1]");
    for (double x : {p1, p2, b1, b2}) require(std::isfinite(x), "LVch: non-finite parameter");
}

void LVacParams::validate() const {
    standalone.validate();
    require(c2 >= 1, "LVac: c2 must be >= 1");
    require(a1 > 0 && a2 > 0, "LVac: a1 and a2 must be > 0");
    require(m1 > 0 && m2 > 0, "LVac: m1 and m2 must be > 0");
    require(p2 >= 0, "LVac: p2 must be >= 0");
    require(std::isfinite(b1), "LVac: non-finite b1");
}

LVchParams LVacParams::to_lvch() const {
    LVchParams P;
    P.standalone = standalone;
    P.c2 = c2;
    P.p1 = 0;
    P.p2 = p2;
    P.a1 = a1;
    P.a2 = a2;
    P.b1 = b1;
    P.b2 = 0;
    P.alpha1 = 0;
    P.alpha2 = 1;
    P.m1 = m1;
    P.m2 = m2;
    return P;
}

std::string to_string(ReductionCase c) {
    switch (c) {
        case ReductionCase::FullLVch: return "FullLVch";
        case ReductionCase::UCRCD: return "UCRCD";
        case ReductionCase::IndependentBass: return "IndependentBass";
        case ReductionCase::DirectCannibalisation: return "DirectCannibalisation";
        case ReductionCase::InverseCannibalisation: return "InverseCannibalisation";
    }
    return "?";
}

LVchParams apply_reduction(LVchParams params, ReductionCase c) {
    switch (c) {
        case ReductionCase::FullLVch: break;
        case ReductionCase::UCRCD: params.alpha1 = 1; params.alpha2 = 1; break;
        case ReductionCase::IndependentBass: params.alpha1 = 0; params.alpha2 = 0; break;
        case ReductionCase::DirectCannibalisation: params.alpha1 = 1; params.alpha2 = 0; break;
        case ReductionCase::InverseCannibalisation: params.alpha1 = 0; params.alpha2 = 1; break;
    }
    return params;
}

double bass_cumulative(const BassParams& params, double t) {
    if (t < 0) throw std::domain_error("bass_cumulative: t must be >= 0");
    if (params.p <= 0)
        throw std::domain_error("bass_cumulative: closed form requires p > 0; integrate instead");
    const double e = std::exp(-(params.p + params.q) * t);
    return params.m * (1.0 - e) / (1.0 + (params.q / params.p) * e);
}

double bass_rate(const BassParams& params, double z) {
    if (z < 0 || z > params.m) throw std::domain_error("bass_rate: z outside [0, m]");
    return bass_rate_raw(params, z);
}

std::pair<double, double> lvch_rates(const LVchParams& params, double z1, double z2, double t) {
    if (z1 < 0 || z2 < 0) throw std::domain_error("lvch_rates: negative cumulative state");
    if (t <= params.c2) return {bass_rate_raw(params.standalone, z1), 0.0};
    return competition_rates(params, z1, z2);
}

std::pair<double, double> lvac_rates(const LVacParams& params, double z1, double z2, double t) {
    return lvch_rates(params.to_lvch(), z1, z2, t);
}

Trajectory integrate(const LVchParams& params, int horizon, double dt) {
    if (dt <= 0) throw std::invalid_argument("integrate: dt must be > 0");
    if (horizon < 0) throw std::invalid_argument("integrate: horizon must be >= 0");

    const int steps_per_quarter = std::max(1, static_cast<int>(std::lround(1.0 / dt)));
    const double h = 1.0 / steps_per_quarter;

    Trajectory traj;
    traj.times.push_back(0);
    traj.z1.push_back(0);
    traj.z2.push_back(0);
    traj.rates1.push_back(0);
    traj.rates2.push_back(0);

    double z1 = 0, z2 = 0;
    for (int q = 0; q < horizon; ++q) {
        // Quarter [q, q+1]: stand-alone dynamics through c2, competition after.
        const bool standalone = q < params.c2;
        auto deriv = [&](double s1, double s2) -> std::pair<double, double> {
            if (standalone) return {bass_rate_raw(params.standalone, s1), 0.0};
            return competition_rates(params, s1, s2);
        };
        for (int i = 0; i < steps_per_quarter; ++i) {
            auto [k1a, k1b] = deriv(z1, z2);
            auto [k2a, k2b] = deriv(z1 + 0.5 * h * k1a, z2 + 0.5 * h * k1b);
            auto [k3a, k3b] = deriv(z1 + 0.5 * h * k2a, z2 + 0.5 * h * k2b);
            auto [k4a, k4b] = deriv(z1 + h * k3a, z2 + h * k3b);
            z1 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
            z2 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
            if (!std::isfinite(z1) || !std::isfinite(z2))
                throw IntegrationError(q + (i + 1) * h, "non-finite state");
        }
        traj.times.push_back(q + 1);
        traj.z1.push_back(z1);
        traj.z2.push_back(z2);
        traj.rates1.push_back(z1 - traj.z1[traj.z1.size() - 2]);
        traj.rates2.push_back(z2 - traj.z2[traj.z2.size() - 2]);
    }
    return traj;
}

Trajectory integrate(const LVacParams& params, int horizon, double dt) {
    return integrate(params.to_lvch(), horizon, dt);
}

std::pair<SalesSeries, SalesSeries> simulate(const LVchParams& params, int horizon,
                                             const std::array<double, 4>& seasonal_amplitudes,
                                             double noise_sd, std::uint64_t seed, Quarter start) {
    if (noise_sd < 0) throw std::invalid_argument("simulate: noise_sd must be >= 0");
    Trajectory traj = integrate(params, horizon);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto draw = [&] { return noise_sd > 0 ? noise_sd * noise(rng) : 0.0; };

    std::vector<double> u1, u2;
    for (int t = 1; t <= horizon; ++t) {
        Quarter cal = Quarter::from_index(start.index() + t - 1);
        const double factor = seasonal_amplitudes[static_cast<std::size_t>(cal.q - 1)];
        u1.push_back(std::max(0.0, traj.rates1[static_cast<std::size_t>(t)] * factor + draw()));
        if (t > params.c2)
            u2.push_back(std::max(0.0, traj.rates2[static_cast<std::size_t>(t)] * factor + draw()));
    }
    auto s1 = SalesSeries::from_units("product1", start, std::move(u1));
    auto s2 = SalesSeries::from_units("product2", Quarter::from_index(start.index() + params.c2),
                                      std::move(u2));
    return {std::move(s1), std::move(s2)};
}

}  // namespace cannlv
