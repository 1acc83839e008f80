#ifndef CANNLV_MODELS_HPP
#define CANNLV_MODELS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cannlv/series.hpp"

namespace cannlv {

/// Raised when a trajectory integration produces a non-finite state.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(double t, const std::string& what)
        : std::runtime_error("integration diverged at t=" + std::to_string(t) + ": " + what),
          t_(t) {}
    double time() const { return t_; }

private:
    double t_;
};

/// Standard Bass diffusion parameters: rate = [p + q z/m](m - z).
struct BassParams {
    double m = 0;  // market potential, millions of units
    double p = 0;  // innovation coefficient, 1/quarter
    double q = 0;  // imitation coefficient, 1/quarter

    void validate() const;  // m > 0, p,q >= 0 finite, p + q > 0
};

/// Two-product Lotka-Volterra with churn. Product 1 launches alone and is a
/// plain Bass process until product 2 enters at quarter c2; afterwards each
/// product reaches a fraction alpha_j of the rival's residual market.
struct LVchParams {
    BassParams standalone;  // (m_a, p_1a, q_1a) of the stand-alone phase
    int c2 = 1;             // entry quarter of product 2, counted from launch

    double p1 = 0, p2 = 0;          // innovation coefficients
    double a1 = 0, a2 = 0;          // within-product word-of-mouth, > 0
    double b1 = 0, b2 = 0;          // cross-product word-of-mouth, any sign
    double alpha1 = 0, alpha2 = 0;  // residual-market access fractions
    double m1 = 0, m2 = 0;          // competition-phase market potentials

    void validate() const;
};

/// Asymmetric-competition reduction: alpha1 = 0, alpha2 = 1, p1 = 0.
/// Product 2 is an autonomous Bass process; product 1 absorbs its residual
/// market.
struct LVacParams {
    BassParams standalone;
    int c2 = 1;
    double a1 = 0, b1 = 0, m1 = 0;  // product 1
    double p2 = 0, a2 = 0, m2 = 0;  // product 2

    LVchParams to_lvch() const;
    void validate() const;
};

enum class ReductionCase {
    FullLVch,
    UCRCD,
    IndependentBass,
    DirectCannibalisation,
    InverseCannibalisation,
};

std::string to_string(ReductionCase c);

/// Sets (alpha1, alpha2) for the requested reduction; FullLVch is identity.
LVchParams apply_reduction(LVchParams params, ReductionCase c);

/// Closed-form Bass cumulative adoption. Requires p > 0 and t >= 0.
double bass_cumulative(const BassParams& params, double t);

/// Bass adoption rate at cumulative level z in [0, m].
double bass_rate(const BassParams& params, double z);

/// Rates of both products at state (z1, z2). For t <= c2 product 1 follows
/// the stand-alone Bass dynamics and product 2 is inactive.
std::pair<double, double> lvch_rates(const LVchParams& params, double z1, double z2, double t);
std::pair<double, double> lvac_rates(const LVacParams& params, double z1, double z2, double t);

/// Cumulative and quarterly-rate trajectories sampled at integer quarters
/// 0..horizon. rates[i] is the first difference of the cumulative values.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> z1, z2;
    std::vector<double> rates1, rates2;
};

Trajectory integrate(const LVchParams& params, int horizon, double dt = 0.01);
Trajectory integrate(const LVacParams& params, int horizon, double dt = 0.01);

/// Synthetic observed data: quarterly rates from `integrate`, scaled by a
/// calendar-quarter seasonal factor, plus additive Gaussian noise (clipped at
/// zero). Product-2 series starts at quarter c2+1. Deterministic per seed.
std::pair<SalesSeries, SalesSeries> simulate(const LVchParams& params, int horizon,
                                             const std::array<double, 4>& seasonal_amplitudes,
                                             double noise_sd, std::uint64_t seed,
                                             Quarter start = {2000, 1});

}  // namespace cannlv

#endif
