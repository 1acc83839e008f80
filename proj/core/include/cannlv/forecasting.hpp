#ifndef CANNLV_FORECASTING_HPP
#define CANNLV_FORECASTING_HPP

#include <complex>
#include <span>
#include <vector>

#include "cannlv/estimation.hpp"
#include "cannlv/models.hpp"

namespace cannlv {

/// Cumulative mean trajectory on quarters 1..T+K (counted from the product's
/// competition-phase origin); values beyond the split index T never depend on
/// observed data.
struct MeanTrajectory {
    int T = 0;
    int K = 0;
    std::vector<double> values;  // length T+K, values[i] is quarter i+1
    bool used_integration = false;

    double at(int t) const { return values.at(static_cast<std::size_t>(t) - 1); }
};

struct SarmaxSpec {
    int ar = 0, ma = 0;    // non-seasonal orders
    int sar = 0, sma = 0;  // seasonal orders
    int season = 4;
    bool include_c = true;  // exogenous scale coefficient on the mean trajectory

    int param_count() const { return (include_c ? 1 : 0) + ar + ma + sar + sma; }
};

struct SarmaxFit {
    SarmaxSpec spec;
    double c_exog = 1.0;
    std::vector<double> phi, sphi;    // AR / seasonal-AR coefficients
    std::vector<double> theta, stheta;  // MA / seasonal-MA coefficients
    double sigma2 = 0;
    std::vector<double> residuals;  // estimated innovations a_t, t = 1..n
    int n = 0;
    double sse = 0;
    double aicc = 0;
    bool converged = true;
    bool stationary = true;
    bool invertible = true;
    std::vector<std::complex<double>> ar_roots, ma_roots;

    /// Expanded lag polynomials (seasonal and non-seasonal multiplied out).
    std::vector<double> ar_poly() const;
    std::vector<double> ma_poly() const;
};

struct ForecastBand {
    std::vector<double> times;  // T+1..T+K
    std::vector<double> point;
    std::vector<double> lower95, upper95;
    double sigma2 = 0;
};

/// Step 1 for product 2: the closed-form Bass solution of the second LVac
/// equation, evaluated at quarters 1..T+K from c2. Falls back to numeric
/// integration when p2 = 0.
MeanTrajectory mean_forecast_z2(const LVacParams& params, int T, int K);

/// Step 1 for product 1: copies the fitted in-sample cumulative and extends
/// it by the one-quarter Euler recursion z1(t+1) = z1(t) + c1(t), with c1 the
/// first LVac right-hand side driven by the product-2 mean trajectory.
MeanTrajectory mean_forecast_z1(const LVacParams& params, std::span<const double> z1_insample,
                                const MeanTrajectory& z2, int T, int K);

/// Step 2: conditional-least-squares SARMAX on the deviation of the observed
/// cumulative series from c * mean trajectory.
SarmaxFit fit_sarmax(std::span<const double> observed, std::span<const double> mean_traj,
                     const SarmaxSpec& spec);

/// Point forecast c*f(t) plus the ARMA recursion on past deviations;
/// psi-weight accumulation gives the prediction limits.
ForecastBand sarmax_forecast(const SarmaxFit& fit, std::span<const double> observed,
                             std::span<const double> mean_full, int K, double level = 0.95);

/// Corrected-AIC search over orders {0,1}^4 at the given season length.
SarmaxSpec select_sarmax_spec(std::span<const double> observed,
                              std::span<const double> mean_traj, int season = 4);

struct LjungBoxResult {
    double statistic = 0;
    int dof = 0;
    double threshold = 0;  // chi-square 95% quantile at dof
    bool pass = false;
};

LjungBoxResult ljung_box(std::span<const double> residuals, int lags, int n_fitted_params = 0);

struct HoldoutProduct {
    std::vector<double> actual, point;
    std::vector<double> abs_error, pct_error;
    std::vector<bool> within_band;
};

struct HoldoutResult {
    int T = 0;  // in-sample quarters (product-1 clock)
    HoldoutProduct product1, product2;
};

/// Refits the LVac pipeline on the first T quarters of the pair and scores
/// the held-out tail against the 95% bands.
HoldoutResult holdout_evaluate(const SalesSeries& s1, const SalesSeries& s2, int T,
                               const SarmaxSpec& spec1, const SarmaxSpec& spec2,
                               const FitOptions& options = {});

}  // namespace cannlv

#endif
