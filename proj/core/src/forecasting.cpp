#include "cannlv/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace cannlv {

namespace {

// (1 + a1 B + ...)(1 + b1 B + ...) expanded.
std::vector<double> conv(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

std::vector<double> lag_poly(const std::vector<double>& coef, int lag_step, double sign) {
    std::vector<double> p(coef.size() * static_cast<std::size_t>(lag_step) + 1, 0.0);
    p[0] = 1.0;
    for (std::size_t j = 0; j < coef.size(); ++j)
        p[(j + 1) * static_cast<std::size_t>(lag_step)] = sign * coef[j];
    return p;
}

// a_t from Psi(B^s)Phi(B) d_t = Theta(B)Omega(B^s) a_t with zero pre-sample
// values (conditional sum of squares).
std::vector<double> innovations(const std::vector<double>& d, const std::vector<double>& arpoly,
                                const std::vector<double>& mapoly) {
    const std::size_t n = d.size();
    std::vector<double> a(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double e = 0;
        for (std::size_t k = 0; k < arpoly.size() && k <= t; ++k) e += arpoly[k] * d[t - k];
        for (std::size_t j = 1; j < mapoly.size() && j <= t; ++j) e -= mapoly[j] * a[t - j];
        a[t] = e;
    }
    return a;
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& poly) {
    // roots of 1 + c1 z + ... + cd z^d
    std::size_t deg = poly.size() - 1;
    while (deg > 0 && std::abs(poly[deg]) < 1e-14) --deg;
    if (deg == 0) return {};
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg),
                                                 static_cast<Eigen::Index>(deg));
    // companion of the reversed (monic) polynomial; its eigenvalues are the
    // reciprocals of the original roots
    for (std::size_t i = 0; i < deg; ++i)
        comp(0, static_cast<Eigen::Index>(i)) = -poly[i + 1] / poly[0];
    for (std::size_t i = 1; i < deg; ++i)
        comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<std::complex<double>> roots;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        std::complex<double> ev = es.eigenvalues()(i);
        // eigenvalues of this companion are roots of the reversed polynomial;
        // invert to get roots of the original
        if (std::abs(ev) > 1e-300) roots.push_back(1.0 / ev);
    }
    return roots;
}

std::vector<double> psi_weights(const std::vector<double>& arpoly,
                                const std::vector<double>& mapoly, int count) {
    std::vector<double> psi(static_cast<std::size_t>(count), 0.0);
    if (count == 0) return psi;
    psi[0] = 1.0;
    for (int j = 1; j < count; ++j) {
        double v = j < static_cast<int>(mapoly.size()) ? mapoly[static_cast<std::size_t>(j)] : 0.0;
        for (int k = 1; k < static_cast<int>(arpoly.size()) && k <= j; ++k)
            v -= arpoly[static_cast<std::size_t>(k)] * psi[static_cast<std::size_t>(j - k)];
        psi[static_cast<std::size_t>(j)] = v;
    }
    return psi;
}

}  // namespace

std::vector<double> SarmaxFit::ar_poly() const {
    return conv(lag_poly(phi, 1, -1.0), lag_poly(sphi, spec.season, -1.0));
}

std::vector<double> SarmaxFit::ma_poly() const {
    return conv(lag_poly(theta, 1, 1.0), lag_poly(stheta, spec.season, 1.0));
}

MeanTrajectory mean_forecast_z2(const LVacParams& params, int T, int K) {
    if (T < 1 || K < 0) throw std::invalid_argument("mean_forecast_z2: need T >= 1 and K >= 0");
    MeanTrajectory traj;
    traj.T = T;
    traj.K = K;
    traj.values.reserve(static_cast<std::size_t>(T + K));
    if (params.p2 > 0) {
        BassParams local{params.m2, params.p2, params.a2};
        for (int t = 1; t <= T + K; ++t) traj.values.push_back(bass_cumulative(local, t));
    } else {
        traj.used_integration = true;
        const double dt = 0.01;
        double z = 0;
        auto rate = [&](double x) { return (params.p2 + params.a2 * x / params.m2) * (params.m2 - x); };
        for (int t = 1; t <= T + K; ++t) {
            for (int i = 0; i < 100; ++i) {
                const double k1 = rate(z), k2 = rate(z + 0.5 * dt * k1),
                             k3 = rate(z + 0.5 * dt * k2), k4 = rate(z + dt * k3);
                z += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            }
            traj.values.push_back(z);
        }
    }
    return traj;
}

MeanTrajectory mean_forecast_z1(const LVacParams& params, std::span<const double> z1_insample,
                                const MeanTrajectory& z2, int T, int K) {
    if (static_cast<int>(z1_insample.size()) != T)
        throw std::invalid_argument("mean_forecast_z1: in-sample trajectory must cover t = 1..T");
    if (static_cast<int>(z2.values.size()) < T + K)
        throw std::invalid_argument("mean_forecast_z1: product-2 trajectory must cover t = 1..T+K");

    MeanTrajectory traj;
    traj.T = T;
    traj.K = K;
    traj.values.assign(z1_insample.begin(), z1_insample.end());
    double z1 = z1_insample.empty() ? 0.0 : z1_insample.back();
    for (int t = T; t < T + K; ++t) {
        const double z2t = z2.at(t);
        const double c1 = (params.a1 * z1 + params.b1 * z2t) / (params.m1 + params.m2) *
                          ((params.m1 - z1) + (params.m2 - z2t));
        z1 += c1;  // one-quarter Euler step
        traj.values.push_back(z1);
    }
    return traj;
}

SarmaxFit fit_sarmax(std::span<const double> observed, std::span<const double> mean_traj,
                     const SarmaxSpec& spec) {
    const int n = static_cast<int>(observed.size());
    if (static_cast<int>(mean_traj.size()) < n)
        throw std::invalid_argument("fit_sarmax: mean trajectory shorter than observations");
    const int k = spec.param_count();
    if (n <= k + 1) throw std::invalid_argument("fit_sarmax: not enough observations");

    auto unpack = [&](const Eigen::VectorXd& beta, SarmaxFit& f) {
        int i = 0;
        f.c_exog = spec.include_c ? beta(i++) : 1.0;
        f.phi.assign(spec.ar, 0.0);
        for (auto& x : f.phi) x = beta(i++);
        f.sphi.assign(spec.sar, 0.0);
        for (auto& x : f.sphi) x = beta(i++);
        f.theta.assign(spec.ma, 0.0);
        for (auto& x : f.theta) x = beta(i++);
        f.stheta.assign(spec.sma, 0.0);
        for (auto& x : f.stheta) x = beta(i++);
    };

    ResidualFn fn = [&](const Eigen::VectorXd& beta) {
        SarmaxFit f;
        f.spec = spec;
        unpack(beta, f);
        std::vector<double> d(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t)
            d[static_cast<std::size_t>(t)] =
                observed[static_cast<std::size_t>(t)] -
                f.c_exog * mean_traj[static_cast<std::size_t>(t)];
        auto a = innovations(d, f.ar_poly(), f.ma_poly());
        Eigen::VectorXd r(n);
        for (int t = 0; t < n; ++t) r(t) = a[static_cast<std::size_t>(t)];
        return r;
    };

    Eigen::VectorXd init = Eigen::VectorXd::Zero(k), lo(k), hi(k);
    int i = 0;
    if (spec.include_c) {
        init(0) = 1.0;
        lo(0) = -1e3;
        hi(0) = 1e3;
        i = 1;
    }
    for (; i < k; ++i) {
        lo(i) = -5.0;
        hi(i) = 5.0;
    }

    FitOptions options;
    NlsResult nls = fit_nls(fn, init, lo, hi, options);

    SarmaxFit fit;
    fit.spec = spec;
    unpack(nls.beta, fit);
    fit.residuals.assign(nls.residuals.begin(), nls.residuals.end());
    fit.n = n;
    fit.sse = nls.sse;
    fit.sigma2 = n > k ? nls.sse / static_cast<double>(n - k) : 0.0;
    fit.converged = nls.converged;
    fit.aicc = n * std::log(std::max(nls.sse, 1e-300) / n) + 2.0 * k +
               2.0 * k * (k + 1) / std::max(1.0, static_cast<double>(n - k - 1));

    fit.ar_roots = poly_roots(fit.ar_poly());
    fit.ma_roots = poly_roots(fit.ma_poly());
    for (const auto& r : fit.ar_roots)
        if (std::abs(r) <= 1.0 + 1e-8) fit.stationary = false;
    for (const auto& r : fit.ma_roots)
        if (std::abs(r) <= 1.0 + 1e-8) fit.invertible = false;
    return fit;
}

ForecastBand sarmax_forecast(const SarmaxFit& fit, std::span<const double> observed,
                             std::span<const double> mean_full, int K, double level) {
    if (K <= 0) throw std::invalid_argument("sarmax_forecast: K must be >= 1");
    const int T = static_cast<int>(observed.size());
    if (static_cast<int>(mean_full.size()) < T + K)
        throw std::invalid_argument("sarmax_forecast: mean trajectory must cover T+K quarters");
    if (level <= 0 || level >= 1) throw std::invalid_argument("sarmax_forecast: bad level");

    const auto arpoly = fit.ar_poly();
    const auto mapoly = fit.ma_poly();

    std::vector<double> d(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        d[static_cast<std::size_t>(t)] = observed[static_cast<std::size_t>(t)] -
                                         fit.c_exog * mean_full[static_cast<std::size_t>(t)];
    std::vector<double> a = fit.residuals.size() == static_cast<std::size_t>(T)
                                ? fit.residuals
                                : innovations(d, arpoly, mapoly);

    std::vector<double> dext = d;
    dext.resize(static_cast<std::size_t>(T + K), 0.0);
    for (int h = 1; h <= K; ++h) {
        const int t = T + h - 1;  // zero-based index of the forecast quarter
        double v = 0;
        for (int k = 1; k < static_cast<int>(arpoly.size()); ++k)
            if (t - k >= 0) v -= arpoly[static_cast<std::size_t>(k)] * dext[static_cast<std::size_t>(t - k)];
        for (int j = 1; j < static_cast<int>(mapoly.size()); ++j)
            if (t - j >= 0 && t - j < T)
                v += mapoly[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(t - j)];
        dext[static_cast<std::size_t>(t)] = v;
    }

    const auto psi = psi_weights(arpoly, mapoly, K);
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);

    ForecastBand band;
    band.sigma2 = fit.sigma2;
    double var = 0;
    for (int h = 1; h <= K; ++h) {
        var += psi[static_cast<std::size_t>(h - 1)] * psi[static_cast<std::size_t>(h - 1)] *
               fit.sigma2;
        const double point = fit.c_exog * mean_full[static_cast<std::size_t>(T + h - 1)] +
                             dext[static_cast<std::size_t>(T + h - 1)];
        const double half = z * std::sqrt(var);
        band.times.push_back(T + h);
        band.point.push_back(point);
        band.lower95.push_back(point - half);
        band.upper95.push_back(point + half);
    }
    return band;
}

SarmaxSpec select_sarmax_spec(std::span<const double> observed,
                              std::span<const double> mean_traj, int season) {
    SarmaxSpec best;
    best.season = season;
    double best_aicc = std::numeric_limits<double>::infinity();
    for (int ar = 0; ar <= 1; ++ar)
        for (int ma = 0; ma <= 1; ++ma)
            for (int sar = 0; sar <= 1; ++sar)
                for (int sma = 0; sma <= 1; ++sma) {
                    SarmaxSpec spec{ar, ma, sar, sma, season, true};
                    try {
                        SarmaxFit fit = fit_sarmax(observed, mean_traj, spec);
                        if (fit.stationary && fit.invertible && fit.aicc < best_aicc) {
                            best_aicc = fit.aicc;
                            best = spec;
                        }
                    } catch (const std::exception&) {
                    }
                }
    return best;
}

LjungBoxResult ljung_box(std::span<const double> residuals, int lags, int n_fitted_params) {
    const int n = static_cast<int>(residuals.size());
    if (lags < 1) throw std::invalid_argument("ljung_box: lags must be >= 1");
    if (n <= lags) throw std::invalid_argument("ljung_box: need more residuals than lags");

    const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
    double var = 0;
    for (double r : residuals) var += (r - mean) * (r - mean);
    if (var <= 0) throw std::domain_error("ljung_box: degenerate (constant) residuals");

    LjungBoxResult out;
    for (int k = 1; k <= lags; ++k) {
        double acov = 0;
        for (int t = k; t < n; ++t)
            acov += (residuals[static_cast<std::size_t>(t)] - mean) *
                    (residuals[static_cast<std::size_t>(t - k)] - mean);
        const double rho = acov / var;
        out.statistic += rho * rho / (n - k);
    }
    out.statistic *= n * (n + 2.0);
    out.dof = std::max(1, lags - n_fitted_params);
    out.threshold = boost::math::quantile(boost::math::chi_squared(out.dof), 0.95);
    out.pass = out.statistic < out.threshold;
    return out;
}

HoldoutResult holdout_evaluate(const SalesSeries& s1, const SalesSeries& s2, int T,
                               const SarmaxSpec& spec1, const SarmaxSpec& spec2,
                               const FitOptions& options) {
    const int n1 = static_cast<int>(s1.size());
    const int c2 = s2.quarters.front().index() - s1.quarters.front().index();
    if (T >= n1) throw std::invalid_argument("holdout_evaluate: no holdout quarters left");
    if (T <= c2 + 8) throw std::invalid_argument("holdout_evaluate: in-sample window too short");
    const int K = n1 - T;
    if (static_cast<int>(s2.size()) + c2 < n1)
        throw std::invalid_argument("holdout_evaluate: series must end on the same quarter");

    auto truncate = [](const SalesSeries& s, int len) {
        return SalesSeries::from_units(
            s.product_id, s.quarters.front(),
            std::vector<double>(s.units.begin(), s.units.begin() + len));
    };
    SalesSeries in1 = truncate(s1, T);
    SalesSeries in2 = truncate(s2, T - c2);

    // stand-alone Bass fit on the monopoly phase
    std::vector<double> t_sa, w_sa;
    for (int t = 1; t <= c2; ++t) {
        t_sa.push_back(t);
        w_sa.push_back(in1.cumulative[static_cast<std::size_t>(t - 1)]);
    }
    FitResult sa_fit = fit_bass(t_sa, w_sa, FitMode::Cumulative, options);
    BassParams standalone{sa_fit.params[0].value, sa_fit.params[1].value, sa_fit.params[2].value};

    ModelSpec lvac{ReductionCase::InverseCannibalisation, true};
    CompetitionData data = CompetitionData::from_series(in1, in2, FitMode::Instantaneous);
    FitResult fit = fit_competition(lvac, data, standalone, options);

    LVacParams params;
    params.standalone = standalone;
    params.c2 = c2;
    for (const auto& pe : fit.params) {
        if (pe.name == "a1") params.a1 = pe.value;
        else if (pe.name == "b1") params.b1 = pe.value;
        else if (pe.name == "m1") params.m1 = pe.value;
        else if (pe.name == "p2") params.p2 = pe.value;
        else if (pe.name == "a2") params.a2 = pe.value;
        else if (pe.name == "m2") params.m2 = pe.value;
    }

    const int Tc = T - c2;  // competition-phase in-sample quarters
    MeanTrajectory f2 = mean_forecast_z2(params, Tc, K);

    Trajectory traj = integrate(params.to_lvch(), T);
    std::vector<double> z1_fit;
    for (int t = c2 + 1; t <= T; ++t) z1_fit.push_back(traj.z1[static_cast<std::size_t>(t)]);
    MeanTrajectory f1 = mean_forecast_z1(params, z1_fit, f2, Tc, K);

    std::vector<double> w1, w2;
    for (int t = c2 + 1; t <= T; ++t) w1.push_back(s1.cumulative[static_cast<std::size_t>(t - 1)]);
    for (int i = 0; i < Tc; ++i) w2.push_back(s2.cumulative[static_cast<std::size_t>(i)]);

    HoldoutResult result;
    result.T = T;
    auto score = [&](HoldoutProduct& hp, const std::vector<double>& w,
                     const MeanTrajectory& f, const SarmaxSpec& spec,
                     const std::vector<double>& actual_full, int offset) {
        SarmaxFit sfit = fit_sarmax(w, f.values, spec);
        ForecastBand band = sarmax_forecast(sfit, w, f.values, K);
        for (int h = 0; h < K; ++h) {
            const double actual = actual_full[static_cast<std::size_t>(offset + h)];
            hp.actual.push_back(actual);
            hp.point.push_back(band.point[static_cast<std::size_t>(h)]);
            hp.abs_error.push_back(std::abs(actual - band.point[static_cast<std::size_t>(h)]));
            hp.pct_error.push_back(actual != 0 ? hp.abs_error.back() / std::abs(actual) * 100.0
                                               : 0.0);
            hp.within_band.push_back(actual >= band.lower95[static_cast<std::size_t>(h)] &&
                                     actual <= band.upper95[static_cast<std::size_t>(h)]);
        }
    };
    score(result.product1, w1, f1, spec1, s1.cumulative, T);
    score(result.product2, w2, f2, spec2, s2.cumulative, Tc);
    return result;
}

}  // namespace cannlv
