#include "cannlv/nondim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cannlv {

NonDimParams to_nondim(const LVacParams& params) {
    if (params.b1 == 0)
        throw std::domain_error(
            "to_nondim: b1 = 0 leaves v undefined (no cross word-of-mouth coupling)");
    if (params.a2 <= 0) throw std::domain_error("to_nondim: requires a2 > 0");
    if (params.m1 <= 0 || params.m2 <= 0) throw std::domain_error("to_nondim: requires m1, m2 > 0");
    NonDimParams nd;
    nd.v = params.a1 / params.b1;
    nd.s = params.m2 / params.m1;
    nd.r = params.p2 / params.a2;
    nd.t0 = 1.0 / params.a2;
    nd.z10 = params.m1;
    nd.z20 = params.m2;
    return nd;
}

std::pair<double, double> nondim_rates(const NonDimParams& nd, double x1, double x2) {
    const double x1p = (nd.v * x1 + nd.s * x2) * ((1.0 - x1) + nd.s * (1.0 - x2));
    const double x2p = (nd.r + x2) * (1.0 - x2);
    return {x1p, x2p};
}

double riccati_f2(double r, double tau) {
    if (r <= 0) throw std::domain_error("riccati_f2: requires r > 0");
    if (tau < 0) throw std::domain_error("riccati_f2: requires tau >= 0");
    const double e = std::exp(-(r + 1.0) * tau);
    return (1.0 - e) / (1.0 + e / r);
}

double peak_fraction(double v, double s, double f2, PeakFormula mode) {
    if (v == 0) throw std::domain_error("peak_fraction: requires v != 0");
    if (mode == PeakFormula::Literal) return 0.5 + 0.5 * s * (1.0 - f2 - f2 / v);
    return 0.5 + 0.5 * s * (1.0 + (std::abs(v) - 1.0) * f2);
}

double peak_value(double m1, double m2, double v, double f2) {
    if (v == 0) throw std::domain_error("peak_value: requires v != 0");
    return 0.5 * m1 + 0.5 * m2 * (1.0 - f2 - f2 / v);
}

PeakReport peak_delay_report(const LVacParams& params, PeakFormula mode) {
    params.validate();
    PeakReport report;
    report.formula_mode = mode;

    double v = 0, s = params.m2 / params.m1;
    if (params.b1 != 0) {
        v = params.a1 / params.b1;
    } else {
        // no cross coupling: both formulas collapse to the within-WOM peak
        v = std::numeric_limits<double>::infinity();
    }

    auto frac = [&](double f2, PeakFormula m) {
        if (!std::isfinite(v)) return 0.5 + 0.5 * s * (1.0 - f2);
        return peak_fraction(v, s, f2, m);
    };

    auto bracket = [&](PeakFormula m) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 1000; ++i) {
            const double x = frac(i / 1000.0, m);
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return std::pair<double, double>{lo, hi};
    };
    report.interval = bracket(mode);
    report.interval_literal = bracket(PeakFormula::Literal);
    const auto paper_numeric = bracket(PeakFormula::PaperNumeric);
    report.formula_discrepancy =
        std::abs(report.interval_literal.first - paper_numeric.first) > 1e-9 ||
        std::abs(report.interval_literal.second - paper_numeric.second) > 1e-9;

    // Simulated rate peak of the dimensional system, for cross-validation.
    // With b1 < 0 the trajectory can legitimately run off to -inf well after
    // the rate peak; shrink the horizon to the last integrable quarter.
    int horizon = params.c2 + 200;
    Trajectory traj;
    for (;;) {
        try {
            traj = integrate(params, horizon);
            break;
        } catch (const IntegrationError& e) {
            const int reachable = static_cast<int>(e.time()) - 1;
            if (reachable <= params.c2 || reachable >= horizon)
                throw;
            horizon = reachable;
        }
    }
    std::size_t best = 1;
    for (std::size_t t = 1; t < traj.rates1.size(); ++t)
        if (traj.rates1[t] > traj.rates1[best]) best = t;
    report.simulated_peak_time = traj.times[best];
    report.simulated_peak_fraction = traj.z1[best] / params.m1;

    // Report the peak at the F2 level reached at the simulated peak time.
    double f2_peak = 1.0;
    if (params.p2 > 0) {
        const double tau = (report.simulated_peak_time - params.c2) * params.a2;
        f2_peak = tau > 0 ? riccati_f2(params.p2 / params.a2, tau) : 0.0;
    }
    report.f2_at_peak = f2_peak;
    report.x1_hat = frac(f2_peak, mode);
    report.z1_hat = params.m1 * report.x1_hat;
    report.delay_vs_monopoly = report.x1_hat - 0.5;
    return report;
}

}  // namespace cannlv
