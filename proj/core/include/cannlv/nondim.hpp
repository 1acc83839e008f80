#ifndef CANNLV_NONDIM_HPP
#define CANNLV_NONDIM_HPP

#include <string>
#include <utility>

#include "cannlv/models.hpp"

namespace cannlv {

/// Reduced parameter triple of the rescaled LVac system plus the scale
/// factors that map back to dimensional states.
struct NonDimParams {
    double v = 0;    // a1 / b1
    double s = 0;    // m2 / m1
    double r = 0;    // p2 / a2
    double t0 = 0;   // 1 / a2, quarters
    double z10 = 0;  // m1
    double z20 = 0;  // m2
};

/// The peak-fraction expression exists in two published forms that disagree
/// for F2 > 0; both are provided.
enum class PeakFormula {
    Literal,       // 1/2 + (s/2)(1 - F2 - F2/v)
    PaperNumeric,  // 1/2 + (s/2)(1 + (|v| - 1) F2)
};

struct PeakReport {
    double x1_hat = 0;       // peak fraction at f2_at_peak
    double z1_hat = 0;       // m1 * x1_hat
    double f2_at_peak = 0;
    std::pair<double, double> interval;          // x1_hat range over F2 in [0,1]
    std::pair<double, double> interval_literal;  // same, Literal formula
    PeakFormula formula_mode = PeakFormula::Literal;
    bool formula_discrepancy = false;  // the two formulas disagree beyond 1e-9
    double delay_vs_monopoly = 0;      // x1_hat - 1/2
    double simulated_peak_fraction = 0;  // argmax of the integrated rate, as z1/m1
    double simulated_peak_time = 0;      // quarters from launch
};

NonDimParams to_nondim(const LVacParams& params);  // requires b1 != 0, a2 > 0

/// Right-hand sides of the three-parameter system
/// x1' = (v x1 + s x2)[(1-x1) + s(1-x2)],  x2' = (r + x2)(1 - x2).
std::pair<double, double> nondim_rates(const NonDimParams& nd, double x1, double x2);

/// Riccati/Bass closed form of the x2 equation:
/// F2(tau) = (1 - e^{-(r+1)tau}) / (1 + (1/r) e^{-(r+1)tau}). Requires r > 0.
double riccati_f2(double r, double tau);

double peak_fraction(double v, double s, double f2, PeakFormula mode);

/// Dimensional peak condition z1_hat = m1/2 + (m2/2)(1 - F2 - F2/v).
double peak_value(double m1, double m2, double v, double f2);

/// Brackets the peak fraction over F2 in [0, 1] in both formula modes and
/// cross-checks against the simulated rate peak of the integrated system.
PeakReport peak_delay_report(const LVacParams& params, PeakFormula mode = PeakFormula::Literal);

}  // namespace cannlv

#endif
