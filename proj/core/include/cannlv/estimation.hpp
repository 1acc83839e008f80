#ifndef CANNLV_ESTIMATION_HPP
#define CANNLV_ESTIMATION_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cannlv/models.hpp"
#include "cannlv/series.hpp"

namespace cannlv {

enum class FitMode { Instantaneous, Cumulative };

std::string to_string(FitMode m);

/// One stacked data point: quarter index, product (1 or 2), observed value in
/// the active fit mode.
struct Observation {
    double t = 0;
    int product = 1;
    double w = 0;
};

/// Which member of the model family is being fitted. LVac is
/// InverseCannibalisation with p1 fixed at zero.
struct ModelSpec {
    ReductionCase reduction = ReductionCase::FullLVch;
    bool fix_p1_zero = false;

    std::string name() const;
    std::vector<std::string> param_names() const;
    int free_param_count() const { return static_cast<int>(param_names().size()); }

    /// Expands a free-parameter vector into full LVch parameters; fixed
    /// entries (alphas per Table-type reduction, absent b's) are filled in.
    LVchParams unpack(const Eigen::VectorXd& beta, const BassParams& standalone, int c2,
                      bool unconstrained_alpha = false) const;
    Eigen::VectorXd pack(const LVchParams& params) const;
};

/// Competition-phase observations for a joint two-product fit, stacked as a
/// product-1 block followed by a product-2 block.
struct CompetitionData {
    std::vector<Observation> obs;
    int c2 = 1;
    FitMode mode = FitMode::Instantaneous;
    int t_max = 0;

    /// Stacks the full product-1 series (stand-alone phase included, with the
    /// stand-alone parameters held fixed during competition fits) ahead of
    /// the product-2 block. c2 is the quarter offset between the two launch
    /// dates; product-2 observations start at t = c2 + 1.
    static CompetitionData from_series(const SalesSeries& s1, const SalesSeries& s2,
                                       FitMode mode);
};

struct ParamEstimate {
    std::string name;
    double value = 0;
    double lower95 = 0, upper95 = 0;
    double se = 0;
    bool unstable = false;  // rank-deficient normal equations at this parameter
};

struct FitResult {
    std::vector<ParamEstimate> params;
    std::vector<double> residuals;
    double sse = 0;
    double r2 = 0;
    double dw = 0;
    int n_obs = 0;
    int n_params = 0;
    bool converged = false;
    FitMode fit_mode = FitMode::Instantaneous;
    std::vector<double> sse_trace;  // accepted-step objective values
    ModelSpec spec;

    Eigen::VectorXd beta() const;
};

enum class Verdict { ExtendedSignificant, ReducedAccepted };

struct ModelComparison {
    double r2_reduced = 0, r2_extended = 0;
    double r2_partial = 0;
    double f_ratio = 0;
    int n = 0;  // stacked observations
    int v = 0;  // extended-model parameter count
    int u = 0;  // incremental parameter count
    Verdict verdict = Verdict::ReducedAccepted;
};

struct FitOptions {
    int max_iter = 500;
    double tol = 1e-10;
    double lambda0 = 1e-3;
    bool unconstrained = false;  // lift the alpha/p box constraints
    double dt = 0.01;            // integrator step used for model predictions
    std::optional<Eigen::VectorXd> init;
};

// ---- generic Levenberg-Marquardt ----

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct NlsResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;  // at the solution
    double sse = 0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> sse_trace;
};

/// Box-constrained Levenberg-Marquardt with forward-difference Jacobian.
/// Damping starts at options.lambda0, x10 on a rejected step, /10 on an
/// accepted one; stops when the relative SSE decrease falls below
/// options.tol or max_iter is reached.
NlsResult fit_nls(const ResidualFn& fn, const Eigen::VectorXd& init,
                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                  const FitOptions& options = {});

Eigen::MatrixXd forward_difference_jacobian(const ResidualFn& fn, const Eigen::VectorXd& beta,
                                            const Eigen::VectorXd& r0);

// ---- model fits ----

/// Residuals (observed - predicted) for the given free-parameter vector,
/// stacked product-1 block then product-2 block. Validates parameters first.
Eigen::VectorXd stack_residuals(const ModelSpec& spec, const CompetitionData& data,
                                const BassParams& standalone, const Eigen::VectorXd& beta,
                                double dt = 0.01);

/// Joint NLS fit of the competition phase; the stand-alone parameters and c2
/// stay fixed. Default initialization is seeded from per-product Bass fits.
FitResult fit_competition(const ModelSpec& spec, const CompetitionData& data,
                          const BassParams& standalone, const FitOptions& options = {});

/// Bass fit on a single series of (t, w) pairs; cumulative mode fits the
/// closed form, instantaneous mode fits its first differences.
FitResult fit_bass(const std::vector<double>& t, const std::vector<double>& w,
                   FitMode mode = FitMode::Cumulative, const FitOptions& options = {});

// ---- diagnostics ----

double r_squared(const std::vector<double>& residuals, const std::vector<double>& observed);
double partial_r_squared(double r2_reduced, double r2_extended);
double f_ratio(double r2_partial, int n, int v, int u);
double durbin_watson(const std::vector<double>& residuals);

/// beta_i +- 1.96 se_i with se_i^2 = s^2 [(J'J)^-1]_ii, s^2 = SSE/(n - v).
/// Rank-deficient J'J falls back to a pseudo-inverse and flags the affected
/// parameters.
std::vector<ParamEstimate> confidence_intervals(const Eigen::MatrixXd& jacobian,
                                                const Eigen::VectorXd& residuals,
                                                const Eigen::VectorXd& beta,
                                                const std::vector<std::string>& names);

ModelComparison compare_nested(const FitResult& reduced, const FitResult& extended);

// ---- model selection ----

struct LadderEntry {
    ModelSpec spec;
    FitResult fit;
    std::optional<ModelComparison> vs_full;
    bool failed = false;
    std::string error;
};

struct SelectionReport {
    std::vector<LadderEntry> entries;  // entries[0] is the full/extended model
    int selected = 0;                  // index into entries
};

/// Fits every candidate (the first is the extended reference model) and
/// compares each reduction against it. Among reductions whose extension is
/// not significant, the most parsimonious wins; ties break on R^2. If none
/// survives, the full model is selected.
SelectionReport selection_ladder(const CompetitionData& data, const BassParams& standalone,
                                 const std::vector<ModelSpec>& candidates,
                                 const FitOptions& options = {});

}  // namespace cannlv

#endif
