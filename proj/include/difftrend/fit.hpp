#pragma once

#include <Eigen/Core>

#include <json.hpp>

#include <string>
#include <vector>

#include "difftrend/models.hpp"
#include "difftrend/series.hpp"

namespace difftrend {

/// Starting points tried before iterating; the best one (lowest weighted
/// residual sum of squares under its own weights) seeds the optimizer.
/// Weibull scales are stored as factors of the last bin edge so one grid
/// serves series of any length.
struct InitializerGrid {
    std::vector<Eigen::Vector2d> bass;       ///< (p, q)
    std::vector<Eigen::Vector2d> sgompertz;  ///< (beta, eta)
    std::vector<Eigen::Vector2d> weibull;    ///< (kappa, lambda / last edge)

    /// Log-spaced default lattice: Bass p over [1e-4, 1e-1] (7) crossed with
    /// q/p over [1, 100] (5); shifted Gompertz beta over [1e-3, 0.3] (7)
    /// crossed with eta over [0.1, 100] (5); Weibull kappa over [0.5, 4] (6)
    /// crossed with lambda over [0.1, 2] x last-edge (5).
    static InitializerGrid defaults();

    /// Concrete (theta1, theta2) candidates for one family; `t_last` is the
    /// last bin edge, used to materialize Weibull scales.
    std::vector<Eigen::Vector2d> candidates(Family family, double t_last) const;
};

struct FitConfig {
    int max_iterations = 100;
    double param_tolerance = 1e-8;      ///< stop when max relative step falls below
    double objective_tolerance = 1e-10; ///< stop when a step gains less than this (relative)
    double weight_floor = 0.5;          ///< minimum n*p_i inside the weights
    double damping = 0.0;               ///< ridge added to the Gauss-Newton normal equations
    int max_step_halvings = 20;
    InitializerGrid grid = InitializerGrid::defaults();
};

/// Bin masses renormalized to the observation window.
struct BinProbs {
    Eigen::ArrayXd probs;    ///< non-negative, sums to 1
    double truncation_mass;  ///< F(last edge) - F(first edge)
};

/// cdf differences over the bins, divided by the window mass so they sum to
/// one. Tail bins are computed as survival differences to dodge 1-F
/// cancellation. Throws std::runtime_error when the window mass is below
/// 1e-12 (the model puts essentially nothing where the data lives).
BinProbs bin_probabilities(const Model& model, const Eigen::ArrayXd& bin_edges);

struct FitResult {
    Family family = Family::ShiftedGompertz;
    double theta1 = 0.0;
    double theta2 = 0.0;
    /// Pearson statistic at the solution, on bins merged until every
    /// expected count reaches 1 — the quantity referred to the chi-square
    /// distribution below.
    double rss_weighted = 0.0;
    int dof = 0;             ///< merged bin count minus one minus two parameters
    double p_value = 0.0;    ///< chi2_survival(rss_weighted, dof)
    int iterations = 0;      ///< accepted Gauss-Newton steps
    bool converged = false;
    double truncation_mass = 0.0;

    Model model() const { return {family, theta1, theta2}; }
};

/// Per-step diagnostics, filled when a trace pointer is handed to fit().
struct FitTrace {
    Eigen::Vector2d initial = Eigen::Vector2d::Zero();
    std::vector<double> objective_before;      ///< frozen-weight objective entering each step
    std::vector<double> objective_after;       ///< same objective after the accepted step
    std::vector<Eigen::Vector2d> theta_path;   ///< parameters after each accepted step
};

/// Maximum-likelihood fit of one family to a prepared series, via
/// iteratively reweighted least squares: weights w_i = 1 / max(n p_i,
/// weight_floor) are frozen, one damped Gauss-Newton step is taken on
/// sum_i w_i (y_i - n p_i(theta))^2 in log-parameter space (step halved
/// until that frozen objective decreases), then weights are refreshed.
/// Non-convergence is reported, not thrown: converged=false with the best
/// parameters seen. Throws on degenerate data (fewer than 4 bins, fewer
/// than two nonzero bins, no usable initializer).
FitResult fit(const PreparedSeries& series, Family family, const FitConfig& config = {},
              FitTrace* trace = nullptr);

/// Observed/expected counts after merging adjacent bins left to right until
/// every expected count reaches min_expected (a trailing short group joins
/// its left neighbour). Exposed for the goodness-of-fit path and its tests.
struct MergedBins {
    Eigen::ArrayXd observed;
    Eigen::ArrayXd expected;
};
MergedBins merge_bins(const Eigen::ArrayXd& observed, const Eigen::ArrayXd& expected,
                      double min_expected = 1.0);

/// Ordering used to crown a best family: higher p-value wins, ties go to
/// the lower statistic, then to shifted Gompertz over Bass over Weibull.
bool fit_better(const FitResult& a, const FitResult& b);

struct FitAll {
    std::vector<FitResult> results;                        ///< families that fit
    std::vector<std::pair<Family, std::string>> failures;  ///< families that threw
    Family best = Family::ShiftedGompertz;

    const FitResult& best_result() const;
};

/// Fits all three families and tags the best by p-value; ties go to the
/// lower statistic, then to shifted Gompertz. Throws only when every family
/// fails.
FitAll fit_all(const PreparedSeries& series, const FitConfig& config = {});

/// A fit result tied back to its series, as persisted by the batch driver.
struct FitRecord {
    std::string service;
    std::string region;
    FitResult result;
};

void to_json(nlohmann::json& j, const FitRecord& r);
void from_json(const nlohmann::json& j, FitRecord& r);

}  // namespace difftrend
