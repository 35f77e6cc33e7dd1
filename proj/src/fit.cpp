#include "difftrend/fit.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "difftrend/special.hpp"

namespace difftrend {

namespace {

std::vector<double> logspace(double lo, double hi, int count) {
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    return out;
}

}  // namespace

InitializerGrid InitializerGrid::defaults() {
    InitializerGrid grid;
    for (double p : logspace(1e-4, 1e-1, 7))
        for (double ratio : logspace(1.0, 100.0, 5)) grid.bass.emplace_back(p, p * ratio);
    for (double beta : logspace(1e-3, 0.3, 7))
        for (double eta : logspace(0.1, 100.0, 5)) grid.sgompertz.emplace_back(beta, eta);
    for (double kappa : logspace(0.5, 4.0, 6))
        for (double factor : logspace(0.1, 2.0, 5)) grid.weibull.emplace_back(kappa, factor);
    return grid;
}

std::vector<Eigen::Vector2d> InitializerGrid::candidates(Family family, double t_last) const {
    switch (family) {
        case Family::Bass: return bass;
        case Family::ShiftedGompertz: return sgompertz;
        case Family::Weibull: {
            std::vector<Eigen::Vector2d> out;
            out.reserve(weibull.size());
            for (const auto& c : weibull) out.emplace_back(c[0], c[1] * t_last);
            return out;
        }
    }
    throw std::logic_error("candidates: bad family");
}

BinProbs bin_probabilities(const Model& model, const Eigen::ArrayXd& bin_edges) {
    const auto m = bin_edges.size() - 1;
    if (m < 1) throw std::invalid_argument("bin_probabilities: need at least two edges");
    for (Eigen::Index i = 0; i < m; ++i)
        if (!(bin_edges[i + 1] > bin_edges[i]))
            throw std::invalid_argument("bin_probabilities: edges must be strictly increasing");

    // Per-bin mass as F(t_i) - F(t_{i-1}) while the cdf is small, switching
    // to S(t_{i-1}) - S(t_i) once past the median so deep-tail bins are not
    // swallowed by 1 - F rounding to 0.
    Eigen::ArrayXd mass(m);
    double cdf_left = model.cdf(bin_edges[0]);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double cdf_right = model.cdf(bin_edges[i + 1]);
        double g;
        if (cdf_left <= 0.5) {
            g = cdf_right - cdf_left;
        } else {
            g = model.survival(bin_edges[i]) - model.survival(bin_edges[i + 1]);
        }
        mass[i] = std::max(g, 0.0);
        cdf_left = cdf_right;
    }

    const double window_mass = mass.sum();
    if (!(window_mass >= 1e-12))
        throw std::runtime_error("bin_probabilities: degenerate truncation mass");
    return {mass / window_mass, window_mass};
}

namespace {

// d p_i / d theta, where p_i is the renormalized bin mass. With
// g_i = F(t_i) - F(t_{i-1}) and M the window mass:
//   d p_i = (d g_i - p_i * d M) / M,   d M = sum_j d g_j.
Eigen::MatrixX2d prob_jacobian(const Model& model, const Eigen::ArrayXd& bin_edges,
                               const BinProbs& bp) {
    const auto m = bin_edges.size() - 1;
    Eigen::MatrixX2d jac(m, 2);
    Eigen::Vector2d left = model.cdf_grad(bin_edges[0]);
    const Eigen::Vector2d first = left;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Vector2d right = model.cdf_grad(bin_edges[i + 1]);
        jac.row(i) = (right - left).transpose();
        left = right;
    }
    const Eigen::Vector2d total = left - first;  // gradient of the window mass
    for (Eigen::Index i = 0; i < m; ++i)
        jac.row(i) = (jac.row(i) - bp.probs[i] * total.transpose()) / bp.truncation_mass;
    return jac;
}

Eigen::ArrayXd irls_weights(double n, const Eigen::ArrayXd& probs, double floor) {
    return ((n * probs).max(floor)).inverse();
}

double weighted_rss(const Eigen::ArrayXd& counts, double n, const Eigen::ArrayXd& probs,
                    const Eigen::ArrayXd& weights) {
    return ((counts - n * probs).square() * weights).sum();
}

int family_preference(Family family) {
    switch (family) {
        case Family::ShiftedGompertz: return 0;
        case Family::Bass: return 1;
        case Family::Weibull: return 2;
    }
    return 3;
}

}  // namespace

MergedBins merge_bins(const Eigen::ArrayXd& observed, const Eigen::ArrayXd& expected,
                      double min_expected) {
    if (observed.size() != expected.size())
        throw std::invalid_argument("merge_bins: length mismatch");
    std::vector<double> merged_obs, merged_exp;
    double acc_obs = 0.0, acc_exp = 0.0;
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
        acc_obs += observed[i];
        acc_exp += expected[i];
        if (acc_exp >= min_expected) {
            merged_obs.push_back(acc_obs);
            merged_exp.push_back(acc_exp);
            acc_obs = acc_exp = 0.0;
        }
    }
    if (acc_obs > 0.0 || acc_exp > 0.0) {
        if (merged_exp.empty()) {
            merged_obs.push_back(acc_obs);
            merged_exp.push_back(acc_exp);
        } else {
            merged_obs.back() += acc_obs;
            merged_exp.back() += acc_exp;
        }
    }
    MergedBins out;
    out.observed = Eigen::Map<const Eigen::ArrayXd>(merged_obs.data(), merged_obs.size());
    out.expected = Eigen::Map<const Eigen::ArrayXd>(merged_exp.data(), merged_exp.size());
    return out;
}

FitResult fit(const PreparedSeries& series, Family family, const FitConfig& config,
              FitTrace* trace) {
    if (config.max_iterations < 1 || config.max_step_halvings < 0)
        throw std::invalid_argument("fit: bad iteration limits");
    if (!(config.param_tolerance > 0.0) || !(config.objective_tolerance > 0.0) ||
        !(config.weight_floor > 0.0) || !(config.damping >= 0.0))
        throw std::invalid_argument("fit: tolerances and weight_floor must be positive");

    const Eigen::ArrayXd& counts = series.counts;
    const Eigen::ArrayXd& edges = series.bin_edges;
    const auto m = counts.size();
    if (m < 4) throw std::invalid_argument("fit: need at least 4 bins");
    if (edges.size() != m + 1) throw std::invalid_argument("fit: edge/count size mismatch");
    const double n = series.total();
    if (!(n > 0.0)) throw std::invalid_argument("fit: series total must be positive");
    if ((counts > 0.0).count() < 2)
        throw std::runtime_error("fit: degenerate series, fewer than two nonzero bins");

    // Seed from the grid candidate with the lowest weighted RSS under its
    // own implied weights. Candidates that reject their parameters or put no
    // mass in the window are skipped.
    const auto candidates = config.grid.candidates(family, edges[edges.size() - 1]);
    if (candidates.empty()) throw std::invalid_argument("fit: empty initializer grid");
    Eigen::Vector2d theta;
    double seed_obj = std::numeric_limits<double>::infinity();
    for (const auto& candidate : candidates) {
        try {
            const Model model(family, candidate[0], candidate[1]);
            const BinProbs bp = bin_probabilities(model, edges);
            const Eigen::ArrayXd w = irls_weights(n, bp.probs, config.weight_floor);
            const double obj = weighted_rss(counts, n, bp.probs, w);
            if (obj < seed_obj) {
                seed_obj = obj;
                theta = candidate;
            }
        } catch (const std::exception&) {
            // unusable starting point
        }
    }
    if (!std::isfinite(seed_obj))
        throw std::runtime_error("fit: no usable initializer for family " +
                                 std::string(family_name(family)));

    BinProbs bp = bin_probabilities(Model(family, theta[0], theta[1]), edges);
    Eigen::ArrayXd weights = irls_weights(n, bp.probs, config.weight_floor);
    double objective = weighted_rss(counts, n, bp.probs, weights);

    Eigen::Vector2d best_theta = theta;
    double best_objective = objective;
    bool converged = false;
    int iterations = 0;
    if (trace) {
        trace->initial = theta;
        trace->objective_before.clear();
        trace->objective_after.clear();
        trace->theta_path.clear();
    }

    for (int it = 0; it < config.max_iterations; ++it) {
        // One Gauss-Newton step on the frozen-weight objective, in log
        // parameter space so positivity needs no constraints.
        const Model model(family, theta[0], theta[1]);
        const Eigen::MatrixX2d dprob = prob_jacobian(model, edges, bp);
        Eigen::MatrixX2d jac = n * dprob;
        jac.col(0) *= theta[0];
        jac.col(1) *= theta[1];
        const Eigen::ArrayXd residual = counts - n * bp.probs;
        const Eigen::Matrix2d normal = jac.transpose() * weights.matrix().asDiagonal() * jac +
                                       config.damping * Eigen::Matrix2d::Identity();
        const Eigen::Vector2d rhs =
            jac.transpose() * (weights * residual).matrix();
        Eigen::Vector2d step = normal.ldlt().solve(rhs);
        // One step may multiply a parameter by at most e^5; the halving loop
        // handles the rest. Keeps exp() from overflowing on wild steps.
        step = step.cwiseMax(-5.0).cwiseMin(5.0);

        bool accepted = false;
        Eigen::Vector2d next;
        BinProbs next_bp;
        double next_objective = 0.0;
        for (int halving = 0; halving <= config.max_step_halvings; ++halving) {
            const Eigen::Vector2d trial =
                (theta.array().log() + step.array() * std::exp2(-halving)).exp().matrix();
            try {
                const Model trial_model(family, trial[0], trial[1]);
                const BinProbs trial_bp = bin_probabilities(trial_model, edges);
                const double trial_objective = weighted_rss(counts, n, trial_bp.probs, weights);
                if (trial_objective < objective) {
                    next = trial;
                    next_bp = trial_bp;
                    next_objective = trial_objective;
                    accepted = true;
                    break;
                }
            } catch (const std::exception&) {
                // invalid or degenerate trial point; halve and retry
            }
        }
        if (!accepted) break;  // no descent direction left at this scale

        ++iterations;
        const double rel_change =
            ((next - theta).cwiseAbs().array() / theta.array()).maxCoeff();
        const bool gain_exhausted =
            objective - next_objective <= config.objective_tolerance * std::max(1.0, objective);
        if (trace) {
            trace->objective_before.push_back(objective);
            trace->objective_after.push_back(next_objective);
            trace->theta_path.push_back(next);
        }

        theta = next;
        bp = next_bp;
        weights = irls_weights(n, bp.probs, config.weight_floor);
        objective = weighted_rss(counts, n, bp.probs, weights);
        if (objective < best_objective) {
            best_objective = objective;
            best_theta = theta;
        }
        if (rel_change <= config.param_tolerance || gain_exhausted) {
            converged = true;
            break;
        }
    }

    if (!converged) {
        theta = best_theta;
        bp = bin_probabilities(Model(family, theta[0], theta[1]), edges);
    }

    // Goodness of fit on bins merged until every expected count reaches 1;
    // the estimator above never sees the merged cells.
    const MergedBins merged = merge_bins(counts, n * bp.probs, 1.0);
    if (merged.observed.size() < 4)
        throw std::runtime_error("fit: too few populated bins after merging for goodness of fit");
    const double statistic =
        ((merged.observed - merged.expected).square() / merged.expected).sum();
    const int dof = static_cast<int>(merged.observed.size()) - 3;

    FitResult result;
    result.family = family;
    result.theta1 = theta[0];
    result.theta2 = theta[1];
    result.rss_weighted = statistic;
    result.dof = dof;
    result.p_value = chi2_survival(statistic, dof);
    result.iterations = iterations;
    result.converged = converged;
    result.truncation_mass = bp.truncation_mass;
    return result;
}

const FitResult& FitAll::best_result() const {
    for (const FitResult& r : results)
        if (r.family == best) return r;
    throw std::logic_error("FitAll: best family missing from results");
}

bool fit_better(const FitResult& a, const FitResult& b) {
    if (a.p_value != b.p_value) return a.p_value > b.p_value;
    if (a.rss_weighted != b.rss_weighted) return a.rss_weighted < b.rss_weighted;
    return family_preference(a.family) < family_preference(b.family);
}

FitAll fit_all(const PreparedSeries& series, const FitConfig& config) {
    FitAll all;
    for (Family family : {Family::Bass, Family::ShiftedGompertz, Family::Weibull}) {
        try {
            all.results.push_back(fit(series, family, config));
        } catch (const std::exception& err) {
            all.failures.emplace_back(family, err.what());
        }
    }
    if (all.results.empty()) {
        std::string what = "fit_all: every family failed:";
        for (const auto& [family, message] : all.failures)
            what += "\n  " + std::string(family_name(family)) + ": " + message;
        throw std::runtime_error(what);
    }
    const FitResult* best = &all.results.front();
    for (const FitResult& r : all.results)
        if (fit_better(r, *best)) best = &r;
    all.best = best->family;
    return all;
}

void to_json(nlohmann::json& j, const FitRecord& r) {
    j = nlohmann::json{
        {"service", r.service},
        {"region", r.region},
        {"family", std::string(family_name(r.result.family))},
        {"theta1", r.result.theta1},
        {"theta2", r.result.theta2},
        {"rss", r.result.rss_weighted},
        {"dof", r.result.dof},
        {"p_value", r.result.p_value},
        {"converged", r.result.converged},
        {"truncation_mass", r.result.truncation_mass},
    };
}

void from_json(const nlohmann::json& j, FitRecord& r) {
    j.at("service").get_to(r.service);
    j.at("region").get_to(r.region);
    r.result.family = family_from_name(j.at("family").get<std::string>());
    j.at("theta1").get_to(r.result.theta1);
    j.at("theta2").get_to(r.result.theta2);
    j.at("rss").get_to(r.result.rss_weighted);
    j.at("dof").get_to(r.result.dof);
    j.at("p_value").get_to(r.result.p_value);
    j.at("converged").get_to(r.result.converged);
    j.at("truncation_mass").get_to(r.result.truncation_mass);
    r.result.iterations = j.value("iterations", 0);
}

}  // namespace difftrend
