#include "difftrend/models.hpp"

#include <cmath>
#include <stdexcept>

namespace difftrend {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

[[noreturn]] void reject(const std::string& what) { throw std::invalid_argument(what); }

void require_time(double t) {
    if (!(t >= 0.0)) throw std::domain_error("model: t must be >= 0");
}

}  // namespace

std::string_view family_name(Family family) {
    switch (family) {
        case Family::Bass: return "bass";
        case Family::ShiftedGompertz: return "sg";
        case Family::Weibull: return "weibull";
    }
    throw std::logic_error("family_name: bad enum value");
}

Family family_from_name(std::string_view name) {
    if (name == "bass") return Family::Bass;
    if (name == "sg") return Family::ShiftedGompertz;
    if (name == "weibull") return Family::Weibull;
    throw std::invalid_argument("unknown model family: " + std::string(name));
}

BassParams::BassParams(double p_, double q_) : p(p_), q(q_) {
    if (!finite_positive(p)) reject("bass: p must be positive and finite");
    if (!(std::isfinite(q) && q >= 0.0)) reject("bass: q must be >= 0 and finite");
}

ShiftedGompertzParams::ShiftedGompertzParams(double beta_, double eta_)
    : beta(beta_), eta(eta_) {
    if (!finite_positive(beta)) reject("sgompertz: beta must be positive and finite");
    if (!(std::isfinite(eta) && eta >= 0.0)) reject("sgompertz: eta must be >= 0 and finite");
}

WeibullParams::WeibullParams(double kappa_, double lambda_)
    : kappa(kappa_), lambda(lambda_) {
    if (!finite_positive(kappa)) reject("weibull: kappa must be positive and finite");
    if (!finite_positive(lambda)) reject("weibull: lambda must be positive and finite");
    if (!finite_positive(rate()))
        reject("weibull: rate (1/lambda)^kappa overflows or underflows");
}

double WeibullParams::rate() const { return std::exp(-kappa * std::log(lambda)); }

CompoundLink::CompoundLink(double beta_, double sigma_) : beta(beta_), sigma(sigma_) {
    if (!finite_positive(beta)) reject("compound: beta must be positive and finite");
    if (!finite_positive(sigma)) reject("compound: sigma must be positive and finite");
}

BassParams compound_bass_from_sg(const CompoundLink& link) {
    const double p = link.beta / (1.0 + link.sigma);
    return {p, p * link.sigma};
}

// --- Bass ---
//
// With E = exp(-(p+q)t) and c = q/p:
//   F(t) = (1 - E) / (1 + cE)
//   f(t) = ((p+q)^2 / p) E / (1 + cE)^2
// Both stay well behaved as E underflows (late t: F -> 1, f -> 0) and when
// q = 0 (c = 0, plain exponential).

double bass_pdf(double t, const BassParams& params) {
    require_time(t);
    const double pq = params.p + params.q;
    const double E = std::exp(-pq * t);
    const double c = params.q / params.p;
    const double denom = 1.0 + c * E;
    return (pq * pq / params.p) * E / (denom * denom);
}

double bass_cdf(double t, const BassParams& params) {
    require_time(t);
    const double pq = params.p + params.q;
    const double E = std::exp(-pq * t);
    const double c = params.q / params.p;
    return (1.0 - E) / (1.0 + c * E);
}

double bass_survival(double t, const BassParams& params) {
    require_time(t);
    const double pq = params.p + params.q;
    const double E = std::exp(-pq * t);
    // 1 - F = E(1+c)/(1+cE) = (p+q)E / (p + qE); stays accurate when E is tiny.
    return pq * E / (params.p + params.q * E);
}

double bass_hazard(double t, const BassParams& params) {
    return params.p + params.q * bass_cdf(t, params);
}

// --- Shifted Gompertz ---
//
// With E = exp(-beta t):
//   F(t) = (1 - E) exp(-eta E)
//   f(t) = beta E exp(-eta E) (1 + eta (1 - E))

double sgompertz_pdf(double t, const ShiftedGompertzParams& params) {
    require_time(t);
    const double E = std::exp(-params.beta * t);
    return params.beta * E * std::exp(-params.eta * E) * (1.0 + params.eta * (1.0 - E));
}

double sgompertz_cdf(double t, const ShiftedGompertzParams& params) {
    require_time(t);
    const double E = std::exp(-params.beta * t);
    return (1.0 - E) * std::exp(-params.eta * E);
}

double sgompertz_survival(double t, const ShiftedGompertzParams& params) {
    require_time(t);
    const double E = std::exp(-params.beta * t);
    // 1 - (1-E)e^{-eta E} = (1 - e^{-eta E}) + E e^{-eta E}; the expm1 form
    // keeps the early-t tail (eta E small) from cancelling to noise.
    return -std::expm1(-params.eta * E) + E * std::exp(-params.eta * E);
}

// --- Weibull ---
//
// With u = (t/lambda)^kappa computed in log space:
//   F(t) = 1 - exp(-u)   f(t) = (kappa/t) u exp(-u)

namespace {

// (t/lambda)^kappa for t > 0; +inf when the exponent overflows.
double weibull_u(double t, const WeibullParams& params) {
    return std::exp(params.kappa * (std::log(t) - std::log(params.lambda)));
}

}  // namespace

double weibull_pdf(double t, const WeibullParams& params) {
    require_time(t);
    if (t == 0.0) {
        if (params.kappa > 1.0) return 0.0;
        if (params.kappa == 1.0) return 1.0 / params.lambda;
        throw std::domain_error("weibull: pdf diverges at t = 0 for kappa < 1");
    }
    const double u = weibull_u(t, params);
    if (!std::isfinite(u)) return 0.0;
    return params.kappa / t * u * std::exp(-u);
}

double weibull_cdf(double t, const WeibullParams& params) {
    require_time(t);
    if (t == 0.0) return 0.0;
    const double u = weibull_u(t, params);
    if (!std::isfinite(u)) return 1.0;
    return -std::expm1(-u);
}

double weibull_survival(double t, const WeibullParams& params) {
    require_time(t);
    if (t == 0.0) return 1.0;
    const double u = weibull_u(t, params);
    if (!std::isfinite(u)) return 0.0;
    return std::exp(-u);
}

// --- family-erased handle ---

Model::Model(Family family, double theta1, double theta2) : family_(family) {
    switch (family) {
        case Family::Bass: BassParams(theta1, theta2); break;
        case Family::ShiftedGompertz: ShiftedGompertzParams(theta1, theta2); break;
        case Family::Weibull: WeibullParams(theta1, theta2); break;
    }
    theta_ << theta1, theta2;
}

double Model::pdf(double t) const {
    switch (family_) {
        case Family::Bass: return bass_pdf(t, {theta_[0], theta_[1]});
        case Family::ShiftedGompertz: return sgompertz_pdf(t, {theta_[0], theta_[1]});
        case Family::Weibull: return weibull_pdf(t, {theta_[0], theta_[1]});
    }
    throw std::logic_error("Model::pdf: bad family");
}

double Model::cdf(double t) const {
    switch (family_) {
        case Family::Bass: return bass_cdf(t, {theta_[0], theta_[1]});
        case Family::ShiftedGompertz: return sgompertz_cdf(t, {theta_[0], theta_[1]});
        case Family::Weibull: return weibull_cdf(t, {theta_[0], theta_[1]});
    }
    throw std::logic_error("Model::cdf: bad family");
}

double Model::survival(double t) const {
    switch (family_) {
        case Family::Bass: return bass_survival(t, {theta_[0], theta_[1]});
        case Family::ShiftedGompertz: return sgompertz_survival(t, {theta_[0], theta_[1]});
        case Family::Weibull: return weibull_survival(t, {theta_[0], theta_[1]});
    }
    throw std::logic_error("Model::survival: bad family");
}

Eigen::Vector2d Model::cdf_grad(double t) const {
    require_time(t);
    Eigen::Vector2d g;
    switch (family_) {
        case Family::Bass: {
            const double p = theta_[0], q = theta_[1];
            const double pq = p + q;
            const double E = std::exp(-pq * t);
            const double c = q / p;
            const double denom = 1.0 + c * E;
            const double denom2 = denom * denom;
            const double common = (1.0 + c) * t * E / denom2;
            const double mix = E * (1.0 - E) / denom2;
            g << common + (q / (p * p)) * mix, common - mix / p;
            return g;
        }
        case Family::ShiftedGompertz: {
            const double beta = theta_[0], eta = theta_[1];
            const double E = std::exp(-beta * t);
            const double damp = std::exp(-eta * E);
            g << t * E * damp * (1.0 + eta * (1.0 - E)), -E * (1.0 - E) * damp;
            return g;
        }
        case Family::Weibull: {
            const double kappa = theta_[0], lambda = theta_[1];
            if (t == 0.0) {
                g.setZero();
                return g;
            }
            const double log_ratio = std::log(t) - std::log(lambda);
            const double u = std::exp(kappa * log_ratio);
            if (!std::isfinite(u)) {
                g.setZero();  // survival already underflowed; cdf is flat at 1
                return g;
            }
            const double s = std::exp(-u);
            g << s * u * log_ratio, -s * u * kappa / lambda;
            return g;
        }
    }
    throw std::logic_error("Model::cdf_grad: bad family");
}

Eigen::ArrayXd Model::pdf(const Eigen::ArrayXd& t) const {
    Eigen::ArrayXd out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = pdf(t[i]);
    return out;
}

Eigen::ArrayXd Model::cdf(const Eigen::ArrayXd& t) const {
    Eigen::ArrayXd out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = cdf(t[i]);
    return out;
}

}  // namespace difftrend
