#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace difftrend {

enum class Family { Bass, ShiftedGompertz, Weibull };

/// Short stable token used in CLI flags, JSON, and CSV ("bass", "sg", "weibull").
std::string_view family_name(Family family);
Family family_from_name(std::string_view name);

/// Bass adoption model. The hazard of adoption is p + q·F(t): a constant
/// propensity p to adopt spontaneously plus an imitation term proportional
/// to the already-adopted fraction.
struct BassParams {
    double p;  ///< innovation propensity, per week
    double q;  ///< imitation propensity, per week

    /// Requires p > 0, q >= 0, both finite.
    BassParams(double p, double q);
};

/// Shifted Gompertz distribution with scale rate `beta` (per week) and
/// dimensionless shape `eta`. eta = 0 degenerates to Exponential(beta).
struct ShiftedGompertzParams {
    double beta;
    double eta;

    /// Requires beta > 0, eta >= 0, both finite.
    ShiftedGompertzParams(double beta, double eta);
};

/// Weibull distribution with shape `kappa` and scale `lambda` in weeks.
struct WeibullParams {
    double kappa;
    double lambda;

    /// Requires kappa > 0, lambda > 0, and the derived rate (1/lambda)^kappa
    /// to be finite and positive.
    WeibullParams(double kappa, double lambda);

    /// alpha = (1/lambda)^kappa.
    double rate() const;
};

/// Exponential mixing link: compounding the shifted Gompertz shape over an
/// Exponential(sigma) prior yields a Bass model with p = beta/(1+sigma),
/// q = p·sigma.
struct CompoundLink {
    double beta;
    double sigma;

    /// Requires beta > 0, sigma > 0, both finite.
    CompoundLink(double beta, double sigma);
};

// All densities are supported on t >= 0. Every function throws
// std::domain_error for t < 0; parameters are validated once at construction
// and trusted afterwards.

double bass_pdf(double t, const BassParams& params);
double bass_cdf(double t, const BassParams& params);
double bass_survival(double t, const BassParams& params);
/// p + q·F(t); equals pdf/(1-cdf) wherever the cdf is below 1.
double bass_hazard(double t, const BassParams& params);

double sgompertz_pdf(double t, const ShiftedGompertzParams& params);
double sgompertz_cdf(double t, const ShiftedGompertzParams& params);
double sgompertz_survival(double t, const ShiftedGompertzParams& params);

/// t = 0 with kappa < 1 is a pole of the density and is rejected with
/// std::domain_error; binned pipelines only ever need cdf differences.
double weibull_pdf(double t, const WeibullParams& params);
double weibull_cdf(double t, const WeibullParams& params);
double weibull_survival(double t, const WeibullParams& params);

BassParams compound_bass_from_sg(const CompoundLink& link);

/// Family-erased model handle used by the fitting and forecasting layers.
/// Parameters live in a fixed-size vector (theta1, theta2) and are validated
/// through the family's typed constructor on construction.
class Model {
  public:
    Model(Family family, double theta1, double theta2);

    static Model bass(const BassParams& p) { return {Family::Bass, p.p, p.q}; }
    static Model sgompertz(const ShiftedGompertzParams& p) {
        return {Family::ShiftedGompertz, p.beta, p.eta};
    }
    static Model weibull(const WeibullParams& p) {
        return {Family::Weibull, p.kappa, p.lambda};
    }

    Family family() const { return family_; }
    double theta1() const { return theta_[0]; }
    double theta2() const { return theta_[1]; }
    const Eigen::Vector2d& theta() const { return theta_; }

    double pdf(double t) const;
    double cdf(double t) const;
    double survival(double t) const;

    /// Gradient of the cdf with respect to (theta1, theta2) at fixed t.
    Eigen::Vector2d cdf_grad(double t) const;

    Eigen::ArrayXd pdf(const Eigen::ArrayXd& t) const;
    Eigen::ArrayXd cdf(const Eigen::ArrayXd& t) const;

  private:
    Family family_;
    Eigen::Vector2d theta_;
};

}  // namespace difftrend
