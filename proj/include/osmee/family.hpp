#pragma once

#include <string>

#include <Eigen/Core>

namespace osmee {

enum class Family {
    gaussian,
    poisson,
    quasi_poisson,
    bernoulli,
    binomial,
    negative_binomial,
    gamma
};

enum class Link { identity, log_link, logit };

// How much of the response variance is known a priori:
//   fully_known      - variance is a known function of the mean (poisson,
//                      bernoulli, binomial)
//   unknown_constant - a free constant scale (gaussian)
//   partially_known  - a known mean-variance shape times / plus a dispersion
//                      component that must be estimated or supplied
//                      (quasi-poisson, negative binomial, gamma)
enum class ScaleClass { fully_known, unknown_constant, partially_known };

// Auxiliary parameters of the response distribution. `theta` is the negative
// binomial shape (Var = mu + mu^2/theta), `gamma_shape` the gamma shape
// (Var = mu^2/gamma), `phi` a quasi-likelihood dispersion multiplier, and
// `trials` the binomial denominator when the response is a proportion.
struct ScaleParams {
    double phi = 1.0;
    double theta = 1.0;
    double gamma_shape = 1.0;
    double trials = 1.0;
};

struct FamilySpec {
    Family family = Family::gaussian;
    Link link = Link::identity;

    // Canonical pairing: gaussian/identity, count and gamma families/log,
    // bernoulli and binomial/logit.
    static FamilySpec make(Family f);
    // Validated pairing; throws std::invalid_argument on unsupported combos.
    static FamilySpec make(Family f, Link l);
    // Parse names as they appear on the command line ("poisson", "logit", ...).
    // An empty link string selects the canonical link.
    static FamilySpec parse(const std::string& family, const std::string& link = "");

    ScaleClass scale_class() const;
    const char* family_name() const;
    const char* link_name() const;
};

// Inverse link mu(eta) and its derivative d mu / d eta. The logit link
// saturates at [eps, 1-eps] with eps = 1e-12 instead of returning exactly
// 0 or 1; the log link throws std::domain_error when exp(eta) overflows.
double mean_eval(const FamilySpec& fs, double eta);
double mean_deriv(const FamilySpec& fs, double eta);

// Conditional variance of the response at linear predictor eta, including
// scale parameters (so gaussian returns phi, quasi-poisson phi*mu, ...).
double variance_eval(const FamilySpec& fs, double eta, const ScaleParams& scale);

// Same variance as a function of the mean. `unit` variants drop the free
// dispersion multiplier (phi for gaussian/quasi-poisson, gamma_shape for
// gamma) but keep shape parameters that enter the mean-variance relationship
// (the negative binomial theta); they are what IRLS weights need.
double variance_mu(const FamilySpec& fs, double mu, const ScaleParams& scale);
double unit_variance_mu(const FamilySpec& fs, double mu, const ScaleParams& scale);

// Per-observation deviance contribution and the total over a vector.
// Domain violations (e.g. negative poisson response, gamma mean <= 0) throw
// std::domain_error naming the offending observation index.
double deviance_term(const FamilySpec& fs, double y, double mu, const ScaleParams& scale);
double deviance(const FamilySpec& fs, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                const ScaleParams& scale);

// Link function itself (eta from mu); used to initialize IRLS.
double link_eval(const FamilySpec& fs, double mu);

} // namespace osmee
