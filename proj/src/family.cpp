#include "osmee/family.hpp"

#include <cmath>
#include <stdexcept>

namespace osmee {

namespace {

constexpr double kLogitEps = 1e-12;

// exp(eta) overflows double near 709.78; reject well before that so the
// caller gets a clear error instead of inf propagating through a fit.
constexpr double kLogEtaMax = 700.0;

[[noreturn]] void bad_pair(Family f, Link l) {
    FamilySpec tmp{f, l};
    throw std::invalid_argument(std::string("unsupported family/link pair: ") +
                                tmp.family_name() + "/" + tmp.link_name());
}

void check_theta(const ScaleParams& s) {
    if (!(s.theta > 0.0))
        throw std::invalid_argument("negative binomial shape theta must be > 0");
}

void check_gamma_shape(const ScaleParams& s) {
    if (!(s.gamma_shape > 0.0))
        throw std::invalid_argument("gamma shape must be > 0");
}

} // namespace

FamilySpec FamilySpec::make(Family f) {
    switch (f) {
        case Family::gaussian: return {f, Link::identity};
        case Family::bernoulli:
        case Family::binomial: return {f, Link::logit};
        default: return {f, Link::log_link};
    }
}

FamilySpec FamilySpec::make(Family f, Link l) {
    FamilySpec canon = make(f);
    if (l != canon.link) bad_pair(f, l);
    return {f, l};
}

FamilySpec FamilySpec::parse(const std::string& family, const std::string& link) {
    Family f;
    if (family == "gaussian") f = Family::gaussian;
    else if (family == "poisson") f = Family::poisson;
    else if (family == "quasi_poisson") f = Family::quasi_poisson;
    else if (family == "bernoulli") f = Family::bernoulli;
    else if (family == "binomial") f = Family::binomial;
    else if (family == "negative_binomial") f = Family::negative_binomial;
    else if (family == "gamma") f = Family::gamma;
    else throw std::invalid_argument("unknown family '" + family + "'");
    if (link.empty()) return make(f);
    Link l;
    if (link == "identity") l = Link::identity;
    else if (link == "log") l = Link::log_link;
    else if (link == "logit") l = Link::logit;
    else throw std::invalid_argument("unknown link '" + link + "'");
    return make(f, l);
}

ScaleClass FamilySpec::scale_class() const {
    switch (family) {
        case Family::poisson:
        case Family::bernoulli:
        case Family::binomial: return ScaleClass::fully_known;
        case Family::gaussian: return ScaleClass::unknown_constant;
        default: return ScaleClass::partially_known;
    }
}

const char* FamilySpec::family_name() const {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::poisson: return "poisson";
        case Family::quasi_poisson: return "quasi_poisson";
        case Family::bernoulli: return "bernoulli";
        case Family::binomial: return "binomial";
        case Family::negative_binomial: return "negative_binomial";
        case Family::gamma: return "gamma";
    }
    return "?";
}

const char* FamilySpec::link_name() const {
    switch (link) {
        case Link::identity: return "identity";
        case Link::log_link: return "log";
        case Link::logit: return "logit";
    }
    return "?";
}

double mean_eval(const FamilySpec& fs, double eta) {
    if (!std::isfinite(eta)) throw std::domain_error("mean_eval: non-finite eta");
    switch (fs.link) {
        case Link::identity: return eta;
        case Link::log_link:
            if (eta > kLogEtaMax)
                throw std::domain_error("mean_eval: exp overflow at eta=" + std::to_string(eta));
            return std::exp(eta);
        case Link::logit: {
            // numerically symmetric logistic, saturated away from {0,1}
            double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                                  : std::exp(eta) / (1.0 + std::exp(eta));
            if (p < kLogitEps) p = kLogitEps;
            if (p > 1.0 - kLogitEps) p = 1.0 - kLogitEps;
            return p;
        }
    }
    throw std::logic_error("mean_eval: unreachable");
}

double mean_deriv(const FamilySpec& fs, double eta) {
    if (!std::isfinite(eta)) throw std::domain_error("mean_deriv: non-finite eta");
    switch (fs.link) {
        case Link::identity: return 1.0;
        case Link::log_link:
            if (eta > kLogEtaMax)
                throw std::domain_error("mean_deriv: exp overflow at eta=" + std::to_string(eta));
            return std::exp(eta);
        case Link::logit: {
            double p = mean_eval(fs, eta);
            return p * (1.0 - p);
        }
    }
    throw std::logic_error("mean_deriv: unreachable");
}

double variance_mu(const FamilySpec& fs, double mu, const ScaleParams& scale) {
    switch (fs.family) {
        case Family::gaussian:
            if (!(scale.phi > 0.0)) throw std::invalid_argument("gaussian variance needs phi > 0");
            return scale.phi;
        case Family::poisson: return mu;
        case Family::quasi_poisson:
            if (!(scale.phi > 0.0)) throw std::invalid_argument("quasi-poisson variance needs phi > 0");
            return scale.phi * mu;
        case Family::bernoulli: return mu * (1.0 - mu);
        case Family::binomial:
            if (!(scale.trials >= 1.0)) throw std::invalid_argument("binomial needs trials >= 1");
            return mu * (1.0 - mu) / scale.trials;
        case Family::negative_binomial:
            check_theta(scale);
            return mu + mu * mu / scale.theta;
        case Family::gamma:
            check_gamma_shape(scale);
            return mu * mu / scale.gamma_shape;
    }
    throw std::logic_error("variance_mu: unreachable");
}

double unit_variance_mu(const FamilySpec& fs, double mu, const ScaleParams& scale) {
    switch (fs.family) {
        case Family::gaussian: return 1.0;
        case Family::quasi_poisson: return mu;
        case Family::gamma: return mu * mu;
        case Family::negative_binomial:
            check_theta(scale);
            return mu + mu * mu / scale.theta;
        default: return variance_mu(fs, mu, scale);
    }
}

double variance_eval(const FamilySpec& fs, double eta, const ScaleParams& scale) {
    return variance_mu(fs, mean_eval(fs, eta), scale);
}

double link_eval(const FamilySpec& fs, double mu) {
    switch (fs.link) {
        case Link::identity: return mu;
        case Link::log_link:
            if (!(mu > 0.0)) throw std::domain_error("log link needs mu > 0");
            return std::log(mu);
        case Link::logit:
            if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("logit link needs mu in (0,1)");
            return std::log(mu / (1.0 - mu));
    }
    throw std::logic_error("link_eval: unreachable");
}

namespace {

// y*log(y/mu) with the y -> 0 limit
double xlogy_ratio(double y, double mu) {
    return y > 0.0 ? y * std::log(y / mu) : 0.0;
}

[[noreturn]] void dev_domain(const FamilySpec& fs, long idx, const std::string& what) {
    throw std::domain_error(std::string("deviance(") + fs.family_name() + "): " + what +
                            " at observation " + std::to_string(idx));
}

double deviance_term_at(const FamilySpec& fs, double y, double mu, const ScaleParams& scale,
                        long idx) {
    switch (fs.family) {
        case Family::gaussian: {
            double r = y - mu;
            return r * r;
        }
        case Family::poisson:
        case Family::quasi_poisson: {
            if (!(mu > 0.0)) dev_domain(fs, idx, "mu <= 0");
            if (y < 0.0) dev_domain(fs, idx, "negative response");
            return 2.0 * (xlogy_ratio(y, mu) - (y - mu));
        }
        case Family::bernoulli:
        case Family::binomial: {
            if (!(mu > 0.0 && mu < 1.0)) dev_domain(fs, idx, "mu outside (0,1)");
            if (y < 0.0 || y > 1.0) dev_domain(fs, idx, "response outside [0,1]");
            double d = 2.0 * (xlogy_ratio(y, mu) + xlogy_ratio(1.0 - y, 1.0 - mu));
            return fs.family == Family::binomial ? scale.trials * d : d;
        }
        case Family::negative_binomial: {
            check_theta(scale);
            if (!(mu > 0.0)) dev_domain(fs, idx, "mu <= 0");
            if (y < 0.0) dev_domain(fs, idx, "negative response");
            double th = scale.theta;
            if (!std::isfinite(th)) // Poisson limit
                return 2.0 * (xlogy_ratio(y, mu) - (y - mu));
            return 2.0 * (xlogy_ratio(y, mu) - (y + th) * std::log((y + th) / (mu + th)));
        }
        case Family::gamma: {
            if (!(mu > 0.0)) dev_domain(fs, idx, "mu <= 0");
            if (!(y > 0.0)) dev_domain(fs, idx, "non-positive response");
            return 2.0 * (-std::log(y / mu) + (y - mu) / mu);
        }
    }
    throw std::logic_error("deviance_term: unreachable");
}

} // namespace

double deviance_term(const FamilySpec& fs, double y, double mu, const ScaleParams& scale) {
    return deviance_term_at(fs, y, mu, scale, 0);
}

double deviance(const FamilySpec& fs, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                const ScaleParams& scale) {
    if (y.size() != mu.size())
        throw std::invalid_argument("deviance: y and mu length mismatch");
    double total = 0.0;
    for (long i = 0; i < y.size(); ++i) total += deviance_term_at(fs, y[i], mu[i], scale, i);
    return total;
}

} // namespace osmee
