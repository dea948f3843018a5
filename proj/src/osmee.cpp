#include "osmee/osmee.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace osmee {

double qgcv(double deviance, long n, double edf) {
    const double denom = static_cast<double>(n) - edf;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return static_cast<double>(n) * deviance / (denom * denom);
}

double estimate_nb_shape(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted, double edf) {
    const long n = y.size();
    if (fitted.size() != n)
        throw std::invalid_argument("estimate_nb_shape: y and fitted length mismatch");
    const double dof = static_cast<double>(n) - edf;
    if (!(dof > 0.0))
        throw std::invalid_argument("estimate_nb_shape: no residual degrees of freedom");
    for (long i = 0; i < n; ++i)
        if (!(fitted[i] > 0.0))
            throw std::invalid_argument("estimate_nb_shape: non-positive fitted value at observation " +
                                        std::to_string(i));

    // Pearson statistic minus its target; increases with theta because the
    // assumed variance shrinks toward the Poisson limit.
    auto excess = [&](double theta) {
        double acc = 0.0;
        for (long i = 0; i < n; ++i) {
            const double mu = fitted[i];
            const double r = y[i] - mu;
            acc += r * r / (mu + mu * mu / theta);
        }
        return acc - dof;
    };

    double lo = -6.0, hi = 6.0;
    const double f_lo = excess(std::pow(10.0, lo));
    const double f_hi = excess(std::pow(10.0, hi));
    if (!(f_lo < 0.0) || !(f_hi > 0.0)) {
        std::cerr << "osmee: warning: no dispersion solution for theta in [1e-6, 1e6]; "
                     "treating the response as Poisson (theta = inf)\n";
        return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(std::pow(10.0, mid)) < 0.0 ? lo : hi) = mid;
    }
    return std::pow(10.0, 0.5 * (lo + hi));
}

namespace {

void validate_config(const OsmeeConfig& cfg, long n) {
    if (cfg.mc_samples < 2)
        throw std::invalid_argument("run_osmee: mc_samples must be at least 2");
    if (cfg.mc_samples < 100)
        std::cerr << "osmee: warning: mc_samples = " << cfg.mc_samples
                  << " is below 100; moment estimates will be noisy\n";
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("run_osmee: tol must be positive");
    if (cfg.max_iter < 1) throw std::invalid_argument("run_osmee: max_iter must be at least 1");
    if (cfg.basis.dim < 4 || cfg.basis.dim > n - 1)
        throw std::invalid_argument("run_osmee: basis dim must lie in [4, n-1], got " +
                                    std::to_string(cfg.basis.dim) + " with n = " +
                                    std::to_string(n));
}

OsmeeIterate wrap_naive(const NaiveFit& naive, long n) {
    OsmeeIterate it;
    it.coef.beta = naive.fit.beta;
    it.coef.u = naive.fit.u;
    it.lambda = naive.fit.lambda;
    it.phi = naive.fit.phi;
    it.edf = naive.fit.edf;
    it.qgcv = qgcv(naive.deviance, n, naive.fit.edf);
    return it;
}

// Resolve the family's shape parameter before any refinement: user-supplied
// when given, otherwise moment-estimated from a pilot naive fit and then
// held fixed. Returns the naive fit at the resolved scale.
NaiveFit resolve_scale(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       const OsmeeConfig& cfg, ScaleParams& scale) {
    switch (cfg.family.family) {
        case Family::negative_binomial: {
            if (cfg.theta) {
                if (!(*cfg.theta > 0.0))
                    throw std::invalid_argument("run_osmee: theta must be positive");
                scale.theta = *cfg.theta;
            } else {
                FamilySpec pilot_family = FamilySpec::make(Family::quasi_poisson, cfg.family.link);
                NaiveFit pilot = fit_naive_glm(y, w, cfg.basis, pilot_family, cfg.method);
                scale.theta = estimate_nb_shape(y, pilot.mu, pilot.fit.edf);
            }
            return fit_naive_glm(y, w, cfg.basis, cfg.family, cfg.method, scale);
        }
        case Family::gamma: {
            if (cfg.gamma_shape) {
                if (!(*cfg.gamma_shape > 0.0))
                    throw std::invalid_argument("run_osmee: gamma shape must be positive");
                scale.gamma_shape = *cfg.gamma_shape;
                return fit_naive_glm(y, w, cfg.basis, cfg.family, cfg.method, scale);
            }
            // the gamma IRLS coefficients do not depend on the shape, so one
            // fit both estimates 1/gamma (Pearson phi) and serves as the
            // naive fit
            NaiveFit naive = fit_naive_glm(y, w, cfg.basis, cfg.family, cfg.method, scale);
            if (!(naive.fit.phi > 0.0) || !std::isfinite(naive.fit.phi))
                throw std::runtime_error("run_osmee: gamma dispersion estimate degenerate");
            scale.gamma_shape = 1.0 / naive.fit.phi;
            return naive;
        }
        default:
            return fit_naive_glm(y, w, cfg.basis, cfg.family, cfg.method, scale);
    }
}

} // namespace

OsmeeFit run_osmee(const Eigen::VectorXd& y, const Eigen::VectorXd& w, const ErrorModel& err,
                   const OsmeeConfig& cfg) {
    const long n = y.size();
    if (w.size() != n) throw std::invalid_argument("run_osmee: y and w lengths differ");
    if (!(err.sigma_w2 >= 0.0))
        throw std::invalid_argument("run_osmee: sigma_w2 must be non-negative");
    validate_config(cfg, n);

    OsmeeFit out;
    out.family = cfg.family;
    out.posterior.sampler = cfg.sampler;
    out.scale = ScaleParams{};
    out.naive = resolve_scale(y, w, cfg, out.scale);
    out.design = out.naive.design;

    if (err.sigma_w2 == 0.0) {
        // no measurement error: the posterior is a point mass at w, so the
        // naive fit already is the estimator
        out.zero_error = true;
        out.iterates.push_back(wrap_naive(out.naive, n));
        out.selected_index = 0;
        out.converged = true;
        out.posterior.mean = w.mean();
        out.posterior.sd = std::sqrt((w.array() - w.mean()).square().sum() /
                                     std::max<long>(n - 1, 1));
        return out;
    }

    PosteriorSampleSet draws;
    if (cfg.sampler == SamplerKind::gaussian_prior) {
        GaussianPrior prior = estimate_prior_moments(w, err);
        draws = sample_gaussian_posterior(prior, err, w, cfg.mc_samples, cfg.seed, cfg.exec);
    } else {
        DeconvDensity dens = deconvolve_density(w, err);
        out.posterior.bandwidth = dens.bandwidth;
        draws = sample_deconv_posterior(dens, err, w, cfg.mc_samples, cfg.seed, cfg.exec);
    }
    out.posterior.mean = draws.samples.mean();
    out.posterior.sd = std::sqrt((draws.samples.array() - out.posterior.mean).square().sum() /
                                 (static_cast<double>(draws.samples.size()) - 1.0));

    // basis rows of every posterior draw, on the design the naive fit built
    SampleDesign sd(out.design, draws.samples, cfg.exec);
    draws.samples.resize(0, 0); // the row cache supersedes the raw draws

    const int p = out.design.p();
    const Eigen::MatrixXd& penalty = out.design.penalty_fit();
    const MomentOptions mopt{cfg.robust_variance, cfg.exec};
    const ScaleClass sclass = cfg.family.scale_class();

    Eigen::VectorXd b0 = out.naive.fit.coefficients();
    for (int pass = 0; pass < cfg.max_iter; ++pass) {
        FitResult fr;
        Eigen::VectorXd b1;
        double dev = 0.0;
        try {
            AssembledRows rows = assemble_rows(sd, b0, cfg.family, out.scale, mopt);
            WorkingModel wm = assemble_working_model(rows, y, p, penalty, sclass);
            fr = fit_heteroscedastic(wm, cfg.method);
            b1 = fr.coefficients();
            Eigen::VectorXd means = mc_conditional_means(sd, b1, cfg.family, cfg.exec);
            dev = deviance(cfg.family, y, means, out.scale);
        } catch (const std::exception& e) {
            std::cerr << "osmee: warning: refinement pass " << pass + 1
                      << " failed (" << e.what() << "); keeping earlier iterates\n";
            out.converged = false;
            break;
        }
        OsmeeIterate it;
        it.coef.beta = fr.beta;
        it.coef.u = fr.u;
        it.lambda = fr.lambda;
        it.phi = fr.phi;
        it.edf = fr.edf;
        it.qgcv = qgcv(dev, n, fr.edf);
        out.iterates.push_back(it);
        out.iterations = pass + 1;

        const double rel = (b1 - b0).cwiseAbs().maxCoeff() /
                           std::max(1.0, b0.cwiseAbs().maxCoeff());
        b0 = b1;
        if (rel < cfg.tol) {
            out.converged = true;
            break;
        }
    }

    if (out.iterates.empty()) {
        // first refinement pass failed outright: degrade to the naive fit
        out.iterates.push_back(wrap_naive(out.naive, n));
        out.converged = false;
    }

    out.selected_index = 0;
    for (std::size_t j = 1; j < out.iterates.size(); ++j)
        if (out.iterates[j].qgcv < out.iterates[out.selected_index].qgcv)
            out.selected_index = static_cast<int>(j);
    return out;
}

Eigen::VectorXd predict_curve(const OsmeeFit& fit, const Eigen::VectorXd& grid) {
    for (long i = 0; i < grid.size(); ++i)
        if (!std::isfinite(grid[i]))
            throw std::invalid_argument("predict_curve: non-finite grid point");
    const OsmeeIterate& sel = fit.selected();
    RowMatrixXd rows(grid.size(), fit.design.total_dim());
    fit.design.eval_rows(grid, rows);
    Eigen::VectorXd eta = rows * sel.coef.stacked();
    Eigen::VectorXd mu(eta.size());
    for (long i = 0; i < eta.size(); ++i) mu[i] = mean_eval(fit.family, eta[i]);
    return mu;
}

Eigen::VectorXd predict_naive_curve(const NaiveFit& naive, const FamilySpec& family,
                                    const Eigen::VectorXd& grid) {
    for (long i = 0; i < grid.size(); ++i)
        if (!std::isfinite(grid[i]))
            throw std::invalid_argument("predict_naive_curve: non-finite grid point");
    RowMatrixXd rows(grid.size(), naive.design.total_dim());
    naive.design.eval_rows(grid, rows);
    Eigen::VectorXd eta = rows * naive.fit.coefficients();
    Eigen::VectorXd mu(eta.size());
    for (long i = 0; i < eta.size(); ++i) mu[i] = mean_eval(family, eta[i]);
    return mu;
}

} // namespace osmee
