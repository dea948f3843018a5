#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "osmee/threads.hpp"

namespace osmee {

// Classical measurement error: w = x + N(0, sigma_w2), independent of x.
struct ErrorModel {
    double sigma_w2 = 0.0;
};

struct GaussianPrior {
    double mu_x = 0.0;
    double sigma_x2 = 1.0;
};

// Deconvolution estimate of the density of the latent predictor on an
// equispaced grid.
struct DeconvDensity {
    Eigen::VectorXd grid;
    Eigen::VectorXd density;
    double bandwidth = 0.0;
};

struct PosteriorSampleSet {
    Eigen::MatrixXd samples; // n x S, row i holds draws from x_i | w_i
    std::uint64_t seed = 0;
};

// Method-of-moments prior for x: mean of w, variance of w minus sigma_w2,
// floored at 5% of Var(w) so the posterior stays defined.
GaussianPrior estimate_prior_moments(const Eigen::VectorXd& w, const ErrorModel& err);

// Normal-normal shrinkage posterior of x_i given w_i.
struct PosteriorParams {
    double mean = 0.0;
    double variance = 0.0;
};
PosteriorParams posterior_params(const GaussianPrior& prior, const ErrorModel& err, double w_i);

PosteriorSampleSet sample_gaussian_posterior(const GaussianPrior& prior, const ErrorModel& err,
                                             const Eigen::VectorXd& w, int S, std::uint64_t seed,
                                             Exec exec = Exec::parallel);

// Fourier-inversion deconvoluting kernel density estimate with the
// (1-t^2)^3 characteristic-function kernel and a two-stage normal-reference
// plug-in bandwidth. Falls back to the normal-reference bandwidth with a
// warning if the plug-in search degenerates.
DeconvDensity deconvolve_density(const Eigen::VectorXd& w, const ErrorModel& err,
                                 int grid_size = 512);

// Posterior sampling with the deconvolution estimate as the prior: grid
// weights proportional to density(g)*N(w_i; g, sigma_w2), draws jittered by
// half a grid spacing. Rows whose weights vanish entirely fall back to the
// Gaussian-prior posterior (with a warning).
PosteriorSampleSet sample_deconv_posterior(const DeconvDensity& dens, const ErrorModel& err,
                                           const Eigen::VectorXd& w, int S, std::uint64_t seed,
                                           Exec exec = Exec::parallel);

} // namespace osmee
