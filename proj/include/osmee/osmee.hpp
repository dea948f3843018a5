#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "osmee/basis.hpp"
#include "osmee/family.hpp"
#include "osmee/moments.hpp"
#include "osmee/predictor_model.hpp"
#include "osmee/threads.hpp"
#include "osmee/working_fit.hpp"

namespace osmee {

// Posterior sampler for the latent predictor: normal prior with moment-
// estimated parameters, or a deconvolution density estimate.
enum class SamplerKind { gaussian_prior, deconvolution };

struct OsmeeConfig {
    FamilySpec family = FamilySpec::make(Family::gaussian);
    BasisKind basis{BasisKindId::thin_plate, 40};
    SamplerKind sampler = SamplerKind::gaussian_prior;
    int mc_samples = 3000; // posterior draws per observation
    SmoothSelect method = SmoothSelect::reml;
    int max_iter = 50;
    double tol = 1e-4; // max relative coefficient change between passes
    std::uint64_t seed = 1;
    bool robust_variance = false;      // MAD instead of sample variance in the moments
    std::optional<double> theta;       // negative binomial shape, when known
    std::optional<double> gamma_shape; // gamma shape, when known
    Exec exec = Exec::parallel;
};

// One pass of the iterative refinement.
struct OsmeeIterate {
    CoefficientVector coef;
    double lambda = 0.0;
    double phi = 1.0;
    double edf = 0.0;
    double qgcv = 0.0;
};

// What survives of the posterior draws (the raw n x S matrix is discarded).
struct PosteriorSummary {
    SamplerKind sampler = SamplerKind::gaussian_prior;
    double mean = 0.0;
    double sd = 0.0;
    double bandwidth = 0.0; // deconvolution prior only, else 0
};

struct OsmeeFit {
    std::vector<OsmeeIterate> iterates; // never empty
    int selected_index = 0;             // argmin of qgcv, ties to the earliest pass
    bool converged = false;
    int iterations = 0; // refinement passes completed
    FamilySpec family;
    BasisDesign design; // built on w by the naive fit, shared by every pass
    NaiveFit naive;
    ScaleParams scale; // theta / gamma shape as resolved before refitting
    PosteriorSummary posterior;
    bool zero_error = false; // sigma_w2 == 0: the single iterate wraps the naive fit

    const OsmeeIterate& selected() const { return iterates[selected_index]; }
};

// Quasi-GCV score n*D/(n - edf)^2 used to pick the best iterate. edf >= n
// gives the +infinity sentinel.
double qgcv(double deviance, long n, double edf);

// The full estimator: posterior sampling, naive fit, iterated linearized
// heteroscedastic refits, QGCV selection across passes.
OsmeeFit run_osmee(const Eigen::VectorXd& y, const Eigen::VectorXd& w, const ErrorModel& err,
                   const OsmeeConfig& cfg);

// Fitted mean curve mu(X_d beta + Z_d u) over a grid of predictor values,
// using the selected iterate's coefficients.
Eigen::VectorXd predict_curve(const OsmeeFit& fit, const Eigen::VectorXd& grid);

// Same curve for a bare naive fit.
Eigen::VectorXd predict_naive_curve(const NaiveFit& naive, const FamilySpec& family,
                                    const Eigen::VectorXd& grid);

// Moment estimator of the negative binomial shape: solves the Pearson
// equation sum (y - mu)^2 / (mu + mu^2/theta) = n - edf by bisection over
// log10(theta) in [-6, 6]. No sign change over that range returns the
// +infinity sentinel (Poisson limit) with a warning; n - edf <= 0 throws.
double estimate_nb_shape(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted, double edf);

} // namespace osmee
