#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "osmee/family.hpp"
#include "osmee/osmee.hpp"

namespace osmee {

// One benchmark scenario: evaluation window [a, b], latent-predictor law,
// measurement error scale, family shape parameters, and the regression
// function on the linear predictor scale.
struct SimCase {
    int id = 0;
    double a = 0.0, b = 1.0;
    double sigma_w2 = 0.0;
    double mu_x = 0.0;
    double sigma_x2 = 1.0;
    double theta = 1.0;       // negative binomial shape for this case
    double gamma_shape = 1.0; // gamma shape for this case
    std::function<double(double)> m;
};

// The four built-in scenarios (bump/sine, tanh, cubic hump, two-bump).
const std::array<SimCase, 4>& builtin_cases();
const SimCase& builtin_case(int id); // throws on id outside 1..4

// Latent predictor distribution: alpha = 0 is Gaussian, otherwise a
// moment-matched skew normal with that shape.
struct XDist {
    double alpha = 0.0;
    std::string label() const; // "gaussian" or "skew<alpha>"
};

// Skew normal draws with the requested mean and standard deviation,
// via the |Z1|, Z2 construction. alpha = 0 degenerates to the normal.
Eigen::VectorXd sample_skew_normal(double target_mean, double target_sd, double alpha, long n,
                                   std::uint64_t seed);

struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXd x; // latent predictor
    Eigen::VectorXd w; // contaminated observation
};

// Draw x from xdist (case mean/sd), contaminate with N(0, sigma_w2), and
// draw y from the family at mu(m(x)) using the case's shape parameters.
// Gaussian responses get unit noise.
Dataset generate_dataset(const SimCase& sc, const FamilySpec& family, long n, const XDist& xdist,
                         std::uint64_t seed);

// Equispaced evaluation grid over [a, b], endpoints included.
Eigen::VectorXd case_grid(const SimCase& sc, int points = 101);

// True mean curve mu(m(d)) on a grid.
Eigen::VectorXd true_curve(const SimCase& sc, const FamilySpec& family,
                           const Eigen::VectorXd& grid);

// Pointwise squared error between a fitted curve and the truth (both on the
// mean scale).
Eigen::VectorXd evaluate_fit(const Eigen::VectorXd& curve, const Eigen::VectorXd& truth);

enum class Estimator { naive, osmee_gaussian, osmee_deconv };
const char* estimator_name(Estimator e);

struct StudyConfig {
    OsmeeConfig osmee; // family, basis, S, method, ...; seed set per replicate
    std::vector<long> n_list{128, 256, 512};
    int reps = 50;
    std::vector<Estimator> estimators{Estimator::naive, Estimator::osmee_gaussian};
    XDist xdist;
    std::uint64_t seed = 1; // replicate r uses seed + r
    bool record_runtime = false; // keep runtime_sec at 0 for byte-stable CSVs
};

struct StudyRow {
    int case_id = 0;
    std::string family;
    std::string xdist;
    std::string estimator;
    long n = 0;
    int reps_used = 0;
    int reps_failed = 0;
    double mse = 0.0;
    double bias2_fraction = 0.0; // mean squared bias over MSE, clipped to [0,1]
    double runtime_sec = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
};

// Fit every estimator on every replicate of every sample size, evaluate on
// the 101-point case grid, and aggregate MSE and the bias-squared fraction.
// Replicates run concurrently; failed replicates are counted and excluded.
StudyResult run_study(const SimCase& sc, const StudyConfig& cfg);

// columns: case,family,xdist,estimator,n,reps_used,reps_failed,mse,
// bias2_fraction,runtime_sec
void write_study_csv(std::ostream& os, const StudyResult& result);

// The literal published form Var(w)/(Var(w) + sigma_w2), and the textbook
// form Var(x)/Var(w) with Var(x) = Var(w) - sigma_w2. Both are 1 at
// sigma_w2 = 0; both reject var_observed = sigma_w2 = 0.
double reliability_ratio(double var_observed, double sigma_w2);
double reliability_ratio_corrected(double var_observed, double sigma_w2);

} // namespace osmee
