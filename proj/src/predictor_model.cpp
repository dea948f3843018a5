#include "osmee/predictor_model.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

#include "osmee/quadrature.hpp"
#include "osmee/rng.hpp"

namespace osmee {

namespace {

// characteristic function of the smoothing kernel: (1-t^2)^3 on [-1,1],
// whose second moment mu2 = -phi_K''(0) = 6
constexpr double kKernelMu2 = 6.0;

// exp(sigma_w2 * t^2) at t=1/h must stay finite; cap the exponent at 1400
// which bounds h away from zero relative to sigma_w
constexpr double kMaxVarExponent = 1400.0;

double sample_variance(const Eigen::VectorXd& v) {
    const long n = v.size();
    double mean = v.mean();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += (v[i] - mean) * (v[i] - mean);
    return acc / (n - 1);
}

// |phi_hat_w|^2 and the real/imaginary parts of phi_hat_w at the given
// frequencies
struct EmpiricalCf {
    Eigen::VectorXd re, im;
};

EmpiricalCf empirical_cf(const Eigen::VectorXd& w, const std::vector<double>& t) {
    EmpiricalCf cf;
    const long n = w.size();
    cf.re.setZero(t.size());
    cf.im.setZero(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        double cre = 0.0, cim = 0.0;
        for (long j = 0; j < n; ++j) {
            cre += std::cos(t[k] * w[j]);
            cim += std::sin(t[k] * w[j]);
        }
        cf.re[k] = cre / n;
        cf.im[k] = cim / n;
    }
    return cf;
}

// Minimize a positive objective over log-spaced h with golden-section
// refinement; deterministic.
template <typename F>
double minimize_log_bandwidth(F&& f, double h_lo, double h_hi) {
    const double a0 = std::log(h_lo), b0 = std::log(h_hi);
    const int G = 60;
    double best_l = a0, best_f = f(std::exp(a0));
    int best_i = 0;
    for (int i = 1; i < G; ++i) {
        double l = a0 + (b0 - a0) * i / (G - 1);
        double fv = f(std::exp(l));
        if (fv < best_f) {
            best_f = fv;
            best_l = l;
            best_i = i;
        }
    }
    double step = (b0 - a0) / (G - 1);
    double a = a0 + std::max(best_i - 1, 0) * step;
    double b = a0 + std::min(best_i + 1, G - 1) * step;
    const double gr = 0.6180339887498949;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    while (b - a > 1e-4) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(std::exp(d));
        }
    }
    double l = fc < fd ? c : d;
    if (std::min(fc, fd) < best_f) best_l = l;
    return std::exp(best_l);
}

// Plug-in bandwidth for the deconvoluting estimator, two-stage with
// normal-reference start:
//   stage 1: pilot g minimizing the asymptotic MSE of the curvature
//            functional theta2 = R(f'') with theta3 at its normal-reference
//            value, then theta2 estimated from the debiased empirical
//            characteristic function;
//   stage 2: h minimizing AMISE(h) = h^4 mu2^2 theta2/4 + variance term.
// Returns 0 on failure (caller falls back to the normal-reference h).
double plugin_bandwidth(const Eigen::VectorXd& w, double sigma_w2, double sigma_x,
                        bool* used_fallback) {
    const long n = w.size();
    const double sigma_w = std::sqrt(sigma_w2);
    const double h_lo =
        std::max(sigma_w / std::sqrt(kMaxVarExponent), 1e-4 * std::max(sigma_x, 1e-12));
    const double h_hi = 4.0 * std::max(sigma_x, h_lo);
    const QuadratureRule unit = gauss_legendre(100, 0.0, 1.0);

    // variance-term integral (1/(pi*n)) int_0^{1/h} (1-(ht)^2)^6 exp(s2 t^2) dt,
    // with an optional t^4 factor for the curvature-functional variance
    auto var_integral = [&](double h, int tpow) {
        double acc = 0.0;
        for (std::size_t k = 0; k < unit.nodes.size(); ++k) {
            double u = unit.nodes[k]; // t = u/h
            double t = u / h;
            double ker = 1.0 - u * u;
            double k6 = std::pow(ker, 6);
            double ex = std::exp(std::min(sigma_w2 * t * t, kMaxVarExponent));
            double tf = tpow == 4 ? t * t * t * t : 1.0;
            acc += unit.weights[k] * k6 * ex * tf;
        }
        return acc / (h * M_PI * n);
    };

    // normal-reference curvature functionals
    const double s = std::max(sigma_x, 1e-12);
    const double theta2_nr = 3.0 / (8.0 * std::sqrt(M_PI) * std::pow(s, 5));
    const double theta3_nr = 15.0 / (16.0 * std::sqrt(M_PI) * std::pow(s, 7));

    // stage 1: pilot bandwidth for the theta2 estimate
    auto stage1 = [&](double g) {
        double bias = kKernelMu2 * g * g * theta3_nr / 2.0;
        return bias * bias + var_integral(g, 4);
    };
    double g = minimize_log_bandwidth(stage1, h_lo, h_hi);

    // theta2 from the empirical characteristic function, debiased
    QuadratureRule gq = gauss_legendre(100, 0.0, 1.0 / g);
    EmpiricalCf cf = empirical_cf(w, gq.nodes);
    double theta2 = 0.0;
    for (std::size_t k = 0; k < gq.nodes.size(); ++k) {
        double t = gq.nodes[k];
        double ker = 1.0 - (g * t) * (g * t);
        double k6 = std::pow(ker, 6);
        double ex = std::exp(std::min(sigma_w2 * t * t, kMaxVarExponent));
        double mod2 = cf.re[k] * cf.re[k] + cf.im[k] * cf.im[k];
        double debiased = (n * mod2 - 1.0) * n / (static_cast<double>(n) * (n - 1.0));
        theta2 += gq.weights[k] * t * t * t * t * k6 * ex * debiased;
    }
    theta2 /= M_PI;
    if (!std::isfinite(theta2) || theta2 <= 0.0) {
        *used_fallback = true;
        theta2 = theta2_nr;
    }

    auto stage2 = [&](double h) {
        return std::pow(h, 4) * kKernelMu2 * kKernelMu2 * theta2 / 4.0 + var_integral(h, 0);
    };
    double h = minimize_log_bandwidth(stage2, h_lo, h_hi);
    if (!std::isfinite(h) || h <= 0.0) return 0.0;
    return h;
}

} // namespace

GaussianPrior estimate_prior_moments(const Eigen::VectorXd& w, const ErrorModel& err) {
    if (w.size() < 3) throw std::invalid_argument("estimate_prior_moments: need n >= 3");
    if (err.sigma_w2 < 0.0) throw std::invalid_argument("sigma_w2 must be >= 0");
    double var_w = sample_variance(w);
    if (!(var_w > 0.0))
        throw std::invalid_argument("estimate_prior_moments: constant w, no predictor variance");
    GaussianPrior prior;
    prior.mu_x = w.mean();
    prior.sigma_x2 = std::max(var_w - err.sigma_w2, 0.05 * var_w);
    return prior;
}

PosteriorParams posterior_params(const GaussianPrior& prior, const ErrorModel& err, double w_i) {
    if (!(prior.sigma_x2 > 0.0)) throw std::invalid_argument("posterior_params: sigma_x2 <= 0");
    if (err.sigma_w2 == 0.0) return {w_i, 0.0};
    double denom = prior.sigma_x2 + err.sigma_w2;
    PosteriorParams p;
    p.mean = (prior.sigma_x2 * w_i + prior.mu_x * err.sigma_w2) / denom;
    p.variance = prior.sigma_x2 * err.sigma_w2 / denom;
    return p;
}

PosteriorSampleSet sample_gaussian_posterior(const GaussianPrior& prior, const ErrorModel& err,
                                             const Eigen::VectorXd& w, int S, std::uint64_t seed,
                                             Exec exec) {
    if (S < 2) throw std::invalid_argument("sample_gaussian_posterior: S must be >= 2");
    const long n = w.size();
    PosteriorSampleSet out;
    out.seed = seed;
    out.samples.resize(n, S);
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (long i = 0; i < n; ++i) {
        PosteriorParams pp = posterior_params(prior, err, w[i]);
        if (pp.variance <= 0.0) {
            out.samples.row(i).setConstant(pp.mean);
            continue;
        }
        std::mt19937_64 eng = substream(seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(pp.mean, std::sqrt(pp.variance));
        for (int s = 0; s < S; ++s) out.samples(i, s) = normal(eng);
    }
    return out;
}

DeconvDensity deconvolve_density(const Eigen::VectorXd& w, const ErrorModel& err, int grid_size) {
    const long n = w.size();
    if (!(err.sigma_w2 > 0.0))
        throw std::invalid_argument("deconvolve_density: needs sigma_w2 > 0");
    if (n < 3) throw std::invalid_argument("deconvolve_density: need n >= 3");
    if (n < 30)
        std::cerr << "warning: deconvolve_density: n < 30, estimate will be unstable\n";
    if (grid_size < 16) throw std::invalid_argument("deconvolve_density: grid too small");

    const double sigma_w = std::sqrt(err.sigma_w2);
    const double var_w = sample_variance(w);
    const double sigma_x = std::sqrt(std::max(var_w - err.sigma_w2, 0.05 * var_w));

    bool nr_fallback = false;
    double h = plugin_bandwidth(w, err.sigma_w2, sigma_x, &nr_fallback);
    if (h <= 0.0 || !std::isfinite(h)) {
        nr_fallback = true;
        // last-resort normal-scale rule on the deconvolution scale
        h = std::max(1.06 * sigma_x * std::pow(static_cast<double>(n), -0.2),
                     sigma_w / std::sqrt(kMaxVarExponent));
    }
    if (nr_fallback)
        std::cerr << "warning: deconvolve_density: plug-in bandwidth degenerated, "
                     "using normal-reference curvature\n";

    DeconvDensity out;
    out.bandwidth = h;
    out.grid.resize(grid_size);
    const double lo = w.minCoeff() - 3.0 * sigma_w;
    const double hi = w.maxCoeff() + 3.0 * sigma_w;
    for (int g = 0; g < grid_size; ++g) {
        double frac = static_cast<double>(g) / (grid_size - 1);
        out.grid[g] = lo * (1.0 - frac) + hi * frac;
    }

    // f_hat(x) = (1/pi) int_0^{1/h} Re[e^{-itx} cf_w(t)] (1-(ht)^2)^3
    //            exp(sigma_w2 t^2 / 2) dt
    const QuadratureRule q = gauss_legendre(200, 0.0, 1.0 / h);
    EmpiricalCf cf = empirical_cf(w, q.nodes);
    Eigen::VectorXd amp(q.nodes.size());
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        double t = q.nodes[k];
        double ker = 1.0 - (h * t) * (h * t);
        amp[k] = q.weights[k] * ker * ker * ker *
                 std::exp(std::min(err.sigma_w2 * t * t / 2.0, kMaxVarExponent));
    }
    out.density.resize(grid_size);
    for (int g = 0; g < grid_size; ++g) {
        double x = out.grid[g];
        double acc = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            double t = q.nodes[k];
            acc += amp[k] * (cf.re[k] * std::cos(t * x) + cf.im[k] * std::sin(t * x));
        }
        out.density[g] = std::max(acc / M_PI, 0.0); // clip oscillation undershoot
    }

    // trapezoid renormalization to a proper density
    double integral = 0.0;
    for (int g = 1; g < grid_size; ++g)
        integral += 0.5 * (out.density[g] + out.density[g - 1]) * (out.grid[g] - out.grid[g - 1]);
    if (!(integral > 0.0))
        throw std::runtime_error("deconvolve_density: estimate vanished after clipping");
    out.density /= integral;
    return out;
}

PosteriorSampleSet sample_deconv_posterior(const DeconvDensity& dens, const ErrorModel& err,
                                           const Eigen::VectorXd& w, int S, std::uint64_t seed,
                                           Exec exec) {
    if (S < 2) throw std::invalid_argument("sample_deconv_posterior: S must be >= 2");
    if (!(err.sigma_w2 > 0.0))
        throw std::invalid_argument("sample_deconv_posterior: needs sigma_w2 > 0");
    const long G = dens.grid.size();
    if (G < 2 || dens.density.size() != G)
        throw std::invalid_argument("sample_deconv_posterior: invalid density");
    const long n = w.size();
    const double spacing = dens.grid[1] - dens.grid[0];
    const GaussianPrior fallback_prior = estimate_prior_moments(w, err);

    PosteriorSampleSet out;
    out.seed = seed;
    out.samples.resize(n, S);
    long fallback_rows = 0;
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) reduction(+ : fallback_rows) if (par)
    for (long i = 0; i < n; ++i) {
        // posterior weights on the grid; exponent shifted by its minimum so
        // at least one term is O(1)
        Eigen::VectorXd cdf(G);
        double shift = std::numeric_limits<double>::infinity();
        for (long g = 0; g < G; ++g) {
            double d = w[i] - dens.grid[g];
            shift = std::min(shift, d * d / (2.0 * err.sigma_w2));
        }
        double total = 0.0;
        for (long g = 0; g < G; ++g) {
            double d = w[i] - dens.grid[g];
            double lw = d * d / (2.0 * err.sigma_w2) - shift;
            double wt = lw < 700.0 ? dens.density[g] * std::exp(-lw) : 0.0;
            total += wt;
            cdf[g] = total;
        }
        std::mt19937_64 eng = substream(seed, static_cast<std::uint64_t>(i));
        if (!(total > 0.0) || !std::isfinite(total)) {
            // density has no mass near w_i: revert to the Gaussian posterior
            ++fallback_rows;
            PosteriorParams pp = posterior_params(fallback_prior, err, w[i]);
            std::normal_distribution<double> normal(pp.mean, std::sqrt(pp.variance));
            for (int s = 0; s < S; ++s) out.samples(i, s) = normal(eng);
            continue;
        }
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int s = 0; s < S; ++s) {
            double u = unif(eng) * total;
            long lo2 = 0, hi2 = G - 1;
            while (lo2 < hi2) {
                long mid = (lo2 + hi2) / 2;
                if (cdf[mid] < u)
                    lo2 = mid + 1;
                else
                    hi2 = mid;
            }
            double jitter = (unif(eng) - 0.5) * spacing;
            out.samples(i, s) = dens.grid[lo2] + jitter;
        }
    }
    if (fallback_rows > 0)
        std::cerr << "warning: sample_deconv_posterior: " << fallback_rows
                  << " rows had vanishing grid weights, used Gaussian posterior fallback\n";
    return out;
}

} // namespace osmee
