#include "osmee/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "osmee/csv.hpp"
#include "osmee/rng.hpp"

namespace osmee {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

std::array<SimCase, 4> make_cases() {
    std::array<SimCase, 4> c;
    c[0] = {1, 0.1, 0.9, 0.141 * 0.141, 0.5, 0.25 * 0.25, 6.0, 2.0,
            [](double x) { return 2.0 * std::sin(4.0 * M_PI * x); }};
    c[1] = {2, -2.0, 2.0, 0.8 * 0.8, 0.0, 1.0, 3.0, 6.0,
            [](double x) { return 2.0 * std::tanh(x); }};
    c[2] = {3, 0.1, 0.9, 0.11 * 0.11, 0.5, 0.25 * 0.25, 1.5, 10.0, [](double x) {
                double u = pos(x), v = pos(1.0 - x);
                return 100.0 * u * u * u * v * v * v;
            }};
    c[3] = {4, 0.3, 0.8, 0.075 * 0.075, 0.6, 0.12 * 0.12, 5.0, 4.0, [](double x) {
                return 2.0 * std::exp(-60.0 * (x - 0.6) * (x - 0.6)) + 0.25 / (0.1 + x);
            }};
    return c;
}

// Skew-normal draws appended through a caller-owned engine so dataset
// generation can keep x, noise and y on one stream.
void draw_skew_normal(std::mt19937_64& g, double target_mean, double target_sd, double alpha,
                      Eigen::VectorXd& out) {
    const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
    const double ez = delta * std::sqrt(2.0 / M_PI); // mean of the standard skew normal
    const double omega = target_sd / std::sqrt(1.0 - ez * ez);
    const double xi = target_mean - omega * ez;
    std::normal_distribution<double> N(0.0, 1.0);
    for (long i = 0; i < out.size(); ++i) {
        const double z1 = N(g), z2 = N(g);
        const double z = delta * std::abs(z1) + std::sqrt(1.0 - delta * delta) * z2;
        out[i] = xi + omega * z;
    }
}

double draw_response(std::mt19937_64& g, const FamilySpec& family, double mu,
                     const SimCase& sc) {
    switch (family.family) {
        case Family::gaussian: {
            std::normal_distribution<double> N(mu, 1.0);
            return N(g);
        }
        case Family::poisson:
        case Family::quasi_poisson: {
            std::poisson_distribution<long> P(mu);
            return static_cast<double>(P(g));
        }
        case Family::bernoulli:
        case Family::binomial: {
            std::bernoulli_distribution B(mu);
            return B(g) ? 1.0 : 0.0;
        }
        case Family::negative_binomial: {
            // gamma-mixed Poisson: rate Gamma(theta, mu/theta), then Poisson
            std::gamma_distribution<double> G(sc.theta, mu / sc.theta);
            const double rate = G(g);
            if (!(rate > 0.0)) return 0.0;
            std::poisson_distribution<long> P(rate);
            return static_cast<double>(P(g));
        }
        case Family::gamma: {
            std::gamma_distribution<double> G(sc.gamma_shape, mu / sc.gamma_shape);
            double v = G(g);
            if (!(v > 0.0)) v = std::numeric_limits<double>::min(); // underflow guard
            return v;
        }
    }
    throw std::logic_error("draw_response: unreachable");
}

} // namespace

const std::array<SimCase, 4>& builtin_cases() {
    static const std::array<SimCase, 4> cases = make_cases();
    return cases;
}

const SimCase& builtin_case(int id) {
    if (id < 1 || id > 4)
        throw std::invalid_argument("builtin_case: id must be in 1..4, got " + std::to_string(id));
    return builtin_cases()[id - 1];
}

std::string XDist::label() const {
    if (alpha == 0.0) return "gaussian";
    const long r = std::lround(alpha);
    if (static_cast<double>(r) == alpha) return "skew" + std::to_string(r);
    return "skew" + format_double(alpha);
}

Eigen::VectorXd sample_skew_normal(double target_mean, double target_sd, double alpha, long n,
                                   std::uint64_t seed) {
    if (!(target_sd > 0.0))
        throw std::invalid_argument("sample_skew_normal: target_sd must be positive");
    if (n < 1) throw std::invalid_argument("sample_skew_normal: need n >= 1");
    Eigen::VectorXd out(n);
    std::mt19937_64 g = engine(seed);
    draw_skew_normal(g, target_mean, target_sd, alpha, out);
    return out;
}

Dataset generate_dataset(const SimCase& sc, const FamilySpec& family, long n, const XDist& xdist,
                         std::uint64_t seed) {
    if (n < 8) throw std::invalid_argument("generate_dataset: need n >= 8");
    if (!sc.m) throw std::invalid_argument("generate_dataset: case has no regression function");
    if (!(sc.sigma_w2 >= 0.0))
        throw std::invalid_argument("generate_dataset: negative error variance");
    Dataset ds;
    ds.x.resize(n);
    ds.w.resize(n);
    ds.y.resize(n);
    std::mt19937_64 g = engine(seed);
    draw_skew_normal(g, sc.mu_x, std::sqrt(sc.sigma_x2), xdist.alpha, ds.x);
    const double sigma_w = std::sqrt(sc.sigma_w2);
    std::normal_distribution<double> N(0.0, 1.0);
    for (long i = 0; i < n; ++i) ds.w[i] = ds.x[i] + sigma_w * N(g);
    for (long i = 0; i < n; ++i) {
        const double mu = mean_eval(family, sc.m(ds.x[i]));
        ds.y[i] = draw_response(g, family, mu, sc);
    }
    return ds;
}

Eigen::VectorXd case_grid(const SimCase& sc, int points) {
    if (points < 2) throw std::invalid_argument("case_grid: need at least 2 points");
    Eigen::VectorXd d(points);
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / (points - 1);
        d[i] = sc.a * (1.0 - t) + sc.b * t; // endpoints land exactly on a and b
    }
    return d;
}

Eigen::VectorXd true_curve(const SimCase& sc, const FamilySpec& family,
                           const Eigen::VectorXd& grid) {
    if (!sc.m) throw std::invalid_argument("true_curve: case has no regression function");
    Eigen::VectorXd mu(grid.size());
    for (long i = 0; i < grid.size(); ++i) mu[i] = mean_eval(family, sc.m(grid[i]));
    return mu;
}

Eigen::VectorXd evaluate_fit(const Eigen::VectorXd& curve, const Eigen::VectorXd& truth) {
    if (curve.size() != truth.size())
        throw std::invalid_argument("evaluate_fit: curve and truth lengths differ");
    return (curve - truth).array().square();
}

const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::naive: return "naive";
        case Estimator::osmee_gaussian: return "osmee_gaussian";
        case Estimator::osmee_deconv: return "osmee_deconv";
    }
    throw std::logic_error("estimator_name: unreachable");
}

namespace {

// One replicate's signed error curves, one per requested estimator; an
// empty vector marks a failed fit.
struct RepSlot {
    std::vector<Eigen::VectorXd> err;
    std::vector<double> secs;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RepSlot run_replicate(const SimCase& sc, const OsmeeConfig& base, const StudyConfig& cfg, long n,
                      int rep, const Eigen::VectorXd& grid, const Eigen::VectorXd& truth) {
    const auto& est = cfg.estimators;
    const int E = static_cast<int>(est.size());
    RepSlot slot;
    slot.err.resize(E);
    slot.secs.assign(E, 0.0);

    const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
    Dataset ds;
    try {
        ds = generate_dataset(sc, base.family, n, cfg.xdist, rep_seed);
    } catch (...) {
        return slot; // counts as a failure for every estimator
    }

    auto index_of = [&](Estimator e) {
        for (int i = 0; i < E; ++i)
            if (est[i] == e) return i;
        return -1;
    };
    const int i_naive = index_of(Estimator::naive);
    const int i_gauss = index_of(Estimator::osmee_gaussian);
    const int i_deconv = index_of(Estimator::osmee_deconv);

    const ErrorModel err{sc.sigma_w2};
    OsmeeFit fit_gauss, fit_deconv;
    const NaiveFit* naive = nullptr;

    if (i_gauss >= 0) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            OsmeeConfig oc = base;
            oc.sampler = SamplerKind::gaussian_prior;
            oc.seed = rep_seed;
            fit_gauss = run_osmee(ds.y, ds.w, err, oc);
            slot.err[i_gauss] = predict_curve(fit_gauss, grid) - truth;
            naive = &fit_gauss.naive;
        } catch (...) {
        }
        slot.secs[i_gauss] = seconds_since(t0);
    }
    if (i_deconv >= 0) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            OsmeeConfig oc = base;
            oc.sampler = SamplerKind::deconvolution;
            oc.seed = rep_seed;
            fit_deconv = run_osmee(ds.y, ds.w, err, oc);
            slot.err[i_deconv] = predict_curve(fit_deconv, grid) - truth;
            if (!naive) naive = &fit_deconv.naive;
        } catch (...) {
        }
        slot.secs[i_deconv] = seconds_since(t0);
    }
    if (i_naive >= 0) {
        const auto t0 = std::chrono::steady_clock::now();
        NaiveFit own;
        try {
            if (!naive) {
                ScaleParams sp;
                if (base.theta) sp.theta = *base.theta;
                if (base.gamma_shape) sp.gamma_shape = *base.gamma_shape;
                own = fit_naive_glm(ds.y, ds.w, base.basis, base.family, base.method, sp);
                naive = &own;
            }
            slot.err[i_naive] = predict_naive_curve(*naive, base.family, grid) - truth;
        } catch (...) {
        }
        slot.secs[i_naive] = seconds_since(t0);
    }
    return slot;
}

} // namespace

StudyResult run_study(const SimCase& sc, const StudyConfig& cfg) {
    if (cfg.reps < 2) throw std::invalid_argument("run_study: need reps >= 2");
    if (cfg.estimators.empty()) throw std::invalid_argument("run_study: no estimators requested");
    if (cfg.n_list.empty()) throw std::invalid_argument("run_study: empty n list");

    OsmeeConfig base = cfg.osmee;
    // shape parameters default to the scenario's values
    if (base.family.family == Family::negative_binomial && !base.theta) base.theta = sc.theta;
    if (base.family.family == Family::gamma && !base.gamma_shape)
        base.gamma_shape = sc.gamma_shape;

    const Eigen::VectorXd grid = case_grid(sc);
    const Eigen::VectorXd truth = true_curve(sc, base.family, grid);
    const int E = static_cast<int>(cfg.estimators.size());
    const long G = grid.size();

    StudyResult res;
    for (long n : cfg.n_list) {
        std::vector<RepSlot> slots(cfg.reps);
        const bool par = base.exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
        for (int rep = 0; rep < cfg.reps; ++rep) {
            try {
                slots[rep] = run_replicate(sc, base, cfg, n, rep, grid, truth);
            } catch (...) {
                slots[rep].err.assign(E, Eigen::VectorXd());
                slots[rep].secs.assign(E, 0.0);
            }
        }
        // aggregate serially in replicate order so results are independent
        // of scheduling
        for (int e = 0; e < E; ++e) {
            Eigen::VectorXd sum_err = Eigen::VectorXd::Zero(G);
            double sum_sq = 0.0, secs = 0.0;
            int used = 0;
            for (int rep = 0; rep < cfg.reps; ++rep) {
                const RepSlot& s = slots[rep];
                if (static_cast<int>(s.err.size()) != E || s.err[e].size() != G) continue;
                sum_err += s.err[e];
                sum_sq += s.err[e].squaredNorm();
                secs += s.secs[e];
                ++used;
            }
            StudyRow row;
            row.case_id = sc.id;
            row.family = base.family.family_name();
            row.xdist = cfg.xdist.label();
            row.estimator = estimator_name(cfg.estimators[e]);
            row.n = n;
            row.reps_used = used;
            row.reps_failed = cfg.reps - used;
            if (used > 0) {
                row.mse = sum_sq / (static_cast<double>(used) * G);
                const double msb = (sum_err / used).squaredNorm() / G;
                row.bias2_fraction =
                    row.mse > 0.0 ? std::clamp(msb / row.mse, 0.0, 1.0) : 0.0;
            } else {
                row.mse = std::numeric_limits<double>::quiet_NaN();
                row.bias2_fraction = std::numeric_limits<double>::quiet_NaN();
            }
            row.runtime_sec = cfg.record_runtime ? secs : 0.0;
            res.rows.push_back(std::move(row));
        }
    }
    return res;
}

void write_study_csv(std::ostream& os, const StudyResult& result) {
    os << "case,family,xdist,estimator,n,reps_used,reps_failed,mse,bias2_fraction,runtime_sec\n";
    for (const StudyRow& r : result.rows) {
        os << join_row({std::to_string(r.case_id), r.family, r.xdist, r.estimator,
                        std::to_string(r.n), std::to_string(r.reps_used),
                        std::to_string(r.reps_failed), format_double(r.mse),
                        format_double(r.bias2_fraction), format_double(r.runtime_sec)})
           << "\n";
    }
}

double reliability_ratio(double var_observed, double sigma_w2) {
    if (var_observed < 0.0 || sigma_w2 < 0.0)
        throw std::invalid_argument("reliability_ratio: negative variance");
    if (var_observed == 0.0 && sigma_w2 == 0.0)
        throw std::invalid_argument("reliability_ratio: both variances zero");
    return var_observed / (var_observed + sigma_w2);
}

double reliability_ratio_corrected(double var_observed, double sigma_w2) {
    if (var_observed < 0.0 || sigma_w2 < 0.0)
        throw std::invalid_argument("reliability_ratio: negative variance");
    const double var_x = var_observed - sigma_w2;
    if (!(var_x > 0.0))
        throw std::invalid_argument(
            "reliability_ratio: error variance at least as large as the observed variance");
    return var_x / var_observed;
}

} // namespace osmee
