#include "osmee/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace osmee {

namespace {

constexpr double kLogEtaMax = 700.0;

[[noreturn]] void bad_sample(long obs, long s) {
    throw std::domain_error("mc moments: non-finite mean at observation " + std::to_string(obs) +
                            ", sample " + std::to_string(s));
}

// mu and mu' over one observation's eta draws, with explicit overflow
// checks so failures name the offending sample.
void eval_mu_mud(const FamilySpec& family, const Eigen::VectorXd& eta, long obs,
                 Eigen::VectorXd& mu, Eigen::VectorXd* mud) {
    const long S = eta.size();
    mu.resize(S);
    if (mud) mud->resize(S);
    switch (family.link) {
        case Link::identity:
            for (long s = 0; s < S; ++s) {
                if (!std::isfinite(eta[s])) bad_sample(obs, s);
                mu[s] = eta[s];
                if (mud) (*mud)[s] = 1.0;
            }
            break;
        case Link::log_link:
            for (long s = 0; s < S; ++s) {
                if (!std::isfinite(eta[s]) || eta[s] > kLogEtaMax) bad_sample(obs, s);
                mu[s] = std::exp(eta[s]);
                if (mud) (*mud)[s] = mu[s];
            }
            break;
        case Link::logit:
            for (long s = 0; s < S; ++s) {
                if (!std::isfinite(eta[s])) bad_sample(obs, s);
                double p = eta[s] >= 0.0 ? 1.0 / (1.0 + std::exp(-eta[s]))
                                         : std::exp(eta[s]) / (1.0 + std::exp(eta[s]));
                p = std::clamp(p, 1e-12, 1.0 - 1e-12);
                mu[s] = p;
                if (mud) (*mud)[s] = p * (1.0 - p);
            }
            break;
    }
}

double sample_variance_of(const Eigen::VectorXd& v) {
    const long S = v.size();
    double mean = v.mean();
    double acc = 0.0;
    for (long s = 0; s < S; ++s) acc += (v[s] - mean) * (v[s] - mean);
    return acc / (S - 1);
}

double mad_squared(const Eigen::VectorXd& v, std::vector<double>& work) {
    const long S = v.size();
    work.assign(v.data(), v.data() + S);
    auto mid = work.begin() + S / 2;
    std::nth_element(work.begin(), mid, work.end());
    double med = *mid;
    for (double& x : work) x = std::abs(x - med);
    std::nth_element(work.begin(), mid, work.end());
    double mad = 1.4826 * *mid;
    return mad * mad;
}

// Family split of the Eq-style conditional variance: first (GLM) term into
// var_known or var_rel depending on what is known, second (MC spread) term
// always fully known. Bernoulli replaces the whole thing by the exact
// pbar(1-pbar).
void split_variance(const FamilySpec& family, const ScaleParams& scale, double mean_mu,
                    double mean_mu2, double second_term, double& var_known, double& var_rel) {
    switch (family.family) {
        case Family::poisson:
            var_known = mean_mu + second_term;
            var_rel = 0.0;
            break;
        case Family::quasi_poisson:
            var_rel = mean_mu;
            var_known = second_term;
            break;
        case Family::negative_binomial:
            if (!(scale.theta > 0.0))
                throw std::invalid_argument("negative binomial variance needs theta > 0");
            var_known = mean_mu + (std::isfinite(scale.theta) ? mean_mu2 / scale.theta : 0.0) +
                        second_term;
            var_rel = 0.0;
            break;
        case Family::gamma:
            if (!(scale.gamma_shape > 0.0))
                throw std::invalid_argument("gamma variance needs shape > 0");
            var_known = mean_mu2 / scale.gamma_shape + second_term;
            var_rel = 0.0;
            break;
        case Family::gaussian:
            var_known = second_term;
            var_rel = 1.0;
            break;
        case Family::bernoulli:
            var_known = mean_mu * (1.0 - mean_mu);
            var_rel = 0.0;
            break;
        case Family::binomial:
            var_known = mean_mu * (1.0 - mean_mu) / std::max(scale.trials, 1.0);
            var_rel = 0.0;
            break;
    }
}

struct RowScratch {
    RowMatrixXd block;
    BasisDesign::EvalScratch eval;
    Eigen::VectorXd eta, mu, mud;
    std::vector<double> work;
};

// Full per-observation kernel shared by the serial and parallel paths.
void process_row(const SampleDesign& sd, long i, const Eigen::VectorXd& b0,
                 const FamilySpec& family, const ScaleParams& scale, bool robust,
                 RowScratch& scr, double& offset, Eigen::Ref<Eigen::RowVectorXd> m_row,
                 double& var_known, double& var_rel) {
    Eigen::Ref<const RowMatrixXd> R = sd.block(i, scr.block, scr.eval);
    const long S = R.rows();
    scr.eta.noalias() = R * b0;
    eval_mu_mud(family, scr.eta, i, scr.mu, &scr.mud);
    const double mean_mu = scr.mu.mean();
    m_row.noalias() = (scr.mud.transpose() * R) / static_cast<double>(S);
    offset = mean_mu - m_row.dot(b0);
    const double second =
        robust ? mad_squared(scr.mu, scr.work) : sample_variance_of(scr.mu);
    const double mean_mu2 = scr.mu.squaredNorm() / static_cast<double>(S);
    split_variance(family, scale, mean_mu, mean_mu2, second, var_known, var_rel);
}

} // namespace

SampleDesign::SampleDesign(const BasisDesign& design, const Eigen::MatrixXd& xsamples, Exec exec,
                           std::size_t cache_limit_bytes)
    : design_(&design), xsamples_(xsamples) {
    const long n = xsamples_.rows();
    const long S = xsamples_.cols();
    const long d = design.total_dim();
    if (n == 0 || S < 2) throw std::invalid_argument("SampleDesign: need n >= 1 and S >= 2");
    std::size_t bytes = static_cast<std::size_t>(n) * S * d * sizeof(double);
    cached_ = bytes <= cache_limit_bytes;
    if (!cached_) return;
    cache_.resize(n * S, d);
    const bool par = exec == Exec::parallel;
#pragma omp parallel if (par)
    {
        BasisDesign::EvalScratch scratch;
        // one observation's draws occupy contiguous row slices, so parallel
        // writes never overlap
#pragma omp for schedule(static)
        for (long i = 0; i < n; ++i) {
            Eigen::VectorXd xi = xsamples_.row(i);
            design_->eval_rows(xi.data(), S, cache_.middleRows(i * S, S), scratch);
        }
    }
}

Eigen::Ref<const RowMatrixXd> SampleDesign::block(long i, RowMatrixXd& scratch,
                                                  BasisDesign::EvalScratch& eval_scratch) const {
    const long S = xsamples_.cols();
    if (cached_) return cache_.middleRows(i * S, S);
    scratch.resize(S, design_->total_dim());
    Eigen::VectorXd xi = xsamples_.row(i);
    design_->eval_rows(xi.data(), S, scratch, eval_scratch);
    return scratch;
}

double mc_conditional_mean(const Eigen::Ref<const RowMatrixXd>& sample_rows,
                           const Eigen::VectorXd& b, const FamilySpec& family) {
    if (sample_rows.rows() < 2) throw std::invalid_argument("mc_conditional_mean: need S >= 2");
    Eigen::VectorXd eta = sample_rows * b;
    Eigen::VectorXd mu;
    eval_mu_mud(family, eta, 0, mu, nullptr);
    return mu.mean();
}

LinearizedRow linearize(const Eigen::Ref<const RowMatrixXd>& sample_rows,
                        const Eigen::VectorXd& b0, const FamilySpec& family) {
    if (sample_rows.rows() < 2) throw std::invalid_argument("linearize: need S >= 2");
    const long S = sample_rows.rows();
    Eigen::VectorXd eta = sample_rows * b0;
    Eigen::VectorXd mu, mud;
    eval_mu_mud(family, eta, 0, mu, &mud);
    LinearizedRow row;
    row.m_row = (mud.transpose() * sample_rows).transpose() / static_cast<double>(S);
    row.offset = mu.mean() - row.m_row.dot(b0);
    return row;
}

std::pair<double, double> mc_conditional_variance(const Eigen::Ref<const RowMatrixXd>& sample_rows,
                                                  const Eigen::VectorXd& b0,
                                                  const FamilySpec& family,
                                                  const ScaleParams& scale, bool robust) {
    if (sample_rows.rows() < 2)
        throw std::invalid_argument("mc_conditional_variance: need S >= 2");
    Eigen::VectorXd eta = sample_rows * b0;
    Eigen::VectorXd mu;
    eval_mu_mud(family, eta, 0, mu, nullptr);
    std::vector<double> work;
    double second = robust ? mad_squared(mu, work) : sample_variance_of(mu);
    double mean_mu2 = mu.squaredNorm() / static_cast<double>(mu.size());
    double var_known = 0.0, var_rel = 0.0;
    split_variance(family, scale, mu.mean(), mean_mu2, second, var_known, var_rel);
    return {var_known, var_rel};
}

AssembledRows assemble_rows(const SampleDesign& sd, const Eigen::VectorXd& b0,
                            const FamilySpec& family, const ScaleParams& scale,
                            const MomentOptions& opt) {
    const long n = sd.n();
    const int d = sd.dims();
    if (b0.size() != d) throw std::invalid_argument("assemble_rows: coefficient length mismatch");
    AssembledRows out;
    out.offset.resize(n);
    out.M.resize(n, d);
    out.var_known.resize(n);
    out.var_rel.resize(n);

    const bool par = opt.exec == Exec::parallel;
    std::exception_ptr failure = nullptr;
#pragma omp parallel if (par)
    {
        RowScratch scr;
#pragma omp for schedule(static)
        for (long i = 0; i < n; ++i) {
            if (failure) continue;
            try {
                process_row(sd, i, b0, family, scale, opt.robust, scr, out.offset[i],
                            out.M.row(i), out.var_known[i], out.var_rel[i]);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

Eigen::VectorXd mc_conditional_means(const SampleDesign& sd, const Eigen::VectorXd& b,
                                     const FamilySpec& family, Exec exec) {
    const long n = sd.n();
    if (b.size() != sd.dims())
        throw std::invalid_argument("mc_conditional_means: coefficient length mismatch");
    Eigen::VectorXd means(n);
    const bool par = exec == Exec::parallel;
    std::exception_ptr failure = nullptr;
#pragma omp parallel if (par)
    {
        RowScratch scr;
#pragma omp for schedule(static)
        for (long i = 0; i < n; ++i) {
            if (failure) continue;
            try {
                Eigen::Ref<const RowMatrixXd> R = sd.block(i, scr.block, scr.eval);
                scr.eta.noalias() = R * b;
                eval_mu_mud(family, scr.eta, i, scr.mu, nullptr);
                means[i] = scr.mu.mean();
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return means;
}

WorkingModel assemble_working_model(const AssembledRows& rows, const Eigen::VectorXd& y, int p,
                                    const Eigen::MatrixXd& penalty, ScaleClass scale_class) {
    const long n = rows.offset.size();
    if (y.size() != n) throw std::invalid_argument("assemble_working_model: y length mismatch");
    const int d = static_cast<int>(rows.M.cols());
    if (p < 0 || p > d) throw std::invalid_argument("assemble_working_model: bad p");
    WorkingModel wm;
    wm.response = y - rows.offset;
    wm.M_beta = rows.M.leftCols(p);
    wm.M_u = rows.M.rightCols(d - p);
    wm.penalty = penalty;
    wm.scale_class = scale_class;
    wm.var_known = rows.var_known;
    wm.var_rel = rows.var_rel;
    // floor: keep every total variance at least 1e-8 of the median total
    std::vector<double> totals(n);
    for (long i = 0; i < n; ++i) totals[i] = wm.var_known[i] + wm.var_rel[i];
    auto mid = totals.begin() + n / 2;
    std::nth_element(totals.begin(), mid, totals.end());
    double floor_v = *mid > 0.0 ? 1e-8 * *mid : 1e-12;
    for (long i = 0; i < n; ++i) {
        double total = wm.var_known[i] + wm.var_rel[i];
        if (total < floor_v) wm.var_known[i] += floor_v - total;
    }
    return wm;
}

} // namespace osmee
