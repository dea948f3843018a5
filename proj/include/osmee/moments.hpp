#pragma once

#include <utility>

#include <Eigen/Core>

#include "osmee/basis.hpp"
#include "osmee/family.hpp"
#include "osmee/threads.hpp"
#include "osmee/working_fit.hpp"

namespace osmee {

// One observation's Taylor linearization of the Monte-Carlo conditional
// mean around b0, plus its conditional variance split into the fully-known
// part and the part multiplying an unknown dispersion.
struct LinearizedRow {
    double offset = 0.0;
    Eigen::VectorXd m_row; // length p+q, ordered like [X | Z]
    double var_known = 0.0;
    double var_rel = 0.0;
};

struct CoefficientVector {
    Eigen::VectorXd beta;
    Eigen::VectorXd u;

    Eigen::VectorXd stacked() const {
        Eigen::VectorXd b(beta.size() + u.size());
        b << beta, u;
        return b;
    }
};

struct MomentOptions {
    bool robust = false; // MAD-based variance estimate instead of sample variance
    Exec exec = Exec::parallel;
};

// Basis rows of the posterior draws for all observations. The (n*S) x d
// block is materialized once when it fits in the cache budget, otherwise
// rows are recomputed on demand; both paths give bitwise-identical results.
class SampleDesign {
  public:
    SampleDesign(const BasisDesign& design, const Eigen::MatrixXd& xsamples, Exec exec,
                 std::size_t cache_limit_bytes = std::size_t(256) << 20);

    long n() const { return xsamples_.rows(); }
    int S() const { return static_cast<int>(xsamples_.cols()); }
    int dims() const { return design_->total_dim(); }
    const BasisDesign& design() const { return *design_; }
    bool cached() const { return cached_; }

    // Basis rows (S x dims) for observation i. When streaming, rows are
    // written into `scratch` and the returned Ref points there.
    Eigen::Ref<const RowMatrixXd> block(long i, RowMatrixXd& scratch,
                                        BasisDesign::EvalScratch& eval_scratch) const;

  private:
    const BasisDesign* design_; // owned by the caller, outlives this object
    Eigen::MatrixXd xsamples_;
    RowMatrixXd cache_;
    bool cached_ = false;
};

// Monte-Carlo mean of mu(r_is' b) over the samples of one observation.
double mc_conditional_mean(const Eigen::Ref<const RowMatrixXd>& sample_rows,
                           const Eigen::VectorXd& b, const FamilySpec& family);

// Offset and model-matrix row of the linearization around b0.
LinearizedRow linearize(const Eigen::Ref<const RowMatrixXd>& sample_rows,
                        const Eigen::VectorXd& b0, const FamilySpec& family);

// Conditional variance as (var_known, var_rel); the second Monte-Carlo term
// is the sample variance of the mu values (or the squared scaled MAD when
// robust). Bernoulli/binomial use the exact pbar(1-pbar) form instead.
std::pair<double, double> mc_conditional_variance(const Eigen::Ref<const RowMatrixXd>& sample_rows,
                                                  const Eigen::VectorXd& b0,
                                                  const FamilySpec& family,
                                                  const ScaleParams& scale, bool robust);

// Batched assembly over all observations; the parallel path writes each
// observation's results to disjoint slots, so results do not depend on the
// thread count.
struct AssembledRows {
    Eigen::VectorXd offset;
    RowMatrixXd M; // n x (p+q)
    Eigen::VectorXd var_known;
    Eigen::VectorXd var_rel;
};

AssembledRows assemble_rows(const SampleDesign& sd, const Eigen::VectorXd& b0,
                            const FamilySpec& family, const ScaleParams& scale,
                            const MomentOptions& opt);

Eigen::VectorXd mc_conditional_means(const SampleDesign& sd, const Eigen::VectorXd& b,
                                     const FamilySpec& family, Exec exec);

// Working model for one iteration: response y - offset, matrices split into
// unpenalized/penalized columns, variance floor applied (total variance at
// least 1e-8 of the median total).
WorkingModel assemble_working_model(const AssembledRows& rows, const Eigen::VectorXd& y, int p,
                                    const Eigen::MatrixXd& penalty, ScaleClass scale_class);

} // namespace osmee
