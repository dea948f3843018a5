#pragma once

#include <vector>

#include <Eigen/Core>

namespace osmee {

enum class BasisKindId { truncated_linear, thin_plate, cubic_regression, p_spline };

struct BasisKind {
    BasisKindId kind = BasisKindId::thin_plate;
    int dim = 40;
};

// Row-major storage so that per-observation blocks of stacked evaluations
// are contiguous.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Design matrix block [X | Z] with the penalty acting on the Z coefficients.
struct BasisExpansion {
    Eigen::MatrixXd X; // n x p, unpenalized (always contains the constant)
    Eigen::MatrixXd Z; // n x q, penalized
    Eigen::MatrixXd S; // q x q penalty in the same coordinates as Z
};

// A frozen basis construction. Immutable after build_basis; evaluation is
// pure, so designs can be shared across threads.
//
// Column conventions per kind:
//   truncated_linear: X=[1,x], Z_j=(x-k_j)_+, S=I. dim = number of knots.
//   p_spline:         X=[1], Z = cubic B-splines on even knots, S = D2'D2
//                     (second-order difference penalty, rank dim-2). dim =
//                     number of B-spline functions.
//   cubic_regression: X=[1,x]; the natural-cubic value basis is rotated to
//                     the penalty eigenbasis, ergo Z has q = dim-2 columns
//                     and S is diagonal positive. dim = number of knots.
//   thin_plate:       X=[1,x]; low-rank eigen-approximation of the full
//                     thin-plate system, Z has q = dim-2 columns. dim =
//                     total column count, matching the usual convention.
class BasisDesign {
  public:
    BasisKindId kind() const { return kind_; }
    int dim() const { return dim_; }
    int p() const { return kind_ == BasisKindId::p_spline ? 1 : 2; }
    int q() const;
    int total_dim() const { return p() + q(); }
    double range_min() const { return range_min_; }
    double range_max() const { return range_max_; }
    const Eigen::VectorXd& knots() const { return knots_; }

    // Penalty in the coordinates of the fitted expansion (matches Z).
    const Eigen::MatrixXd& penalty_fit() const { return S_fit_; }

    // Reusable buffers for eval_rows; one per thread in parallel loops.
    struct EvalScratch {
        RowMatrixXd E;
    };

    // Fill out (n x (p+q)) with rows [x_i | z_i].
    void eval_rows(const double* pts, long n, Eigen::Ref<RowMatrixXd> out,
                   EvalScratch& scratch) const;
    void eval_rows(const Eigen::VectorXd& pts, Eigen::Ref<RowMatrixXd> out) const;

    friend BasisDesign build_basis(const BasisKind& kind, const std::vector<double>& points);
    friend const Eigen::MatrixXd& penalty_matrix(const BasisDesign& design);

  private:
    void eval_row(double x, double* xrow, double* zrow) const;
    void eval_rows_thin_plate(const double* pts, long n, Eigen::Ref<RowMatrixXd> out,
                              EvalScratch& scratch) const;

    BasisKindId kind_ = BasisKindId::truncated_linear;
    int dim_ = 0;
    double range_min_ = 0.0, range_max_ = 0.0;
    Eigen::VectorXd knots_;  // tl/cr: knots; ps: full extended knot vector
    Eigen::MatrixXd S_fit_;  // penalty in fitted coordinates
    Eigen::MatrixXd S_raw_;  // penalty in the kind's native coordinates

    // cubic_regression pieces: value-basis rotation and derived rows
    Eigen::MatrixXd cr_U_;      // K x q eigenvectors of the raw penalty
    Eigen::MatrixXd cr_G_;      // (K-2) x q, second-derivative rows times cr_U_
    Eigen::RowVectorXd cr_left_slope_, cr_right_slope_; // linear extrapolation

    // thin_plate pieces
    Eigen::VectorXd tp_sites_;  // m construction sites
    Eigen::MatrixXd tp_map_;    // m x q, maps kernel evaluations to Z columns
};

// Construct a basis from data. Knots sit at empirical quantiles of the
// construction points (truncated_linear: interior quantiles; cubic_regression:
// quantiles including the extremes), evenly over the range for p_spline, and
// at (possibly thinned) unique data sites for thin_plate.
// Throws std::invalid_argument on degenerate input or too few distinct points.
BasisDesign build_basis(const BasisKind& kind, const std::vector<double>& points);

BasisExpansion evaluate_basis(const BasisDesign& design, const Eigen::VectorXd& points);

// Penalty in the kind's native coordinates: identity for truncated_linear,
// D2'D2 for p_spline, the natural-cubic-spline curvature form (value
// coordinates, dim x dim) for cubic_regression, and the constrained
// eigen-system penalty for thin_plate. Note cubic_regression's fitted
// expansion uses the diagonalized rotation of this matrix; see penalty_fit().
const Eigen::MatrixXd& penalty_matrix(const BasisDesign& design);

// Type-7 (linear interpolation) empirical quantile of a sample.
double quantile(std::vector<double> sorted_or_not, double prob);

} // namespace osmee
