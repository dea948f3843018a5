#include "osmee/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace osmee {

namespace {

double quantile_sorted(const std::vector<double>& v, double prob) {
    const std::size_t n = v.size();
    if (n == 0) throw std::invalid_argument("quantile: empty sample");
    if (n == 1) return v[0];
    double h = (static_cast<double>(n) - 1.0) * prob;
    auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return v[n - 1];
    double frac = h - static_cast<double>(lo);
    return v[lo] + (v[lo + 1] - v[lo]) * frac;
}

std::vector<double> sorted_copy(const std::vector<double>& pts) {
    std::vector<double> s(pts);
    std::sort(s.begin(), s.end());
    return s;
}

std::vector<double> unique_sorted(const std::vector<double>& sorted) {
    std::vector<double> u(sorted);
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
}

// thin-plate radial kernel for d=1, second-order penalty
inline double tp_eta(double r) { return r * r * r / 12.0; }

// Values of the four cubic B-splines that can be nonzero at x, where
// t[l] <= x < t[l+1]; out[i] corresponds to basis index l-3+i. This is the
// classic triangular recurrence (de Boor's BSPLVB), which needs knots
// t[l-2..l+3] to exist.
void cubic_bspline_nonzero(const Eigen::VectorXd& t, int l, double x, double out[4]) {
    double deltaR[3], deltaL[3];
    out[0] = 1.0;
    for (int j = 0; j < 3; ++j) {
        deltaR[j] = t[l + j + 1] - x;
        deltaL[j] = x - t[l - j];
        double saved = 0.0;
        for (int r = 0; r <= j; ++r) {
            double term = out[r] / (deltaR[r] + deltaL[j - r]);
            out[r] = saved + deltaR[r] * term;
            saved = deltaL[j - r] * term;
        }
        out[j + 1] = saved;
    }
}

} // namespace

double quantile(std::vector<double> sample, double prob) {
    std::sort(sample.begin(), sample.end());
    return quantile_sorted(sample, prob);
}

int BasisDesign::q() const {
    switch (kind_) {
        case BasisKindId::truncated_linear: return static_cast<int>(knots_.size());
        case BasisKindId::p_spline: return dim_;
        case BasisKindId::cubic_regression:
        case BasisKindId::thin_plate: return dim_ - 2;
    }
    return 0;
}

BasisDesign build_basis(const BasisKind& kind, const std::vector<double>& points) {
    if (points.empty()) throw std::invalid_argument("build_basis: no construction points");
    const int dim = kind.dim;
    const int min_dim = kind.kind == BasisKindId::truncated_linear ? 1
                        : kind.kind == BasisKindId::p_spline       ? 4
                                                                   : 3;
    if (dim < min_dim)
        throw std::invalid_argument("build_basis: dim too small for this basis kind");

    std::vector<double> sorted = sorted_copy(points);
    std::vector<double> uniq = unique_sorted(sorted);
    if (uniq.size() < 2)
        throw std::invalid_argument("build_basis: degenerate (constant) construction points");
    if (static_cast<int>(uniq.size()) < dim)
        throw std::invalid_argument("build_basis: fewer distinct construction points than dim");

    BasisDesign d;
    d.kind_ = kind.kind;
    d.dim_ = dim;
    d.range_min_ = sorted.front();
    d.range_max_ = sorted.back();

    switch (kind.kind) {
        case BasisKindId::truncated_linear: {
            d.knots_.resize(dim);
            for (int j = 0; j < dim; ++j)
                d.knots_[j] = quantile_sorted(sorted, (j + 1.0) / (dim + 1.0));
            for (int j = 1; j < dim; ++j)
                if (!(d.knots_[j] > d.knots_[j - 1]))
                    throw std::invalid_argument(
                        "build_basis: quantile knots not strictly increasing; reduce dim");
            d.S_fit_ = Eigen::MatrixXd::Identity(dim, dim);
            d.S_raw_ = d.S_fit_;
            break;
        }
        case BasisKindId::p_spline: {
            // dim cubic B-splines need dim-3 even interior segments plus
            // three exterior knots on each side.
            const int nseg = dim - 3;
            const double a = d.range_min_, b = d.range_max_;
            const double step = (b - a) / nseg;
            d.knots_.resize(dim + 4);
            for (int j = 0; j < dim + 4; ++j) d.knots_[j] = a + (j - 3) * step;
            Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(dim - 2, dim);
            for (int r = 0; r < dim - 2; ++r) {
                D2(r, r) = 1.0;
                D2(r, r + 1) = -2.0;
                D2(r, r + 2) = 1.0;
            }
            d.S_fit_ = D2.transpose() * D2;
            d.S_raw_ = d.S_fit_;
            break;
        }
        case BasisKindId::cubic_regression: {
            const int K = dim;
            d.knots_.resize(K);
            for (int j = 0; j < K; ++j)
                d.knots_[j] = quantile_sorted(sorted, static_cast<double>(j) / (K - 1.0));
            for (int j = 1; j < K; ++j)
                if (!(d.knots_[j] > d.knots_[j - 1]))
                    throw std::invalid_argument(
                        "build_basis: quantile knots not strictly increasing; reduce dim");
            Eigen::VectorXd h(K - 1);
            for (int j = 0; j < K - 1; ++j) h[j] = d.knots_[j + 1] - d.knots_[j];
            // Natural cubic spline through values beta: interior second
            // derivatives solve B*delta = D*beta.
            Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 2, K);
            Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K - 2, K - 2);
            for (int j = 0; j < K - 2; ++j) {
                D(j, j) = 1.0 / h[j];
                D(j, j + 1) = -1.0 / h[j] - 1.0 / h[j + 1];
                D(j, j + 2) = 1.0 / h[j + 1];
                B(j, j) = (h[j] + h[j + 1]) / 3.0;
                if (j + 1 < K - 2) {
                    B(j, j + 1) = h[j + 1] / 6.0;
                    B(j + 1, j) = h[j + 1] / 6.0;
                }
            }
            Eigen::MatrixXd F = B.ldlt().solve(D); // (K-2) x K
            Eigen::MatrixXd Sraw = D.transpose() * F;
            Sraw = 0.5 * (Sraw + Sraw.transpose()).eval();
            d.S_raw_ = Sraw;
            // Rotate the value basis into the penalty eigenbasis: the two
            // zero eigenvalues carry the affine null space, which X=[1,x]
            // already provides, so only the K-2 curved directions go to Z.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sraw);
            if (es.info() != Eigen::Success)
                throw std::runtime_error("build_basis: penalty eigendecomposition failed");
            const int q = K - 2;
            d.cr_U_.resize(K, q);
            Eigen::VectorXd lam(q);
            for (int c = 0; c < q; ++c) { // descending eigenvalues
                int src = K - 1 - c;
                d.cr_U_.col(c) = es.eigenvectors().col(src);
                lam[c] = es.eigenvalues()[src];
            }
            if (!(lam[q - 1] > 1e-12 * lam[0]))
                throw std::runtime_error("build_basis: cubic-regression penalty numerically rank-deficient");
            d.S_fit_ = lam.asDiagonal();
            d.cr_G_ = F * d.cr_U_; // maps Z coordinates to interior 2nd derivatives
            // Slopes of the Z-row at the boundary knots, for linear extrapolation.
            d.cr_left_slope_ =
                (d.cr_U_.row(1) - d.cr_U_.row(0)) / h[0] - (h[0] / 6.0) * d.cr_G_.row(0);
            d.cr_right_slope_ = (d.cr_U_.row(K - 1) - d.cr_U_.row(K - 2)) / h[K - 2] +
                                (h[K - 2] / 6.0) * d.cr_G_.row(K - 3);
            break;
        }
        case BasisKindId::thin_plate: {
            // Work on distinct data sites, thinned by quantiles when large
            // so the m x m eigendecomposition stays affordable.
            constexpr int kMaxSites = 600;
            std::vector<double> sites = uniq;
            if (static_cast<int>(sites.size()) > kMaxSites) {
                std::vector<double> thinned(kMaxSites);
                for (int i = 0; i < kMaxSites; ++i)
                    thinned[i] = quantile_sorted(uniq, i / (kMaxSites - 1.0));
                thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
                sites = std::move(thinned);
            }
            const int m = static_cast<int>(sites.size());
            if (m < dim)
                throw std::invalid_argument("build_basis: fewer thin-plate sites than dim");
            d.tp_sites_ = Eigen::Map<const Eigen::VectorXd>(sites.data(), m);
            d.knots_ = d.tp_sites_;
            Eigen::MatrixXd E(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j <= i; ++j) {
                    double v = tp_eta(std::abs(sites[i] - sites[j]));
                    E(i, j) = v;
                    E(j, i) = v;
                }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(E);
            if (es.info() != Eigen::Success)
                throw std::runtime_error("build_basis: thin-plate eigendecomposition failed");
            // Keep the dim eigenpairs of largest magnitude (E is indefinite).
            std::vector<int> order(m);
            for (int i = 0; i < m; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](int a2, int b2) {
                return std::abs(es.eigenvalues()[a2]) > std::abs(es.eigenvalues()[b2]);
            });
            Eigen::MatrixXd Uk(m, dim);
            Eigen::VectorXd lam(dim);
            for (int c = 0; c < dim; ++c) {
                Uk.col(c) = es.eigenvectors().col(order[c]);
                lam[c] = es.eigenvalues()[order[c]];
            }
            // Constrain the kernel coefficients to be orthogonal to the
            // affine part T=[1,t]; the affine functions themselves live in X.
            Eigen::MatrixXd T(m, 2);
            T.col(0).setOnes();
            T.col(1) = d.tp_sites_;
            Eigen::MatrixXd A = Uk.transpose() * T; // dim x 2
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
            Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
            Eigen::MatrixXd Zk = Q.rightCols(dim - 2);
            d.tp_map_ = Uk * Zk; // m x q
            Eigen::MatrixXd S = Zk.transpose() * lam.asDiagonal() * Zk;
            d.S_fit_ = 0.5 * (S + S.transpose());
            d.S_raw_ = d.S_fit_;
            break;
        }
    }
    return d;
}

void BasisDesign::eval_row(double x, double* xrow, double* zrow) const {
    if (!std::isfinite(x)) throw std::invalid_argument("basis evaluation at non-finite point");
    const int nq = q();
    switch (kind_) {
        case BasisKindId::truncated_linear: {
            xrow[0] = 1.0;
            xrow[1] = x;
            for (int j = 0; j < nq; ++j) {
                double t = x - knots_[j];
                zrow[j] = t > 0.0 ? t : 0.0;
            }
            break;
        }
        case BasisKindId::p_spline: {
            xrow[0] = 1.0;
            std::fill(zrow, zrow + nq, 0.0);
            const double a = knots_[3];
            const double step = knots_[4] - knots_[3];
            int l = 3 + static_cast<int>(std::floor((x - a) / step));
            // l in [2, dim] keeps the recurrence's knot window in bounds;
            // beyond that the basis has decayed to zero.
            if (l < 2 || l > dim_) break;
            if (l > dim_ - 1 && x <= range_max_) l = dim_ - 1; // right-closed at b
            double vals[4];
            cubic_bspline_nonzero(knots_, l, x, vals);
            for (int i = 0; i < 4; ++i) {
                int j = l - 3 + i;
                if (j >= 0 && j < nq) zrow[j] = vals[i];
            }
            break;
        }
        case BasisKindId::cubic_regression: {
            xrow[0] = 1.0;
            xrow[1] = x;
            const int K = dim_;
            Eigen::Map<Eigen::RowVectorXd> z(zrow, nq);
            if (x <= knots_[0]) {
                z = cr_U_.row(0) + (x - knots_[0]) * cr_left_slope_;
                break;
            }
            if (x >= knots_[K - 1]) {
                z = cr_U_.row(K - 1) + (x - knots_[K - 1]) * cr_right_slope_;
                break;
            }
            int j = static_cast<int>(std::upper_bound(knots_.data(), knots_.data() + K, x) -
                                     knots_.data()) - 1;
            if (j >= K - 1) j = K - 2;
            const double h = knots_[j + 1] - knots_[j];
            const double dr = knots_[j + 1] - x, dl = x - knots_[j];
            const double am = dr / h, ap = dl / h;
            const double cm = (dr * dr * dr / h - h * dr) / 6.0;
            const double cp = (dl * dl * dl / h - h * dl) / 6.0;
            z = am * cr_U_.row(j) + ap * cr_U_.row(j + 1);
            if (j > 0 && j < K - 1) z += cm * cr_G_.row(j - 1);
            if (j + 1 > 0 && j + 1 < K - 1) z += cp * cr_G_.row(j);
            break;
        }
        case BasisKindId::thin_plate: {
            xrow[0] = 1.0;
            xrow[1] = x;
            const long m = tp_sites_.size();
            Eigen::RowVectorXd e(m);
            for (long j = 0; j < m; ++j) e[j] = tp_eta(std::abs(x - tp_sites_[j]));
            Eigen::Map<Eigen::RowVectorXd>(zrow, nq).noalias() = e * tp_map_;
            break;
        }
    }
}

void BasisDesign::eval_rows_thin_plate(const double* pts, long n, Eigen::Ref<RowMatrixXd> out,
                                       EvalScratch& scratch) const {
    const long m = tp_sites_.size();
    scratch.E.resize(n, m);
    for (long i = 0; i < n; ++i) {
        const double x = pts[i];
        if (!std::isfinite(x))
            throw std::invalid_argument("basis evaluation at non-finite point");
        out(i, 0) = 1.0;
        out(i, 1) = x;
        double* erow = &scratch.E(i, 0);
        for (long j = 0; j < m; ++j) erow[j] = tp_eta(std::abs(x - tp_sites_[j]));
    }
    out.rightCols(q()).noalias() = scratch.E * tp_map_;
}

void BasisDesign::eval_rows(const double* pts, long n, Eigen::Ref<RowMatrixXd> out,
                            EvalScratch& scratch) const {
    if (out.rows() != n || out.cols() != total_dim())
        throw std::invalid_argument("eval_rows: output block has wrong shape");
    if (kind_ == BasisKindId::thin_plate) {
        eval_rows_thin_plate(pts, n, out, scratch);
        return;
    }
    const int np = p();
    for (long i = 0; i < n; ++i) {
        double* row = &out(i, 0); // rows are contiguous (row-major, inner stride 1)
        eval_row(pts[i], row, row + np);
    }
}

void BasisDesign::eval_rows(const Eigen::VectorXd& pts, Eigen::Ref<RowMatrixXd> out) const {
    EvalScratch scratch;
    eval_rows(pts.data(), pts.size(), out, scratch);
}

BasisExpansion evaluate_basis(const BasisDesign& design, const Eigen::VectorXd& points) {
    const long n = points.size();
    RowMatrixXd block(n, design.total_dim());
    design.eval_rows(points, block);
    BasisExpansion ex;
    ex.X = block.leftCols(design.p());
    ex.Z = block.rightCols(design.q());
    ex.S = design.penalty_fit();
    return ex;
}

const Eigen::MatrixXd& penalty_matrix(const BasisDesign& design) { return design.S_raw_; }

} // namespace osmee
