#pragma once

#include <Eigen/Eigenvalues>

#include "infinifree/cumulants.hpp"
#include "infinifree/law.hpp"

namespace infinifree {

inline constexpr int kMaxOVDim = 6;

/// A linear map on B = M_d(C), stored as its d^2 x d^2 matrix acting on
/// column-major vectorized matrices.
struct LinearMap {
    int d = 0;
    Matrix mat; // d^2 x d^2

    static LinearMap zero(int d) { return {d, Matrix::Zero(d * d, d * d)}; }

    static Eigen::VectorXcd vec(const Matrix& c) {
        return Eigen::Map<const Eigen::VectorXcd>(c.data(), c.size());
    }
    static Matrix unvec(const Eigen::VectorXcd& v, int d) {
        return Eigen::Map<const Matrix>(v.data(), d, d);
    }

    Matrix apply(const Matrix& c) const { return unvec(mat * vec(c), d); }

    LinearMap compose(const LinearMap& inner) const { return {d, mat * inner.mat}; }

    LinearMap inverse() const {
        Eigen::FullPivLU<Matrix> lu(mat);
        if (!lu.isInvertible())
            throw NumericError("LinearMap: singular map (query too close to the spectrum)");
        return {d, lu.inverse()};
    }
};

/// An operator-valued infinitesimal law over B = M_d(C): an interleaved
/// moment oracle with a norm bound M, evaluated through the truncated
/// resolvent series sum_n E[b^{-1} (x b^{-1})^n] in the regime
/// ||b^{-1}|| M < 1, with the geometric tail bound enforced.
class OVLaw {
  public:
    OVLaw(MomentOracle oracle, double M, int K = 24, double tail_tol = 1e-12)
        : oracle_(std::move(oracle)), M_(M), K_(K), tail_tol_(tail_tol) {
        if (oracle_.dim() > kMaxOVDim) throw std::invalid_argument("OVLaw: d capped at 6");
        if (M <= 0.0) throw std::invalid_argument("OVLaw: norm bound must be positive");
    }

    /// d = 1 view of a scalar law.
    static OVLaw from_scalar(const InfLaw& law, int K = 24, double tail_tol = 1e-12) {
        double M = std::max(law.support_bound(), 1e-9);
        if (law.max_order() < K)
            throw std::invalid_argument("OVLaw::from_scalar: law stores too few moments for K");
        return OVLaw(law.oracle(0), M, K, tail_tol);
    }

    /// x (x) I_d for a scalar law: E(b0 X b1 ... X bn) = m_n b0 b1 ... bn.
    static OVLaw diagonal_lift(const InfLaw& law, int d, int K = 24, double tail_tol = 1e-12) {
        if (law.max_order() < K)
            throw std::invalid_argument("OVLaw::diagonal_lift: law stores too few moments for K");
        auto m = law.std_moments();
        auto mp = law.inf_moments();
        auto eval = [](const std::vector<double>& t, std::span<const int> w,
                       std::span<const Matrix> c) {
            Matrix acc = c[0];
            for (size_t k = 1; k < c.size(); ++k) acc = acc * c[k];
            return Matrix(t[w.size()] * acc);
        };
        MomentOracle o(
            d, [m, eval](std::span<const int> w, std::span<const Matrix> c) { return eval(m, w, c); },
            [mp, eval](std::span<const int> w, std::span<const Matrix> c) { return eval(mp, w, c); });
        return OVLaw(std::move(o), std::max(law.support_bound(), 1e-9), K, tail_tol);
    }

    int dim() const { return oracle_.dim(); }
    double norm_bound() const { return M_; }
    int truncation_order() const { return K_; }
    const MomentOracle& oracle() const { return oracle_; }

    /// Geometric tail bound of the truncated series at the standard part of b.
    double tail_bound(const Matrix& b_std) const {
        const double r = operator_norm(ring::inverse(b_std));
        const double q = M_ * r;
        if (q >= 1.0)
            throw NumericError("OVLaw: outside the series regime (||b^-1|| M >= 1)");
        return std::pow(q, K_ + 1) / (1.0 - q) * r;
    }

    /// G(b) with the direction derivative carried through the dual part of b;
    /// when `with_inf` is set the dual part additionally collects the E'
    /// series, reproducing the upper-triangular resolvent block.
    DualMatrix cauchy_G(const DualMatrix& b, bool with_inf = false) const {
        if (tail_bound(b.std) > tail_tol_)
            throw NumericError("OVLaw: series tail bound above tolerance; raise K or Im b");
        if (with_inf && !oracle_.has_inf())
            throw std::logic_error("OVLaw: law has no infinitesimal part");
        const int d = dim();
        DualMatrix binv = dual_inv(b);
        DualMatrix acc = binv; // n = 0 term: Etilde(b^-1) = b^-1
        std::vector<int> word;
        for (int n = 1; n <= K_; ++n) {
            word.assign(n, 0);
            std::vector<Matrix> cs(static_cast<size_t>(n) + 1, binv.std);
            Matrix std_part = oracle_.moment(word, cs);
            Matrix inf_part = with_inf ? oracle_.inf_moment(word, cs)
                                       : Matrix(Matrix::Zero(d, d));
            if (!binv.inf.isZero(0.0)) {
                for (size_t k = 0; k <= static_cast<size_t>(n); ++k) {
                    std::vector<Matrix> c2 = cs;
                    c2[k] = binv.inf;
                    inf_part += oracle_.moment(word, c2);
                }
            }
            acc += DualMatrix(std::move(std_part), std::move(inf_part));
        }
        return acc;
    }

    /// g(b) = E'[(b - x)^{-1}] through the same series.
    Matrix inf_cauchy_g(const Matrix& b) const {
        DualMatrix v = cauchy_G(DualMatrix(b), /*with_inf=*/true);
        return v.inf;
    }

    /// The Frechet derivative c -> G'(b)(c) assembled on matrix units.
    LinearMap frechet_derivative(const Matrix& b) const {
        const int d = dim();
        LinearMap L = LinearMap::zero(d);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                Matrix unit = Matrix::Zero(d, d);
                unit(i, j) = 1.0;
                DualMatrix v = cauchy_G(DualMatrix(b, unit), /*with_inf=*/false);
                L.mat.col(j * d + i) = LinearMap::vec(v.inf);
            }
        return L;
    }

    static double operator_norm(const Matrix& a) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(a.adjoint() * a);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }

    /// Smallest eigenvalue of Im(b) = (b - b*)/2i.
    static double min_imag_eigenvalue(const Matrix& b) {
        Matrix im = (b - b.adjoint().eval()) / cx(0, 2);
        Eigen::SelfAdjointEigenSolver<Matrix> es(im);
        return es.eigenvalues().minCoeff();
    }

  private:
    MomentOracle oracle_;
    double M_;
    int K_;
    double tail_tol_;
};

/// Entrywise lift of a scalar joint law to M_N(C) under E = phi (x) Id_N:
/// [E(b0 A1 b1 ... An bn)]_{ij} sums phi over all internal index paths with
/// the coefficient entries interleaved; exhaustive, no sampling.
inline OVLaw lift_scalar_matrix(const MomentOracle& scalar_joint,
                                const std::vector<Eigen::MatrixXi>& entry_labels, int N,
                                double scalar_bound, int K = 12, double tail_tol = 1e-12) {
    if (scalar_joint.dim() != 1)
        throw std::invalid_argument("lift_scalar_matrix: base law must be scalar");
    if (N < 1 || N > 8) throw std::invalid_argument("lift_scalar_matrix: N capped at 8");
    for (const auto& e : entry_labels)
        if (e.rows() != N || e.cols() != N)
            throw std::invalid_argument("lift_scalar_matrix: entry matrix size mismatch");

    auto labels = std::make_shared<std::vector<Eigen::MatrixXi>>(entry_labels);
    auto base = std::make_shared<MomentOracle>(scalar_joint);

    auto eval = [labels, base, N](bool inf, std::span<const int> w, std::span<const Matrix> c) {
        const size_t n = w.size();
        for (int v : w)
            if (v < 0 || v >= static_cast<int>(labels->size()))
                throw std::invalid_argument("lifted law: unknown variable");
        // T[p1][qn] = sum over internal paths of phi(entries) * prod of inner
        // coefficient entries; then b0 T bn
        Matrix T = Matrix::Zero(N, N);
        std::vector<int> word(n);
        std::vector<int> p(n), q(n);
        std::function<void(size_t, cx)> rec = [&](size_t k, cx coeff) {
            if (coeff == cx(0, 0)) return;
            if (k == n) {
                Matrix one(1, 1);
                one(0, 0) = cx(1, 0);
                std::vector<Matrix> ones(n + 1, one);
                Matrix val = inf ? base->inf_moment(word, ones) : base->moment(word, ones);
                T(p[0], q[n - 1]) += coeff * val(0, 0);
                return;
            }
            for (p[k] = 0; p[k] < N; ++p[k]) {
                if (k > 0) {
                    cx step = c[k](q[k - 1], p[k]);
                    if (step == cx(0, 0)) continue;
                    for (q[k] = 0; q[k] < N; ++q[k]) {
                        word[k] = (*labels)[w[k]](p[k], q[k]);
                        rec(k + 1, coeff * step);
                    }
                } else {
                    for (q[k] = 0; q[k] < N; ++q[k]) {
                        word[k] = (*labels)[w[k]](p[k], q[k]);
                        rec(k + 1, coeff);
                    }
                }
            }
        };
        if (n == 0) return inf ? Matrix(Matrix::Zero(N, N)) : Matrix(c[0]);
        rec(0, cx(1, 0));
        return Matrix(c[0] * T * c[n]);
    };

    MomentOracle o(
        N, [eval](std::span<const int> w, std::span<const Matrix> c) { return eval(false, w, c); },
        scalar_joint.has_inf()
            ? MomentOracle::Evaluator(
                  [eval](std::span<const int> w, std::span<const Matrix> c) {
                      return eval(true, w, c);
                  })
            : MomentOracle::Evaluator{});
    return OVLaw(std::move(o), double(N) * scalar_bound, K, tail_tol);
}

} // namespace infinifree
