#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infinifree/dual.hpp"
#include "infinifree/oracle.hpp"

namespace infinifree {

/// Raised when an evaluation leaves its guaranteed region (poles, divergent
/// tails, non-convergence); the CLI maps it to exit code 3.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Atom {
    double x;   // location
    double w;   // weight of the standard part
    double wp;  // weight of the infinitesimal part
};

enum class LawKind { Semicircle, Atomic, MomentTable };

/// A scalar infinitesimal law (phi, phi'): paired moment sequences with a
/// support bound, plus closed-form transform descriptors where the kind
/// admits them. phi(1) = 1 and phi'(1) = 0 always; atomic phi-weights sum to
/// 1 and phi'-weights to 0.
class InfLaw {
  public:
    static InfLaw semicircle(double mean, double variance, int max_order = 16) {
        if (variance <= 0.0) throw std::invalid_argument("semicircle: variance must be positive");
        InfLaw law;
        law.kind_ = LawKind::Semicircle;
        law.mean_ = mean;
        law.variance_ = variance;
        law.support_bound_ = std::abs(mean) + 2.0 * std::sqrt(variance);
        law.has_inf_ = true;
        law.build_semicircle_moments(max_order);
        return law;
    }

    static InfLaw atomic(std::vector<Atom> atoms, int max_order = 16) {
        if (atoms.empty()) throw std::invalid_argument("atomic: no atoms");
        double sw = 0, swp = 0, bound = 0;
        for (const auto& a : atoms) {
            sw += a.w;
            swp += a.wp;
            bound = std::max(bound, std::abs(a.x));
        }
        if (std::abs(sw - 1.0) > 1e-12)
            throw std::invalid_argument("atomic: standard weights must sum to 1");
        if (std::abs(swp) > 1e-12)
            throw std::invalid_argument("atomic: infinitesimal weights must sum to 0");
        InfLaw law;
        law.kind_ = LawKind::Atomic;
        law.atoms_ = std::move(atoms);
        law.support_bound_ = bound;
        law.has_inf_ = true;
        law.build_atomic_moments(max_order);
        return law;
    }

    /// Law from scalar free cumulant tables (kappa[j], dkappa[j] at order j,
    /// index 0 ignored). Moments come from the first-block recursion
    /// m_n = sum_k kappa_k sum_{i_1+...+i_k = n-k} m_{i_1} ... m_{i_k},
    /// run in dual arithmetic so the infinitesimal table rides along.
    static InfLaw from_scalar_cumulants(const std::vector<double>& kappa,
                                        const std::vector<double>& dkappa, double support_bound,
                                        int max_order) {
        if (kappa.size() != dkappa.size())
            throw std::invalid_argument("from_scalar_cumulants: table size mismatch");
        auto kap = [&](size_t j) {
            return j < kappa.size() ? DualScalar(cx(kappa[j], 0), cx(dkappa[j], 0))
                                    : DualScalar(cx(0, 0));
        };
        std::vector<DualScalar> m(static_cast<size_t>(max_order) + 1, DualScalar(cx(0, 0)));
        m[0] = DualScalar(cx(1, 0));
        for (int n = 1; n <= max_order; ++n) {
            // comp[t][j] = sum over i_1+...+i_t = j of m_{i_1} ... m_{i_t}
            std::vector<std::vector<DualScalar>> comp(
                static_cast<size_t>(n) + 1,
                std::vector<DualScalar>(static_cast<size_t>(n), DualScalar(cx(0, 0))));
            comp[0][0] = DualScalar(cx(1, 0));
            for (int t = 1; t <= n; ++t)
                for (int j = 0; j <= n - t; ++j)
                    for (int i = 0; i <= j && i < n; ++i)
                        comp[t][j] += comp[t - 1][j - i] * m[i];
            DualScalar acc(cx(0, 0));
            for (int k = 1; k <= n; ++k) acc += kap(k) * comp[k][n - k];
            m[n] = acc;
        }
        std::vector<double> ms(m.size()), mps(m.size());
        for (size_t i = 0; i < m.size(); ++i) {
            ms[i] = m[i].std.real();
            mps[i] = m[i].inf.real();
        }
        mps[0] = 0.0;
        return moment_table(std::move(ms), std::move(mps), support_bound);
    }

    static InfLaw moment_table(std::vector<double> std_moments, std::vector<double> inf_moments,
                               double support_bound) {
        if (std_moments.size() < 2)
            throw std::invalid_argument("moment_table: need at least m0, m1");
        if (!inf_moments.empty() && inf_moments.size() != std_moments.size())
            throw std::invalid_argument("moment_table: mismatched std/inf orders");
        if (std::abs(std_moments[0] - 1.0) > 1e-12)
            throw std::invalid_argument("moment_table: m0 must be 1");
        const bool has_inf = !inf_moments.empty();
        if (has_inf && std::abs(inf_moments[0]) > 1e-12)
            throw std::invalid_argument("moment_table: m'0 must be 0");
        InfLaw law;
        law.kind_ = LawKind::MomentTable;
        law.std_moments_ = std::move(std_moments);
        law.inf_moments_ = has_inf ? std::move(inf_moments)
                                   : std::vector<double>(law.std_moments_.size(), 0.0);
        law.has_inf_ = has_inf;
        if (support_bound <= 0.0) {
            // sup-norm estimate from even moments
            double est = 0;
            for (size_t k = 2; k < law.std_moments_.size(); k += 2)
                est = std::max(est, std::pow(std::abs(law.std_moments_[k]), 1.0 / double(k)));
            support_bound = 2.0 * std::max(est, 1e-9);
        }
        law.support_bound_ = support_bound;
        law.ensure_jacobi(); // eager: keeps evaluation const and thread-safe
        return law;
    }

    LawKind kind() const { return kind_; }
    bool has_inf() const { return has_inf_; }
    double support_bound() const { return support_bound_; }
    int max_order() const { return static_cast<int>(std_moments_.size()) - 1; }
    const std::vector<double>& std_moments() const { return std_moments_; }
    const std::vector<double>& inf_moments() const { return inf_moments_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    double mean() const { return mean_; }
    double variance() const { return variance_; }

    /// Cauchy transform G(z) = phi[(z - x)^{-1}], derivative carried through
    /// the dual part. Branch pinned by G(z) ~ 1/z at infinity.
    DualScalar cauchy_G(const DualScalar& z) const {
        check_evaluable(z.std);
        switch (kind_) {
            case LawKind::Semicircle: {
                DualScalar w = z - cx(mean_, 0.0);
                DualScalar disc = w * w - cx(4.0 * variance_, 0.0);
                DualScalar s = dual_sqrt(disc);
                if (std::abs(w.std + s.std) < std::abs(w.std - s.std)) s = -s;
                // (w - s)/(2v) in the cancellation-free form 2/(w + s)
                return cx(2.0, 0.0) * dual_inv(w + s);
            }
            case LawKind::Atomic: {
                DualScalar acc(cx(0, 0));
                for (const auto& a : atoms_) {
                    DualScalar den = z - cx(a.x, 0.0);
                    if (std::abs(den.std) < 1e-14)
                        throw NumericError("cauchy_G: evaluation at an atom");
                    acc += cx(a.w, 0.0) * dual_inv(den);
                }
                return acc;
            }
            case LawKind::MomentTable:
                return continued_fraction_G(z);
        }
        throw std::logic_error("unreachable");
    }

    /// Infinitesimal Cauchy transform g(z) = phi'[(z - x)^{-1}].
    DualScalar inf_cauchy_g(const DualScalar& z) const {
        if (!has_inf_) throw std::invalid_argument("inf_cauchy_g: law has no infinitesimal part");
        check_evaluable(z.std);
        switch (kind_) {
            case LawKind::Semicircle:
                return DualScalar(cx(0, 0)); // the semicircle kind carries phi' = 0
            case LawKind::Atomic: {
                DualScalar acc(cx(0, 0));
                for (const auto& a : atoms_) {
                    if (a.wp == 0.0) continue;
                    DualScalar den = z - cx(a.x, 0.0);
                    if (std::abs(den.std) < 1e-14)
                        throw NumericError("inf_cauchy_g: evaluation at an atom");
                    acc += cx(a.wp, 0.0) * dual_inv(den);
                }
                return acc;
            }
            case LawKind::MomentTable: {
                // Laurent sum sum_k m'_k z^{-k-1}; needs |z| > support bound
                const double r = std::abs(z.std);
                if (r <= support_bound_)
                    throw NumericError("inf_cauchy_g: divergent tail, need |z| > support bound");
                DualScalar zinv = dual_inv(z);
                DualScalar acc(cx(0, 0));
                DualScalar p = zinv;
                for (size_t k = 0; k < inf_moments_.size(); ++k) {
                    acc += cx(inf_moments_[k], 0.0) * p;
                    p = p * zinv;
                }
                return acc;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// F(z) = 1/G(z) and h(z) = F(z) - z.
    std::pair<DualScalar, DualScalar> F_h(const DualScalar& z) const {
        DualScalar G = cauchy_G(z);
        if (std::abs(G.std) == 0.0) throw NumericError("F_h: zero Cauchy transform");
        DualScalar F = dual_inv(G);
        return {F, F - z};
    }

    /// Moment oracle view (d = 1): E(x^n) = m_n, E'(x^n) = m'_n.
    MomentOracle oracle(int label = 0) const {
        auto table = std_moments_;
        auto inf_table = inf_moments_;
        auto lookup = [label](const std::vector<double>& t, std::span<const int> w) {
            for (int l : w)
                if (l != label) throw std::invalid_argument("law oracle: unknown label");
            if (w.size() >= t.size())
                throw std::invalid_argument("law oracle: moment order beyond the stored table");
            Matrix m(1, 1);
            m(0, 0) = cx(t[w.size()], 0.0);
            return m;
        };
        MomentOracle::Evaluator std_eval = [table, lookup](std::span<const int> w,
                                                           std::span<const Matrix>) {
            return lookup(table, w);
        };
        MomentOracle::Evaluator inf_eval;
        if (has_inf_)
            inf_eval = [inf_table, lookup](std::span<const int> w, std::span<const Matrix>) {
                return lookup(inf_table, w);
            };
        return MomentOracle(1, std::move(std_eval), std::move(inf_eval));
    }

  private:
    InfLaw() = default;

    void check_evaluable(const cx& z) const {
        if (z.imag() > 0.0) return;
        if (std::abs(z) > support_bound_) return;
        throw NumericError("transform evaluation outside the upper half-plane/support region");
    }

    void build_semicircle_moments(int max_order) {
        // central moments: c_{2j} = Catalan(j) v^j, odd ones vanish
        std::vector<double> central(static_cast<size_t>(max_order) + 1, 0.0);
        for (int j = 0; 2 * j <= max_order; ++j)
            central[2 * j] = double(catalan_d(j)) * std::pow(variance_, j);
        std_moments_.assign(static_cast<size_t>(max_order) + 1, 0.0);
        for (int k = 0; k <= max_order; ++k) {
            double mk = 0, binom = 1;
            for (int j = 0; j <= k; ++j) {
                mk += binom * central[j] * std::pow(mean_, k - j);
                binom = binom * double(k - j) / double(j + 1);
            }
            std_moments_[k] = mk;
        }
        inf_moments_.assign(std_moments_.size(), 0.0);
    }

    void build_atomic_moments(int max_order) {
        std_moments_.assign(static_cast<size_t>(max_order) + 1, 0.0);
        inf_moments_.assign(static_cast<size_t>(max_order) + 1, 0.0);
        for (const auto& a : atoms_) {
            double p = 1.0;
            for (int k = 0; k <= max_order; ++k) {
                std_moments_[k] += a.w * p;
                inf_moments_[k] += a.wp * p;
                p *= a.x;
            }
        }
    }

    static double catalan_d(int n) {
        double c = 1;
        for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
        return c;
    }

    /// Jacobi recurrence coefficients from raw moments (Chebyshev algorithm),
    /// then the finite continued fraction of depth floor(K/2).
    DualScalar continued_fraction_G(const DualScalar& z) const {
        const auto& al = jacobi_alpha_;
        const auto& be = jacobi_beta_;
        DualScalar tail(cx(0, 0));
        for (size_t j = al.size(); j-- > 1;) {
            DualScalar den = z - cx(al[j], 0.0) - tail;
            if (std::abs(den.std) < 1e-300) throw NumericError("continued fraction breakdown");
            tail = cx(be[j], 0.0) * dual_inv(den);
        }
        DualScalar den = z - cx(al[0], 0.0) - tail;
        return cx(be[0], 0.0) * dual_inv(den);
    }

    void ensure_jacobi() {
        if (!jacobi_alpha_.empty()) return;
        const auto& m = std_moments_;
        const int n = static_cast<int>(m.size() / 2); // levels supported by 2n moments
        std::vector<std::vector<double>> s(static_cast<size_t>(n),
                                           std::vector<double>(2 * static_cast<size_t>(n), 0.0));
        for (size_t l = 0; l < 2 * static_cast<size_t>(n); ++l) s[0][l] = m[l];
        std::vector<double> alpha{m[1] / m[0]}, beta{m[0]};
        for (int k = 1; k < n; ++k) {
            for (int l = k; l <= 2 * n - k - 1; ++l)
                s[k][l] = s[k - 1][l + 1] - alpha[k - 1] * s[k - 1][l] -
                          (k >= 2 ? beta[k - 1] * s[k - 2][l] : 0.0);
            const double den = s[k - 1][k - 1];
            if (!(std::abs(den) > 0.0)) break;
            const double b = s[k][k] / den;
            if (!(b > 1e-14)) break; // finite support reached (or loss of definiteness)
            beta.push_back(b);
            alpha.push_back(s[k][k + 1] / s[k][k] - s[k - 1][k] / s[k - 1][k - 1]);
        }
        jacobi_alpha_ = std::move(alpha);
        jacobi_beta_ = std::move(beta);
    }

    LawKind kind_ = LawKind::MomentTable;
    double mean_ = 0, variance_ = 0;
    std::vector<Atom> atoms_;
    std::vector<double> std_moments_, inf_moments_;
    double support_bound_ = 0;
    bool has_inf_ = false;
    std::vector<double> jacobi_alpha_, jacobi_beta_;
};

/// Empirical standard moments of a sample set (e.g. eigenvalues).
inline InfLaw law_from_samples(std::span<const double> samples, int max_order) {
    if (samples.empty()) throw std::invalid_argument("law_from_samples: empty sample set");
    std::vector<double> m(static_cast<size_t>(max_order) + 1, 0.0);
    for (double x : samples) {
        double p = 1.0;
        for (int k = 0; k <= max_order; ++k) {
            m[k] += p;
            p *= x;
        }
    }
    for (auto& v : m) v /= double(samples.size());
    double bound = 0;
    for (double x : samples) bound = std::max(bound, std::abs(x));
    return InfLaw::moment_table(std::move(m), {}, bound);
}

/// Empirical law with infinitesimal part N * (empirical - reference); the
/// reference supplies the limiting standard moments.
inline InfLaw law_from_samples(std::span<const double> samples, int max_order, double n_scale,
                               const InfLaw& reference) {
    if (samples.empty()) throw std::invalid_argument("law_from_samples: empty sample set");
    if (reference.max_order() < max_order)
        throw std::invalid_argument("law_from_samples: reference law order too small");
    InfLaw emp = law_from_samples(samples, max_order);
    std::vector<double> std_m = reference.std_moments();
    std_m.resize(static_cast<size_t>(max_order) + 1);
    std::vector<double> inf_m(static_cast<size_t>(max_order) + 1, 0.0);
    for (int k = 1; k <= max_order; ++k)
        inf_m[k] = n_scale * (emp.std_moments()[k] - std_m[k]);
    double bound = std::max(emp.support_bound(), reference.support_bound());
    return InfLaw::moment_table(std::move(std_m), std::move(inf_m), bound);
}

/// Laurent coefficients around infinity by contour sampling: for f analytic
/// outside |z| = R with f(z) = sum_k c_k z^{-k-1}, returns c_0..c_kmax.
/// Points are offset off the real axis; P should be a multiple of 4.
inline std::vector<cx> laurent_coefficients(const std::function<cx(cx)>& f, double radius,
                                            int points, int kmax) {
    std::vector<cx> vals(points);
    for (int j = 0; j < points; ++j) {
        double th = 2.0 * M_PI * (j + 0.5) / points;
        vals[j] = f(radius * cx(std::cos(th), std::sin(th)));
    }
    std::vector<cx> c(static_cast<size_t>(kmax) + 1);
    for (int k = 0; k <= kmax; ++k) {
        cx acc(0, 0);
        for (int j = 0; j < points; ++j) {
            double th = 2.0 * M_PI * (j + 0.5) / points;
            acc += vals[j] * cx(std::cos((k + 1) * th), std::sin((k + 1) * th));
        }
        c[k] = std::pow(radius, k + 1) * acc / double(points);
    }
    return c;
}

} // namespace infinifree
