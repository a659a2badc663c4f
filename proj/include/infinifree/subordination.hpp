#pragma once

#include "infinifree/dual.hpp"
#include "infinifree/law.hpp"
#include "infinifree/ovlaw.hpp"

namespace infinifree {

/// Analytic-transform handles a subordination solve needs from one law.
template <class T>
struct TransformOps {
    std::function<Dual<T>(const Dual<T>&)> G;
    std::function<Dual<T>(const Dual<T>&)> g; // may be empty
    double norm_bound = 0;

    Dual<T> F(const Dual<T>& z) const { return dual_inv(G(z)); }
    Dual<T> h(const Dual<T>& z) const { return F(z) - z; }
};

inline TransformOps<cx> transform_ops(const InfLaw& law) {
    TransformOps<cx> ops;
    ops.G = [law](const DualScalar& z) { return law.cauchy_G(z); };
    if (law.has_inf()) ops.g = [law](const DualScalar& z) { return law.inf_cauchy_g(z); };
    ops.norm_bound = law.support_bound();
    return ops;
}

inline TransformOps<Matrix> transform_ops(const OVLaw& law) {
    TransformOps<Matrix> ops;
    // the solver carries direction derivatives only; E' enters through g
    ops.G = [law](const DualMatrix& b) { return law.cauchy_G(b, /*with_inf=*/false); };
    if (law.oracle().has_inf())
        ops.g = [law](const DualMatrix& b) {
            return DualMatrix(law.inf_cauchy_g(b.std));
        };
    ops.norm_bound = law.norm_bound();
    return ops;
}

template <class T>
struct SubordResult {
    Dual<T> omega1, omega2;
    double residual_F = 0; // max of the two fixed-point equation residuals
    double residual_G = 0; // |G_x(omega1) - G_y(omega2)|
    int iterations = 0;
};

struct SubordOptions {
    double tol = 0;      // 0: pick the scalar/matrix default
    int max_iter = 5000;
    double min_imag = -1; // matrix case: require Im(b) >= this; -1 disables
};

inline double default_tol(const cx&) { return 1e-12; }
inline double default_tol(const Matrix&) { return 1e-10; }

/// Fixed-point subordination: omega1 is the limit of iterating
/// f_b(s) = h_y(h_x(s) + b) + b from s = b, and omega2 closes the pair via
/// F_x(omega1) + b = omega1 + omega2. Dual parts ride through every step, so
/// querying at b + t*c returns the direction derivatives of both omegas.
template <class T>
SubordResult<T> solve_subordination(const TransformOps<T>& x, const TransformOps<T>& y,
                                    const Dual<T>& b, const SubordOptions& opts = {}) {
    const double tol = opts.tol > 0 ? opts.tol : default_tol(b.std);
    Dual<T> s = b;
    int it = 0;
    double delta = std::numeric_limits<double>::infinity();
    while (it < opts.max_iter) {
        ++it;
        Dual<T> mid = x.h(s) + b;
        Dual<T> next = y.h(mid) + b;
        delta = (next - s).norm();
        s = next;
        if (delta <= tol) break;
    }
    if (delta > tol)
        throw NumericError("solve_subordination: no convergence within max_iter");

    SubordResult<T> r;
    r.iterations = it;
    r.omega1 = s;
    Dual<T> Fx = x.F(r.omega1);
    r.omega2 = Fx + b - r.omega1;
    Dual<T> Fy = y.F(r.omega2);
    Dual<T> sum = r.omega1 + r.omega2;
    r.residual_F = std::max((Fx + b - sum).norm(), (Fy + b - sum).norm());
    r.residual_G = (x.G(r.omega1) - y.G(r.omega2)).norm();
    if (r.residual_F > std::max(tol * 10, 1e-11) )
        throw NumericError("solve_subordination: residual above tolerance after convergence");
    return r;
}

template <class T>
struct ConvolveResult {
    Dual<T> G;          // G_{x+y}(b) = G_x(omega1(b))
    Dual<T> G_via_y;    // G_y(omega2(b))
    double discrepancy = 0;
    SubordResult<T> sub;
};

/// G_{x+y}(b) through the subordination relation G_x(omega1(b)).
template <class T>
ConvolveResult<T> free_convolve_G(const TransformOps<T>& x, const TransformOps<T>& y,
                                  const Dual<T>& b, const SubordOptions& opts = {}) {
    ConvolveResult<T> out;
    out.sub = solve_subordination(x, y, b, opts);
    out.G = x.G(out.sub.omega1);
    out.G_via_y = y.G(out.sub.omega2);
    out.discrepancy = (out.G - out.G_via_y).norm();
    return out;
}

struct ScalarInfConvolveResult {
    cx G;        // G_{x+y}(z)
    cx g;        // g_{x+y}(z)
    cx omega1, omega2;
    cx omega1_prime, omega2_prime;
    double residual_F = 0, residual_G = 0;
    int iterations = 0;
};

/// The scalar infinitesimal free additive convolution:
/// g_{x+y}(z) = g_x(omega1(z)) omega1'(z) + g_y(omega2(z)) omega2'(z),
/// with the omega derivatives taken from dual propagation.
inline ScalarInfConvolveResult scalar_inf_convolve(const InfLaw& x, const InfLaw& y, cx z,
                                                   const SubordOptions& opts = {}) {
    if (!x.has_inf() || !y.has_inf())
        throw std::invalid_argument("scalar_inf_convolve: both laws need infinitesimal parts");
    auto ox = transform_ops(x), oy = transform_ops(y);
    auto sub = solve_subordination(ox, oy, DualScalar(z, cx(1, 0)), opts);
    ScalarInfConvolveResult r;
    r.omega1 = sub.omega1.std;
    r.omega2 = sub.omega2.std;
    r.omega1_prime = sub.omega1.inf;
    r.omega2_prime = sub.omega2.inf;
    r.residual_F = sub.residual_F;
    r.residual_G = sub.residual_G;
    r.iterations = sub.iterations;
    r.G = ox.G(DualScalar(r.omega1)).std;
    r.g = ox.g(DualScalar(r.omega1)).std * r.omega1_prime +
          oy.g(DualScalar(r.omega2)).std * r.omega2_prime;
    return r;
}

namespace detail {

struct OVCompositionData {
    Matrix omega1, omega2;
    LinearMap omega1_prime, omega2_prime;
    LinearMap G_prime;     // G'_{x+y}(b) = G'_x(omega1) o omega1'
    SubordResult<Matrix> sub;
};

/// One dual solve per matrix unit assembles omega1'(b), omega2'(b) and
/// G'_{x+y}(b) as linear maps on B.
inline OVCompositionData ov_composition_data(const OVLaw& x, const OVLaw& y, const Matrix& b,
                                             const SubordOptions& opts_in) {
    const int d = static_cast<int>(b.rows());
    SubordOptions opts = opts_in;
    if (opts.min_imag < 0) opts.min_imag = 2.0 * (x.norm_bound() + y.norm_bound());
    if (OVLaw::min_imag_eigenvalue(b) < opts.min_imag - 1e-12)
        throw NumericError("operator-valued query below the supported height Im(b) >= eta0");

    auto ox = transform_ops(x), oy = transform_ops(y);
    OVCompositionData out;
    out.omega1_prime = LinearMap::zero(d);
    out.omega2_prime = LinearMap::zero(d);
    out.G_prime = LinearMap::zero(d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            Matrix unit = Matrix::Zero(d, d);
            unit(i, j) = 1.0;
            auto sub = solve_subordination(ox, oy, DualMatrix(b, unit), opts);
            const int col = j * d + i;
            out.omega1_prime.mat.col(col) = LinearMap::vec(sub.omega1.inf);
            out.omega2_prime.mat.col(col) = LinearMap::vec(sub.omega2.inf);
            DualMatrix Gdir = x.cauchy_G(DualMatrix(sub.omega1.std, sub.omega1.inf), false);
            out.G_prime.mat.col(col) = LinearMap::vec(Gdir.inf);
            if (i == 0 && j == 0) {
                out.omega1 = sub.omega1.std;
                out.omega2 = sub.omega2.std;
                out.sub = sub;
            }
        }
    return out;
}

} // namespace detail

/// Operator-valued infinitesimal free additive convolution:
/// g_{x+y}(b) = [G' o omega1' o G'^{-1}](g_x(omega1(b)))
///            + [G' o omega2' o G'^{-1}](g_y(omega2(b))),
/// with G' = G'_{x+y}(b) and every map assembled on the matrix-unit basis.
inline Matrix ov_inf_convolve(const OVLaw& x, const OVLaw& y, const Matrix& b,
                              const SubordOptions& opts = {}) {
    if (!x.oracle().has_inf() || !y.oracle().has_inf())
        throw std::invalid_argument("ov_inf_convolve: both laws need infinitesimal parts");
    auto data = detail::ov_composition_data(x, y, b, opts);
    Matrix gx = x.inf_cauchy_g(data.omega1);
    Matrix gy = y.inf_cauchy_g(data.omega2);
    LinearMap Ginv = data.G_prime.inverse();
    Matrix lhs = data.G_prime.apply(data.omega1_prime.apply(Ginv.apply(gx)));
    Matrix rhs = data.G_prime.apply(data.omega2_prime.apply(Ginv.apply(gy)));
    return lhs + rhs;
}

/// A one-parameter family of operator-valued laws; `with_derivative(t)`
/// packages the same law with its t-derivative installed as the
/// infinitesimal oracle, so the path derivative of G rides the g slot.
struct OVPath {
    std::function<OVLaw(double)> at;
    std::function<OVLaw(double)> with_derivative;
};

/// A path whose moment tables move linearly: m_k(t) = m_k + t mdot_k.
inline OVPath linear_moment_path(std::vector<double> m, std::vector<double> mdot,
                                 double support_bound, int d = 1, int K = 20) {
    if (m.size() != mdot.size())
        throw std::invalid_argument("linear_moment_path: mismatched orders");
    auto mk_law = [m, mdot, support_bound](double t, bool with_dot) {
        std::vector<double> mt(m.size()), md;
        for (size_t k = 0; k < m.size(); ++k) mt[k] = m[k] + t * mdot[k];
        md = with_dot ? mdot : std::vector<double>(m.size(), 0.0);
        md[0] = 0.0;
        return InfLaw::moment_table(std::move(mt), std::move(md), support_bound);
    };
    OVPath path;
    path.at = [mk_law, d, K](double t) {
        InfLaw law = mk_law(t, false);
        return d == 1 ? OVLaw::from_scalar(law, K) : OVLaw::diagonal_lift(law, d, K);
    };
    path.with_derivative = [mk_law, d, K](double t) {
        InfLaw law = mk_law(t, true);
        return d == 1 ? OVLaw::from_scalar(law, K) : OVLaw::diagonal_lift(law, d, K);
    };
    return path;
}

/// The differentiable-paths route: the t-derivative of G_{mu(t) boxplus nu(t)}
/// at b obeys the same subordination composition with the path derivatives
/// of G in place of the infinitesimal transforms.
inline Matrix path_derivative_convolution(const OVPath& mu, const OVPath& nu, double t,
                                          const Matrix& b, const SubordOptions& opts = {}) {
    return ov_inf_convolve(mu.with_derivative(t), nu.with_derivative(t), b, opts);
}

} // namespace infinifree
