#include <catch2/catch_amalgamated.hpp>

#include "infinifree/subordination.hpp"
#include "test_support.hpp"

using namespace infinifree;

namespace {

InfLaw spike_law(double theta, int order = 24) {
    return InfLaw::atomic({{0.0, 1.0, -1.0}, {theta, 0.0, 1.0}}, order);
}

} // namespace

TEST_CASE("point masses subordinate explicitly") {
    InfLaw da = InfLaw::atomic({{0.7, 1.0, 0.0}});
    InfLaw db = InfLaw::atomic({{-0.4, 1.0, 0.0}});
    auto ox = transform_ops(da), oy = transform_ops(db);
    cx z(0.3, 1.2);
    auto sub = solve_subordination(ox, oy, DualScalar(z));
    CHECK(std::abs(sub.omega1.std - (z + 0.4)) < 1e-12);   // z - b
    CHECK(std::abs(sub.omega2.std - (z - 0.7)) < 1e-12);   // z - a
    auto conv = free_convolve_G(ox, oy, DualScalar(z));
    CHECK(std::abs(conv.G.std - 1.0 / (z - 0.3)) < 1e-12); // 1/(z - a - b)
}

TEST_CASE("semicircle plus semicircle is the variance-2 semicircle") {
    InfLaw sc = InfLaw::semicircle(0, 1);
    InfLaw sc2 = InfLaw::semicircle(0, 2);
    auto ox = transform_ops(sc), oy = transform_ops(sc);
    SECTION("closed form at 2i, and the symmetric fixed point") {
        cx z(0, 2);
        auto sub = solve_subordination(ox, oy, DualScalar(z));
        auto conv = free_convolve_G(ox, oy, DualScalar(z));
        cx want = sc2.cauchy_G(DualScalar(z)).std;
        CHECK(std::abs(conv.G.std - want) < 1e-10);
        cx F2 = 1.0 / want;
        CHECK(std::abs(sub.omega1.std - (z + F2) / 2.0) < 1e-10);
        CHECK(std::abs(sub.omega2.std - sub.omega1.std) < 1e-10);
    }
    SECTION("residuals on a grid") {
        for (int i = 0; i < 20; ++i) {
            cx z(-2.0 + 4.0 * i / 19.0, 0.5 + 4.5 * i / 19.0);
            auto sub = solve_subordination(ox, oy, DualScalar(z));
            CHECK(sub.residual_F <= 1e-11);
            CHECK(sub.residual_G <= 1e-11);
            CHECK(sub.omega1.std.imag() >= z.imag() - 1e-12);
            CHECK(sub.omega2.std.imag() >= z.imag() - 1e-12);
        }
    }
}

TEST_CASE("residuals for mixed law pairs on a grid") {
    auto eng = testsupport::rng(120);
    InfLaw sc = InfLaw::semicircle(0, 1);
    InfLaw two = InfLaw::atomic({{-1.0, 0.5, 0.0}, {1.0, 0.5, 0.0}});
    InfLaw at1 = testsupport::random_atomic_law(eng, 3, 1.2);
    InfLaw at2 = testsupport::random_atomic_law(eng, 4, 0.9);
    auto run = [&](const InfLaw& x, const InfLaw& y) {
        auto ox = transform_ops(x), oy = transform_ops(y);
        for (int i = 0; i < 20; ++i) {
            cx z(-1.5 + 3.0 * i / 19.0, 0.5 + 4.5 * i / 19.0);
            auto sub = solve_subordination(ox, oy, DualScalar(z));
            CHECK(sub.residual_F <= 1e-11);
            CHECK(sub.residual_G <= 1e-11);
        }
    };
    run(sc, two);
    run(at1, at2);
}

TEST_CASE("laurent coefficients of the convolution match cumulant additivity") {
    auto eng = testsupport::rng(121);
    InfLaw x = testsupport::random_atomic_law(eng, 3, 0.8);
    InfLaw y = testsupport::random_atomic_law(eng, 4, 0.7);
    auto ox = transform_ops(x), oy = transform_ops(y);

    // route A: contour coefficients of G_{x+y}
    const double R = 3.0 * (x.support_bound() + y.support_bound());
    SubordOptions opts;
    opts.tol = 1e-13;
    auto coeffs = laurent_coefficients(
        [&](cx z) { return free_convolve_G(ox, oy, DualScalar(z), opts).G.std; }, R, 256, 6);

    // route B: kappa additivity through the joint free law
    auto joint = joint_from_free_cumulants({cumulants_from_moments(x.oracle(0), {0}, 6),
                                            cumulants_from_moments(y.oracle(1), {1}, 6)});
    for (int k = 1; k <= 6; ++k) {
        cx want(0, 0);
        for (uint32_t mask = 0; mask < (1u << k); ++mask) {
            std::vector<int> w(k);
            for (int b = 0; b < k; ++b) w[b] = (mask >> b) & 1;
            want += joint.moment(w)(0, 0);
        }
        CHECK(std::abs(coeffs[k] - want) < 1e-7);
    }
}

TEST_CASE("scalar infinitesimal convolution") {
    SECTION("zero infinitesimal parts give zero") {
        InfLaw x = InfLaw::semicircle(0, 1);
        InfLaw y = InfLaw::atomic({{0.5, 0.5, 0.0}, {-0.5, 0.5, 0.0}});
        auto r = scalar_inf_convolve(x, y, cx(0, 2));
        CHECK(std::abs(r.g) < 1e-12);
    }
    SECTION("spike versus semicircle reduces to the closed form") {
        const double theta = 2.0;
        InfLaw x = InfLaw::semicircle(0, 1);
        InfLaw y = spike_law(theta);
        for (cx z : {cx(0, 2), cx(0, 3), cx(1, 2)}) {
            auto r = scalar_inf_convolve(x, y, z);
            // mu2 = delta_0 forces omega1 = z, omega2 = F_sc(z):
            // g3(z) = [1/(F - theta) - 1/F] F'(z)
            DualScalar Fd = dual_inv(x.cauchy_G(DualScalar(z, cx(1, 0))));
            cx F = Fd.std, Fp = Fd.inf;
            cx want = (1.0 / (F - theta) - 1.0 / F) * Fp;
            CHECK(std::abs(r.g - want) < 1e-10);
            CHECK(std::abs(r.omega1 - z) < 1e-11);
            CHECK(std::abs(r.omega2 - F) < 1e-10);
        }
    }
    SECTION("theorem 2.3 coefficients match infinitesimal cumulant additivity") {
        auto eng = testsupport::rng(122);
        InfLaw x = testsupport::random_atomic_law(eng, 3, 0.7);
        InfLaw y = testsupport::random_atomic_law(eng, 3, 0.8);
        const double R = 3.0 * (x.support_bound() + y.support_bound());
        SubordOptions opts;
        opts.tol = 1e-13;
        auto coeffs = laurent_coefficients(
            [&](cx z) { return scalar_inf_convolve(x, y, z, opts).g; }, R, 256, 6);
        auto joint = joint_from_free_cumulants({cumulants_from_moments(x.oracle(0), {0}, 6),
                                                cumulants_from_moments(y.oracle(1), {1}, 6)});
        for (int k = 1; k <= 6; ++k) {
            cx want(0, 0);
            for (uint32_t mask = 0; mask < (1u << k); ++mask) {
                std::vector<int> w(k);
                for (int b = 0; b < k; ++b) w[b] = (mask >> b) & 1;
                want += joint.inf_moment(w)(0, 0);
            }
            CHECK(std::abs(coeffs[k] - want) < 1e-6);
        }
    }
}

TEST_CASE("omega derivatives match finite differences") {
    auto eng = testsupport::rng(123);
    InfLaw x = testsupport::random_atomic_law(eng, 3, 0.9);
    InfLaw y = InfLaw::semicircle(0.1, 1.1);
    auto ox = transform_ops(x), oy = transform_ops(y);
    std::uniform_real_distribution<double> ur(-2, 2), ui(1.0, 4.0);
    for (int rep = 0; rep < 20; ++rep) {
        cx z(ur(eng), ui(eng));
        auto sub = solve_subordination(ox, oy, DualScalar(z, cx(1, 0)));
        const double h = 1e-5;
        auto up = solve_subordination(ox, oy, DualScalar(z + h));
        auto dn = solve_subordination(ox, oy, DualScalar(z - h));
        cx fd1 = (up.omega1.std - dn.omega1.std) / (2 * h);
        cx fd2 = (up.omega2.std - dn.omega2.std) / (2 * h);
        CHECK(std::abs(sub.omega1.inf - fd1) < 1e-7);
        CHECK(std::abs(sub.omega2.inf - fd2) < 1e-7);
    }
}

TEST_CASE("implicit-function route for omega-prime agrees with dual propagation") {
    // omega1' = h_y'(h_x(omega1) + z)(h_x'(omega1) omega1' + 1) + 1 at the
    // fixed point; solving the linear equation gives the same derivative
    InfLaw x = InfLaw::semicircle(0, 1);
    InfLaw y = InfLaw::atomic({{-1.0, 0.5, 0.0}, {1.0, 0.5, 0.0}});
    auto ox = transform_ops(x), oy = transform_ops(y);
    for (cx z : {cx(0, 1.5), cx(0.7, 2.0)}) {
        auto sub = solve_subordination(ox, oy, DualScalar(z, cx(1, 0)));
        cx w1 = sub.omega1.std;
        cx hx = ox.h(DualScalar(w1)).std;
        cx hxp = ox.h(DualScalar(w1, cx(1, 0))).inf;
        cx hyp = oy.h(DualScalar(hx + z, cx(1, 0))).inf;
        // omega1' (1 - hy' hx') = hy' + 1
        cx implicit = (hyp + 1.0) / (1.0 - hyp * hxp);
        CHECK(std::abs(sub.omega1.inf - implicit) < 1e-9);
    }
}

TEST_CASE("non-convergence surfaces as an error") {
    InfLaw x = InfLaw::semicircle(0, 1);
    InfLaw y = InfLaw::semicircle(0, 1);
    SubordOptions opts;
    opts.max_iter = 2;
    CHECK_THROWS_AS(
        solve_subordination(transform_ops(x), transform_ops(y), DualScalar(cx(0, 0.6)), opts),
        NumericError);
}

TEST_CASE("operator-valued infinitesimal convolution") {
    const double theta = 1.0;
    InfLaw xs = InfLaw::semicircle(0, 0.25, 40); // M = 1
    InfLaw ys = spike_law(theta, 40);            // M = 1
    cx z(0.3, 8.0);

    SECTION("d = 1 reduction equals the scalar route") {
        OVLaw x1 = OVLaw::from_scalar(xs, 36);
        OVLaw y1 = OVLaw::from_scalar(ys, 36);
        Matrix b(1, 1);
        b(0, 0) = z;
        Matrix got = ov_inf_convolve(x1, y1, b);
        auto want = scalar_inf_convolve(xs, ys, z);
        CHECK(std::abs(got(0, 0) - want.g) < 1e-10);
    }
    SECTION("diagonal lift equals scalar times identity") {
        const int d = 2;
        OVLaw xd = OVLaw::diagonal_lift(xs, d, 36);
        OVLaw yd = OVLaw::diagonal_lift(ys, d, 36);
        Matrix b = z * Matrix::Identity(d, d);
        Matrix got = ov_inf_convolve(xd, yd, b);
        auto want = scalar_inf_convolve(xs, ys, z);
        CHECK((got - want.g * Matrix::Identity(d, d)).norm() < 1e-8);
    }
    SECTION("zero infinitesimal parts give zero") {
        InfLaw flat = InfLaw::semicircle(0, 0.25, 40);
        OVLaw x1 = OVLaw::diagonal_lift(flat, 2, 36);
        OVLaw y1 = OVLaw::diagonal_lift(flat, 2, 36);
        Matrix b = z * Matrix::Identity(2, 2);
        CHECK(ov_inf_convolve(x1, y1, b).norm() < 1e-11);
    }
    SECTION("queries below the supported height are refused") {
        OVLaw x1 = OVLaw::from_scalar(xs, 36);
        OVLaw y1 = OVLaw::from_scalar(ys, 36);
        Matrix b(1, 1);
        b(0, 0) = cx(0, 1.0); // below eta0 = 2 (Mx + My) = 4
        CHECK_THROWS_AS(ov_inf_convolve(x1, y1, b), NumericError);
    }
}

TEST_CASE("path derivative convolution") {
    const double theta = 1.0;
    InfLaw xs = InfLaw::semicircle(0, 0.25, 40);
    InfLaw ys = spike_law(theta, 40);
    // paths m_k(t) = m_k + t m'_k reproduce the infinitesimal data at t = 0
    auto mu = linear_moment_path(xs.std_moments(), xs.inf_moments(), xs.support_bound(), 1, 36);
    auto nu = linear_moment_path(ys.std_moments(), ys.inf_moments(), ys.support_bound(), 1, 36);
    cx z(0, 8.0);
    Matrix b(1, 1);
    b(0, 0) = z;

    SECTION("constant paths have zero derivative") {
        auto flat = linear_moment_path(xs.std_moments(),
                                       std::vector<double>(xs.std_moments().size(), 0.0),
                                       xs.support_bound(), 1, 36);
        Matrix got = path_derivative_convolution(flat, flat, 0.3, b);
        CHECK(got.norm() < 1e-12);
    }
    SECTION("at t = 0 the path route equals the infinitesimal route") {
        Matrix got = path_derivative_convolution(mu, nu, 0.0, b);
        OVLaw x1 = OVLaw::from_scalar(xs, 36);
        OVLaw y1 = OVLaw::from_scalar(ys, 36);
        Matrix want = ov_inf_convolve(x1, y1, b);
        CHECK((got - want).norm() < 1e-7);
    }
    SECTION("matches central finite differences in t") {
        for (double t : {0.0, 0.2}) {
            Matrix got = path_derivative_convolution(mu, nu, t, b);
            const double h = 1e-4;
            auto Gat = [&](double tt) {
                auto ox = transform_ops(mu.at(tt));
                auto oy = transform_ops(nu.at(tt));
                return free_convolve_G(ox, oy, DualMatrix(b)).G.std;
            };
            Matrix fd = (Gat(t + h) - Gat(t - h)) / (2 * h);
            CHECK((got - fd).norm() < 1e-6);
        }
    }
    SECTION("diagonal-lift path at d = 2 agrees with the scalar path") {
        auto mu2 = linear_moment_path(xs.std_moments(), xs.inf_moments(), xs.support_bound(), 2,
                                      36);
        auto nu2 = linear_moment_path(ys.std_moments(), ys.inf_moments(), ys.support_bound(), 2,
                                      36);
        Matrix b2 = z * Matrix::Identity(2, 2);
        Matrix got = path_derivative_convolution(mu2, nu2, 0.1, b2);
        Matrix got1 = path_derivative_convolution(mu, nu, 0.1, b);
        CHECK((got - got1(0, 0) * Matrix::Identity(2, 2)).norm() < 1e-8);
    }
}
