#include <catch2/catch_amalgamated.hpp>

#include "infinifree/rmt.hpp"
#include "infinifree/subordination.hpp"
#include "test_support.hpp"

using namespace infinifree;
using namespace infinifree::rmt;

TEST_CASE("sampling determinism and shape") {
    EnsembleSpec spec{64, EnsembleKind::Gue, 1.0, {}, 12345, 2};
    Matrix a = sample_one(spec, 0);
    Matrix b = sample_one(spec, 0);
    CHECK((a - b).norm() == 0.0); // bit-identical
    Matrix c = sample_one(spec, 1);
    CHECK((a - c).norm() > 1e-3); // distinct trial stream
    CHECK((a - a.adjoint().eval()).norm() < 1e-14);

    EnsembleSpec bad{5000, EnsembleKind::Gue, 1.0, {}, 1, 1};
    CHECK_THROWS_AS(sample_one(bad, 0), std::invalid_argument);
}

TEST_CASE("gue normalization") {
    EnsembleSpec spec{256, EnsembleKind::Gue, 1.0, {}, 7, 60};
    auto est = estimate_tau(spec, TraceTest::monomial(2));
    CHECK(std::abs(est.value - cx(1.0, 0)) < 3.0 * est.std_error + 0.02);
    CHECK(est.std_error > 0);
    CHECK(est.std_error < 0.05);
}

TEST_CASE("deterministic ensemble traces are exact") {
    const double theta = 2.0;
    EnsembleSpec spec{100, EnsembleKind::Deterministic, 0.0, {theta}, 0, 1};
    for (int k = 1; k <= 5; ++k) {
        auto est = estimate_tau(spec, TraceTest::monomial(k));
        CHECK(std::abs(est.value - cx(std::pow(theta, k) / 100.0, 0)) < 1e-12);
        CHECK(est.std_error == 0.0);
    }
}

TEST_CASE("gue resolvent matches the semicircle transform") {
    EnsembleSpec spec{256, EnsembleKind::Gue, 1.0, {}, 11, 40};
    InfLaw sc = InfLaw::semicircle(0, 1);
    cx z(0, 2);
    auto est = estimate_tau(spec, TraceTest::resolvent(z));
    cx want = sc.cauchy_G(DualScalar(z)).std;
    CHECK(std::abs(est.value - want) < 3.0 * est.std_error + 5.0 / 256.0);
}

TEST_CASE("pure gue infinitesimal estimate vanishes") {
    EnsembleSpec spec{256, EnsembleKind::Gue, 1.0, {}, 13, 60};
    InfLaw sc = InfLaw::semicircle(0, 1);
    cx z(0, 3);
    auto est = estimate_inf_tau(spec, z, sc.cauchy_G(DualScalar(z)).std);
    CHECK(std::abs(est.value) < 3.0 * est.std_error + 10.0 / 256.0);
}

TEST_CASE("permutation conjugation leaves invariant statistics unchanged") {
    EnsembleSpec spec{64, EnsembleKind::Gue, 1.0, {}, 5, 1};
    Matrix x = sample_one(spec, 0);
    const int N = spec.N;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(N);
    for (int i = 0; i < N; ++i) perm.indices()[i] = (i * 7 + 3) % N;
    Matrix y = perm * x * perm.transpose();
    auto eig = [&](Matrix m) {
        std::vector<double> w(static_cast<size_t>(N));
        LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', N, m.data(), N, w.data());
        return w;
    };
    auto wx = eig(x), wy = eig(y);
    double maxdiff = 0;
    for (int i = 0; i < N; ++i) maxdiff = std::max(maxdiff, std::abs(wx[i] - wy[i]));
    CHECK(maxdiff < 1e-9);
}

TEST_CASE("standard error calibration on the m2 fixture") {
    // E (1/N) Tr X^2 = 1 exactly at every N; over replications the truth
    // should sit inside +-2 se at least 90% of the time
    int inside = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        EnsembleSpec spec{64, EnsembleKind::Gue, 1.0, {}, 1000 + static_cast<unsigned>(r), 30};
        auto est = estimate_tau(spec, TraceTest::monomial(2));
        if (std::abs(est.value - cx(1, 0)) <= 2.0 * est.std_error) ++inside;
    }
    CHECK(inside >= 45);
}

TEST_CASE("spike response estimator") {
    const double theta = 2.0;
    cx z(0, 1.5);
    InfLaw sc = InfLaw::semicircle(0, 1);
    DualScalar Fd = dual_inv(sc.cauchy_G(DualScalar(z, cx(1, 0))));
    cx F = Fd.std, Fp = Fd.inf;
    cx pred = (1.0 / (F - theta) - 1.0 / F) * Fp;

    auto est = spike_response_estimate(128, theta, 1.0, z, 99, 60);
    CHECK(std::abs(est.value - pred) < 5.0 * est.std_error + 3e-3);
    // the variance reduction is the point: per-trial scatter well under the
    // plain estimator's O(1) trace fluctuations
    CHECK(est.std_error * std::sqrt(double(est.trials)) < 0.05);

    // matches the prediction used by the scalar infinitesimal convolution
    auto conv = scalar_inf_convolve(sc, InfLaw::atomic({{0.0, 1.0, -1.0}, {theta, 0.0, 1.0}}), z);
    CHECK(std::abs(conv.g - pred) < 1e-10);
}

TEST_CASE("empirical GUE moments approach the Catalan numbers") {
    EnsembleSpec spec{512, EnsembleKind::Gue, 1.0, {}, 21, 8};
    std::vector<double> m2, m4;
    for (int t = 0; t < spec.trials; ++t) {
        auto w = sample_eigenvalues(spec, t);
        InfLaw emp = law_from_samples(w, 6);
        m2.push_back(emp.std_moments()[2]);
        m4.push_back(emp.std_moments()[4]);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / double(v.size());
    };
    CHECK(std::abs(mean(m2) - 1.0) < 0.05); // Catalan(1)
    CHECK(std::abs(mean(m4) - 2.0) < 0.15); // Catalan(2)
}
