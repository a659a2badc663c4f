#pragma once

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <cstdint>
#include <random>

#include "infinifree/law.hpp"

namespace infinifree {
namespace rmt {

inline constexpr int kMaxMatrixSize = 4096;

enum class EnsembleKind { Gue, Deterministic };

/// A random-matrix ensemble at one size: GUE normalized so that
/// E[(1/N) Tr X^2] = variance, optionally shifted by a deterministic
/// diagonal (the spike), or a purely deterministic diagonal matrix.
struct EnsembleSpec {
    int N = 0;
    EnsembleKind kind = EnsembleKind::Gue;
    double variance = 1.0;
    std::vector<double> diag; // deterministic entries, zero-padded to N
    std::uint64_t seed = 0;
    int trials = 1;
};

struct TauEstimate {
    cx value;
    double std_error = 0;
    int N = 0;
    int trials = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 trial_engine(std::uint64_t seed, int trial) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(trial + 1));
    std::uint64_t b = splitmix64(s);
    return std::mt19937_64(b);
}

} // namespace detail

/// One Hermitian sample; deterministic given (spec.seed, trial).
inline Matrix sample_one(const EnsembleSpec& spec, int trial) {
    if (spec.N < 1 || spec.N > kMaxMatrixSize)
        throw std::invalid_argument("rmt: N outside [1, 4096]");
    const int N = spec.N;
    Matrix X = Matrix::Zero(N, N);
    if (spec.kind == EnsembleKind::Gue) {
        auto eng = detail::trial_engine(spec.seed, trial);
        std::normal_distribution<double> nd(0.0, 1.0);
        const double off = std::sqrt(spec.variance / (2.0 * N));
        const double di = std::sqrt(spec.variance / N);
        for (int j = 0; j < N; ++j)
            for (int i = 0; i <= j; ++i) {
                if (i == j) {
                    X(i, i) = nd(eng) * di;
                } else {
                    cx v(nd(eng) * off, nd(eng) * off);
                    X(i, j) = v;
                    X(j, i) = std::conj(v);
                }
            }
    }
    for (size_t i = 0; i < spec.diag.size() && i < static_cast<size_t>(N); ++i)
        X(i, i) += spec.diag[i];
    return X;
}

inline std::vector<Matrix> sample(const EnsembleSpec& spec) {
    std::vector<Matrix> out;
    out.reserve(spec.trials);
    for (int t = 0; t < spec.trials; ++t) out.push_back(sample_one(spec, t));
    return out;
}

/// Eigenvalues of one sample (LAPACK zheevd, values only).
inline std::vector<double> sample_eigenvalues(const EnsembleSpec& spec, int trial) {
    Matrix X = sample_one(spec, trial);
    const int N = spec.N;
    std::vector<double> w(static_cast<size_t>(N));
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', N, X.data(), N, w.data());
    if (info != 0) throw NumericError("rmt: eigenvalue solver failed");
    return w;
}

/// The test functional applied per trial: a monomial trace or a resolvent
/// trace at a fixed point of the upper half-plane.
struct TraceTest {
    enum class Kind { Power, Resolvent } kind = Kind::Power;
    int power = 2;
    cx z{0, 1};

    static TraceTest monomial(int k) { return {Kind::Power, k, cx(0, 0)}; }
    static TraceTest resolvent(cx z) { return {Kind::Resolvent, 0, z}; }

    cx apply(std::span<const double> eigenvalues) const {
        cx acc(0, 0);
        for (double l : eigenvalues) {
            if (kind == Kind::Power)
                acc += std::pow(l, power);
            else
                acc += 1.0 / (z - l);
        }
        return acc / double(eigenvalues.size());
    }
};

inline TauEstimate reduce(std::span<const cx> values, int N) {
    cx mean(0, 0);
    for (const cx& v : values) mean += v;
    mean /= double(values.size());
    double var = 0;
    for (const cx& v : values) var += std::norm(v - mean);
    var /= values.size() > 1 ? double(values.size() - 1) : 1.0;
    return {mean, std::sqrt(var / double(values.size())), N, static_cast<int>(values.size())};
}

/// Per-trial values of (1/N) Tr(test); the building block every estimator
/// reduces in a fixed order.
inline std::vector<cx> tau_trials(const EnsembleSpec& spec, const TraceTest& test) {
    std::vector<cx> vals(static_cast<size_t>(spec.trials));
    for (int t = 0; t < spec.trials; ++t) {
        auto w = sample_eigenvalues(spec, t);
        vals[t] = test.apply(w);
    }
    return vals;
}

/// Monte Carlo estimate of tau_N(test) = E[(1/N) Tr(test)].
inline TauEstimate estimate_tau(const EnsembleSpec& spec, const TraceTest& test) {
    auto vals = tau_trials(spec, test);
    return reduce(vals, spec.N);
}

/// Monte Carlo estimate of the infinitesimal correction
/// g_hat(z) = N (tau_hat_N(resolvent at z) - G_ref(z)).
inline TauEstimate estimate_inf_tau(const EnsembleSpec& spec, cx z, cx reference_G) {
    auto vals = tau_trials(spec, TraceTest::resolvent(z));
    for (auto& v : vals) v = double(spec.N) * (v - reference_G);
    return reduce(vals, spec.N);
}

/// Per-trial values of the variance-reduced spike-response estimator of
/// g(z) for GUE + diag(theta, 0, ..., 0). For a rank-one spike in direction
/// u, Tr[(z-W-theta uu*)^{-1} - (z-W)^{-1}] = theta u*R^2u / (1 - theta u*Ru)
/// with R = (z-W)^{-1}; averaging the exact identity over every basis
/// direction and subtracting the same functional of the empirical bulk
/// transform leaves only the spike response around the limiting prediction.
inline std::vector<cx> spike_response_trials(int N, double theta, double variance, cx z,
                                             std::uint64_t seed, int trials) {
    if (N < 1 || N > kMaxMatrixSize) throw std::invalid_argument("rmt: N outside [1, 4096]");
    EnsembleSpec null_spec{N, EnsembleKind::Gue, variance, {}, seed, trials};
    InfLaw sc = InfLaw::semicircle(0, variance);
    cx Gsc = sc.cauchy_G(DualScalar(z)).std;
    cx Gsc2 = -sc.cauchy_G(DualScalar(z, cx(1, 0))).inf; // sum over density of (z-x)^{-2}
    const cx model_limit = theta * Gsc2 / (1.0 - theta * Gsc);

    std::vector<cx> out(static_cast<size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        Matrix X = sample_one(null_spec, t);
        std::vector<double> w(static_cast<size_t>(N));
        int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', N, X.data(), N, w.data());
        if (info != 0) throw NumericError("rmt: eigenvalue solver failed");
        // columns of X now hold the eigenvectors
        cx acc(0, 0), Ghat(0, 0), G2hat(0, 0);
        for (int k = 0; k < N; ++k) {
            cx dk = 1.0 / (z - w[k]);
            Ghat += dk;
            G2hat += dk * dk;
        }
        Ghat /= double(N);
        G2hat /= double(N);
        for (int i = 0; i < N; ++i) {
            cx Rii(0, 0), R2ii(0, 0);
            for (int k = 0; k < N; ++k) {
                const double wk = std::norm(X(i, k));
                cx dk = 1.0 / (z - w[k]);
                Rii += wk * dk;
                R2ii += wk * dk * dk;
            }
            acc += theta * R2ii / (1.0 - theta * Rii);
        }
        const cx model_emp = theta * G2hat / (1.0 - theta * Ghat);
        out[t] = acc / double(N) - model_emp + model_limit;
    }
    return out;
}

inline TauEstimate spike_response_estimate(int N, double theta, double variance, cx z,
                                           std::uint64_t seed, int trials) {
    auto vals = spike_response_trials(N, theta, variance, z, seed, trials);
    return reduce(vals, N);
}

} // namespace rmt
} // namespace infinifree
