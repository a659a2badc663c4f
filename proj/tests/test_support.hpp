#pragma once

#include <complex>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "infinifree/cumulants.hpp"
#include "infinifree/law.hpp"
#include "infinifree/partition.hpp"

namespace testsupport {

using infinifree::cx;
using infinifree::Matrix;
using infinifree::Partition;

/// Independent Moebius oracle: the defining recursion
/// sum_{sigma: pi <= sigma <= 1} mu(sigma, 1) = [pi = 1], solved over all of
/// NC(n) by memoized chain recursion. Exponential, test-only.
inline long long mobius_chain_recursion(const Partition& p) {
    const int n = p.n();
    const auto all = infinifree::enumerate_nc(n);
    std::map<std::string, long long> memo;
    std::function<long long(const Partition&)> mu = [&](const Partition& q) -> long long {
        auto key = q.to_string();
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        long long v;
        if (q.block_count() == 1) {
            v = 1; // mu(1_n, 1_n)
        } else {
            long long acc = 0;
            for (const auto& s : all)
                if (!(s == q) && q.refines(s)) acc += mu(s);
            v = -acc;
        }
        memo[key] = v;
        return v;
    };
    return mu(p);
}

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline cx random_cx(std::mt19937_64& eng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return cx(u(eng), u(eng));
}

inline Matrix random_matrix(std::mt19937_64& eng, int d, double scale = 1.0) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = random_cx(eng, scale);
    return m;
}

/// A random bounded scalar infinitesimal law as a moment table: std moments
/// of a random atomic measure (so the Hankel forms stay positive), inf
/// moments of a random signed atomic measure with zero mass.
inline infinifree::InfLaw random_moment_law(std::mt19937_64& eng, int max_order = 12,
                                            int atoms = 4, double spread = 1.0) {
    std::uniform_real_distribution<double> ux(-spread, spread);
    std::uniform_real_distribution<double> uw(0.1, 1.0);
    std::vector<double> xs(atoms), ws(atoms), wps(atoms);
    double total = 0;
    for (int i = 0; i < atoms; ++i) {
        xs[i] = ux(eng);
        ws[i] = uw(eng);
        total += ws[i];
    }
    double psum = 0;
    for (int i = 0; i < atoms; ++i) {
        ws[i] /= total;
        wps[i] = ux(eng);
        psum += wps[i];
    }
    for (int i = 0; i < atoms; ++i) wps[i] -= psum / atoms;
    std::vector<double> m(max_order + 1, 0.0), mp(max_order + 1, 0.0);
    for (int i = 0; i < atoms; ++i) {
        double p = 1;
        for (int k = 0; k <= max_order; ++k) {
            m[k] += ws[i] * p;
            mp[k] += wps[i] * p;
            p *= xs[i];
        }
    }
    return infinifree::InfLaw::moment_table(std::move(m), std::move(mp), spread);
}

/// The same, as an explicit atomic law (exact closed-form transforms).
inline infinifree::InfLaw random_atomic_law(std::mt19937_64& eng, int atoms = 4,
                                            double spread = 1.0) {
    std::uniform_real_distribution<double> ux(-spread, spread);
    std::uniform_real_distribution<double> uw(0.1, 1.0);
    std::vector<infinifree::Atom> as(atoms);
    double total = 0, psum = 0;
    for (auto& a : as) {
        a.x = ux(eng);
        a.w = uw(eng);
        total += a.w;
        a.wp = ux(eng);
        psum += a.wp;
    }
    for (auto& a : as) {
        a.w /= total;
        a.wp -= psum / atoms;
    }
    return infinifree::InfLaw::atomic(std::move(as));
}

/// Joint law of two infinitesimally free scalar variables evaluated straight
/// from the definition (centering + the E'-position-sum identity), with no
/// non-crossing-partition machinery at all. Slots are single-variable
/// polynomials; the recursion strictly reduces the slot count.
class DefinitionalFreeJoint {
  public:
    DefinitionalFreeJoint(const infinifree::InfLaw& a, const infinifree::InfLaw& b) {
        m_[0] = a.std_moments();
        mp_[0] = a.inf_moments();
        m_[1] = b.std_moments();
        mp_[1] = b.inf_moments();
    }

    using Poly1 = std::map<int, double>; // power -> coefficient
    struct Slot {
        int var;
        Poly1 poly;
    };

    double phi_word(std::span<const int> word) { return phi(to_slots(word)); }
    double phi_prime_word(std::span<const int> word) { return phi_prime(to_slots(word)); }

    infinifree::MomentOracle oracle() {
        auto self = std::make_shared<DefinitionalFreeJoint>(*this);
        auto std_eval = [self](std::span<const int> w, std::span<const Matrix>) {
            Matrix r(1, 1);
            r(0, 0) = cx(self->phi_word(w), 0.0);
            return r;
        };
        auto inf_eval = [self](std::span<const int> w, std::span<const Matrix>) {
            Matrix r(1, 1);
            r(0, 0) = cx(self->phi_prime_word(w), 0.0);
            return r;
        };
        return infinifree::MomentOracle(1, std::move(std_eval), std::move(inf_eval));
    }

  private:
    static std::vector<Slot> to_slots(std::span<const int> word) {
        std::vector<Slot> slots;
        for (int v : word) slots.push_back(Slot{v, Poly1{{1, 1.0}}});
        return merge(slots);
    }

    static std::vector<Slot> merge(std::vector<Slot> slots) {
        std::vector<Slot> out;
        for (auto& s : slots) {
            if (!out.empty() && out.back().var == s.var)
                out.back().poly = poly_mul(out.back().poly, s.poly);
            else
                out.push_back(std::move(s));
        }
        return out;
    }

    static Poly1 poly_mul(const Poly1& p, const Poly1& q) {
        Poly1 r;
        for (auto [k1, c1] : p)
            for (auto [k2, c2] : q) r[k1 + k2] += c1 * c2;
        return r;
    }

    double mean(const Slot& s, bool inf) const {
        const auto& table = inf ? mp_[s.var] : m_[s.var];
        double acc = 0;
        for (auto [k, c] : s.poly) {
            if (k >= static_cast<int>(table.size()))
                throw std::invalid_argument("definitional oracle: moment table too short");
            acc += c * table[k];
        }
        return acc;
    }

    static Slot centered(const Slot& s, double mu) {
        Slot c = s;
        c.poly[0] -= mu;
        return c;
    }

    double phi(std::vector<Slot> slots) {
        slots = merge(slots);
        if (slots.empty()) return 1.0;
        if (slots.size() == 1) return mean(slots[0], false);
        auto key = cache_key(slots, false);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        const size_t n = slots.size();
        std::vector<double> mus(n);
        for (size_t j = 0; j < n; ++j) mus[j] = mean(slots[j], false);
        // expand each slot as centered + mean; the all-centered alternating
        // term is 0 by freeness
        double acc = 0;
        for (uint32_t mask = 1; mask < (1u << n); ++mask) {
            double scale = 1;
            std::vector<Slot> rest;
            for (size_t j = 0; j < n; ++j) {
                if (mask & (1u << j))
                    scale *= mus[j];
                else
                    rest.push_back(centered(slots[j], mus[j]));
            }
            if (scale == 0.0) continue;
            acc += scale * phi(rest); // rest merges to strictly fewer slots
        }
        cache_[key] = acc;
        return acc;
    }

    double phi_prime(std::vector<Slot> slots) {
        slots = merge(slots);
        if (slots.empty()) return 0.0;
        if (slots.size() == 1) return mean(slots[0], true);
        auto key = cache_key(slots, true);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        const size_t n = slots.size();
        std::vector<double> mus(n);
        for (size_t j = 0; j < n; ++j) mus[j] = mean(slots[j], false);
        double acc = 0;
        for (uint32_t mask = 0; mask < (1u << n); ++mask) {
            double scale = 1;
            std::vector<Slot> rest;
            for (size_t j = 0; j < n; ++j) {
                if (mask & (1u << j))
                    scale *= mus[j];
                else
                    rest.push_back(centered(slots[j], mus[j]));
            }
            if (scale == 0.0) continue;
            if (mask == 0) {
                // all centered and alternating: the defining identity
                // phi'(c_1...c_n) = sum_j phi'(c_j) phi(c_1...^j...c_n)
                for (size_t j = 0; j < n; ++j) {
                    double pj = mean(rest[j], true);
                    if (pj == 0.0) continue;
                    std::vector<Slot> others;
                    for (size_t i = 0; i < n; ++i)
                        if (i != j) others.push_back(rest[i]);
                    acc += pj * phi(others);
                }
            } else {
                acc += scale * phi_prime(rest);
            }
        }
        cache_[key] = acc;
        return acc;
    }

    std::string cache_key(const std::vector<Slot>& slots, bool inf) const {
        std::ostringstream os;
        os << std::hexfloat << (inf ? "p" : "m");
        for (const auto& s : slots) {
            os << '|' << s.var;
            for (auto [k, c] : s.poly) os << ',' << k << ':' << c;
        }
        return os.str();
    }

    std::vector<double> m_[2], mp_[2];
    std::map<std::string, double> cache_;
};

} // namespace testsupport
