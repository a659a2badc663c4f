#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>

#include "infinifree/oracle.hpp"
#include "infinifree/partition.hpp"

namespace infinifree {

inline constexpr int kMaxConversionOrder = 10;
inline constexpr int kMaxFreenessOrder = 8;

namespace detail {

/// Shared cache of NC(n) lists; the Moebius sums revisit them constantly.
inline const std::vector<Partition>& nc_partitions(int n) {
    static std::mutex mu;
    static std::map<int, std::vector<Partition>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, enumerate_nc(n)).first;
    return it->second;
}

} // namespace detail

/// Nested evaluation of a non-crossing partition: innermost blocks are
/// evaluated first and their values spliced into the surrounding coefficient
/// slot. `Ev` provides Value, one(), and
/// block_eval(word_indices, coeffs, use_inf). `marked_block` selects the one
/// block evaluated with the infinitesimal map (-1 for none).
template <class Ev>
typename Ev::Value eval_partition(const Ev& ev, const Partition& p, std::span<const int> word,
                                  std::span<const typename Ev::Value> coeffs,
                                  int marked_block = -1) {
    using Value = typename Ev::Value;
    const int n = p.n();
    if (static_cast<int>(word.size()) != n)
        throw std::invalid_argument("eval_partition: word length must match partition size");
    if (coeffs.size() != word.size() + 1)
        throw std::invalid_argument("eval_partition: coefficient count mismatch");
    if (marked_block >= p.block_count())
        throw std::invalid_argument("eval_partition: marked block out of range");

    std::vector<int> labels(word.begin(), word.end());
    std::vector<Value> cf(coeffs.begin(), coeffs.end());
    const auto bo_full = p.block_of();
    std::vector<int> bo(n);
    for (int i = 0; i < n; ++i) bo[i] = bo_full[i + 1];
    std::vector<int> remaining(static_cast<size_t>(p.block_count()), 0);
    for (int b : bo) ++remaining[b];

    while (true) {
        int distinct = 0;
        for (int b = 0; b < p.block_count(); ++b)
            if (remaining[b] > 0) ++distinct;
        if (distinct == 1) {
            const int b = bo[0];
            return ev.block_eval(labels, cf, b == marked_block);
        }
        // find a block whose surviving elements form one consecutive run
        size_t run_start = 0;
        bool found = false;
        for (size_t i = 0; i < labels.size() && !found; ) {
            const int b = bo[i];
            size_t j = i;
            while (j < labels.size() && bo[j] == b) ++j;
            if (static_cast<int>(j - i) == remaining[b]) {
                run_start = i;
                found = true;
            }
            i = j;
        }
        if (!found) throw std::invalid_argument("eval_partition: crossing partition");

        const int b = bo[run_start];
        const size_t len = static_cast<size_t>(remaining[b]);
        std::vector<int> sub(labels.begin() + run_start, labels.begin() + run_start + len);
        std::vector<Value> subcf;
        subcf.reserve(len + 1);
        subcf.push_back(ev.one());
        for (size_t k = 1; k < len; ++k) subcf.push_back(cf[run_start + k]);
        subcf.push_back(ev.one());
        Value v = ev.block_eval(sub, subcf, b == marked_block);

        Value merged = cf[run_start] * v * cf[run_start + len];
        labels.erase(labels.begin() + run_start, labels.begin() + run_start + len);
        bo.erase(bo.begin() + run_start, bo.begin() + run_start + len);
        cf.erase(cf.begin() + run_start, cf.begin() + run_start + len + 1);
        cf.insert(cf.begin() + run_start, std::move(merged));
        remaining[b] = 0;
    }
}

/// Evaluator backing E_pi / dE_pi: blocks evaluated through a MomentOracle
/// over a table of Poly slots (plain labels are one-term Polys).
struct OraclePolyEval {
    using Value = Matrix;
    const MomentOracle* oracle;
    std::span<const Poly> slots;

    Value one() const { return oracle->identity(); }
    Value block_eval(std::span<const int> idx, std::span<const Value> coeffs,
                     bool use_inf) const {
        std::vector<Poly> sub;
        sub.reserve(idx.size());
        for (int i : idx) sub.push_back(slots[i]);
        return eval_poly_word(*oracle, sub, coeffs, use_inf);
    }
};

namespace detail {

inline std::vector<Poly> label_slots(const MomentOracle& o, std::span<const int> word) {
    std::vector<Poly> slots;
    slots.reserve(word.size());
    for (int l : word) slots.push_back(poly_label(l, o.dim()));
    return slots;
}

inline std::vector<int> iota_word(size_t n) {
    std::vector<int> w(n);
    std::iota(w.begin(), w.end(), 0);
    return w;
}

} // namespace detail

/// E_pi(a_1, ..., a_n) with interleaved coefficients (standard nesting
/// convention: inner blocks become coefficients of their parent block).
inline Matrix moment_pi(const MomentOracle& o, const Partition& p, std::span<const int> word,
                        std::span<const Matrix> coeffs) {
    auto slots = detail::label_slots(o, word);
    return eval_partition(OraclePolyEval{&o, slots}, p, detail::iota_word(word.size()), coeffs);
}

inline Matrix moment_pi(const MomentOracle& o, const Partition& p, std::span<const int> word) {
    auto coeffs = o.identity_coeffs(word.size());
    return moment_pi(o, p, word, coeffs);
}

/// dE_{pi,V}: E_pi with E' used for block index `block_index`.
inline Matrix dmoment_pi_V(const MomentOracle& o, const Partition& p, int block_index,
                           std::span<const int> word, std::span<const Matrix> coeffs) {
    if (block_index < 0 || block_index >= p.block_count())
        throw std::invalid_argument("dmoment_pi_V: V is not a block of pi");
    if (!o.has_inf()) throw std::logic_error("dmoment_pi_V: oracle has no infinitesimal part");
    auto slots = detail::label_slots(o, word);
    return eval_partition(OraclePolyEval{&o, slots}, p, detail::iota_word(word.size()), coeffs,
                          block_index);
}

inline Matrix dmoment_pi_V(const MomentOracle& o, const Partition& p,
                           const std::vector<int>& block, std::span<const int> word,
                           std::span<const Matrix> coeffs) {
    const auto& blocks = p.blocks();
    auto it = std::find(blocks.begin(), blocks.end(), block);
    if (it == blocks.end()) throw std::invalid_argument("dmoment_pi_V: V is not a block of pi");
    return dmoment_pi_V(o, p, static_cast<int>(it - blocks.begin()), word, coeffs);
}

/// dE_pi = sum over blocks V of dE_{pi,V}.
inline Matrix dmoment_pi(const MomentOracle& o, const Partition& p, std::span<const int> word,
                         std::span<const Matrix> coeffs) {
    Matrix acc = Matrix::Zero(o.dim(), o.dim());
    for (int b = 0; b < p.block_count(); ++b) acc += dmoment_pi_V(o, p, b, word, coeffs);
    return acc;
}

inline Matrix dmoment_pi(const MomentOracle& o, const Partition& p, std::span<const int> word) {
    auto coeffs = o.identity_coeffs(word.size());
    return dmoment_pi(o, p, word, coeffs);
}

/// kappa_n / dkappa_n of arbitrary algebra elements (Poly slots), by the
/// Moebius sums over NC(n).
inline Matrix kappa_of_elements(const MomentOracle& o, std::span<const Poly> slots,
                                std::span<const Matrix> coeffs, bool infinitesimal) {
    const int n = static_cast<int>(slots.size());
    if (n < 1 || n > kMaxConversionOrder)
        throw std::invalid_argument("kappa_of_elements: order outside [1, 10]");
    Matrix acc = Matrix::Zero(o.dim(), o.dim());
    const auto word = detail::iota_word(slots.size());
    for (const Partition& p : detail::nc_partitions(n)) {
        const double mu = static_cast<double>(mobius_to_one(p));
        if (!infinitesimal) {
            acc += mu * eval_partition(OraclePolyEval{&o, slots}, p, word, coeffs);
        } else {
            for (int b = 0; b < p.block_count(); ++b)
                acc += mu * eval_partition(OraclePolyEval{&o, slots}, p, word, coeffs, b);
        }
    }
    return acc;
}

/// Both graded cumulant families of an oracle, as memoized evaluators on
/// words of variable labels with interleaved coefficients.
class CumulantFamily {
  public:
    using Evaluator = std::function<Matrix(std::span<const int>, std::span<const Matrix>)>;

    CumulantFamily(int d, int max_order, std::vector<int> labels, Evaluator kappa,
                   Evaluator dkappa)
        : d_(d), max_order_(max_order), labels_(std::move(labels)), kappa_(std::move(kappa)),
          dkappa_(std::move(dkappa)) {}

    int dim() const { return d_; }
    int max_order() const { return max_order_; }
    const std::vector<int>& labels() const { return labels_; }
    bool owns(int label) const {
        return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
    }

    Matrix kappa(std::span<const int> word, std::span<const Matrix> coeffs) const {
        check(word);
        return kappa_(word, coeffs);
    }
    Matrix dkappa(std::span<const int> word, std::span<const Matrix> coeffs) const {
        check(word);
        return dkappa_(word, coeffs);
    }

  private:
    void check(std::span<const int> word) const {
        if (static_cast<int>(word.size()) > max_order_)
            throw std::invalid_argument("CumulantFamily: order overflow");
    }
    int d_;
    int max_order_;
    std::vector<int> labels_;
    Evaluator kappa_, dkappa_;
};

/// Moebius inversion of an oracle's moments: kappa_n = sum_pi mu(pi,1) E_pi
/// and dkappa_n = sum_pi mu(pi,1) dE_pi, packaged as memoized evaluators.
inline CumulantFamily cumulants_from_moments(const MomentOracle& o, std::vector<int> labels,
                                             int max_order) {
    if (max_order < 1 || max_order > kMaxConversionOrder)
        throw std::invalid_argument("cumulants_from_moments: order cap is 10");
    // route both evaluators through a memoizing oracle-shaped cache
    auto kappa_core = [o](std::span<const int> word, std::span<const Matrix> coeffs) {
        auto slots = detail::label_slots(o, word);
        return kappa_of_elements(o, slots, coeffs, false);
    };
    auto dkappa_core = [o](std::span<const int> word, std::span<const Matrix> coeffs) {
        auto slots = detail::label_slots(o, word);
        return kappa_of_elements(o, slots, coeffs, true);
    };
    MomentOracle memo(o.dim(), std::move(kappa_core),
                      o.has_inf() ? MomentOracle::Evaluator(std::move(dkappa_core))
                                  : MomentOracle::Evaluator{});
    auto kappa = [memo](std::span<const int> w, std::span<const Matrix> c) {
        return memo.moment(w, c);
    };
    auto dkappa = [memo](std::span<const int> w, std::span<const Matrix> c) {
        return memo.inf_moment(w, c);
    };
    return CumulantFamily(o.dim(), max_order, std::move(labels), std::move(kappa),
                          std::move(dkappa));
}

/// Evaluator backing the moment-cumulant formula: blocks evaluated with
/// kappa, the marked one with dkappa. Mixed blocks across families vanish.
struct KappaEval {
    using Value = Matrix;
    const std::vector<CumulantFamily>* families;
    int d;

    Value one() const { return Matrix::Identity(d, d); }
    Value block_eval(std::span<const int> word, std::span<const Value> coeffs,
                     bool use_inf) const {
        const CumulantFamily* owner = nullptr;
        for (const auto& f : *families)
            if (f.owns(word[0])) {
                owner = &f;
                break;
            }
        if (owner == nullptr) throw std::invalid_argument("joint oracle: unknown label");
        for (int l : word)
            if (!owner->owns(l)) return Matrix::Zero(d, d); // mixed cumulants vanish
        return use_inf ? owner->dkappa(word, coeffs) : owner->kappa(word, coeffs);
    }
};

/// The moment-cumulant formula, both graded parts:
/// E = sum_pi kappa_pi and E' = sum_pi sum_V kappa_pi with dkappa on V.
inline std::pair<Matrix, Matrix> moments_from_cumulants(const std::vector<CumulantFamily>& fams,
                                                        std::span<const int> word,
                                                        std::span<const Matrix> coeffs) {
    if (fams.empty()) throw std::invalid_argument("moments_from_cumulants: no families");
    const int d = fams.front().dim();
    const int n = static_cast<int>(word.size());
    if (n > kMaxConversionOrder)
        throw std::invalid_argument("moments_from_cumulants: order outside [0, 10]");
    if (n == 0) return {coeffs[0], Matrix::Zero(d, d)};
    KappaEval ev{&fams, d};
    Matrix m = Matrix::Zero(d, d), mp = Matrix::Zero(d, d);
    for (const Partition& p : detail::nc_partitions(n)) {
        m += eval_partition(ev, p, word, coeffs);
        for (int b = 0; b < p.block_count(); ++b)
            mp += eval_partition(ev, p, word, coeffs, b);
    }
    return {m, mp};
}

inline std::pair<Matrix, Matrix> moments_from_cumulants(const CumulantFamily& fam,
                                                        std::span<const int> word,
                                                        std::span<const Matrix> coeffs) {
    return moments_from_cumulants(std::vector<CumulantFamily>{fam}, word, coeffs);
}

/// The constructive model of an infinitesimally free family: a joint oracle
/// whose mixed (standard and infinitesimal) cumulants are all zero.
inline MomentOracle joint_from_free_cumulants(std::vector<CumulantFamily> families) {
    if (families.empty()) throw std::invalid_argument("joint_from_free_cumulants: no families");
    const int d = families.front().dim();
    for (const auto& f : families)
        if (f.dim() != d) throw std::invalid_argument("joint_from_free_cumulants: dim mismatch");
    auto fams = std::make_shared<std::vector<CumulantFamily>>(std::move(families));
    auto std_eval = [fams](std::span<const int> w, std::span<const Matrix> c) {
        return moments_from_cumulants(*fams, w, c).first;
    };
    auto inf_eval = [fams](std::span<const int> w, std::span<const Matrix> c) {
        return moments_from_cumulants(*fams, w, c).second;
    };
    return MomentOracle(d, std::move(std_eval), std::move(inf_eval));
}

// ---------------------------------------------------------------------------
// the upper-triangular (dual) route
// ---------------------------------------------------------------------------

/// An element a + t a' with both parts polynomials in the oracle's variables.
struct DualElem {
    Poly std;
    Poly inf;
};

inline DualElem dual_elem_label(int label, int d) { return {poly_label(label, d), {}}; }

/// Etilde(c0 A1 c1 ... An cn) over dual elements and dual coefficients:
/// standard part is E of the all-standard word; the t-part collects E' of the
/// standard word plus every single substitution of a coefficient's or an
/// element's infinitesimal part.
inline DualMatrix tilde_moment(const MomentOracle& o, std::span<const DualElem> elems,
                               std::span<const DualMatrix> coeffs) {
    if (coeffs.size() != elems.size() + 1)
        throw std::invalid_argument("tilde_moment: coefficient count mismatch");
    const int d = o.dim();
    std::vector<Poly> slots;
    slots.reserve(elems.size());
    for (const auto& e : elems) slots.push_back(e.std);
    std::vector<Matrix> std_c;
    std_c.reserve(coeffs.size());
    for (const auto& c : coeffs) std_c.push_back(c.std);

    Matrix std_part = eval_poly_word(o, slots, std_c, false);
    Matrix inf_part = o.has_inf() ? Matrix(eval_poly_word(o, slots, std_c, true))
                                  : Matrix(Matrix::Zero(d, d));
    for (size_t k = 0; k < coeffs.size(); ++k) {
        if (coeffs[k].inf.isZero(0.0)) continue;
        std::vector<Matrix> c2 = std_c;
        c2[k] = coeffs[k].inf;
        inf_part += eval_poly_word(o, slots, c2, false);
    }
    for (size_t j = 0; j < elems.size(); ++j) {
        if (elems[j].inf.empty()) continue;
        std::vector<Poly> s2 = slots;
        s2[j] = elems[j].inf;
        inf_part += eval_poly_word(o, s2, std_c, false);
    }
    return DualMatrix(std::move(std_part), std::move(inf_part));
}

/// Evaluator running the nested engine entirely in the dual ring, with blocks
/// evaluated by Etilde. This is the embedded computation of the tilde space.
struct TildeOracleEval {
    using Value = DualMatrix;
    const MomentOracle* oracle;
    std::span<const DualElem> elems;

    Value one() const { return DualMatrix(oracle->identity()); }
    Value block_eval(std::span<const int> idx, std::span<const Value> coeffs, bool) const {
        std::vector<DualElem> sub;
        sub.reserve(idx.size());
        for (int i : idx) sub.push_back(elems[i]);
        return tilde_moment(*oracle, sub, coeffs);
    }
};

/// kappa-tilde_n computed in the embedded space: the Moebius sum over NC(n)
/// of Etilde_pi, all arithmetic in the t^2 = 0 ring. By the block formula its
/// standard part is kappa_n and its t-part is
/// sum_j kappa_n(..., a'_j, ...) + dkappa_n.
inline DualMatrix tilde_cumulant(const MomentOracle& o, std::span<const DualElem> elems) {
    const int n = static_cast<int>(elems.size());
    if (n < 1 || n > kMaxConversionOrder)
        throw std::invalid_argument("tilde_cumulant: order outside [1, 10]");
    DualMatrix acc(Matrix::Zero(o.dim(), o.dim()));
    const auto word = detail::iota_word(elems.size());
    std::vector<DualMatrix> coeffs(elems.size() + 1, DualMatrix(o.identity()));
    for (const Partition& p : detail::nc_partitions(n)) {
        const double mu = static_cast<double>(mobius_to_one(p));
        DualMatrix term = eval_partition(TildeOracleEval{&o, elems}, p, word, coeffs);
        acc.std += mu * term.std;
        acc.inf += mu * term.inf;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// freeness tester
// ---------------------------------------------------------------------------

struct FreenessReport {
    double max_moment_identity = 0;      // |E(a1...an)| on alternating centered words
    double max_inf_identity = 0;         // violation of the E' sum identity
    double max_mixed_kappa = 0;          // mixed standard cumulants
    double max_mixed_dkappa = 0;         // mixed infinitesimal cumulants
    double max_embedded = 0;             // |Etilde| on embedded centered duals

    double definitional() const { return std::max(max_moment_identity, max_inf_identity); }
    double mixed_cumulant() const { return std::max(max_mixed_kappa, max_mixed_dkappa); }
};

struct FreenessOptions {
    int max_power = 2;          // elements tested per subalgebra: v, v^2, ...
    int max_total_degree = 10;  // skip words whose expanded degree exceeds this
    bool embedded = true;
    bool mixed_cumulants = true;
};

namespace detail {

inline void alternating_patterns(const std::vector<int>& groups, int length,
                                 std::vector<std::vector<int>>& out) {
    std::vector<int> cur;
    std::function<void()> rec = [&] {
        if (static_cast<int>(cur.size()) == length) {
            out.push_back(cur);
            return;
        }
        for (int g : groups) {
            if (!cur.empty() && cur.back() == g) continue;
            cur.push_back(g);
            rec();
            cur.pop_back();
        }
    };
    rec();
}

} // namespace detail

/// Evaluates the defining identities of infinitesimal freeness on every
/// alternating word of centered subalgebra elements up to n_max, the
/// mixed-cumulant route of the equivalence theorem, and the embedded
/// upper-triangular route, and reports the worst violation of each.
inline FreenessReport freeness_check(const MomentOracle& o,
                                     const std::map<int, int>& label_to_group, int n_max,
                                     const FreenessOptions& opts = {}) {
    if (n_max < 2 || n_max > kMaxFreenessOrder)
        throw std::invalid_argument("freeness_check: n_max outside [2, 8]");
    const int d = o.dim();
    FreenessReport rep;

    std::map<int, std::vector<int>> groups;
    for (const auto& [label, g] : label_to_group) groups[g].push_back(label);
    std::vector<int> group_ids;
    for (const auto& [g, _] : groups) group_ids.push_back(g);
    if (group_ids.size() < 2) throw std::invalid_argument("freeness_check: need >= 2 subalgebras");

    // candidate elements per group: powers of each variable, centered
    struct Candidate {
        int degree;
        Poly raw;       // v^e
        Poly cent;      // v^e - E(v^e)
        Matrix eprime;  // E'(v^e - E(v^e))
    };
    std::map<int, std::vector<Candidate>> cands;
    for (const auto& [g, labels] : groups)
        for (int l : labels)
            for (int e = 1; e <= opts.max_power; ++e) {
                Word w(static_cast<size_t>(e), l);
                Candidate c{e, poly_word(w, d), {}, Matrix::Zero(d, d)};
                c.cent = centered(o, c.raw);
                if (o.has_inf()) c.eprime = poly_mean(o, c.cent, true);
                cands[g].push_back(std::move(c));
            }

    std::vector<std::vector<int>> patterns;
    for (int len = 2; len <= n_max; ++len) detail::alternating_patterns(group_ids, len, patterns);

    for (const auto& pat : patterns) {
        const size_t n = pat.size();
        // one candidate choice per slot, exhaustively
        std::vector<size_t> choice(n, 0);
        while (true) {
            std::vector<const Candidate*> cs(n);
            int degree = 0;
            for (size_t i = 0; i < n; ++i) {
                cs[i] = &cands[pat[i]][choice[i]];
                degree += cs[i]->degree;
            }
            if (degree > opts.max_total_degree) {
                size_t k0 = 0;
                while (k0 < n) {
                    if (++choice[k0] < cands[pat[k0]].size()) break;
                    choice[k0] = 0;
                    ++k0;
                }
                if (k0 == n) break;
                continue;
            }

            std::vector<Poly> slots;
            for (auto* c : cs) slots.push_back(c->cent);
            auto id_coeffs = o.identity_coeffs(n);
            Matrix m = eval_poly_word(o, slots, id_coeffs, false);
            rep.max_moment_identity = std::max(rep.max_moment_identity, m.norm());

            if (o.has_inf()) {
                Matrix mp = eval_poly_word(o, slots, id_coeffs, true);
                Matrix rhs = Matrix::Zero(d, d);
                for (size_t j = 0; j < n; ++j) {
                    std::vector<Poly> s2 = slots;
                    s2[j] = poly_constant(cs[j]->eprime);
                    rhs += eval_poly_word(o, s2, id_coeffs, false);
                }
                rep.max_inf_identity = std::max(rep.max_inf_identity, (mp - rhs).norm());

                if (opts.embedded) {
                    std::vector<DualElem> duals(n);
                    for (size_t j = 0; j < n; ++j)
                        duals[j] = DualElem{cs[j]->cent, poly_constant(Matrix(-cs[j]->eprime))};
                    std::vector<DualMatrix> dc(n + 1, DualMatrix(o.identity()));
                    DualMatrix t = tilde_moment(o, duals, dc);
                    rep.max_embedded = std::max(rep.max_embedded, t.std.norm() + t.inf.norm());
                }
            }

            size_t k = 0;
            while (k < n) {
                if (++choice[k] < cands[pat[k]].size()) break;
                choice[k] = 0;
                ++k;
            }
            if (k == n) break;
        }
    }

    if (opts.mixed_cumulants) {
        // cumulants of raw elements on every not-all-equal pattern
        std::vector<std::vector<int>> mixed;
        std::vector<int> cur;
        std::function<void(int)> rec = [&](int len) {
            if (static_cast<int>(cur.size()) == len) {
                bool all_same = std::all_of(cur.begin(), cur.end(),
                                            [&](int g) { return g == cur[0]; });
                if (!all_same) mixed.push_back(cur);
                return;
            }
            for (int g : group_ids) {
                cur.push_back(g);
                rec(len);
                cur.pop_back();
            }
        };
        for (int len = 2; len <= n_max; ++len) rec(len);

        for (const auto& pat : mixed) {
            const size_t n = pat.size();
            std::vector<size_t> choice(n, 0);
            while (true) {
                int degree = 0;
                for (size_t i = 0; i < n; ++i) degree += cands[pat[i]][choice[i]].degree;
                if (degree > opts.max_total_degree) {
                    size_t k0 = 0;
                    while (k0 < n) {
                        if (++choice[k0] < cands[pat[k0]].size()) break;
                        choice[k0] = 0;
                        ++k0;
                    }
                    if (k0 == n) break;
                    continue;
                }
                std::vector<Poly> slots;
                for (size_t i = 0; i < n; ++i) slots.push_back(cands[pat[i]][choice[i]].raw);
                auto id_coeffs = o.identity_coeffs(n);
                rep.max_mixed_kappa = std::max(
                    rep.max_mixed_kappa, kappa_of_elements(o, slots, id_coeffs, false).norm());
                if (o.has_inf())
                    rep.max_mixed_dkappa = std::max(
                        rep.max_mixed_dkappa, kappa_of_elements(o, slots, id_coeffs, true).norm());
                size_t k = 0;
                while (k < n) {
                    if (++choice[k] < cands[pat[k]].size()) break;
                    choice[k] = 0;
                    ++k;
                }
                if (k == n) break;
            }
        }
    }
    return rep;
}

} // namespace infinifree
