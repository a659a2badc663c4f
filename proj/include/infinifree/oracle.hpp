#pragma once

#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "infinifree/dual.hpp"

namespace infinifree {

using Word = std::vector<int>;

/// One term of a polynomial in the algebra: left * a_{w1} a_{w2} ... a_{wk},
/// with `left` a B-valued coefficient. An empty word is the constant `left`.
struct PolyTerm {
    Word word;
    Matrix left;
};

/// A finite sum of PolyTerms; the representation of algebra elements that the
/// evaluators accept (centered variables, powers, linear combinations).
using Poly = std::vector<PolyTerm>;

inline Poly poly_label(int label, int d) {
    return {PolyTerm{{label}, Matrix::Identity(d, d)}};
}
inline Poly poly_word(Word w, int d) {
    return {PolyTerm{std::move(w), Matrix::Identity(d, d)}};
}
inline Poly poly_constant(Matrix c) { return {PolyTerm{{}, std::move(c)}}; }

namespace detail {

inline void append_bytes(std::string& key, const void* p, size_t bytes) {
    key.append(static_cast<const char*>(p), bytes);
}

inline void append_matrix(std::string& key, const Matrix& m) {
    append_bytes(key, m.data(), sizeof(cx) * static_cast<size_t>(m.size()));
}

} // namespace detail

/// Interleaved-moment oracle for an operator-valued (infinitesimal) law over
/// B = M_d(C): evaluates E(b0 a1 b1 ... an bn) and optionally the same with
/// E'. Lookups are memoized; outer coefficients are normalized away through
/// the bimodule property, and for d = 1 every coefficient is pulled out.
class MomentOracle {
  public:
    using Evaluator = std::function<Matrix(std::span<const int>, std::span<const Matrix>)>;

    MomentOracle(int d, Evaluator std_eval, Evaluator inf_eval = {}, bool memoize = true)
        : d_(d), std_eval_(std::move(std_eval)), inf_eval_(std::move(inf_eval)),
          memoize_(memoize), cache_(std::make_shared<Cache>()) {
        if (d < 1) throw std::invalid_argument("MomentOracle: d must be positive");
    }

    int dim() const { return d_; }
    bool has_inf() const { return static_cast<bool>(inf_eval_); }

    Matrix identity() const { return Matrix::Identity(d_, d_); }

    /// E(b0 a1 b1 ... an bn); coeffs must have word.size() + 1 entries.
    Matrix moment(std::span<const int> word, std::span<const Matrix> coeffs) const {
        return eval(false, word, coeffs);
    }

    /// E'(b0 a1 b1 ... an bn).
    Matrix inf_moment(std::span<const int> word, std::span<const Matrix> coeffs) const {
        if (!inf_eval_) throw std::logic_error("MomentOracle: no infinitesimal evaluator");
        return eval(true, word, coeffs);
    }

    Matrix moment(std::span<const int> word) const {
        return moment(word, identity_coeffs(word.size()));
    }
    Matrix inf_moment(std::span<const int> word) const {
        return inf_moment(word, identity_coeffs(word.size()));
    }

    std::vector<Matrix> identity_coeffs(size_t n) const {
        return std::vector<Matrix>(n + 1, identity());
    }

  private:
    struct Cache {
        std::mutex mu;
        std::unordered_map<std::string, Matrix> map;
    };

    Matrix eval(bool inf, std::span<const int> word, std::span<const Matrix> coeffs) const {
        if (coeffs.size() != word.size() + 1)
            throw std::invalid_argument("MomentOracle: coefficient count must be word length + 1");
        if (word.empty()) {
            // E is the identity on B, E' kills B
            return inf ? Matrix(Matrix::Zero(d_, d_)) : Matrix(coeffs[0]);
        }
        if (d_ == 1) {
            // scalars commute: strip every coefficient
            cx scale(1.0, 0.0);
            for (const auto& c : coeffs) scale *= c(0, 0);
            Matrix base = core_eval(inf, word, identity_coeffs(word.size()));
            return scale * base;
        }
        // bimodule property: E(b0 w bn) = b0 E(w) bn
        std::vector<Matrix> inner(coeffs.begin(), coeffs.end());
        Matrix left = inner.front(), right = inner.back();
        inner.front() = identity();
        inner.back() = identity();
        return left * core_eval(inf, word, inner) * right;
    }

    Matrix core_eval(bool inf, std::span<const int> word, std::span<const Matrix> coeffs) const {
        if (!memoize_) return (inf ? inf_eval_ : std_eval_)(word, coeffs);
        std::string key;
        key.reserve(2 + word.size() * sizeof(int) + coeffs.size() * sizeof(cx) * d_ * d_);
        key.push_back(inf ? '\x01' : '\x00');
        detail::append_bytes(key, word.data(), word.size() * sizeof(int));
        for (const auto& c : coeffs) detail::append_matrix(key, c);
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->map.find(key);
            if (it != cache_->map.end()) return it->second;
        }
        Matrix v = (inf ? inf_eval_ : std_eval_)(word, coeffs);
        std::lock_guard<std::mutex> lock(cache_->mu);
        return cache_->map.emplace(std::move(key), std::move(v)).first->second;
    }

    int d_;
    Evaluator std_eval_, inf_eval_;
    bool memoize_;
    std::shared_ptr<Cache> cache_;
};

/// E or E' of a product of Poly slots with interleaved coefficients:
/// evaluates b0 p1 b1 p2 ... pn bn by multilinear expansion, folding constant
/// terms into the neighbouring coefficients. coeffs.size() == slots.size()+1.
inline Matrix eval_poly_word(const MomentOracle& o, std::span<const Poly> slots,
                             std::span<const Matrix> coeffs, bool use_inf) {
    if (coeffs.size() != slots.size() + 1)
        throw std::invalid_argument("eval_poly_word: coefficient count mismatch");
    const int d = o.dim();
    Matrix result = Matrix::Zero(d, d);
    Word word;
    std::vector<Matrix> wcoeffs;
    const Matrix id = o.identity();

    std::function<void(size_t, const Matrix&)> rec = [&](size_t k, const Matrix& pending) {
        if (k == slots.size()) {
            if (word.empty()) {
                if (!use_inf) result += pending;
                return;
            }
            wcoeffs.push_back(pending);
            result += use_inf ? o.inf_moment(word, wcoeffs) : o.moment(word, wcoeffs);
            wcoeffs.pop_back();
            return;
        }
        for (const PolyTerm& term : slots[k]) {
            Matrix p = pending * term.left;
            if (term.word.empty()) {
                rec(k + 1, Matrix(p * coeffs[k + 1]));
            } else {
                wcoeffs.push_back(p);
                word.push_back(term.word[0]);
                for (size_t r = 1; r < term.word.size(); ++r) {
                    wcoeffs.push_back(id);
                    word.push_back(term.word[r]);
                }
                rec(k + 1, coeffs[k + 1]);
                for (size_t r = 0; r < term.word.size(); ++r) {
                    wcoeffs.pop_back();
                    word.pop_back();
                }
            }
        }
    };
    rec(0, coeffs[0]);
    return result;
}

/// p - E(p), as a Poly.
inline Poly centered(const MomentOracle& o, Poly p) {
    std::vector<Poly> one_slot{p};
    Matrix mean = eval_poly_word(o, one_slot, o.identity_coeffs(1), false);
    p.push_back(PolyTerm{{}, Matrix(-mean)});
    return p;
}

inline Matrix poly_mean(const MomentOracle& o, const Poly& p, bool use_inf) {
    std::vector<Poly> one_slot{p};
    return eval_poly_word(o, one_slot, o.identity_coeffs(1), use_inf);
}

} // namespace infinifree
