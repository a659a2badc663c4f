#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infinifree {

/// Catalan number C_n; exact for n <= 30 (well past the n <= 14 cap used here).
inline long long catalan(int n) {
    if (n < 0) throw std::invalid_argument("catalan: negative index");
    long long c = 1;
    for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
    return c;
}

/// A set partition of {1..n}, kept in canonical form: blocks sorted by their
/// minimum, elements sorted within each block.
class Partition {
  public:
    Partition(int n, std::vector<std::vector<int>> blocks) : n_(n) {
        if (n < 1) throw std::invalid_argument("Partition: n must be positive");
        std::vector<char> seen(static_cast<size_t>(n) + 1, 0);
        for (auto& b : blocks) {
            if (b.empty()) throw std::invalid_argument("Partition: empty block");
            std::sort(b.begin(), b.end());
            for (int e : b) {
                if (e < 1 || e > n) throw std::invalid_argument("Partition: element out of range");
                if (seen[e]) throw std::invalid_argument("Partition: repeated element");
                seen[e] = 1;
            }
        }
        for (int e = 1; e <= n; ++e)
            if (!seen[e]) throw std::invalid_argument("Partition: elements do not cover {1..n}");
        std::sort(blocks.begin(), blocks.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        blocks_ = std::move(blocks);
    }

    static Partition singletons(int n) {
        std::vector<std::vector<int>> b;
        for (int i = 1; i <= n; ++i) b.push_back({i});
        return Partition(n, std::move(b));
    }

    static Partition full(int n) {
        std::vector<int> b(n);
        for (int i = 0; i < n; ++i) b[i] = i + 1;
        return Partition(n, {b});
    }

    int n() const { return n_; }
    const std::vector<std::vector<int>>& blocks() const { return blocks_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }

    /// 0-based block index of each element 1..n (index 0 of the result unused).
    std::vector<int> block_of() const {
        std::vector<int> bo(static_cast<size_t>(n_) + 1, -1);
        for (int bi = 0; bi < block_count(); ++bi)
            for (int e : blocks_[bi]) bo[e] = bi;
        return bo;
    }

    /// True iff there is no i<j<k<l with i,k in one block and j,l in another.
    bool is_noncrossing() const {
        const auto bo = block_of();
        for (int i = 1; i <= n_; ++i)
            for (int j = i + 1; j <= n_; ++j)
                for (int k = j + 1; k <= n_; ++k)
                    for (int l = k + 1; l <= n_; ++l)
                        if (bo[i] == bo[k] && bo[j] == bo[l] && bo[i] != bo[j]) return false;
        return true;
    }

    /// Refinement order: *this <= coarser iff every block here sits inside a
    /// block of `coarser`.
    bool refines(const Partition& coarser) const {
        if (coarser.n() != n_) throw std::invalid_argument("refines: size mismatch");
        const auto bo = coarser.block_of();
        for (const auto& b : blocks_) {
            const int target = bo[b.front()];
            for (int e : b)
                if (bo[e] != target) return false;
        }
        return true;
    }

    /// Kreweras complement. Uses the permutation description: a block's
    /// elements in increasing order form a cycle, and K(p) has the cycles of
    /// p^{-1} composed with the long cycle (1 2 ... n).
    Partition kreweras() const {
        if (!is_noncrossing()) throw std::invalid_argument("kreweras: crossing partition");
        std::vector<int> perm(static_cast<size_t>(n_) + 1, 0);
        for (const auto& b : blocks_) {
            for (size_t i = 0; i + 1 < b.size(); ++i) perm[b[i]] = b[i + 1];
            perm[b.back()] = b.front();
        }
        std::vector<int> inv(static_cast<size_t>(n_) + 1, 0);
        for (int e = 1; e <= n_; ++e) inv[perm[e]] = e;
        // q(x) = perm^{-1}(c(x)), c the cycle x -> x+1 (mod n)
        std::vector<int> q(static_cast<size_t>(n_) + 1, 0);
        for (int x = 1; x <= n_; ++x) q[x] = inv[x % n_ + 1];
        std::vector<char> used(static_cast<size_t>(n_) + 1, 0);
        std::vector<std::vector<int>> blocks;
        for (int x = 1; x <= n_; ++x) {
            if (used[x]) continue;
            std::vector<int> cyc;
            for (int y = x; !used[y]; y = q[y]) {
                used[y] = 1;
                cyc.push_back(y);
            }
            blocks.push_back(std::move(cyc));
        }
        return Partition(n_, std::move(blocks));
    }

    /// Canonical string form, e.g. "{(1,3),(2)}".
    std::string to_string() const {
        std::string s = "{";
        for (size_t bi = 0; bi < blocks_.size(); ++bi) {
            if (bi) s += ',';
            s += '(';
            for (size_t i = 0; i < blocks_[bi].size(); ++i) {
                if (i) s += ',';
                s += std::to_string(blocks_[bi][i]);
            }
            s += ')';
        }
        s += '}';
        return s;
    }

    bool operator==(const Partition& other) const {
        return n_ == other.n_ && blocks_ == other.blocks_;
    }

  private:
    int n_;
    std::vector<std::vector<int>> blocks_;
};

namespace detail {

// Streamed enumeration of NC(n) in lexicographic order of the block-of-element
// vector. An element may either join an open block (closing every block opened
// after it) or open a fresh block; the open blocks always carry increasing ids
// bottom-to-top, so visiting them in stack order yields lex order.
inline void enumerate_nc_rec(int n, int pos, std::vector<std::vector<int>>& open,
                             std::vector<std::vector<int>>& closed,
                             const std::function<void(const Partition&)>& visit) {
    if (pos > n) {
        std::vector<std::vector<int>> blocks = closed;
        for (const auto& b : open) blocks.push_back(b);
        visit(Partition(n, std::move(blocks)));
        return;
    }
    const size_t depth = open.size();
    for (size_t join = 0; join < depth; ++join) {
        // joining block `join` closes every block above it on the stack
        std::vector<std::vector<int>> popped(open.begin() + static_cast<long>(join) + 1,
                                             open.end());
        open.resize(join + 1);
        const size_t closed_mark = closed.size();
        for (auto& b : popped) closed.push_back(std::move(b));
        open[join].push_back(pos);
        enumerate_nc_rec(n, pos + 1, open, closed, visit);
        open[join].pop_back();
        for (size_t i = closed_mark; i < closed.size(); ++i) open.push_back(std::move(closed[i]));
        closed.resize(closed_mark);
    }
    open.push_back({pos});
    enumerate_nc_rec(n, pos + 1, open, closed, visit);
    open.pop_back();
}

} // namespace detail

inline constexpr int kMaxEnumerationN = 14;

/// Visit every non-crossing partition of {1..n} in lexicographic order of the
/// block-of-element vector. Caps at n = 14 (Catalan(14) = 2,674,440).
inline void enumerate_nc(int n, const std::function<void(const Partition&)>& visit) {
    if (n < 1 || n > kMaxEnumerationN)
        throw std::invalid_argument("enumerate_nc: n must be in [1, 14]");
    std::vector<std::vector<int>> open, closed;
    detail::enumerate_nc_rec(n, 1, open, closed, visit);
}

inline std::vector<Partition> enumerate_nc(int n) {
    std::vector<Partition> out;
    out.reserve(static_cast<size_t>(catalan(n)));
    enumerate_nc(n, [&](const Partition& p) { out.push_back(p); });
    return out;
}

/// Moebius function mu(p, 1_n) of NC(n), via the Kreweras complement:
/// the product over blocks W of K(p) of (-1)^{|W|-1} Catalan(|W|-1).
inline long long mobius_to_one(const Partition& p) {
    const Partition k = p.kreweras(); // throws on crossing input
    long long mu = 1;
    for (const auto& w : k.blocks()) {
        const int m = static_cast<int>(w.size()) - 1;
        mu *= (m % 2 == 0 ? 1 : -1) * catalan(m);
    }
    return mu;
}

} // namespace infinifree
