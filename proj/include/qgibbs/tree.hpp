#pragma once

#include <qgibbs/errors.hpp>

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qgibbs {

/// Vertex of the rooted Cayley tree, identified by its coordinate word
/// (i1,...,in) with symbols in [1,k]; the empty word is the root.
/// Vertices are plain immutable value objects; the tree itself never
/// materializes nodes.
class TreeVertex {
public:
    TreeVertex() = default;
    explicit TreeVertex(std::vector<std::uint32_t> word) : word_(std::move(word)) {}

    static TreeVertex root() { return TreeVertex(); }

    const std::vector<std::uint32_t>& word() const { return word_; }
    std::size_t level() const { return word_.size(); }
    bool is_root() const { return word_.empty(); }

    TreeVertex child(std::uint32_t i) const {
        std::vector<std::uint32_t> w = word_;
        w.push_back(i);
        return TreeVertex(std::move(w));
    }

    TreeVertex parent() const {
        if (is_root()) throw precondition_error("TreeVertex: root has no parent");
        std::vector<std::uint32_t> w(word_.begin(), word_.end() - 1);
        return TreeVertex(std::move(w));
    }

    friend bool operator==(const TreeVertex&, const TreeVertex&) = default;
    friend auto operator<=>(const TreeVertex& a, const TreeVertex& b) {
        if (auto c = a.word_.size() <=> b.word_.size(); c != 0) return c;
        return a.word_ <=> b.word_;
    }

    /// "()" for the root, "(1,2,1)" otherwise.
    std::string to_string() const {
        std::string out = "(";
        for (std::size_t i = 0; i < word_.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(word_[i]);
        }
        out += ')';
        return out;
    }

    static TreeVertex parse(const std::string& s) {
        if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
            throw config_error("TreeVertex: bad vertex text '" + s + "'");
        }
        std::vector<std::uint32_t> w;
        std::size_t pos = 1;
        while (pos < s.size() - 1) {
            std::size_t end = s.find(',', pos);
            if (end == std::string::npos || end > s.size() - 1) end = s.size() - 1;
            const std::string tok = s.substr(pos, end - pos);
            if (tok.empty()) throw config_error("TreeVertex: bad vertex text '" + s + "'");
            const long v = std::stol(tok);
            if (v < 1) throw config_error("TreeVertex: symbols start at 1 in '" + s + "'");
            w.push_back(static_cast<std::uint32_t>(v));
            pos = end + (end < s.size() - 1 ? 1 : 0);
        }
        return TreeVertex(std::move(w));
    }

private:
    std::vector<std::uint32_t> word_;
};

/// Word concatenation; the semigroup operation with the root as unit.
inline TreeVertex compose(const TreeVertex& x, const TreeVertex& y) {
    std::vector<std::uint32_t> w = x.word();
    w.insert(w.end(), y.word().begin(), y.word().end());
    return TreeVertex(std::move(w));
}

/// Translation by g: x -> g o x.
inline TreeVertex translate(const TreeVertex& g, const TreeVertex& x) { return compose(g, x); }

/// Graph distance: level(x) + level(y) - 2 * (longest common prefix).
inline std::size_t distance(const TreeVertex& x, const TreeVertex& y) {
    const auto& a = x.word();
    const auto& b = y.word();
    std::size_t lcp = 0;
    while (lcp < a.size() && lcp < b.size() && a[lcp] == b[lcp]) ++lcp;
    return a.size() + b.size() - 2 * lcp;
}

/// Residue class of the vertex level mod m; class 0 marks membership in
/// the sub-semigroup G_m.
inline unsigned g_class(const TreeVertex& x, unsigned m) {
    if (m < 2) throw precondition_error("g_class: m >= 2 required");
    return static_cast<unsigned>(x.level() % m);
}

enum class RootDegreeMode {
    k_successors,      // root has k children, |W_n| = k^n
    k_plus_one         // root has k+1 children
};

/// Finite materialization of the semi-infinite Cayley tree of order k:
/// level sets W_n, volumes V_n, edge sets L_n, direct successors S(x).
/// Enumerations are deterministic (levels in lexicographic word order).
class CayleyTree {
public:
    CayleyTree(unsigned order, unsigned depth,
               RootDegreeMode mode = RootDegreeMode::k_successors)
        : k_(order), depth_(depth), mode_(mode) {
        if (order < 1) throw precondition_error("CayleyTree: order >= 1 required");
        if (depth < 1) throw precondition_error("CayleyTree: depth >= 1 required");
    }

    unsigned order() const { return k_; }
    unsigned depth() const { return depth_; }
    RootDegreeMode mode() const { return mode_; }

    unsigned branching_at(const TreeVertex& x) const {
        if (x.is_root() && mode_ == RootDegreeMode::k_plus_one) return k_ + 1;
        return k_;
    }

    /// Direct successors S(x) = {(x,i) : 1 <= i <= k}, in index order.
    std::vector<TreeVertex> successors(const TreeVertex& x) const {
        if (x.level() >= depth_) {
            throw precondition_error("CayleyTree: successors past the materialized depth");
        }
        std::vector<TreeVertex> out;
        const unsigned b = branching_at(x);
        out.reserve(b);
        for (std::uint32_t i = 1; i <= b; ++i) out.push_back(x.child(i));
        return out;
    }

    /// |W_n|
    std::size_t level_count(unsigned n) const {
        if (n == 0) return 1;
        std::size_t c = mode_ == RootDegreeMode::k_plus_one ? k_ + 1 : k_;
        for (unsigned i = 1; i < n; ++i) c *= k_;
        return c;
    }

    /// |V_n| = 1 + sum of |W_m| for m <= n
    std::size_t volume_count(unsigned n) const {
        std::size_t c = 1;
        for (unsigned m = 1; m <= n; ++m) c += level_count(m);
        return c;
    }

    /// W_n in lexicographic order.
    std::vector<TreeVertex> enumerate_level(unsigned n) const {
        require_depth(n);
        std::vector<TreeVertex> out{TreeVertex::root()};
        for (unsigned m = 1; m <= n; ++m) {
            std::vector<TreeVertex> next;
            next.reserve(out.size() * k_);
            for (const auto& v : out) {
                for (const auto& s : successors(v)) next.push_back(s);
            }
            out = std::move(next);
        }
        return out;
    }

    /// V_n: root first, then W_1, W_2, ..., each lexicographic.
    std::vector<TreeVertex> enumerate_volume(unsigned n) const {
        require_depth(n);
        std::vector<TreeVertex> out{TreeVertex::root()};
        for (unsigned m = 1; m <= n; ++m) {
            for (auto& v : enumerate_level(m)) out.push_back(std::move(v));
        }
        return out;
    }

    /// L_n as (parent, child) pairs, parents in volume order.
    std::vector<std::pair<TreeVertex, TreeVertex>> enumerate_edges(unsigned n) const {
        require_depth(n);
        std::vector<std::pair<TreeVertex, TreeVertex>> out;
        for (unsigned m = 0; m + 1 <= n; ++m) {
            for (const auto& v : enumerate_level(m)) {
                for (const auto& s : successors(v)) out.emplace_back(v, s);
            }
        }
        return out;
    }

private:
    void require_depth(unsigned n) const {
        if (n > depth_) throw precondition_error("CayleyTree: level past the materialized depth");
    }

    unsigned k_;
    unsigned depth_;
    RootDegreeMode mode_;
};

} // namespace qgibbs
