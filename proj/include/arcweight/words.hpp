#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "arcweight/fields.hpp"

namespace arcweight {

/// A word over the letters {1..k}; indexes the iterated bracket X_w.
using Word = std::vector<int>;

/// Letter-occurrence counts of a word (or of a tuple of words).
using Degree = std::vector<unsigned>;

inline Degree word_degree(const Word& w, int k) {
    Degree d(k, 0);
    for (int letter : w) {
        if (letter < 1 || letter > k) throw std::out_of_range("word letter out of range");
        ++d[letter - 1];
    }
    return d;
}

inline unsigned degree_norm(const Degree& d) {
    return std::accumulate(d.begin(), d.end(), 0u);
}

inline Degree degree_sum(const Degree& a, const Degree& b) {
    Degree s(a);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += b[i];
    return s;
}

/// a ⪯ b coordinatewise.
inline bool degree_leq(const Degree& a, const Degree& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

/// a ≺ b: coordinatewise ≤ with at least one strict inequality.
inline bool degree_lt(const Degree& a, const Degree& b) {
    return degree_leq(a, b) && a != b;
}

inline std::string word_str(const Word& w) {
    std::string s = "(";
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(w[i]);
    }
    return s + ")";
}

inline std::string degree_str(const Degree& d) {
    std::string s = "(";
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(d[i]);
    }
    return s + ")";
}

/// A d-tuple of words; its degree is the sum of the word degrees.
struct WordTuple {
    std::vector<Word> words;
    Degree degree;

    WordTuple(std::vector<Word> ws, int k) : words(std::move(ws)), degree(k, 0) {
        for (const auto& w : words) degree = degree_sum(degree, word_degree(w, k));
    }
};

/// All words of length <= max_length in lexicographic order (short first).
inline std::vector<Word> enumerate_words(int k, int max_length) {
    if (max_length < 1) throw std::invalid_argument("enumerate_words: bound must be >= 1");
    std::vector<Word> out;
    std::vector<Word> level;
    for (int i = 1; i <= k; ++i) level.push_back({i});
    for (int len = 1; len <= max_length; ++len) {
        out.insert(out.end(), level.begin(), level.end());
        if (len == max_length) break;
        std::vector<Word> next;
        next.reserve(level.size() * k);
        for (const auto& w : level)
            for (int i = 1; i <= k; ++i) {
                Word e(w);
                e.push_back(i);
                next.push_back(std::move(e));
            }
        level = std::move(next);
    }
    return out;
}

/// Memoized iterated brackets X_w with X_(i) = X_i and X_(w,i) = [X_w, X_i].
/// Built once (optionally with zero-subtree pruning), read-only afterwards.
class BracketTable {
  public:
    BracketTable(std::vector<VectorField> base) : base_(std::move(base)) {
        if (base_.size() < 1) throw std::invalid_argument("BracketTable: need base fields");
        dim_ = base_[0].dim;
        for (const auto& f : base_)
            if (f.dim != dim_) throw std::invalid_argument("BracketTable: mixed dimensions");
    }

    int k() const { return static_cast<int>(base_.size()); }
    int dim() const { return dim_; }
    const std::vector<VectorField>& base() const { return base_; }

    const VectorField& field(const Word& w) const {
        if (w.empty()) throw std::invalid_argument("empty word");
        auto it = memo_.find(w);
        if (it != memo_.end()) return it->second;
        VectorField f = compute(w);
        return memo_.emplace(std::move(Word(w)), std::move(f)).first->second;
    }

    /// All words of length <= max_length whose bracket field is not identically
    /// zero.  Once X_w vanishes identically every extension vanishes too, so
    /// the whole subtree is pruned; that keeps k^N enumeration off the table.
    std::vector<Word> nonzero_words(int max_length) const {
        std::vector<Word> out;
        std::vector<Word> frontier;
        for (int i = 1; i <= k(); ++i) {
            Word w{i};
            if (!field(w).is_zero()) {
                out.push_back(w);
                frontier.push_back(w);
            }
        }
        for (int len = 2; len <= max_length; ++len) {
            std::vector<Word> next;
            for (const auto& w : frontier)
                for (int i = 1; i <= k(); ++i) {
                    Word e(w);
                    e.push_back(i);
                    if (!field(e).is_zero()) {
                        out.push_back(e);
                        next.push_back(e);
                    }
                }
            frontier = std::move(next);
            if (frontier.empty()) break;
        }
        return out;
    }

  private:
    VectorField compute(const Word& w) const {
        if (w.size() == 1) {
            int i = w[0];
            if (i < 1 || i > k()) throw std::out_of_range("word letter out of range");
            return base_[i - 1];
        }
        Word prefix(w.begin(), w.end() - 1);
        const VectorField& xw = field(prefix);
        if (xw.is_zero()) return VectorField::zero(dim_);
        return lie_bracket(xw, base_[w.back() - 1]);
    }

    std::vector<VectorField> base_;
    int dim_ = 0;
    mutable std::map<Word, VectorField> memo_;
};

/// Universal integer coefficients C with [X_w, X_w'] = sum C^wt X_wt over
/// words wt of degree deg w + deg w'.  Obtained from the Jacobi recursion
/// [X_w,[X_u,X_i]] = [[X_w,X_u],X_i] - [X_(w,i),X_u], inducting on |w'|.
/// Words whose first two letters coincide index the zero field and are dropped.
inline std::map<Word, long long> jacobi_expand(const Word& w, const Word& wp) {
    std::map<Word, long long> out;
    if (w == wp) return out;  // [X,X] = 0

    auto add = [&out](const Word& wt, long long c) {
        if (c == 0) return;
        if (wt.size() >= 2 && wt[0] == wt[1]) return;  // X_(a,a,...) vanishes identically
        auto [it, inserted] = out.emplace(wt, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) out.erase(it);
        }
    };

    if (wp.size() == 1) {
        Word wt(w);
        wt.push_back(wp[0]);
        add(wt, 1);
        return out;
    }

    Word u(wp.begin(), wp.end() - 1);
    int i = wp.back();

    // [[X_w, X_u], X_i]
    for (const auto& [v, c] : jacobi_expand(w, u)) {
        Word vi(v);
        vi.push_back(i);
        add(vi, c);
    }
    // -[X_(w,i), X_u]
    Word wi(w);
    wi.push_back(i);
    if (!(wi.size() >= 2 && wi[0] == wi[1]))
        for (const auto& [v, c] : jacobi_expand(wi, u)) add(v, -c);
    return out;
}

/// lambda_I = det(X_{w_1},...,X_{w_d}) as an exact polynomial.
inline Polynomial lambda_I(const BracketTable& table, const WordTuple& I) {
    if (static_cast<int>(I.words.size()) != table.dim())
        throw std::invalid_argument("lambda_I: tuple size must equal ambient dimension");
    std::vector<VectorField> cols;
    cols.reserve(I.words.size());
    for (const auto& w : I.words) cols.push_back(table.field(w));
    return determinant_of_fields(cols);
}

/// lambda_I evaluated at a point without forming the symbolic determinant.
inline Rational lambda_I_at(const BracketTable& table, const WordTuple& I,
                            const std::vector<Rational>& x) {
    std::vector<std::vector<Rational>> cols;
    cols.reserve(I.words.size());
    for (const auto& w : I.words) cols.push_back(table.field(w).eval(x));
    return determinant_of_fields_at(cols);
}

/// All canonical d-tuples (words sorted lexicographically within the tuple,
/// one representative per multiset) drawn from `words` with degree exactly b.
/// Reorderings only flip the sign of lambda_I, so one representative suffices.
inline std::vector<WordTuple> enumerate_degree_tuples(int d, const Degree& b,
                                                      const std::vector<Word>& words, int k) {
    std::vector<WordTuple> out;
    if (degree_norm(b) < static_cast<unsigned>(d)) return out;

    std::vector<std::pair<Word, Degree>> pool;
    for (const auto& w : words) {
        Degree dw = word_degree(w, k);
        if (degree_leq(dw, b)) pool.emplace_back(w, dw);
    }

    std::vector<Word> current;
    Degree acc(b.size(), 0);
    std::function<void(std::size_t)> recurse = [&](std::size_t start) {
        if (static_cast<int>(current.size()) == d) {
            if (acc == b) out.emplace_back(current, k);
            return;
        }
        unsigned remaining_slots = d - current.size();
        if (degree_norm(b) < degree_norm(acc) + remaining_slots) return;
        for (std::size_t i = start; i < pool.size(); ++i) {
            Degree next = degree_sum(acc, pool[i].second);
            if (!degree_leq(next, b)) continue;
            current.push_back(pool[i].first);
            std::swap(acc, next);
            recurse(i);  // multisets: the same word may repeat
            std::swap(acc, next);
            current.pop_back();
        }
    };
    recurse(0);
    return out;
}

/// Convenience overload drawing candidate words from the full enumeration.
inline std::vector<WordTuple> enumerate_degree_tuples(const BracketTable& table, const Degree& b) {
    auto words = enumerate_words(table.k(), static_cast<int>(degree_norm(b)));
    return enumerate_degree_tuples(table.dim(), b, words, table.k());
}

/// Degrees strictly below b0 in the partial order (excluding b0 itself).
inline std::vector<Degree> degrees_below(const Degree& b0) {
    std::vector<Degree> out;
    Degree cur(b0.size(), 0);
    std::function<void(std::size_t)> walk = [&](std::size_t pos) {
        if (pos == b0.size()) {
            if (cur != b0) out.push_back(cur);
            return;
        }
        for (unsigned v = 0; v <= b0[pos]; ++v) {
            cur[pos] = v;
            walk(pos + 1);
        }
    };
    walk(0);
    return out;
}

/// True iff lambda_I is identically zero (exact polynomial zero) for every
/// tuple of degree strictly below b0.  Tuples touching an identically-zero
/// bracket field vanish trivially, so candidates come from nonzero words only.
inline bool minimality_check(const BracketTable& table, const Degree& b0) {
    auto words = table.nonzero_words(static_cast<int>(degree_norm(b0)));
    for (const auto& b : degrees_below(b0)) {
        if (degree_norm(b) < static_cast<unsigned>(table.dim())) continue;
        for (const auto& I : enumerate_degree_tuples(table.dim(), b, words, table.k()))
            if (!lambda_I(table, I).is_zero()) return false;
    }
    return true;
}

}  // namespace arcweight
