#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "arcweight/simplex.hpp"
#include "arcweight/words.hpp"

namespace arcweight {

using RationalVec = std::vector<Rational>;

inline Rational dot(const RationalVec& a, const RationalVec& b) {
    Rational s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Rational dot(const RationalVec& a, const Degree& b) {
    Rational s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * Rational(b[i]);
    return s;
}

inline Rational l1_norm(const RationalVec& a) {
    Rational s(0);
    for (const auto& v : a) s += abs_rat(v);
    return s;
}

inline RationalVec to_rational_vec(const Degree& d) {
    RationalVec v;
    v.reserve(d.size());
    for (unsigned e : d) v.emplace_back(e);
    return v;
}

/// Upward-closed polytope P(B) = ch of the union of b + [0,inf)^k over the
/// generator set B.  Generators are stored deduplicated and sorted, so all
/// downstream certificates are deterministic.
class UpwardPolytope {
  public:
    UpwardPolytope(int k, std::vector<Degree> generators) : k_(k) {
        for (auto& g : generators) {
            if (static_cast<int>(g.size()) != k)
                throw std::invalid_argument("generator has wrong dimension");
            gen_set_.insert(std::move(g));
        }
    }

    int k() const { return k_; }
    std::vector<Degree> generators() const {
        return std::vector<Degree>(gen_set_.begin(), gen_set_.end());
    }
    std::size_t size() const { return gen_set_.size(); }
    bool contains_generator(const Degree& g) const { return gen_set_.count(g) > 0; }

    UpwardPolytope without(const Degree& g) const {
        std::vector<Degree> rest;
        for (const auto& b : gen_set_)
            if (b != g) rest.push_back(b);
        return UpwardPolytope(k_, std::move(rest));
    }

    /// Generators with the coordinatewise-dominated ones removed.  Dropping a
    /// dominated generator leaves P(B) unchanged (its orthant translate is
    /// contained in the dominating one's), so LPs may run on this smaller set.
    std::vector<Degree> minimal_generators() const {
        std::vector<Degree> sorted(gen_set_.begin(), gen_set_.end());
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const Degree& a, const Degree& b) {
                             return degree_norm(a) < degree_norm(b);
                         });
        std::vector<Degree> kept;
        for (const auto& g : sorted) {
            bool dominated = false;
            for (const auto& m : kept)
                if (degree_leq(m, g)) { dominated = true; break; }
            if (!dominated) kept.push_back(g);
        }
        std::sort(kept.begin(), kept.end());
        return kept;
    }

  private:
    int k_;
    std::set<Degree> gen_set_;
};

/// Caratheodory-style witness that a point lies in P(B): a convex combination
/// of at most k+1 generators sitting coordinatewise below the query.
struct MembershipCertificate {
    std::vector<std::pair<Degree, Rational>> support;
    RationalVec slack;

    /// Replays the arithmetic: weights in [0,1] summing to 1, slack >= 0, and
    /// sum(weight*generator) + slack equal to the query exactly.
    bool validate(const RationalVec& query) const {
        Rational total(0);
        RationalVec point(query.size(), Rational(0));
        for (const auto& [g, w] : support) {
            if (w < 0 || w > 1) return false;
            total += w;
            for (std::size_t i = 0; i < query.size(); ++i) point[i] += w * Rational(g[i]);
        }
        if (total != 1) return false;
        if (support.size() > query.size() + 1) return false;
        for (std::size_t i = 0; i < query.size(); ++i) {
            if (slack[i] < 0) return false;
            if (point[i] + slack[i] != query[i]) return false;
        }
        return true;
    }
};

/// Exact membership test for b0 in P(B): feasibility of
///   theta >= 0, sum theta = 1, sum theta_l b_l <= b0.
/// The simplex returns a basic solution, so at most k+1 weights are nonzero
/// (the Caratheodory bound comes with the basis, no separate reduction pass).
inline std::optional<MembershipCertificate> membership(const UpwardPolytope& P,
                                                       const RationalVec& b0) {
    const int k = P.k();
    if (static_cast<int>(b0.size()) != k)
        throw std::invalid_argument("membership: query has wrong dimension");
    for (const auto& v : b0)
        if (v < 0) throw std::invalid_argument("membership: negative query coordinates rejected");

    auto gens = P.minimal_generators();
    const std::size_t m = gens.size();
    if (m == 0) return std::nullopt;  // P(empty) is empty

    // Columns: theta_1..theta_m, slack_1..slack_k. Rows: k coordinate
    // equations plus the convexity row.
    const std::size_t n = m + k;
    std::vector<std::vector<Rational>> A(k + 1, std::vector<Rational>(n, Rational(0)));
    std::vector<Rational> rhs(k + 1, Rational(0));
    for (int i = 0; i < k; ++i) {
        for (std::size_t l = 0; l < m; ++l) A[i][l] = Rational(gens[l][i]);
        A[i][m + i] = Rational(1);
        rhs[i] = b0[i];
    }
    for (std::size_t l = 0; l < m; ++l) A[k][l] = Rational(1);
    rhs[k] = Rational(1);

    auto res = SimplexSolver::solve(A, rhs, std::vector<Rational>(n, Rational(0)));
    if (res.status != SimplexSolver::Status::Optimal) return std::nullopt;

    MembershipCertificate cert;
    for (std::size_t l = 0; l < m; ++l)
        if (res.x[l] != 0) cert.support.emplace_back(gens[l], res.x[l]);
    cert.slack.assign(b0.size(), Rational(0));
    for (int i = 0; i < k; ++i) cert.slack[i] = res.x[m + i];
    if (!cert.validate(b0)) throw std::logic_error("membership: certificate failed replay");
    return cert;
}

inline bool is_member(const UpwardPolytope& P, const RationalVec& b0) {
    return membership(P, b0).has_value();
}

/// True iff b is a generator not representable by the others: extreme points
/// of P(B) are exactly the generators with b0 not in P(B \ {b0}).
inline bool is_extreme(const UpwardPolytope& P, const Degree& b) {
    if (!P.contains_generator(b))
        throw std::invalid_argument("is_extreme: point is not a generator");
    return !is_member(P.without(b), to_rational_vec(b));
}

inline std::vector<Degree> extreme_points(const UpwardPolytope& P) {
    std::vector<Degree> out;
    for (const auto& g : P.generators())
        if (is_extreme(P, g)) out.push_back(g);
    return out;
}

/// Separating functional v0 in (eps,1]^k with v0.b0 + eps < v0.b for every
/// generator b; the exact object behind every extremality claim.
struct SeparationWitness {
    RationalVec v0;
    Rational epsilon = Rational(0);

    bool validate(const std::vector<Degree>& generators, const RationalVec& b0) const {
        if (epsilon <= 0) return false;
        for (const auto& v : v0)
            if (!(v > epsilon && v <= 1)) return false;
        Rational level = dot(v0, b0) + epsilon;
        for (const auto& g : generators)
            if (!(level < dot(v0, g))) return false;
        return true;
    }
};

struct MemberError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Separating vector for b0 against P(A), following the construction of the
/// appendix lemma: an exact LP maximizes the minimum margin over v in [0,1]^k,
/// then delta = min-margin / (2 |b0|_1), v2 = v1 + delta, eps = delta/(2(1+delta)),
/// v0 = v2/(1+delta).  The postcondition inequalities are re-verified exactly.
inline SeparationWitness separating_vector(const std::vector<Degree>& A, const RationalVec& b0,
                                           int k) {
    for (const auto& g : A)
        if (static_cast<int>(g.size()) != k)
            throw std::invalid_argument("separating_vector: generator dimension mismatch");
    if (static_cast<int>(b0.size()) != k)
        throw std::invalid_argument("separating_vector: query dimension mismatch");

    SeparationWitness w;
    w.v0.assign(k, Rational(1));
    w.epsilon = Rational(1, 2);
    if (A.empty()) return w;  // vacuously valid

    if (is_member(UpwardPolytope(k, A), b0))
        throw MemberError("separating_vector: query point lies in the polytope");

    if (l1_norm(b0) == 0) {
        // b0 = 0 with nonempty A outside: every generator has |b|_1 >= 1.
        if (!w.validate(A, b0)) throw std::logic_error("separating_vector: trivial witness failed");
        return w;
    }

    // max t  s.t.  v.(g - b0) - t - s_g = 0,  v_i + u_i = 1,  all vars >= 0.
    const std::size_t m = A.size();
    const std::size_t n = k + 1 + k + m;  // v, t, u, s
    std::vector<std::vector<Rational>> M(m + k, std::vector<Rational>(n, Rational(0)));
    std::vector<Rational> rhs(m + k, Rational(0));
    for (std::size_t g = 0; g < m; ++g) {
        for (int i = 0; i < k; ++i) M[g][i] = Rational(A[g][i]) - b0[i];
        M[g][k] = Rational(-1);
        M[g][k + 1 + k + g] = Rational(-1);
    }
    for (int i = 0; i < k; ++i) {
        M[m + i][i] = Rational(1);
        M[m + i][k + 1 + i] = Rational(1);
        rhs[m + i] = Rational(1);
    }
    std::vector<Rational> cost(n, Rational(0));
    cost[k] = Rational(-1);  // maximize t

    auto res = SimplexSolver::solve(M, rhs, cost);
    if (res.status != SimplexSolver::Status::Optimal)
        throw std::logic_error("separating_vector: margin LP did not solve");
    Rational margin = res.x[k];
    if (margin <= 0)
        throw MemberError("separating_vector: no positive margin (query in closure)");

    RationalVec v1(res.x.begin(), res.x.begin() + k);
    Rational delta = margin / (2 * l1_norm(b0));
    Rational one_plus = 1 + delta;
    w.v0.clear();
    for (int i = 0; i < k; ++i) w.v0.push_back((v1[i] + delta) / one_plus);
    w.epsilon = delta / (2 * one_plus);

    // The lemma's epsilon needs |b0|_1 >= 1; queries below unit l1 norm get
    // half the true scaled margin instead, which restores strictness.
    Rational true_margin = dot(w.v0, A[0]) - dot(w.v0, b0);
    for (const auto& g : A) true_margin = std::min(true_margin, dot(w.v0, g) - dot(w.v0, b0));
    w.epsilon = std::min(w.epsilon, true_margin / 2);

    if (!w.validate(A, b0))
        throw std::logic_error("separating_vector: constructed witness failed exact replay");
    return w;
}

/// Finite envelope of the half-space {v0.b > v0.b0}: the lemma's set
/// A = {b in Z>=0^k : |b|_1 <= N, v0.b > v0.b0} with N = ceil(k/eps (b0.v0 + 1)).
/// Throws if the lattice slab is too large to materialize.
inline UpwardPolytope finite_envelope(const RationalVec& v0, const RationalVec& b0,
                                      std::size_t enumeration_cap = 4000000) {
    const int k = static_cast<int>(v0.size());
    for (const auto& v : v0)
        if (v <= 0) throw std::invalid_argument("finite_envelope: v0 entries must be positive");
    if (b0.size() != v0.size())
        throw std::invalid_argument("finite_envelope: dimension mismatch");

    Rational eps = v0[0];
    for (const auto& v : v0) eps = std::min(eps, v);
    Rational bound = Rational(k) / eps * (dot(v0, b0) + 1);
    BigInt N_big = numerator(bound) / denominator(bound);
    if (Rational(N_big) < bound) N_big += 1;  // exact ceiling
    if (N_big > 4096) throw std::invalid_argument("finite_envelope: N out of desk-scale range");
    const unsigned N = N_big.convert_to<unsigned>();

    // Slab size check before enumerating C(N+k, k) lattice points.
    double approx = 1.0;
    for (int i = 1; i <= k; ++i) approx *= static_cast<double>(N + i) / i;
    if (approx > static_cast<double>(enumeration_cap))
        throw std::invalid_argument("finite_envelope: lattice slab exceeds enumeration cap");

    Rational level = dot(v0, b0);
    std::vector<Degree> A;
    Degree cur(k, 0);
    std::function<void(int, unsigned)> walk = [&](int pos, unsigned used) {
        if (pos == k) {
            if (dot(v0, cur) > level) A.push_back(cur);
            return;
        }
        for (unsigned v = 0; v + used <= N; ++v) {
            cur[pos] = v;
            walk(pos + 1, used + v);
        }
        cur[pos] = 0;
    };
    walk(0, 0);
    return UpwardPolytope(k, std::move(A));
}

/// The appendix proof's finite reduction: A = {b in B : |b|_1 <= C} + the axis
/// points C e_i, with C doubling from ceil(|b0|_1)+1 until b0 is excluded.
/// P(B) is contained in P(A) because every |b|_1 >= C point already is.
inline UpwardPolytope admissible_reduction(const UpwardPolytope& B, const RationalVec& b0) {
    const int k = B.k();
    if (is_member(B, b0)) throw MemberError("admissible_reduction: query point is a member");

    Rational n1 = l1_norm(b0);
    BigInt base = numerator(n1) / denominator(n1);
    if (Rational(base) < n1) base += 1;
    base += 1;

    for (int iter = 0; iter < 48; ++iter) {
        BigInt C = base << iter;
        std::vector<Degree> A;
        for (const auto& g : B.generators())
            if (Rational(degree_norm(g)) <= Rational(C)) A.push_back(g);
        unsigned Cu = C.convert_to<unsigned>();
        for (int i = 0; i < k; ++i) {
            Degree axis(k, 0);
            axis[i] = Cu;
            A.push_back(axis);
        }
        UpwardPolytope cand(k, std::move(A));
        if (!is_member(cand, b0)) return cand;
    }
    throw std::logic_error("admissible_reduction: doubling search exhausted (bug)");
}

}  // namespace arcweight
