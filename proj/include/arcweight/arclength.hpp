#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arcweight/system.hpp"

namespace arcweight {

/// Extremality is reported at three confidence levels: extreme within the
/// truncation, certified stable under any extension beyond it (the witness
/// inequality below), and paper-exact where a closed form is known (asserted
/// in the test suite, not here).
struct ExtremeEntry {
    Degree degree;
    bool certified = false;
    SeparationWitness witness;
};

struct NewtonPolytopeReport {
    std::vector<std::vector<Rational>> base_points;
    int truncation = 0;
    UpwardPolytope polytope{1, {}};
    std::vector<ExtremeEntry> extremes;
    bool region_lower_approximation = false;

    bool has_extreme(const Degree& b) const {
        for (const auto& e : extremes)
            if (e.degree == b) return true;
        return false;
    }

    std::vector<Degree> extreme_degrees() const {
        std::vector<Degree> out;
        for (const auto& e : extremes) out.push_back(e.degree);
        return out;
    }
};

namespace detail {

/// Marks extreme generators and attaches witnesses.  A generator b stays
/// extreme under any extension by generators of l1 norm > N when
/// (min_i v0^i) (N+1) > v0 . b: new generators then land strictly above the
/// witness level automatically.
inline void attach_extremes(NewtonPolytopeReport& rep) {
    auto gens = rep.polytope.generators();
    for (const auto& g : gens) {
        if (!is_extreme(rep.polytope, g)) continue;
        std::vector<Degree> rest;
        for (const auto& o : gens)
            if (o != g) rest.push_back(o);
        ExtremeEntry e;
        e.degree = g;
        e.witness = separating_vector(rest, to_rational_vec(g), rep.polytope.k());
        Rational vmin = e.witness.v0[0];
        for (const auto& v : e.witness.v0) vmin = std::min(vmin, v);
        e.certified = vmin * Rational(rep.truncation + 1) > dot(e.witness.v0, g);
        rep.extremes.push_back(std::move(e));
    }
}

/// Degrees b with |b|_1 <= N for which some tuple has lambda_I(x0) != 0.
/// Tuples touching identically-zero bracket fields contribute nothing, so
/// candidates are multisets of d nonzero words.
inline std::vector<Degree> generator_degrees_at(const BracketTable& table,
                                                const std::vector<Rational>& x0, int N) {
    auto words = table.nonzero_words(N);
    std::vector<std::pair<Word, Degree>> pool;
    for (const auto& w : words) pool.emplace_back(w, word_degree(w, table.k()));

    std::set<Degree> found;
    const int d = table.dim();
    std::vector<std::vector<Rational>> columns;
    Degree acc(table.k(), 0);

    std::function<void(std::size_t, unsigned)> recurse = [&](std::size_t start, unsigned used) {
        if (static_cast<int>(columns.size()) == d) {
            if (found.count(acc)) return;
            if (determinant_of_fields_at(columns) != 0) found.insert(acc);
            return;
        }
        unsigned slots = d - static_cast<unsigned>(columns.size());
        for (std::size_t i = start; i < pool.size(); ++i) {
            unsigned len = static_cast<unsigned>(pool[i].first.size());
            if (used + len + (slots - 1) > static_cast<unsigned>(N)) continue;
            columns.push_back(table.field(pool[i].first).eval(x0));
            Degree prev(acc);
            acc = degree_sum(acc, pool[i].second);
            recurse(i, used + len);
            acc = std::move(prev);
            columns.pop_back();
        }
    };
    recurse(0, 0);
    return std::vector<Degree>(found.begin(), found.end());
}

}  // namespace detail

/// Newton polytope of the system at x0, truncated at word-tuple degree N.
inline NewtonPolytopeReport newton_polytope_at(const SystemSpec& sys,
                                               const std::vector<Rational>& x0, int N) {
    if (static_cast<int>(x0.size()) != sys.d())
        throw std::invalid_argument("newton_polytope_at: base point dimension mismatch");
    if (N < 1) throw std::invalid_argument("newton_polytope_at: N must be >= 1");
    NewtonPolytopeReport rep;
    rep.base_points = {x0};
    rep.truncation = N;
    rep.polytope = UpwardPolytope(sys.k(), detail::generator_degrees_at(sys.table(), x0, N));
    detail::attach_extremes(rep);
    return rep;
}

/// Newton polytope of a sampled region: the union of the per-point generator
/// sets.  A sampling approximation from below, flagged as such.
inline NewtonPolytopeReport newton_polytope_of_region(
    const SystemSpec& sys, const std::vector<std::vector<Rational>>& samples, int N) {
    if (samples.empty())
        throw std::invalid_argument("newton_polytope_of_region: empty sample list");
    std::vector<Degree> all;
    for (const auto& x : samples) {
        if (!sys.cutoff().contains(x))
            throw std::invalid_argument("newton_polytope_of_region: sample outside cutoff box");
        auto gens = detail::generator_degrees_at(sys.table(), x, N);
        all.insert(all.end(), gens.begin(), gens.end());
    }
    NewtonPolytopeReport rep;
    rep.base_points = samples;
    rep.truncation = N;
    rep.polytope = UpwardPolytope(sys.k(), std::move(all));
    rep.region_lower_approximation = true;
    detail::attach_extremes(rep);
    return rep;
}

/// A weight value travels as the exact rational radicand plus the one floating
/// root that reports quote.
struct WeightValue {
    Rational radicand;  // |lambda_I0(x)|, exact
    unsigned root = 1;  // |deg I0|_1 - 1
    double value = 0.0;
};

/// rho_{I0}(x) = |lambda_{I0}(x)|^{1/(|deg I0|_1 - 1)}.
inline WeightValue weight_rho(const SystemSpec& sys, const WordTuple& I0,
                              const std::vector<Rational>& x) {
    unsigned n = degree_norm(I0.degree);
    if (n < 2) throw std::invalid_argument("weight_rho: |deg I0|_1 must be >= 2");
    WeightValue w;
    w.radicand = abs_rat(lambda_I_at(sys.table(), I0, x));
    w.root = n - 1;
    w.value = rational_root(w.radicand, w.root);
    return w;
}

/// q(b) = b / (|b|_1 - 1); an involution on {|b|_1 > 1}.
inline RationalVec q_map(const RationalVec& b) {
    Rational n = l1_norm(b);
    if (!(n > 1)) throw std::invalid_argument("q_map: |b|_1 must exceed 1");
    RationalVec out;
    out.reserve(b.size());
    for (const auto& v : b) out.push_back(v / (n - 1));
    return out;
}

/// Lebesgue exponent tuple in [1,inf]^k with infinity encoded explicitly.
struct ExponentVector {
    struct Entry {
        bool infinite = false;
        Rational value = Rational(1);  // meaningful when finite; must be >= 1
    };
    std::vector<Entry> entries;

    static ExponentVector finite(const RationalVec& p) {
        ExponentVector e;
        for (const auto& v : p) {
            if (v < 1) throw std::invalid_argument("exponents must be >= 1");
            e.entries.push_back({false, v});
        }
        return e;
    }

    std::size_t size() const { return entries.size(); }

    /// The reciprocal view 1/p with 1/inf = 0.
    RationalVec reciprocal() const {
        RationalVec r;
        for (const auto& e : entries) r.push_back(e.infinite ? Rational(0) : 1 / e.value);
        return r;
    }

    bool all_finite() const {
        for (const auto& e : entries)
            if (e.infinite) return false;
        return true;
    }
};

struct RegionCheck {
    bool admissible = false;
    std::vector<std::string> reasons;
};

/// Theorem-region test: 1/p <= q(b0) coordinatewise, strictly wherever
/// b0^j != 0 (equality is allowed only on letters the tuple never uses).
inline RegionCheck exponent_region_check(const Degree& b0, const ExponentVector& p) {
    if (degree_norm(b0) <= 1)
        throw std::invalid_argument("exponent_region_check: |b0|_1 must exceed 1");
    if (p.size() != b0.size())
        throw std::invalid_argument("exponent_region_check: arity mismatch");
    RegionCheck out;
    out.admissible = true;
    RationalVec q = q_map(to_rational_vec(b0));
    RationalVec r = p.reciprocal();
    for (std::size_t j = 0; j < b0.size(); ++j) {
        std::ostringstream os;
        if (b0[j] != 0) {
            if (r[j] < q[j]) continue;
            out.admissible = false;
            os << "coordinate " << (j + 1) << ": need 1/p < " << format_rational(q[j])
               << " (strict, deg_j != 0), got " << format_rational(r[j]);
        } else {
            if (r[j] <= q[j]) continue;
            out.admissible = false;
            os << "coordinate " << (j + 1) << ": need 1/p <= " << format_rational(q[j])
               << ", got " << format_rational(r[j]);
        }
        out.reasons.push_back(os.str());
    }
    return out;
}

struct DiffeoSampleCheck {
    std::vector<Rational> point;
    Rational lhs_sq;  // lambda-tilde squared
    Rational rhs_sq;  // (product of jacobian factors times lambda o F) squared
    bool holds = false;
};

struct DiffeoReport {
    bool minimality_ok = false;
    std::string diagnostic;
    std::vector<DiffeoSampleCheck> checks;
    bool all_hold = false;
};

/// Verifies the transformation identity for pi~_j = G_j o pi_j o F in its
/// power-cleared form
///   lambda~_{I0}^2 = [ prod_j ((det DG_j) o pi_j o F)^{b0^j} (det DF)^{|b0|_1-1}
///                      (lambda_{I0} o F) ]^2
/// at each sample, entirely in exact arithmetic.  Aborts (minimality_ok =
/// false) when some smaller degree has a non-vanishing determinant, since the
/// identity can genuinely fail then.
inline DiffeoReport diffeo_invariance_check(const SystemSpec& sys, const WordTuple& I0,
                                            const PolyMap& F, const std::vector<PolyMap>& Gs,
                                            const std::vector<std::vector<Rational>>& samples) {
    DiffeoReport rep;
    if (!sys.has_submersions())
        throw std::invalid_argument("diffeo_invariance_check: system must carry submersions");
    if (static_cast<int>(Gs.size()) != sys.k())
        throw std::invalid_argument("diffeo_invariance_check: one G_j per submersion");

    const Degree& b0 = I0.degree;
    if (!minimality_check(sys.table(), b0)) {
        rep.minimality_ok = false;
        rep.diagnostic =
            "deg I0 = " + degree_str(b0) +
            " is not minimal: some lambda_I with deg I strictly below it is nonzero, "
            "and the transformation identity can fail";
        return rep;
    }
    rep.minimality_ok = true;

    const int d = sys.d();
    std::vector<PolyMap> tilde_pis;
    std::vector<Polynomial> g_factors;  // (det DG_j) o pi_j o F, over source vars
    for (int j = 0; j < sys.k(); ++j) {
        const PolyMap& pij = sys.submersions()[j];
        PolyMap pij_F = compose(pij, F);
        tilde_pis.push_back(compose(Gs[j], pij_F));
        Polynomial detG = poly_det(Gs[j].jacobian());
        g_factors.push_back(compose(detG, pij_F));
    }
    auto tilde_fields = hodge_star_fields(tilde_pis, d).fields;
    BracketTable tilde_table(tilde_fields);

    Polynomial lambda = lambda_I(sys.table(), I0);
    Polynomial lambda_tilde = lambda_I(tilde_table, I0);
    Polynomial detF = poly_det(F.jacobian());
    unsigned n1 = degree_norm(b0);

    rep.all_hold = true;
    for (const auto& x : samples) {
        DiffeoSampleCheck c;
        c.point = x;
        Rational lhs = lambda_tilde.eval(x);
        Rational rhs = lambda.eval(F.eval(x)) * pow_rat(detF.eval(x), n1 - 1);
        for (int j = 0; j < sys.k(); ++j) rhs *= pow_rat(g_factors[j].eval(x), b0[j]);
        c.lhs_sq = lhs * lhs;
        c.rhs_sq = rhs * rhs;
        c.holds = (c.lhs_sq == c.rhs_sq);
        if (!c.holds) rep.all_hold = false;
        rep.checks.push_back(std::move(c));
    }
    return rep;
}

}  // namespace arcweight
