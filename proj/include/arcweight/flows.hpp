#pragma once

#include <cstdint>
#include <random>

#include "arcweight/arclength.hpp"
#include "arcweight/jet.hpp"

namespace arcweight {

/// Flow selector J in {1..k}^d and its degree bookkeeping.
using FlowWord = std::vector<int>;

inline Degree flow_word_degree(const FlowWord& J, int k) {
    Degree d(k, 0);
    for (int letter : J) {
        if (letter < 1 || letter > k) throw std::out_of_range("flow word letter out of range");
        ++d[letter - 1];
    }
    return d;
}

/// deg_J alpha: i-th entry is the sum of alpha_l over slots l with J_l = i.
inline Degree deg_J_alpha(const FlowWord& J, const MultiIndex& alpha, int k) {
    if (alpha.size() != J.size()) throw std::invalid_argument("deg_J_alpha: arity mismatch");
    Degree d(k, 0);
    for (std::size_t l = 0; l < J.size(); ++l) d[J[l] - 1] += alpha[l];
    return d;
}

/// Taylor jet of the single flow e^{tX}(x0) to order M, by Picard iteration in
/// the jet ring: each pass y <- x0 + int X(y) dt pins one more order, so M+1
/// passes (or an early fixpoint) give the exact truncation.
inline std::vector<Jet> flow_jet(const VectorField& X, const std::vector<Rational>& x0, int M) {
    if (M < 1) throw std::invalid_argument("flow_jet: order must be >= 1");
    if (static_cast<int>(x0.size()) != X.dim)
        throw std::invalid_argument("flow_jet: base point dimension mismatch");
    std::vector<Jet> y;
    for (const auto& c : x0) y.push_back(Jet::constant(1, M, c));
    for (int pass = 0; pass <= M; ++pass) {
        std::vector<Jet> next;
        next.reserve(y.size());
        for (int i = 0; i < X.dim; ++i) {
            Jet rhs = poly_at_jets(X.components[i], y).antiderivative(1);
            rhs.add(MultiIndex(1, 0), x0[i]);
            next.push_back(std::move(rhs));
        }
        if (next == y) break;
        y = std::move(next);
    }
    return y;
}

/// Composite flow map Psi^J_{x0}(t_1..t_d) = e^{t_d X_{J_d}} o ... o e^{t_1 X_{J_1}}(x0)
/// as exact jets in (t_1,...,t_d).
struct FlowJet {
    FlowWord J;
    std::vector<Rational> x0;
    std::vector<Jet> components;  // d jets in d variables
    int order = 0;
};

inline FlowJet psi_jet(const SystemSpec& sys, const FlowWord& J,
                       const std::vector<Rational>& x0, int M) {
    const int d = sys.d();
    if (static_cast<int>(J.size()) != d)
        throw std::invalid_argument("psi_jet: |J| must equal the ambient dimension");
    if (static_cast<int>(x0.size()) != d)
        throw std::invalid_argument("psi_jet: base point dimension mismatch");
    if (M < 1) throw std::invalid_argument("psi_jet: order must be >= 1");

    std::vector<Jet> u;
    for (const auto& c : x0) u.push_back(Jet::constant(d, M, c));
    for (int leg = 1; leg <= d; ++leg) {
        const VectorField& X = sys.fields()[J[leg - 1] - 1];
        std::vector<Jet> base = u;  // value at t_leg = 0
        std::vector<Jet> z = base;
        for (int pass = 0; pass <= M; ++pass) {
            std::vector<Jet> next;
            next.reserve(z.size());
            for (int i = 0; i < d; ++i)
                next.push_back(base[i] + poly_at_jets(X.components[i], z).antiderivative(leg));
            if (next == z) break;
            z = std::move(next);
        }
        u = std::move(z);
    }
    return FlowJet{J, x0, std::move(u), M};
}

/// Coefficient table of det D_t Psi at 0: the returned jet stores
/// c_alpha = d^alpha det D Psi(0) / alpha! for |alpha|_1 <= M-1 (one order is
/// lost to the Jacobian).  partial_at_zero recovers the paper's d^alpha values.
inline Jet det_jacobian_taylor(const FlowJet& fj) {
    const int d = static_cast<int>(fj.components.size());
    if (fj.order < 1) throw std::invalid_argument("det_jacobian_taylor: order must be >= 1");
    std::vector<std::vector<Jet>> m(d, std::vector<Jet>());
    for (int i = 0; i < d; ++i)
        for (int j = 1; j <= d; ++j) m[i].push_back(fj.components[i].derivative(j));
    return jet_det(m);
}

/// The second polytope: generators deg J + deg_J alpha over all J in {1..k}^d
/// and coefficients of det D Psi^J that are exactly nonzero, |alpha|_1 <= M-1.
inline NewtonPolytopeReport tilde_polytope_at(const SystemSpec& sys,
                                              const std::vector<Rational>& x0, int M) {
    const int d = sys.d(), k = sys.k();
    std::set<Degree> gens;
    std::vector<FlowWord> all_J;
    FlowWord cur(d, 1);
    for (;;) {
        all_J.push_back(cur);
        int pos = d - 1;
        while (pos >= 0 && cur[pos] == k) cur[pos--] = 1;
        if (pos < 0) break;
        ++cur[pos];
    }
    for (const auto& J : all_J) {
        Degree dJ = flow_word_degree(J, k);
        Jet table = det_jacobian_taylor(psi_jet(sys, J, x0, M));
        for (const auto& [alpha, c] : table.coefficients())
            gens.insert(degree_sum(dJ, deg_J_alpha(J, alpha, k)));
    }
    NewtonPolytopeReport rep;
    rep.base_points = {x0};
    rep.truncation = d + M - 1;
    rep.polytope = UpwardPolytope(k, std::vector<Degree>(gens.begin(), gens.end()));
    detail::attach_extremes(rep);
    return rep;
}

/// Both sides of the equivalence at degree b0: S_lambda sums |lambda_I(x0)|
/// over canonical tuples, S_psi sums |d^alpha det D Psi^J(0)| over all ordered
/// J and alpha with deg J + deg_J alpha = b0.  The two counting conventions
/// differ by a b0-dependent combinatorial factor, which the ratio absorbs.
struct EquivalenceReport {
    Degree b0;
    int N = 0;
    int M = 0;
    bool b0_extreme_in_truncation = false;
    Rational S_lambda = Rational(0);
    Rational S_psi = Rational(0);
    bool zero_equivalence = false;  // S_lambda = 0  iff  S_psi = 0
    std::optional<Rational> ratio;  // S_psi / S_lambda when both nonzero
    std::string verdict;
};

inline EquivalenceReport equivalence_report(const SystemSpec& sys,
                                            const std::vector<Rational>& x0, const Degree& b0,
                                            int N, int M) {
    const int d = sys.d(), k = sys.k();
    if (static_cast<int>(b0.size()) != k)
        throw std::invalid_argument("equivalence_report: b0 has wrong arity");
    if (M - 1 < static_cast<int>(degree_norm(b0)) - d)
        throw std::invalid_argument("equivalence_report: jet order too small to expose b0");

    EquivalenceReport rep;
    rep.b0 = b0;
    rep.N = N;
    rep.M = M;

    auto poly_rep = newton_polytope_at(sys, x0, N);
    rep.b0_extreme_in_truncation = poly_rep.has_extreme(b0);

    auto words = sys.table().nonzero_words(static_cast<int>(degree_norm(b0)));
    for (const auto& I : enumerate_degree_tuples(d, b0, words, k))
        rep.S_lambda += abs_rat(lambda_I_at(sys.table(), I, x0));

    FlowWord cur(d, 1);
    for (;;) {
        Degree dJ = flow_word_degree(cur, k);
        if (degree_leq(dJ, b0)) {
            Jet table = det_jacobian_taylor(psi_jet(sys, cur, x0, M));
            for (const auto& [alpha, c] : table.coefficients())
                if (degree_sum(dJ, deg_J_alpha(cur, alpha, k)) == b0)
                    rep.S_psi += abs_rat(c * multi_factorial(alpha));
        }
        int pos = d - 1;
        while (pos >= 0 && cur[pos] == k) cur[pos--] = 1;
        if (pos < 0) break;
        ++cur[pos];
    }

    rep.zero_equivalence = (rep.S_lambda == 0) == (rep.S_psi == 0);
    if (rep.S_lambda != 0 && rep.S_psi != 0) {
        rep.ratio = rep.S_psi / rep.S_lambda;
        rep.verdict = rep.b0_extreme_in_truncation
                          ? "pass: both sides nonzero"
                          : "pass: both sides nonzero (b0 not extreme in truncation)";
    } else if (rep.S_lambda == 0 && rep.S_psi == 0) {
        rep.verdict = "pass: both sides zero";
    } else if (!rep.b0_extreme_in_truncation && rep.S_psi == 0) {
        rep.verdict = "non-extreme failure reproduced";
    } else {
        rep.verdict = "MISMATCH: zero-equivalence violated at an extreme point";
    }
    return rep;
}

/// rho~(x) = |d^{beta0} det D_t Psi_x^{J0}(0)|^{1/(|b0|_1-1)},
/// b0 = deg J0 + deg_{J0} beta0.
inline WeightValue weight_rho_tilde(const SystemSpec& sys, const FlowWord& J0,
                                    const MultiIndex& beta0, const std::vector<Rational>& x) {
    Degree b0 = degree_sum(flow_word_degree(J0, sys.k()), deg_J_alpha(J0, beta0, sys.k()));
    unsigned n = degree_norm(b0);
    if (n < 2) throw std::invalid_argument("weight_rho_tilde: |b0|_1 must be >= 2");
    int M = static_cast<int>(multi_norm(beta0)) + 1;
    Jet table = det_jacobian_taylor(psi_jet(sys, J0, x, M));
    WeightValue w;
    w.radicand = abs_rat(table.partial_at_zero(beta0));
    w.root = n - 1;
    w.value = rational_root(w.radicand, w.root);
    return w;
}

/// Classical fixed-step RK4 for a time-independent right-hand side.
template <class Rhs>
std::vector<double> rk4_integrate(const Rhs& f, std::vector<double> y, double t, double h) {
    if (h <= 0) throw std::invalid_argument("rk4: step must be positive");
    double total = std::fabs(t);
    if (total == 0) return y;
    auto steps_d = std::ceil(total / h);
    if (steps_d > 1e7) throw std::invalid_argument("rk4: step count overflow");
    long steps = static_cast<long>(steps_d);
    double dt = t / static_cast<double>(steps);
    const std::size_t n = y.size();
    std::vector<double> k1, k2, k3, k4, tmp(n);
    for (long s = 0; s < steps; ++s) {
        k1 = f(y);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
        k2 = f(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
        k3 = f(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
        k4 = f(tmp);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
}

/// Numeric flow e^{tX}(x0) by RK4; the floating-point counterpart of flow_jet.
inline std::vector<double> numeric_flow(const VectorField& X, const std::vector<double>& x0,
                                        double t, double h) {
    return rk4_integrate([&X](const std::vector<double>& y) { return X.eval_double(y); }, x0, t,
                         h);
}

/// Portable deterministic uniform draw in [-1, 1); avoids the
/// implementation-defined std::uniform_real_distribution.
inline double uniform_pm1(std::mt19937_64& rng) {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

struct CCBallParams {
    double delta = 0.125;
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    int rk_steps = 32;
};

/// Carnot-Caratheodory-type ball sample cloud: for t drawn uniformly from the
/// open unit cube, integrate the frozen-coefficient field
///   sum_i t_i delta^{v0 . deg w_i} X_{w_i}
/// over unit time from x0.  Deterministic under the seed.
inline std::vector<std::vector<double>> cc_ball(const SystemSpec& sys,
                                                const std::vector<Rational>& x0,
                                                const WordTuple& I, const RationalVec& v0,
                                                const CCBallParams& params) {
    if (params.delta <= 0) throw std::invalid_argument("cc_ball: delta must be positive");
    if (lambda_I_at(sys.table(), I, x0) == 0)
        throw std::invalid_argument("cc_ball: lambda_I vanishes at the base point");

    const int d = sys.d();
    std::vector<std::vector<Polynomial::Compiled>> fields;
    std::vector<double> scales;
    for (const auto& w : I.words) {
        std::vector<Polynomial::Compiled> comps;
        for (const auto& c : sys.table().field(w).components) comps.push_back(c.compile());
        fields.push_back(std::move(comps));
        Rational e = dot(v0, word_degree(w, sys.k()));
        scales.push_back(std::pow(params.delta, to_double(e)));
    }

    std::vector<double> x0d;
    for (const auto& c : x0) x0d.push_back(to_double(c));

    std::mt19937_64 rng(params.seed);
    std::vector<std::vector<double>> cloud;
    cloud.reserve(params.n_samples);
    std::vector<double> coeff(d);
    double h = 1.0 / static_cast<double>(params.rk_steps);
    for (std::size_t s = 0; s < params.n_samples; ++s) {
        for (int i = 0; i < d; ++i) coeff[i] = uniform_pm1(rng) * scales[i];
        auto rhs = [&](const std::vector<double>& y) {
            std::vector<double> v(d, 0.0);
            for (int i = 0; i < d; ++i)
                for (int c = 0; c < d; ++c) v[c] += coeff[i] * fields[i][c].eval(y.data());
            return v;
        };
        cloud.push_back(rk4_integrate(rhs, x0d, 1.0, h));
    }
    return cloud;
}

}  // namespace arcweight
