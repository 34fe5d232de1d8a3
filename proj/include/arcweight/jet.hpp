#pragma once

#include <map>
#include <vector>

#include "arcweight/polynomial.hpp"

namespace arcweight {

using MultiIndex = std::vector<unsigned>;

inline unsigned multi_norm(const MultiIndex& a) {
    unsigned s = 0;
    for (unsigned v : a) s += v;
    return s;
}

inline Rational factorial_rat(unsigned n) {
    Rational f(1);
    for (unsigned i = 2; i <= n; ++i) f *= Rational(i);
    return f;
}

inline Rational multi_factorial(const MultiIndex& a) {
    Rational f(1);
    for (unsigned v : a) f *= factorial_rat(v);
    return f;
}

/// Truncated multivariate power series with exact rational coefficients:
/// the coefficient map stores c_alpha with |alpha|_1 <= order, and every ring
/// operation truncates at that total degree.  Coefficients are the Taylor
/// normalization c_alpha = d^alpha f(0) / alpha!.
class Jet {
  public:
    Jet(int variables, int order) : vars_(variables), order_(order) {
        if (variables <= 0 || order < 0) throw std::invalid_argument("bad jet shape");
    }

    static Jet constant(int variables, int order, const Rational& c) {
        Jet j(variables, order);
        j.set(MultiIndex(variables, 0), c);
        return j;
    }

    /// The jet of the coordinate t_i (1-based).
    static Jet variable(int variables, int order, int i) {
        Jet j(variables, order);
        if (i < 1 || i > variables) throw std::out_of_range("jet variable index");
        if (order >= 1) {
            MultiIndex a(variables, 0);
            a[i - 1] = 1;
            j.set(a, Rational(1));
        }
        return j;
    }

    int variables() const { return vars_; }
    int order() const { return order_; }
    const std::map<MultiIndex, Rational>& coefficients() const { return coeff_; }
    bool is_zero() const { return coeff_.empty(); }

    Rational coefficient(const MultiIndex& a) const {
        auto it = coeff_.find(a);
        return it == coeff_.end() ? Rational(0) : it->second;
    }

    Rational constant_term() const { return coefficient(MultiIndex(vars_, 0)); }

    void set(const MultiIndex& a, const Rational& c) {
        check_index(a);
        if (c == 0) coeff_.erase(a);
        else coeff_[a] = c;
    }

    void add(const MultiIndex& a, const Rational& c) {
        check_index(a);
        if (c == 0) return;
        auto [it, inserted] = coeff_.emplace(a, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) coeff_.erase(it);
        }
    }

    Jet truncated(int new_order) const {
        Jet out(vars_, new_order);
        for (const auto& [a, c] : coeff_)
            if (multi_norm(a) <= static_cast<unsigned>(new_order)) out.coeff_.emplace(a, c);
        return out;
    }

    friend Jet operator+(const Jet& x, const Jet& y) {
        x.check_compatible(y);
        Jet out(x);
        for (const auto& [a, c] : y.coeff_) out.add(a, c);
        return out;
    }

    friend Jet operator-(const Jet& x, const Jet& y) {
        x.check_compatible(y);
        Jet out(x);
        for (const auto& [a, c] : y.coeff_) out.add(a, -c);
        return out;
    }

    Jet operator-() const {
        Jet out(vars_, order_);
        for (const auto& [a, c] : coeff_) out.coeff_.emplace(a, -c);
        return out;
    }

    friend Jet operator*(const Rational& s, const Jet& x) {
        Jet out(x.vars_, x.order_);
        if (s == 0) return out;
        for (const auto& [a, c] : x.coeff_) out.coeff_.emplace(a, s * c);
        return out;
    }
    friend Jet operator*(const Jet& x, const Rational& s) { return s * x; }

    friend Jet operator*(const Jet& x, const Jet& y) {
        x.check_compatible(y);
        Jet out(x.vars_, x.order_);
        const unsigned cap = static_cast<unsigned>(x.order_);
        for (const auto& [a, ca] : x.coeff_) {
            unsigned na = multi_norm(a);
            for (const auto& [b, cb] : y.coeff_) {
                if (na + multi_norm(b) > cap) continue;
                MultiIndex s(a);
                for (int i = 0; i < x.vars_; ++i) s[i] += b[i];
                out.add(s, ca * cb);
            }
        }
        return out;
    }

    bool operator==(const Jet& o) const {
        return vars_ == o.vars_ && order_ == o.order_ && coeff_ == o.coeff_;
    }

    /// Formal partial derivative with respect to t_i; drops one order.
    Jet derivative(int i) const {
        if (i < 1 || i > vars_) throw std::out_of_range("jet variable index");
        Jet out(vars_, order_ > 0 ? order_ - 1 : 0);
        for (const auto& [a, c] : coeff_) {
            if (a[i - 1] == 0) continue;
            MultiIndex d(a);
            --d[i - 1];
            out.add(d, c * Rational(a[i - 1]));
        }
        return out;
    }

    /// Formal antiderivative in t_i (integration constant zero); the Picard
    /// step of the flow computations.
    Jet antiderivative(int i) const {
        if (i < 1 || i > vars_) throw std::out_of_range("jet variable index");
        Jet out(vars_, order_);
        const unsigned cap = static_cast<unsigned>(order_);
        for (const auto& [a, c] : coeff_) {
            if (multi_norm(a) + 1 > cap) continue;
            MultiIndex s(a);
            ++s[i - 1];
            out.add(s, c / Rational(s[i - 1]));
        }
        return out;
    }

    /// Substitution of inner jets for the variables; defined only when every
    /// substituted variable receives a jet with zero constant term (otherwise
    /// the composite coefficients need infinitely many terms).
    Jet compose(const std::vector<Jet>& inner) const {
        if (static_cast<int>(inner.size()) != vars_)
            throw std::invalid_argument("jet compose: one inner jet per variable");
        for (int i = 0; i < vars_; ++i) {
            bool used = false;
            for (const auto& [a, c] : coeff_)
                if (a[i]) { used = true; break; }
            if (used && inner[i].constant_term() != 0)
                throw std::invalid_argument(
                    "jet compose: substituted variable needs zero constant term");
        }
        const int ivars = inner.empty() ? vars_ : inner[0].variables();
        const int iorder = inner.empty() ? order_ : inner[0].order();
        Jet acc(ivars, iorder);
        Jet one = Jet::constant(ivars, iorder, Rational(1));
        for (const auto& [a, c] : coeff_) {
            Jet term = c * one;
            for (int i = 0; i < vars_; ++i)
                for (unsigned j = 0; j < a[i]; ++j) term = term * inner[i];
            acc = acc + term;
        }
        return acc;
    }

    /// Value of d^alpha f at 0, i.e. alpha! * c_alpha.
    Rational partial_at_zero(const MultiIndex& a) const {
        return coefficient(a) * multi_factorial(a);
    }

    Rational eval(const std::vector<Rational>& t) const {
        if (static_cast<int>(t.size()) != vars_) throw std::invalid_argument("jet eval arity");
        Rational acc(0);
        for (const auto& [a, c] : coeff_) {
            Rational v = c;
            for (int i = 0; i < vars_; ++i)
                if (a[i]) v *= pow_rat(t[i], a[i]);
            acc += v;
        }
        return acc;
    }

  private:
    void check_index(const MultiIndex& a) const {
        if (static_cast<int>(a.size()) != vars_)
            throw std::invalid_argument("jet index arity mismatch");
        if (multi_norm(a) > static_cast<unsigned>(order_))
            throw std::invalid_argument("jet index beyond truncation order");
    }
    void check_compatible(const Jet& o) const {
        if (vars_ != o.vars_ || order_ != o.order_)
            throw std::invalid_argument("jet shape mismatch");
    }

    int vars_;
    int order_;
    std::map<MultiIndex, Rational> coeff_;
};

/// Evaluates a polynomial at a tuple of jets (finite sum, so constant terms in
/// the arguments are fine, unlike jet-in-jet composition).
inline Jet poly_at_jets(const Polynomial& p, const std::vector<Jet>& args) {
    if (args.empty()) throw std::invalid_argument("poly_at_jets: no arguments");
    const int vars = args[0].variables();
    const int order = args[0].order();
    Jet acc(vars, order);

    // Power cache per argument keeps repeated jet multiplies down.
    std::vector<std::vector<Jet>> powers(args.size());
    auto power = [&](std::size_t i, unsigned e) -> const Jet& {
        auto& cache = powers[i];
        if (cache.empty()) cache.push_back(Jet::constant(vars, order, Rational(1)));
        while (cache.size() <= e) cache.push_back(cache.back() * args[i]);
        return cache[e];
    };

    for (const auto& [exps, c] : p.terms()) {
        if (static_cast<int>(exps.size()) != static_cast<int>(args.size()))
            throw std::invalid_argument("poly_at_jets: arity mismatch");
        Jet term = Jet::constant(vars, order, c);
        for (std::size_t i = 0; i < args.size(); ++i)
            if (exps[i]) term = term * power(i, exps[i]);
        acc = acc + term;
    }
    return acc;
}

/// Exact determinant of a square matrix of jets by cofactor expansion.
inline Jet jet_det(const std::vector<std::vector<Jet>>& m) {
    const std::size_t n = m.size();
    if (n == 0) throw std::invalid_argument("jet_det: empty matrix");
    if (n == 1) return m[0][0];
    const int vars = m[0][0].variables();
    const int order = m[0][0].order();
    Jet acc(vars, order);
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero()) continue;
        std::vector<std::vector<Jet>> minor;
        minor.reserve(n - 1);
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Jet> row;
            row.reserve(n - 1);
            for (std::size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        Jet term = m[0][j] * jet_det(minor);
        if (j % 2) acc = acc - term;
        else acc = acc + term;
    }
    return acc;
}

}  // namespace arcweight
