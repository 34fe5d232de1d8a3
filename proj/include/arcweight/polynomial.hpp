#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "arcweight/rational.hpp"

namespace arcweight {

using Exponents = std::vector<unsigned>;

/// Exact multivariate polynomial over the rationals in variables x_1..x_d.
/// Canonical form: the term map never stores a zero coefficient, so equality
/// of polynomials is equality of the maps.
class Polynomial {
  public:
    using TermMap = std::map<Exponents, Rational>;

    explicit Polynomial(int dimension) : dim_(dimension) {
        if (dimension <= 0) throw std::invalid_argument("polynomial dimension must be positive");
    }

    static Polynomial zero(int dimension) { return Polynomial(dimension); }

    static Polynomial constant(int dimension, const Rational& c) {
        Polynomial p(dimension);
        p.add_term(Exponents(dimension, 0), c);
        return p;
    }

    /// The monomial coeff * x_i^power (i is 1-based).
    static Polynomial monomial(int dimension, int i, unsigned power = 1,
                               const Rational& coeff = Rational(1)) {
        Polynomial p(dimension);
        Exponents e(dimension, 0);
        p.check_var(i);
        e[i - 1] = power;
        p.add_term(e, coeff);
        return p;
    }

    static Polynomial variable(int dimension, int i) { return monomial(dimension, i); }

    int dimension() const { return dim_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    bool is_constant() const {
        if (terms_.empty()) return true;
        return terms_.size() == 1 && terms_.begin()->first == Exponents(dim_, 0);
    }

    Rational constant_value() const {
        if (terms_.empty()) return Rational(0);
        auto it = terms_.find(Exponents(dim_, 0));
        return it == terms_.end() ? Rational(0) : it->second;
    }

    unsigned total_degree() const {
        unsigned deg = 0;
        for (const auto& [e, c] : terms_) {
            unsigned s = 0;
            for (unsigned ei : e) s += ei;
            deg = std::max(deg, s);
        }
        return deg;
    }

    void add_term(const Exponents& e, const Rational& c) {
        if (static_cast<int>(e.size()) != dim_)
            throw std::invalid_argument("exponent tuple length does not match dimension");
        if (c == 0) return;
        auto [it, inserted] = terms_.emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Polynomial operator-() const {
        Polynomial r(dim_);
        for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
        return r;
    }

    Polynomial& operator+=(const Polynomial& o) {
        require_same_dim(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        require_same_dim(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        a.require_same_dim(b);
        Polynomial r(a.dim_);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Exponents e(ea);
                for (int i = 0; i < a.dim_; ++i) e[i] += eb[i];
                r.add_term(e, ca * cb);
            }
        return r;
    }

    friend Polynomial operator*(const Rational& s, const Polynomial& p) {
        Polynomial r(p.dim_);
        if (s == 0) return r;
        for (const auto& [e, c] : p.terms_) r.terms_.emplace(e, s * c);
        return r;
    }
    friend Polynomial operator*(const Polynomial& p, const Rational& s) { return s * p; }

    bool operator==(const Polynomial& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }
    bool operator!=(const Polynomial& o) const { return !(*this == o); }

    Polynomial pow(unsigned e) const {
        Polynomial acc = constant(dim_, Rational(1));
        Polynomial base = *this;
        while (e) {
            if (e & 1u) acc = acc * base;
            if (e >>= 1u) base = base * base;
        }
        return acc;
    }

    /// Exact formal partial derivative with respect to x_i (1-based).
    Polynomial derivative(int i) const {
        check_var(i);
        Polynomial r(dim_);
        for (const auto& [e, c] : terms_) {
            if (e[i - 1] == 0) continue;
            Exponents de(e);
            --de[i - 1];
            r.add_term(de, c * Rational(e[i - 1]));
        }
        return r;
    }

    Rational eval(const std::vector<Rational>& x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("evaluation point has wrong dimension");
        Rational acc(0);
        for (const auto& [e, c] : terms_) {
            Rational t = c;
            for (int i = 0; i < dim_; ++i)
                if (e[i]) t *= pow_rat(x[i], e[i]);
            acc += t;
        }
        return acc;
    }

    double eval_double(const std::vector<double>& x) const {
        double acc = 0.0;
        for (const auto& [e, c] : terms_) {
            double t = to_double(c);
            for (int i = 0; i < dim_; ++i)
                for (unsigned j = 0; j < e[i]; ++j) t *= x[i];
            acc += t;
        }
        return acc;
    }

    /// Flat-array evaluator for numeric inner loops (quadrature, RK flows);
    /// term maps with big-rational keys are too slow there.
    struct Compiled {
        int dim = 0;
        std::vector<double> coeffs;
        std::vector<unsigned> exps;  // terms * dim, row-major

        double eval(const double* x) const {
            double acc = 0.0;
            const unsigned* e = exps.data();
            for (double c : coeffs) {
                double t = c;
                for (int i = 0; i < dim; ++i, ++e)
                    for (unsigned j = 0; j < *e; ++j) t *= x[i];
                acc += t;
            }
            return acc;
        }
        double eval(const std::vector<double>& x) const { return eval(x.data()); }
    };

    Compiled compile() const {
        Compiled c;
        c.dim = dim_;
        for (const auto& [e, coef] : terms_) {
            c.coeffs.push_back(to_double(coef));
            c.exps.insert(c.exps.end(), e.begin(), e.end());
        }
        return c;
    }

    /// Substitutes args[i] for x_{i+1}; args live in a common target ring.
    /// Works for any substitution targets supporting ring ops (polynomials, jets).
    template <class Ring>
    Ring substitute(const std::vector<Ring>& args, const Ring& one) const {
        if (static_cast<int>(args.size()) != dim_)
            throw std::invalid_argument("substitution needs one argument per variable");
        Ring acc = Rational(0) * one;
        for (const auto& [e, c] : terms_) {
            Ring t = c * one;
            for (int i = 0; i < dim_; ++i)
                for (unsigned j = 0; j < e[i]; ++j) t = t * args[i];
            acc = acc + t;
        }
        return acc;
    }

    std::string str(const std::vector<std::string>& names = {}) const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << format_rational(c);
            for (int i = 0; i < dim_; ++i) {
                if (!e[i]) continue;
                os << "*";
                if (static_cast<int>(names.size()) == dim_) os << names[i];
                else os << "x" << (i + 1);
                if (e[i] > 1) os << "^" << e[i];
            }
        }
        return os.str();
    }

  private:
    void require_same_dim(const Polynomial& o) const {
        if (dim_ != o.dim_) throw std::invalid_argument("polynomial dimension mismatch");
    }
    void check_var(int i) const {
        if (i < 1 || i > dim_) throw std::out_of_range("variable index out of range");
    }

    int dim_;
    TermMap terms_;
};

/// Polynomial map between coordinate spaces; houses submersions and the
/// change-of-variable maps of the invariance checks.
struct PolyMap {
    int source_dim = 0;
    int target_dim = 0;
    std::vector<Polynomial> components;  // target_dim entries over source variables

    PolyMap(int source, int target, std::vector<Polynomial> comps)
        : source_dim(source), target_dim(target), components(std::move(comps)) {
        if (static_cast<int>(components.size()) != target_dim)
            throw std::invalid_argument("component count must equal target dimension");
        for (const auto& c : components)
            if (c.dimension() != source_dim)
                throw std::invalid_argument("all components must be over source variables");
    }

    static PolyMap identity(int dim) {
        std::vector<Polynomial> comps;
        for (int i = 1; i <= dim; ++i) comps.push_back(Polynomial::variable(dim, i));
        return PolyMap(dim, dim, std::move(comps));
    }

    std::vector<Rational> eval(const std::vector<Rational>& x) const {
        std::vector<Rational> y;
        y.reserve(components.size());
        for (const auto& c : components) y.push_back(c.eval(x));
        return y;
    }

    std::vector<double> eval_double(const std::vector<double>& x) const {
        std::vector<double> y;
        y.reserve(components.size());
        for (const auto& c : components) y.push_back(c.eval_double(x));
        return y;
    }

    /// Jacobian matrix as polynomials, entry (m,i) = d components[m] / d x_{i+1}.
    std::vector<std::vector<Polynomial>> jacobian() const {
        std::vector<std::vector<Polynomial>> J(target_dim,
                                               std::vector<Polynomial>());
        for (int m = 0; m < target_dim; ++m)
            for (int i = 1; i <= source_dim; ++i)
                J[m].push_back(components[m].derivative(i));
        return J;
    }

    bool operator==(const PolyMap& o) const {
        return source_dim == o.source_dim && target_dim == o.target_dim &&
               components == o.components;
    }
};

/// p ∘ m, substituting the map components for p's variables.
inline Polynomial compose(const Polynomial& p, const PolyMap& m) {
    if (p.dimension() != m.target_dim)
        throw std::invalid_argument("compose: polynomial variables must match map target");
    return p.substitute<Polynomial>(m.components,
                                    Polynomial::constant(m.source_dim, Rational(1)));
}

/// m2 ∘ m1 (apply m1 first).
inline PolyMap compose(const PolyMap& m2, const PolyMap& m1) {
    if (m2.source_dim != m1.target_dim)
        throw std::invalid_argument("compose: inner map target must match outer map source");
    std::vector<Polynomial> comps;
    comps.reserve(m2.components.size());
    for (const auto& c : m2.components) comps.push_back(compose(c, m1));
    return PolyMap(m1.source_dim, m2.target_dim, std::move(comps));
}

/// Exact determinant of a square polynomial matrix by cofactor expansion;
/// matrices here are at most 4x4 at desk scale.
inline Polynomial poly_det(const std::vector<std::vector<Polynomial>>& m) {
    const std::size_t n = m.size();
    if (n == 0) throw std::invalid_argument("empty matrix");
    for (const auto& row : m)
        if (row.size() != n) throw std::invalid_argument("matrix not square");
    const int dim = m[0][0].dimension();
    if (n == 1) return m[0][0];
    Polynomial acc(dim);
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero()) continue;
        std::vector<std::vector<Polynomial>> minor;
        minor.reserve(n - 1);
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Polynomial> row;
            row.reserve(n - 1);
            for (std::size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        Polynomial term = m[0][j] * poly_det(minor);
        if (j % 2) acc -= term;
        else acc += term;
    }
    return acc;
}

/// Exact determinant of a rational matrix (fraction-free would be overkill here).
inline Rational rat_det(std::vector<std::vector<Rational>> m) {
    const std::size_t n = m.size();
    Rational det(1);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) return Rational(0);
        if (piv != col) {
            std::swap(m[piv], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (std::size_t r = col + 1; r < n; ++r) {
            if (m[r][col] == 0) continue;
            Rational f = m[r][col] / m[col][col];
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
        }
    }
    return det;
}

/// Rank of a rational matrix by exact elimination; used for submersion checks.
inline int rat_rank(std::vector<std::vector<Rational>> m) {
    if (m.empty()) return 0;
    const std::size_t rows = m.size(), cols = m[0].size();
    int rank = 0;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && m[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[piv], m[r]);
        for (std::size_t rr = r + 1; rr < rows; ++rr) {
            if (m[rr][c] == 0) continue;
            Rational f = m[rr][c] / m[r][c];
            for (std::size_t cc = c; cc < cols; ++cc) m[rr][cc] -= f * m[r][cc];
        }
        ++r;
        ++rank;
    }
    return rank;
}

}  // namespace arcweight
