#pragma once

#include <optional>
#include <vector>

#include "arcweight/polynomial.hpp"

namespace arcweight {

/// Polynomial vector field on R^d: d components over x_1..x_d.
struct VectorField {
    int dim = 0;
    std::vector<Polynomial> components;

    VectorField(int dimension, std::vector<Polynomial> comps)
        : dim(dimension), components(std::move(comps)) {
        if (static_cast<int>(components.size()) != dim)
            throw std::invalid_argument("vector field needs one component per coordinate");
        for (const auto& c : components)
            if (c.dimension() != dim)
                throw std::invalid_argument("vector field components share the ambient dimension");
    }

    static VectorField zero(int dimension) {
        return VectorField(dimension,
                           std::vector<Polynomial>(dimension, Polynomial::zero(dimension)));
    }

    /// The coordinate field d/dx_i.
    static VectorField coordinate(int dimension, int i) {
        VectorField f = zero(dimension);
        f.components[i - 1] = Polynomial::constant(dimension, Rational(1));
        return f;
    }

    bool is_zero() const {
        for (const auto& c : components)
            if (!c.is_zero()) return false;
        return true;
    }

    std::vector<Rational> eval(const std::vector<Rational>& x) const {
        std::vector<Rational> v;
        v.reserve(components.size());
        for (const auto& c : components) v.push_back(c.eval(x));
        return v;
    }

    std::vector<double> eval_double(const std::vector<double>& x) const {
        std::vector<double> v;
        v.reserve(components.size());
        for (const auto& c : components) v.push_back(c.eval_double(x));
        return v;
    }

    friend VectorField operator+(const VectorField& a, const VectorField& b) {
        if (a.dim != b.dim) throw std::invalid_argument("vector field dimension mismatch");
        std::vector<Polynomial> comps;
        comps.reserve(a.dim);
        for (int i = 0; i < a.dim; ++i) comps.push_back(a.components[i] + b.components[i]);
        return VectorField(a.dim, std::move(comps));
    }

    friend VectorField operator*(const Rational& s, const VectorField& f) {
        std::vector<Polynomial> comps;
        comps.reserve(f.dim);
        for (const auto& c : f.components) comps.push_back(s * c);
        return VectorField(f.dim, std::move(comps));
    }

    friend VectorField operator*(const Polynomial& s, const VectorField& f) {
        std::vector<Polynomial> comps;
        comps.reserve(f.dim);
        for (const auto& c : f.components) comps.push_back(s * c);
        return VectorField(f.dim, std::move(comps));
    }

    bool operator==(const VectorField& o) const {
        return dim == o.dim && components == o.components;
    }
};

/// Coordinate Lie bracket [X,Y]_i = sum_l (X_l d_l Y_i - Y_l d_l X_i), exact.
inline VectorField lie_bracket(const VectorField& x, const VectorField& y) {
    if (x.dim != y.dim) throw std::invalid_argument("lie_bracket: dimension mismatch");
    const int d = x.dim;
    std::vector<Polynomial> comps;
    comps.reserve(d);
    for (int i = 0; i < d; ++i) {
        Polynomial acc(d);
        for (int l = 1; l <= d; ++l) {
            acc += x.components[l - 1] * y.components[i].derivative(l);
            acc -= y.components[l - 1] * x.components[i].derivative(l);
        }
        comps.push_back(std::move(acc));
    }
    return VectorField(d, std::move(comps));
}

/// det(X_1,...,X_d) with the fields as columns; the lambda_I of every tuple.
inline Polynomial determinant_of_fields(const std::vector<VectorField>& fields) {
    if (fields.empty()) throw std::invalid_argument("determinant_of_fields: no fields");
    const int d = fields[0].dim;
    if (static_cast<int>(fields.size()) != d)
        throw std::invalid_argument("determinant_of_fields: need exactly d fields of dimension d");
    std::vector<std::vector<Polynomial>> m(d, std::vector<Polynomial>());
    for (int row = 0; row < d; ++row) {
        for (const auto& f : fields) {
            if (f.dim != d) throw std::invalid_argument("determinant_of_fields: mixed dimensions");
            m[row].push_back(f.components[row]);
        }
    }
    return poly_det(m);
}

/// Same determinant but with the columns pre-evaluated at a point.
inline Rational determinant_of_fields_at(const std::vector<std::vector<Rational>>& columns) {
    const std::size_t d = columns.size();
    std::vector<std::vector<Rational>> m(d, std::vector<Rational>(d));
    for (std::size_t j = 0; j < d; ++j) {
        if (columns[j].size() != d)
            throw std::invalid_argument("column length mismatch");
        for (std::size_t i = 0; i < d; ++i) m[i][j] = columns[j][i];
    }
    return rat_det(std::move(m));
}

struct HodgeStarResult {
    std::vector<VectorField> fields;
    /// Indices (1-based submersion, point index) where Dpi dropped rank; the
    /// computation still proceeds, the weights simply vanish there.
    std::vector<std::pair<int, std::size_t>> rank_warnings;
};

/// Tangent fields X_j = *(dpi_j^1 ^ ... ^ dpi_j^{d-1}) with the cofactor
/// orientation X^i = (-1)^(i+1) det(Dpi with column i removed).  Satisfies
/// Dpi_j . X_j = 0 as a polynomial identity.  Submersion rank is only checked
/// at the supplied sample points.
inline HodgeStarResult hodge_star_fields(const std::vector<PolyMap>& pis, int d,
                                         const std::vector<std::vector<Rational>>& sample_points = {}) {
    HodgeStarResult out;
    int j_index = 0;
    for (const auto& pi : pis) {
        ++j_index;
        if (pi.source_dim != d || pi.target_dim != d - 1)
            throw std::invalid_argument("hodge_star_fields: each submersion must map R^d -> R^(d-1)");
        auto J = pi.jacobian();  // (d-1) x d polynomial matrix
        std::vector<Polynomial> comps;
        comps.reserve(d);
        for (int omit = 0; omit < d; ++omit) {
            std::vector<std::vector<Polynomial>> minor;
            minor.reserve(d - 1);
            for (int r = 0; r < d - 1; ++r) {
                std::vector<Polynomial> row;
                row.reserve(d - 1);
                for (int c = 0; c < d; ++c)
                    if (c != omit) row.push_back(J[r][c]);
                minor.push_back(std::move(row));
            }
            Polynomial cof = (d >= 2) ? poly_det(minor)
                                      : Polynomial::constant(d, Rational(1));
            if (omit % 2) cof = -cof;
            comps.push_back(std::move(cof));
        }
        out.fields.emplace_back(d, std::move(comps));

        for (std::size_t s = 0; s < sample_points.size(); ++s) {
            std::vector<std::vector<Rational>> Jx(d - 1, std::vector<Rational>(d));
            for (int r = 0; r < d - 1; ++r)
                for (int c = 0; c < d; ++c) Jx[r][c] = J[r][c].eval(sample_points[s]);
            if (rat_rank(std::move(Jx)) < d - 1) out.rank_warnings.emplace_back(j_index, s);
        }
    }
    return out;
}

/// Pullback F*X = (DF)^{-1} X∘F.  Exact for the supported class: either a
/// polynomial inverse of F is supplied, or det DF is a nonzero constant (the
/// shear/triangular maps of the invariance checks), in which case the adjugate
/// divided by that constant is the inverse.
inline VectorField pullback_field(const PolyMap& F, const VectorField& X,
                                  const std::optional<PolyMap>& F_inverse = std::nullopt) {
    const int d = F.source_dim;
    if (F.target_dim != d || X.dim != d)
        throw std::invalid_argument("pullback_field: F must be an endomap matching X");

    std::vector<Polynomial> XoF;
    XoF.reserve(d);
    for (const auto& c : X.components) XoF.push_back(compose(c, F));

    auto apply_matrix = [&](const std::vector<std::vector<Polynomial>>& M) {
        std::vector<Polynomial> comps;
        comps.reserve(d);
        for (int i = 0; i < d; ++i) {
            Polynomial acc(d);
            for (int j = 0; j < d; ++j) acc += M[i][j] * XoF[j];
            comps.push_back(std::move(acc));
        }
        return VectorField(d, std::move(comps));
    };

    if (F_inverse) {
        if (F_inverse->source_dim != d || F_inverse->target_dim != d)
            throw std::invalid_argument("pullback_field: inverse has wrong dimensions");
        // (DF)^{-1} = (D F^{-1}) ∘ F, a polynomial matrix.
        auto Jinv = F_inverse->jacobian();
        std::vector<std::vector<Polynomial>> M(d, std::vector<Polynomial>());
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) M[i].push_back(compose(Jinv[i][j], F));
        return apply_matrix(M);
    }

    auto J = F.jacobian();
    Polynomial det = poly_det(J);
    if (!det.is_constant() || det.is_zero())
        throw std::invalid_argument(
            "pullback_field: need a polynomial inverse or constant nonzero det DF");
    Rational c = det.constant_value();
    // Adjugate via cofactors; d is tiny.
    std::vector<std::vector<Polynomial>> adj(d, std::vector<Polynomial>(d, Polynomial::zero(d)));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            std::vector<std::vector<Polynomial>> minor;
            for (int r = 0; r < d; ++r) {
                if (r == i) continue;
                std::vector<Polynomial> row;
                for (int col = 0; col < d; ++col)
                    if (col != j) row.push_back(J[r][col]);
                minor.push_back(std::move(row));
            }
            Polynomial cof = minor.empty() ? Polynomial::constant(d, Rational(1))
                                           : poly_det(minor);
            if ((i + j) % 2) cof = -cof;
            adj[j][i] = std::move(cof);  // transpose of cofactor matrix
        }
    for (auto& row : adj)
        for (auto& p : row) p = Rational(1) / c * p;
    return apply_matrix(adj);
}

}  // namespace arcweight
