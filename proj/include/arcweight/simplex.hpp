#pragma once

#include <limits>
#include <vector>

#include "arcweight/rational.hpp"

namespace arcweight {

/// Exact-rational primal simplex for  min c.x  s.t.  A x = b, x >= 0.
/// Bland's smallest-index rule for both entering and leaving variables rules
/// out cycling; problem sizes here are a handful of rows, so a dense tableau
/// with big rationals is the right tool.
class SimplexSolver {
  public:
    enum class Status { Optimal, Infeasible, Unbounded };

    struct Result {
        Status status = Status::Infeasible;
        std::vector<Rational> x;  // primal solution (basic solution; empty unless Optimal)
        Rational objective = Rational(0);
    };

    static Result solve(const std::vector<std::vector<Rational>>& A,
                        const std::vector<Rational>& b, const std::vector<Rational>& c) {
        const std::size_t m = A.size();
        const std::size_t n = m ? A[0].size() : c.size();
        for (const auto& row : A)
            if (row.size() != n) throw std::invalid_argument("simplex: ragged constraint matrix");
        if (b.size() != m || c.size() != n)
            throw std::invalid_argument("simplex: inconsistent sizes");

        // Phase 1: artificial variables with +1 cost; rows flipped so rhs >= 0.
        Tableau t(m, n + m);
        for (std::size_t i = 0; i < m; ++i) {
            Rational s = (b[i] < 0) ? Rational(-1) : Rational(1);
            for (std::size_t j = 0; j < n; ++j) t.a[i][j] = s * A[i][j];
            t.a[i][n + i] = Rational(1);
            t.rhs[i] = s * b[i];
            t.basis[i] = n + i;
        }
        std::vector<Rational> phase1_cost(n + m, Rational(0));
        for (std::size_t i = 0; i < m; ++i) phase1_cost[n + i] = Rational(1);
        if (!t.optimize(phase1_cost)) throw std::logic_error("simplex: phase 1 unbounded");
        if (t.objective(phase1_cost) != 0) return {Status::Infeasible, {}, Rational(0)};

        // Drive any artificial variables out of the basis (degenerate rows).
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis[i] < n) continue;
            bool pivoted = false;
            for (std::size_t j = 0; j < n && !pivoted; ++j)
                if (t.a[i][j] != 0) {
                    t.pivot(i, j);
                    pivoted = true;
                }
            // A fully zero row is a redundant constraint; the artificial stays
            // basic at value zero and never re-enters (cost column dropped below).
        }

        Tableau t2(m, n);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) t2.a[i][j] = t.a[i][j];
            t2.rhs[i] = t.rhs[i];
            t2.basis[i] = (t.basis[i] < n) ? t.basis[i] : SIZE_MAX;
        }

        if (!t2.optimize(c)) return {Status::Unbounded, {}, Rational(0)};

        Result r;
        r.status = Status::Optimal;
        r.x.assign(n, Rational(0));
        for (std::size_t i = 0; i < m; ++i)
            if (t2.basis[i] != SIZE_MAX) r.x[t2.basis[i]] = t2.rhs[i];
        r.objective = Rational(0);
        for (std::size_t j = 0; j < n; ++j) r.objective += c[j] * r.x[j];
        return r;
    }

  private:
    struct Tableau {
        std::vector<std::vector<Rational>> a;
        std::vector<Rational> rhs;
        std::vector<std::size_t> basis;  // SIZE_MAX marks a parked artificial (zero row)

        Tableau(std::size_t m, std::size_t n)
            : a(m, std::vector<Rational>(n, Rational(0))), rhs(m, Rational(0)), basis(m, SIZE_MAX) {}

        std::size_t rows() const { return a.size(); }
        std::size_t cols() const { return a.empty() ? 0 : a[0].size(); }

        void pivot(std::size_t r, std::size_t c) {
            Rational p = a[r][c];
            for (auto& v : a[r]) v /= p;
            rhs[r] /= p;
            for (std::size_t i = 0; i < rows(); ++i) {
                if (i == r || a[i][c] == 0) continue;
                Rational f = a[i][c];
                for (std::size_t j = 0; j < cols(); ++j) a[i][j] -= f * a[r][j];
                rhs[i] -= f * rhs[r];
            }
            basis[r] = c;
        }

        Rational objective(const std::vector<Rational>& cost) const {
            Rational v(0);
            for (std::size_t i = 0; i < rows(); ++i)
                if (basis[i] != SIZE_MAX) v += cost[basis[i]] * rhs[i];
            return v;
        }

        /// Bland's rule; returns false on unboundedness.
        bool optimize(const std::vector<Rational>& cost) {
            for (;;) {
                // Reduced costs: cost_j - y.A_j with y from the basic rows.
                std::size_t enter = SIZE_MAX;
                for (std::size_t j = 0; j < cols() && enter == SIZE_MAX; ++j) {
                    bool basic = false;
                    for (std::size_t i = 0; i < rows(); ++i)
                        if (basis[i] == j) { basic = true; break; }
                    if (basic) continue;
                    Rational red = cost[j];
                    for (std::size_t i = 0; i < rows(); ++i)
                        if (basis[i] != SIZE_MAX) red -= cost[basis[i]] * a[i][j];
                    if (red < 0) enter = j;
                }
                if (enter == SIZE_MAX) return true;

                std::size_t leave = SIZE_MAX;
                Rational best(0);
                for (std::size_t i = 0; i < rows(); ++i) {
                    if (a[i][enter] <= 0) continue;
                    Rational ratio = rhs[i] / a[i][enter];
                    if (leave == SIZE_MAX || ratio < best ||
                        (ratio == best && basis[i] < basis[leave])) {
                        leave = i;
                        best = ratio;
                    }
                }
                if (leave == SIZE_MAX) return false;
                pivot(leave, enter);
            }
        }
    };
};

}  // namespace arcweight
