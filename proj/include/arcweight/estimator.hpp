#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <string>
#include <thread>

#include "arcweight/flows.hpp"

namespace arcweight {

/// Every floating tolerance used by the estimator lives here and is echoed
/// into the reports; nothing is tuned at call sites.
struct ToleranceConfig {
    double quadrature_drift = 0.05;  // h-halving relative change gate
    double measure_drift = 0.10;     // occupancy resolution-halving gate
    double slope_flat = 0.10;        // |log-log slope| below this counts as bounded
    double slope_blowup = -0.20;     // slope at or below this counts as blow-up
    double band_factor = 4.0;        // optimality ratio band width
    double band_slope = 0.20;        // no-trend gate inside the band
    double jet_fd_rel = 1e-6;        // jet vs finite-difference agreement
    double mc_rel = 0.10;            // quadrature vs Monte Carlo agreement
    double mu_rho_rel = 0.25;        // mu(B) vs rho(x0)|B| agreement
    double volume_slope_rel = 0.10;  // ball-volume scaling-law agreement
    double domain_inflation = 4.0;   // quadrature domain = inflated generator bbox
    int quad_cells = 64;             // quadrature cells per axis (coarse pass)
    int image_cells = 96;            // occupancy cells per axis for set images
    int omega_samples = 17;          // per-axis grid samples of a box generator
    std::size_t omega_random = 200000;  // random fill samples of a box generator
    int ball_grid = 32;              // occupancy cells per axis for ball volumes
    std::size_t ball_samples = 100000;
};

inline std::string tolerances_echo(const ToleranceConfig& t) {
    std::ostringstream os;
    os << "tolerances {"
       << " quadrature_drift " << t.quadrature_drift << " measure_drift " << t.measure_drift
       << " slope_flat " << t.slope_flat << " slope_blowup " << t.slope_blowup
       << " band_factor " << t.band_factor << " band_slope " << t.band_slope << " jet_fd_rel "
       << t.jet_fd_rel << " mc_rel " << t.mc_rel << " mu_rho_rel " << t.mu_rho_rel
       << " volume_slope_rel " << t.volume_slope_rel << " domain_inflation "
       << t.domain_inflation << " quad_cells " << t.quad_cells << " image_cells "
       << t.image_cells << " omega_samples " << t.omega_samples << " omega_random "
       << t.omega_random << " ball_grid " << t.ball_grid << " ball_samples " << t.ball_samples
       << " }";
    return os.str();
}

/// Axis-aligned occupancy grid in m dimensions; the measure carrier for target
/// sets and set images.  Cell membership is half-open plus a closed top face.
class OccupancyGrid {
  public:
    OccupancyGrid(std::vector<double> lo, std::vector<double> hi, int cells_per_axis)
        : lo_(std::move(lo)), hi_(std::move(hi)), n_(cells_per_axis) {
        if (lo_.size() != hi_.size() || lo_.empty())
            throw std::invalid_argument("occupancy grid: bad bounds");
        if (n_ < 1) throw std::invalid_argument("occupancy grid: need at least one cell");
        std::size_t total = 1;
        for (std::size_t i = 0; i < lo_.size(); ++i) {
            if (!(hi_[i] >= lo_[i])) throw std::invalid_argument("occupancy grid: inverted box");
            total *= static_cast<std::size_t>(n_);
        }
        cells_.assign(total, 0);
    }

    static OccupancyGrid from_points(const std::vector<std::vector<double>>& pts,
                                     int cells_per_axis, int dilation = 0) {
        if (pts.empty()) throw std::invalid_argument("occupancy grid: empty point cloud");
        const std::size_t m = pts[0].size();
        std::vector<double> lo(pts[0]), hi(pts[0]);
        for (const auto& p : pts)
            for (std::size_t i = 0; i < m; ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
        OccupancyGrid g(lo, hi, cells_per_axis);
        for (const auto& p : pts) g.mark(p);
        if (dilation > 0) g.dilate(dilation);
        return g;
    }

    std::size_t dims() const { return lo_.size(); }
    int cells_per_axis() const { return n_; }

    double cell_volume() const {
        double v = 1.0;
        for (std::size_t i = 0; i < lo_.size(); ++i)
            v *= (hi_[i] - lo_[i]) / static_cast<double>(n_);
        return v;
    }

    bool degenerate() const {
        for (std::size_t i = 0; i < lo_.size(); ++i)
            if (hi_[i] - lo_[i] <= 0.0) return true;
        return false;
    }

    void mark(const std::vector<double>& p) {
        std::size_t idx;
        if (index_of(p, idx)) cells_[idx] = 1;
    }

    bool contains(const std::vector<double>& p) const {
        std::size_t idx;
        return index_of(p, idx) && cells_[idx] != 0;
    }

    std::size_t occupied_count() const {
        std::size_t c = 0;
        for (char v : cells_) c += (v != 0);
        return c;
    }

    double measure() const { return static_cast<double>(occupied_count()) * cell_volume(); }

    /// Grows the occupied set by `r` cells in every direction: the containment
    /// margin that makes sampled images honest supersets.
    void dilate(int r) {
        const std::size_t m = dims();
        std::vector<char> out(cells_);
        std::vector<int> idx(m), nb(m);
        std::function<void(std::size_t, std::size_t)> spread = [&](std::size_t flat,
                                                                   std::size_t dim) {
            if (dim == m) {
                out[flat_index(nb)] = 1;
                return;
            }
            for (int dlt = -r; dlt <= r; ++dlt) {
                int v = idx[dim] + dlt;
                if (v < 0 || v >= n_) continue;
                nb[dim] = v;
                spread(flat, dim + 1);
            }
        };
        for (std::size_t f = 0; f < cells_.size(); ++f) {
            if (!cells_[f]) continue;
            unflatten(f, idx);
            spread(f, 0);
        }
        cells_ = std::move(out);
    }

  private:
    bool index_of(const std::vector<double>& p, std::size_t& out) const {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < lo_.size(); ++i) {
            double w = hi_[i] - lo_[i];
            int c = 0;
            if (w <= 0.0) {
                if (p[i] != lo_[i]) return false;
            } else {
                double t = (p[i] - lo_[i]) / w;
                if (t < 0.0 || t > 1.0) return false;
                c = static_cast<int>(t * n_);
                if (c == n_) c = n_ - 1;
            }
            flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c);
        }
        out = flat;
        return true;
    }

    std::size_t flat_index(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (std::size_t i = 0; i < idx.size(); ++i)
            f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[i]);
        return f;
    }

    void unflatten(std::size_t f, std::vector<int>& idx) const {
        for (std::size_t i = dims(); i-- > 0;) {
            idx[i] = static_cast<int>(f % static_cast<std::size_t>(n_));
            f /= static_cast<std::size_t>(n_);
        }
    }

    std::vector<double> lo_, hi_;
    int n_;
    std::vector<char> cells_;
};

using WeightFn = std::function<double(const std::vector<double>&)>;

/// Weight factories for the form.  rho is a fixed polynomial root; rho~ runs a
/// per-point jet computation at a rational snap of the point, so it belongs on
/// coarse grids only.
inline WeightFn make_rho_weight(const SystemSpec& sys, const WordTuple& I0) {
    unsigned n = degree_norm(I0.degree);
    if (n < 2) throw std::invalid_argument("rho weight: |deg I0|_1 must be >= 2");
    Polynomial::Compiled lambda = lambda_I(sys.table(), I0).compile();
    double expo = 1.0 / static_cast<double>(n - 1);
    return [lambda, expo](const std::vector<double>& x) {
        return std::pow(std::fabs(lambda.eval(x)), expo);
    };
}

inline WeightFn make_unweighted() {
    return [](const std::vector<double>&) { return 1.0; };
}

inline WeightFn make_rho_tilde_weight(const SystemSpec& sys, const FlowWord& J0,
                                      const MultiIndex& beta0) {
    auto snap = [](double v) { return Rational(static_cast<long long>(std::llround(v * 4096.0)), 4096); };
    SystemSpec copy = sys;
    return [copy, J0, beta0, snap](const std::vector<double>& x) {
        std::vector<Rational> xr;
        xr.reserve(x.size());
        for (double v : x) xr.push_back(snap(v));
        return weight_rho_tilde(copy, J0, beta0, xr).value;
    };
}

struct QuadratureResult {
    double value = 0.0;         // fine-grid Riemann sum
    double coarse_value = 0.0;  // half the resolution
    bool converged = false;     // relative drift below the gate
    std::vector<double> h;      // fine-grid cell widths per axis
};

/// Riemann midpoint sum of  prod_j chi_{E_j}(pi_j(x)) * weight(x) * a(x)  over
/// an explicit axis-aligned domain (the inflated generator bounding box
/// intersected with the cutoff).  Runs the coarse grid and the h-halved grid
/// and flags non-convergence instead of hiding it.
inline QuadratureResult form_quadrature(const SystemSpec& sys, const WeightFn& weight,
                                        const std::vector<OccupancyGrid>& sets,
                                        const std::vector<double>& lo,
                                        const std::vector<double>& hi, int cells,
                                        const ToleranceConfig& tol) {
    if (!sys.has_submersions())
        throw std::invalid_argument("form_quadrature: estimator needs submersions");
    if (static_cast<int>(sets.size()) != sys.k())
        throw std::invalid_argument("form_quadrature: one target set per submersion");
    const int d = sys.d();
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
        throw std::invalid_argument("form_quadrature: bad domain");
    if (cells < 2) throw std::invalid_argument("form_quadrature: need at least two cells");

    std::vector<std::vector<Polynomial::Compiled>> proj(sys.k());
    for (int j = 0; j < sys.k(); ++j)
        for (const auto& comp : sys.submersions()[j].components)
            proj[j].push_back(comp.compile());
    std::vector<double> cutoff_lo(d), cutoff_hi(d);
    for (int i = 0; i < d; ++i) {
        cutoff_lo[i] = to_double(sys.cutoff().sides[i].first);
        cutoff_hi[i] = to_double(sys.cutoff().sides[i].second);
    }

    auto run = [&](int n) {
        std::vector<double> h(d);
        for (int i = 0; i < d; ++i) h[i] = (hi[i] - lo[i]) / n;
        double cellvol = 1.0;
        for (int i = 0; i < d; ++i) cellvol *= h[i];
        if (cellvol <= 0.0) return 0.0;

        double sum = 0.0;
        std::vector<int> idx(d, 0);
        std::vector<double> x(d);
        std::vector<double> y(d - 1);
        for (;;) {
            bool in_cutoff = true;
            for (int i = 0; i < d; ++i) {
                x[i] = lo[i] + (idx[i] + 0.5) * h[i];
                in_cutoff &= (x[i] >= cutoff_lo[i] && x[i] <= cutoff_hi[i]);
            }
            if (in_cutoff) {
                bool inside = true;
                for (int j = 0; j < sys.k() && inside; ++j) {
                    for (int m = 0; m < d - 1; ++m) y[m] = proj[j][m].eval(x.data());
                    inside = sets[j].contains(y);
                }
                if (inside) sum += weight(x) * cellvol;
            }
            int pos = d - 1;
            while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
            if (pos < 0) break;
        }
        return sum;
    };

    QuadratureResult out;
    out.coarse_value = run(cells);
    out.value = run(cells * 2);
    out.h.resize(d);
    for (int i = 0; i < d; ++i) out.h[i] = (hi[i] - lo[i]) / (cells * 2);
    double ref = std::max(std::fabs(out.value), 1e-300);
    out.converged = std::fabs(out.value - out.coarse_value) / ref < tol.quadrature_drift;
    return out;
}

struct ImageMeasure {
    double value = 0.0;
    double coarse_value = 0.0;
    bool stable = false;
    bool degenerate = false;
};

/// Occupancy-grid area of pi_j(cloud) in R^(d-1) with a resolution-halving
/// stability check; degenerate (measure-zero) images are flagged.
inline ImageMeasure measure_image(const SystemSpec& sys, int j,
                                  const std::vector<std::vector<double>>& cloud, int resolution,
                                  const ToleranceConfig& tol) {
    if (cloud.empty()) throw std::invalid_argument("measure_image: empty cloud");
    if (j < 1 || j > sys.k()) throw std::invalid_argument("measure_image: submersion index");
    std::vector<Polynomial::Compiled> proj;
    for (const auto& comp : sys.submersions()[j - 1].components) proj.push_back(comp.compile());
    std::vector<std::vector<double>> image;
    image.reserve(cloud.size());
    std::vector<double> y(sys.d() - 1);
    for (const auto& p : cloud) {
        for (int m = 0; m < sys.d() - 1; ++m) y[m] = proj[m].eval(p.data());
        image.push_back(y);
    }

    auto fine = OccupancyGrid::from_points(image, resolution);
    auto coarse = OccupancyGrid::from_points(image, std::max(1, resolution / 2));
    ImageMeasure m;
    m.value = fine.measure();
    m.coarse_value = coarse.measure();
    m.degenerate = fine.degenerate() || m.value <= 0.0;
    double ref = std::max(std::fabs(m.value), 1e-300);
    m.stable = !m.degenerate && std::fabs(m.value - m.coarse_value) / ref < tol.measure_drift;
    return m;
}

/// One family of target sets: box generators shrinking anisotropically with
/// delta, or cc-ball images.  Every member records the generating cloud so the
/// containment E_j contains pi_j(Omega) holds by construction.
struct SetFamily {
    enum class Kind { Boxes, CCBalls };
    Kind kind = Kind::Boxes;
    std::vector<double> deltas;

    // Boxes: Omega_delta = center + prod [-c_i delta^e_i, c_i delta^e_i].
    std::vector<Rational> center;
    std::vector<double> axis_exponents;
    std::vector<double> axis_scales;  // the c_i, default 1

    // CCBalls: frozen-field ball at center with tuple/witness data.
    std::optional<WordTuple> ball_tuple;
    RationalVec ball_v0;
    std::uint64_t seed = 1;
};

/// Deterministic sample cloud of a family member.
inline std::vector<std::vector<double>> family_member_cloud(const SystemSpec& sys,
                                                            const SetFamily& fam, double delta,
                                                            std::size_t row,
                                                            const ToleranceConfig& tol) {
    const int d = sys.d();
    if (fam.kind == SetFamily::Kind::Boxes) {
        std::vector<double> c;
        for (const auto& v : fam.center) c.push_back(to_double(v));
        std::vector<double> half(d);
        for (int i = 0; i < d; ++i) {
            double scale = fam.axis_scales.empty() ? 1.0 : fam.axis_scales[i];
            half[i] = scale * std::pow(delta, fam.axis_exponents[i]);
        }
        // Regular grid for the corners/edges plus a dense random fill; image
        // grids need far more hits than a coarse lattice provides.
        const int n = tol.omega_samples;
        std::vector<std::vector<double>> cloud;
        cloud.reserve(static_cast<std::size_t>(std::pow(n, d)) + tol.omega_random);
        std::vector<int> idx(d, 0);
        std::vector<double> x(d);
        for (;;) {
            for (int i = 0; i < d; ++i)
                x[i] = c[i] - half[i] + 2.0 * half[i] * idx[i] / double(n - 1);
            cloud.push_back(x);
            int pos = d - 1;
            while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
            if (pos < 0) break;
        }
        std::mt19937_64 rng(fam.seed * 999983ull + row);
        for (std::size_t s = 0; s < tol.omega_random; ++s) {
            for (int i = 0; i < d; ++i) x[i] = c[i] + half[i] * uniform_pm1(rng);
            cloud.push_back(x);
        }
        return cloud;
    }
    CCBallParams params;
    params.delta = delta;
    params.n_samples = tol.ball_samples;
    params.seed = fam.seed * 1000003ull + row;
    return cc_ball(sys, fam.center, *fam.ball_tuple, fam.ball_v0, params);
}

struct SweepRow {
    double delta = 0.0;
    double form_value = 0.0;
    bool quadrature_converged = false;
    std::vector<double> set_measures;
    double ratio = 0.0;
    bool skipped = false;
    std::string note;
};

struct RatioTable {
    std::vector<SweepRow> rows;
    double slope = 0.0;  // least-squares slope of log(ratio) vs log(delta)
    bool slope_valid = false;
    std::string weight_name;
    std::string tolerances;
};

inline double fit_loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = static_cast<double>(pts.size());
    double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-14) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

/// Restricted-bound probe: one row per family member, ratio
/// M(chi_{E_1},..,chi_{E_k}) / prod |E_j|^{1/p_j}, log-log slope across deltas.
/// Rows are independent and individually seeded, so the table is identical
/// whether they run serially or across `jobs` worker threads.
inline RatioTable ratio_sweep(const SystemSpec& sys, const WeightFn& weight,
                              const std::string& weight_name, const SetFamily& family,
                              const ExponentVector& p, const ToleranceConfig& tol,
                              int jobs = 1) {
    if (!p.all_finite()) throw std::invalid_argument("ratio_sweep: exponents must be finite");
    if (family.deltas.empty()) throw std::invalid_argument("ratio_sweep: empty family");
    RatioTable table;
    table.weight_name = weight_name;
    table.tolerances = tolerances_echo(tol);
    RationalVec recip = p.reciprocal();

    auto compute_row = [&](std::size_t row) {
        double delta = family.deltas[row];
        SweepRow r;
        r.delta = delta;
        auto cloud = family_member_cloud(sys, family, delta, row, tol);

        std::vector<OccupancyGrid> sets;
        for (int j = 1; j <= sys.k(); ++j) {
            std::vector<Polynomial::Compiled> proj;
            for (const auto& comp : sys.submersions()[j - 1].components)
                proj.push_back(comp.compile());
            std::vector<std::vector<double>> image;
            image.reserve(cloud.size());
            std::vector<double> y(sys.d() - 1);
            for (const auto& pt : cloud) {
                for (int m = 0; m < sys.d() - 1; ++m) y[m] = proj[m].eval(pt.data());
                image.push_back(y);
            }
            sets.push_back(OccupancyGrid::from_points(image, tol.image_cells, 1));
            r.set_measures.push_back(sets.back().measure());
        }

        // Quadrature domain: inflated bounding box of the generator, inside the cutoff.
        const int d = sys.d();
        std::vector<double> lo(cloud[0]), hi(cloud[0]);
        for (const auto& pt : cloud)
            for (int i = 0; i < d; ++i) {
                lo[i] = std::min(lo[i], pt[i]);
                hi[i] = std::max(hi[i], pt[i]);
            }
        for (int i = 0; i < d; ++i) {
            double mid = 0.5 * (lo[i] + hi[i]);
            double half = 0.5 * (hi[i] - lo[i]) * tol.domain_inflation;
            double blo = to_double(sys.cutoff().sides[i].first);
            double bhi = to_double(sys.cutoff().sides[i].second);
            lo[i] = std::max(mid - half, blo);
            hi[i] = std::min(mid + half, bhi);
        }

        auto q = form_quadrature(sys, weight, sets, lo, hi, tol.quad_cells, tol);
        r.form_value = q.value;
        r.quadrature_converged = q.converged;

        bool zero_measure = false;
        for (double m : r.set_measures) zero_measure |= (m <= 0.0);
        if (zero_measure || r.form_value <= 0.0) {
            r.skipped = true;
            r.note = zero_measure ? "zero set measure" : "zero form value";
        } else {
            double denom = 1.0;
            for (int j = 0; j < sys.k(); ++j)
                denom *= std::pow(r.set_measures[j], to_double(recip[j]));
            r.ratio = r.form_value / denom;
        }
        return r;
    };

    // The bracket memo must be warm before rows fan out (it fills lazily and
    // is only read-safe once built).
    if (family.kind == SetFamily::Kind::CCBalls && family.ball_tuple)
        for (const auto& w : family.ball_tuple->words) sys.table().field(w);

    table.rows.resize(family.deltas.size());
    if (jobs <= 1 || family.deltas.size() <= 1) {
        for (std::size_t row = 0; row < family.deltas.size(); ++row)
            table.rows[row] = compute_row(row);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t row = next.fetch_add(1);
                if (row >= family.deltas.size()) return;
                table.rows[row] = compute_row(row);
            }
        };
        std::vector<std::thread> pool;
        int nthreads = std::min<int>(jobs, static_cast<int>(family.deltas.size()));
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<std::pair<double, double>> pts;
    for (const auto& r : table.rows)
        if (!r.skipped) pts.emplace_back(r.delta, r.ratio);
    if (pts.size() >= 2) {
        table.slope = fit_loglog_slope(pts);
        table.slope_valid = true;
    }
    return table;
}

struct OptimalityRow {
    double delta = 0.0;
    double ball_volume = 0.0;
    double mu = 0.0;  // integral of rho over the ball occupancy
    std::vector<double> image_measures;
    double ratio = 0.0;
};

struct OptimalityReport {
    Degree b0;
    WordTuple I0{{}, 1};
    RationalVec v0;
    std::vector<OptimalityRow> rows;
    double ratio_band = 0.0;  // max ratio / min ratio
    double ratio_slope = 0.0;
    bool band_ok = false;
    double volume_slope = 0.0;
    double volume_slope_target = 0.0;  // v0 . deg I0
    bool volume_slope_ok = false;
    double mu_over_rho_vol = 0.0;  // at the smallest delta
    bool mu_rho_ok = false;
    std::string tolerances;
};

/// Necessary-condition probe at p = 1/q(b0): over shrinking cc-balls the ratio
/// mu(B)/prod |pi_j(B)|^{1/p_j} with mu = rho dx must sit in a flat band, the
/// ball volume must follow the delta^{v0 . deg I} scaling law, and mu(B) must
/// track rho(x0)|B|.
inline OptimalityReport optimality_probe(const SystemSpec& sys, const Degree& b0,
                                         const std::vector<Rational>& x0,
                                         const std::vector<double>& deltas,
                                         const ExponentVector& p, const ToleranceConfig& tol,
                                         std::uint64_t seed,
                                         double mu_scale_injection = 0.0) {
    Rational recip_sum(0);
    for (const auto& r : p.reciprocal()) recip_sum += r;
    if (!(recip_sum > 1))
        throw std::invalid_argument("optimality_probe: requires sum 1/p_j > 1");

    auto rep = newton_polytope_at(sys, x0, default_degree_bound(sys.d(), b0));
    if (!rep.has_extreme(b0))
        throw std::invalid_argument("optimality_probe: b0 is not extreme at x0");
    RationalVec v0;
    for (const auto& e : rep.extremes)
        if (e.degree == b0) v0 = e.witness.v0;

    // The tuple realizing b0 with the largest |lambda_I(x0)|.
    auto words = sys.table().nonzero_words(static_cast<int>(degree_norm(b0)));
    std::optional<WordTuple> best;
    Rational best_abs(0);
    for (const auto& I : enumerate_degree_tuples(sys.d(), b0, words, sys.k())) {
        Rational a = abs_rat(lambda_I_at(sys.table(), I, x0));
        if (a > best_abs) {
            best_abs = a;
            best = I;
        }
    }
    if (!best) throw std::logic_error("optimality_probe: no realizing tuple (bug)");

    OptimalityReport out;
    out.b0 = b0;
    out.I0 = *best;
    out.v0 = v0;
    out.volume_slope_target = to_double(dot(v0, b0));
    out.tolerances = tolerances_echo(tol);

    WeightFn rho = make_rho_weight(sys, *best);
    RationalVec recip = p.reciprocal();

    for (std::size_t row = 0; row < deltas.size(); ++row) {
        double delta = deltas[row];
        CCBallParams params;
        params.delta = delta;
        params.n_samples = tol.ball_samples;
        params.seed = seed * 1000003ull + row;
        auto cloud = cc_ball(sys, x0, *best, v0, params);

        OptimalityRow r;
        r.delta = delta;
        auto ball = OccupancyGrid::from_points(cloud, tol.ball_grid);
        r.ball_volume = ball.measure();

        // mu(B) = sum over occupied cells of rho(center) * cellvol.
        const int d = sys.d();
        double cellvol = ball.cell_volume();
        double mu = 0.0;
        {
            std::vector<double> lo(cloud[0]), hi(cloud[0]);
            for (const auto& pt : cloud)
                for (int i = 0; i < d; ++i) {
                    lo[i] = std::min(lo[i], pt[i]);
                    hi[i] = std::max(hi[i], pt[i]);
                }
            int n = tol.ball_grid;
            std::vector<int> idx(d, 0);
            std::vector<double> x(d);
            for (;;) {
                for (int i = 0; i < d; ++i)
                    x[i] = lo[i] + (hi[i] - lo[i]) * (idx[i] + 0.5) / n;
                if (ball.contains(x)) mu += rho(x) * cellvol;
                int pos = d - 1;
                while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
                if (pos < 0) break;
            }
        }
        if (mu_scale_injection != 0.0) mu *= std::pow(delta, mu_scale_injection);
        r.mu = mu;

        double denom = 1.0;
        for (int j = 1; j <= sys.k(); ++j) {
            auto im = measure_image(sys, j, cloud, tol.image_cells, tol);
            r.image_measures.push_back(im.value);
            denom *= std::pow(im.value, to_double(recip[j - 1]));
        }
        r.ratio = r.mu / denom;
        out.rows.push_back(std::move(r));
    }

    double rmin = out.rows[0].ratio, rmax = out.rows[0].ratio;
    std::vector<std::pair<double, double>> rpts, vpts;
    for (const auto& r : out.rows) {
        rmin = std::min(rmin, r.ratio);
        rmax = std::max(rmax, r.ratio);
        rpts.emplace_back(r.delta, r.ratio);
        vpts.emplace_back(r.delta, r.ball_volume);
    }
    out.ratio_band = rmax / std::max(rmin, 1e-300);
    out.ratio_slope = fit_loglog_slope(rpts);
    out.band_ok =
        out.ratio_band <= tol.band_factor && std::fabs(out.ratio_slope) <= tol.band_slope;
    out.volume_slope = fit_loglog_slope(vpts);
    out.volume_slope_ok = std::fabs(out.volume_slope - out.volume_slope_target) <=
                          tol.volume_slope_rel * std::fabs(out.volume_slope_target);

    const auto& last = out.rows.back();
    double rho_x0 = 0.0;
    {
        std::vector<double> xd;
        for (const auto& c : x0) xd.push_back(to_double(c));
        rho_x0 = rho(xd);
    }
    if (rho_x0 > 0.0 && last.ball_volume > 0.0) {
        out.mu_over_rho_vol = last.mu / (rho_x0 * last.ball_volume);
        out.mu_rho_ok = std::fabs(out.mu_over_rho_vol - 1.0) <= tol.mu_rho_rel;
    }
    return out;
}

}  // namespace arcweight
