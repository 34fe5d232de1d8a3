#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "arcweight/polytope.hpp"
#include "arcweight/words.hpp"

namespace arcweight {

/// Axis-aligned rational box; the support of the cutoff a.
struct Box {
    std::vector<std::pair<Rational, Rational>> sides;

    int dim() const { return static_cast<int>(sides.size()); }

    bool contains(const std::vector<Rational>& x) const {
        for (std::size_t i = 0; i < sides.size(); ++i)
            if (x[i] < sides[i].first || x[i] > sides[i].second) return false;
        return true;
    }

    bool contains(const std::vector<double>& x) const {
        for (std::size_t i = 0; i < sides.size(); ++i)
            if (x[i] < to_double(sides[i].first) || x[i] > to_double(sides[i].second))
                return false;
        return true;
    }

    static Box cube(int d, const Rational& halfwidth) {
        Box b;
        for (int i = 0; i < d; ++i) b.sides.emplace_back(-halfwidth, halfwidth);
        return b;
    }
};

/// A vector-field system: k fields on R^d, optionally derived from submersions
/// pi_j : R^d -> R^(d-1) via the Hodge-star construction, a cutoff box, and the
/// word-degree truncation.  Immutable after construction; the bracket table is
/// filled lazily but the object is logically read-only.
class SystemSpec {
  public:
    SystemSpec(int d, std::vector<VectorField> fields, Box cutoff, int degree_bound)
        : d_(d),
          k_(static_cast<int>(fields.size())),
          cutoff_(std::move(cutoff)),
          degree_bound_(degree_bound),
          submersions_(std::nullopt),
          table_(std::make_shared<BracketTable>(std::move(fields))) {
        validate();
    }

    SystemSpec(int d, std::vector<PolyMap> submersions, Box cutoff, int degree_bound,
               const std::vector<std::vector<Rational>>& submersion_check_points = {})
        : d_(d),
          k_(static_cast<int>(submersions.size())),
          cutoff_(std::move(cutoff)),
          degree_bound_(degree_bound) {
        auto star = hodge_star_fields(submersions, d, submersion_check_points);
        rank_warnings_ = std::move(star.rank_warnings);
        submersions_ = std::move(submersions);
        table_ = std::make_shared<BracketTable>(std::move(star.fields));
        validate();
    }

    int d() const { return d_; }
    int k() const { return k_; }
    int degree_bound() const { return degree_bound_; }
    const Box& cutoff() const { return cutoff_; }
    const BracketTable& table() const { return *table_; }
    const std::vector<VectorField>& fields() const { return table_->base(); }
    bool has_submersions() const { return submersions_.has_value(); }
    const std::vector<PolyMap>& submersions() const {
        if (!submersions_) throw std::logic_error("system was given fields, not submersions");
        return *submersions_;
    }
    const std::vector<std::pair<int, std::size_t>>& rank_warnings() const {
        return rank_warnings_;
    }

  private:
    void validate() const {
        if (k_ < 2) throw std::invalid_argument("system needs at least two fields");
        if (cutoff_.dim() != d_) throw std::invalid_argument("cutoff box dimension mismatch");
        if (degree_bound_ < 1) throw std::invalid_argument("degree bound must be >= 1");
        for (const auto& f : table_->base())
            if (f.dim != d_) throw std::invalid_argument("field dimension mismatch");
    }

    int d_;
    int k_;
    Box cutoff_;
    int degree_bound_;
    std::optional<std::vector<PolyMap>> submersions_;
    std::shared_ptr<BracketTable> table_;
    std::vector<std::pair<int, std::size_t>> rank_warnings_;
};

/// Default word-degree truncation: |b0|_1 + 2 when a target degree is known,
/// d(d+1)/2 + 2 otherwise; wide enough for every worked example.
inline int default_degree_bound(int d, const std::optional<Degree>& b0 = std::nullopt) {
    if (b0) return static_cast<int>(degree_norm(*b0)) + 2;
    return d * (d + 1) / 2 + 2;
}

}  // namespace arcweight
