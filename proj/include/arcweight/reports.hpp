#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "arcweight/spec_io.hpp"

namespace arcweight {

inline constexpr const char* kVersion = "0.1.0";

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt_point(const std::vector<Rational>& x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += " ";
        s += format_rational(x[i]);
    }
    return s + ")";
}

inline std::string fmt_rvec(const RationalVec& v) { return fmt_point(v); }

/// Structured-text report under construction.  Check results are collected so
/// the CLI exit code can reflect them; timing stays out of the body so that
/// identical spec + seed gives byte-identical reports.
class ReportBuilder {
  public:
    ReportBuilder(const std::string& subcommand, const ProblemSpec& spec) {
        os_ << "arcweight report\n";
        os_ << "version " << kVersion << "\n";
        os_ << "subcommand " << subcommand << "\n";
        os_ << "tuple_counting canonical-once\n";
        os_ << "=== spec echo begin ===\n" << emit_spec(spec) << "=== spec echo end ===\n";
    }

    std::ostringstream& body() { return os_; }

    void line(const std::string& s) { os_ << s << "\n"; }

    void check(const std::string& name, bool pass, const std::string& detail = "") {
        os_ << "check " << name << " " << (pass ? "pass" : "FAIL");
        if (!detail.empty()) os_ << " " << detail;
        os_ << "\n";
        if (!pass) failures_.push_back(name + (detail.empty() ? "" : ": " + detail));
    }

    void note_failure(const std::string& msg) { failures_.push_back(msg); }

    bool ok() const { return failures_.empty(); }
    const std::vector<std::string>& failures() const { return failures_; }

    std::string finish() {
        os_ << "status " << (ok() ? "ok" : "fail") << "\n";
        for (const auto& f : failures_) os_ << "failure " << f << "\n";
        return os_.str();
    }

  private:
    std::ostringstream os_;
    std::vector<std::string> failures_;
};

inline void report_polytope(ReportBuilder& rb, const NewtonPolytopeReport& rep,
                            const std::string& tag) {
    auto& os = rb.body();
    os << tag << " truncation " << rep.truncation << "\n";
    if (rep.region_lower_approximation)
        os << tag << " note region-sampled lower approximation\n";
    auto gens = rep.polytope.generators();
    os << tag << " generators " << gens.size() << "\n";
    for (const auto& g : gens) os << tag << " generator " << degree_str(g) << "\n";
    os << tag << " extremes " << rep.extremes.size() << "\n";
    for (const auto& e : rep.extremes) {
        os << tag << " extreme " << degree_str(e.degree)
           << (e.certified ? " certified" : " extreme-in-truncation") << " v0 "
           << fmt_rvec(e.witness.v0) << " eps " << format_rational(e.witness.epsilon) << "\n";
    }
}

inline void report_certificate(ReportBuilder& rb, const MembershipCertificate& cert,
                               const std::string& tag) {
    auto& os = rb.body();
    os << tag << " support " << cert.support.size() << "\n";
    for (const auto& [g, w] : cert.support)
        os << tag << " weight " << degree_str(g) << " " << format_rational(w) << "\n";
    os << tag << " slack " << fmt_rvec(cert.slack) << "\n";
}

inline void report_ratio_table(ReportBuilder& rb, const RatioTable& table,
                               const std::string& tag) {
    auto& os = rb.body();
    os << tag << " weight " << table.weight_name << "\n";
    os << tag << " " << table.tolerances << "\n";
    for (const auto& r : table.rows) {
        os << tag << " row delta " << fmt_double(r.delta) << " M " << fmt_double(r.form_value)
           << " converged " << (r.quadrature_converged ? "yes" : "no");
        for (std::size_t j = 0; j < r.set_measures.size(); ++j)
            os << " E" << (j + 1) << " " << fmt_double(r.set_measures[j]);
        if (r.skipped) os << " skipped (" << r.note << ")";
        else os << " ratio " << fmt_double(r.ratio);
        os << "\n";
    }
    if (table.slope_valid) os << tag << " slope " << fmt_double(table.slope) << "\n";
}

inline std::string ratio_table_csv(const RatioTable& table, int k) {
    std::ostringstream os;
    os << "delta,M,converged";
    for (int j = 1; j <= k; ++j) os << ",E" << j;
    os << ",ratio,note\n";
    for (const auto& r : table.rows) {
        os << fmt_double(r.delta) << "," << fmt_double(r.form_value) << ","
           << (r.quadrature_converged ? 1 : 0);
        for (double m : r.set_measures) os << "," << fmt_double(m);
        os << "," << (r.skipped ? "" : fmt_double(r.ratio)) << "," << r.note << "\n";
    }
    return os.str();
}

inline std::string optimality_csv(const OptimalityReport& rep) {
    std::ostringstream os;
    os << "delta,ball_volume,mu";
    std::size_t n_images = rep.rows.empty() ? 0 : rep.rows[0].image_measures.size();
    for (std::size_t j = 1; j <= n_images; ++j) os << ",pi" << j;
    os << ",ratio\n";
    for (const auto& r : rep.rows) {
        os << fmt_double(r.delta) << "," << fmt_double(r.ball_volume) << "," << fmt_double(r.mu);
        for (double m : r.image_measures) os << "," << fmt_double(m);
        os << "," << fmt_double(r.ratio) << "\n";
    }
    return os.str();
}

/// CSV of a full jet coefficient table: one row per (J, alpha) with both the
/// jet coefficient and the paper-normalized partial derivative.
inline std::string coefficients_csv(const SystemSpec& sys, const std::vector<Rational>& x0,
                                    int M) {
    std::ostringstream os;
    os << "J,alpha,deg,coefficient,partial\n";
    const int d = sys.d(), k = sys.k();
    FlowWord cur(d, 1);
    for (;;) {
        Jet table = det_jacobian_taylor(psi_jet(sys, cur, x0, M));
        Degree dJ = flow_word_degree(cur, k);
        for (const auto& [alpha, c] : table.coefficients()) {
            os << "(";
            for (std::size_t i = 0; i < cur.size(); ++i) os << (i ? " " : "") << cur[i];
            os << "),(";
            for (std::size_t i = 0; i < alpha.size(); ++i) os << (i ? " " : "") << alpha[i];
            os << ")," << degree_str(degree_sum(dJ, deg_J_alpha(cur, alpha, k))) << ","
               << format_rational(c) << "," << format_rational(c * multi_factorial(alpha))
               << "\n";
        }
        int pos = d - 1;
        while (pos >= 0 && cur[pos] == k) cur[pos--] = 1;
        if (pos < 0) break;
        ++cur[pos];
    }
    return os.str();
}

}  // namespace arcweight
