// Batch front door: parse a problem spec, dispatch one subcommand, emit a
// structured-text report (stdout and, with --out, files).  Exit code 0 iff
// every internal check passed; failures are listed machine-readably at the
// end of the report.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "arcweight/reports.hpp"

namespace fs = std::filesystem;
using namespace arcweight;

namespace {

struct CliOptions {
    std::string spec_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string tolerances_path;
};

ToleranceConfig load_tolerances(const ProblemSpec& spec, const std::string& path) {
    ToleranceConfig tol = spec.tolerances();
    if (path.empty()) return tol;
    std::ifstream in(path);
    if (!in) throw SpecError({"cannot open tolerances file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    specio::Parser parser(specio::tokenize(ss.str()));
    for (const auto& [key, node] : parser.parse_document()) {
        if (key.text != "tolerances" || !node.is_list)
            throw SpecError({"tolerances file must contain a single tolerances { ... } block"});
        for (std::size_t i = 0; i + 1 < node.items.size(); i += 2)
            ProblemSpec::apply_tolerance(tol, node.items[i].atom,
                                         parse_rational(node.items[i + 1].atom));
    }
    return tol;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    out << content;
}

std::vector<std::vector<Rational>> sample_points(const ProblemSpec& spec) {
    std::vector<std::vector<Rational>> pts = spec.samples;
    if (pts.empty() && spec.x0) pts.push_back(*spec.x0);
    return pts;
}

WordTuple require_i0(const ProblemSpec& spec) {
    if (!spec.i0_words) throw SpecError({"this subcommand needs an i0 word tuple"});
    return WordTuple(*spec.i0_words, spec.k);
}

std::vector<Rational> require_x0(const ProblemSpec& spec) {
    if (!spec.x0) throw SpecError({"this subcommand needs a base point x0"});
    return *spec.x0;
}

// ---------------------------------------------------------------- brackets

void run_brackets(ReportBuilder& rb, const ProblemSpec& spec) {
    SystemSpec sys = spec.build_system();
    for (auto [j, s] : sys.rank_warnings())
        rb.line("warning submersion " + std::to_string(j) + " rank-deficient at sample " +
                std::to_string(s));
    int N = spec.degree_bound_or_default();
    auto words = sys.table().nonzero_words(N);
    rb.body() << "nonzero_words " << words.size() << " (degree bound " << N << ")\n";
    std::vector<std::string> names = spec.var_names;
    for (const auto& w : words) {
        rb.body() << "word " << word_str(w) << " degree "
                  << degree_str(word_degree(w, sys.k())) << " field [";
        const auto& f = sys.table().field(w);
        for (int i = 0; i < sys.d(); ++i)
            rb.body() << (i ? "; " : "") << f.components[i].str(names);
        rb.body() << "]\n";
    }

    // Jacobi expansion replay on every nonzero pair inside the bound.
    std::size_t pairs = 0;
    bool jacobi_ok = true;
    for (const auto& w : words)
        for (const auto& wp : words) {
            if (degree_norm(word_degree(w, sys.k())) + degree_norm(word_degree(wp, sys.k())) >
                static_cast<unsigned>(N))
                continue;
            VectorField sum = VectorField::zero(sys.d());
            for (const auto& [wt, c] : jacobi_expand(w, wp))
                sum = sum + Rational(c) * sys.table().field(wt);
            jacobi_ok &= (sum == lie_bracket(sys.table().field(w), sys.table().field(wp)));
            ++pairs;
        }
    rb.check("jacobi-expansion", jacobi_ok, std::to_string(pairs) + " pairs replayed");

    if (spec.b0) {
        bool minimal = minimality_check(sys.table(), *spec.b0);
        rb.body() << "minimality " << degree_str(*spec.b0) << " "
                  << (minimal ? "minimal" : "not-minimal") << "\n";
    }
}

// ---------------------------------------------------------------- polytope

void run_polytope(ReportBuilder& rb, const ProblemSpec& spec) {
    SystemSpec sys = spec.build_system();
    int N = spec.degree_bound_or_default();
    NewtonPolytopeReport rep = spec.x0 ? newton_polytope_at(sys, *spec.x0, N)
                               : !spec.samples.empty()
                                   ? newton_polytope_of_region(sys, spec.samples, N)
                                   : throw SpecError({"polytope needs x0 or samples"});
    report_polytope(rb, rep, "polytope");
    for (const auto& e : rep.extremes) {
        bool valid = e.witness.validate(rep.polytope.without(e.degree).generators(),
                                        to_rational_vec(e.degree));
        rb.check("witness-" + degree_str(e.degree), valid);
    }
    if (spec.b0)
        rb.body() << "b0 " << degree_str(*spec.b0) << " "
                  << (rep.has_extreme(*spec.b0) ? "extreme" : "not-extreme") << "\n";
}

// ---------------------------------------------------------------- separate

void run_separate(ReportBuilder& rb, const ProblemSpec& spec) {
    int k = spec.k;
    std::vector<Degree> gens;
    RationalVec query;
    if (spec.generators && spec.query) {
        gens = *spec.generators;
        query = *spec.query;
    } else if (spec.b0 && spec.x0) {
        SystemSpec sys = spec.build_system();
        auto rep = newton_polytope_at(sys, *spec.x0, spec.degree_bound_or_default());
        for (const auto& g : rep.polytope.generators())
            if (g != *spec.b0) gens.push_back(g);
        query = to_rational_vec(*spec.b0);
    } else {
        throw SpecError({"separate needs either generators+query or a system with x0+b0"});
    }

    UpwardPolytope P(k, gens);
    rb.body() << "generators " << P.size() << " query " << fmt_rvec(query) << "\n";
    auto cert = membership(P, query);
    if (cert) {
        rb.line("membership member");
        report_certificate(rb, *cert, "membership");
        rb.check("certificate-replay", cert->validate(query));
        rb.line("separation impossible (query is a member)");
        return;
    }
    rb.line("membership not-member");

    auto witness = separating_vector(P.generators(), query, k);
    rb.body() << "witness v0 " << fmt_rvec(witness.v0) << " eps "
              << format_rational(witness.epsilon) << "\n";
    rb.check("witness-inequalities", witness.validate(P.generators(), query));

    try {
        UpwardPolytope envelope = finite_envelope(witness.v0, query);
        rb.body() << "envelope generators " << envelope.size() << "\n";
        rb.check("envelope-excludes-query", !is_member(envelope, query));
        bool contains_all = true;
        for (const auto& g : P.generators())
            contains_all &= is_member(envelope, to_rational_vec(g));
        rb.check("envelope-contains-originals", contains_all);
        // Half-space sample replay: bumped points above the witness level.
        Rational level = dot(witness.v0, query);
        bool halfspace_ok = true;
        std::size_t tested = 0;
        for (int i = 0; i < k; ++i) {
            Degree b(k, 0);
            for (int c = 0; c < k; ++c) {
                Rational q = query[c];
                BigInt up = numerator(q) / denominator(q);
                if (Rational(up) < q) up += 1;
                b[c] = up.convert_to<unsigned>();
            }
            b[i] += 1;
            if (dot(witness.v0, b) > level) {
                halfspace_ok &= is_member(envelope, to_rational_vec(b));
                ++tested;
            }
        }
        rb.check("envelope-halfspace-samples", halfspace_ok,
                 std::to_string(tested) + " lattice points replayed");
    } catch (const std::invalid_argument& e) {
        rb.line(std::string("envelope skipped: ") + e.what());
    }

    UpwardPolytope reduced = admissible_reduction(P, query);
    rb.body() << "reduction generators " << reduced.size() << "\n";
    rb.check("reduction-excludes-query", !is_member(reduced, query));
    bool contained = true;
    for (const auto& g : P.generators()) contained &= is_member(reduced, to_rational_vec(g));
    rb.check("reduction-contains-originals", contained);
}

// ------------------------------------------------------------------ weight

void run_weight(ReportBuilder& rb, const ProblemSpec& spec) {
    SystemSpec sys = spec.build_system();
    auto pts = sample_points(spec);
    if (pts.empty()) throw SpecError({"weight needs x0 or samples"});
    if (!spec.i0_words && !spec.j0)
        throw SpecError({"weight needs i0 (rho) and/or j0+beta0 (rho-tilde)"});

    if (spec.i0_words) {
        WordTuple I0 = require_i0(spec);
        rb.body() << "rho tuple deg " << degree_str(I0.degree) << "\n";
        for (const auto& x : pts) {
            auto w = weight_rho(sys, I0, x);
            rb.body() << "rho point " << fmt_point(x) << " radicand "
                      << format_rational(w.radicand) << " root " << w.root << " value "
                      << fmt_double(w.value) << "\n";
        }
    }
    if (spec.j0) {
        if (!spec.beta0) throw SpecError({"rho-tilde needs beta0 alongside j0"});
        for (const auto& x : pts) {
            auto w = weight_rho_tilde(sys, *spec.j0, *spec.beta0, x);
            rb.body() << "rho-tilde point " << fmt_point(x) << " radicand "
                      << format_rational(w.radicand) << " root " << w.root << " value "
                      << fmt_double(w.value) << "\n";
        }
    }
    if (spec.b0 && spec.p) {
        auto check = exponent_region_check(*spec.b0, spec.exponent_vector());
        rb.body() << "exponent-region " << (check.admissible ? "admissible" : "rejected")
                  << "\n";
        for (const auto& r : check.reasons) rb.body() << "exponent-reason " << r << "\n";
    }
}

// -------------------------------------------------------------- equivalence

void run_equivalence(ReportBuilder& rb, const ProblemSpec& spec, const CliOptions& opts) {
    SystemSpec sys = spec.build_system();
    auto x0 = require_x0(spec);
    int N = spec.degree_bound_or_default();
    int M = spec.jet_order_or_default();

    auto bracket_side = newton_polytope_at(sys, x0, N);
    auto jet_side = tilde_polytope_at(sys, x0, M);
    report_polytope(rb, bracket_side, "bracket-polytope");
    report_polytope(rb, jet_side, "jet-polytope");

    // Compare on the common truncation: equal extreme sets plus mutual
    // generator membership.
    int T = std::min(bracket_side.truncation, jet_side.truncation);
    auto trunc = [&](const NewtonPolytopeReport& rep) {
        std::vector<Degree> gens;
        for (const auto& g : rep.polytope.generators())
            if (degree_norm(g) <= static_cast<unsigned>(T)) gens.push_back(g);
        return UpwardPolytope(sys.k(), gens);
    };
    UpwardPolytope bt = trunc(bracket_side), jt = trunc(jet_side);
    bool mutual = true;
    for (const auto& g : bt.generators()) mutual &= is_member(jt, to_rational_vec(g));
    for (const auto& g : jt.generators()) mutual &= is_member(bt, to_rational_vec(g));
    rb.check("polytopes-agree-on-truncation", mutual, "T=" + std::to_string(T));
    bool extremes_equal = extreme_points(bt) == extreme_points(jt);
    rb.check("extreme-sets-equal", extremes_equal);

    std::vector<Degree> targets;
    if (spec.b0) targets.push_back(*spec.b0);
    else targets = bracket_side.extreme_degrees();
    for (const auto& b0 : targets) {
        int Mb = std::max(M, static_cast<int>(degree_norm(b0)) - sys.d() + 1);
        auto eq = equivalence_report(sys, x0, b0, N, Mb);
        rb.body() << "equivalence b0 " << degree_str(b0) << " S_lambda "
                  << format_rational(eq.S_lambda) << " S_psi " << format_rational(eq.S_psi)
                  << " extreme " << (eq.b0_extreme_in_truncation ? "yes" : "no");
        if (eq.ratio)
            rb.body() << " ratio " << format_rational(*eq.ratio) << " ratio_float "
                      << fmt_double(to_double(*eq.ratio));
        rb.body() << " verdict \"" << eq.verdict << "\"\n";
        rb.check("zero-equivalence-" + degree_str(b0), eq.zero_equivalence);
    }

    if (!opts.out_dir.empty())
        write_file(opts.out_dir, "coefficients.csv", coefficients_csv(sys, x0, M));
}

// --------------------------------------------------------------- invariance

void run_invariance(ReportBuilder& rb, const ProblemSpec& spec) {
    SystemSpec sys = spec.build_system();
    WordTuple I0 = require_i0(spec);
    auto pts = sample_points(spec);
    if (pts.empty()) throw SpecError({"invariance needs samples"});
    if (spec.diffeos.empty()) throw SpecError({"invariance needs at least one diffeo block"});

    int index = 0;
    for (const auto& dp : spec.diffeos) {
        ++index;
        std::string tag = dp.label.empty() ? "pair" + std::to_string(index) : dp.label;
        std::vector<PolyMap> Gs = dp.Gs;
        if (Gs.empty()) Gs.assign(sys.k(), PolyMap::identity(sys.d() - 1));
        auto rep = diffeo_invariance_check(sys, I0, dp.F, Gs, pts);
        if (!rep.minimality_ok) {
            rb.check("minimality-" + tag, false, rep.diagnostic);
            continue;
        }
        rb.body() << "diffeo " << tag << " minimality ok\n";
        for (const auto& c : rep.checks)
            rb.body() << "diffeo " << tag << " sample " << fmt_point(c.point) << " lhs_sq "
                      << format_rational(c.lhs_sq) << " rhs_sq " << format_rational(c.rhs_sq)
                      << " " << (c.holds ? "equal" : "MISMATCH") << "\n";
        rb.check("identity-" + tag, rep.all_hold,
                 std::to_string(rep.checks.size()) + " samples");
    }
}

// ----------------------------------------------------------------- estimate

void run_estimate(ReportBuilder& rb, const ProblemSpec& spec, const CliOptions& opts,
                  const ToleranceConfig& tol) {
    SystemSpec sys = spec.build_system();
    if (!spec.sweep) throw SpecError({"estimate needs a sweep block"});
    if (!spec.p) throw SpecError({"estimate needs an exponent vector p"});

    SetFamily fam;
    fam.seed = spec.seed;
    fam.deltas.clear();
    for (const auto& r : spec.sweep->deltas) fam.deltas.push_back(to_double(r));
    if (spec.sweep->kind == "boxes") {
        fam.kind = SetFamily::Kind::Boxes;
        fam.center = spec.x0 ? *spec.x0 : std::vector<Rational>(sys.d(), Rational(0));
        for (const auto& r : spec.sweep->axis_exponents)
            fam.axis_exponents.push_back(to_double(r));
    } else {
        fam.kind = SetFamily::Kind::CCBalls;
        fam.center = require_x0(spec);
        fam.ball_tuple = require_i0(spec);
        auto rep = newton_polytope_at(sys, fam.center, spec.degree_bound_or_default());
        Degree b0 = fam.ball_tuple->degree;
        if (!rep.has_extreme(b0))
            throw SpecError({"cc-ball sweep needs deg i0 extreme at x0"});
        for (const auto& e : rep.extremes)
            if (e.degree == b0) fam.ball_v0 = e.witness.v0;
    }

    WeightFn weight;
    if (spec.sweep->weight == "rho") weight = make_rho_weight(sys, require_i0(spec));
    else if (spec.sweep->weight == "rho-tilde") {
        if (!spec.j0 || !spec.beta0) throw SpecError({"rho-tilde sweep needs j0 and beta0"});
        weight = make_rho_tilde_weight(sys, *spec.j0, *spec.beta0);
    } else weight = make_unweighted();

    auto table =
        ratio_sweep(sys, weight, spec.sweep->weight, fam, spec.exponent_vector(), tol, opts.jobs);
    report_ratio_table(rb, table, "sweep");

    bool all_converged = true, any_skipped = false;
    for (const auto& r : table.rows) {
        if (!r.skipped) all_converged &= r.quadrature_converged;
        any_skipped |= r.skipped;
    }
    rb.check("quadrature-consistency", all_converged);
    if (any_skipped) rb.line("note some rows skipped");
    if (table.slope_valid) {
        std::string cls = std::fabs(table.slope) <= tol.slope_flat ? "bounded"
                          : table.slope <= tol.slope_blowup        ? "blow-up"
                                                                   : "indeterminate";
        rb.body() << "classification " << cls << "\n";
    }
    if (!opts.out_dir.empty())
        write_file(opts.out_dir, "sweep.csv", ratio_table_csv(table, sys.k()));
}

// --------------------------------------------------------------- optimality

void run_optimality(ReportBuilder& rb, const ProblemSpec& spec, const CliOptions& opts,
                    const ToleranceConfig& tol) {
    SystemSpec sys = spec.build_system();
    auto x0 = require_x0(spec);
    if (!spec.b0) throw SpecError({"optimality needs b0"});

    std::vector<double> deltas;
    if (spec.sweep)
        for (const auto& r : spec.sweep->deltas) deltas.push_back(to_double(r));
    if (deltas.empty())
        for (int e = 3; e <= 7; ++e) deltas.push_back(std::pow(2.0, -e));

    ExponentVector p;
    if (spec.p) p = spec.exponent_vector();
    else {
        RationalVec q = q_map(to_rational_vec(*spec.b0));
        RationalVec pv;
        for (const auto& v : q) pv.push_back(1 / v);
        p = ExponentVector::finite(pv);
    }

    auto rep = optimality_probe(sys, *spec.b0, x0, deltas, p, tol, spec.seed);
    rb.body() << "probe b0 " << degree_str(rep.b0) << " I0 deg " << degree_str(rep.I0.degree)
              << " v0 " << fmt_rvec(rep.v0) << "\n";
    rb.body() << "probe " << rep.tolerances << "\n";
    for (const auto& r : rep.rows) {
        rb.body() << "probe row delta " << fmt_double(r.delta) << " volume "
                  << fmt_double(r.ball_volume) << " mu " << fmt_double(r.mu);
        for (std::size_t j = 0; j < r.image_measures.size(); ++j)
            rb.body() << " pi" << (j + 1) << " " << fmt_double(r.image_measures[j]);
        rb.body() << " ratio " << fmt_double(r.ratio) << "\n";
    }
    rb.body() << "probe band " << fmt_double(rep.ratio_band) << " ratio_slope "
              << fmt_double(rep.ratio_slope) << "\n";
    rb.body() << "probe volume_slope " << fmt_double(rep.volume_slope) << " target "
              << fmt_double(rep.volume_slope_target) << "\n";
    rb.body() << "probe mu_over_rho_vol " << fmt_double(rep.mu_over_rho_vol) << "\n";
    rb.check("ratio-band", rep.band_ok);
    rb.check("volume-scaling-law", rep.volume_slope_ok);
    rb.check("mu-matches-rho-volume", rep.mu_rho_ok);
    if (!opts.out_dir.empty()) write_file(opts.out_dir, "optimality.csv", optimality_csv(rep));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"arcweight: Newton polytopes and affine-arclength weights for "
                 "multilinear Radon transforms"};
    app.require_subcommand(1);

    CliOptions opts;
    const std::vector<std::string> names = {"brackets",   "polytope",   "separate",
                                            "weight",     "equivalence", "invariance",
                                            "estimate",   "optimality"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--spec", opts.spec_path, "problem specification file")->required();
        sub->add_option("--out", opts.out_dir, "output directory for report + CSV files");
        sub->add_option("--seed", opts.seed, "override the spec seed");
        sub->add_option("--jobs", opts.jobs, "worker threads for sweep rows");
        sub->add_option("--tolerances", opts.tolerances_path, "tolerance override file");
    }

    CLI11_PARSE(app, argc, argv);
    std::string cmd = app.get_subcommands().front()->get_name();

    auto t_start = std::chrono::steady_clock::now();
    int exit_code = 0;
    try {
        ProblemSpec spec = parse_spec(opts.spec_path);
        if (opts.seed) spec.seed = *opts.seed;
        ToleranceConfig tol = load_tolerances(spec, opts.tolerances_path);

        ReportBuilder rb(cmd, spec);
        rb.line(tolerances_echo(tol));
        if (cmd == "brackets") run_brackets(rb, spec);
        else if (cmd == "polytope") run_polytope(rb, spec);
        else if (cmd == "separate") run_separate(rb, spec);
        else if (cmd == "weight") run_weight(rb, spec);
        else if (cmd == "equivalence") run_equivalence(rb, spec, opts);
        else if (cmd == "invariance") run_invariance(rb, spec);
        else if (cmd == "estimate") run_estimate(rb, spec, opts, tol);
        else if (cmd == "optimality") run_optimality(rb, spec, opts, tol);

        std::string report = rb.finish();
        std::cout << report;
        write_file(opts.out_dir, cmd + "_report.txt", report);
        exit_code = rb.ok() ? 0 : 1;
    } catch (const SpecError& e) {
        for (const auto& m : e.messages) std::cout << "failure spec " << m << "\n";
        std::cout << "status fail\n";
        exit_code = 2;
    } catch (const std::exception& e) {
        std::cout << "failure " << e.what() << "\nstatus fail\n";
        exit_code = 2;
    }

    auto t_end = std::chrono::steady_clock::now();
    std::cerr << "elapsed_ms "
              << std::chrono::duration<double, std::milli>(t_end - t_start).count() << "\n";
    return exit_code;
}
