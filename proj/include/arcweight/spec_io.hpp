#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arcweight/estimator.hpp"

namespace arcweight {

/// Schema violations carry every message with its source location.
struct SpecError : std::runtime_error {
    std::vector<std::string> messages;
    explicit SpecError(std::vector<std::string> msgs)
        : std::runtime_error(join(msgs)), messages(std::move(msgs)) {}
    static std::string join(const std::vector<std::string>& msgs) {
        std::string s = "spec validation failed:";
        for (const auto& m : msgs) s += "\n  " + m;
        return s;
    }
};

namespace specio {

struct Token {
    std::string text;
    int line = 0;
};

inline std::vector<Token> tokenize(const std::string& input) {
    std::vector<Token> out;
    int line = 1;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty()) {
            out.push_back({cur, line});
            cur.clear();
        }
    };
    for (std::size_t i = 0; i < input.size(); ++i) {
        char c = input[i];
        if (c == '#') {
            flush();
            while (i < input.size() && input[i] != '\n') ++i;
            ++line;
            continue;
        }
        if (c == '\n') {
            flush();
            ++line;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
            continue;
        }
        if (c == '{' || c == '}' || c == '(' || c == ')') {
            flush();
            out.push_back({std::string(1, c), line});
            continue;
        }
        cur += c;
    }
    flush();
    return out;
}

/// Parse tree: an atom or a bracketed list ('{' or '(').
struct Node {
    bool is_list = false;
    char bracket = '{';
    std::string atom;
    int line = 0;
    std::vector<Node> items;
};

class Parser {
  public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    /// Top level: a sequence of `key value` pairs, value = atom or list.
    std::vector<std::pair<Token, Node>> parse_document() {
        std::vector<std::pair<Token, Node>> out;
        while (pos_ < toks_.size()) {
            Token key = toks_[pos_];
            if (key.text == "{" || key.text == "}" || key.text == "(" || key.text == ")")
                fail(key, "expected a key, got '" + key.text + "'");
            ++pos_;
            out.emplace_back(key, parse_value());
        }
        return out;
    }

  private:
    Node parse_value() {
        if (pos_ >= toks_.size())
            fail(toks_.back(), "unexpected end of file after key");
        Token t = toks_[pos_++];
        if (t.text == "{" || t.text == "(") {
            Node n;
            n.is_list = true;
            n.bracket = t.text[0];
            n.line = t.line;
            const std::string closer = (t.text == "{") ? "}" : ")";
            while (true) {
                if (pos_ >= toks_.size()) fail(t, "unterminated '" + t.text + "'");
                if (toks_[pos_].text == closer) {
                    ++pos_;
                    break;
                }
                if (toks_[pos_].text == "}" || toks_[pos_].text == ")")
                    fail(toks_[pos_], "mismatched bracket");
                n.items.push_back(parse_value());
            }
            return n;
        }
        if (t.text == "}" || t.text == ")") fail(t, "unexpected '" + t.text + "'");
        Node n;
        n.atom = t.text;
        n.line = t.line;
        return n;
    }

    [[noreturn]] void fail(const Token& t, const std::string& msg) {
        throw SpecError({"line " + std::to_string(t.line) + ": " + msg});
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace specio

/// One change-of-variables pair for the invariance checker.
struct DiffeoPair {
    PolyMap F{1, 1, {Polynomial::variable(1, 1)}};
    std::optional<PolyMap> F_inverse;
    std::vector<PolyMap> Gs;
    std::string label;
};

struct SweepSpec {
    std::string kind = "boxes";           // boxes | cc-balls
    std::vector<Rational> axis_exponents;  // boxes: per-axis delta powers
    std::vector<Rational> deltas;
    std::string weight = "rho";  // rho | rho-tilde | unweighted
};

/// Parsed problem specification: every rational exact, schema validated.
struct ProblemSpec {
    int d = 0;
    int k = 0;
    std::string mode;  // submersions | fields
    std::vector<std::string> var_names;
    Box box;
    std::vector<PolyMap> submersions;
    std::vector<VectorField> raw_fields;
    int N = 0;  // 0 = defaulted at use sites
    int M = 0;
    std::uint64_t seed = 1;
    std::optional<std::vector<Rational>> x0;
    std::vector<std::vector<Rational>> samples;
    std::optional<Degree> b0;
    std::optional<std::vector<Word>> i0_words;
    std::optional<FlowWord> j0;
    std::optional<MultiIndex> beta0;
    std::optional<std::vector<std::optional<Rational>>> p;  // nullopt entry = infinity
    std::optional<std::vector<Degree>> generators;
    std::optional<RationalVec> query;
    std::vector<DiffeoPair> diffeos;
    std::optional<SweepSpec> sweep;
    std::vector<std::pair<std::string, Rational>> tolerance_overrides;

    bool operator==(const ProblemSpec& o) const {
        return d == o.d && k == o.k && mode == o.mode && var_names == o.var_names &&
               box.sides == o.box.sides && submersions == o.submersions &&
               fields_equal(o) && N == o.N && M == o.M && seed == o.seed && x0 == o.x0 &&
               samples == o.samples && b0 == o.b0 && i0_words == o.i0_words && j0 == o.j0 &&
               beta0 == o.beta0 && p == o.p && generators == o.generators && query == o.query &&
               diffeos_equal(o) && sweep_equal(o) && tolerance_overrides == o.tolerance_overrides;
    }

    bool fields_equal(const ProblemSpec& o) const {
        if (raw_fields.size() != o.raw_fields.size()) return false;
        for (std::size_t i = 0; i < raw_fields.size(); ++i)
            if (!(raw_fields[i] == o.raw_fields[i])) return false;
        return true;
    }
    bool diffeos_equal(const ProblemSpec& o) const {
        if (diffeos.size() != o.diffeos.size()) return false;
        for (std::size_t i = 0; i < diffeos.size(); ++i) {
            if (!(diffeos[i].F == o.diffeos[i].F)) return false;
            if (diffeos[i].F_inverse != o.diffeos[i].F_inverse) return false;
            if (diffeos[i].Gs != o.diffeos[i].Gs) return false;
            if (diffeos[i].label != o.diffeos[i].label) return false;
        }
        return true;
    }
    bool sweep_equal(const ProblemSpec& o) const {
        if (sweep.has_value() != o.sweep.has_value()) return false;
        if (!sweep) return true;
        return sweep->kind == o.sweep->kind && sweep->axis_exponents == o.sweep->axis_exponents &&
               sweep->deltas == o.sweep->deltas && sweep->weight == o.sweep->weight;
    }

    /// Materializes the vector-field system (Hodge-star applied when the
    /// spec carries submersions).
    SystemSpec build_system() const {
        int n = N > 0 ? N : (b0 ? default_degree_bound(d, *b0) : default_degree_bound(d));
        std::vector<std::vector<Rational>> check;
        if (x0) check.push_back(*x0);
        for (const auto& s : samples) check.push_back(s);
        if (mode == "submersions") return SystemSpec(d, submersions, box, n, check);
        return SystemSpec(d, raw_fields, box, n);
    }

    int degree_bound_or_default() const {
        return N > 0 ? N : (b0 ? default_degree_bound(d, *b0) : default_degree_bound(d));
    }

    int jet_order_or_default() const {
        if (M > 0) return M;
        if (b0) return static_cast<int>(degree_norm(*b0)) + 1;
        return degree_bound_or_default() + 1 - d > 0 ? degree_bound_or_default() + 1 - d : 2;
    }

    ExponentVector exponent_vector() const {
        if (!p) throw std::invalid_argument("spec has no exponent vector p");
        ExponentVector e;
        for (const auto& entry : *p) {
            if (!entry) e.entries.push_back({true, Rational(1)});
            else {
                if (*entry < 1) throw std::invalid_argument("exponents must be >= 1");
                e.entries.push_back({false, *entry});
            }
        }
        return e;
    }

    ToleranceConfig tolerances() const {
        ToleranceConfig t;
        for (const auto& [key, val] : tolerance_overrides) apply_tolerance(t, key, val);
        return t;
    }

    static void apply_tolerance(ToleranceConfig& t, const std::string& key, const Rational& val) {
        double v = to_double(val);
        if (key == "quadrature_drift") t.quadrature_drift = v;
        else if (key == "measure_drift") t.measure_drift = v;
        else if (key == "slope_flat") t.slope_flat = v;
        else if (key == "slope_blowup") t.slope_blowup = v;
        else if (key == "band_factor") t.band_factor = v;
        else if (key == "band_slope") t.band_slope = v;
        else if (key == "jet_fd_rel") t.jet_fd_rel = v;
        else if (key == "mc_rel") t.mc_rel = v;
        else if (key == "mu_rho_rel") t.mu_rho_rel = v;
        else if (key == "volume_slope_rel") t.volume_slope_rel = v;
        else if (key == "domain_inflation") t.domain_inflation = v;
        else if (key == "quad_cells") t.quad_cells = static_cast<int>(v);
        else if (key == "image_cells") t.image_cells = static_cast<int>(v);
        else if (key == "omega_samples") t.omega_samples = static_cast<int>(v);
        else if (key == "omega_random") t.omega_random = static_cast<std::size_t>(v);
        else if (key == "ball_grid") t.ball_grid = static_cast<int>(v);
        else if (key == "ball_samples") t.ball_samples = static_cast<std::size_t>(v);
        else throw std::invalid_argument("unknown tolerance key '" + key + "'");
    }
};

namespace specio {

class Interpreter {
  public:
    ProblemSpec run(const std::vector<std::pair<Token, Node>>& doc) {
        ProblemSpec spec;
        for (const auto& [key, value] : doc) {
            try {
                handle(spec, key, value);
            } catch (const SpecError&) {
                throw;
            } catch (const std::exception& e) {
                error(key.line, std::string("key '") + key.text + "': " + e.what());
            }
        }
        if (errors_.empty()) finish(spec);
        if (!errors_.empty()) throw SpecError(errors_);
        return spec;
    }

  private:
    void error(int line, const std::string& msg) {
        errors_.push_back("line " + std::to_string(line) + ": " + msg);
    }

    Rational atom_rational(const Node& n) {
        if (n.is_list) {
            error(n.line, "expected a rational, got a list");
            return Rational(0);
        }
        try {
            return parse_rational(n.atom);
        } catch (const std::exception& e) {
            error(n.line, std::string("'") + n.atom + "': " + e.what());
            return Rational(0);
        }
    }

    long long atom_integer(const Node& n) {
        Rational r = atom_rational(n);
        if (denominator(r) != 1) {
            error(n.line, "expected an integer, got '" + n.atom + "'");
            return 0;
        }
        return numerator(r).convert_to<long long>();
    }

    unsigned atom_unsigned(const Node& n) {
        long long v = atom_integer(n);
        if (v < 0) {
            error(n.line, "expected a nonnegative integer");
            return 0;
        }
        return static_cast<unsigned>(v);
    }

    std::vector<Rational> rational_list(const Node& n) {
        std::vector<Rational> out;
        if (!n.is_list) {
            error(n.line, "expected a list");
            return out;
        }
        for (const auto& item : n.items) out.push_back(atom_rational(item));
        return out;
    }

    /// poly { ( e1 .. ed ) coeff  ( e1 .. ed ) coeff ... }
    Polynomial node_polynomial(const Node& n, int dim) {
        Polynomial p(dim);
        if (!n.is_list) {
            error(n.line, "polynomial must be a list of (exponent-tuple) coefficient pairs");
            return p;
        }
        std::size_t i = 0;
        while (i < n.items.size()) {
            const Node& e = n.items[i];
            if (!e.is_list || e.bracket != '(') {
                error(e.line, "expected '(' exponent tuple");
                return p;
            }
            if (static_cast<int>(e.items.size()) != dim)
                error(e.line, "exponent tuple needs " + std::to_string(dim) + " entries");
            Exponents exps;
            for (const auto& item : e.items) exps.push_back(atom_unsigned(item));
            if (i + 1 >= n.items.size()) {
                error(e.line, "exponent tuple without a coefficient");
                return p;
            }
            Rational c = atom_rational(n.items[i + 1]);
            if (static_cast<int>(exps.size()) == dim) p.add_term(exps, c);
            i += 2;
        }
        return p;
    }

    /// A map block: sequence of `poly { ... }` pairs.
    std::vector<Polynomial> node_polys(const Node& n, int dim) {
        std::vector<Polynomial> out;
        if (!n.is_list) {
            error(n.line, "expected a block of poly entries");
            return out;
        }
        std::size_t i = 0;
        while (i < n.items.size()) {
            const Node& tag = n.items[i];
            if (tag.is_list || tag.atom != "poly") {
                error(tag.line, "expected 'poly { ... }'");
                return out;
            }
            if (i + 1 >= n.items.size()) {
                error(tag.line, "poly without a body");
                return out;
            }
            out.push_back(node_polynomial(n.items[i + 1], dim));
            i += 2;
        }
        return out;
    }

    void handle(ProblemSpec& s, const Token& key, const Node& v) {
        const std::string& k = key.text;
        if (k == "d") s.d = static_cast<int>(atom_integer(v));
        else if (k == "k") s.k = static_cast<int>(atom_integer(v));
        else if (k == "mode") {
            if (v.is_list || (v.atom != "submersions" && v.atom != "fields"))
                error(v.line, "mode must be 'submersions' or 'fields'");
            else s.mode = v.atom;
        } else if (k == "vars") {
            if (!v.is_list) error(v.line, "vars must be a list of names");
            else
                for (const auto& item : v.items) s.var_names.push_back(item.atom);
        } else if (k == "box") {
            auto vals = rational_list(v);
            if (vals.size() % 2) error(v.line, "box needs lo/hi pairs");
            for (std::size_t i = 0; i + 1 < vals.size(); i += 2) {
                if (vals[i] > vals[i + 1]) error(v.line, "box side with lo > hi");
                s.box.sides.emplace_back(vals[i], vals[i + 1]);
            }
        } else if (k == "pi") {
            if (s.d < 2) {
                error(v.line, "d must be declared before pi blocks");
                return;
            }
            auto comps = node_polys(v, s.d);
            pending_pis_.emplace_back(v.line, std::move(comps));
        } else if (k == "field") {
            if (s.d < 2) {
                error(v.line, "d must be declared before field blocks");
                return;
            }
            auto comps = node_polys(v, s.d);
            pending_fields_.emplace_back(v.line, std::move(comps));
        } else if (k == "N") s.N = static_cast<int>(atom_integer(v));
        else if (k == "M") s.M = static_cast<int>(atom_integer(v));
        else if (k == "seed") s.seed = static_cast<std::uint64_t>(atom_integer(v));
        else if (k == "x0") s.x0 = rational_list(v);
        else if (k == "samples") {
            if (!v.is_list) error(v.line, "samples must be a list of points");
            else
                for (const auto& item : v.items) s.samples.push_back(rational_list(item));
        } else if (k == "b0") {
            Degree b;
            if (!v.is_list) error(v.line, "b0 must be a list");
            else
                for (const auto& item : v.items) b.push_back(atom_unsigned(item));
            s.b0 = b;
        } else if (k == "i0") {
            std::vector<Word> words;
            if (!v.is_list) error(v.line, "i0 must be a list of words");
            else
                for (const auto& item : v.items) {
                    Word w;
                    if (!item.is_list) error(item.line, "each word is a (letters) tuple");
                    else
                        for (const auto& l : item.items)
                            w.push_back(static_cast<int>(atom_integer(l)));
                    words.push_back(w);
                }
            s.i0_words = words;
        } else if (k == "j0") {
            FlowWord j;
            if (!v.is_list) error(v.line, "j0 must be a list of letters");
            else
                for (const auto& item : v.items) j.push_back(static_cast<int>(atom_integer(item)));
            s.j0 = j;
        } else if (k == "beta0") {
            MultiIndex b;
            if (!v.is_list) error(v.line, "beta0 must be a list");
            else
                for (const auto& item : v.items) b.push_back(atom_unsigned(item));
            s.beta0 = b;
        } else if (k == "p") {
            std::vector<std::optional<Rational>> p;
            if (!v.is_list) error(v.line, "p must be a list");
            else
                for (const auto& item : v.items) {
                    if (!item.is_list && item.atom == "inf") p.push_back(std::nullopt);
                    else p.push_back(atom_rational(item));
                }
            s.p = p;
        } else if (k == "generators") {
            std::vector<Degree> gens;
            if (!v.is_list) error(v.line, "generators must be a list of tuples");
            else
                for (const auto& item : v.items) {
                    Degree g;
                    if (!item.is_list) error(item.line, "each generator is a (…) tuple");
                    else
                        for (const auto& e : item.items) g.push_back(atom_unsigned(e));
                    gens.push_back(g);
                }
            s.generators = gens;
        } else if (k == "query") s.query = rational_list(v);
        else if (k == "diffeo") handle_diffeo(s, v);
        else if (k == "sweep") handle_sweep(s, v);
        else if (k == "tolerances") {
            if (!v.is_list) error(v.line, "tolerances must be a block");
            else {
                std::size_t i = 0;
                while (i + 1 < v.items.size()) {
                    const Node& name = v.items[i];
                    Rational val = atom_rational(v.items[i + 1]);
                    ToleranceConfig probe;
                    try {
                        ProblemSpec::apply_tolerance(probe, name.atom, val);
                        s.tolerance_overrides.emplace_back(name.atom, val);
                    } catch (const std::exception& e) {
                        error(name.line, e.what());
                    }
                    i += 2;
                }
                if (i < v.items.size()) error(v.items[i].line, "tolerance key without a value");
            }
        } else error(key.line, "unknown key '" + k + "'");
    }

    void handle_diffeo(ProblemSpec& s, const Node& v) {
        if (!v.is_list) {
            error(v.line, "diffeo must be a block");
            return;
        }
        if (s.d < 2) {
            error(v.line, "d must be declared before diffeo blocks");
            return;
        }
        DiffeoPair pair;
        std::size_t i = 0;
        while (i < v.items.size()) {
            const Node& tag = v.items[i];
            if (tag.is_list) {
                error(tag.line, "expected F / Finv / G / label inside diffeo");
                return;
            }
            if (i + 1 >= v.items.size()) {
                error(tag.line, "diffeo entry without a body");
                return;
            }
            const Node& body = v.items[i + 1];
            if (tag.atom == "F") pair.F = PolyMap(s.d, s.d, node_polys(body, s.d));
            else if (tag.atom == "Finv") pair.F_inverse = PolyMap(s.d, s.d, node_polys(body, s.d));
            else if (tag.atom == "G")
                pair.Gs.push_back(PolyMap(s.d - 1, s.d - 1, node_polys(body, s.d - 1)));
            else if (tag.atom == "label") pair.label = body.atom;
            else {
                error(tag.line, "unknown diffeo entry '" + tag.atom + "'");
                return;
            }
            i += 2;
        }
        s.diffeos.push_back(std::move(pair));
    }

    void handle_sweep(ProblemSpec& s, const Node& v) {
        if (!v.is_list) {
            error(v.line, "sweep must be a block");
            return;
        }
        SweepSpec sweep;
        std::size_t i = 0;
        while (i < v.items.size()) {
            const Node& tag = v.items[i];
            if (i + 1 >= v.items.size()) {
                error(tag.line, "sweep entry without a value");
                return;
            }
            const Node& body = v.items[i + 1];
            if (tag.atom == "kind") {
                if (body.atom != "boxes" && body.atom != "cc-balls")
                    error(body.line, "sweep kind must be boxes or cc-balls");
                sweep.kind = body.atom;
            } else if (tag.atom == "exponents") sweep.axis_exponents = rational_list(body);
            else if (tag.atom == "deltas") sweep.deltas = rational_list(body);
            else if (tag.atom == "weight") {
                if (body.atom != "rho" && body.atom != "rho-tilde" && body.atom != "unweighted")
                    error(body.line, "sweep weight must be rho, rho-tilde or unweighted");
                sweep.weight = body.atom;
            } else {
                error(tag.line, "unknown sweep entry '" + tag.atom + "'");
                return;
            }
            i += 2;
        }
        s.sweep = sweep;
    }

    void finish(ProblemSpec& s) {
        if (s.d < 2) errors_.push_back("d must be at least 2");
        if (s.k < 2) errors_.push_back("k must be at least 2 (schema)");
        if (s.mode.empty()) errors_.push_back("mode is required");
        if (s.box.sides.empty()) errors_.push_back("box is required");
        else if (s.box.dim() != s.d) errors_.push_back("box must have d sides");
        if (!s.var_names.empty() && static_cast<int>(s.var_names.size()) != s.d)
            errors_.push_back("vars must list d names");

        if (s.mode == "submersions") {
            if (static_cast<int>(pending_pis_.size()) != s.k)
                errors_.push_back("need exactly k pi blocks, got " +
                                  std::to_string(pending_pis_.size()));
            for (auto& [line, comps] : pending_pis_) {
                if (static_cast<int>(comps.size()) != s.d - 1)
                    error(line, "each pi needs d-1 components");
                else if (errors_.empty())
                    s.submersions.emplace_back(s.d, s.d - 1, comps);
            }
            if (!pending_fields_.empty())
                errors_.push_back("field blocks are not allowed in submersion mode");
        } else if (s.mode == "fields") {
            if (static_cast<int>(pending_fields_.size()) != s.k)
                errors_.push_back("need exactly k field blocks, got " +
                                  std::to_string(pending_fields_.size()));
            for (auto& [line, comps] : pending_fields_) {
                if (static_cast<int>(comps.size()) != s.d)
                    error(line, "each field needs d components");
                else if (errors_.empty())
                    s.raw_fields.emplace_back(s.d, comps);
            }
            if (!pending_pis_.empty())
                errors_.push_back("pi blocks are not allowed in fields mode");
        }

        auto check_point = [&](const std::vector<Rational>& pt, const char* what) {
            if (static_cast<int>(pt.size()) != s.d)
                errors_.push_back(std::string(what) + " must have d entries");
        };
        if (s.x0) check_point(*s.x0, "x0");
        for (const auto& pt : s.samples) check_point(pt, "each sample");
        if (s.b0 && static_cast<int>(s.b0->size()) != s.k)
            errors_.push_back("b0 must have k entries");
        if (s.p && static_cast<int>(s.p->size()) != s.k)
            errors_.push_back("p must have k entries");
        if (s.j0 && static_cast<int>(s.j0->size()) != s.d)
            errors_.push_back("j0 must have d letters");
        if (s.beta0 && static_cast<int>(s.beta0->size()) != s.d)
            errors_.push_back("beta0 must have d entries");
        for (const auto& dp : s.diffeos)
            if (static_cast<int>(dp.Gs.size()) != s.k && !dp.Gs.empty())
                errors_.push_back("diffeo needs k G blocks (or none for identity)");
        if (s.sweep) {
            if (s.sweep->kind == "boxes" &&
                static_cast<int>(s.sweep->axis_exponents.size()) != s.d)
                errors_.push_back("sweep exponents must have d entries");
            if (s.sweep->deltas.empty()) errors_.push_back("sweep needs deltas");
        }
    }

    std::vector<std::string> errors_;
    std::vector<std::pair<int, std::vector<Polynomial>>> pending_pis_;
    std::vector<std::pair<int, std::vector<Polynomial>>> pending_fields_;
};

}  // namespace specio

inline ProblemSpec parse_spec_text(const std::string& text) {
    specio::Parser parser(specio::tokenize(text));
    return specio::Interpreter().run(parser.parse_document());
}

inline ProblemSpec parse_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError({"cannot open spec file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec_text(ss.str());
}

namespace specio {

inline void emit_poly(std::ostream& os, const Polynomial& p, const char* indent) {
    os << indent << "poly {";
    for (const auto& [e, c] : p.terms()) {
        os << " (";
        for (unsigned v : e) os << " " << v;
        os << " ) " << format_rational(c);
    }
    os << " }\n";
}

}  // namespace specio

/// Canonical serialization; parse(emit(spec)) == spec.
inline std::string emit_spec(const ProblemSpec& s) {
    std::ostringstream os;
    os << "d " << s.d << "\n";
    os << "k " << s.k << "\n";
    os << "mode " << s.mode << "\n";
    if (!s.var_names.empty()) {
        os << "vars {";
        for (const auto& n : s.var_names) os << " " << n;
        os << " }\n";
    }
    os << "box {";
    for (const auto& [lo, hi] : s.box.sides)
        os << " " << format_rational(lo) << " " << format_rational(hi);
    os << " }\n";
    for (const auto& pi : s.submersions) {
        os << "pi {\n";
        for (const auto& c : pi.components) specio::emit_poly(os, c, "  ");
        os << "}\n";
    }
    for (const auto& f : s.raw_fields) {
        os << "field {\n";
        for (const auto& c : f.components) specio::emit_poly(os, c, "  ");
        os << "}\n";
    }
    if (s.N > 0) os << "N " << s.N << "\n";
    if (s.M > 0) os << "M " << s.M << "\n";
    os << "seed " << s.seed << "\n";
    auto emit_rvec = [&os](const char* key, const std::vector<Rational>& v) {
        os << key << " {";
        for (const auto& r : v) os << " " << format_rational(r);
        os << " }\n";
    };
    if (s.x0) emit_rvec("x0", *s.x0);
    if (!s.samples.empty()) {
        os << "samples {";
        for (const auto& pt : s.samples) {
            os << " (";
            for (const auto& r : pt) os << " " << format_rational(r);
            os << " )";
        }
        os << " }\n";
    }
    if (s.b0) {
        os << "b0 {";
        for (unsigned v : *s.b0) os << " " << v;
        os << " }\n";
    }
    if (s.i0_words) {
        os << "i0 {";
        for (const auto& w : *s.i0_words) {
            os << " (";
            for (int l : w) os << " " << l;
            os << " )";
        }
        os << " }\n";
    }
    if (s.j0) {
        os << "j0 {";
        for (int l : *s.j0) os << " " << l;
        os << " }\n";
    }
    if (s.beta0) {
        os << "beta0 {";
        for (unsigned v : *s.beta0) os << " " << v;
        os << " }\n";
    }
    if (s.p) {
        os << "p {";
        for (const auto& e : *s.p) os << " " << (e ? format_rational(*e) : std::string("inf"));
        os << " }\n";
    }
    if (s.generators) {
        os << "generators {";
        for (const auto& g : *s.generators) {
            os << " (";
            for (unsigned v : g) os << " " << v;
            os << " )";
        }
        os << " }\n";
    }
    if (s.query) emit_rvec("query", *s.query);
    for (const auto& dp : s.diffeos) {
        os << "diffeo {\n";
        if (!dp.label.empty()) os << "  label " << dp.label << "\n";
        os << "  F {\n";
        for (const auto& c : dp.F.components) specio::emit_poly(os, c, "    ");
        os << "  }\n";
        if (dp.F_inverse) {
            os << "  Finv {\n";
            for (const auto& c : dp.F_inverse->components) specio::emit_poly(os, c, "    ");
            os << "  }\n";
        }
        for (const auto& g : dp.Gs) {
            os << "  G {\n";
            for (const auto& c : g.components) specio::emit_poly(os, c, "    ");
            os << "  }\n";
        }
        os << "}\n";
    }
    if (s.sweep) {
        os << "sweep {\n  kind " << s.sweep->kind << "\n";
        if (!s.sweep->axis_exponents.empty()) {
            os << "  exponents {";
            for (const auto& r : s.sweep->axis_exponents) os << " " << format_rational(r);
            os << " }\n";
        }
        os << "  deltas {";
        for (const auto& r : s.sweep->deltas) os << " " << format_rational(r);
        os << " }\n  weight " << s.sweep->weight << "\n}\n";
    }
    if (!s.tolerance_overrides.empty()) {
        os << "tolerances {";
        for (const auto& [key, val] : s.tolerance_overrides)
            os << " " << key << " " << format_rational(val);
        os << " }\n";
    }
    return os.str();
}

}  // namespace arcweight
