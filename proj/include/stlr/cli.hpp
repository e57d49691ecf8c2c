#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stlr/dlr.hpp"
#include "stlr/gmd.hpp"
#include "stlr/sensitivity.hpp"

namespace stlr {

struct RunConfig {
    std::uint64_t seed = 0;
    long long trials = 10000;
    long long fuel = kDefaultFuel;
    int generatorDepth = 2;
    double realLo = -10.0;
    double realHi = 10.0;
    std::string primRegistryPath;
    enum class Format { Json, Text } outputFormat = Format::Json;
};

struct RunResult {
    int exitCode = 0;
    std::string out;
};

namespace cli_detail {

using nlohmann::ordered_json;

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const PrimRegistry& resolve_registry(const RunConfig& cfg, PrimRegistry& storage) {
    std::string path = cfg.primRegistryPath;
    if (path.empty())
        if (const char* env = std::getenv("STLR_PRIMS")) path = env;
    if (path.empty()) return default_registry();
    storage = load_registry(path);
    return storage;
}

inline Sampler make_sampler(const RunConfig& cfg) {
    SamplerConfig sc;
    sc.realLo = cfg.realLo;
    sc.realHi = cfg.realHi;
    sc.genDepth = cfg.generatorDepth;
    return Sampler(sc, cfg.seed);
}

inline ordered_json verdict_doc(const Verdict& v) {
    ordered_json doc;
    doc["schema"] = 1;
    ordered_json body = verdict_to_json(v);
    for (auto& [k, val] : body.items()) doc[k] = val;
    return doc;
}

inline std::string verdict_text(const Verdict& v) {
    std::string out = "status: " + std::string(verdict_status_name(v.status)) +
                      "\ntrials: " + std::to_string(v.trials) +
                      "\nseed: " + std::to_string(v.seed) + "\n";
    if (v.witness) {
        out += "witness: " + v.witness->relation;
        if (!v.witness->detail.empty()) out += " (" + v.witness->detail + ")";
        out += "\n  lhs " + format_double(v.witness->lhs) + " vs rhs " +
               format_double(v.witness->rhs) + "\n";
        for (auto& step : v.witness->path) {
            switch (step.kind) {
                case WitnessStep::Kind::Apply:
                    out += "  apply " + step.point + " ~ " + step.counterpart + " at " +
                           step.diff + (step.swapped ? " (swapped)" : "") + "\n";
                    break;
                case WitnessStep::Kind::ProjL: out += "  fst\n"; break;
                case WitnessStep::Kind::ProjR: out += "  snd\n"; break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// gmd-laws spec files. A line-oriented key/value format:
//
//   quantale Q chain 4
//   quantale W wrap 4
//   quantale E explicit 2      followed by `leq`, `mult` rows and `unit`
//   object A Q p q
//   discrete A                 relates each point to itself at the unit
//   delta A p 1 q              one exact triple, no closure applied
//   delta-up A p 1 q           symmetric pair, closed upward in the order
//   check quantale Q | object A | product A B | exponential A B
// ---------------------------------------------------------------------------

struct GmdSpecCheck {
    std::string kind, target;
    LawReport report;
};

struct GmdSpecState {
    std::map<std::string, Quantale> quantales;
    std::map<std::string, GmdObject> objects;
    std::string openExplicit; // explicit quantale still collecting rows
    int explicitSize = 0;
    std::vector<std::vector<bool>> leqRows;
    std::vector<std::vector<int>> multRows;
    std::optional<int> unitRow;
};

inline void gmd_spec_seal(GmdSpecState& st, int lineno) {
    if (st.openExplicit.empty()) return;
    int n = st.explicitSize;
    if ((int)st.leqRows.size() != n || (int)st.multRows.size() != n || !st.unitRow)
        fail(ErrorKind::Parse,
             "gmd spec: explicit quantale " + st.openExplicit + " needs " + std::to_string(n) +
                 " leq rows, " + std::to_string(n) + " mult rows, and a unit",
             SourcePos{lineno, 1});
    Quantale q;
    for (int i = 0; i < n; i++) q.names.push_back(std::to_string(i));
    q.leq = st.leqRows;
    q.mult = st.multRows;
    q.unit = *st.unitRow;
    st.quantales[st.openExplicit] = std::move(q);
    st.openExplicit.clear();
    st.leqRows.clear();
    st.multRows.clear();
    st.unitRow.reset();
}

inline const Quantale& gmd_spec_quantale(const GmdSpecState& st, const std::string& name,
                                         int lineno) {
    auto it = st.quantales.find(name);
    if (it == st.quantales.end())
        fail(ErrorKind::Parse, "gmd spec: unknown quantale " + name, SourcePos{lineno, 1});
    return it->second;
}

inline GmdObject& gmd_spec_object(GmdSpecState& st, const std::string& name, int lineno) {
    auto it = st.objects.find(name);
    if (it == st.objects.end())
        fail(ErrorKind::Parse, "gmd spec: unknown object " + name, SourcePos{lineno, 1});
    return it->second;
}

inline int gmd_spec_point(const GmdObject& o, const std::string& name, int lineno) {
    for (int i = 0; i < o.points(); i++)
        if (o.carrier[i] == name) return i;
    fail(ErrorKind::Parse, "gmd spec: unknown carrier point " + name, SourcePos{lineno, 1});
}

inline int gmd_spec_elem(const Quantale& q, const std::string& name, int lineno) {
    for (int i = 0; i < q.size(); i++)
        if (q.names[i] == name) return i;
    fail(ErrorKind::Parse, "gmd spec: unknown quantale element " + name, SourcePos{lineno, 1});
}

inline int gmd_spec_int(const std::string& s, int lineno) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::Parse, "gmd spec: expected an integer, got " + s, SourcePos{lineno, 1});
    }
}

inline LawReport prefixed(const std::string& prefix, const LawReport& rep) {
    LawReport out;
    for (auto& l : rep.laws) out.record(prefix + ":" + l.law, l.pass, l.witness);
    return out;
}

inline std::vector<GmdSpecCheck> run_gmd_spec(const std::string& text) {
    GmdSpecState st;
    std::vector<GmdSpecCheck> checks;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string& head = tok[0];

        if (head == "leq" || head == "mult" || head == "unit") {
            if (st.openExplicit.empty())
                fail(ErrorKind::Parse, "gmd spec: " + head + " row outside an explicit quantale",
                     SourcePos{lineno, 1});
            int n = st.explicitSize;
            if (head == "unit") {
                if (tok.size() != 2)
                    fail(ErrorKind::Parse, "gmd spec: unit takes one element index",
                         SourcePos{lineno, 1});
                int u = gmd_spec_int(tok[1], lineno);
                if (u < 0 || u >= n)
                    fail(ErrorKind::Parse, "gmd spec: unit index out of range",
                         SourcePos{lineno, 1});
                st.unitRow = u;
            } else if ((int)tok.size() != n + 1) {
                fail(ErrorKind::Parse,
                     "gmd spec: " + head + " row needs " + std::to_string(n) + " entries",
                     SourcePos{lineno, 1});
            } else if (head == "leq") {
                std::vector<bool> row;
                for (int i = 1; i <= n; i++) row.push_back(tok[i] == "1");
                st.leqRows.push_back(std::move(row));
            } else {
                std::vector<int> row;
                for (int i = 1; i <= n; i++) {
                    int v = gmd_spec_int(tok[i], lineno);
                    if (v < 0 || v >= n)
                        fail(ErrorKind::Parse, "gmd spec: mult entry out of range",
                             SourcePos{lineno, 1});
                    row.push_back(v);
                }
                st.multRows.push_back(std::move(row));
            }
            continue;
        }

        gmd_spec_seal(st, lineno);

        if (head == "quantale") {
            if (tok.size() != 4)
                fail(ErrorKind::Parse, "gmd spec: quantale NAME {chain|wrap|explicit} N",
                     SourcePos{lineno, 1});
            int n = gmd_spec_int(tok[3], lineno);
            if (tok[2] == "chain")
                st.quantales[tok[1]] = chain_quantale(n);
            else if (tok[2] == "wrap")
                st.quantales[tok[1]] = wrap_quantale(n);
            else if (tok[2] == "explicit") {
                if (n < 1)
                    fail(ErrorKind::Parse, "gmd spec: explicit quantale needs a positive size",
                         SourcePos{lineno, 1});
                st.openExplicit = tok[1];
                st.explicitSize = n;
            } else {
                fail(ErrorKind::Parse, "gmd spec: unknown quantale constructor " + tok[2],
                     SourcePos{lineno, 1});
            }
        } else if (head == "object") {
            if (tok.size() < 4)
                fail(ErrorKind::Parse, "gmd spec: object NAME QUANTALE point...",
                     SourcePos{lineno, 1});
            std::vector<std::string> carrier(tok.begin() + 3, tok.end());
            st.objects[tok[1]] = make_gmd(std::move(carrier), gmd_spec_quantale(st, tok[2], lineno));
        } else if (head == "discrete") {
            if (tok.size() != 2)
                fail(ErrorKind::Parse, "gmd spec: discrete OBJECT", SourcePos{lineno, 1});
            GmdObject& o = gmd_spec_object(st, tok[1], lineno);
            for (int p = 0; p < o.points(); p++) o.delta[p][o.quantale.unit][p] = true;
        } else if (head == "delta" || head == "delta-up") {
            if (tok.size() != 5)
                fail(ErrorKind::Parse, "gmd spec: " + head + " OBJECT point elem point",
                     SourcePos{lineno, 1});
            GmdObject& o = gmd_spec_object(st, tok[1], lineno);
            int a = gmd_spec_point(o, tok[2], lineno);
            int q = gmd_spec_elem(o.quantale, tok[3], lineno);
            int b = gmd_spec_point(o, tok[4], lineno);
            if (head == "delta") {
                o.delta[a][q][b] = true;
            } else {
                for (int q2 = 0; q2 < o.quantale.size(); q2++)
                    if (o.quantale.leq[q][q2]) {
                        o.delta[a][q2][b] = true;
                        o.delta[b][q2][a] = true;
                    }
            }
        } else if (head == "check") {
            if (tok.size() < 3)
                fail(ErrorKind::Parse, "gmd spec: check KIND ARGS", SourcePos{lineno, 1});
            const std::string& kind = tok[1];
            if (kind == "quantale") {
                checks.push_back({kind, tok[2], check_quantale(gmd_spec_quantale(st, tok[2], lineno))});
            } else if (kind == "object") {
                checks.push_back({kind, tok[2], check_gmd(gmd_spec_object(st, tok[2], lineno))});
            } else if (kind == "product" || kind == "exponential") {
                if (tok.size() != 4)
                    fail(ErrorKind::Parse, "gmd spec: check " + kind + " A B",
                         SourcePos{lineno, 1});
                const GmdObject& A = gmd_spec_object(st, tok[2], lineno);
                const GmdObject& B = gmd_spec_object(st, tok[3], lineno);
                LawReport rep;
                if (kind == "product") {
                    GmdProduct prod = gmd_product(A, B);
                    for (auto& l : prefixed("object", check_gmd(prod.obj)).laws) rep.laws.push_back(l);
                    for (auto& l : prefixed("proj1", check_arrow(prod.obj, A, prod.proj1)).laws)
                        rep.laws.push_back(l);
                    for (auto& l : prefixed("proj2", check_arrow(prod.obj, B, prod.proj2)).laws)
                        rep.laws.push_back(l);
                } else {
                    GmdExponential exp = gmd_exponential(A, B);
                    for (auto& l : prefixed("object", check_gmd(exp.obj)).laws) rep.laws.push_back(l);
                    GmdProduct dom = gmd_product(exp.obj, A);
                    for (auto& l : prefixed("eval", check_arrow(dom.obj, B, exp.evalArrow)).laws)
                        rep.laws.push_back(l);
                }
                checks.push_back({kind, tok[2] + " " + tok[3], std::move(rep)});
            } else {
                fail(ErrorKind::Parse, "gmd spec: unknown check kind " + kind,
                     SourcePos{lineno, 1});
            }
        } else {
            fail(ErrorKind::Parse, "gmd spec: unknown directive " + head, SourcePos{lineno, 1});
        }
    }
    gmd_spec_seal(st, lineno);
    return checks;
}

// ---------------------------------------------------------------------------
// Corpus runner. DIR/manifest.json holds an array of fixtures; ordering in
// the report is by name so output stays byte-stable.
// ---------------------------------------------------------------------------

struct FixtureOutcome {
    std::string name, status, expected, message;
    bool match = false;
};

inline std::vector<FixtureOutcome> corpus_run(const std::string& dir, const RunConfig& cfg,
                                              const PrimRegistry& reg) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "corpus directory not found: " + dir);
    fs::path manifest = fs::path(dir) / "manifest.json";
    if (!fs::exists(manifest)) return {};

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(slurp(manifest.string()));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, "malformed corpus manifest: " + std::string(e.what()));
    }
    if (!doc.is_array()) fail(ErrorKind::Parse, "malformed corpus manifest: expected an array");

    std::vector<FixtureOutcome> outcomes;
    for (auto& fx : doc) {
        FixtureOutcome o;
        try {
            o.name = fx.at("name").get<std::string>();
            o.expected = fx.at("expect").get<std::string>();
            std::string kind = fx.value("kind", "dlr");
            TypePtr at = parse_type(fx.at("type").get<std::string>());
            long long trials = fx.value("trials", cfg.trials);
            std::uint64_t seed = fx.value("seed", cfg.seed);
            SamplerConfig sc;
            sc.realLo = cfg.realLo;
            sc.realHi = cfg.realHi;
            sc.genDepth = cfg.generatorDepth;
            Sampler s(sc, seed);
            Verdict v;
            if (kind == "dlr") {
                TermPtr lhs = parse_term(slurp((fs::path(dir) / fx.at("lhs").get<std::string>()).string()), reg);
                TermPtr rhs = parse_term(slurp((fs::path(dir) / fx.at("rhs").get<std::string>()).string()), reg);
                DiffExprPtr d = parse_diff(slurp((fs::path(dir) / fx.at("diff").get<std::string>()).string()), at, reg);
                v = dlr_check(lhs, d, rhs, at, s, trials, reg);
            } else if (kind == "member") {
                DiffExprPtr d = parse_diff(slurp((fs::path(dir) / fx.at("diff").get<std::string>()).string()), at, reg);
                std::string set = fx.at("set").get<std::string>();
                if (set == "null")
                    v = null_check(d, at, s, trials, reg);
                else if (set == "finite")
                    v = finite_check(d, at, s, trials, reg);
                else if (set.rfind("metric:", 0) == 0)
                    v = metric_check(d, at, std::stod(set.substr(7)), s, trials, reg);
                else
                    fail(ErrorKind::Parse, "fixture " + o.name + ": unknown set " + set);
            } else {
                fail(ErrorKind::Parse, "fixture " + o.name + ": unknown kind " + kind);
            }
            o.status = verdict_status_name(v.status);
            o.match = o.status == o.expected;
        } catch (const Error& e) {
            o.status = "error";
            o.message = e.what();
            o.match = false;
        } catch (const nlohmann::json::exception& e) {
            o.status = "error";
            o.message = std::string("malformed fixture entry: ") + e.what();
            o.match = false;
        } catch (const std::exception& e) {
            o.status = "error";
            o.message = std::string("fixture failed: ") + e.what();
            o.match = false;
        }
        if (o.name.empty()) o.name = "(unnamed fixture " + std::to_string(outcomes.size()) + ")";
        outcomes.push_back(std::move(o));
    }
    std::sort(outcomes.begin(), outcomes.end(),
              [](const FixtureOutcome& a, const FixtureOutcome& b) { return a.name < b.name; });
    return outcomes;
}

} // namespace cli_detail

// ---------------------------------------------------------------------------
// Entry point. Returns the exit code and everything written to stdout;
// deterministic for fixed argv, seed, and input files.
// ---------------------------------------------------------------------------

inline RunResult run(const std::vector<std::string>& args) {
    using namespace cli_detail;
    using nlohmann::ordered_json;

    RunConfig cfg;
    std::string fmtName = "json";

    CLI::App app{"differential distance checker for a small typed language"};
    app.require_subcommand(1);
    app.add_option("--format", fmtName, "output format: json or text")
        ->check(CLI::IsMember({"json", "text"}));
    app.add_option("--prims", cfg.primRegistryPath, "primitive registry file");

    std::string file, typeText, lhsPath, rhsPath, diffPath, setSpec, atText, specPath, corpusDir;

    auto* cmdCheck = app.add_subcommand("check", "type-check a term file");
    cmdCheck->add_option("file", file)->required();
    cmdCheck->add_option("--type", typeText, "expected type; inferred when omitted");

    auto* cmdEval = app.add_subcommand("eval", "evaluate a closed term to normal form");
    cmdEval->add_option("file", file)->required();
    cmdEval->add_option("--fuel", cfg.fuel, "evaluation step budget");

    auto* cmdDlr = app.add_subcommand("dlr-check", "check a difference expression between two terms");
    cmdDlr->add_option("--lhs", lhsPath)->required();
    cmdDlr->add_option("--rhs", rhsPath)->required();
    cmdDlr->add_option("--diff", diffPath)->required();
    cmdDlr->add_option("--type", typeText)->required();
    cmdDlr->add_option("--trials", cfg.trials);
    cmdDlr->add_option("--seed", cfg.seed);
    cmdDlr->add_option("--depth", cfg.generatorDepth, "premise generator depth");
    cmdDlr->add_option("--real-lo", cfg.realLo);
    cmdDlr->add_option("--real-hi", cfg.realHi);

    auto* cmdMember = app.add_subcommand("member", "check membership of a difference expression");
    cmdMember->add_option("--set", setSpec, "null, finite, or metric:R")->required();
    cmdMember->add_option("--diff", diffPath)->required();
    cmdMember->add_option("--type", typeText)->required();
    cmdMember->add_option("--trials", cfg.trials);
    cmdMember->add_option("--seed", cfg.seed);

    auto* cmdDerive = app.add_subcommand("derive", "derive a self-distance for a term");
    cmdDerive->add_option("file", file)->required();
    cmdDerive->add_option("--at", atText, "expected type, needed for bare projections");

    auto* cmdGmd = app.add_subcommand("gmd-laws", "run law checks from a gmd spec file");
    cmdGmd->add_option("--spec", specPath)->required();

    auto* cmdCorpus = app.add_subcommand("corpus", "run a fixture directory against expectations");
    cmdCorpus->add_option("dir", corpusDir)->required();
    cmdCorpus->add_option("--trials", cfg.trials);
    cmdCorpus->add_option("--seed", cfg.seed);

    std::vector<const char*> argv;
    argv.push_back("stlr");
    for (auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse((int)argv.size(), argv.data());
    } catch (const CLI::CallForHelp&) {
        return {0, app.help()};
    } catch (const CLI::CallForAllHelp&) {
        return {0, app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        return {2, std::string("usage error: ") + e.what() + "\n"};
    }

    cfg.outputFormat = fmtName == "text" ? RunConfig::Format::Text : RunConfig::Format::Json;
    bool json = cfg.outputFormat == RunConfig::Format::Json;
    if (cfg.trials < 1) return {2, "usage error: --trials must be at least 1\n"};
    if (cfg.fuel < 1) return {2, "usage error: --fuel must be at least 1\n"};
    if (!(cfg.realLo < cfg.realHi)) return {2, "usage error: --real-lo must be below --real-hi\n"};

    double metricLevel = 0;
    SubsetKind memberKind = SubsetKind::Null;
    if (cmdMember->parsed()) {
        if (setSpec == "null")
            memberKind = SubsetKind::Null;
        else if (setSpec == "finite")
            memberKind = SubsetKind::Finite;
        else if (setSpec.rfind("metric:", 0) == 0) {
            memberKind = SubsetKind::Metric;
            try {
                metricLevel = std::stod(setSpec.substr(7));
            } catch (const std::exception&) {
                return {2, "usage error: bad metric level in --set\n"};
            }
            if (std::isnan(metricLevel) || metricLevel < 0)
                return {2, "usage error: metric level must be nonnegative\n"};
        } else {
            return {2, "usage error: --set must be null, finite, or metric:R\n"};
        }
    }

    try {
        PrimRegistry storage;
        const PrimRegistry& reg = resolve_registry(cfg, storage);

        if (cmdCheck->parsed()) {
            TermPtr t = parse_term(slurp(file), reg);
            TypePtr ty;
            if (!typeText.empty()) {
                ty = parse_type(typeText);
                check_against(TypeEnv{}, t, ty, reg);
            } else {
                ty = infer(TypeEnv{}, t, reg);
            }
            if (json) {
                ordered_json doc;
                doc["schema"] = 1;
                doc["ok"] = true;
                doc["type"] = print_type(ty);
                return {0, doc.dump() + "\n"};
            }
            return {0, "ok: " + print_type(ty) + "\n"};
        }

        if (cmdEval->parsed()) {
            TermPtr t = parse_term(slurp(file), reg);
            EvalResult r = eval(t, reg, cfg.fuel);
            if (json) {
                ordered_json doc;
                doc["value"] = print_value(r.value);
                doc["steps"] = r.steps;
                return {0, doc.dump() + "\n"};
            }
            return {0, "value: " + print_value(r.value) + "\nsteps: " + std::to_string(r.steps) +
                           "\n"};
        }

        if (cmdDlr->parsed()) {
            TypePtr at = parse_type(typeText);
            TermPtr lhs = parse_term(slurp(lhsPath), reg);
            TermPtr rhs = parse_term(slurp(rhsPath), reg);
            DiffExprPtr d = parse_diff(slurp(diffPath), at, reg);
            Sampler s = make_sampler(cfg);
            Verdict v = dlr_check(lhs, d, rhs, at, s, cfg.trials, reg);
            int code = verdict_passed(v.status) ? 0 : 1;
            return {code, json ? verdict_doc(v).dump() + "\n" : verdict_text(v)};
        }

        if (cmdMember->parsed()) {
            TypePtr at = parse_type(typeText);
            DiffExprPtr d = parse_diff(slurp(diffPath), at, reg);
            Sampler s = make_sampler(cfg);
            Verdict v = subset_check(d, at, memberKind, metricLevel, s, cfg.trials, reg);
            int code = verdict_passed(v.status) ? 0 : 1;
            return {code, json ? verdict_doc(v).dump() + "\n" : verdict_text(v)};
        }

        if (cmdDerive->parsed()) {
            TermPtr t = parse_term(slurp(file), reg);
            std::optional<TypePtr> expected;
            if (!atText.empty()) expected = parse_type(atText);
            DerivedDistance dd = derive_self_distance(TypeEnv{}, t, expected, reg);
            if (json) {
                ordered_json doc;
                doc["schema"] = 1;
                doc["distance"] = print_diff(dd.expr);
                doc["type"] = print_type(dd.type);
                ordered_json trace = ordered_json::array();
                for (auto& [rule, note] : dd.trace) {
                    ordered_json entry;
                    entry["rule"] = rule;
                    entry["note"] = note;
                    trace.push_back(std::move(entry));
                }
                doc["trace"] = std::move(trace);
                return {0, doc.dump() + "\n"};
            }
            std::string out = "distance: " + print_diff(dd.expr) + "\ntype: " + print_type(dd.type) + "\n";
            for (auto& [rule, note] : dd.trace) out += "  " + rule + ": " + note + "\n";
            return {0, out};
        }

        if (cmdGmd->parsed()) {
            auto checks = run_gmd_spec(slurp(specPath));
            bool all = true;
            for (auto& c : checks) all = all && c.report.all_pass();
            if (json) {
                ordered_json doc;
                doc["schema"] = 1;
                ordered_json arr = ordered_json::array();
                for (auto& c : checks) {
                    ordered_json entry;
                    entry["check"] = c.kind;
                    entry["target"] = c.target;
                    entry["pass"] = c.report.all_pass();
                    entry["laws"] = c.report.to_json();
                    arr.push_back(std::move(entry));
                }
                doc["checks"] = std::move(arr);
                doc["pass"] = all;
                return {all ? 0 : 1, doc.dump() + "\n"};
            }
            std::string out;
            for (auto& c : checks) {
                out += c.kind + " " + c.target + ": " + (c.report.all_pass() ? "pass" : "fail") + "\n";
                for (auto& l : c.report.laws)
                    if (!l.pass) out += "  " + l.law + ": " + l.witness + "\n";
            }
            return {all ? 0 : 1, out};
        }

        if (cmdCorpus->parsed()) {
            auto outcomes = corpus_run(corpusDir, cfg, reg);
            int mismatches = 0;
            for (auto& o : outcomes)
                if (!o.match) mismatches++;
            if (json) {
                ordered_json doc;
                doc["schema"] = 1;
                ordered_json arr = ordered_json::array();
                for (auto& o : outcomes) {
                    ordered_json entry;
                    entry["name"] = o.name;
                    entry["status"] = o.status;
                    entry["expected"] = o.expected;
                    entry["match"] = o.match;
                    if (!o.message.empty()) entry["message"] = o.message;
                    arr.push_back(std::move(entry));
                }
                doc["fixtures"] = std::move(arr);
                doc["total"] = outcomes.size();
                doc["mismatches"] = mismatches;
                return {mismatches == 0 ? 0 : 1, doc.dump() + "\n"};
            }
            std::string out;
            for (auto& o : outcomes) {
                out += o.name + ": " + o.status + " (expected " + o.expected + ") " +
                       (o.match ? "ok" : "MISMATCH") + "\n";
                if (!o.message.empty()) out += "  " + o.message + "\n";
            }
            out += std::to_string(outcomes.size()) + " fixtures, " + std::to_string(mismatches) +
                   " mismatches\n";
            return {mismatches == 0 ? 0 : 1, out};
        }
    } catch (const Error& e) {
        if (json) {
            ordered_json doc;
            doc["schema"] = 1;
            ordered_json err;
            err["kind"] = Error::kind_name(e.kind());
            err["message"] = e.what();
            if (e.pos()) {
                err["line"] = e.pos()->line;
                err["col"] = e.pos()->col;
            }
            doc["error"] = std::move(err);
            return {1, doc.dump() + "\n"};
        }
        std::string out = std::string("error (") + Error::kind_name(e.kind()) + "): " + e.what();
        if (e.pos())
            out += " at line " + std::to_string(e.pos()->line) + ", col " +
                   std::to_string(e.pos()->col);
        return {1, out + "\n"};
    }
    return {2, "usage error: no subcommand\n"};
}

inline int run_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    RunResult r = run(args);
    std::fputs(r.out.c_str(), stdout);
    return r.exitCode;
}

} // namespace stlr
