// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Tolerances are pinned here, next to the checks that use them.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stlr/cli.hpp"
#include "stlr/dlr.hpp"
#include "stlr/gmd.hpp"
#include "stlr/sampler.hpp"
#include "stlr/sensitivity.hpp"

using namespace stlr;

namespace {

constexpr double kPi = 3.141592653589793;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && pass) {
            pass = false;
            detail = what;
        }
    }
};

const PrimRegistry& reg() { return default_registry(); }
TypePtr realTy() { return t_real(); }
TypePtr arrowTy() { return t_arrow(t_real(), t_real()); }

// Premise points over [-10, 10] with differences capped at 5, no infinities,
// distinguished constants kept in range.
SamplerConfig boundedConfig() {
    SamplerConfig sc;
    sc.offsetMax = 4.5;
    sc.slackMax = 0.5;
    sc.infProb = 0.0;
    sc.specials = {0.0, 1.0, -1.0, kPi, -kPi, 1e-9, -1e-9};
    return sc;
}

// 1. The sine function against the identity, related through the distance
//    (x, e) -> e + |x - sin x|: the sampled check accepts, and both halves
//    of the pencil-and-paper argument hold numerically on fresh triples.
Outcome criterion1() {
    Outcome o;
    TermPtr lsin = parse_term("\\x:Real. sin x", reg());
    TermPtr lid = parse_term("\\x:Real. x", reg());
    DiffExprPtr f = parse_diff("dlam (x, e). e + abs(x - sin(x))", arrowTy(), reg());

    Sampler s(boundedConfig(), 2026);
    Verdict v = dlr_check(lsin, f, lid, arrowTy(), s, 10000, reg());
    o.require(v.status == VerdictStatus::PassSampled, "sampled check did not accept");

    const double tol = 1e-9;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> px(-10.0, 10.0), pe(0.0, 5.0), unit(0.0, 1.0);
    for (int i = 0; i < 10000; i++) {
        double r = px(rng), e = pe(rng);
        double sPt = r + (2.0 * unit(rng) - 1.0) * e;
        double bound = e + std::fabs(r - std::sin(r));
        o.require(std::fabs(std::sin(r) - sPt) <= bound + tol, "first inequality chain broke");
        o.require(std::fabs(std::sin(sPt) - r) <= bound + tol, "second inequality chain broke");
    }
    return o;
}

// 2. Zero is not a self-distance for the identity, while the passthrough
//    distance is.
Outcome criterion2() {
    Outcome o;
    TermPtr lid = parse_term("\\x:Real. x", reg());
    DiffExprPtr zero = parse_diff("dlam (x, e). 0", arrowTy(), reg());
    DiffExprPtr pass = parse_diff("dlam (x, e). e", arrowTy(), reg());

    Sampler s1(SamplerConfig{}, 7);
    Verdict bad = dlr_check(lid, zero, lid, arrowTy(), s1, 100, reg());
    o.require(bad.status == VerdictStatus::Counterexample, "zero distance was not refuted");
    o.require(bad.witness.has_value(), "refutation carried no witness");

    Sampler s2(SamplerConfig{}, 11);
    Verdict good = dlr_check(lid, pass, lid, arrowTy(), s2, 2000, reg());
    o.require(good.status == VerdictStatus::PassSampled, "passthrough distance was rejected");
    return o;
}

// 3. Distance multiplication at base sort: commutative, unital, distributes
//    over binary joins, exactly, on a mix of finite and infinite draws; it
//    is not idempotent.
Outcome criterion3() {
    Outcome o;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> fin(0.0, 100.0);
    auto draw = [&]() -> double {
        if (rng() % 10 == 0) return kInf;
        if (rng() % 17 == 0) return 1e300;
        return fin(rng);
    };
    for (int i = 0; i < 1000; i++) {
        double a = draw(), b = draw(), c = draw();
        double ab = as_num(dv_mult(dv_num(a), dv_num(b)));
        double ba = as_num(dv_mult(dv_num(b), dv_num(a)));
        o.require(ab == ba, "multiplication is not commutative");
        o.require(as_num(dv_mult(dv_num(a), dv_num(0.0))) == a, "unit law broke");
        double lhs = as_num(dv_mult(dv_num(a), dv_sup2(dv_num(b), dv_num(c))));
        double rhs = as_num(dv_sup2(dv_mult(dv_num(a), dv_num(b)), dv_mult(dv_num(a), dv_num(c))));
        o.require(lhs == rhs, "join distribution broke");
    }
    o.require(as_num(dv_mult(dv_num(1.0), dv_num(1.0))) == 2.0, "1 after 1 should be 2");
    return o;
}

// 4. Finite joins are least upper bounds: exactly at base sort, pointwise
//    on sampled inputs at arrow sort.
Outcome criterion4() {
    Outcome o;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> fin(0.0, 50.0);
    for (int round = 0; round < 200; round++) {
        std::size_t k = 1 + rng() % 5;
        std::vector<DiffExprPtr> items;
        std::vector<double> vals;
        for (std::size_t i = 0; i < k; i++) {
            double v = (rng() % 12 == 0) ? kInf : fin(rng);
            vals.push_back(v);
            items.push_back(d_const(v));
        }
        double sup = as_num(diff_eval(finite_sup(items, realTy()), {}, {}, reg()));
        double mx = 0.0;
        for (double v : vals) {
            o.require(v <= sup, "join is not an upper bound");
            mx = std::max(mx, v);
        }
        o.require(sup == mx, "join exceeds the least upper bound");
    }

    std::vector<std::string> texts = {"dlam (x, e). e", "dlam (x, e). e + 1",
                                      "dlam (x, e). abs(sin(x))", "dlam (x, e). 0.5"};
    std::vector<DiffValue> funs;
    std::vector<DiffExprPtr> items;
    for (auto& t : texts) {
        DiffExprPtr d = parse_diff(t, arrowTy(), reg());
        items.push_back(d);
        funs.push_back(diff_eval(d, {}, {}, reg()));
    }
    DiffValue supFun = diff_eval(finite_sup(items, arrowTy()), {}, {}, reg());
    auto applyAt = [&](const DiffValue& f, double x, double e) {
        return as_num(std::get<DiffValue::Fun>(f.node).apply(v_real(x), dv_num(e)));
    };
    std::uniform_real_distribution<double> px(-10.0, 10.0);
    for (int i = 0; i < 200; i++) {
        double x = px(rng);
        double e = (rng() % 10 == 0) ? kInf : fin(rng);
        double supAt = applyAt(supFun, x, e);
        double mx = 0.0;
        for (auto& f : funs) {
            double v = applyAt(f, x, e);
            o.require(v <= supAt, "pointwise join is not an upper bound");
            mx = std::max(mx, v);
        }
        o.require(supAt == mx, "pointwise join exceeds the least upper bound");
    }
    return o;
}

// 5. Relational sanity on samples: swapping the two programs never changes
//    the verdict class, widening a passing base distance keeps it passing,
//    and base distances transport across a middle point.
Outcome criterion5() {
    Outcome o;
    std::vector<TermPtr> pool;
    for (auto* t : {"\\x:Real. sin x", "\\x:Real. x", "\\x:Real. add1 x", "\\x:Real. pred x",
                    "\\x:Real. mul2 x", "\\x:Real. sin (sin x)", "\\x:Real. 3",
                    "\\x:Real. add1 (sin x)"})
        pool.push_back(parse_term(t, reg()));
    std::vector<DiffExprPtr> diffs;
    for (auto* t : {"dlam (x, e). e", "dlam (x, e). e + abs(x - sin(x))", "dlam (x, e). 0",
                    "dlam (x, e). e + e", "dlam (x, e). e + 2"})
        diffs.push_back(parse_diff(t, arrowTy(), reg()));

    for (int i = 0; i < 50; i++) {
        TermPtr m = pool[i % pool.size()];
        TermPtr n = pool[(i * 7 + 3) % pool.size()];
        DiffExprPtr d = diffs[i % diffs.size()];
        Sampler s(boundedConfig(), 100 + i);
        Verdict v = symmetry_swap(m, d, n, arrowTy(), s, 300, reg());
        o.require(!v.witness || v.witness->relation != "symmetry",
                  "swapped runs disagreed in class");
    }

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> px(-50.0, 50.0), pd(0.0, 10.0);
    Sampler dummy(SamplerConfig{}, 0);
    for (int i = 0; i < 300; i++) {
        double a = px(rng), delta = px(rng) / 10.0, slack = pd(rng);
        double b = a + delta;
        double d1 = std::fabs(delta) + slack;
        double d2 = (i % 9 == 0) ? kInf : d1 + pd(rng);
        Verdict at1 = dlr_check(m_lit(a), d_const(d1), m_lit(b), realTy(), dummy, 1, reg());
        Verdict at2 = dlr_check(m_lit(a), d_const(d2), m_lit(b), realTy(), dummy, 1, reg());
        o.require(at1.status == VerdictStatus::ExactPass, "base premise failed to hold");
        o.require(at2.status == VerdictStatus::ExactPass, "widening broke a passing distance");
    }

    for (int i = 0; i < 300; i++) {
        double a = px(rng), d1 = pd(rng), d2 = pd(rng);
        double b = a + (2.0 * (rng() % 2) - 1.0) * d1 * 0.9;
        double c = b + (2.0 * (rng() % 2) - 1.0) * d2 * 0.9;
        Verdict v = dlr_check(m_lit(a), d_const(d1 + d2), m_lit(c), realTy(), dummy, 1, reg());
        o.require(v.status == VerdictStatus::ExactPass, "composed distance failed to transport");
    }
    return o;
}

// 6. Derived self-distances: for a generated corpus of bounded programs the
//    derivation produces a distance the sampled check accepts and the finite
//    membership check passes; the reciprocal stays out by unbounded diameter.
Outcome criterion6() {
    Outcome o;
    GenConfig g;
    g.depth = 5;
    g.prims = {"sin", "add1", "pred", "mul2"};
    Sampler gen(SamplerConfig{}, 424242);

    for (int i = 0; i < 30; i++) {
        TermPtr t = gen.gen_closed_term(arrowTy(), g, reg());
        o.require(is_closed(t), "generator produced an open term");
        o.require(weakly_bounded(t, reg()), "generator left the bounded fragment");
        DerivedDistance dd = derive_self_distance(TypeEnv{}, t, arrowTy(), reg());

        Sampler s(SamplerConfig{}, 1000 + i);
        Verdict v = dlr_check(t, dd.expr, t, arrowTy(), s, 10000, reg());
        o.require(verdict_passed(v.status), "derived distance rejected for " + print_term(t));

        Sampler fs(SamplerConfig{}, 5000 + i);
        Verdict fv = finite_check(dd.expr, arrowTy(), fs, 500, reg());
        o.require(verdict_passed(fv.status), "derived distance not finite for " + print_term(t));
    }

    o.require(prim_diameter(reg().get("recip"), 0.0, 0.5) == kInf,
              "reciprocal diameter at zero should be infinite");
    o.require(!weakly_bounded(parse_term("\\x:Real. recip x", reg()), reg()),
              "reciprocal should not count as bounded");
    return o;
}

// 7. The bundled membership fixtures reproduce their recorded verdicts, and
//    at base type a zero distance holds exactly when normal forms coincide.
Outcome criterion7() {
    Outcome o;
    RunResult r = run({"corpus", STLR_CORPUS_DIR});
    o.require(r.exitCode == 0, "bundled fixtures mismatched");
    nlohmann::json doc = nlohmann::json::parse(r.out);
    std::vector<std::string> wanted = {
        "null-zero-at-real",     "null-one-at-real",           "null-passthrough",
        "metric-two-at-two",     "metric-one-at-two",          "metric-passthrough-at-zero",
        "finite-square",         "finite-inf-at-real",         "finite-passthrough"};
    for (auto& name : wanted) {
        bool found = false;
        for (auto& fx : doc["fixtures"])
            if (fx["name"] == name) found = fx["match"].get<bool>();
        o.require(found, "fixture " + name + " missing or mismatched");
    }

    std::vector<std::pair<std::string, std::string>> pairs = {
        {"plus <1, 2>", "3"},         {"add1 2", "3"},     {"sin 0", "0"},
        {"mul2 1", "2"},              {"pred 1", "0"},     {"iter(add1, 0) 2.5", "3"},
        {"minus <5, 2>", "3"},        {"mul <2, 3>", "6"}, {"ifz(1, 2) -3", "1"},
        {"(\\x:Real. x) 7", "7"},     {"0", "1"},          {"1", "-1"},
        {"2", "3"},                   {"0.5", "0"},        {"sin 0", "1"},
        {"plus <1, 2>", "4"},         {"add1 2", "2"},     {"mul2 1", "3"},
        {"pred 1", "1"},              {"iter(add1, 0) 2.5", "4"}};
    Sampler dummy(SamplerConfig{}, 0);
    for (auto& [l, rsrc] : pairs) {
        TermPtr a = parse_term(l, reg()), b = parse_term(rsrc, reg());
        bool sameNf = nf_real(a, reg()) == nf_real(b, reg());
        Verdict v = dlr_check(a, d_const(0.0), b, realTy(), dummy, 1, reg());
        bool zeroHolds = v.status == VerdictStatus::ExactPass;
        o.require(zeroHolds == sameNf, "zero distance disagreed with normal forms for " + l);
    }
    return o;
}

// 8. Generated closed well-typed programs, branching and iteration included,
//    normalize within the default fuel, and evaluation is repeatable.
Outcome criterion8() {
    Outcome o;
    GenConfig g;
    g.depth = 4;
    g.allowIfz = true;
    g.allowIter = true;
    Sampler gen(SamplerConfig{}, 777);
    std::vector<TypePtr> types = {realTy(), arrowTy(), t_prod(t_real(), t_real()),
                                  t_arrow(t_prod(t_real(), t_real()), t_real()),
                                  t_arrow(t_real(), arrowTy())};
    for (int i = 0; i < 500; i++) {
        TypePtr ty = types[i % types.size()];
        TermPtr t = gen.gen_closed_term(ty, g, reg());
        TypePtr inferred = infer(TypeEnv{}, t, reg());
        o.require(type_eq(inferred, ty), "generated term has the wrong type");
        EvalResult r1 = eval(t, reg(), 1000000);
        EvalResult r2 = eval(t, reg(), 1000000);
        o.require(value_eq(r1.value, r2.value), "evaluation was not repeatable");
        o.require(r1.steps == r2.steps, "step counts drifted between runs");
        o.require(print_value(r1.value) == print_value(r2.value), "printed values drifted");
    }
    return o;
}

namespace finite_instances {

// Two points related at any positive level, three points on the four-chain
// related at their index distance.
GmdObject two_point() {
    GmdObject o = make_gmd({"p", "q"}, chain_quantale(2));
    for (int a = 0; a < 2; a++)
        for (int q = 0; q < 2; q++)
            for (int b = 0; b < 2; b++) o.delta[a][q][b] = q >= (a == b ? 0 : 1);
    return o;
}

GmdObject three_point() {
    GmdObject o = make_gmd({"x", "y", "z"}, chain_quantale(4));
    for (int a = 0; a < 3; a++)
        for (int q = 0; q < 4; q++)
            for (int b = 0; b < 3; b++) o.delta[a][q][b] = q >= std::abs(a - b);
    return o;
}

struct Named {
    std::string name;
    const GmdObject* src;
    const GmdObject* dst;
    GmdArrow ar;
};

} // namespace finite_instances

// 9. The finite instances form a category with products and function
//    spaces: identity and associativity laws, projection laws, and
//    evaluation after currying, all checked exhaustively.
Outcome criterion9() {
    using namespace finite_instances;
    Outcome o;
    GmdObject One = gmd_terminal();
    GmdObject B = two_point();
    GmdObject T = three_point();
    for (auto* obj : {&One, &B, &T})
        o.require(check_gmd(*obj).all_pass(), "a bundled instance broke the distance laws");

    GmdArrow collapse; // T -> B, merging x and y
    collapse.f = {0, 0, 1};
    collapse.zeta.assign(4, std::vector<int>(3));
    for (int q = 0; q < 4; q++)
        for (int a = 0; a < 3; a++) collapse.zeta[q][a] = std::min(q, 1);
    GmdArrow embed; // B -> T, constant at x
    embed.f = {0, 0};
    embed.zeta.assign(2, std::vector<int>(2, 0));
    GmdArrow shift; // T -> T, nonexpansive push toward z
    shift.f = {1, 2, 2};
    shift.zeta.assign(4, std::vector<int>(3));
    for (int q = 0; q < 4; q++)
        for (int a = 0; a < 3; a++) shift.zeta[q][a] = q;

    std::vector<Named> arrows = {{"id One", &One, &One, gmd_id(One)},
                                 {"id B", &B, &B, gmd_id(B)},
                                 {"id T", &T, &T, gmd_id(T)},
                                 {"collapse", &T, &B, collapse},
                                 {"embed", &B, &T, embed},
                                 {"shift", &T, &T, shift},
                                 {"bang B", &B, &One, terminal_arrow(B)},
                                 {"bang T", &T, &One, terminal_arrow(T)}};
    for (auto& a : arrows) {
        o.require(check_arrow(*a.src, *a.dst, a.ar).all_pass(),
                  a.name + " violates the arrow condition");
        o.require(arrow_eq(gmd_compose(gmd_id(*a.dst), a.ar), a.ar), "left identity broke");
        o.require(arrow_eq(gmd_compose(a.ar, gmd_id(*a.src)), a.ar), "right identity broke");
    }
    for (auto& f : arrows)
        for (auto& g : arrows)
            for (auto& h : arrows) {
                if (f.dst != g.src || g.dst != h.src) continue;
                GmdArrow l = gmd_compose(h.ar, gmd_compose(g.ar, f.ar));
                GmdArrow r = gmd_compose(gmd_compose(h.ar, g.ar), f.ar);
                o.require(arrow_eq(l, r), "composition is not associative");
            }
    o.require(arrow_eq(gmd_compose(terminal_arrow(T), embed), terminal_arrow(B)),
              "arrows into the terminal object are not unique");

    GmdProduct P = gmd_product(T, B);
    o.require(check_gmd(P.obj).all_pass(), "a product instance broke the distance laws");
    GmdArrow paired = gmd_pair(B, B, embed, gmd_id(B));
    o.require(check_arrow(B, P.obj, paired).all_pass(), "pairing violates the arrow condition");
    o.require(arrow_eq(gmd_compose(P.proj1, paired), embed), "first projection law broke");
    o.require(arrow_eq(gmd_compose(P.proj2, paired), gmd_id(B)), "second projection law broke");

    GmdProduct PB = gmd_product(B, B);
    GmdArrow diag = gmd_pair(B, B, gmd_id(B), gmd_id(B));
    o.require(arrow_eq(gmd_compose(PB.proj1, diag), gmd_id(B)), "diagonal projection broke");
    o.require(arrow_eq(gmd_compose(PB.proj2, diag), gmd_id(B)), "diagonal projection broke");

    GmdExponential E = gmd_exponential(B, B);
    o.require(check_gmd(E.obj).all_pass(), "the function space broke the distance laws");
    GmdArrow constZero;
    constZero.f.assign(PB.obj.points(), 0);
    constZero.zeta.assign(PB.obj.quantale.size(), std::vector<int>(PB.obj.points(), 0));
    for (const GmdArrow& gAr : {PB.proj1, PB.proj2, constZero}) {
        GmdArrow cur = gmd_curry(E, B, B, gAr);
        o.require(check_arrow(B, E.obj, cur).all_pass(), "currying violates the arrow condition");
        GmdArrow through = gmd_compose(E.evalArrow, gmd_arrow_product(B, B, B, cur, gmd_id(B)));
        o.require(arrow_eq(through, gAr), "evaluation after currying is not the original arrow");
    }
    return o;
}

// 10. The sine diameter over [-pi, pi] is the exact width the enclosure
//     promises and dominates an independently computed grid bound.
Outcome criterion10() {
    Outcome o;
    const double frozenGrid = 1.9999999999975326; // fixed before the enclosure existed
    const int n = 1000000;
    double mn = kInf, mx = -kInf;
    for (int i = 0; i < n; i++) {
        double x = -kPi + 2.0 * kPi * i / (n - 1);
        double s = std::sin(x);
        mn = std::min(mn, s);
        mx = std::max(mx, s);
    }
    double liveGrid = mx - mn;
    o.require(std::fabs(liveGrid - frozenGrid) <= 1e-9, "grid bound drifted from its record");

    double d = prim_diameter(reg().get("sin"), 0.0, kPi);
    o.require(d >= 2.0 && d <= 2.0 + 1e-6, "diameter left the [2, 2 + 1e-6] window");
    o.require(d >= frozenGrid && d >= liveGrid, "diameter fell below the grid bound");
    return o;
}

} // namespace

int main() {
    struct Entry {
        const char* label;
        Outcome (*body)();
    };
    const Entry entries[] = {
        {"sine against identity carries its analytic distance", criterion1},
        {"zero self-distance refuted, passthrough accepted", criterion2},
        {"distance multiplication is a commutative monoid over joins", criterion3},
        {"finite joins are least upper bounds at base and arrow sorts", criterion4},
        {"symmetry, monotonicity, and transport hold on samples", criterion5},
        {"derived self-distances verify and stay finite on a bounded corpus", criterion6},
        {"membership fixtures replay and zero distance tracks normal forms", criterion7},
        {"generated programs terminate in fuel and evaluate repeatably", criterion8},
        {"finite instances satisfy category, product, and currying laws", criterion9},
        {"the sine diameter is exact and dominates its grid bound", criterion10},
    };

    int failures = 0;
    int num = 1;
    for (const Entry& e : entries) {
        Outcome o;
        try {
            o = e.body();
        } catch (const Error& err) {
            o.pass = false;
            o.detail = std::string("unexpected error: ") + err.what();
        } catch (const std::exception& err) {
            o.pass = false;
            o.detail = std::string("unexpected exception: ") + err.what();
        }
        if (o.pass) {
            std::printf("[PASS] criterion %d: %s\n", num, e.label);
        } else {
            std::printf("[FAIL] criterion %d: %s (%s)\n", num, e.label, o.detail.c_str());
            failures++;
        }
        num++;
    }
    return failures;
}
