#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stlr/error.hpp"
#include "stlr/prims.hpp"
#include "stlr/printer.hpp"
#include "stlr/syntax.hpp"
#include "stlr/typecheck.hpp"

namespace stlr {

namespace sens_detail {

/// Cheap image sample inside the box; catches a registry whose interval
/// extension is inconsistent with its evaluator.
inline void spot_check_enclosure(const PrimSpec& spec, const std::vector<Interval>& box,
                                 const Interval& enc) {
    std::vector<std::vector<double>> probes;
    probes.push_back({});
    for (const Interval& b : box) {
        if (std::isinf(b.lo) || std::isinf(b.hi)) return;
        std::vector<std::vector<double>> grown;
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            double x = b.lo + frac * (b.hi - b.lo);
            for (auto p : probes) {
                p.push_back(x);
                grown.push_back(std::move(p));
            }
        }
        probes = std::move(grown);
    }
    for (const auto& p : probes) {
        double fx = spec.eval(p);
        if (std::isnan(fx)) continue;
        double pad = 1e-12 * std::max(1.0, std::fabs(fx));
        if (!enc.contains(fx, pad))
            fail(ErrorKind::Registry, "registry inconsistency: enclosure for " + spec.name +
                                          " is narrower than its sampled image");
    }
}

} // namespace sens_detail

/// Width of the primitive's image over the box [center - radius, center + radius],
/// improved by the Lipschitz bound when one is registered. Infinite radius or
/// an unbounded enclosure gives infinity.
inline double prim_diameter_box(const PrimSpec& spec, const std::vector<double>& centers,
                                const std::vector<double>& radii) {
    if ((int)centers.size() != spec.arity || (int)radii.size() != spec.arity)
        fail(ErrorKind::Registry, "prim_diameter: box arity mismatch for " + spec.name);
    double maxRadius = 0;
    std::vector<Interval> box;
    box.reserve(spec.arity);
    for (int i = 0; i < spec.arity; i++) {
        if (radii[i] < 0 || std::isnan(radii[i]))
            fail(ErrorKind::Sort, "prim_diameter: invalid radius");
        if (std::isinf(radii[i])) return kInf;
        maxRadius = std::max(maxRadius, radii[i]);
        box.push_back(Interval{centers[i] - radii[i], centers[i] + radii[i]});
    }
    Interval enc = spec.interval(box);
    sens_detail::spot_check_enclosure(spec, box, enc);
    double width = enc.width();
    if (spec.lipschitz) width = std::min(width, 2.0 * *spec.lipschitz * maxRadius);
    return width;
}

inline double prim_diameter(const PrimSpec& spec, double center, double radius) {
    if (spec.arity != 1) fail(ErrorKind::Registry, "prim_diameter: " + spec.name + " is not unary");
    return prim_diameter_box(spec, {center}, {radius});
}

// ---------------------------------------------------------------------------
// Derived self-distances. The derivation is syntax-directed over the typing
// of the term; each case records a provenance entry.
// ---------------------------------------------------------------------------

struct DerivedDistance {
    DiffExprPtr expr;
    TypePtr type;
    std::vector<std::pair<std::string, std::string>> trace;
};

inline DerivedDistance derive_self_distance(const TypeEnv& env, const TermPtr& t,
                                            std::optional<TypePtr> expected = std::nullopt,
                                            const PrimRegistry& reg = default_registry());

namespace sens_detail {

inline void splice_trace(DerivedDistance& into, DerivedDistance&& child) {
    for (auto& e : child.trace) into.trace.push_back(std::move(e));
}

inline std::pair<std::string, std::string> fresh_binders(const DiffExprPtr& avoidIn,
                                                         const TypeEnv& env) {
    std::set<std::string> avoid;
    if (avoidIn) print_detail::collect_idents_diff(avoidIn, avoid);
    for (auto& [name, ty] : env.bindings()) {
        (void)ty;
        avoid.insert(name);
    }
    std::string x = fresh_name("x", avoid);
    avoid.insert(x);
    return {x, fresh_name("e", avoid)};
}

} // namespace sens_detail

inline DerivedDistance derive_self_distance(const TypeEnv& env, const TermPtr& t,
                                            std::optional<TypePtr> expected,
                                            const PrimRegistry& reg) {
    using sens_detail::fresh_binders;
    using sens_detail::splice_trace;
    DerivedDistance out;
    std::visit(
        overloaded{
            [&](const Term::Var& v) {
                auto ty = env.lookup(v.name);
                if (!ty) fail(ErrorKind::Type, "unbound variable: " + v.name);
                out.expr = d_var(v.name);
                out.type = *ty;
                out.trace.push_back({"var", "environment difference for " + v.name});
            },
            [&](const Term::Lit&) {
                out.expr = d_const(0);
                out.type = t_real();
                out.trace.push_back({"const", "literals are at zero distance from themselves"});
            },
            [&](const Term::Prim& p) {
                const PrimSpec& spec = reg.get(p.name);
                TypePtr dom = spec.arity == 1 ? t_real() : t_real_pow(spec.arity);
                out.type = t_arrow(dom, t_real());
                out.expr = d_lam("x", "e", d_diam(p.name, r_point("x"), d_var("e")));
                out.trace.push_back({"prim", "image diameter over the input box for " + p.name});
            },
            [&](const Term::Lam& l) {
                const Type::Arrow* arrow = expected ? as_arrow(*expected) : nullptr;
                if (expected && !arrow)
                    fail(ErrorKind::Type, "lambda derived against non-arrow " +
                                              print_type(*expected));
                if (arrow && !type_eq(arrow->dom, l.annot))
                    fail(ErrorKind::Type, "binder annotation does not match expected domain");
                DerivedDistance body = derive_self_distance(
                    env.extended(l.binder, l.annot), l.body,
                    arrow ? std::optional<TypePtr>(arrow->cod) : std::nullopt, reg);
                out.expr = d_lam(l.binder, l.binder, body.expr);
                out.type = t_arrow(l.annot, body.type);
                out.trace.push_back({"lam", "pass through the extended environment"});
                splice_trace(out, std::move(body));
            },
            [&](const Term::App& a) {
                if (std::holds_alternative<Term::Proj1>(a.fun->node) ||
                    std::holds_alternative<Term::Proj2>(a.fun->node)) {
                    bool first = std::holds_alternative<Term::Proj1>(a.fun->node);
                    DerivedDistance arg = derive_self_distance(env, a.arg, std::nullopt, reg);
                    auto* prod = as_prod(arg.type);
                    if (!prod)
                        fail(ErrorKind::Type, "projection applied to non-product");
                    out.expr = first ? d_fst(arg.expr) : d_snd(arg.expr);
                    out.type = first ? prod->left : prod->right;
                    out.trace.push_back({"proj", "component of the pair difference"});
                    splice_trace(out, std::move(arg));
                    return;
                }
                DerivedDistance fun = derive_self_distance(env, a.fun, std::nullopt, reg);
                auto* arrow = as_arrow(fun.type);
                if (!arrow)
                    fail(ErrorKind::Type, "application of non-function in derivation");
                DerivedDistance arg =
                    derive_self_distance(env, a.arg, std::optional<TypePtr>(arrow->dom), reg);
                out.expr = d_app(fun.expr, a.arg, arg.expr);
                out.type = arrow->cod;
                out.trace.push_back(
                    {"app", "instantiate the function difference at the evaluated argument"});
                splice_trace(out, std::move(fun));
                splice_trace(out, std::move(arg));
            },
            [&](const Term::Pair& p) {
                std::optional<TypePtr> el, er;
                if (expected) {
                    auto* prod = as_prod(*expected);
                    if (!prod)
                        fail(ErrorKind::Type, "pair derived against non-product");
                    el = prod->left;
                    er = prod->right;
                }
                DerivedDistance a = derive_self_distance(env, p.first, el, reg);
                DerivedDistance b = derive_self_distance(env, p.second, er, reg);
                out.expr = d_pair(a.expr, b.expr);
                out.type = t_prod(a.type, b.type);
                out.trace.push_back({"pair", "componentwise differences"});
                splice_trace(out, std::move(a));
                splice_trace(out, std::move(b));
            },
            [&](const Term::Proj1&) {
                if (!expected)
                    fail(ErrorKind::Type, "ambiguous constant: fst needs an expected type");
                check_against(env, t, *expected, reg);
                auto [x, e] = fresh_binders(nullptr, env);
                out.expr = d_lam(x, e, d_fst(d_var(e)));
                out.type = *expected;
                out.trace.push_back({"proj", "first component of the pair difference"});
            },
            [&](const Term::Proj2&) {
                if (!expected)
                    fail(ErrorKind::Type, "ambiguous constant: snd needs an expected type");
                check_against(env, t, *expected, reg);
                auto [x, e] = fresh_binders(nullptr, env);
                out.expr = d_lam(x, e, d_snd(d_var(e)));
                out.type = *expected;
                out.trace.push_back({"proj", "second component of the pair difference"});
            },
            [&](const Term::Ifz& i) {
                std::optional<TypePtr> branchTy;
                if (expected) {
                    auto* arrow = as_arrow(*expected);
                    if (!arrow || !is_real(arrow->dom))
                        fail(ErrorKind::Type, "ifz derived against non Real -> T type");
                    branchTy = arrow->cod;
                }
                DerivedDistance dThen = derive_self_distance(env, i.thenNeg, branchTy, reg);
                DerivedDistance dElse =
                    derive_self_distance(env, i.elseNonneg, std::optional<TypePtr>(dThen.type), reg);
                DiffExprPtr avoid = d_add(dThen.expr, dElse.expr);
                auto [x, e] = fresh_binders(avoid, env);
                out.expr = d_lam(x, e,
                                 d_guard_ifz(r_point(x), d_var(e), dThen.expr, dElse.expr,
                                             dThen.type));
                out.type = t_arrow(t_real(), dThen.type);
                out.trace.push_back(
                    {"ifz", "branch difference under a sign-stable window, top otherwise "
                            "[extension]"});
                splice_trace(out, std::move(dThen));
                splice_trace(out, std::move(dElse));
            },
            [&](const Term::Iter& i) {
                std::optional<TypePtr> accTy;
                if (expected) {
                    auto* arrow = as_arrow(*expected);
                    if (!arrow || !is_real(arrow->dom))
                        fail(ErrorKind::Type, "iter derived against non Real -> T type");
                    accTy = arrow->cod;
                }
                DerivedDistance dBase = derive_self_distance(env, i.base, accTy, reg);
                DerivedDistance dStep = derive_self_distance(
                    env, i.step, std::optional<TypePtr>(t_arrow(dBase.type, dBase.type)), reg);
                DiffExprPtr avoid = d_add(dStep.expr, dBase.expr);
                auto [x, e] = fresh_binders(avoid, env);
                out.expr = d_lam(x, e,
                                 d_guard_iter(i.step, i.base, r_point(x), d_var(e), dStep.expr,
                                              dBase.expr, dBase.type));
                out.type = t_arrow(t_real(), dBase.type);
                out.trace.push_back(
                    {"iter", "step difference composed a window-stable number of times, top "
                             "otherwise [extension]"});
                splice_trace(out, std::move(dStep));
                splice_trace(out, std::move(dBase));
            },
        },
        t->node);
    if (expected && !type_eq(out.type, *expected))
        fail(ErrorKind::Type, "derived distance has sort " + print_type(out.type) +
                                  ", expected " + print_type(*expected));
    return out;
}

// ---------------------------------------------------------------------------
// Select-substitution: close an open term against two value families,
// choosing per variable which family supplies the value.
// ---------------------------------------------------------------------------

using ValueFamily = std::map<std::string, TermPtr>;
using SelectMask = std::map<std::string, bool>;

/// mask[x] = false picks V[x], true picks W[x]. Both families must cover
/// exactly the masked variables.
inline TermPtr select_subst(const TermPtr& t, const ValueFamily& V, const ValueFamily& W,
                            const SelectMask& mask) {
    TermSubst s;
    for (auto& [name, pickW] : mask) {
        const ValueFamily& fam = pickW ? W : V;
        auto it = fam.find(name);
        if (it == fam.end())
            fail(ErrorKind::Config, "select_subst: family does not cover variable " + name);
        s[name] = it->second;
    }
    if (V.size() != mask.size() || W.size() != mask.size())
        fail(ErrorKind::Config, "select_subst: families and mask cover different variables");
    return subst_term(t, s);
}

} // namespace stlr
