#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "stlr/error.hpp"
#include "stlr/eval.hpp"
#include "stlr/printer.hpp"
#include "stlr/prims.hpp"
#include "stlr/sensitivity.hpp"
#include "stlr/syntax.hpp"
#include "stlr/typecheck.hpp"

namespace stlr {

// ---------------------------------------------------------------------------
// Semantic difference values, indexed by the underlying type:
//   Real       -> extended nonnegative real
//   t -> r     -> function of (point at t, difference at t) to difference at r
//   t * r      -> pair of differences
// ---------------------------------------------------------------------------

struct DiffValue;
using DiffValuePtr = std::shared_ptr<const DiffValue>;

struct DiffValue {
    struct Num {
        double v; // >= 0 or +inf, never NaN or negative
    };
    struct Tup {
        DiffValuePtr first, second;
    };
    struct Fun {
        std::function<DiffValue(const Value&, const DiffValue&)> apply;
    };
    std::variant<Num, Tup, Fun> node;
};

inline DiffValue dv_num(double v) {
    if (std::isnan(v)) fail(ErrorKind::Sort, "difference value is NaN");
    if (v < 0) fail(ErrorKind::Sort, "difference value is negative: " + format_double(v));
    return DiffValue{DiffValue::Num{v}};
}
inline DiffValue dv_tup(DiffValue a, DiffValue b) {
    return DiffValue{DiffValue::Tup{std::make_shared<DiffValue>(std::move(a)),
                                    std::make_shared<DiffValue>(std::move(b))}};
}
inline DiffValue dv_fun(std::function<DiffValue(const Value&, const DiffValue&)> f) {
    return DiffValue{DiffValue::Fun{std::move(f)}};
}

inline double as_num(const DiffValue& d) {
    auto* n = std::get_if<DiffValue::Num>(&d.node);
    if (!n) fail(ErrorKind::Sort, "difference value is not numeric");
    return n->v;
}

/// Least element: the lifted zero, which is also the quantale unit.
inline DiffValue dv_bottom(const TypePtr& at) {
    if (is_real(at)) return dv_num(0);
    if (auto* p = as_prod(at)) return dv_tup(dv_bottom(p->left), dv_bottom(p->right));
    auto* a = as_arrow(at);
    TypePtr cod = a->cod;
    return dv_fun([cod](const Value&, const DiffValue&) { return dv_bottom(cod); });
}

/// Greatest element: the lifted infinity.
inline DiffValue dv_top(const TypePtr& at) {
    if (is_real(at)) return dv_num(kInf);
    if (auto* p = as_prod(at)) return dv_tup(dv_top(p->left), dv_top(p->right));
    auto* a = as_arrow(at);
    TypePtr cod = a->cod;
    return dv_fun([cod](const Value&, const DiffValue&) { return dv_top(cod); });
}

// Shape-directed algebra. Sort checking keeps shapes aligned, so a mismatch
// here means a caller bug, not bad user input.

/// Quantale multiplication: addition at Real, lifted pointwise. Not
/// idempotent: 1 * 1 = 2.
inline DiffValue dv_mult(const DiffValue& a, const DiffValue& b) {
    if (auto* n = std::get_if<DiffValue::Num>(&a.node)) return dv_num(n->v + as_num(b));
    if (auto* t = std::get_if<DiffValue::Tup>(&a.node)) {
        auto* u = std::get_if<DiffValue::Tup>(&b.node);
        if (!u) fail(ErrorKind::Sort, "difference shape mismatch in multiplication");
        return dv_tup(dv_mult(*t->first, *u->first), dv_mult(*t->second, *u->second));
    }
    auto fa = std::get<DiffValue::Fun>(a.node).apply;
    auto* fbN = std::get_if<DiffValue::Fun>(&b.node);
    if (!fbN) fail(ErrorKind::Sort, "difference shape mismatch in multiplication");
    auto fb = fbN->apply;
    return dv_fun([fa, fb](const Value& v, const DiffValue& d) {
        return dv_mult(fa(v, d), fb(v, d));
    });
}

inline DiffValue dv_sup2(const DiffValue& a, const DiffValue& b) {
    if (auto* n = std::get_if<DiffValue::Num>(&a.node)) return dv_num(std::max(n->v, as_num(b)));
    if (auto* t = std::get_if<DiffValue::Tup>(&a.node)) {
        auto* u = std::get_if<DiffValue::Tup>(&b.node);
        if (!u) fail(ErrorKind::Sort, "difference shape mismatch in join");
        return dv_tup(dv_sup2(*t->first, *u->first), dv_sup2(*t->second, *u->second));
    }
    auto fa = std::get<DiffValue::Fun>(a.node).apply;
    auto* fbN = std::get_if<DiffValue::Fun>(&b.node);
    if (!fbN) fail(ErrorKind::Sort, "difference shape mismatch in join");
    auto fb = fbN->apply;
    return dv_fun([fa, fb](const Value& v, const DiffValue& d) {
        return dv_sup2(fa(v, d), fb(v, d));
    });
}

inline DiffValue dv_sup(const std::vector<DiffValue>& items, const TypePtr& at) {
    if (items.empty()) return dv_bottom(at);
    DiffValue acc = items[0];
    for (size_t i = 1; i < items.size(); i++) acc = dv_sup2(acc, items[i]);
    return acc;
}

// ---------------------------------------------------------------------------
// Evaluation of difference expressions against a point environment (term
// values) and a difference environment.
// ---------------------------------------------------------------------------

using PointEnv = std::map<std::string, Value>;
using DiffEnv = std::map<std::string, DiffValue>;

inline DiffValue diff_eval(const DiffExprPtr& d, const PointEnv& ptEnv, const DiffEnv& dEnv,
                           const PrimRegistry& reg = default_registry());

namespace diff_detail {

const long long kMaxIterCompose = 100000;

inline TermPtr close_term(const TermPtr& t, const PointEnv& ptEnv) {
    TermSubst s;
    for (auto& [name, v] : ptEnv) s[name] = value_to_term(v);
    return subst_term(t, s);
}

inline double real_eval(const RealExprPtr& r, const PointEnv& ptEnv, const DiffEnv& dEnv,
                        const PrimRegistry& reg) {
    return std::visit(
        overloaded{
            [&](const RealExpr::Lit& l) { return l.value; },
            [&](const RealExpr::PointRef& p) {
                auto it = ptEnv.find(p.name);
                if (it == ptEnv.end())
                    fail(ErrorKind::Eval, "unbound point variable: " + p.name);
                auto* rv = std::get_if<Value::RealV>(&it->second.node);
                if (!rv)
                    fail(ErrorKind::Eval, "point variable " + p.name + " is not a real here");
                return rv->v;
            },
            [&](const RealExpr::DiffRef& p) {
                auto it = dEnv.find(p.name);
                if (it == dEnv.end())
                    fail(ErrorKind::Eval, "unbound difference variable: " + p.name);
                return as_num(it->second);
            },
            [&](const RealExpr::PrimApp& p) {
                const PrimSpec& spec = reg.get(p.prim);
                std::vector<double> args;
                args.reserve(p.args.size());
                for (auto& a : p.args) args.push_back(real_eval(a, ptEnv, dEnv, reg));
                if ((int)args.size() != spec.arity)
                    fail(ErrorKind::Sort, "arity mismatch applying " + p.prim);
                return spec.eval(args);
            },
            [&](const RealExpr::SemApp& s) {
                std::vector<double> args;
                args.reserve(s.args.size());
                for (auto& a : s.args) args.push_back(real_eval(a, ptEnv, dEnv, reg));
                if (args.empty()) return nf_real(s.term, reg);
                TermPtr tuple = m_lit(args[0]);
                for (size_t i = 1; i < args.size(); i++)
                    tuple = m_pair(tuple, m_lit(args[i]));
                return nf_real(m_app(s.term, tuple), reg);
            },
        },
        r->node);
}

/// Evaluate a point argument. A bare point reference passes the environment
/// value through unchanged so non-real points survive; anything else must be
/// a real computation.
inline Value point_eval(const RealExprPtr& r, const PointEnv& ptEnv, const DiffEnv& dEnv,
                        const PrimRegistry& reg) {
    if (auto* p = std::get_if<RealExpr::PointRef>(&r->node)) {
        auto it = ptEnv.find(p->name);
        if (it == ptEnv.end()) fail(ErrorKind::Eval, "unbound point variable: " + p->name);
        return it->second;
    }
    return v_real(real_eval(r, ptEnv, dEnv, reg));
}

/// Left-nested products of reals flatten to a coordinate list.
inline void flatten_value(const Value& v, int n, const PrimRegistry& reg,
                          std::vector<double>& out) {
    if (n == 1) {
        auto* r = std::get_if<Value::RealV>(&v.node);
        if (!r) fail(ErrorKind::Eval, "diameter center has wrong tuple shape");
        out.push_back(r->v);
        return;
    }
    auto* p = std::get_if<Value::PairV>(&v.node);
    if (!p) fail(ErrorKind::Eval, "diameter center has wrong tuple shape");
    flatten_value(nf(p->first, reg), n - 1, reg, out);
    out.push_back(nf_real(p->second, reg));
}

inline void flatten_diff(const DiffValue& d, int n, std::vector<double>& out) {
    if (n == 1) {
        out.push_back(as_num(d));
        return;
    }
    auto* t = std::get_if<DiffValue::Tup>(&d.node);
    if (!t) fail(ErrorKind::Sort, "diameter radius has wrong tuple shape");
    flatten_diff(*t->first, n - 1, out);
    out.push_back(as_num(*t->second));
}

inline long long iter_count(double x) {
    return x < 0 ? 0 : (long long)std::floor(x) + 1;
}

} // namespace diff_detail

inline DiffValue diff_eval(const DiffExprPtr& d, const PointEnv& ptEnv, const DiffEnv& dEnv,
                           const PrimRegistry& reg) {
    using namespace diff_detail;
    return std::visit(
        overloaded{
            [&](const DiffExpr::Const& c) { return dv_num(c.value); },
            [&](const DiffExpr::Infinity&) { return dv_num(kInf); },
            [&](const DiffExpr::PointVar& p) {
                auto it = ptEnv.find(p.name);
                if (it == ptEnv.end())
                    fail(ErrorKind::Eval, "unbound point variable: " + p.name);
                auto* rv = std::get_if<Value::RealV>(&it->second.node);
                if (!rv)
                    fail(ErrorKind::Eval, "point variable " + p.name + " used as a difference "
                                                                       "but is not a real");
                return dv_num(rv->v);
            },
            [&](const DiffExpr::DiffVar& v) {
                auto it = dEnv.find(v.name);
                if (it == dEnv.end())
                    fail(ErrorKind::Eval, "unbound difference variable: " + v.name);
                return it->second;
            },
            [&](const DiffExpr::Add& a) {
                double x = as_num(diff_eval(a.lhs, ptEnv, dEnv, reg));
                double y = as_num(diff_eval(a.rhs, ptEnv, dEnv, reg));
                return dv_num(x + y);
            },
            [&](const DiffExpr::AbsReal& a) {
                double x = real_eval(a.arg, ptEnv, dEnv, reg);
                if (std::isnan(x)) fail(ErrorKind::Eval, "NaN inside a real expression");
                return dv_num(std::fabs(x));
            },
            [&](const DiffExpr::DLam& l) {
                DiffExprPtr body = l.body;
                std::string pn = l.pointName, dn = l.diffName;
                PointEnv pe = ptEnv;
                DiffEnv de = dEnv;
                const PrimRegistry* regp = &reg;
                return dv_fun([body, pn, dn, pe, de, regp](const Value& v, const DiffValue& dv) {
                    PointEnv pe2 = pe;
                    DiffEnv de2 = de;
                    pe2.insert_or_assign(pn, v);
                    de2.insert_or_assign(dn, dv);
                    return diff_eval(body, pe2, de2, *regp);
                });
            },
            [&](const DiffExpr::DApp& a) {
                DiffValue fv = diff_eval(a.fun, ptEnv, dEnv, reg);
                auto* f = std::get_if<DiffValue::Fun>(&fv.node);
                if (!f) fail(ErrorKind::Sort, "application of a non-function difference");
                Value pt = std::holds_alternative<RealExprPtr>(a.point)
                               ? point_eval(std::get<RealExprPtr>(a.point), ptEnv, dEnv, reg)
                               : nf(close_term(std::get<TermPtr>(a.point), ptEnv), reg);
                DiffValue dv = diff_eval(a.diff, ptEnv, dEnv, reg);
                return f->apply(pt, dv);
            },
            [&](const DiffExpr::DPair& p) {
                return dv_tup(diff_eval(p.first, ptEnv, dEnv, reg),
                              diff_eval(p.second, ptEnv, dEnv, reg));
            },
            [&](const DiffExpr::DFst& p) {
                DiffValue v = diff_eval(p.arg, ptEnv, dEnv, reg);
                auto* t = std::get_if<DiffValue::Tup>(&v.node);
                if (!t) fail(ErrorKind::Sort, "first projection of a non-pair difference");
                return *t->first;
            },
            [&](const DiffExpr::DSnd& p) {
                DiffValue v = diff_eval(p.arg, ptEnv, dEnv, reg);
                auto* t = std::get_if<DiffValue::Tup>(&v.node);
                if (!t) fail(ErrorKind::Sort, "second projection of a non-pair difference");
                return *t->second;
            },
            [&](const DiffExpr::FinSup& s) {
                if (s.items.empty()) {
                    if (!s.emptySort)
                        fail(ErrorKind::Sort,
                             "empty sup lacks a sort annotation; sort check it first");
                    return dv_bottom(*s.emptySort);
                }
                DiffValue acc = diff_eval(s.items[0], ptEnv, dEnv, reg);
                for (size_t i = 1; i < s.items.size(); i++)
                    acc = dv_sup2(acc, diff_eval(s.items[i], ptEnv, dEnv, reg));
                return acc;
            },
            [&](const DiffExpr::PrimDiam& p) {
                const PrimSpec& spec = reg.get(p.prim);
                Value center = point_eval(p.center, ptEnv, dEnv, reg);
                DiffValue radius = diff_eval(p.radius, ptEnv, dEnv, reg);
                std::vector<double> centers, radii;
                flatten_value(center, spec.arity, reg, centers);
                flatten_diff(radius, spec.arity, radii);
                return dv_num(prim_diameter_box(spec, centers, radii));
            },
            [&](const DiffExpr::GuardIfz& g) {
                double r = real_eval(g.scrut, ptEnv, dEnv, reg);
                double e = as_num(diff_eval(g.radius, ptEnv, dEnv, reg));
                if (std::isnan(r) || std::isinf(e)) return dv_top(g.sort);
                if (r + e < 0) return diff_eval(g.dThen, ptEnv, dEnv, reg);
                if (r - e >= 0) return diff_eval(g.dElse, ptEnv, dEnv, reg);
                return dv_top(g.sort);
            },
            [&](const DiffExpr::GuardIter& g) {
                double r = real_eval(g.scrut, ptEnv, dEnv, reg);
                double e = as_num(diff_eval(g.radius, ptEnv, dEnv, reg));
                if (std::isnan(r) || std::isinf(e)) return dv_top(g.sort);
                // The unrolling count must be constant across the whole
                // window, otherwise the two sides iterate different numbers
                // of times and no finite branch bound applies.
                if (iter_count(r - e) != iter_count(r + e)) return dv_top(g.sort);
                long long n = iter_count(r);
                if (n > kMaxIterCompose)
                    fail(ErrorKind::FuelExhausted, "iteration difference window too long");
                DiffValue acc = diff_eval(g.dBase, ptEnv, dEnv, reg);
                if (n == 0) return acc;
                DiffValue stepD = diff_eval(g.dStep, ptEnv, dEnv, reg);
                auto* stepF = std::get_if<DiffValue::Fun>(&stepD.node);
                if (!stepF) fail(ErrorKind::Sort, "iteration step difference is not a function");
                TermPtr stepC = close_term(g.step, ptEnv);
                TermPtr baseC = close_term(g.base, ptEnv);
                Value v = nf(baseC, reg);
                for (long long k = 1; k <= n; k++) {
                    acc = stepF->apply(v, acc);
                    if (k < n) v = nf(m_app(stepC, value_to_term(v)), reg);
                }
                return acc;
            },
        },
        d->node);
}

// ---------------------------------------------------------------------------
// Symbolic quantale structure: expression-level unit, multiplication, and
// finite joins at every sort. Evaluation commutes with these constructions.
// ---------------------------------------------------------------------------

inline DiffExprPtr bottom_expr(const TypePtr& at) {
    if (is_real(at)) return d_const(0);
    if (auto* p = as_prod(at)) return d_pair(bottom_expr(p->left), bottom_expr(p->right));
    auto* a = as_arrow(at);
    return d_lam("x", "e", bottom_expr(a->cod));
}

inline DiffExprPtr top_expr(const TypePtr& at) {
    if (is_real(at)) return d_inf();
    if (auto* p = as_prod(at)) return d_pair(top_expr(p->left), top_expr(p->right));
    auto* a = as_arrow(at);
    return d_lam("x", "e", top_expr(a->cod));
}

/// The quantale unit is the lifted zero, which is also the least element.
inline DiffExprPtr quantale_unit(const TypePtr& at) { return bottom_expr(at); }

namespace diff_detail {

inline PointArg binder_point_ref(const TypePtr& dom, const std::string& x) {
    if (is_real(dom)) return PointArg{r_point(x)};
    return PointArg{m_var(x)};
}

inline std::pair<std::string, std::string> fresh_pair(const std::set<std::string>& avoidIn) {
    std::set<std::string> avoid = avoidIn;
    std::string x = fresh_name("x", avoid);
    avoid.insert(x);
    return {x, fresh_name("e", avoid)};
}

} // namespace diff_detail

inline DiffExprPtr quantale_mult(const DiffExprPtr& d1, const DiffExprPtr& d2,
                                 const TypePtr& at) {
    if (is_real(at)) return d_add(d1, d2);
    if (auto* p = as_prod(at))
        return d_pair(quantale_mult(d_fst(d1), d_fst(d2), p->left),
                      quantale_mult(d_snd(d1), d_snd(d2), p->right));
    auto* a = as_arrow(at);
    std::set<std::string> avoid;
    print_detail::collect_idents_diff(d1, avoid);
    print_detail::collect_idents_diff(d2, avoid);
    auto [x, e] = diff_detail::fresh_pair(avoid);
    PointArg pt = diff_detail::binder_point_ref(a->dom, x);
    return d_lam(x, e,
                 quantale_mult(d_app(d1, pt, d_var(e)), d_app(d2, pt, d_var(e)), a->cod));
}

inline DiffExprPtr finite_sup(const std::vector<DiffExprPtr>& items, const TypePtr& at) {
    if (items.empty()) return d_sup({}, at);
    if (is_real(at)) return d_sup(items, at);
    if (auto* p = as_prod(at)) {
        std::vector<DiffExprPtr> ls, rs;
        for (auto& i : items) {
            ls.push_back(d_fst(i));
            rs.push_back(d_snd(i));
        }
        return d_pair(finite_sup(ls, p->left), finite_sup(rs, p->right));
    }
    auto* a = as_arrow(at);
    std::set<std::string> avoid;
    for (auto& i : items) print_detail::collect_idents_diff(i, avoid);
    auto [x, e] = diff_detail::fresh_pair(avoid);
    PointArg pt = diff_detail::binder_point_ref(a->dom, x);
    std::vector<DiffExprPtr> apps;
    apps.reserve(items.size());
    for (auto& i : items) apps.push_back(d_app(i, pt, d_var(e)));
    return d_lam(x, e, finite_sup(apps, a->cod));
}

// ---------------------------------------------------------------------------
// Verdicts and witnesses. Checks over arrow sorts are sampled, so a passing
// verdict distinguishes exact from sampled evidence; failures carry a replay
// witness describing the path from the top-level sort to the violated leaf.
// ---------------------------------------------------------------------------

enum class VerdictStatus { ExactPass, ExactFail, PassSampled, Counterexample };

inline const char* verdict_status_name(VerdictStatus s) {
    switch (s) {
    case VerdictStatus::ExactPass: return "exact_pass";
    case VerdictStatus::ExactFail: return "exact_fail";
    case VerdictStatus::PassSampled: return "pass_sampled";
    case VerdictStatus::Counterexample: return "counterexample";
    }
    return "unknown";
}

inline bool verdict_passed(VerdictStatus s) {
    return s == VerdictStatus::ExactPass || s == VerdictStatus::PassSampled;
}

struct WitnessStep {
    enum class Kind { Apply, ProjL, ProjR } kind;
    std::string point;       // printed argument value the check applied
    std::string counterpart; // second argument family, when the check uses one
    std::string diff;        // printed difference fed to the premise
    bool swapped = false;    // conclusion used the crossed application
};

struct Witness {
    std::vector<WitnessStep> path;
    std::string relation; // violated leaf relation, human readable
    double lhs = 0, rhs = 0;
    std::string detail;
};

struct Verdict {
    VerdictStatus status = VerdictStatus::ExactPass;
    long long trials = 0;
    std::uint64_t seed = 0;
    std::optional<Witness> witness;

    Verdict() = default;
    explicit Verdict(VerdictStatus s) : status(s) {}
};

inline nlohmann::ordered_json witness_to_json(const Witness& w) {
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (auto& s : w.path) {
        nlohmann::ordered_json step;
        step["kind"] = s.kind == WitnessStep::Kind::Apply ? "apply"
                       : s.kind == WitnessStep::Kind::ProjL ? "fst"
                                                            : "snd";
        if (!s.point.empty()) step["point"] = s.point;
        if (!s.counterpart.empty()) step["counterpart"] = s.counterpart;
        if (!s.diff.empty()) step["diff"] = s.diff;
        if (s.swapped) step["swapped"] = true;
        steps.push_back(std::move(step));
    }
    nlohmann::ordered_json j;
    j["path"] = std::move(steps);
    j["relation"] = w.relation;
    j["lhs"] = format_double(w.lhs);
    j["rhs"] = format_double(w.rhs);
    if (!w.detail.empty()) j["detail"] = w.detail;
    return j;
}

inline nlohmann::ordered_json verdict_to_json(const Verdict& v) {
    nlohmann::ordered_json j;
    j["status"] = verdict_status_name(v.status);
    j["trials"] = v.trials;
    j["seed"] = v.seed;
    if (v.witness) j["witness"] = witness_to_json(*v.witness);
    else j["witness"] = nullptr;
    return j;
}

/// Merge the verdict class of a subcheck into an accumulator: any failure
/// wins, sampled evidence taints exactness.
inline void verdict_absorb(Verdict& acc, const Verdict& sub) {
    if (!verdict_passed(sub.status)) {
        if (verdict_passed(acc.status)) {
            acc.status = sub.status;
            acc.witness = sub.witness;
        }
        return;
    }
    if (!verdict_passed(acc.status)) return;
    if (sub.status == VerdictStatus::PassSampled && acc.status == VerdictStatus::ExactPass)
        acc.status = VerdictStatus::PassSampled;
}

} // namespace stlr
