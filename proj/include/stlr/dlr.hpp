#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stlr/diffspace.hpp"
#include "stlr/error.hpp"
#include "stlr/eval.hpp"
#include "stlr/parser.hpp"
#include "stlr/printer.hpp"
#include "stlr/sampler.hpp"
#include "stlr/sensitivity.hpp"
#include "stlr/syntax.hpp"
#include "stlr/typecheck.hpp"

namespace stlr {

namespace dlr_detail {

struct CheckCtx {
    Sampler& s;
    const PrimRegistry& reg;
    std::vector<WitnessStep> path;
};

inline bool path_sampled(const std::vector<WitnessStep>& path) {
    for (auto& s : path)
        if (s.kind == WitnessStep::Kind::Apply) return true;
    return false;
}

inline Verdict leaf_fail(const CheckCtx& c, std::string relation, double lhs, double rhs,
                         std::string detail) {
    Verdict v;
    v.status = path_sampled(c.path) ? VerdictStatus::Counterexample : VerdictStatus::ExactFail;
    Witness w;
    w.path = c.path;
    w.relation = std::move(relation);
    w.lhs = lhs;
    w.rhs = rhs;
    w.detail = std::move(detail);
    v.witness = std::move(w);
    return v;
}

inline Verdict dlr_rec(CheckCtx& c, const TermPtr& M, const DiffValue& d, const TermPtr& N,
                       const TypePtr& at, long long trials) {
    if (is_real(at)) {
        double lm = nf_real(M, c.reg);
        double ln = nf_real(N, c.reg);
        double gap = std::fabs(lm - ln);
        double bound = as_num(d);
        if (gap <= bound) return Verdict{VerdictStatus::ExactPass};
        return leaf_fail(c, "dlr", gap, bound,
                         "|" + format_double(lm) + " - " + format_double(ln) +
                             "| exceeds the difference bound");
    }
    if (auto* p = as_prod(at)) {
        auto* t = std::get_if<DiffValue::Tup>(&d.node);
        if (!t) fail(ErrorKind::Sort, "difference is not a pair at a product type");
        Verdict acc{VerdictStatus::ExactPass};
        c.path.push_back({WitnessStep::Kind::ProjL, "", "", "", false});
        Verdict l = dlr_rec(c, m_app(m_proj1(), M), *t->first, m_app(m_proj1(), N), p->left,
                            trials);
        c.path.pop_back();
        verdict_absorb(acc, l);
        if (!verdict_passed(acc.status)) return acc;
        c.path.push_back({WitnessStep::Kind::ProjR, "", "", "", false});
        Verdict r = dlr_rec(c, m_app(m_proj2(), M), *t->second, m_app(m_proj2(), N), p->right,
                            trials);
        c.path.pop_back();
        verdict_absorb(acc, r);
        return acc;
    }
    auto* a = as_arrow(at);
    auto* f = std::get_if<DiffValue::Fun>(&d.node);
    if (!f) fail(ErrorKind::Sort, "difference is not a function at an arrow type");
    long long inner = c.s.config().innerTrials;
    for (long long t = 0; t < trials; t++) {
        Sampler::Premise p = c.s.gen_premise(a->dom, c.reg);
        Value pv = nf(p.v, c.reg);
        DiffValue dOut = f->apply(pv, p.y);
        bool samePoint = p.v == p.w;
        for (int swap = 0; swap < (samePoint ? 1 : 2); swap++) {
            const TermPtr& argM = swap ? p.w : p.v;
            const TermPtr& argN = swap ? p.v : p.w;
            c.path.push_back({WitnessStep::Kind::Apply, print_term(p.v), print_term(p.w),
                              print_diff(p.yExpr), swap == 1});
            Verdict sub =
                dlr_rec(c, m_app(M, argM), dOut, m_app(N, argN), a->cod, inner);
            c.path.pop_back();
            if (!verdict_passed(sub.status)) return sub;
        }
    }
    return Verdict{VerdictStatus::PassSampled};
}

} // namespace dlr_detail

/// Sampled membership check of the triple (M, d, N) in the relation at `at`.
/// Exact at first order; arrow layers sample premise triples for which the
/// premise relation holds by construction and check both conclusions,
/// including the crossed applications.
inline Verdict dlr_check(const TermPtr& M, const DiffExprPtr& d, const TermPtr& N,
                         const TypePtr& at, Sampler& s, long long trials,
                         const PrimRegistry& reg = default_registry()) {
    if (!is_closed(M) || !is_closed(N))
        fail(ErrorKind::Type, "relation check requires closed terms");
    check_against(TypeEnv{}, M, at, reg);
    check_against(TypeEnv{}, N, at, reg);
    sort_check(d, at, DiffCtx{}, reg);
    DiffValue dv = diff_eval(d, {}, {}, reg);
    dlr_detail::CheckCtx c{s, reg, {}};
    Verdict v = dlr_detail::dlr_rec(c, M, dv, N, at, trials);
    v.trials = trials;
    v.seed = s.seed();
    return v;
}

/// Runs the check in both orders from identical sampler states; the verdict
/// classes must agree. Returns the forward verdict on agreement.
inline Verdict symmetry_swap(const TermPtr& M, const DiffExprPtr& d, const TermPtr& N,
                             const TypePtr& at, const Sampler& proto, long long trials,
                             const PrimRegistry& reg = default_registry()) {
    Sampler fwd(proto.config(), proto.seed());
    Sampler bwd(proto.config(), proto.seed());
    Verdict vf = dlr_check(M, d, N, at, fwd, trials, reg);
    Verdict vb = dlr_check(N, d, M, at, bwd, trials, reg);
    if (verdict_passed(vf.status) == verdict_passed(vb.status)) return vf;
    Verdict v;
    v.status = VerdictStatus::Counterexample;
    v.trials = trials;
    v.seed = proto.seed();
    Witness w;
    w.relation = "symmetry";
    w.detail = "forward " + std::string(verdict_status_name(vf.status)) + ", backward " +
               std::string(verdict_status_name(vb.status));
    if (verdict_passed(vf.status) && vb.witness) w.path = vb.witness->path;
    if (!verdict_passed(vf.status) && vf.witness) w.path = vf.witness->path;
    v.witness = std::move(w);
    return v;
}

// ---------------------------------------------------------------------------
// Distinguished-subset membership: the null, metric, and finite subsets.
// Refutation-sound, verification-incomplete at arrow sorts.
// ---------------------------------------------------------------------------

enum class SubsetKind { Null, Metric, Finite };

namespace dlr_detail {

struct DiffSample {
    DiffValue v;
    DiffExprPtr expr;
};

inline DiffSample finite_diff_sample(Sampler& s, const TypePtr& at, const PrimRegistry& reg) {
    if (is_real(at)) {
        double x = std::fabs(s.point_real());
        return {dv_num(x), d_const(x)};
    }
    if (auto* p = as_prod(at)) {
        DiffSample l = finite_diff_sample(s, p->left, reg);
        DiffSample r = finite_diff_sample(s, p->right, reg);
        return {dv_tup(l.v, r.v), d_pair(l.expr, r.expr)};
    }
    if (type_order(at) > s.config().genDepth)
        fail(ErrorKind::Generator,
             "finite membership sampling exhausted at deep higher-order types");
    GenConfig g;
    g.depth = s.config().genDepth;
    TermPtr v = s.gen_value(at, g, reg);
    DerivedDistance dd = derive_self_distance(TypeEnv{}, v, at, reg);
    return {diff_eval(dd.expr, {}, {}, reg), dd.expr};
}

inline DiffExprPtr metric_member_expr(const TypePtr& at, double s) {
    if (is_real(at)) return d_const(s);
    if (auto* p = as_prod(at))
        return d_pair(metric_member_expr(p->left, s), metric_member_expr(p->right, s));
    fail(ErrorKind::Generator,
         "metric membership sampling is not supported above first-order premise types");
}

/// Arbitrary difference of the sort, for order comparisons: extremes and
/// derived distances all appear.
inline DiffSample any_diff_sample(Sampler& s, const TypePtr& at, const PrimRegistry& reg) {
    switch (s.index(3)) {
    case 0: {
        DiffExprPtr e = bottom_expr(at);
        return {diff_eval(e, {}, {}, reg), e};
    }
    case 1: {
        DiffExprPtr e = top_expr(at);
        return {diff_eval(e, {}, {}, reg), e};
    }
    default: return finite_diff_sample(s, at, reg);
    }
}

inline Verdict member_rec(CheckCtx& c, const DiffValue& d, const TypePtr& at, SubsetKind k,
                          double level, long long trials) {
    if (is_real(at)) {
        double x = as_num(d);
        switch (k) {
        case SubsetKind::Null:
            if (x == 0) return Verdict{VerdictStatus::ExactPass};
            return leaf_fail(c, "null", x, 0, "difference is not zero");
        case SubsetKind::Metric:
            if (x == level) return Verdict{VerdictStatus::ExactPass};
            return leaf_fail(c, "metric", x, level, "difference is off the metric level");
        case SubsetKind::Finite:
            if (!std::isinf(x)) return Verdict{VerdictStatus::ExactPass};
            return leaf_fail(c, "finite", x, 0, "difference is infinite");
        }
    }
    if (auto* p = as_prod(at)) {
        auto* t = std::get_if<DiffValue::Tup>(&d.node);
        if (!t) fail(ErrorKind::Sort, "difference is not a pair at a product type");
        Verdict acc{VerdictStatus::ExactPass};
        c.path.push_back({WitnessStep::Kind::ProjL, "", "", "", false});
        verdict_absorb(acc, member_rec(c, *t->first, p->left, k, level, trials));
        c.path.pop_back();
        if (!verdict_passed(acc.status)) return acc;
        c.path.push_back({WitnessStep::Kind::ProjR, "", "", "", false});
        verdict_absorb(acc, member_rec(c, *t->second, p->right, k, level, trials));
        c.path.pop_back();
        return acc;
    }
    auto* a = as_arrow(at);
    auto* f = std::get_if<DiffValue::Fun>(&d.node);
    if (!f) fail(ErrorKind::Sort, "difference is not a function at an arrow type");
    long long inner = c.s.config().innerTrials;
    GenConfig g;
    g.depth = c.s.config().genDepth;
    for (long long t = 0; t < trials; t++) {
        TermPtr vT = c.s.gen_value(a->dom, g, c.reg);
        DiffSample y;
        double nextLevel = level;
        switch (k) {
        case SubsetKind::Null:
            y = {dv_bottom(a->dom), bottom_expr(a->dom)};
            break;
        case SubsetKind::Metric: {
            double step = c.s.uniform(0.0, c.s.config().offsetMax);
            y = {c.s.gen_metric_member(a->dom, step), metric_member_expr(a->dom, step)};
            nextLevel = level + step;
            break;
        }
        case SubsetKind::Finite:
            y = finite_diff_sample(c.s, a->dom, c.reg);
            break;
        }
        Value pv = nf(vT, c.reg);
        DiffValue dOut = f->apply(pv, y.v);
        c.path.push_back(
            {WitnessStep::Kind::Apply, print_term(vT), "", print_diff(y.expr), false});
        Verdict sub = member_rec(c, dOut, a->cod, k, nextLevel, inner);
        c.path.pop_back();
        if (!verdict_passed(sub.status)) return sub;
    }
    return Verdict{VerdictStatus::PassSampled};
}

} // namespace dlr_detail

inline Verdict subset_check(const DiffExprPtr& d, const TypePtr& at, SubsetKind k, double level,
                            Sampler& s, long long trials,
                            const PrimRegistry& reg = default_registry()) {
    sort_check(d, at, DiffCtx{}, reg);
    DiffValue dv = diff_eval(d, {}, {}, reg);
    dlr_detail::CheckCtx c{s, reg, {}};
    Verdict v = dlr_detail::member_rec(c, dv, at, k, level, trials);
    v.trials = trials;
    v.seed = s.seed();
    return v;
}

inline Verdict null_check(const DiffExprPtr& d, const TypePtr& at, Sampler& s, long long trials,
                          const PrimRegistry& reg = default_registry()) {
    return subset_check(d, at, SubsetKind::Null, 0, s, trials, reg);
}

inline Verdict metric_check(const DiffExprPtr& d, const TypePtr& at, double r, Sampler& s,
                            long long trials, const PrimRegistry& reg = default_registry()) {
    if (r < 0 || std::isnan(r)) fail(ErrorKind::Config, "metric level must be nonnegative");
    return subset_check(d, at, SubsetKind::Metric, r, s, trials, reg);
}

inline Verdict finite_check(const DiffExprPtr& d, const TypePtr& at, Sampler& s, long long trials,
                            const PrimRegistry& reg = default_registry()) {
    return subset_check(d, at, SubsetKind::Finite, 0, s, trials, reg);
}

// ---------------------------------------------------------------------------
// Pointwise order between two differences of the same sort.
// ---------------------------------------------------------------------------

namespace dlr_detail {

inline Verdict leq_rec(CheckCtx& c, const DiffValue& a, const DiffValue& b, const TypePtr& at,
                       long long trials) {
    if (is_real(at)) {
        double x = as_num(a), y = as_num(b);
        if (x <= y) return Verdict{VerdictStatus::ExactPass};
        return leaf_fail(c, "leq", x, y, "left difference exceeds right");
    }
    if (auto* p = as_prod(at)) {
        auto* ta = std::get_if<DiffValue::Tup>(&a.node);
        auto* tb = std::get_if<DiffValue::Tup>(&b.node);
        if (!ta || !tb) fail(ErrorKind::Sort, "difference is not a pair at a product type");
        Verdict acc{VerdictStatus::ExactPass};
        c.path.push_back({WitnessStep::Kind::ProjL, "", "", "", false});
        verdict_absorb(acc, leq_rec(c, *ta->first, *tb->first, p->left, trials));
        c.path.pop_back();
        if (!verdict_passed(acc.status)) return acc;
        c.path.push_back({WitnessStep::Kind::ProjR, "", "", "", false});
        verdict_absorb(acc, leq_rec(c, *ta->second, *tb->second, p->right, trials));
        c.path.pop_back();
        return acc;
    }
    auto* ar = as_arrow(at);
    auto* fa = std::get_if<DiffValue::Fun>(&a.node);
    auto* fb = std::get_if<DiffValue::Fun>(&b.node);
    if (!fa || !fb) fail(ErrorKind::Sort, "difference is not a function at an arrow type");
    long long inner = c.s.config().innerTrials;
    GenConfig g;
    g.depth = c.s.config().genDepth;
    for (long long t = 0; t < trials; t++) {
        TermPtr vT = c.s.gen_value(ar->dom, g, c.reg);
        DiffSample y = any_diff_sample(c.s, ar->dom, c.reg);
        Value pv = nf(vT, c.reg);
        c.path.push_back(
            {WitnessStep::Kind::Apply, print_term(vT), "", print_diff(y.expr), false});
        Verdict sub = leq_rec(c, fa->apply(pv, y.v), fb->apply(pv, y.v), ar->cod, inner);
        c.path.pop_back();
        if (!verdict_passed(sub.status)) return sub;
    }
    return Verdict{VerdictStatus::PassSampled};
}

} // namespace dlr_detail

inline Verdict leq_check(const DiffExprPtr& d1, const DiffExprPtr& d2, const TypePtr& at,
                         Sampler& s, long long trials,
                         const PrimRegistry& reg = default_registry()) {
    sort_check(d1, at, DiffCtx{}, reg);
    sort_check(d2, at, DiffCtx{}, reg);
    DiffValue a = diff_eval(d1, {}, {}, reg);
    DiffValue b = diff_eval(d2, {}, {}, reg);
    dlr_detail::CheckCtx c{s, reg, {}};
    Verdict v = dlr_detail::leq_rec(c, a, b, at, trials);
    v.trials = trials;
    v.seed = s.seed();
    return v;
}

// ---------------------------------------------------------------------------
// Weak boundedness: a term is weakly bounded when every primitive occurring
// in it carries the registry flag.
// ---------------------------------------------------------------------------

inline bool weakly_bounded(const TermPtr& t, const PrimRegistry& reg = default_registry()) {
    bool ok = true;
    std::function<void(const TermPtr&)> walk = [&](const TermPtr& u) {
        std::visit(overloaded{
                       [&](const Term::Var&) {},
                       [&](const Term::Lit&) {},
                       [&](const Term::Prim& p) {
                           if (!reg.get(p.name).weakBounded) ok = false;
                       },
                       [&](const Term::Lam& l) { walk(l.body); },
                       [&](const Term::App& a) {
                           walk(a.fun);
                           walk(a.arg);
                       },
                       [&](const Term::Pair& p) {
                           walk(p.first);
                           walk(p.second);
                       },
                       [&](const Term::Proj1&) {},
                       [&](const Term::Proj2&) {},
                       [&](const Term::Ifz& i) {
                           walk(i.thenNeg);
                           walk(i.elseNonneg);
                       },
                       [&](const Term::Iter& i) {
                           walk(i.step);
                           walk(i.base);
                       },
                   },
                   u->node);
    };
    walk(t);
    return ok;
}

// ---------------------------------------------------------------------------
// Witness replay: a recorded counterexample re-verifies deterministically
// from its printed path, with no sampling involved.
// ---------------------------------------------------------------------------

namespace dlr_detail {

struct ReplayState {
    TermPtr m, n;
    DiffValue d;
    TypePtr at;
};

inline void replay_step(ReplayState& st, const WitnessStep& step, const PrimRegistry& reg) {
    switch (step.kind) {
    case WitnessStep::Kind::Apply: {
        auto* a = as_arrow(st.at);
        if (!a) fail(ErrorKind::Sort, "witness applies at a non-arrow sort");
        TermPtr v = parse_term(step.point, reg);
        TermPtr w = step.counterpart.empty() ? v : parse_term(step.counterpart, reg);
        DiffExprPtr yE = parse_diff(step.diff, a->dom, reg);
        DiffValue y = diff_eval(yE, {}, {}, reg);
        auto* f = std::get_if<DiffValue::Fun>(&st.d.node);
        if (!f) fail(ErrorKind::Sort, "witness applies a non-function difference");
        st.d = f->apply(nf(v, reg), y);
        if (st.m) st.m = m_app(st.m, step.swapped ? w : v);
        if (st.n) st.n = m_app(st.n, step.swapped ? v : w);
        st.at = a->cod;
        return;
    }
    case WitnessStep::Kind::ProjL:
    case WitnessStep::Kind::ProjR: {
        auto* p = as_prod(st.at);
        if (!p) fail(ErrorKind::Sort, "witness projects at a non-product sort");
        bool left = step.kind == WitnessStep::Kind::ProjL;
        auto* t = std::get_if<DiffValue::Tup>(&st.d.node);
        if (!t) fail(ErrorKind::Sort, "witness projects a non-pair difference");
        st.d = left ? *t->first : *t->second;
        TermPtr proj = left ? m_proj1() : m_proj2();
        if (st.m) st.m = m_app(proj, st.m);
        if (st.n) st.n = m_app(proj, st.n);
        st.at = left ? p->left : p->right;
        return;
    }
    }
}

} // namespace dlr_detail

/// True when the recorded relation violation reproduces from the witness.
inline bool replay_dlr_witness(const TermPtr& M, const DiffExprPtr& d, const TermPtr& N,
                               const TypePtr& at, const Witness& w,
                               const PrimRegistry& reg = default_registry()) {
    dlr_detail::ReplayState st{M, N, diff_eval(d, {}, {}, reg), at};
    for (auto& step : w.path) dlr_detail::replay_step(st, step, reg);
    if (!is_real(st.at)) fail(ErrorKind::Sort, "witness leaf is not at the real sort");
    double gap = std::fabs(nf_real(st.m, reg) - nf_real(st.n, reg));
    return !(gap <= as_num(st.d));
}

/// Replay for subset-membership witnesses; the metric level is reconstructed
/// from the recorded premise differences along the path.
inline bool replay_subset_witness(const DiffExprPtr& d, const TypePtr& at, SubsetKind k,
                                  double level, const Witness& w,
                                  const PrimRegistry& reg = default_registry()) {
    dlr_detail::ReplayState st{nullptr, nullptr, diff_eval(d, {}, {}, reg), at};
    for (auto& step : w.path) {
        if (k == SubsetKind::Metric && step.kind == WitnessStep::Kind::Apply) {
            auto* a = as_arrow(st.at);
            if (!a) fail(ErrorKind::Sort, "witness applies at a non-arrow sort");
            DiffValue y = diff_eval(parse_diff(step.diff, a->dom, reg), {}, {}, reg);
            const DiffValue* leaf = &y;
            while (auto* t = std::get_if<DiffValue::Tup>(&leaf->node)) leaf = t->first.get();
            level += as_num(*leaf);
        }
        dlr_detail::replay_step(st, step, reg);
    }
    if (!is_real(st.at)) fail(ErrorKind::Sort, "witness leaf is not at the real sort");
    double x = as_num(st.d);
    switch (k) {
    case SubsetKind::Null: return x != 0;
    case SubsetKind::Metric: return x != level;
    case SubsetKind::Finite: return std::isinf(x);
    }
    return false;
}

} // namespace stlr
