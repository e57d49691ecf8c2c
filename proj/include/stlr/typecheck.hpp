#pragma once

#include <map>
#include <optional>
#include <string>

#include "stlr/error.hpp"
#include "stlr/prims.hpp"
#include "stlr/printer.hpp"
#include "stlr/syntax.hpp"

namespace stlr {

/// Typing context. Extension shadows, so each name is bound at most once.
class TypeEnv {
public:
    TypeEnv() = default;

    TypeEnv extended(const std::string& name, TypePtr type) const {
        TypeEnv e = *this;
        e.vars_[name] = std::move(type);
        return e;
    }

    std::optional<TypePtr> lookup(const std::string& name) const {
        auto it = vars_.find(name);
        if (it == vars_.end()) return std::nullopt;
        return it->second;
    }

    bool empty() const { return vars_.empty(); }
    const std::map<std::string, TypePtr>& bindings() const { return vars_; }

private:
    std::map<std::string, TypePtr> vars_;
};

inline TypePtr infer(const TypeEnv& env, const TermPtr& t,
                     const PrimRegistry& reg = default_registry());
inline void check_against(const TypeEnv& env, const TermPtr& t, const TypePtr& expect,
                          const PrimRegistry& reg = default_registry());

namespace tc_detail {

[[noreturn]] inline void mismatch(const TermPtr& t, const TypePtr& expect, const TypePtr& got) {
    fail(ErrorKind::Type, "type mismatch for `" + print_term(t) + "`: expected " +
                              print_type(expect) + ", got " + print_type(got));
}

inline TypePtr prim_type(const Term::Prim& p, const PrimRegistry& reg) {
    const PrimSpec& spec = reg.get(p.name);
    if (spec.arity != p.arity)
        fail(ErrorKind::Type, "primitive arity mismatch for " + p.name);
    if (spec.arity == 1) return t_arrow(t_real(), t_real());
    return t_arrow(t_real_pow(spec.arity), t_real());
}

} // namespace tc_detail

inline TypePtr infer(const TypeEnv& env, const TermPtr& t, const PrimRegistry& reg) {
    return std::visit(
        overloaded{
            [&](const Term::Var& v) -> TypePtr {
                if (auto ty = env.lookup(v.name)) return *ty;
                fail(ErrorKind::Type, "unbound variable: " + v.name);
            },
            [&](const Term::Lit&) -> TypePtr { return t_real(); },
            [&](const Term::Prim& p) -> TypePtr { return tc_detail::prim_type(p, reg); },
            [&](const Term::Lam& l) -> TypePtr {
                return t_arrow(l.annot, infer(env.extended(l.binder, l.annot), l.body, reg));
            },
            [&](const Term::App& a) -> TypePtr {
                // Bare projections are schematic; resolve them from the
                // argument type before falling back to function-first order.
                if (std::holds_alternative<Term::Proj1>(a.fun->node) ||
                    std::holds_alternative<Term::Proj2>(a.fun->node)) {
                    TypePtr argTy = infer(env, a.arg, reg);
                    auto* prod = as_prod(argTy);
                    if (!prod)
                        fail(ErrorKind::Type, "projection applied to non-product `" +
                                                  print_term(a.arg) + "` of type " +
                                                  print_type(argTy));
                    return std::holds_alternative<Term::Proj1>(a.fun->node) ? prod->left
                                                                            : prod->right;
                }
                TypePtr funTy = infer(env, a.fun, reg);
                auto* arrow = as_arrow(funTy);
                if (!arrow)
                    fail(ErrorKind::Type, "application of non-function `" + print_term(a.fun) +
                                              "` of type " + print_type(funTy));
                check_against(env, a.arg, arrow->dom, reg);
                return arrow->cod;
            },
            [&](const Term::Pair& p) -> TypePtr {
                return t_prod(infer(env, p.first, reg), infer(env, p.second, reg));
            },
            [&](const Term::Proj1&) -> TypePtr {
                fail(ErrorKind::Type, "ambiguous constant: fst needs an expected type or argument");
            },
            [&](const Term::Proj2&) -> TypePtr {
                fail(ErrorKind::Type, "ambiguous constant: snd needs an expected type or argument");
            },
            [&](const Term::Ifz& i) -> TypePtr {
                TypePtr thenTy = infer(env, i.thenNeg, reg);
                check_against(env, i.elseNonneg, thenTy, reg);
                return t_arrow(t_real(), thenTy);
            },
            [&](const Term::Iter& i) -> TypePtr {
                TypePtr stepTy = infer(env, i.step, reg);
                auto* arrow = as_arrow(stepTy);
                if (!arrow || !type_eq(arrow->dom, arrow->cod))
                    fail(ErrorKind::Type, "iter step must have type T -> T, got " +
                                              print_type(stepTy));
                check_against(env, i.base, arrow->dom, reg);
                return t_arrow(t_real(), arrow->dom);
            },
        },
        t->node);
}

inline void check_against(const TypeEnv& env, const TermPtr& t, const TypePtr& expect,
                          const PrimRegistry& reg) {
    std::visit(
        overloaded{
            [&](const Term::Lam& l) {
                auto* arrow = as_arrow(expect);
                if (!arrow)
                    fail(ErrorKind::Type, "lambda checked against non-arrow " + print_type(expect));
                if (!type_eq(l.annot, arrow->dom))
                    fail(ErrorKind::Type, "binder annotation " + print_type(l.annot) +
                                              " does not match expected domain " +
                                              print_type(arrow->dom));
                check_against(env.extended(l.binder, l.annot), l.body, arrow->cod, reg);
            },
            [&](const Term::Pair& p) {
                auto* prod = as_prod(expect);
                if (!prod)
                    fail(ErrorKind::Type, "pair checked against non-product " + print_type(expect));
                check_against(env, p.first, prod->left, reg);
                check_against(env, p.second, prod->right, reg);
            },
            [&](const Term::Proj1&) {
                auto* arrow = as_arrow(expect);
                const Type::Prod* prod = arrow ? as_prod(arrow->dom) : nullptr;
                if (!prod || !type_eq(arrow->cod, prod->left))
                    fail(ErrorKind::Type, "fst cannot have type " + print_type(expect));
            },
            [&](const Term::Proj2&) {
                auto* arrow = as_arrow(expect);
                const Type::Prod* prod = arrow ? as_prod(arrow->dom) : nullptr;
                if (!prod || !type_eq(arrow->cod, prod->right))
                    fail(ErrorKind::Type, "snd cannot have type " + print_type(expect));
            },
            [&](const Term::Ifz& i) {
                auto* arrow = as_arrow(expect);
                if (!arrow || !is_real(arrow->dom))
                    fail(ErrorKind::Type, "ifz cannot have type " + print_type(expect));
                check_against(env, i.thenNeg, arrow->cod, reg);
                check_against(env, i.elseNonneg, arrow->cod, reg);
            },
            [&](const Term::Iter& i) {
                auto* arrow = as_arrow(expect);
                if (!arrow || !is_real(arrow->dom))
                    fail(ErrorKind::Type, "iter cannot have type " + print_type(expect));
                check_against(env, i.step, t_arrow(arrow->cod, arrow->cod), reg);
                check_against(env, i.base, arrow->cod, reg);
            },
            [&](const auto&) {
                TypePtr got = infer(env, t, reg);
                if (!type_eq(got, expect)) tc_detail::mismatch(t, expect, got);
            },
        },
        t->node);
}

// ---------------------------------------------------------------------------
// Sort checking for difference expressions. The sort of a difference is
// indexed by the underlying type: Real carries extended nonnegative reals,
// arrows carry functions of a point and a difference, products are pairs.
// ---------------------------------------------------------------------------

struct DiffCtx {
    TypeEnv points; // term-level variables usable as point references
    std::map<std::string, TypePtr> diffs;

    DiffCtx with_point(const std::string& n, TypePtr t) const {
        DiffCtx c = *this;
        c.points = c.points.extended(n, std::move(t));
        return c;
    }
    DiffCtx with_diff(const std::string& n, TypePtr t) const {
        DiffCtx c = *this;
        c.diffs[n] = std::move(t);
        return c;
    }
};

inline void sort_check(const DiffExprPtr& d, const TypePtr& expect, const DiffCtx& ctx,
                       const PrimRegistry& reg = default_registry());

inline void real_sort_check(const RealExprPtr& r, const DiffCtx& ctx,
                            const PrimRegistry& reg = default_registry()) {
    std::visit(
        overloaded{
            [&](const RealExpr::Lit&) {},
            [&](const RealExpr::PointRef& p) {
                auto ty = ctx.points.lookup(p.name);
                if (!ty) fail(ErrorKind::Sort, "unbound point variable: " + p.name);
                if (!is_real(*ty))
                    fail(ErrorKind::Sort, "point variable " + p.name +
                                              " is not real-valued: " + print_type(*ty));
            },
            [&](const RealExpr::DiffRef& dr) {
                auto it = ctx.diffs.find(dr.name);
                if (it == ctx.diffs.end())
                    fail(ErrorKind::Sort, "unbound difference variable: " + dr.name);
                if (!is_real(it->second))
                    fail(ErrorKind::Sort, "difference variable " + dr.name +
                                              " is not real-sorted: " + print_type(it->second));
            },
            [&](const RealExpr::PrimApp& p) {
                const PrimSpec& spec = reg.get(p.prim);
                if ((int)p.args.size() != spec.arity)
                    fail(ErrorKind::Sort, "primitive " + p.prim + " expects " +
                                              std::to_string(spec.arity) + " arguments");
                for (auto& a : p.args) real_sort_check(a, ctx, reg);
            },
            [&](const RealExpr::SemApp& s) {
                if (!is_closed(s.term))
                    fail(ErrorKind::Sort, "nf() term must be closed: " + print_term(s.term));
                int n = (int)s.args.size();
                TypePtr want = n == 0 ? t_real() : t_arrow(t_real_pow(n), t_real());
                check_against(TypeEnv{}, s.term, want, reg);
                for (auto& a : s.args) real_sort_check(a, ctx, reg);
            },
        },
        r->node);
}

namespace tc_detail {

inline TypePtr point_arg_type(const PointArg& p, const DiffCtx& ctx, const PrimRegistry& reg) {
    if (auto* r = std::get_if<RealExprPtr>(&p)) {
        real_sort_check(*r, ctx, reg);
        return t_real();
    }
    return infer(ctx.points, std::get<TermPtr>(p), reg);
}

inline std::optional<TypePtr> sort_infer(const DiffExprPtr& d, const DiffCtx& ctx,
                                         const PrimRegistry& reg) {
    return std::visit(
        overloaded{
            [&](const DiffExpr::Const&) -> std::optional<TypePtr> { return t_real(); },
            [&](const DiffExpr::Infinity&) -> std::optional<TypePtr> { return t_real(); },
            [&](const DiffExpr::PointVar&) -> std::optional<TypePtr> { return t_real(); },
            [&](const DiffExpr::DiffVar& v) -> std::optional<TypePtr> {
                auto it = ctx.diffs.find(v.name);
                if (it == ctx.diffs.end())
                    fail(ErrorKind::Sort, "unbound difference variable: " + v.name);
                return it->second;
            },
            [&](const DiffExpr::Add&) -> std::optional<TypePtr> { return t_real(); },
            [&](const DiffExpr::AbsReal&) -> std::optional<TypePtr> { return t_real(); },
            [&](const DiffExpr::DLam&) -> std::optional<TypePtr> { return std::nullopt; },
            [&](const DiffExpr::DApp& a) -> std::optional<TypePtr> {
                TypePtr pt = point_arg_type(a.point, ctx, reg);
                if (auto* l = std::get_if<DiffExpr::DLam>(&a.fun->node)) {
                    DiffCtx inner = ctx.with_point(l->pointName, pt).with_diff(l->diffName, pt);
                    return sort_infer(l->body, inner, reg);
                }
                auto funTy = sort_infer(a.fun, ctx, reg);
                if (!funTy) return std::nullopt;
                auto* arrow = as_arrow(*funTy);
                if (!arrow)
                    fail(ErrorKind::Sort, "difference application of non-arrow sort " +
                                              print_type(*funTy));
                return arrow->cod;
            },
            [&](const DiffExpr::DPair& p) -> std::optional<TypePtr> {
                auto a = sort_infer(p.first, ctx, reg);
                auto b = sort_infer(p.second, ctx, reg);
                if (a && b) return t_prod(*a, *b);
                return std::nullopt;
            },
            [&](const DiffExpr::DFst& p) -> std::optional<TypePtr> {
                auto ty = sort_infer(p.arg, ctx, reg);
                if (!ty) return std::nullopt;
                auto* prod = as_prod(*ty);
                if (!prod) fail(ErrorKind::Sort, "dfst of non-product sort " + print_type(*ty));
                return prod->left;
            },
            [&](const DiffExpr::DSnd& p) -> std::optional<TypePtr> {
                auto ty = sort_infer(p.arg, ctx, reg);
                if (!ty) return std::nullopt;
                auto* prod = as_prod(*ty);
                if (!prod) fail(ErrorKind::Sort, "dsnd of non-product sort " + print_type(*ty));
                return prod->right;
            },
            [&](const DiffExpr::FinSup& s) -> std::optional<TypePtr> {
                if (s.emptySort) return *s.emptySort;
                for (auto& item : s.items)
                    if (auto ty = sort_infer(item, ctx, reg)) return ty;
                return std::nullopt;
            },
            [&](const DiffExpr::PrimDiam&) -> std::optional<TypePtr> { return t_real(); },
            [&](const DiffExpr::GuardIfz& g) -> std::optional<TypePtr> { return g.sort; },
            [&](const DiffExpr::GuardIter& g) -> std::optional<TypePtr> { return g.sort; },
        },
        d->node);
}

} // namespace tc_detail

inline void sort_check(const DiffExprPtr& d, const TypePtr& expect, const DiffCtx& ctx,
                       const PrimRegistry& reg) {
    auto expect_real = [&](const char* what) {
        if (!is_real(expect))
            fail(ErrorKind::Sort,
                 std::string(what) + " is real-sorted but expected sort is " + print_type(expect));
    };
    std::visit(
        overloaded{
            [&](const DiffExpr::Const&) { expect_real("constant"); },
            [&](const DiffExpr::Infinity&) { expect_real("inf"); },
            [&](const DiffExpr::PointVar& v) {
                expect_real("point variable");
                auto ty = ctx.points.lookup(v.name);
                if (!ty) fail(ErrorKind::Sort, "unbound point variable: " + v.name);
                if (!is_real(*ty))
                    fail(ErrorKind::Sort, "point variable " + v.name +
                                              " is not real-valued: " + print_type(*ty));
            },
            [&](const DiffExpr::DiffVar& v) {
                auto it = ctx.diffs.find(v.name);
                if (it == ctx.diffs.end())
                    fail(ErrorKind::Sort, "unbound difference variable: " + v.name);
                if (!type_eq(it->second, expect))
                    fail(ErrorKind::Sort, "difference variable " + v.name + " has sort " +
                                              print_type(it->second) + ", expected " +
                                              print_type(expect));
            },
            [&](const DiffExpr::Add& a) {
                expect_real("sum");
                sort_check(a.lhs, t_real(), ctx, reg);
                sort_check(a.rhs, t_real(), ctx, reg);
            },
            [&](const DiffExpr::AbsReal& a) {
                expect_real("abs");
                real_sort_check(a.arg, ctx, reg);
            },
            [&](const DiffExpr::DLam& l) {
                auto* arrow = as_arrow(expect);
                if (!arrow)
                    fail(ErrorKind::Sort, "dlam checked against non-arrow sort " +
                                              print_type(expect));
                DiffCtx inner =
                    ctx.with_point(l.pointName, arrow->dom).with_diff(l.diffName, arrow->dom);
                sort_check(l.body, arrow->cod, inner, reg);
            },
            [&](const DiffExpr::DApp& a) {
                TypePtr pt = tc_detail::point_arg_type(a.point, ctx, reg);
                sort_check(a.fun, t_arrow(pt, expect), ctx, reg);
                sort_check(a.diff, pt, ctx, reg);
            },
            [&](const DiffExpr::DPair& p) {
                auto* prod = as_prod(expect);
                if (!prod)
                    fail(ErrorKind::Sort, "difference pair checked against non-product sort " +
                                              print_type(expect));
                sort_check(p.first, prod->left, ctx, reg);
                sort_check(p.second, prod->right, ctx, reg);
            },
            [&](const DiffExpr::DFst&) {
                auto got = tc_detail::sort_infer(d, ctx, reg);
                if (!got) fail(ErrorKind::Sort, "cannot infer sort of dfst argument");
                if (!type_eq(*got, expect))
                    fail(ErrorKind::Sort, "dfst has sort " + print_type(*got) + ", expected " +
                                              print_type(expect));
            },
            [&](const DiffExpr::DSnd&) {
                auto got = tc_detail::sort_infer(d, ctx, reg);
                if (!got) fail(ErrorKind::Sort, "cannot infer sort of dsnd argument");
                if (!type_eq(*got, expect))
                    fail(ErrorKind::Sort, "dsnd has sort " + print_type(*got) + ", expected " +
                                              print_type(expect));
            },
            [&](const DiffExpr::FinSup& s) {
                for (auto& item : s.items) sort_check(item, expect, ctx, reg);
                if (s.items.empty()) s.emptySort = expect;
            },
            [&](const DiffExpr::PrimDiam& p) {
                expect_real("diam");
                const PrimSpec& spec = reg.get(p.prim);
                if (spec.arity == 1) {
                    real_sort_check(p.center, ctx, reg);
                    sort_check(p.radius, t_real(), ctx, reg);
                    return;
                }
                TypePtr dom = t_real_pow(spec.arity);
                auto* pr = std::get_if<RealExpr::PointRef>(&p.center->node);
                if (!pr)
                    fail(ErrorKind::Sort,
                         "diam center for an n-ary primitive must be a point variable");
                auto ty = ctx.points.lookup(pr->name);
                if (!ty || !type_eq(*ty, dom))
                    fail(ErrorKind::Sort, "diam center " + pr->name + " must have type " +
                                              print_type(dom));
                sort_check(p.radius, dom, ctx, reg);
            },
            [&](const DiffExpr::GuardIfz& g) {
                if (!type_eq(g.sort, expect))
                    fail(ErrorKind::Sort, "ifzguard sort " + print_type(g.sort) + ", expected " +
                                              print_type(expect));
                real_sort_check(g.scrut, ctx, reg);
                sort_check(g.radius, t_real(), ctx, reg);
                sort_check(g.dThen, expect, ctx, reg);
                sort_check(g.dElse, expect, ctx, reg);
            },
            [&](const DiffExpr::GuardIter& g) {
                if (!type_eq(g.sort, expect))
                    fail(ErrorKind::Sort, "iterguard sort " + print_type(g.sort) + ", expected " +
                                              print_type(expect));
                check_against(ctx.points, g.step, t_arrow(expect, expect), reg);
                check_against(ctx.points, g.base, expect, reg);
                real_sort_check(g.scrut, ctx, reg);
                sort_check(g.radius, t_real(), ctx, reg);
                sort_check(g.dStep, t_arrow(expect, expect), ctx, reg);
                sort_check(g.dBase, expect, ctx, reg);
            },
        },
        d->node);
}

} // namespace stlr
