#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "stlr/error.hpp"

namespace stlr {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

/// Shortest round-trip decimal form; deterministic across runs and platforms
/// that implement to_chars for doubles.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Equality used for value determinism checks: bitwise-stable on NaN.
inline bool double_eq(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return a == b;
}

// ---------------------------------------------------------------------------
// Types: Real, arrows, binary products.
// ---------------------------------------------------------------------------

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
    struct Real {};
    struct Arrow {
        TypePtr dom, cod;
    };
    struct Prod {
        TypePtr left, right;
    };
    std::variant<Real, Arrow, Prod> node;
};

inline TypePtr t_real() {
    static const TypePtr r = std::make_shared<Type>(Type{Type::Real{}});
    return r;
}
inline TypePtr t_arrow(TypePtr dom, TypePtr cod) {
    return std::make_shared<Type>(Type{Type::Arrow{std::move(dom), std::move(cod)}});
}
inline TypePtr t_prod(TypePtr left, TypePtr right) {
    return std::make_shared<Type>(Type{Type::Prod{std::move(left), std::move(right)}});
}

inline bool is_real(const TypePtr& t) { return std::holds_alternative<Type::Real>(t->node); }
inline const Type::Arrow* as_arrow(const TypePtr& t) { return std::get_if<Type::Arrow>(&t->node); }
inline const Type::Prod* as_prod(const TypePtr& t) { return std::get_if<Type::Prod>(&t->node); }

inline bool type_eq(const TypePtr& a, const TypePtr& b) {
    if (a.get() == b.get()) return true;
    return std::visit(
        overloaded{
            [&](const Type::Real&) { return is_real(b); },
            [&](const Type::Arrow& x) {
                auto* y = as_arrow(b);
                return y && type_eq(x.dom, y->dom) && type_eq(x.cod, y->cod);
            },
            [&](const Type::Prod& x) {
                auto* y = as_prod(b);
                return y && type_eq(x.left, y->left) && type_eq(x.right, y->right);
            },
        },
        a->node);
}

/// Arrow-nesting order of a type; the sampler refuses premise types deeper
/// than its configured cap.
inline int type_order(const TypePtr& t) {
    return std::visit(overloaded{
                          [](const Type::Real&) { return 0; },
                          [](const Type::Arrow& a) {
                              return std::max(type_order(a.dom) + 1, type_order(a.cod));
                          },
                          [](const Type::Prod& p) {
                              return std::max(type_order(p.left), type_order(p.right));
                          },
                      },
                      t->node);
}

/// The n-ary real tuple type: Real for n=1, left-nested products otherwise.
inline TypePtr t_real_pow(int n) {
    TypePtr t = t_real();
    for (int i = 1; i < n; i++) t = t_prod(t, t_real());
    return t;
}

// ---------------------------------------------------------------------------
// Terms. Pair components stay unevaluated inside pair values, so pairs,
// projections, ifz and iter all carry raw terms.
// ---------------------------------------------------------------------------

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    struct Var {
        std::string name;
    };
    struct Lit {
        double value;
    };
    struct Prim {
        std::string name;
        int arity;
    };
    struct Lam {
        std::string binder;
        TypePtr annot;
        TermPtr body;
    };
    struct App {
        TermPtr fun, arg;
    };
    struct Pair {
        TermPtr first, second;
    };
    struct Proj1 {};
    struct Proj2 {};
    struct Ifz {
        TermPtr thenNeg;    // chosen when the scrutinee is < 0
        TermPtr elseNonneg; // chosen when the scrutinee is >= 0
    };
    struct Iter {
        TermPtr step;
        TermPtr base;
    };
    std::variant<Var, Lit, Prim, Lam, App, Pair, Proj1, Proj2, Ifz, Iter> node;
};

inline TermPtr m_var(std::string n) { return std::make_shared<Term>(Term{Term::Var{std::move(n)}}); }
inline TermPtr m_lit(double v) { return std::make_shared<Term>(Term{Term::Lit{v}}); }
inline TermPtr m_prim(std::string n, int arity) {
    return std::make_shared<Term>(Term{Term::Prim{std::move(n), arity}});
}
inline TermPtr m_lam(std::string x, TypePtr t, TermPtr body) {
    return std::make_shared<Term>(Term{Term::Lam{std::move(x), std::move(t), std::move(body)}});
}
inline TermPtr m_app(TermPtr f, TermPtr a) {
    return std::make_shared<Term>(Term{Term::App{std::move(f), std::move(a)}});
}
inline TermPtr m_pair(TermPtr a, TermPtr b) {
    return std::make_shared<Term>(Term{Term::Pair{std::move(a), std::move(b)}});
}
inline TermPtr m_proj1() {
    static const TermPtr p = std::make_shared<Term>(Term{Term::Proj1{}});
    return p;
}
inline TermPtr m_proj2() {
    static const TermPtr p = std::make_shared<Term>(Term{Term::Proj2{}});
    return p;
}
inline TermPtr m_ifz(TermPtr thn, TermPtr els) {
    return std::make_shared<Term>(Term{Term::Ifz{std::move(thn), std::move(els)}});
}
inline TermPtr m_iter(TermPtr step, TermPtr base) {
    return std::make_shared<Term>(Term{Term::Iter{std::move(step), std::move(base)}});
}

inline void collect_free_vars(const TermPtr& t, std::set<std::string>& bound,
                              std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const Term::Var& v) {
                       if (!bound.count(v.name)) out.insert(v.name);
                   },
                   [&](const Term::Lit&) {},
                   [&](const Term::Prim&) {},
                   [&](const Term::Lam& l) {
                       bool fresh = bound.insert(l.binder).second;
                       collect_free_vars(l.body, bound, out);
                       if (fresh) bound.erase(l.binder);
                   },
                   [&](const Term::App& a) {
                       collect_free_vars(a.fun, bound, out);
                       collect_free_vars(a.arg, bound, out);
                   },
                   [&](const Term::Pair& p) {
                       collect_free_vars(p.first, bound, out);
                       collect_free_vars(p.second, bound, out);
                   },
                   [&](const Term::Proj1&) {},
                   [&](const Term::Proj2&) {},
                   [&](const Term::Ifz& i) {
                       collect_free_vars(i.thenNeg, bound, out);
                       collect_free_vars(i.elseNonneg, bound, out);
                   },
                   [&](const Term::Iter& i) {
                       collect_free_vars(i.step, bound, out);
                       collect_free_vars(i.base, bound, out);
                   },
               },
               t->node);
}

inline std::set<std::string> free_vars(const TermPtr& t) {
    std::set<std::string> bound, out;
    collect_free_vars(t, bound, out);
    return out;
}

inline bool is_closed(const TermPtr& t) { return free_vars(t).empty(); }

inline std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
    if (!avoid.count(base)) return base;
    for (int i = 0;; i++) {
        std::string cand = base + "_" + std::to_string(i);
        if (!avoid.count(cand)) return cand;
    }
}

using TermSubst = std::map<std::string, TermPtr>;

/// Simultaneous capture-avoiding substitution. Binders are freshened only
/// when they would capture a free variable of some replacement.
inline TermPtr subst_term(const TermPtr& t, const TermSubst& s) {
    if (s.empty()) return t;
    return std::visit(
        overloaded{
            [&](const Term::Var& v) -> TermPtr {
                auto it = s.find(v.name);
                return it == s.end() ? t : it->second;
            },
            [&](const Term::Lit&) -> TermPtr { return t; },
            [&](const Term::Prim&) -> TermPtr { return t; },
            [&](const Term::Lam& l) -> TermPtr {
                TermSubst inner = s;
                inner.erase(l.binder);
                if (inner.empty()) return t;
                std::set<std::string> avoid;
                for (auto& [k, rep] : inner) {
                    (void)k;
                    for (auto& fv : free_vars(rep)) avoid.insert(fv);
                }
                if (avoid.count(l.binder)) {
                    for (auto& fv : free_vars(l.body)) avoid.insert(fv);
                    std::string nb = fresh_name(l.binder, avoid);
                    inner[l.binder] = m_var(nb);
                    return m_lam(nb, l.annot, subst_term(l.body, inner));
                }
                return m_lam(l.binder, l.annot, subst_term(l.body, inner));
            },
            [&](const Term::App& a) -> TermPtr {
                return m_app(subst_term(a.fun, s), subst_term(a.arg, s));
            },
            [&](const Term::Pair& p) -> TermPtr {
                return m_pair(subst_term(p.first, s), subst_term(p.second, s));
            },
            [&](const Term::Proj1&) -> TermPtr { return t; },
            [&](const Term::Proj2&) -> TermPtr { return t; },
            [&](const Term::Ifz& i) -> TermPtr {
                return m_ifz(subst_term(i.thenNeg, s), subst_term(i.elseNonneg, s));
            },
            [&](const Term::Iter& i) -> TermPtr {
                return m_iter(subst_term(i.step, s), subst_term(i.base, s));
            },
        },
        t->node);
}

inline TermPtr subst_term(const TermPtr& t, const std::string& x, const TermPtr& v) {
    TermSubst s;
    s.emplace(x, v);
    return subst_term(t, s);
}

inline bool term_eq(const TermPtr& a, const TermPtr& b);

inline bool term_eq(const TermPtr& a, const TermPtr& b) {
    if (a.get() == b.get()) return true;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Term::Var& x) { return x.name == std::get<Term::Var>(b->node).name; },
            [&](const Term::Lit& x) { return double_eq(x.value, std::get<Term::Lit>(b->node).value); },
            [&](const Term::Prim& x) { return x.name == std::get<Term::Prim>(b->node).name; },
            [&](const Term::Lam& x) {
                auto& y = std::get<Term::Lam>(b->node);
                return x.binder == y.binder && type_eq(x.annot, y.annot) && term_eq(x.body, y.body);
            },
            [&](const Term::App& x) {
                auto& y = std::get<Term::App>(b->node);
                return term_eq(x.fun, y.fun) && term_eq(x.arg, y.arg);
            },
            [&](const Term::Pair& x) {
                auto& y = std::get<Term::Pair>(b->node);
                return term_eq(x.first, y.first) && term_eq(x.second, y.second);
            },
            [&](const Term::Proj1&) { return true; },
            [&](const Term::Proj2&) { return true; },
            [&](const Term::Ifz& x) {
                auto& y = std::get<Term::Ifz>(b->node);
                return term_eq(x.thenNeg, y.thenNeg) && term_eq(x.elseNonneg, y.elseNonneg);
            },
            [&](const Term::Iter& x) {
                auto& y = std::get<Term::Iter>(b->node);
                return term_eq(x.step, y.step) && term_eq(x.base, y.base);
            },
        },
        a->node);
}

namespace detail {
inline bool alpha_eq_rec(const TermPtr& a, const TermPtr& b, std::map<std::string, int>& la,
                         std::map<std::string, int>& lb, int& depth) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Term::Var& x) {
                auto& y = std::get<Term::Var>(b->node);
                auto ia = la.find(x.name);
                auto ib = lb.find(y.name);
                if ((ia == la.end()) != (ib == lb.end())) return false;
                if (ia == la.end()) return x.name == y.name;
                return ia->second == ib->second;
            },
            [&](const Term::Lit& x) { return double_eq(x.value, std::get<Term::Lit>(b->node).value); },
            [&](const Term::Prim& x) { return x.name == std::get<Term::Prim>(b->node).name; },
            [&](const Term::Lam& x) {
                auto& y = std::get<Term::Lam>(b->node);
                if (!type_eq(x.annot, y.annot)) return false;
                std::optional<int> olda, oldb;
                if (auto it = la.find(x.binder); it != la.end()) olda = it->second;
                if (auto it = lb.find(y.binder); it != lb.end()) oldb = it->second;
                la[x.binder] = depth;
                lb[y.binder] = depth;
                depth++;
                bool r = alpha_eq_rec(x.body, y.body, la, lb, depth);
                depth--;
                if (olda) la[x.binder] = *olda; else la.erase(x.binder);
                if (oldb) lb[y.binder] = *oldb; else lb.erase(y.binder);
                return r;
            },
            [&](const Term::App& x) {
                auto& y = std::get<Term::App>(b->node);
                return alpha_eq_rec(x.fun, y.fun, la, lb, depth) &&
                       alpha_eq_rec(x.arg, y.arg, la, lb, depth);
            },
            [&](const Term::Pair& x) {
                auto& y = std::get<Term::Pair>(b->node);
                return alpha_eq_rec(x.first, y.first, la, lb, depth) &&
                       alpha_eq_rec(x.second, y.second, la, lb, depth);
            },
            [&](const Term::Proj1&) { return true; },
            [&](const Term::Proj2&) { return true; },
            [&](const Term::Ifz& x) {
                auto& y = std::get<Term::Ifz>(b->node);
                return alpha_eq_rec(x.thenNeg, y.thenNeg, la, lb, depth) &&
                       alpha_eq_rec(x.elseNonneg, y.elseNonneg, la, lb, depth);
            },
            [&](const Term::Iter& x) {
                auto& y = std::get<Term::Iter>(b->node);
                return alpha_eq_rec(x.step, y.step, la, lb, depth) &&
                       alpha_eq_rec(x.base, y.base, la, lb, depth);
            },
        },
        a->node);
}
} // namespace detail

inline bool alpha_eq(const TermPtr& a, const TermPtr& b) {
    std::map<std::string, int> la, lb;
    int depth = 0;
    return detail::alpha_eq_rec(a, b, la, lb, depth);
}

// ---------------------------------------------------------------------------
// Real-valued expressions used inside difference expressions: literals,
// point variables, primitive applications, normal forms of closed terms
// applied to real arguments, and references to real-sorted difference
// variables.
// ---------------------------------------------------------------------------

struct RealExpr;
using RealExprPtr = std::shared_ptr<const RealExpr>;

struct RealExpr {
    struct Lit {
        double value;
    };
    struct PointRef {
        std::string name;
    };
    struct DiffRef {
        std::string name;
    };
    struct PrimApp {
        std::string prim;
        std::vector<RealExprPtr> args;
    };
    struct SemApp {
        TermPtr term; // closed
        std::vector<RealExprPtr> args;
    };
    std::variant<Lit, PointRef, DiffRef, PrimApp, SemApp> node;
};

inline RealExprPtr r_lit(double v) {
    return std::make_shared<RealExpr>(RealExpr{RealExpr::Lit{v}});
}
inline RealExprPtr r_point(std::string n) {
    return std::make_shared<RealExpr>(RealExpr{RealExpr::PointRef{std::move(n)}});
}
inline RealExprPtr r_diff(std::string n) {
    return std::make_shared<RealExpr>(RealExpr{RealExpr::DiffRef{std::move(n)}});
}
inline RealExprPtr r_prim(std::string p, std::vector<RealExprPtr> args) {
    return std::make_shared<RealExpr>(RealExpr{RealExpr::PrimApp{std::move(p), std::move(args)}});
}
inline RealExprPtr r_sem(TermPtr t, std::vector<RealExprPtr> args) {
    return std::make_shared<RealExpr>(RealExpr{RealExpr::SemApp{std::move(t), std::move(args)}});
}

// ---------------------------------------------------------------------------
// Difference expressions. Point arguments of applications are either real
// expressions or terms; terms may mention point variables, which get closed
// by the point environment at evaluation time.
// ---------------------------------------------------------------------------

struct DiffExpr;
using DiffExprPtr = std::shared_ptr<const DiffExpr>;
using PointArg = std::variant<RealExprPtr, TermPtr>;

struct DiffExpr {
    struct Const {
        double value; // >= 0, finite
    };
    struct Infinity {};
    struct PointVar {
        std::string name;
    };
    struct DiffVar {
        std::string name;
    };
    struct Add {
        DiffExprPtr lhs, rhs;
    };
    struct AbsReal {
        RealExprPtr arg;
    };
    struct DLam {
        std::string pointName;
        std::string diffName;
        DiffExprPtr body;
    };
    struct DApp {
        DiffExprPtr fun;
        PointArg point;
        DiffExprPtr diff;
    };
    struct DPair {
        DiffExprPtr first, second;
    };
    struct DFst {
        DiffExprPtr arg;
    };
    struct DSnd {
        DiffExprPtr arg;
    };
    struct FinSup {
        std::vector<DiffExprPtr> items;
        // Filled in by sort checking so an empty sup still knows which
        // bottom element to produce; an annotation, hence mutable.
        mutable std::optional<TypePtr> emptySort;
    };
    struct PrimDiam {
        std::string prim;
        RealExprPtr center;
        DiffExprPtr radius;
    };
    // Derived-distance guard for conditionals: picks a branch distance when
    // the window around the scrutinee is sign-stable, top otherwise.
    struct GuardIfz {
        RealExprPtr scrut;
        DiffExprPtr radius;
        DiffExprPtr dThen, dElse;
        TypePtr sort;
    };
    // Derived-distance guard for iteration: composes the step distance a
    // window-stable number of times through the base distance.
    struct GuardIter {
        TermPtr step, base; // may mention point variables
        RealExprPtr scrut;
        DiffExprPtr radius;
        DiffExprPtr dStep, dBase;
        TypePtr sort;
    };
    std::variant<Const, Infinity, PointVar, DiffVar, Add, AbsReal, DLam, DApp, DPair, DFst, DSnd,
                 FinSup, PrimDiam, GuardIfz, GuardIter>
        node;
};

inline DiffExprPtr d_const(double v) {
    if (std::isnan(v)) fail(ErrorKind::Sort, "difference constant is NaN");
    if (v < 0) fail(ErrorKind::Sort, "difference constant is negative: " + format_double(v));
    if (std::isinf(v)) return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::Infinity{}});
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::Const{v}});
}
inline DiffExprPtr d_inf() {
    static const DiffExprPtr i = std::make_shared<DiffExpr>(DiffExpr{DiffExpr::Infinity{}});
    return i;
}
inline DiffExprPtr d_pointvar(std::string n) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::PointVar{std::move(n)}});
}
inline DiffExprPtr d_var(std::string n) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::DiffVar{std::move(n)}});
}
inline DiffExprPtr d_add(DiffExprPtr a, DiffExprPtr b) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::Add{std::move(a), std::move(b)}});
}
inline DiffExprPtr d_abs(RealExprPtr r) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::AbsReal{std::move(r)}});
}
inline DiffExprPtr d_lam(std::string x, std::string e, DiffExprPtr body) {
    return std::make_shared<DiffExpr>(
        DiffExpr{DiffExpr::DLam{std::move(x), std::move(e), std::move(body)}});
}
inline DiffExprPtr d_app(DiffExprPtr f, PointArg p, DiffExprPtr d) {
    return std::make_shared<DiffExpr>(
        DiffExpr{DiffExpr::DApp{std::move(f), std::move(p), std::move(d)}});
}
inline DiffExprPtr d_pair(DiffExprPtr a, DiffExprPtr b) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::DPair{std::move(a), std::move(b)}});
}
inline DiffExprPtr d_fst(DiffExprPtr a) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::DFst{std::move(a)}});
}
inline DiffExprPtr d_snd(DiffExprPtr a) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::DSnd{std::move(a)}});
}
inline DiffExprPtr d_sup(std::vector<DiffExprPtr> items, std::optional<TypePtr> emptySort = {}) {
    return std::make_shared<DiffExpr>(
        DiffExpr{DiffExpr::FinSup{std::move(items), std::move(emptySort)}});
}
inline DiffExprPtr d_diam(std::string prim, RealExprPtr center, DiffExprPtr radius) {
    return std::make_shared<DiffExpr>(
        DiffExpr{DiffExpr::PrimDiam{std::move(prim), std::move(center), std::move(radius)}});
}
inline DiffExprPtr d_guard_ifz(RealExprPtr scrut, DiffExprPtr radius, DiffExprPtr dThen,
                               DiffExprPtr dElse, TypePtr sort) {
    return std::make_shared<DiffExpr>(DiffExpr{DiffExpr::GuardIfz{
        std::move(scrut), std::move(radius), std::move(dThen), std::move(dElse), std::move(sort)}});
}
inline DiffExprPtr d_guard_iter(TermPtr step, TermPtr base, RealExprPtr scrut, DiffExprPtr radius,
                                DiffExprPtr dStep, DiffExprPtr dBase, TypePtr sort) {
    return std::make_shared<DiffExpr>(
        DiffExpr{DiffExpr::GuardIter{std::move(step), std::move(base), std::move(scrut),
                                     std::move(radius), std::move(dStep), std::move(dBase),
                                     std::move(sort)}});
}

} // namespace stlr
