#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stlr/error.hpp"
#include "stlr/prims.hpp"
#include "stlr/printer.hpp"
#include "stlr/syntax.hpp"

namespace stlr {

constexpr long long kDefaultFuel = 1'000'000;

/// Values of the call-by-value big-step semantics. Pair components and the
/// branches of ifz/iter stay unevaluated until forced.
struct Value {
    struct RealV {
        double v;
    };
    struct PrimV {
        std::string name;
        int arity;
    };
    struct LamV {
        std::string binder;
        TypePtr annot;
        TermPtr body;
    };
    struct PairV {
        TermPtr first, second;
    };
    struct Proj1V {};
    struct Proj2V {};
    struct IfzV {
        TermPtr thenNeg, elseNonneg;
    };
    struct IterV {
        TermPtr step, base;
    };
    std::variant<RealV, PrimV, LamV, PairV, Proj1V, Proj2V, IfzV, IterV> node;
};

inline Value v_real(double r) { return Value{Value::RealV{r}}; }

inline TermPtr value_to_term(const Value& v) {
    return std::visit(overloaded{
                          [](const Value::RealV& r) { return m_lit(r.v); },
                          [](const Value::PrimV& p) { return m_prim(p.name, p.arity); },
                          [](const Value::LamV& l) { return m_lam(l.binder, l.annot, l.body); },
                          [](const Value::PairV& p) { return m_pair(p.first, p.second); },
                          [](const Value::Proj1V&) { return m_proj1(); },
                          [](const Value::Proj2V&) { return m_proj2(); },
                          [](const Value::IfzV& i) { return m_ifz(i.thenNeg, i.elseNonneg); },
                          [](const Value::IterV& i) { return m_iter(i.step, i.base); },
                      },
                      v.node);
}

/// The value subgrammar of terms; applications and variables are not values.
inline std::optional<Value> as_value(const TermPtr& t) {
    return std::visit(
        overloaded{
            [](const Term::Var&) -> std::optional<Value> { return std::nullopt; },
            [](const Term::Lit& l) -> std::optional<Value> { return Value{Value::RealV{l.value}}; },
            [](const Term::Prim& p) -> std::optional<Value> {
                return Value{Value::PrimV{p.name, p.arity}};
            },
            [](const Term::Lam& l) -> std::optional<Value> {
                return Value{Value::LamV{l.binder, l.annot, l.body}};
            },
            [](const Term::Pair& p) -> std::optional<Value> {
                return Value{Value::PairV{p.first, p.second}};
            },
            [](const Term::Proj1&) -> std::optional<Value> { return Value{Value::Proj1V{}}; },
            [](const Term::Proj2&) -> std::optional<Value> { return Value{Value::Proj2V{}}; },
            [](const Term::Ifz& i) -> std::optional<Value> {
                return Value{Value::IfzV{i.thenNeg, i.elseNonneg}};
            },
            [](const Term::Iter& i) -> std::optional<Value> {
                return Value{Value::IterV{i.step, i.base}};
            },
            [](const Term::App&) -> std::optional<Value> { return std::nullopt; },
        },
        t->node);
}

inline bool value_eq(const Value& a, const Value& b) {
    return term_eq(value_to_term(a), value_to_term(b));
}

inline std::string print_value(const Value& v) { return print_term(value_to_term(v)); }

namespace eval_detail {

struct Budget {
    long long fuel;
    long long steps = 0;

    void tick() {
        if (steps >= fuel)
            fail(ErrorKind::FuelExhausted,
                 "evaluation exceeded fuel budget of " + std::to_string(fuel) + " steps");
        steps++;
    }
};

inline Value eval_rec(const TermPtr& t, const PrimRegistry& reg, Budget& budget);

/// Extract n reals from the value of an n-ary primitive argument. Tuples
/// are left-nested, and a 1-tuple is just a real.
inline void flatten_reals(const Value& v, int n, const PrimRegistry& reg, Budget& budget,
                          std::vector<double>& out) {
    if (n == 1) {
        auto* r = std::get_if<Value::RealV>(&v.node);
        if (!r)
            fail(ErrorKind::Eval, "primitive applied to wrong tuple shape: expected a real, got " +
                                      print_value(v));
        out.push_back(r->v);
        return;
    }
    auto* p = std::get_if<Value::PairV>(&v.node);
    if (!p)
        fail(ErrorKind::Eval, "primitive applied to wrong tuple shape: expected a pair, got " +
                                  print_value(v));
    flatten_reals(eval_rec(p->first, reg, budget), n - 1, reg, budget, out);
    auto second = eval_rec(p->second, reg, budget);
    auto* r = std::get_if<Value::RealV>(&second.node);
    if (!r) fail(ErrorKind::Eval, "primitive applied to wrong tuple shape: non-real component");
    out.push_back(r->v);
}

inline Value eval_rec(const TermPtr& t, const PrimRegistry& reg, Budget& budget) {
    budget.tick();
    if (auto v = as_value(t)) return *v;
    auto* app = std::get_if<Term::App>(&t->node);
    if (!app) {
        if (auto* var = std::get_if<Term::Var>(&t->node))
            fail(ErrorKind::Eval, "evaluation reached a free variable: " + var->name);
        fail(ErrorKind::Eval, "term is not evaluable: " + print_term(t));
    }
    Value fun = eval_rec(app->fun, reg, budget);
    return std::visit(
        overloaded{
            [&](const Value::PrimV& p) -> Value {
                Value arg = eval_rec(app->arg, reg, budget);
                std::vector<double> rs;
                rs.reserve(p.arity);
                flatten_reals(arg, p.arity, reg, budget, rs);
                return v_real(reg.get(p.name).eval(rs));
            },
            [&](const Value::LamV& l) -> Value {
                Value arg = eval_rec(app->arg, reg, budget);
                return eval_rec(subst_term(l.body, l.binder, value_to_term(arg)), reg, budget);
            },
            [&](const Value::Proj1V&) -> Value {
                Value arg = eval_rec(app->arg, reg, budget);
                auto* p = std::get_if<Value::PairV>(&arg.node);
                if (!p) fail(ErrorKind::Eval, "projection of non-pair: " + print_value(arg));
                return eval_rec(p->first, reg, budget);
            },
            [&](const Value::Proj2V&) -> Value {
                Value arg = eval_rec(app->arg, reg, budget);
                auto* p = std::get_if<Value::PairV>(&arg.node);
                if (!p) fail(ErrorKind::Eval, "projection of non-pair: " + print_value(arg));
                return eval_rec(p->second, reg, budget);
            },
            [&](const Value::IfzV& i) -> Value {
                Value arg = eval_rec(app->arg, reg, budget);
                auto* r = std::get_if<Value::RealV>(&arg.node);
                if (!r) fail(ErrorKind::Eval, "ifz scrutinee is not a real: " + print_value(arg));
                return eval_rec(r->v < 0 ? i.thenNeg : i.elseNonneg, reg, budget);
            },
            [&](const Value::IterV& i) -> Value {
                Value arg = eval_rec(app->arg, reg, budget);
                auto* r = std::get_if<Value::RealV>(&arg.node);
                if (!r) fail(ErrorKind::Eval, "iter argument is not a real: " + print_value(arg));
                if (r->v < 0) return eval_rec(i.base, reg, budget);
                // The rewrite rule unrolls one step per unit of the argument.
                // A loop keeps the stack flat; the countdown below, including
                // its behavior on NaN and infinity (spin until fuel runs
                // out), matches the literal unrolling.
                Value acc = eval_rec(i.base, reg, budget);
                for (double k = r->v; !(k < 0); k -= 1.0)
                    acc = eval_rec(m_app(i.step, value_to_term(acc)), reg, budget);
                return acc;
            },
            [&](const Value::RealV&) -> Value {
                fail(ErrorKind::Eval, "application of non-function: " + print_value(fun));
            },
            [&](const Value::PairV&) -> Value {
                fail(ErrorKind::Eval, "application of non-function: " + print_value(fun));
            },
        },
        fun.node);
}

} // namespace eval_detail

struct EvalResult {
    Value value;
    long long steps;
};

inline EvalResult eval(const TermPtr& t, const PrimRegistry& reg = default_registry(),
                       long long fuel = kDefaultFuel) {
    eval_detail::Budget budget{fuel};
    Value v = eval_detail::eval_rec(t, reg, budget);
    return EvalResult{std::move(v), budget.steps};
}

inline Value nf(const TermPtr& t, const PrimRegistry& reg = default_registry(),
                long long fuel = kDefaultFuel) {
    return eval(t, reg, fuel).value;
}

inline double nf_real(const TermPtr& t, const PrimRegistry& reg = default_registry(),
                      long long fuel = kDefaultFuel) {
    Value v = nf(t, reg, fuel);
    auto* r = std::get_if<Value::RealV>(&v.node);
    if (!r)
        fail(ErrorKind::Eval, "normal form is not a real: " + print_value(v));
    return r->v;
}

} // namespace stlr
