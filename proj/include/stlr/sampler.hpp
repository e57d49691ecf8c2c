#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stlr/diffspace.hpp"
#include "stlr/error.hpp"
#include "stlr/eval.hpp"
#include "stlr/sensitivity.hpp"
#include "stlr/syntax.hpp"

namespace stlr {

struct SamplerConfig {
    double realLo = -10.0;
    double realHi = 10.0;
    std::vector<double> specials = {0.0,    1.0,  -1.0,  3.141592653589793,
                                    -3.141592653589793, 1e-9, -1e-9, 1e9, -1e9};
    double specialProb = 0.15;
    double offsetMax = 5.0; // largest |V - W| between paired premise points
    double slackMax = 0.5;  // premise slack added on top of |V - W|
    double infProb = 0.02;  // fraction of trials with an infinite premise difference
    int genDepth = 2;       // arrow-nesting cap for generated premise values
    int innerTrials = 8;    // trials used below the outermost arrow
};

/// Shape of generated terms; separate from SamplerConfig so corpora with
/// different depth and primitive pools can share one random stream.
struct GenConfig {
    int depth = 2;
    std::vector<std::string> prims = {"sin", "cos", "add1", "pred", "mul2"};
    bool allowIfz = false;
    bool allowIter = false;
    double iterBoundMax = 20.0; // iteration scrutinee literals stay below this
};

class Sampler {
public:
    explicit Sampler(SamplerConfig cfg = {}, std::uint64_t seed = 0)
        : cfg_(std::move(cfg)), seed_(seed), rng_(seed) {}

    const SamplerConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    }

    /// A point on the real line: occasionally a distinguished constant,
    /// otherwise uniform over the configured range.
    double point_real() {
        if (!cfg_.specials.empty() && chance(cfg_.specialProb))
            return cfg_.specials[index(cfg_.specials.size())];
        return uniform(cfg_.realLo, cfg_.realHi);
    }

    // -- closed term generation ---------------------------------------------

    TermPtr gen_value(const TypePtr& at, const GenConfig& g,
                      const PrimRegistry& reg = default_registry()) {
        if (is_real(at)) return m_lit(point_real());
        if (auto* p = as_prod(at))
            return m_pair(gen_value(p->left, g, reg), gen_value(p->right, g, reg));
        auto* a = as_arrow(at);
        std::string binder = fresh_binder();
        std::vector<std::pair<std::string, TypePtr>> env{{binder, a->dom}};
        return m_lam(binder, a->dom, gen_body(env, a->cod, g.depth, g, reg));
    }

    /// Arbitrary closed well-typed term, redexes included.
    TermPtr gen_closed_term(const TypePtr& at, const GenConfig& g,
                            const PrimRegistry& reg = default_registry()) {
        std::vector<std::pair<std::string, TypePtr>> env;
        return gen_body(env, at, g.depth, g, reg);
    }

    // -- premise triples ----------------------------------------------------

    /// A triple (v, y, w) for which the relation at `at` holds by
    /// construction. At higher types w = v with y the derived self-distance;
    /// counterexamples needing distinct higher-order points are out of reach.
    struct Premise {
        TermPtr v, w;
        DiffValue y;
        DiffExprPtr yExpr;
    };

    Premise gen_premise(const TypePtr& at, const PrimRegistry& reg = default_registry()) {
        if (is_real(at)) {
            if (chance(cfg_.infProb)) {
                Premise p;
                p.v = m_lit(point_real());
                p.w = m_lit(point_real());
                p.y = dv_num(kInf);
                p.yExpr = d_inf();
                return p;
            }
            double v = point_real();
            double delta = uniform(-cfg_.offsetMax, cfg_.offsetMax);
            double y = std::fabs(delta) + uniform(0.0, cfg_.slackMax);
            Premise p;
            p.v = m_lit(v);
            p.w = m_lit(v + delta);
            p.y = dv_num(y);
            p.yExpr = d_const(y);
            return p;
        }
        if (auto* pr = as_prod(at)) {
            Premise l = gen_premise(pr->left, reg);
            Premise r = gen_premise(pr->right, reg);
            Premise p;
            p.v = m_pair(l.v, r.v);
            p.w = m_pair(l.w, r.w);
            p.y = dv_tup(l.y, r.y);
            p.yExpr = d_pair(l.yExpr, r.yExpr);
            return p;
        }
        if (type_order(at) > cfg_.genDepth)
            fail(ErrorKind::Generator,
                 "premise generation exhausted: type " + print_type(at) +
                     " exceeds the supported arrow-nesting depth");
        GenConfig g;
        g.depth = cfg_.genDepth;
        Premise p;
        p.v = gen_value(at, g, reg);
        p.w = p.v;
        DerivedDistance dd = derive_self_distance(TypeEnv{}, p.v, at, reg);
        p.yExpr = dd.expr;
        p.y = diff_eval(dd.expr, {}, {}, reg);
        return p;
    }

    // -- distinguished-subset members ---------------------------------------

    DiffValue gen_null_member(const TypePtr& at) { return dv_bottom(at); }

    /// Member of the metric subset at level s. Only first-order shapes have
    /// one canonical representative we can produce.
    DiffValue gen_metric_member(const TypePtr& at, double s) {
        if (is_real(at)) return dv_num(s);
        if (auto* p = as_prod(at))
            return dv_tup(gen_metric_member(p->left, s), gen_metric_member(p->right, s));
        fail(ErrorKind::Generator,
             "metric membership sampling is not supported above first-order premise types");
    }

    DiffValue gen_finite_member(const TypePtr& at, const PrimRegistry& reg = default_registry()) {
        if (is_real(at)) return dv_num(std::fabs(point_real()));
        if (auto* p = as_prod(at))
            return dv_tup(gen_finite_member(p->left, reg), gen_finite_member(p->right, reg));
        if (type_order(at) > cfg_.genDepth)
            fail(ErrorKind::Generator,
                 "finite membership sampling exhausted at deep higher-order types");
        GenConfig g;
        g.depth = cfg_.genDepth;
        TermPtr v = gen_value(at, g, reg);
        DerivedDistance dd = derive_self_distance(TypeEnv{}, v, at, reg);
        return diff_eval(dd.expr, {}, {}, reg);
    }

private:
    std::string fresh_binder() { return "a" + std::to_string(nameCounter_++); }

    TermPtr gen_body(std::vector<std::pair<std::string, TypePtr>>& env, const TypePtr& ty,
                     int depth, const GenConfig& g, const PrimRegistry& reg) {
        std::vector<std::string> sameType;
        for (auto& [n, t] : env)
            if (type_eq(t, ty)) sameType.push_back(n);
        bool canRecurse = depth > 0;

        if (!sameType.empty() && chance(0.3)) return m_var(sameType[index(sameType.size())]);

        if (is_real(ty)) {
            if (!canRecurse) return m_lit(point_real());
            enum { Lit, PrimApp, VarApp, IfzApp, IterApp, Redex };
            std::vector<int> menu{Lit, PrimApp, PrimApp};
            std::vector<std::pair<std::string, TypePtr>> appliable;
            for (auto& [n, t] : env)
                if (auto* a = as_arrow(t)) {
                    (void)a;
                    appliable.push_back({n, t});
                }
            if (!appliable.empty()) menu.push_back(VarApp);
            if (g.allowIfz) menu.push_back(IfzApp);
            if (g.allowIter) menu.push_back(IterApp);
            if (depth >= 2) menu.push_back(Redex);
            switch (menu[index(menu.size())]) {
            case Lit: return m_lit(point_real());
            case PrimApp: {
                const PrimSpec& spec = reg.get(g.prims[index(g.prims.size())]);
                if (spec.arity == 1)
                    return m_app(m_prim(spec.name, 1), gen_body(env, ty, depth - 1, g, reg));
                TermPtr tup = gen_body_real_tuple(env, spec.arity, depth - 1, g, reg);
                return m_app(m_prim(spec.name, spec.arity), tup);
            }
            case VarApp: {
                auto& [n, t] = appliable[index(appliable.size())];
                auto* a = as_arrow(t);
                if (!type_eq(a->cod, ty)) break; // fall through to literal below
                return m_app(m_var(n), gen_body(env, a->dom, depth - 1, g, reg));
            }
            case IfzApp:
                return m_app(m_ifz(gen_body(env, ty, depth - 1, g, reg),
                                   gen_body(env, ty, depth - 1, g, reg)),
                             gen_body(env, t_real(), depth - 1, g, reg));
            case IterApp: {
                std::string b = fresh_binder();
                env.push_back({b, ty});
                TermPtr stepBody = gen_body(env, ty, depth - 1, g, reg);
                env.pop_back();
                TermPtr step = m_lam(b, ty, stepBody);
                TermPtr base = gen_body(env, ty, depth - 1, g, reg);
                return m_app(m_iter(step, base), m_lit(uniform(-2.0, g.iterBoundMax)));
            }
            case Redex: {
                TypePtr argTy = chance(0.5) ? t_real() : t_prod(t_real(), t_real());
                std::string b = fresh_binder();
                env.push_back({b, argTy});
                TermPtr body = gen_body(env, ty, depth - 1, g, reg);
                env.pop_back();
                return m_app(m_lam(b, argTy, body), gen_body(env, argTy, depth - 1, g, reg));
            }
            }
            return m_lit(point_real());
        }
        if (auto* p = as_prod(ty)) {
            if (!canRecurse)
                return m_pair(gen_body(env, p->left, 0, g, reg), gen_body(env, p->right, 0, g, reg));
            return m_pair(gen_body(env, p->left, depth - 1, g, reg),
                          gen_body(env, p->right, depth - 1, g, reg));
        }
        auto* a = as_arrow(ty);
        std::string binder = fresh_binder();
        env.push_back({binder, a->dom});
        TermPtr body = gen_body(env, a->cod, canRecurse ? depth - 1 : 0, g, reg);
        env.pop_back();
        return m_lam(binder, a->dom, body);
    }

    /// Left-nested tuple of n real bodies, matching primitive calling shape.
    TermPtr gen_body_real_tuple(std::vector<std::pair<std::string, TypePtr>>& env, int n,
                                int depth, const GenConfig& g, const PrimRegistry& reg) {
        TermPtr acc = gen_body(env, t_real(), depth, g, reg);
        for (int i = 1; i < n; i++) acc = m_pair(acc, gen_body(env, t_real(), depth, g, reg));
        return acc;
    }

    SamplerConfig cfg_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    long long nameCounter_ = 0;
};

} // namespace stlr
