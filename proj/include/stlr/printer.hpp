#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "stlr/syntax.hpp"

namespace stlr {

namespace print_detail {

inline void type_rec(const TypePtr& t, int minPrec, std::string& out) {
    // Precedence: arrow 0 (right assoc), product 1 (left assoc), atoms 2.
    std::visit(overloaded{
                   [&](const Type::Real&) { out += "Real"; },
                   [&](const Type::Arrow& a) {
                       bool parens = minPrec > 0;
                       if (parens) out += "(";
                       type_rec(a.dom, 1, out);
                       out += " -> ";
                       type_rec(a.cod, 0, out);
                       if (parens) out += ")";
                   },
                   [&](const Type::Prod& p) {
                       bool parens = minPrec > 1;
                       if (parens) out += "(";
                       type_rec(p.left, 1, out);
                       out += " * ";
                       type_rec(p.right, 2, out);
                       if (parens) out += ")";
                   },
               },
               t->node);
}

} // namespace print_detail

inline std::string print_type(const TypePtr& t) {
    std::string out;
    print_detail::type_rec(t, 0, out);
    return out;
}

namespace print_detail {

inline void term_rec(const TermPtr& t, int minPrec, std::string& out) {
    // Precedence: lambda 0, application 1 (left assoc), atoms 2.
    std::visit(
        overloaded{
            [&](const Term::Var& v) { out += v.name; },
            [&](const Term::Lit& l) {
                bool parens = l.value < 0 && minPrec > 0;
                if (parens) out += "(";
                out += format_double(l.value);
                if (parens) out += ")";
            },
            [&](const Term::Prim& p) { out += p.name; },
            [&](const Term::Lam& l) {
                bool parens = minPrec > 0;
                if (parens) out += "(";
                out += "\\" + l.binder + ":" + print_type(l.annot) + ". ";
                term_rec(l.body, 0, out);
                if (parens) out += ")";
            },
            [&](const Term::App& a) {
                bool parens = minPrec > 1;
                if (parens) out += "(";
                term_rec(a.fun, 1, out);
                out += " ";
                term_rec(a.arg, 2, out);
                if (parens) out += ")";
            },
            [&](const Term::Pair& p) {
                out += "<";
                term_rec(p.first, 0, out);
                out += ", ";
                term_rec(p.second, 0, out);
                out += ">";
            },
            [&](const Term::Proj1&) { out += "fst"; },
            [&](const Term::Proj2&) { out += "snd"; },
            [&](const Term::Ifz& i) {
                out += "ifz(";
                term_rec(i.thenNeg, 0, out);
                out += ", ";
                term_rec(i.elseNonneg, 0, out);
                out += ")";
            },
            [&](const Term::Iter& i) {
                out += "iter(";
                term_rec(i.step, 0, out);
                out += ", ";
                term_rec(i.base, 0, out);
                out += ")";
            },
        },
        t->node);
}

} // namespace print_detail

inline std::string print_term(const TermPtr& t) {
    std::string out;
    print_detail::term_rec(t, 0, out);
    return out;
}

namespace print_detail {

/// Rename map for difference binders: a derived distance may give the point
/// and difference binder of one dlam the same name (they live in separate
/// namespaces), which the surface syntax cannot express.
struct DiffNames {
    std::map<std::string, std::vector<std::string>> diffRenames;
    std::set<std::string> taken;
};

inline void collect_idents_term(const TermPtr& t, std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const Term::Var& v) { out.insert(v.name); },
                   [&](const Term::Lit&) {},
                   [&](const Term::Prim& p) { out.insert(p.name); },
                   [&](const Term::Lam& l) {
                       out.insert(l.binder);
                       collect_idents_term(l.body, out);
                   },
                   [&](const Term::App& a) {
                       collect_idents_term(a.fun, out);
                       collect_idents_term(a.arg, out);
                   },
                   [&](const Term::Pair& p) {
                       collect_idents_term(p.first, out);
                       collect_idents_term(p.second, out);
                   },
                   [&](const Term::Proj1&) {},
                   [&](const Term::Proj2&) {},
                   [&](const Term::Ifz& i) {
                       collect_idents_term(i.thenNeg, out);
                       collect_idents_term(i.elseNonneg, out);
                   },
                   [&](const Term::Iter& i) {
                       collect_idents_term(i.step, out);
                       collect_idents_term(i.base, out);
                   },
               },
               t->node);
}

inline void collect_idents_real(const RealExprPtr& r, std::set<std::string>& out);
inline void collect_idents_diff(const DiffExprPtr& d, std::set<std::string>& out);

inline void collect_idents_real(const RealExprPtr& r, std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const RealExpr::Lit&) {},
                   [&](const RealExpr::PointRef& p) { out.insert(p.name); },
                   [&](const RealExpr::DiffRef& d) { out.insert(d.name); },
                   [&](const RealExpr::PrimApp& p) {
                       out.insert(p.prim);
                       for (auto& a : p.args) collect_idents_real(a, out);
                   },
                   [&](const RealExpr::SemApp& s) {
                       collect_idents_term(s.term, out);
                       for (auto& a : s.args) collect_idents_real(a, out);
                   },
               },
               r->node);
}

inline void collect_idents_diff(const DiffExprPtr& d, std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const DiffExpr::Const&) {},
                   [&](const DiffExpr::Infinity&) {},
                   [&](const DiffExpr::PointVar& v) { out.insert(v.name); },
                   [&](const DiffExpr::DiffVar& v) { out.insert(v.name); },
                   [&](const DiffExpr::Add& a) {
                       collect_idents_diff(a.lhs, out);
                       collect_idents_diff(a.rhs, out);
                   },
                   [&](const DiffExpr::AbsReal& a) { collect_idents_real(a.arg, out); },
                   [&](const DiffExpr::DLam& l) {
                       out.insert(l.pointName);
                       out.insert(l.diffName);
                       collect_idents_diff(l.body, out);
                   },
                   [&](const DiffExpr::DApp& a) {
                       collect_idents_diff(a.fun, out);
                       if (auto* r = std::get_if<RealExprPtr>(&a.point)) collect_idents_real(*r, out);
                       else collect_idents_term(std::get<TermPtr>(a.point), out);
                       collect_idents_diff(a.diff, out);
                   },
                   [&](const DiffExpr::DPair& p) {
                       collect_idents_diff(p.first, out);
                       collect_idents_diff(p.second, out);
                   },
                   [&](const DiffExpr::DFst& p) { collect_idents_diff(p.arg, out); },
                   [&](const DiffExpr::DSnd& p) { collect_idents_diff(p.arg, out); },
                   [&](const DiffExpr::FinSup& s) {
                       for (auto& i : s.items) collect_idents_diff(i, out);
                   },
                   [&](const DiffExpr::PrimDiam& p) {
                       out.insert(p.prim);
                       collect_idents_real(p.center, out);
                       collect_idents_diff(p.radius, out);
                   },
                   [&](const DiffExpr::GuardIfz& g) {
                       collect_idents_real(g.scrut, out);
                       collect_idents_diff(g.radius, out);
                       collect_idents_diff(g.dThen, out);
                       collect_idents_diff(g.dElse, out);
                   },
                   [&](const DiffExpr::GuardIter& g) {
                       collect_idents_term(g.step, out);
                       collect_idents_term(g.base, out);
                       collect_idents_real(g.scrut, out);
                       collect_idents_diff(g.radius, out);
                       collect_idents_diff(g.dStep, out);
                       collect_idents_diff(g.dBase, out);
                   },
               },
               d->node);
}

inline std::string diff_name_for(DiffNames& names, const std::string& n) {
    auto it = names.diffRenames.find(n);
    if (it != names.diffRenames.end() && !it->second.empty()) return it->second.back();
    return n;
}

inline void real_rec(const RealExprPtr& r, int minPrec, DiffNames& names, std::string& out);
inline void diff_rec(const DiffExprPtr& d, int minPrec, DiffNames& names, std::string& out);

inline void real_rec(const RealExprPtr& r, int minPrec, DiffNames& names, std::string& out) {
    // Precedence: + and - at 1 (left assoc), * at 2 (left assoc), atoms 3.
    // Infix forms are sugar for the plus/minus/mul primitives.
    std::visit(
        overloaded{
            [&](const RealExpr::Lit& l) {
                bool parens = l.value < 0 && minPrec > 1;
                if (parens) out += "(";
                out += format_double(l.value);
                if (parens) out += ")";
            },
            [&](const RealExpr::PointRef& p) { out += p.name; },
            [&](const RealExpr::DiffRef& d) { out += diff_name_for(names, d.name); },
            [&](const RealExpr::PrimApp& p) {
                const char* op = p.prim == "plus" ? " + " : p.prim == "minus" ? " - "
                                 : p.prim == "mul" ? " * " : nullptr;
                if (op && p.args.size() == 2) {
                    int prec = p.prim == "mul" ? 2 : 1;
                    bool parens = minPrec > prec;
                    if (parens) out += "(";
                    real_rec(p.args[0], prec, names, out);
                    out += op;
                    real_rec(p.args[1], prec + 1, names, out);
                    if (parens) out += ")";
                    return;
                }
                out += p.prim + "(";
                for (size_t i = 0; i < p.args.size(); i++) {
                    if (i) out += ", ";
                    real_rec(p.args[i], 0, names, out);
                }
                out += ")";
            },
            [&](const RealExpr::SemApp& s) {
                out += "nf(" + print_term(s.term) + ")(";
                for (size_t i = 0; i < s.args.size(); i++) {
                    if (i) out += ", ";
                    real_rec(s.args[i], 0, names, out);
                }
                out += ")";
            },
        },
        r->node);
}

inline void diff_rec(const DiffExprPtr& d, int minPrec, DiffNames& names, std::string& out) {
    // Precedence: dlam 0, + 1 (left assoc), @ 2 (left assoc), dfst/dsnd 3, atoms 4.
    std::visit(
        overloaded{
            [&](const DiffExpr::Const& c) { out += format_double(c.value); },
            [&](const DiffExpr::Infinity&) { out += "inf"; },
            [&](const DiffExpr::PointVar& v) { out += v.name; },
            [&](const DiffExpr::DiffVar& v) { out += diff_name_for(names, v.name); },
            [&](const DiffExpr::Add& a) {
                bool parens = minPrec > 1;
                if (parens) out += "(";
                diff_rec(a.lhs, 1, names, out);
                out += " + ";
                diff_rec(a.rhs, 2, names, out);
                if (parens) out += ")";
            },
            [&](const DiffExpr::AbsReal& a) {
                out += "abs(";
                real_rec(a.arg, 0, names, out);
                out += ")";
            },
            [&](const DiffExpr::DLam& l) {
                bool parens = minPrec > 0;
                if (parens) out += "(";
                std::string dn = l.diffName;
                if (dn == l.pointName || names.taken.count(dn)) {
                    std::set<std::string> avoid = names.taken;
                    avoid.insert(l.pointName);
                    collect_idents_diff(l.body, avoid);
                    dn = fresh_name("d" + l.diffName, avoid);
                }
                names.diffRenames[l.diffName].push_back(dn);
                bool dnFresh = names.taken.insert(dn).second;
                bool pnFresh = names.taken.insert(l.pointName).second;
                out += "dlam (" + l.pointName + ", " + dn + "). ";
                diff_rec(l.body, 0, names, out);
                names.diffRenames[l.diffName].pop_back();
                if (dnFresh) names.taken.erase(dn);
                if (pnFresh) names.taken.erase(l.pointName);
                if (parens) out += ")";
            },
            [&](const DiffExpr::DApp& a) {
                bool parens = minPrec > 2;
                if (parens) out += "(";
                diff_rec(a.fun, 2, names, out);
                out += " @ (";
                if (auto* r = std::get_if<RealExprPtr>(&a.point)) real_rec(*r, 0, names, out);
                else out += "{" + print_term(std::get<TermPtr>(a.point)) + "}";
                out += ", ";
                diff_rec(a.diff, 0, names, out);
                out += ")";
                if (parens) out += ")";
            },
            [&](const DiffExpr::DPair& p) {
                out += "<";
                diff_rec(p.first, 0, names, out);
                out += ", ";
                diff_rec(p.second, 0, names, out);
                out += ">";
            },
            [&](const DiffExpr::DFst& p) {
                bool parens = minPrec > 3;
                if (parens) out += "(";
                out += "dfst ";
                diff_rec(p.arg, 4, names, out);
                if (parens) out += ")";
            },
            [&](const DiffExpr::DSnd& p) {
                bool parens = minPrec > 3;
                if (parens) out += "(";
                out += "dsnd ";
                diff_rec(p.arg, 4, names, out);
                if (parens) out += ")";
            },
            [&](const DiffExpr::FinSup& s) {
                out += "sup{";
                for (size_t i = 0; i < s.items.size(); i++) {
                    if (i) out += ", ";
                    diff_rec(s.items[i], 0, names, out);
                }
                out += "}";
            },
            [&](const DiffExpr::PrimDiam& p) {
                out += "diam(" + p.prim + ", ";
                real_rec(p.center, 0, names, out);
                out += ", ";
                diff_rec(p.radius, 0, names, out);
                out += ")";
            },
            [&](const DiffExpr::GuardIfz& g) {
                out += "ifzguard[" + print_type(g.sort) + "](";
                real_rec(g.scrut, 0, names, out);
                out += ", ";
                diff_rec(g.radius, 0, names, out);
                out += ", ";
                diff_rec(g.dThen, 0, names, out);
                out += ", ";
                diff_rec(g.dElse, 0, names, out);
                out += ")";
            },
            [&](const DiffExpr::GuardIter& g) {
                out += "iterguard[" + print_type(g.sort) + "]({" + print_term(g.step) + "}, {" +
                       print_term(g.base) + "}, ";
                real_rec(g.scrut, 0, names, out);
                out += ", ";
                diff_rec(g.radius, 0, names, out);
                out += ", ";
                diff_rec(g.dStep, 0, names, out);
                out += ", ";
                diff_rec(g.dBase, 0, names, out);
                out += ")";
            },
        },
        d->node);
}

} // namespace print_detail

inline std::string print_real(const RealExprPtr& r) {
    print_detail::DiffNames names;
    std::string out;
    print_detail::real_rec(r, 0, names, out);
    return out;
}

inline std::string print_diff(const DiffExprPtr& d) {
    print_detail::DiffNames names;
    std::string out;
    print_detail::diff_rec(d, 0, names, out);
    return out;
}

} // namespace stlr
