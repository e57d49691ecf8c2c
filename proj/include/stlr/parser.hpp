#pragma once

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stlr/error.hpp"
#include "stlr/prims.hpp"
#include "stlr/syntax.hpp"
#include "stlr/typecheck.hpp"

namespace stlr {

namespace parse_detail {

enum class Tok {
    Ident,
    Number,
    Backslash,
    Dot,
    Colon,
    Comma,
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Arrow,
    Star,
    Plus,
    Minus,
    At,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    double num = 0;
    SourcePos pos;
};

inline bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
inline bool ident_char(char c) {
    return std::isalnum((unsigned char)c) || c == '_' || c == '\'';
}

inline std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto push = [&](Tok k, std::string t, double n = 0) {
        out.push_back(Token{k, std::move(t), n, SourcePos{line, col}});
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            line++;
            col = 1;
            i++;
            continue;
        }
        if (std::isspace((unsigned char)c)) {
            i++;
            col++;
            continue;
        }
        SourcePos here{line, col};
        if (std::isdigit((unsigned char)c)) {
            size_t j = i;
            while (j < text.size() && std::isdigit((unsigned char)text[j])) j++;
            if (j < text.size() && text[j] == '.' && j + 1 < text.size() &&
                std::isdigit((unsigned char)text[j + 1])) {
                j++;
                while (j < text.size() && std::isdigit((unsigned char)text[j])) j++;
            }
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) k++;
                if (k < text.size() && std::isdigit((unsigned char)text[k])) {
                    j = k;
                    while (j < text.size() && std::isdigit((unsigned char)text[j])) j++;
                }
            }
            std::string t = text.substr(i, j - i);
            double v = 0;
            try {
                v = std::stod(t);
            } catch (...) {
                fail(ErrorKind::Parse, "bad number literal: " + t, here);
            }
            out.push_back(Token{Tok::Number, t, v, here});
            col += (int)(j - i);
            i = j;
            continue;
        }
        if (ident_start(c)) {
            size_t j = i;
            while (j < text.size() && ident_char(text[j])) j++;
            std::string t = text.substr(i, j - i);
            out.push_back(Token{Tok::Ident, t, 0, here});
            col += (int)(j - i);
            i = j;
            continue;
        }
        if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            push(Tok::Arrow, "->");
            i += 2;
            col += 2;
            continue;
        }
        Tok k;
        switch (c) {
        case '\\': k = Tok::Backslash; break;
        case '.': k = Tok::Dot; break;
        case ':': k = Tok::Colon; break;
        case ',': k = Tok::Comma; break;
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case '<': k = Tok::LAngle; break;
        case '>': k = Tok::RAngle; break;
        case '{': k = Tok::LBrace; break;
        case '}': k = Tok::RBrace; break;
        case '[': k = Tok::LBracket; break;
        case ']': k = Tok::RBracket; break;
        case '*': k = Tok::Star; break;
        case '+': k = Tok::Plus; break;
        case '-': k = Tok::Minus; break;
        case '@': k = Tok::At; break;
        default:
            fail(ErrorKind::Parse, std::string("unexpected character `") + c + "`", here);
        }
        push(k, std::string(1, c));
        i++;
        col++;
    }
    out.push_back(Token{Tok::End, "", 0, SourcePos{line, col}});
    return out;
}

inline const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {"Real", "fst",  "snd",      "ifz",       "iter",
                                               "dlam", "dfst", "dsnd",     "sup",       "abs",
                                               "diam", "inf",  "nf",       "ifzguard",  "iterguard"};
    return words;
}

class Parser {
public:
    Parser(std::vector<Token> toks, const PrimRegistry& reg) : toks_(std::move(toks)), reg_(reg) {}

    TypePtr type() {
        TypePtr left = prod_type();
        if (at(Tok::Arrow)) {
            next();
            return t_arrow(left, type());
        }
        return left;
    }

    TermPtr term() {
        if (at(Tok::Backslash)) {
            next();
            std::string x = binder_name();
            expect(Tok::Colon, "`:` after binder");
            TypePtr t = type();
            expect(Tok::Dot, "`.` after binder annotation");
            termBound_.push_back(x);
            TermPtr body = term();
            termBound_.pop_back();
            return m_lam(x, t, body);
        }
        TermPtr head = term_atom();
        while (starts_term_atom()) head = m_app(head, term_atom());
        return head;
    }

    DiffExprPtr dexpr() {
        if (at(Tok::Ident) && cur().text == "dlam") {
            next();
            expect(Tok::LParen, "`(` after dlam");
            std::string x = binder_name();
            expect(Tok::Comma, "`,` between dlam binders");
            std::string e = binder_name();
            expect(Tok::RParen, "`)` after dlam binders");
            expect(Tok::Dot, "`.` after dlam binders");
            if (x == e) fail(ErrorKind::Parse, "point and difference binders must differ", pos());
            scopes_.push_back({{x, Kind::Point}, {e, Kind::Diff}});
            DiffExprPtr body = dexpr();
            scopes_.pop_back();
            return d_lam(x, e, body);
        }
        return dsum();
    }

    RealExprPtr rexpr() { return rsum(); }

    void finish() {
        if (!at(Tok::End)) fail(ErrorKind::Parse, "trailing input after expression", pos());
    }

private:
    enum class Kind { Point, Diff };

    const Token& cur() const { return toks_[pos_]; }
    SourcePos pos() const { return cur().pos; }
    bool at(Tok k) const { return cur().kind == k; }
    const Token& next() { return toks_[pos_++]; }
    void expect(Tok k, const char* what) {
        if (!at(k)) fail(ErrorKind::Parse, std::string("expected ") + what, pos());
        next();
    }

    std::string binder_name() {
        if (!at(Tok::Ident)) fail(ErrorKind::Parse, "expected binder name", pos());
        std::string n = next().text;
        if (reserved_words().count(n))
            fail(ErrorKind::Parse, "reserved word used as binder: " + n, pos());
        return n;
    }

    TypePtr prod_type() {
        TypePtr left = atom_type();
        while (at(Tok::Star)) {
            next();
            left = t_prod(left, atom_type());
        }
        return left;
    }

    TypePtr atom_type() {
        if (at(Tok::Ident) && cur().text == "Real") {
            next();
            return t_real();
        }
        if (at(Tok::LParen)) {
            next();
            TypePtr t = type();
            expect(Tok::RParen, "`)` in type");
            return t;
        }
        fail(ErrorKind::Parse, "expected a type", pos());
    }

    bool term_bound(const std::string& n) const {
        for (auto it = termBound_.rbegin(); it != termBound_.rend(); ++it)
            if (*it == n) return true;
        return false;
    }

    bool starts_term_atom() const {
        switch (cur().kind) {
        case Tok::Number:
        case Tok::LParen:
        case Tok::LAngle:
        case Tok::Minus:
            return true;
        case Tok::Ident:
            return cur().text != "Real";
        default:
            return false;
        }
    }

    TermPtr term_atom() {
        if (at(Tok::Number)) return m_lit(next().num);
        if (at(Tok::Minus)) {
            next();
            if (!at(Tok::Number)) fail(ErrorKind::Parse, "expected number after `-`", pos());
            return m_lit(-next().num);
        }
        if (at(Tok::LParen)) {
            next();
            TermPtr t = term();
            expect(Tok::RParen, "`)` in term");
            return t;
        }
        if (at(Tok::LAngle)) {
            next();
            TermPtr a = term();
            expect(Tok::Comma, "`,` in pair");
            TermPtr b = term();
            expect(Tok::RAngle, "`>` closing pair");
            return m_pair(a, b);
        }
        if (at(Tok::Ident)) {
            std::string n = next().text;
            if (n == "fst") return m_proj1();
            if (n == "snd") return m_proj2();
            if (n == "inf") return m_lit(kInf);
            if (n == "ifz" || n == "iter") {
                expect(Tok::LParen, "`(` after keyword");
                TermPtr a = term();
                expect(Tok::Comma, "`,` between branches");
                TermPtr b = term();
                expect(Tok::RParen, "`)` closing keyword form");
                return n == "ifz" ? m_ifz(a, b) : m_iter(a, b);
            }
            if (reserved_words().count(n))
                fail(ErrorKind::Parse, "reserved word in term position: " + n, pos());
            if (!term_bound(n) && reg_.has(n)) return m_prim(n, reg_.get(n).arity);
            return m_var(n);
        }
        fail(ErrorKind::Parse, "expected a term", pos());
    }

    std::optional<Kind> resolve(const std::string& n) const {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto f = it->find(n);
            if (f != it->end()) return f->second;
        }
        return std::nullopt;
    }

    DiffExprPtr dsum() {
        DiffExprPtr left = dapp();
        while (at(Tok::Plus)) {
            next();
            left = d_add(left, dapp());
        }
        return left;
    }

    DiffExprPtr dapp() {
        DiffExprPtr head = dprefix();
        while (at(Tok::At)) {
            next();
            expect(Tok::LParen, "`(` after `@`");
            PointArg p = point_arg();
            expect(Tok::Comma, "`,` between application arguments");
            DiffExprPtr d = dexpr();
            expect(Tok::RParen, "`)` closing application");
            head = d_app(head, std::move(p), d);
        }
        return head;
    }

    PointArg point_arg() {
        if (at(Tok::LBrace)) {
            next();
            TermPtr t = term();
            expect(Tok::RBrace, "`}` closing term point argument");
            return t;
        }
        return rexpr();
    }

    DiffExprPtr dprefix() {
        if (at(Tok::Ident) && (cur().text == "dfst" || cur().text == "dsnd")) {
            bool first = next().text == "dfst";
            DiffExprPtr inner = dprefix();
            return first ? d_fst(inner) : d_snd(inner);
        }
        return datom();
    }

    DiffExprPtr datom() {
        if (at(Tok::Number)) return d_const(next().num);
        if (at(Tok::LParen)) {
            next();
            DiffExprPtr d = dexpr();
            expect(Tok::RParen, "`)` in difference expression");
            return d;
        }
        if (at(Tok::LAngle)) {
            next();
            DiffExprPtr a = dexpr();
            expect(Tok::Comma, "`,` in difference pair");
            DiffExprPtr b = dexpr();
            expect(Tok::RAngle, "`>` closing difference pair");
            return d_pair(a, b);
        }
        if (!at(Tok::Ident)) fail(ErrorKind::Parse, "expected a difference expression", pos());
        std::string n = next().text;
        if (n == "inf") return d_inf();
        if (n == "abs") {
            expect(Tok::LParen, "`(` after abs");
            RealExprPtr r = rexpr();
            expect(Tok::RParen, "`)` closing abs");
            return d_abs(r);
        }
        if (n == "sup") {
            expect(Tok::LBrace, "`{` after sup");
            std::vector<DiffExprPtr> items;
            if (!at(Tok::RBrace)) {
                items.push_back(dexpr());
                while (at(Tok::Comma)) {
                    next();
                    items.push_back(dexpr());
                }
            }
            expect(Tok::RBrace, "`}` closing sup");
            return d_sup(std::move(items));
        }
        if (n == "diam") {
            expect(Tok::LParen, "`(` after diam");
            if (!at(Tok::Ident)) fail(ErrorKind::Parse, "expected primitive name in diam", pos());
            std::string prim = next().text;
            if (!reg_.has(prim)) fail(ErrorKind::Parse, "unknown primitive name: " + prim, pos());
            expect(Tok::Comma, "`,` after diam primitive");
            RealExprPtr center = rexpr();
            expect(Tok::Comma, "`,` after diam center");
            DiffExprPtr radius = dexpr();
            expect(Tok::RParen, "`)` closing diam");
            return d_diam(prim, center, radius);
        }
        if (n == "ifzguard") {
            expect(Tok::LBracket, "`[` after ifzguard");
            TypePtr sort = type();
            expect(Tok::RBracket, "`]` after ifzguard sort");
            expect(Tok::LParen, "`(` after ifzguard");
            RealExprPtr scrut = rexpr();
            expect(Tok::Comma, "`,` in ifzguard");
            DiffExprPtr radius = dexpr();
            expect(Tok::Comma, "`,` in ifzguard");
            DiffExprPtr dThen = dexpr();
            expect(Tok::Comma, "`,` in ifzguard");
            DiffExprPtr dElse = dexpr();
            expect(Tok::RParen, "`)` closing ifzguard");
            return d_guard_ifz(scrut, radius, dThen, dElse, sort);
        }
        if (n == "iterguard") {
            expect(Tok::LBracket, "`[` after iterguard");
            TypePtr sort = type();
            expect(Tok::RBracket, "`]` after iterguard sort");
            expect(Tok::LParen, "`(` after iterguard");
            expect(Tok::LBrace, "`{` opening step term");
            TermPtr step = term();
            expect(Tok::RBrace, "`}` closing step term");
            expect(Tok::Comma, "`,` in iterguard");
            expect(Tok::LBrace, "`{` opening base term");
            TermPtr base = term();
            expect(Tok::RBrace, "`}` closing base term");
            expect(Tok::Comma, "`,` in iterguard");
            RealExprPtr scrut = rexpr();
            expect(Tok::Comma, "`,` in iterguard");
            DiffExprPtr radius = dexpr();
            expect(Tok::Comma, "`,` in iterguard");
            DiffExprPtr dStep = dexpr();
            expect(Tok::Comma, "`,` in iterguard");
            DiffExprPtr dBase = dexpr();
            expect(Tok::RParen, "`)` closing iterguard");
            return d_guard_iter(step, base, scrut, radius, dStep, dBase, sort);
        }
        if (reserved_words().count(n))
            fail(ErrorKind::Parse, "reserved word in difference position: " + n, pos());
        auto kind = resolve(n);
        if (!kind) fail(ErrorKind::Parse, "unbound identifier: " + n, pos());
        return *kind == Kind::Diff ? d_var(n) : d_pointvar(n);
    }

    RealExprPtr rsum() {
        RealExprPtr left = rmul();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            bool plus = next().kind == Tok::Plus;
            left = r_prim(plus ? "plus" : "minus", {left, rmul()});
        }
        return left;
    }

    RealExprPtr rmul() {
        RealExprPtr left = ratom();
        while (at(Tok::Star)) {
            next();
            left = r_prim("mul", {left, ratom()});
        }
        return left;
    }

    std::vector<RealExprPtr> rargs() {
        std::vector<RealExprPtr> args;
        expect(Tok::LParen, "`(` opening argument list");
        if (!at(Tok::RParen)) {
            args.push_back(rexpr());
            while (at(Tok::Comma)) {
                next();
                args.push_back(rexpr());
            }
        }
        expect(Tok::RParen, "`)` closing argument list");
        return args;
    }

    RealExprPtr ratom() {
        if (at(Tok::Number)) return r_lit(next().num);
        if (at(Tok::Minus)) {
            next();
            if (!at(Tok::Number)) fail(ErrorKind::Parse, "expected number after `-`", pos());
            return r_lit(-next().num);
        }
        if (at(Tok::LParen)) {
            next();
            RealExprPtr r = rexpr();
            expect(Tok::RParen, "`)` in real expression");
            return r;
        }
        if (!at(Tok::Ident)) fail(ErrorKind::Parse, "expected a real expression", pos());
        std::string n = next().text;
        if (n == "nf") {
            expect(Tok::LParen, "`(` after nf");
            TermPtr t = term();
            expect(Tok::RParen, "`)` closing nf term");
            return r_sem(t, rargs());
        }
        if (at(Tok::LParen)) {
            if (!reg_.has(n)) fail(ErrorKind::Parse, "unknown primitive name: " + n, pos());
            return r_prim(n, rargs());
        }
        if (reserved_words().count(n))
            fail(ErrorKind::Parse, "reserved word in real position: " + n, pos());
        auto kind = resolve(n);
        if (!kind) fail(ErrorKind::Parse, "unbound identifier: " + n, pos());
        return *kind == Kind::Point ? r_point(n) : r_diff(n);
    }

    std::vector<Token> toks_;
    const PrimRegistry& reg_;
    size_t pos_ = 0;
    std::vector<std::string> termBound_;
    std::vector<std::map<std::string, Kind>> scopes_;
};

} // namespace parse_detail

inline TypePtr parse_type(const std::string& text) {
    parse_detail::Parser p(parse_detail::lex(text), default_registry());
    TypePtr t = p.type();
    p.finish();
    return t;
}

inline TermPtr parse_term(const std::string& text, const PrimRegistry& reg = default_registry()) {
    parse_detail::Parser p(parse_detail::lex(text), reg);
    TermPtr t = p.term();
    p.finish();
    return t;
}

/// Parse without sort checking; sorts of free variables are unknown here.
inline DiffExprPtr parse_diff_raw(const std::string& text,
                                  const PrimRegistry& reg = default_registry()) {
    parse_detail::Parser p(parse_detail::lex(text), reg);
    DiffExprPtr d = p.dexpr();
    p.finish();
    return d;
}

/// Parse a closed difference expression and check it against the expected
/// sort. This is the entry point for `.dexpr` files.
inline DiffExprPtr parse_diff(const std::string& text, const TypePtr& expected,
                              const PrimRegistry& reg = default_registry()) {
    DiffExprPtr d = parse_diff_raw(text, reg);
    sort_check(d, expected, DiffCtx{}, reg);
    return d;
}

} // namespace stlr
