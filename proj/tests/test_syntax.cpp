#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "stlr/error.hpp"
#include "stlr/parser.hpp"
#include "stlr/printer.hpp"
#include "stlr/syntax.hpp"

using namespace stlr;

TEST_CASE("type constructors and equality") {
    TypePtr r = t_real();
    TypePtr rr = t_arrow(r, r);
    CHECK(is_real(r));
    CHECK(as_arrow(rr) != nullptr);
    CHECK(as_prod(t_prod(r, r)) != nullptr);
    CHECK(type_eq(rr, t_arrow(t_real(), t_real())));
    CHECK_FALSE(type_eq(rr, t_prod(r, r)));
}

TEST_CASE("real powers are left-nested products") {
    CHECK(type_eq(t_real_pow(1), t_real()));
    // Real^3 = (Real * Real) * Real, matching how n-ary primitives consume
    // their argument tuple.
    TypePtr r3 = t_real_pow(3);
    auto* outer = as_prod(r3);
    REQUIRE(outer != nullptr);
    CHECK(as_prod(outer->left) != nullptr);
    CHECK(is_real(outer->right));
}

TEST_CASE("type order counts arrow nesting") {
    TypePtr r = t_real();
    CHECK(type_order(r) == 0);
    CHECK(type_order(t_arrow(r, r)) == 1);
    CHECK(type_order(t_arrow(t_arrow(r, r), r)) == 2);
    CHECK(type_order(t_prod(r, t_arrow(r, r))) == 1);
}

TEST_CASE("type printing and parsing agree") {
    for (const char* s : {"Real", "Real -> Real", "Real -> Real -> Real", "Real * Real -> Real",
                          "(Real -> Real) -> Real", "Real * (Real -> Real)", "Real * Real * Real"}) {
        TypePtr t = parse_type(s);
        CHECK(print_type(t) == s);
        CHECK(type_eq(parse_type(print_type(t)), t));
    }
    // Arrow associates right, star binds tighter than arrow.
    CHECK(type_eq(parse_type("Real -> Real -> Real"),
                  t_arrow(t_real(), t_arrow(t_real(), t_real()))));
    CHECK(type_eq(parse_type("Real * Real -> Real"),
                  t_arrow(t_prod(t_real(), t_real()), t_real())));
    // Star associates left, the same nesting real powers use.
    CHECK(type_eq(parse_type("Real * Real * Real"), t_real_pow(3)));
}

TEST_CASE("free variables and closedness") {
    TermPtr open = m_app(m_var("f"), m_lit(1.0));
    CHECK(free_vars(open) == std::set<std::string>{"f"});
    CHECK_FALSE(is_closed(open));

    TermPtr lam = m_lam("x", t_real(), m_app(m_var("f"), m_var("x")));
    CHECK(free_vars(lam) == std::set<std::string>{"f"});
    CHECK(is_closed(m_lam("f", t_arrow(t_real(), t_real()), lam)));
}

TEST_CASE("substitution avoids capture") {
    // (\y:Real. x)[x := y] must rename the binder, not capture the free y.
    TermPtr body = m_lam("y", t_real(), m_var("x"));
    TermPtr out = subst_term(body, "x", m_var("y"));
    CHECK(alpha_eq(out, m_lam("z", t_real(), m_var("y"))));
    CHECK_FALSE(alpha_eq(out, m_lam("y", t_real(), m_var("y"))));
}

TEST_CASE("substitution stops at shadowing binders") {
    TermPtr t = m_lam("x", t_real(), m_var("x"));
    CHECK(term_eq(subst_term(t, "x", m_lit(3.0)), t));
}

TEST_CASE("structural versus alpha equality") {
    TermPtr a = m_lam("x", t_real(), m_var("x"));
    TermPtr b = m_lam("y", t_real(), m_var("y"));
    CHECK(term_eq(a, a));
    CHECK_FALSE(term_eq(a, b));
    CHECK(alpha_eq(a, b));
    CHECK_FALSE(alpha_eq(a, m_lam("x", t_real(), m_lit(0.0))));
}

TEST_CASE("term printing round-trips through the parser") {
    for (const char* s : {
             "\\x:Real. x",
             "\\f:Real -> Real. \\x:Real. f (f x)",
             "\\p:Real * Real. fst p",
             "\\p:Real * Real. <snd p, fst p>",
             "sin 1.5",
             "plus <1, 2>",
             "ifz(1, 2) 0.5",
             "iter(\\x:Real. x, 0) 3.5",
             "(\\x:Real. x) 2",
             "-2.5",
         }) {
        TermPtr t = parse_term(s);
        CHECK(print_term(t) == s);
        CHECK(term_eq(parse_term(print_term(t)), t));
    }
}

TEST_CASE("application is left associative") {
    TermPtr t = parse_term("f g h");
    auto* outer = std::get_if<Term::App>(&t->node);
    REQUIRE(outer != nullptr);
    CHECK(std::get_if<Term::App>(&outer->fun->node) != nullptr);
    CHECK(std::get_if<Term::Var>(&outer->arg->node) != nullptr);
}

TEST_CASE("parse errors carry positions") {
    try {
        parse_term("\\x:Real.");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        REQUIRE(e.pos().has_value());
        CHECK(e.pos()->line == 1);
    }
    CHECK_THROWS_AS(parse_term("(1"), Error);
    CHECK_THROWS_AS(parse_term(""), Error);
    CHECK_THROWS_AS(parse_term("1 2 )"), Error);
}

TEST_CASE("reserved words cannot bind") {
    CHECK_THROWS_AS(parse_term("\\fst:Real. fst"), Error);
    CHECK_THROWS_AS(parse_term("\\Real:Real. 0"), Error);
}

TEST_CASE("difference constants reject bad values") {
    CHECK_THROWS_AS(d_const(-1.0), Error);
    CHECK_THROWS_AS(d_const(std::numeric_limits<double>::quiet_NaN()), Error);
    // An infinite constant folds into the dedicated infinity node.
    DiffExprPtr inf = d_const(std::numeric_limits<double>::infinity());
    CHECK(std::get_if<DiffExpr::Infinity>(&inf->node) != nullptr);
    CHECK(print_diff(inf) == "inf");
}

TEST_CASE("difference expressions round-trip through the parser") {
    for (const char* s : {
             "0",
             "inf",
             "1.5 + 2",
             "dlam (x, dx). dx",
             "dlam (x, dx). dx + abs(x - sin(x))",
             "dlam (x, dx). abs((x + dx) * (x + dx))",
             "dlam (p, dp). <dsnd dp, dfst dp>",
             "sup{0, 1, 2}",
             "dlam (x, dx). diam(sin, x, dx)",
             "dlam (f, df). df @ (0, 1)",
             "dlam (f, df). df @ ({\\x:Real. x}, 1)",
         }) {
        DiffExprPtr d = parse_diff_raw(s);
        CHECK(print_diff(d) == s);
        CHECK(print_diff(parse_diff_raw(print_diff(d))) == s);
    }
}

TEST_CASE("guard forms round-trip") {
    const char* ifz = "ifzguard[Real](x, dx, 0, 1)";
    DiffExprPtr d = parse_diff_raw(std::string("dlam (x, dx). ") + ifz);
    CHECK(print_diff(d) == std::string("dlam (x, dx). ") + ifz);

    const char* it = "dlam (x, dx). iterguard[Real]({\\y:Real. y}, {0}, x, dx, dlam (y, dy). dy, 0)";
    CHECK(print_diff(parse_diff_raw(it)) == it);
}

TEST_CASE("difference grammar has no multiplication") {
    CHECK_THROWS_AS(parse_diff_raw("dlam (x, dx). dx * dx"), Error);
    // Real-level formulas reach the difference level only through abs.
    CHECK_NOTHROW(parse_diff_raw("dlam (x, dx). abs(dx * dx)"));
}

TEST_CASE("printer renames clashing binders instead of capturing") {
    // A nested dlam reusing the outer point name must print with distinct
    // binders so the output reparses to the same expression.
    DiffExprPtr inner = d_lam("x", "e", d_add(d_var("e"), d_var("f")));
    DiffExprPtr outer = d_lam("x", "f", inner);
    std::string printed = print_diff(outer);
    DiffExprPtr back = parse_diff_raw(printed);
    CHECK(print_diff(back) == printed);
}
