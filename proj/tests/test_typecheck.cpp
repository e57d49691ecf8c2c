#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "stlr/error.hpp"
#include "stlr/parser.hpp"
#include "stlr/printer.hpp"
#include "stlr/typecheck.hpp"

using namespace stlr;

namespace {

TypePtr infer0(const std::string& src) { return infer(TypeEnv{}, parse_term(src)); }

std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("literals and lambdas infer") {
    CHECK(print_type(infer0("3.5")) == "Real");
    CHECK(print_type(infer0("\\x:Real. x")) == "Real -> Real");
    CHECK(print_type(infer0("\\f:Real -> Real. \\x:Real. f (f x)")) ==
          "(Real -> Real) -> Real -> Real");
}

TEST_CASE("primitives get flattened tuple domains") {
    CHECK(print_type(infer0("sin")) == "Real -> Real");
    // Binary primitives consume one left-nested real tuple.
    CHECK(print_type(infer0("plus")) == "Real * Real -> Real");
    CHECK(print_type(infer0("plus <1, 2>")) == "Real");
    CHECK(print_type(infer0("sin 1.5")) == "Real");
}

TEST_CASE("application checks the argument") {
    CHECK_THROWS_AS(infer0("sin (\\x:Real. x)"), Error);
    CHECK_THROWS_AS(infer0("1 2"), Error);
    std::string msg = error_message([] { infer0("1 2"); });
    CHECK(msg.find("non-function") != std::string::npos);
}

TEST_CASE("unbound variables are type errors") {
    try {
        infer0("\\x:Real. y");
        FAIL("expected a type error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Type);
        CHECK(std::string(e.what()).find("y") != std::string::npos);
    }
}

TEST_CASE("pairs and projections") {
    CHECK(print_type(infer0("<1, sin>")) == "Real * (Real -> Real)");
    CHECK(print_type(infer0("fst <1, sin>")) == "Real");
    CHECK(print_type(infer0("snd <1, sin>")) == "Real -> Real");
    // Bare projections are schematic: no argument and no expected type means
    // there is nothing to resolve the product against.
    CHECK_THROWS_AS(infer0("fst"), Error);
    CHECK_NOTHROW(check_against(TypeEnv{}, parse_term("fst"),
                                parse_type("Real * Real -> Real"), default_registry()));
    CHECK_THROWS_AS(check_against(TypeEnv{}, parse_term("fst"),
                                  parse_type("Real * Real -> Real -> Real"), default_registry()),
                    Error);
    CHECK_THROWS_AS(infer0("fst 1"), Error);
}

TEST_CASE("ifz branches must agree") {
    CHECK(print_type(infer0("ifz(1, 2)")) == "Real -> Real");
    CHECK(print_type(infer0("ifz(1, 2) 0.5")) == "Real");
    CHECK(print_type(infer0("ifz(sin, \\x:Real. x)")) == "Real -> Real -> Real");
    CHECK_THROWS_AS(infer0("ifz(1, sin)"), Error);
}

TEST_CASE("iter steps an endofunction from a base") {
    CHECK(print_type(infer0("iter(add1, 0)")) == "Real -> Real");
    CHECK(print_type(infer0("iter(\\p:Real * Real. p, <0, 0>)")) == "Real -> Real * Real");
    CHECK_THROWS_AS(infer0("iter(sin, sin)"), Error);
    std::string msg = error_message([] { infer0("iter(1, 0)"); });
    CHECK(msg.find("T -> T") != std::string::npos);
}

TEST_CASE("checking mode accepts what inference cannot") {
    // Both branches are schematic projections; inference has nothing to
    // resolve them against, but an expected type does.
    TermPtr t = parse_term("ifz(fst, snd)");
    CHECK_THROWS_AS(infer(TypeEnv{}, t, default_registry()), Error);
    CHECK_NOTHROW(check_against(TypeEnv{}, t, parse_type("Real -> Real * Real -> Real"),
                                default_registry()));
}

TEST_CASE("check against mismatching type reports both sides") {
    std::string msg = error_message([] {
        check_against(TypeEnv{}, parse_term("\\x:Real. x"), parse_type("Real"),
                      default_registry());
    });
    CHECK(msg.find("non-arrow") != std::string::npos);
    msg = error_message([] {
        check_against(TypeEnv{}, parse_term("1"), parse_type("Real -> Real"), default_registry());
    });
    CHECK(msg.find("Real -> Real") != std::string::npos);
}

TEST_CASE("environments scope lexically") {
    TypeEnv env = TypeEnv{}.extended("g", parse_type("Real -> Real"));
    CHECK(print_type(infer(env, parse_term("g 1"), default_registry())) == "Real");
    // Inner binding shadows the outer one.
    CHECK(print_type(infer(env, parse_term("\\g:Real. g"), default_registry())) == "Real -> Real");
}

TEST_CASE("difference sorts follow the underlying type") {
    CHECK_NOTHROW(parse_diff("dlam (x, dx). dx", parse_type("Real -> Real")));
    CHECK_NOTHROW(parse_diff("dlam (x, dx). dx + abs(x - sin(x))", parse_type("Real -> Real")));
    CHECK_NOTHROW(parse_diff("<0, inf>", parse_type("Real * Real")));
    CHECK_NOTHROW(parse_diff("dlam (p, dp). <dsnd dp, dfst dp>",
                             parse_type("Real * Real -> Real * Real")));
    // A bare constant is not a function-sorted difference.
    CHECK_THROWS_AS(parse_diff("0", parse_type("Real -> Real")), Error);
    CHECK_THROWS_AS(parse_diff("dlam (x, dx). dx", parse_type("Real")), Error);
    CHECK_THROWS_AS(parse_diff("<0, 0>", parse_type("Real")), Error);
}

TEST_CASE("difference sort errors identify the offender") {
    // Surface syntax resolves names while parsing; an unbound difference
    // variable built directly still fails sort checking.
    try {
        parse_diff("dlam (x, dx). dy", parse_type("Real -> Real"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("dy") != std::string::npos);
    }
    try {
        sort_check(d_var("dy"), t_real(), DiffCtx{});
        FAIL("expected a sort error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Sort);
        CHECK(std::string(e.what()).find("dy") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_diff("dlam (x, dx). abs(dx * q)", parse_type("Real -> Real")), Error);
}

TEST_CASE("point variables in formulas must be real-valued") {
    // The point bound by this dlam is a function, so it cannot appear inside
    // a real-valued formula.
    CHECK_THROWS_AS(parse_diff("dlam (f, df). abs(f)", parse_type("(Real -> Real) -> Real")),
                    Error);
    CHECK_NOTHROW(parse_diff("dlam (f, df). df @ (0, 0)", parse_type("(Real -> Real) -> Real")));
}

TEST_CASE("difference application sorts") {
    // A second-order input is applied at a function point, so the point
    // argument is a term and the difference argument is arrow-sorted.
    TypePtr at2 = parse_type("((Real -> Real) -> Real) -> Real");
    CHECK_NOTHROW(parse_diff("dlam (F, dF). dF @ ({\\x:Real. x}, dlam (y, dy). dy)", at2));
    // Applying a real-sorted difference is a sort error.
    CHECK_THROWS_AS(parse_diff("dlam (x, dx). dx @ (0, 0)", parse_type("Real -> Real")), Error);
    // So is passing a real difference where the domain is an arrow.
    CHECK_THROWS_AS(parse_diff("dlam (F, dF). dF @ ({\\x:Real. x}, 1)", at2), Error);
}

TEST_CASE("sup members must share a sort") {
    CHECK_NOTHROW(parse_diff("sup{0, 1, inf}", parse_type("Real")));
    CHECK_THROWS_AS(parse_diff("sup{0, <0, 0>}", parse_type("Real")), Error);
    CHECK_THROWS_AS(parse_diff("sup{<0, 0>}", parse_type("Real")), Error);
}

TEST_CASE("semantic references take closed terms") {
    CHECK_NOTHROW(parse_diff("abs(nf(sin 1)())", parse_type("Real")));
    CHECK_NOTHROW(parse_diff("abs(nf(\\x:Real. x)(2) - 2)", parse_type("Real")));
    CHECK_THROWS_AS(parse_diff("abs(nf(x)())", parse_type("Real")), Error);
}

TEST_CASE("guard annotations fix the branch sort") {
    TypePtr rr = parse_type("Real -> Real");
    CHECK_NOTHROW(parse_diff("dlam (x, dx). ifzguard[Real](x, dx, 0, 1)", rr));
    // The step difference lives at the step's endofunction type.
    CHECK_NOTHROW(parse_diff(
        "dlam (x, dx). iterguard[Real]({add1}, {0}, x, dx, dlam (y, dy). dy, 0)", rr));
    CHECK_THROWS_AS(
        parse_diff("dlam (x, dx). iterguard[Real]({add1}, {0}, x, dx, 0, dx)", rr), Error);
    // Branch differences must live at the annotated sort.
    CHECK_THROWS_AS(parse_diff("dlam (x, dx). ifzguard[Real](x, dx, <0, 0>, 1)", rr), Error);
}
