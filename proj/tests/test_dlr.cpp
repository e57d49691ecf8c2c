#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "stlr/dlr.hpp"
#include "stlr/error.hpp"
#include "stlr/parser.hpp"
#include "stlr/printer.hpp"

using namespace stlr;

namespace {

Verdict check(const std::string& m, const std::string& d, const std::string& n,
              const std::string& ty, long long trials = 500, std::uint64_t seed = 1) {
    TypePtr at = parse_type(ty);
    Sampler s(SamplerConfig{}, seed);
    return dlr_check(parse_term(m), parse_diff(d, at), parse_term(n), at, s, trials);
}

Verdict member(const std::string& d, const std::string& ty, SubsetKind k, double level = 0,
               long long trials = 500, std::uint64_t seed = 1) {
    TypePtr at = parse_type(ty);
    Sampler s(SamplerConfig{}, seed);
    return subset_check(parse_diff(d, at), at, k, level, s, trials);
}

} // namespace

TEST_CASE("base relation is an exact interval check") {
    CHECK(check("3", "1", "4", "Real").status == VerdictStatus::ExactPass);
    CHECK(check("3", "0.5", "4", "Real").status == VerdictStatus::ExactFail);
    CHECK(check("3", "inf", "1000000", "Real").status == VerdictStatus::ExactPass);
    CHECK(check("1", "0", "1", "Real").status == VerdictStatus::ExactPass);
    // Terms normalize before comparison.
    CHECK(check("plus <1, 2>", "0", "3", "Real").status == VerdictStatus::ExactPass);
}

TEST_CASE("product relation is componentwise") {
    CHECK(check("<1, 2>", "<1, 0>", "<1.5, 2>", "Real * Real").status ==
          VerdictStatus::ExactPass);
    Verdict v = check("<1, 2>", "<0.2, 0>", "<1.5, 2>", "Real * Real");
    CHECK(v.status == VerdictStatus::ExactFail);
    // The witness localizes the failing component.
    REQUIRE(v.witness.has_value());
    REQUIRE_FALSE(v.witness->path.empty());
    CHECK(v.witness->path.front().kind == WitnessStep::Kind::ProjL);
}

TEST_CASE("sine against the identity under a slack distance") {
    Verdict v = check("\\x:Real. sin x", "dlam (x, dx). dx + abs(x - sin(x))", "\\x:Real. x",
                      "Real -> Real", 2000, 42);
    CHECK(v.status == VerdictStatus::PassSampled);
    CHECK(v.trials == 2000);
    CHECK(v.seed == 42);
}

TEST_CASE("zero distance between different functions is refuted") {
    Verdict v = check("\\x:Real. x", "dlam (x, dx). 0", "\\x:Real. 0", "Real -> Real", 100, 7);
    REQUIRE(v.status == VerdictStatus::Counterexample);
    REQUIRE(v.witness.has_value());
    // Arrow-level failures always pass through an application step.
    bool hasApply = false;
    for (auto& st : v.witness->path)
        if (st.kind == WitnessStep::Kind::Apply) hasApply = true;
    CHECK(hasApply);
    // The recorded witness re-verifies without any sampling.
    CHECK(replay_dlr_witness(parse_term("\\x:Real. x"),
                             parse_diff("dlam (x, dx). 0", parse_type("Real -> Real")),
                             parse_term("\\x:Real. 0"), parse_type("Real -> Real"),
                             *v.witness));
}

TEST_CASE("identity is within any passthrough distance of itself") {
    Verdict v = check("\\x:Real. x", "dlam (x, dx). dx", "\\x:Real. x", "Real -> Real", 1000, 11);
    CHECK(v.status == VerdictStatus::PassSampled);
}

TEST_CASE("failure vocabulary separates exact from sampled refutation") {
    // A base-sort failure has an empty path: exact, not a counterexample.
    Verdict base = check("0", "1", "5", "Real");
    CHECK(base.status == VerdictStatus::ExactFail);
    CHECK(std::string(verdict_status_name(base.status)) == "exact_fail");
    // The same gap behind an arrow is a sampled counterexample.
    Verdict arrow = check("\\x:Real. 0", "dlam (x, dx). 1", "\\x:Real. 5", "Real -> Real", 50, 3);
    CHECK(arrow.status == VerdictStatus::Counterexample);
}

TEST_CASE("null membership") {
    CHECK(member("0", "Real", SubsetKind::Null).status == VerdictStatus::ExactPass);
    CHECK(member("1", "Real", SubsetKind::Null).status == VerdictStatus::ExactFail);
    CHECK(member("dlam (x, dx). dx", "Real -> Real", SubsetKind::Null).status ==
          VerdictStatus::PassSampled);
    CHECK(member("<0, 0>", "Real * Real", SubsetKind::Null).status == VerdictStatus::ExactPass);
    CHECK(member("dlam (x, dx). 0.5", "Real -> Real", SubsetKind::Null, 0, 200, 5).status ==
          VerdictStatus::Counterexample);
}

TEST_CASE("metric membership at a level") {
    CHECK(member("2", "Real", SubsetKind::Metric, 2.0).status == VerdictStatus::ExactPass);
    CHECK(member("1", "Real", SubsetKind::Metric, 2.0).status == VerdictStatus::ExactFail);
    CHECK(member("dlam (x, dx). dx", "Real -> Real", SubsetKind::Metric, 0.0).status ==
          VerdictStatus::PassSampled);
    Sampler s(SamplerConfig{}, 1);
    CHECK_THROWS_AS(metric_check(parse_diff("0", t_real()), t_real(), -1.0, s, 10), Error);
}

TEST_CASE("finite membership") {
    CHECK(member("2", "Real", SubsetKind::Finite).status == VerdictStatus::ExactPass);
    CHECK(member("inf", "Real", SubsetKind::Finite).status == VerdictStatus::ExactFail);
    CHECK(member("dlam (x, dx). abs((x + dx) * (x + dx))", "Real -> Real", SubsetKind::Finite)
              .status == VerdictStatus::PassSampled);
    CHECK(member("dlam (x, dx). dx", "Real -> Real", SubsetKind::Finite).status ==
          VerdictStatus::PassSampled);
    // A function that goes infinite on a finite input is refuted.
    Verdict v = member("dlam (x, dx). inf", "Real -> Real", SubsetKind::Finite, 0, 200, 9);
    CHECK(v.status == VerdictStatus::Counterexample);
    REQUIRE(v.witness.has_value());
    CHECK(replay_subset_witness(parse_diff("dlam (x, dx). inf", parse_type("Real -> Real")),
                                parse_type("Real -> Real"), SubsetKind::Finite, 0, *v.witness));
}

TEST_CASE("metric refutations replay") {
    Verdict v = member("1", "Real", SubsetKind::Metric, 2.0);
    REQUIRE(v.witness.has_value());
    CHECK(replay_subset_witness(parse_diff("1", t_real()), t_real(), SubsetKind::Metric, 2.0,
                                *v.witness));
}

TEST_CASE("pointwise order between distances") {
    TypePtr rr = parse_type("Real -> Real");
    Sampler s(SamplerConfig{}, 13);
    Verdict le = leq_check(parse_diff("dlam (x, dx). 0", rr), parse_diff("dlam (x, dx). dx", rr),
                           rr, s, 300);
    CHECK(verdict_passed(le.status));
    Sampler s2(SamplerConfig{}, 13);
    Verdict gt = leq_check(parse_diff("dlam (x, dx). dx + 1", rr),
                           parse_diff("dlam (x, dx). dx", rr), rr, s2, 300);
    CHECK(gt.status == VerdictStatus::Counterexample);
    // At the base sort the order is exact.
    Sampler s3(SamplerConfig{}, 13);
    CHECK(leq_check(parse_diff("1", t_real()), parse_diff("2", t_real()), t_real(), s3, 1).status ==
          VerdictStatus::ExactPass);
    Sampler s4(SamplerConfig{}, 13);
    CHECK(leq_check(parse_diff("2", t_real()), parse_diff("1", t_real()), t_real(), s4, 1).status ==
          VerdictStatus::ExactFail);
}

TEST_CASE("weak boundedness of terms") {
    CHECK(weakly_bounded(parse_term("3.0")));
    CHECK(weakly_bounded(parse_term("\\x:Real. sin x")));
    CHECK(weakly_bounded(parse_term("\\x:Real. plus <x, 1>")));
    CHECK_FALSE(weakly_bounded(parse_term("\\x:Real. recip x")));
    CHECK_FALSE(weakly_bounded(parse_term("\\x:Real. sin (recip x)")));
}

TEST_CASE("premise generation exhausts above the supported order") {
    // Premises are drawn at the arrow's domain; cap the generator below it.
    TypePtr at = parse_type("(Real -> Real) -> Real");
    TermPtr t = parse_term("\\f:Real -> Real. f 0");
    SamplerConfig cfg;
    cfg.genDepth = 0;
    Sampler s(cfg, 1);
    try {
        dlr_check(t, parse_diff("dlam (f, df). inf", at), t, at, s, 10);
        FAIL("expected generator exhaustion");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Generator);
    }
    // The default depth handles the same premise type.
    Sampler ok(SamplerConfig{}, 1);
    CHECK_NOTHROW(dlr_check(t, parse_diff("dlam (f, df). inf", at), t, at, ok, 10));
}

TEST_CASE("monotone in the distance at the base sort") {
    // Whatever passes at distance d passes at any larger one.
    for (double base : {0.0, 0.5, 2.0}) {
        Verdict small = check("1", std::to_string(base + 1.0), "2", "Real");
        CHECK(small.status == VerdictStatus::ExactPass);
        Verdict big = check("1", std::to_string(base + 3.0), "2", "Real");
        CHECK(big.status == VerdictStatus::ExactPass);
    }
    CHECK(check("1", "0.5", "2", "Real").status == VerdictStatus::ExactFail);
}

TEST_CASE("distances transport along the triangle at the base sort") {
    // 1 ~ 2 at 1.5 and 2 ~ 4 at 2.5 combine to 1 ~ 4 at 4.
    CHECK(check("1", "1.5", "2", "Real").status == VerdictStatus::ExactPass);
    CHECK(check("2", "2.5", "4", "Real").status == VerdictStatus::ExactPass);
    CHECK(check("1", "4", "4", "Real").status == VerdictStatus::ExactPass);
}

TEST_CASE("swapping the sides preserves the verdict class") {
    Verdict ok = symmetry_swap(parse_term("\\x:Real. sin x"),
                               parse_diff("dlam (x, dx). dx + abs(x - sin(x))",
                                          parse_type("Real -> Real")),
                               parse_term("\\x:Real. x"), parse_type("Real -> Real"),
                               Sampler(SamplerConfig{}, 21), 400);
    CHECK(verdict_passed(ok.status));

    Verdict bad = symmetry_swap(parse_term("\\x:Real. x"),
                                parse_diff("dlam (x, dx). 0", parse_type("Real -> Real")),
                                parse_term("\\x:Real. 0"), parse_type("Real -> Real"),
                                Sampler(SamplerConfig{}, 21), 100);
    CHECK(bad.status == VerdictStatus::Counterexample);
    // The symmetric failure still reports the relation it refuted, not a
    // symmetry violation: both directions agree on the class.
    REQUIRE(bad.witness.has_value());
    CHECK(bad.witness->relation != "symmetry");
}

TEST_CASE("verdicts are deterministic for a fixed seed") {
    Verdict a = check("\\x:Real. sin x", "dlam (x, dx). dx + abs(x - sin(x))", "\\x:Real. x",
                      "Real -> Real", 300, 99);
    Verdict b = check("\\x:Real. sin x", "dlam (x, dx). dx + abs(x - sin(x))", "\\x:Real. x",
                      "Real -> Real", 300, 99);
    CHECK(verdict_to_json(a).dump() == verdict_to_json(b).dump());
}

TEST_CASE("relation checks demand closed well-typed terms") {
    Sampler s(SamplerConfig{}, 1);
    CHECK_THROWS_AS(dlr_check(parse_term("x"), parse_diff("0", t_real()), parse_term("1"),
                              t_real(), s, 10),
                    Error);
    CHECK_THROWS_AS(dlr_check(parse_term("\\x:Real. x"), parse_diff("0", t_real()),
                              parse_term("1"), t_real(), s, 10),
                    Error);
}
