#include <cmath>
#include <map>

#include <doctest.h>

#include "splitstream/errors.hpp"
#include "splitstream/splitting.hpp"

using namespace splitstream;

TEST_CASE("fixed binary law is size biased onto its weights") {
    const auto m = derive_splitting_measure(BranchingLaw::fixed({0.7, 0.3}));
    REQUIRE(m.size() == 2);
    CHECK(m.atoms()[0].w == doctest::Approx(0.3));
    CHECK(m.atoms()[0].q == doctest::Approx(0.3));
    CHECK(m.atoms()[1].w == doctest::Approx(0.7));
    CHECK(m.atoms()[1].q == doctest::Approx(0.7));
    CHECK(m.mean_G() == doctest::Approx(2.0));
    CHECK(m.delta() == doctest::Approx(0.7));
}

TEST_CASE("random branch count: E(1/W) equals E(G)") {
    const BranchingLaw law({Branch{2, 0.5, {{1.0, {0.5, 0.5}}}}, Branch{3, 0.5, {{1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}}}}});
    CHECK(law.mean_branching() == doctest::Approx(2.5));
    const auto m = derive_splitting_measure(law);
    REQUIRE(m.size() == 2);
    CHECK(m.atoms()[0].w == doctest::Approx(1.0 / 3));
    CHECK(m.atoms()[0].q == doctest::Approx(0.5));
    CHECK(m.atoms()[1].q == doctest::Approx(0.5));
    CHECK(m.mean_G() == doctest::Approx(2.5));
}

TEST_CASE("mixture weights merge equal atoms") {
    const BranchingLaw law({Branch{2, 1.0, {{0.5, {0.25, 0.75}}, {0.5, {0.75, 0.25}}}}});
    const auto m = derive_splitting_measure(law);
    REQUIRE(m.size() == 2);
    CHECK(m.atoms()[0].q == doctest::Approx(0.25));
    CHECK(m.atoms()[1].q == doctest::Approx(0.75));
}

TEST_CASE("invalid laws are rejected") {
    CHECK_THROWS_AS(BranchingLaw::fixed({0.6, 0.6}), InvalidLaw);
    CHECK_THROWS_AS(BranchingLaw::fixed({1.0, 0.0}), DegenerateSplit);
    CHECK_THROWS_AS(BranchingLaw({}), InvalidLaw);
    CHECK_THROWS_AS(BranchingLaw({Branch{2, 0.5, {{1.0, {0.5, 0.5}}}}}), InvalidLaw);
    CHECK_THROWS_AS(SplittingMeasure({{1.0, 1.0}}), DegenerateSplit);
}

TEST_CASE("assumption report") {
    const auto m = derive_splitting_measure(BranchingLaw::fixed({0.3, 0.7}));
    const auto r = validate_assumptions(m);
    CHECK(r.delta == doctest::Approx(0.7));
    CHECK(r.h2_value == doctest::Approx(-std::log(0.3) - std::log(0.7)));
    CHECK(r.mean_abs_log_w == doctest::Approx(-0.3 * std::log(0.3) - 0.7 * std::log(0.7)));
    CHECK_FALSE(r.span.has_value());

    const auto half = validate_assumptions(SplittingMeasure::dirac(0.5));
    REQUIRE(half.span.has_value());
    CHECK(*half.span == doctest::Approx(std::log(2.0)));

    const auto r2 = validate_assumptions(SplittingMeasure({{0.5, 0.5}, {0.25, 0.5}}));
    REQUIRE(r2.span.has_value());
    CHECK(*r2.span == doctest::Approx(std::log(2.0)));
}

TEST_CASE("span of commensurate logarithms") {
    const auto s = detect_span({2 * std::log(3.0), 3 * std::log(3.0)});
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(std::log(3.0)));
    CHECK_FALSE(detect_span({std::log(2.0), std::log(3.0)}).has_value());
}

TEST_CASE("sampling follows q") {
    const SplittingMeasure m({{0.2, 0.25}, {0.5, 0.75}});
    Rng rng = make_rng(11, 0);
    std::map<std::size_t, int> counts;
    const int n = 200000;
    for (int k = 0; k < n; ++k) ++counts[sample_atom(m, rng)];
    const double p0 = static_cast<double>(counts[0]) / n;
    CHECK(std::abs(p0 - 0.25) < 4 * std::sqrt(0.25 * 0.75 / n));
    Rng single = make_rng(11, 0);
    const auto before = single;
    CHECK(sample_weight(SplittingMeasure::dirac(0.5), single) == 0.5);
    const bool untouched = single == before;
    CHECK(untouched);
}

TEST_CASE("moments") {
    const auto mm = measure_moments(SplittingMeasure({{0.2, 0.25}, {0.5, 0.75}}));
    CHECK(mm.mean_G == doctest::Approx(0.25 / 0.2 + 0.75 / 0.5));
    CHECK(mm.mean_w == doctest::Approx(0.25 * 0.2 + 0.75 * 0.5));
}
