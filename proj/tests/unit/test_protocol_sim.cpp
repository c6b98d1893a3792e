#include <cmath>
#include <vector>

#include <doctest.h>

#include "splitstream/errors.hpp"
#include "splitstream/protocol_sim.hpp"

using namespace splitstream;

namespace {

StackState make(std::initializer_list<std::int64_t> cells, std::int64_t t = 0) {
    StackState s;
    s.cells.assign(cells);
    s.time = t;
    return s;
}

std::vector<std::int64_t> cells_of(const StackState& s) { return {s.cells.begin(), s.cells.end()}; }

}  // namespace

TEST_CASE("arrival law parsing") {
    CHECK(ArrivalLaw::parse("none").is_none());
    CHECK(ArrivalLaw::parse("poisson:0.25").rate() == 0.25);
    CHECK(ArrivalLaw::parse("deterministic:2").mean() == 2.0);
    CHECK(ArrivalLaw::parse("pmf:0:0.5,2:0.5").mean() == doctest::Approx(1.0));
    for (const char* t : {"none", "poisson:0.25", "deterministic:3", "pmf:0:0.25,1:0.75"}) {
        CHECK(ArrivalLaw::parse(ArrivalLaw::parse(t).to_string()).to_string() == ArrivalLaw::parse(t).to_string());
    }
    CHECK_THROWS(ArrivalLaw::parse("poisson:-1"));
    CHECK_THROWS(ArrivalLaw::parse("geometric:0.5"));
    CHECK_THROWS(ArrivalLaw::parse("pmf:0:0.5,1:0.4"));
}

TEST_CASE("stack transitions") {
    const std::vector<std::int64_t> split{2, 1};
    SUBCASE("short head is popped and arrivals join the next cell") {
        const auto s = stack_transition(make({1, 4, 2}, 3), 2, {}, 5);
        CHECK(cells_of(s) == std::vector<std::int64_t>{9, 2});
        CHECK(s.time == 4);
    }
    SUBCASE("arrivals after the last pop are lost") {
        const auto s = stack_transition(make({0}), 2, {}, 3);
        CHECK(s.empty());
    }
    SUBCASE("split head") {
        const auto s = stack_transition(make({3, 7}), 2, split, 4);
        CHECK(cells_of(s) == std::vector<std::int64_t>{6, 1, 7});
    }
    SUBCASE("empty stack") {
        CHECK(cells_of(stack_transition(StackState{}, 2, {}, 3)) == std::vector<std::int64_t>{3});
        Rng rng = make_rng(1, 0);
        const auto law = BranchingLaw::fixed({0.5, 0.5});
        const auto s = stack_step(StackState{}, 2, law, ArrivalLaw::none(), rng);
        CHECK(s.empty());
        CHECK(s.time == 1);
    }
    CHECK(make({1, 4, 2}).backlog() == 7);
}

TEST_CASE("split counts add up") {
    const auto law = BranchingLaw::fixed({0.2, 0.3, 0.5});
    Rng rng = make_rng(3, 0);
    for (int k = 0; k < 1000; ++k) {
        const auto r = split_group(50, law, rng);
        REQUIRE(r.g == 3);
        std::int64_t total = 0;
        for (auto c : r.counts) total += c;
        CHECK(total == 50);
    }
}

TEST_CASE("without arrivals the tree is finite") {
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    Rng rng = make_rng(9, 0);
    const auto one = simulate_tree(1, 2, ArrivalLaw::none(), law, 100, rng);
    REQUIRE(one.stats);
    CHECK(one.stats->nodes == 1);
    const auto t = simulate_tree(100, 2, ArrivalLaw::none(), law, kDefaultNodeBudget, rng);
    REQUIRE(t.stats);
    CHECK(t.stats->nodes == 2 * t.stats->leaves - 1);
    CHECK(t.stats->items_processed == 100);
}

TEST_CASE("node budget censors the run") {
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    Rng rng = make_rng(9, 1);
    CHECK(simulate_tree(1000, 2, ArrivalLaw::none(), law, 10, rng).unstable());
    Rng rng2 = make_rng(9, 2);
    CHECK_FALSE(hitting_time(1000, 2, law, ArrivalLaw::none(), 10, rng2).has_value());
}

TEST_CASE("two items without arrivals: E size = 5") {
    // R_2 = 1 + R_B + R_{2-B}, B ~ Binom(2, 1/2): E R_2 = 1 + 2 (1/4 E R_2 + 1/2 + 1/4), so E R_2 = 5.
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    const auto e = estimate_mean_size(2, 2, ArrivalLaw::none(), law, 200000, kDefaultNodeBudget, 21);
    CHECK(e.censored == 0);
    CHECK(std::abs(e.mean - 5.0) < 4 * e.std_error);
    const auto h = estimate_hitting_time(2, 2, ArrivalLaw::none(), law, 200000, kDefaultNodeBudget, 22);
    CHECK(std::abs(h.mean - 5.0) < 4 * h.std_error);
}

TEST_CASE("hitting time and tree size agree in law") {
    const auto law = BranchingLaw::fixed({0.3, 0.7});
    const auto arr = ArrivalLaw::poisson(0.15);
    const auto a = estimate_mean_size(8, 2, arr, law, 100000, kDefaultNodeBudget, 31);
    const auto b = estimate_hitting_time(8, 2, arr, law, 100000, kDefaultNodeBudget, 32);
    CHECK(std::abs(a.mean - b.mean) < 4 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("estimates do not depend on the worker count") {
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    const auto arr = ArrivalLaw::poisson(0.2);
    const auto a = estimate_mean_size(16, 2, arr, law, 2000, kDefaultNodeBudget, 4, 1);
    const auto b = estimate_mean_size(16, 2, arr, law, 2000, kDefaultNodeBudget, 4, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("stability probe separates low and high load") {
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    const auto lo = stability_probe(2, law, ArrivalLaw::poisson(0.2), 20000, 8, 41);
    CHECK(lo.classification == Stability::stable);
    CHECK(lo.min_late_empty_visits > 0);
    const auto hi = stability_probe(2, law, ArrivalLaw::poisson(0.6), 20000, 8, 42);
    CHECK(hi.classification == Stability::unstable);
    CHECK(hi.drift > 0.1);
    CHECK(std::string(to_string(Stability::inconclusive)) == "inconclusive");
}
