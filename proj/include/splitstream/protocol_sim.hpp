#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "splitstream/rng.hpp"
#include "splitstream/splitting.hpp"

namespace splitstream {

/// Law of the number of new items joining a group.
class ArrivalLaw {
public:
    enum class Kind { none, poisson, deterministic, pmf };

    static ArrivalLaw none();
    static ArrivalLaw poisson(double lam);
    static ArrivalLaw deterministic(std::int64_t a);
    static ArrivalLaw pmf(std::vector<std::pair<std::int64_t, double>> table);

    /// Parses "none", "poisson:0.25", "deterministic:1" or "pmf:0:0.5,2:0.5".
    static ArrivalLaw parse(const std::string& text);
    std::string to_string() const;

    Kind kind() const { return kind_; }
    /// Poisson rate; 0 for every other kind.
    double rate() const { return kind_ == Kind::poisson ? lam_ : 0.0; }
    double mean() const;
    bool is_none() const;

    std::int64_t draw(Rng& rng) const;

private:
    ArrivalLaw() = default;

    Kind kind_ = Kind::none;
    double lam_ = 0.0;
    std::int64_t fixed_ = 0;
    std::vector<std::pair<std::int64_t, double>> table_;
    std::vector<double> cumulative_;
};

/// State of the stack chain: pending group sizes, head first.
struct StackState {
    std::deque<std::int64_t> cells;
    std::int64_t time = 0;

    bool empty() const { return cells.empty(); }
    std::int64_t backlog() const;
};

struct SplitResult {
    std::vector<std::int64_t> counts;
    int g = 0;
};

/// Draws (G, V) and a multinomial split of n items over the G weights.
SplitResult split_group(std::int64_t n, const BranchingLaw& law, Rng& rng);

struct TreeStats {
    std::int64_t nodes = 1;
    std::int64_t depth = 0;
    std::int64_t leaves = 1;
    std::int64_t items_processed = 0;  // items that ended at a leaf
};

struct TreeResult {
    std::optional<TreeStats> stats;  // empty when the node budget was exceeded
    bool unstable() const { return !stats.has_value(); }
};

inline constexpr std::int64_t kDefaultNodeBudget = 10'000'000;

/// Branching recursion: a node with fewer than D items is a leaf, otherwise
/// its items are split and every child receives a fresh arrival draw.
TreeResult simulate_tree(std::int64_t n, int D, const ArrivalLaw& arrivals, const BranchingLaw& law,
                         std::int64_t node_budget, Rng& rng);

/// Deterministic part of one chain transition. For a head below D the head
/// is removed and `arrivals` join the next cell; otherwise the head is
/// replaced by the split counts and `arrivals` join the first of them.
/// An empty stack turns into a single cell holding `arrivals`.
StackState stack_transition(const StackState& s, int D, std::span<const std::int64_t> split_counts,
                            std::int64_t arrivals);

/// One random slot of the stack chain. An empty stack stays empty when
/// there are no arrivals.
StackState stack_step(const StackState& s, int D, const BranchingLaw& law, const ArrivalLaw& arrivals,
                      Rng& rng);

/// Steps from state (n) until the stack empties; nullopt past `horizon`.
std::optional<std::int64_t> hitting_time(std::int64_t n, int D, const BranchingLaw& law,
                                         const ArrivalLaw& arrivals, std::int64_t horizon, Rng& rng);

struct SimEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double variance = 0.0;
    double variance_std_error = 0.0;
    std::int64_t trials = 0;
    std::int64_t censored = 0;

    /// At most 1% of the runs may be censored.
    bool trusted() const { return censored * 100 <= trials; }
};

/// Mean tree size over independent trials; trial i uses stream (seed, i).
SimEstimate estimate_mean_size(std::int64_t n, int D, const ArrivalLaw& arrivals, const BranchingLaw& law,
                               std::int64_t trials, std::int64_t node_budget, std::uint64_t seed,
                               int workers = 0);

/// Mean hitting time of the empty stack from state (n).
SimEstimate estimate_hitting_time(std::int64_t n, int D, const ArrivalLaw& arrivals, const BranchingLaw& law,
                                  std::int64_t trials, std::int64_t horizon, std::uint64_t seed,
                                  int workers = 0);

enum class Stability { stable, unstable, inconclusive };

const char* to_string(Stability s);

struct DriftReport {
    double drift = 0.0;     // mean fitted backlog slope per slot
    double drift_se = 0.0;  // standard error across replications
    Stability classification = Stability::inconclusive;
    std::int64_t min_late_empty_visits = 0;  // fewest empty-stack visits in the second half of any run
    std::int64_t sample_every = 1;
    std::vector<double> mean_backlog;  // averaged over reps, every `sample_every` slots
};

/// Runs the stack chain from state (D) for `horizon` slots, `reps` times.
DriftReport stability_probe(int D, const BranchingLaw& law, const ArrivalLaw& arrivals, std::int64_t horizon,
                            int reps, std::uint64_t seed, int workers = 0);

}  // namespace splitstream
