#include "splitstream/protocol_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "splitstream/errors.hpp"
#include "splitstream/stats.hpp"

namespace splitstream {

namespace {

double parse_double(const std::string& s, const std::string& whole) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse arrival law '" + whole + "'");
    }
}

std::int64_t parse_int(const std::string& s, const std::string& whole) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) throw ConfigError("cannot parse arrival law '" + whole + "'");
    return v;
}

std::string format_number(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::size_t pick(const std::vector<double>& probs, Rng& rng) {
    if (probs.size() == 1) return 0;
    const double u = uniform01(rng);
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        c += probs[i];
        if (u < c) return i;
    }
    return probs.size() - 1;
}

std::int64_t binomial(std::int64_t n, double p, Rng& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::int64_t> dist(n, p);
    return dist(rng);
}

void split_into(std::int64_t n, const BranchingLaw& law, Rng& rng, SplitResult& out) {
    const auto& branches = law.branches();
    std::size_t bi = 0;
    if (branches.size() > 1) {
        std::vector<double> probs;
        for (const auto& b : branches) probs.push_back(b.prob);
        bi = pick(probs, rng);
    }
    const Branch& b = branches[bi];
    std::size_t wi = 0;
    if (b.weight_law.size() > 1) {
        std::vector<double> probs;
        for (const auto& wv : b.weight_law) probs.push_back(wv.prob);
        wi = pick(probs, rng);
    }
    const auto& v = b.weight_law[wi].v;
    out.g = b.g;
    out.counts.assign(static_cast<std::size_t>(b.g), 0);
    std::int64_t rest = n;
    double mass = 1.0;
    for (int i = 0; i + 1 < b.g && rest > 0; ++i) {
        const double p = std::clamp(v[static_cast<std::size_t>(i)] / mass, 0.0, 1.0);
        const std::int64_t c = binomial(rest, p, rng);
        out.counts[static_cast<std::size_t>(i)] = c;
        rest -= c;
        mass -= v[static_cast<std::size_t>(i)];
    }
    out.counts.back() += rest;
}

// In-place chain transition; `counts` is used only when the head splits.
// Returns the change in backlog.
std::int64_t transition_in_place(StackState& s, int D, std::span<const std::int64_t> counts, std::int64_t arrivals) {
    s.time += 1;
    if (s.cells.empty()) {
        s.cells.push_back(arrivals);
        return arrivals;
    }
    const std::int64_t head = s.cells.front();
    s.cells.pop_front();
    if (head < D) {
        if (s.cells.empty()) return -head;
        s.cells.front() += arrivals;
        return arrivals - head;
    }
    for (auto it = counts.rbegin(); it != counts.rend(); ++it) s.cells.push_front(*it);
    s.cells.front() += arrivals;
    return arrivals;
}

std::int64_t step_in_place(StackState& s, int D, const BranchingLaw& law, const ArrivalLaw& arrivals, Rng& rng,
                           SplitResult& scratch) {
    if (s.cells.empty() && arrivals.is_none()) {
        s.time += 1;
        return 0;
    }
    if (!s.cells.empty() && s.cells.front() >= D) {
        split_into(s.cells.front(), law, rng, scratch);
        return transition_in_place(s, D, scratch.counts, arrivals.draw(rng));
    }
    return transition_in_place(s, D, {}, arrivals.draw(rng));
}

SimEstimate summarize_runs(const std::vector<double>& values, const std::vector<char>& censored) {
    std::vector<double> kept;
    kept.reserve(values.size());
    SimEstimate e;
    e.trials = static_cast<std::int64_t>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (censored[i]) {
            ++e.censored;
        } else {
            kept.push_back(values[i]);
        }
    }
    if (!kept.empty()) {
        const auto s = summarize(kept);
        e.mean = s.mean;
        e.std_error = s.std_error;
        e.variance = s.variance;
        e.variance_std_error = s.var_std_error;
    }
    return e;
}

void check_d(int D) {
    if (D < 1) throw std::invalid_argument("D must be at least 1");
}

}  // namespace

ArrivalLaw ArrivalLaw::none() { return ArrivalLaw(); }

ArrivalLaw ArrivalLaw::poisson(double lam) {
    if (!(lam >= 0.0) || !std::isfinite(lam)) throw InvalidLaw("Poisson rate must be finite and nonnegative");
    ArrivalLaw a;
    a.kind_ = Kind::poisson;
    a.lam_ = lam;
    return a;
}

ArrivalLaw ArrivalLaw::deterministic(std::int64_t v) {
    if (v < 0) throw InvalidLaw("deterministic arrivals must be nonnegative");
    ArrivalLaw a;
    a.kind_ = Kind::deterministic;
    a.fixed_ = v;
    return a;
}

ArrivalLaw ArrivalLaw::pmf(std::vector<std::pair<std::int64_t, double>> table) {
    if (table.empty()) throw InvalidLaw("arrival pmf is empty");
    ArrivalLaw a;
    a.kind_ = Kind::pmf;
    double total = 0.0;
    for (const auto& [v, p] : table) {
        if (v < 0) throw InvalidLaw("arrival pmf values must be nonnegative");
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidLaw("arrival pmf mass outside [0, 1]");
        total += p;
        a.cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidLaw("arrival pmf masses do not sum to 1");
    a.cumulative_.back() = 1.0;
    a.table_ = std::move(table);
    return a;
}

ArrivalLaw ArrivalLaw::parse(const std::string& text) {
    if (text == "none") return none();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("unknown arrival law '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "poisson") return poisson(parse_double(rest, text));
    if (kind == "deterministic") return deterministic(parse_int(rest, text));
    if (kind == "pmf") {
        std::vector<std::pair<std::int64_t, double>> table;
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto c = item.find(':');
            if (c == std::string::npos) throw ConfigError("pmf entries are value:prob in '" + text + "'");
            table.emplace_back(parse_int(item.substr(0, c), text), parse_double(item.substr(c + 1), text));
        }
        return pmf(std::move(table));
    }
    throw ConfigError("unknown arrival law '" + text + "'");
}

std::string ArrivalLaw::to_string() const {
    switch (kind_) {
        case Kind::none: return "none";
        case Kind::poisson: return "poisson:" + format_number(lam_);
        case Kind::deterministic: return "deterministic:" + std::to_string(fixed_);
        case Kind::pmf: {
            std::string s = "pmf:";
            for (std::size_t i = 0; i < table_.size(); ++i) {
                if (i) s += ',';
                s += std::to_string(table_[i].first) + ':' + format_number(table_[i].second);
            }
            return s;
        }
    }
    return "none";
}

double ArrivalLaw::mean() const {
    switch (kind_) {
        case Kind::none: return 0.0;
        case Kind::poisson: return lam_;
        case Kind::deterministic: return static_cast<double>(fixed_);
        case Kind::pmf: {
            double m = 0.0;
            for (const auto& [v, p] : table_) m += static_cast<double>(v) * p;
            return m;
        }
    }
    return 0.0;
}

bool ArrivalLaw::is_none() const {
    switch (kind_) {
        case Kind::none: return true;
        case Kind::poisson: return lam_ == 0.0;
        case Kind::deterministic: return fixed_ == 0;
        case Kind::pmf:
            return std::all_of(table_.begin(), table_.end(), [](const auto& e) { return e.first == 0 || e.second == 0.0; });
    }
    return true;
}

std::int64_t ArrivalLaw::draw(Rng& rng) const {
    switch (kind_) {
        case Kind::none: return 0;
        case Kind::poisson: {
            if (lam_ == 0.0) return 0;
            std::poisson_distribution<std::int64_t> dist(lam_);
            return dist(rng);
        }
        case Kind::deterministic: return fixed_;
        case Kind::pmf: {
            const double u = uniform01(rng);
            const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), table_.size() - 1);
            return table_[idx].first;
        }
    }
    return 0;
}

std::int64_t StackState::backlog() const { return std::accumulate(cells.begin(), cells.end(), std::int64_t{0}); }

SplitResult split_group(std::int64_t n, const BranchingLaw& law, Rng& rng) {
    if (n < 0) throw std::invalid_argument("cannot split a negative count");
    SplitResult r;
    split_into(n, law, rng, r);
    return r;
}

TreeResult simulate_tree(std::int64_t n, int D, const ArrivalLaw& arrivals, const BranchingLaw& law,
                         std::int64_t node_budget, Rng& rng) {
    check_d(D);
    if (node_budget < 1) throw std::invalid_argument("node budget must be at least 1");
    if (n < 0) throw std::invalid_argument("tree size must be nonnegative");
    TreeStats st;
    st.nodes = 0;
    st.leaves = 0;
    struct Frame {
        std::int64_t count;
        std::int64_t depth;
    };
    std::vector<Frame> frontier{{n, 0}};
    SplitResult scratch;
    while (!frontier.empty()) {
        const Frame f = frontier.back();
        frontier.pop_back();
        if (++st.nodes > node_budget) return TreeResult{};
        st.depth = std::max(st.depth, f.depth);
        if (f.count < D) {
            ++st.leaves;
            st.items_processed += f.count;
            continue;
        }
        split_into(f.count, law, rng, scratch);
        for (std::int64_t c : scratch.counts) frontier.push_back({c + arrivals.draw(rng), f.depth + 1});
    }
    return TreeResult{st};
}

StackState stack_transition(const StackState& s, int D, std::span<const std::int64_t> split_counts,
                            std::int64_t arrivals) {
    check_d(D);
    StackState next = s;
    transition_in_place(next, D, split_counts, arrivals);
    return next;
}

StackState stack_step(const StackState& s, int D, const BranchingLaw& law, const ArrivalLaw& arrivals, Rng& rng) {
    check_d(D);
    StackState next = s;
    SplitResult scratch;
    step_in_place(next, D, law, arrivals, rng, scratch);
    return next;
}

std::optional<std::int64_t> hitting_time(std::int64_t n, int D, const BranchingLaw& law, const ArrivalLaw& arrivals,
                                         std::int64_t horizon, Rng& rng) {
    check_d(D);
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    StackState s;
    s.cells.push_back(n);
    SplitResult scratch;
    while (!s.empty()) {
        if (s.time >= horizon) return std::nullopt;
        step_in_place(s, D, law, arrivals, rng, scratch);
    }
    return s.time;
}

SimEstimate estimate_mean_size(std::int64_t n, int D, const ArrivalLaw& arrivals, const BranchingLaw& law,
                               std::int64_t trials, std::int64_t node_budget, std::uint64_t seed, int workers) {
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    std::vector<double> values(static_cast<std::size_t>(trials));
    std::vector<char> censored(static_cast<std::size_t>(trials), 0);
    parallel_for(trials, workers, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
            const auto r = simulate_tree(n, D, arrivals, law, node_budget, rng);
            if (r.unstable()) {
                censored[static_cast<std::size_t>(i)] = 1;
            } else {
                values[static_cast<std::size_t>(i)] = static_cast<double>(r.stats->nodes);
            }
        }
    });
    return summarize_runs(values, censored);
}

SimEstimate estimate_hitting_time(std::int64_t n, int D, const ArrivalLaw& arrivals, const BranchingLaw& law,
                                  std::int64_t trials, std::int64_t horizon, std::uint64_t seed, int workers) {
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    std::vector<double> values(static_cast<std::size_t>(trials));
    std::vector<char> censored(static_cast<std::size_t>(trials), 0);
    parallel_for(trials, workers, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
            const auto t = hitting_time(n, D, law, arrivals, horizon, rng);
            if (t) {
                values[static_cast<std::size_t>(i)] = static_cast<double>(*t);
            } else {
                censored[static_cast<std::size_t>(i)] = 1;
            }
        }
    });
    return summarize_runs(values, censored);
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

DriftReport stability_probe(int D, const BranchingLaw& law, const ArrivalLaw& arrivals, std::int64_t horizon,
                            int reps, std::uint64_t seed, int workers) {
    check_d(D);
    if (horizon < 1000) throw std::invalid_argument("probe horizon must be at least 1000 slots");
    if (reps < 1) throw std::invalid_argument("probe needs at least one replication");

    DriftReport rep;
    rep.sample_every = std::max<std::int64_t>(1, horizon / 1000);
    const auto n_samples = static_cast<std::size_t>(horizon / rep.sample_every);
    const std::int64_t burn_in = horizon / 10;
    const std::int64_t late = horizon / 2;

    std::vector<double> slopes(static_cast<std::size_t>(reps));
    std::vector<std::int64_t> late_empty(static_cast<std::size_t>(reps));
    std::vector<std::vector<double>> sampled(static_cast<std::size_t>(reps));

    parallel_for(reps, workers, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> backlog(static_cast<std::size_t>(horizon));
        for (std::int64_t r = lo; r < hi; ++r) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
            StackState s;
            s.cells.push_back(D);
            SplitResult scratch;
            std::int64_t total = D;
            std::int64_t empties = 0;
            auto& samples = sampled[static_cast<std::size_t>(r)];
            samples.assign(n_samples, 0.0);
            for (std::int64_t t = 0; t < horizon; ++t) {
                total += step_in_place(s, D, law, arrivals, rng, scratch);
                backlog[static_cast<std::size_t>(t)] = static_cast<double>(total);
                if (t >= late && s.empty()) ++empties;
                const std::int64_t slot = t + 1;
                if (slot % rep.sample_every == 0) {
                    const auto idx = static_cast<std::size_t>(slot / rep.sample_every - 1);
                    if (idx < n_samples) samples[idx] = static_cast<double>(total);
                }
            }
            // Least-squares slope of backlog against time after the burn-in.
            const auto first = static_cast<std::size_t>(burn_in);
            const double m = static_cast<double>(horizon - burn_in);
            const double t_mean = (static_cast<double>(burn_in) + static_cast<double>(horizon - 1)) / 2.0;
            CompensatedSum y_sum;
            for (std::size_t t = first; t < backlog.size(); ++t) y_sum.add(backlog[t]);
            const double y_mean = y_sum.value() / m;
            CompensatedSum sxy;
            CompensatedSum sxx;
            for (std::size_t t = first; t < backlog.size(); ++t) {
                const double dt = static_cast<double>(t) - t_mean;
                sxy.add(dt * (backlog[t] - y_mean));
                sxx.add(dt * dt);
            }
            slopes[static_cast<std::size_t>(r)] = sxy.value() / sxx.value();
            late_empty[static_cast<std::size_t>(r)] = empties;
        }
    });

    const auto s = summarize(slopes);
    rep.drift = s.mean;
    rep.drift_se = s.std_error;
    rep.min_late_empty_visits = *std::min_element(late_empty.begin(), late_empty.end());
    rep.mean_backlog.assign(n_samples, 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        CompensatedSum acc;
        for (const auto& v : sampled) acc.add(v[i]);
        rep.mean_backlog[i] = acc.value() / reps;
    }

    // A run that keeps returning to the empty stack late in the horizon is
    // recurrent whatever the sign of a small fitted slope; a transient chain
    // empties only finitely often.
    const double band = 2.0 * rep.drift_se;
    const bool recurrent = rep.min_late_empty_visits > 0;
    if (rep.drift < -band || recurrent) {
        rep.classification = Stability::stable;
    } else if (rep.drift > band) {
        rep.classification = Stability::unstable;
    } else {
        rep.classification = Stability::inconclusive;
    }
    return rep;
}

}  // namespace splitstream
