#include "splitstream/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "splitstream/errors.hpp"

namespace splitstream {

namespace {

constexpr double kProbTol = 1e-12;

void check_probability_sum(double total, const char* what) {
    if (std::abs(total - 1.0) > kProbTol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << what << " sum to " << total << ", expected 1";
        throw InvalidLaw(msg.str());
    }
}

}  // namespace

BranchingLaw::BranchingLaw(std::vector<Branch> branches) : branches_(std::move(branches)) {
    if (branches_.empty()) throw InvalidLaw("branching law has no branches");
    double total = 0.0;
    for (const auto& b : branches_) {
        if (b.g < 2) throw InvalidLaw("branch count must be at least 2");
        if (!(b.prob > 0.0 && b.prob <= 1.0)) throw InvalidLaw("branch probability outside (0, 1]");
        if (b.weight_law.empty()) throw InvalidLaw("branch has no weight vector");
        total += b.prob;
        double mix = 0.0;
        for (const auto& wv : b.weight_law) {
            if (!(wv.prob > 0.0 && wv.prob <= 1.0)) throw InvalidLaw("mixture probability outside (0, 1]");
            if (static_cast<int>(wv.v.size()) != b.g) throw InvalidLaw("weight vector length differs from g");
            mix += wv.prob;
            double s = 0.0;
            for (double v : wv.v) {
                if (!(v > 0.0 && v < 1.0)) {
                    std::ostringstream msg;
                    msg << "weight " << v << " puts every item in one branch or none";
                    throw DegenerateSplit(msg.str());
                }
                s += v;
            }
            check_probability_sum(s, "weights");
        }
        check_probability_sum(mix, "mixture probabilities");
    }
    check_probability_sum(total, "branch probabilities");
}

BranchingLaw BranchingLaw::fixed(std::vector<double> weights) {
    Branch b;
    b.g = static_cast<int>(weights.size());
    b.prob = 1.0;
    b.weight_law.push_back({1.0, std::move(weights)});
    return BranchingLaw({b});
}

double BranchingLaw::mean_branching() const {
    double s = 0.0;
    for (const auto& b : branches_) s += b.prob * b.g;
    return s;
}

SplittingMeasure::SplittingMeasure(std::vector<Atom> atoms) {
    if (atoms.empty()) throw InvalidLaw("splitting measure has no atoms");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.w < b.w; });
    for (const auto& a : atoms) {
        if (!(a.w > 0.0 && a.w < 1.0)) throw DegenerateSplit("atom weight outside (0, 1)");
        if (!(a.q > 0.0 && a.q <= 1.0 + kProbTol)) throw InvalidLaw("atom mass outside (0, 1]");
        if (!atoms_.empty() && std::abs(a.w - atoms_.back().w) <= kAtomMergeTol) {
            atoms_.back().q += a.q;
        } else {
            atoms_.push_back(a);
        }
    }
    double total = 0.0;
    for (const auto& a : atoms_) {
        total += a.q;
        mean_G_ += a.q / a.w;
        cumulative_.push_back(total);
    }
    check_probability_sum(total, "atom masses");
    cumulative_.back() = 1.0;
    delta_ = atoms_.back().w;
}

std::size_t SplittingMeasure::atom_for(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(idx, atoms_.size() - 1);
}

SplittingMeasure derive_splitting_measure(const BranchingLaw& law) {
    std::vector<Atom> raw;
    for (const auto& b : law.branches()) {
        for (const auto& wv : b.weight_law) {
            for (double v : wv.v) raw.push_back({v, b.prob * wv.prob * v});
        }
    }
    return SplittingMeasure(std::move(raw));
}

std::optional<double> detect_span(const std::vector<double>& neg_logs) {
    if (neg_logs.empty()) return std::nullopt;
    const double base = *std::min_element(neg_logs.begin(), neg_logs.end());
    if (!(base > 0.0)) return std::nullopt;

    std::int64_t lcm = 1;
    for (double L : neg_logs) {
        bool found = false;
        for (int den = 1; den <= kSpanMaxDenominator; ++den) {
            const double num = std::round(den * L / base);
            if (num < 1.0) continue;
            if (std::abs(L - num / den * base) <= kSpanTol) {
                lcm = std::lcm(lcm, static_cast<std::int64_t>(den));
                found = true;
                break;
            }
        }
        if (!found) return std::nullopt;
    }

    const double unit = base / static_cast<double>(lcm);
    std::int64_t g = 0;
    for (double L : neg_logs) g = std::gcd(g, static_cast<std::int64_t>(std::llround(L / unit)));
    const double span = unit * static_cast<double>(g);
    for (double L : neg_logs) {
        if (std::abs(L - std::round(L / span) * span) > kSpanTol) return std::nullopt;
    }
    return span;
}

AssumptionReport validate_assumptions(const SplittingMeasure& m) {
    AssumptionReport r;
    r.delta = m.delta();
    std::vector<double> neg_logs;
    for (const auto& a : m.atoms()) {
        const double L = -std::log(a.w);
        neg_logs.push_back(L);
        r.h2_value += a.q * L / a.w;
        r.mean_abs_log_w += a.q * L;
    }
    r.span = detect_span(neg_logs);
    return r;
}

MeasureMoments measure_moments(const SplittingMeasure& m) {
    MeasureMoments mm;
    mm.mean_G = m.mean_G();
    for (const auto& a : m.atoms()) {
        mm.mean_abs_log_w += a.q * -std::log(a.w);
        mm.mean_w += a.q * a.w;
    }
    return mm;
}

std::size_t sample_atom(const SplittingMeasure& m, Rng& rng) {
    if (m.single_atom()) return 0;
    return m.atom_for(uniform01(rng));
}

double sample_weight(const SplittingMeasure& m, Rng& rng) {
    return m.atoms()[sample_atom(m, rng)].w;
}

}  // namespace splitstream
