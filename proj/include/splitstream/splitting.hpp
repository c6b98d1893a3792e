#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "splitstream/rng.hpp"

namespace splitstream {

/// One weight vector (v_1..v_g) of a branch together with its mixture weight.
struct WeightVector {
    double prob = 1.0;
    std::vector<double> v;
};

/// Branch count g drawn with probability `prob`; conditionally on it the
/// weight vector is drawn from a finite mixture of fixed vectors.
struct Branch {
    int g = 2;
    double prob = 1.0;
    std::vector<WeightVector> weight_law;
};

/// Joint law of the branch count G and the random weight vector (V_1..V_G).
class BranchingLaw {
public:
    explicit BranchingLaw(std::vector<Branch> branches);

    /// G fixed to weights.size() with deterministic weights.
    static BranchingLaw fixed(std::vector<double> weights);

    const std::vector<Branch>& branches() const { return branches_; }

    /// E(G) computed directly from the branch probabilities.
    double mean_branching() const;

private:
    std::vector<Branch> branches_;
};

struct Atom {
    double w = 0.5;
    double q = 1.0;
};

/// Size-biased law of the weight of a child: mass q_j at weight w_j.
/// Atoms are sorted by increasing weight.
class SplittingMeasure {
public:
    explicit SplittingMeasure(std::vector<Atom> atoms);

    static SplittingMeasure dirac(double w) { return SplittingMeasure({{w, 1.0}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool single_atom() const { return atoms_.size() == 1; }

    /// Largest atom; W([0, delta]) = 1.
    double delta() const { return delta_; }

    /// E(G) = E(1/W).
    double mean_G() const { return mean_G_; }

    /// Index of the atom selected by a uniform u in [0, 1).
    std::size_t atom_for(double u) const;

private:
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
    double delta_ = 0.0;
    double mean_G_ = 0.0;
};

struct AssumptionReport {
    double delta = 0.0;
    double h2_value = 0.0;
    std::optional<double> span;  // arithmetic span of -log W, absent if nonarithmetic
    double mean_abs_log_w = 0.0;
};

struct MeasureMoments {
    double mean_G = 0.0;
    double mean_abs_log_w = 0.0;
    double mean_w = 0.0;
};

/// Tolerance used when merging equal weights into one atom.
inline constexpr double kAtomMergeTol = 1e-12;
/// Residual allowed when fitting -log w_j onto a lattice.
inline constexpr double kSpanTol = 1e-9;
/// Largest denominator tried in the rational lattice search.
inline constexpr int kSpanMaxDenominator = 64;

SplittingMeasure derive_splitting_measure(const BranchingLaw& law);

AssumptionReport validate_assumptions(const SplittingMeasure& m);

/// Span of the lattice generated by the given positive values, if any.
std::optional<double> detect_span(const std::vector<double>& neg_logs);

MeasureMoments measure_moments(const SplittingMeasure& m);

/// Atom index drawn with probability q_j; consumes exactly one engine draw
/// for multi-atom measures and none for a single atom.
std::size_t sample_atom(const SplittingMeasure& m, Rng& rng);

double sample_weight(const SplittingMeasure& m, Rng& rng);

}  // namespace splitstream
