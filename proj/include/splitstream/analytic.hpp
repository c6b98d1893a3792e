#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitstream/path_ensemble.hpp"
#include "splitstream/splitting.hpp"

namespace splitstream {

/// Which constant multiplies the renewal limit of E_{i,n}/n:
/// as_printed gives E(G) / (i E|log W|), corrected gives 1 / (i E|log W|).
enum class RenewalVariant { as_printed, corrected };

const char* to_string(RenewalVariant v);
RenewalVariant parse_variant(const std::string& text);

struct SeriesParams {
    int k_max = 0;                    // 0 selects auto_k_max(delta)
    std::int64_t mc_paths = 100'000;  // weight paths (1 for a single atom)
    double xinf_tol = 1e-10;
    std::uint64_t seed = 1;
    bool regularize = true;
    int workers = 0;
};

/// Smallest k with delta^k / (1 - delta) < target.
int auto_k_max(double delta, double target = 1e-10);
int resolved_k_max(const SeriesParams& p, const SplittingMeasure& m);

/// The (D+1)x(D+1) system matrix. Row r of the math (1..D+1) is stored at
/// index r-1; column l (0..D) at index l, column D multiplying C_inf.
struct MatrixM {
    int d = 2;
    double lam = 0.0;
    bool regularized = true;
    Eigen::MatrixXd entries;
    Eigen::MatrixXd std_errors;
    double det_std_error = 0.0;
    std::vector<std::string> warnings;
    /// Per-path realisations, one row per path, entries flattened
    /// column-major. Null when every entry is exact.
    std::shared_ptr<const Eigen::MatrixXd> path_values;

    double entry(int row, int col) const { return entries(row - 1, col); }
};

struct RowEstimate {
    std::vector<double> values;
    std::vector<double> std_errors;
};

struct ConstantsResiduals {
    double mean_identity = 0.0;  // E phi_{Delta C}(lam X_inf) on independent X_inf draws
    double mean_identity_std_error = 0.0;
    std::vector<double> boundary;  // E(R_m) - 1 for m = 1..D-1
};

struct ConstantsC {
    std::vector<double> c;  // C_0..C_{D-1}
    double c_inf = 0.0;
    double lam = 0.0;
    int d = 2;
    Eigen::MatrixXd covariance;  // of (C_0..C_{D-1}, C_inf)
    ConstantsResiduals residuals;

    /// C_j with C_j = 0 for j >= D.
    double at(int j) const;
    /// C_{j+1} - C_j.
    double delta(int j) const;
    double std_error(int j) const;
    double c_inf_std_error() const;
    /// Delta-method standard error of C_num / C_den.
    double ratio_std_error(int num, int den) const;
};

struct SeriesValue {
    double value = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;
    bool trusted = true;
};

struct LambdaC {
    double lambda_c = 0.0;
    double uncertainty = 0.0;       // max(tol, jitter)
    double jitter = 0.0;            // largest root shift across seeds
    std::vector<double> seed_roots;
};

struct AsymptoticSlope {
    RenewalVariant variant = RenewalVariant::corrected;
    double c_inf = 0.0;
    std::vector<double> delta_c_means;  // E(Delta C_{i + N(lam X_inf)}), i = 1..D-1
    double mean_slope = 0.0;            // the limit, or its period average when arithmetic
    std::optional<double> span;
    /// Slope n -> lim E(R_n)/n; periodic in log n when the measure is arithmetic.
    std::function<double(double n)> at;
};

/// Caches one path ensemble for a (measure, lam, D, params) tuple so the
/// matrix, constants and every series evaluated afterwards use the same
/// weight paths.
class AnalyticModel {
public:
    AnalyticModel(SplittingMeasure m, double lam, int d, SeriesParams p);

    const SplittingMeasure& measure() const { return measure_; }
    double lam() const { return lam_; }
    int d() const { return d_; }
    const SeriesParams& params() const { return params_; }
    int k_max() const { return k_max_; }

    const PathEnsemble& ensemble(int depth);
    const MatrixM& matrix();
    /// Solves and fills residual diagnostics.
    const ConstantsC& constants();
    /// Use externally solved constants for the series below.
    void set_constants(ConstantsC c);

    SeriesValue mean_size(std::int64_t n);
    SeriesValue mean_size(std::int64_t n, int k_max);
    SeriesValue phi(double x);
    /// phi(x) - E[(1/W) phi(lam + W x)] - 1 + phi_C(x).
    double functional_residual(double x);

    AsymptoticSlope asymptotics(RenewalVariant v);

private:
    SplittingMeasure measure_;
    double lam_;
    int d_;
    SeriesParams params_;
    int k_max_;
    std::unique_ptr<PathEnsemble> ensemble_;
    std::optional<MatrixM> matrix_;
    std::optional<ConstantsC> constants_;
};

/// phi_C(y) = sum_{m<D} C_m y^m e^{-y} / m!.
double phi_C(const ConstantsC& c, double y);
/// phi_{Delta C}(y) = sum_j Delta C_j y^j e^{-y} / j!.
double phi_delta_C(const ConstantsC& c, double y);
/// E(Delta C_{i + N}) for N ~ Poisson(y).
double delta_c_expectation(const ConstantsC& c, int i, double y);

RowEstimate row_D(const SplittingMeasure& m, double lam, int D, const SeriesParams& p);

MatrixM assemble_matrix(const SplittingMeasure& m, double lam, int D, const SeriesParams& p);
MatrixM assemble_matrix(const PathEnsemble& paths, const SplittingMeasure& m, double lam, int D, int k_max,
                        bool regularize, int workers = 0);

double det_M(const MatrixM& M);

/// Bisection on lam -> det M_lam with fixed weight paths; repeated for three
/// seeds to estimate the Monte Carlo jitter of the root.
LambdaC find_lambda_c(const SplittingMeasure& m, int D, const SeriesParams& p, double lo, double hi,
                      double tol);

/// Solves M C = -e_{D+1}. Residuals are left empty.
ConstantsC solve_constants(const MatrixM& M);
/// Assembles, solves and fills residual diagnostics.
ConstantsC solve_constants(const SplittingMeasure& m, double lam, int D, const SeriesParams& p);

double binary_K(double p, double lam);

SeriesValue mean_size_series(const SplittingMeasure& m, double lam, int D, const ConstantsC& C, std::int64_t n,
                             const SeriesParams& p);

SeriesValue eval_phi(const SplittingMeasure& m, double lam, const ConstantsC& C, double x,
                     const SeriesParams& p);

/// E_{i,n} = sum_k E[(1/pi_k) P(Binom(n, pi_k) >= i + 1)], exact by
/// enumerating atom multiplicities when that is affordable.
SeriesValue e_series(const SplittingMeasure& m, int i, std::int64_t n, const SeriesParams& p);

double renewal_slope(const SplittingMeasure& m, int i, RenewalVariant v);

/// Periodic fluctuation F_i(x), x in units of the span.
double fluctuation_F(const SplittingMeasure& m, int i, double x, RenewalVariant v);

AsymptoticSlope asymptotic_slope(const SplittingMeasure& m, double lam, int D, const ConstantsC& C,
                                 RenewalVariant v, const SeriesParams& p);

}  // namespace splitstream
