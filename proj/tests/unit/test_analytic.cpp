#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "splitstream/analytic.hpp"
#include "splitstream/errors.hpp"

using namespace splitstream;

namespace {

// Independent reference: E R_n from the first-step recursion
//   E R_n = 1 + sum_j E R_{B_j + N_j},  B_j ~ Binom(n, v_j), N_j ~ Poisson(lam),
// solved as one linear system on sizes 0..cap. Sizes above cap carry
// negligible probability for the n used below.
std::vector<double> recursion_means(const std::vector<double>& v, double lam, int D, int cap) {
    const int N = cap + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(N, N);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(N);
    std::vector<double> pois(static_cast<std::size_t>(N));
    for (int a = 0; a < N; ++a) pois[a] = std::exp(a * std::log(std::max(lam, 1e-300)) - lam - std::lgamma(a + 1.0));
    if (lam == 0.0) {
        std::fill(pois.begin(), pois.end(), 0.0);
        pois[0] = 1.0;
    }
    for (int n = D; n < N; ++n) {
        for (double w : v) {
            for (int b = 0; b <= n; ++b) {
                const double pb = std::exp(std::lgamma(n + 1.0) - std::lgamma(b + 1.0) - std::lgamma(n - b + 1.0) +
                                           b * std::log(w) + (n - b) * std::log1p(-w));
                for (int a = 0; b + a < N; ++a) A(n, b + a) -= pb * pois[a];
            }
        }
    }
    const Eigen::VectorXd r = A.partialPivLu().solve(rhs);
    return {r.data(), r.data() + N};
}

SeriesParams params(std::int64_t paths, std::uint64_t seed = 1) {
    SeriesParams p;
    p.mc_paths = paths;
    p.seed = seed;
    return p;
}

// det M_0 = (-1)^{D-2} / E(G) * prod_{j=2}^{D-1} -1 / (1 - E W^{j-1}).
double det_at_zero(const SplittingMeasure& m, int D) {
    double det = (D % 2 == 0 ? 1.0 : -1.0) / m.mean_G();
    for (int j = 2; j < D; ++j) {
        double ew = 0.0;
        for (const auto& a : m.atoms()) ew += a.q * std::pow(a.w, j - 1);
        det *= -1.0 / (1.0 - ew);
    }
    return det;
}

}  // namespace

TEST_CASE("symmetric binary, no arrivals") {
    const auto m = SplittingMeasure::dirac(0.5);
    AnalyticModel model(m, 0.0, 2, params(1));
    const auto& C = model.constants();
    CHECK(C.c[0] == doctest::Approx(2.0));
    CHECK(C.c[1] == doctest::Approx(2.0));
    CHECK(std::abs(C.c_inf) < 1e-9);
    CHECK(C.at(2) == 0.0);
    CHECK(model.mean_size(2).value == doctest::Approx(5.0));
    CHECK(det_M(model.matrix()) == doctest::Approx(0.5));
}

TEST_CASE("determinant at zero load is positive") {
    for (int D : {2, 3, 4, 5}) {
        for (const auto& m : {SplittingMeasure::dirac(0.5), SplittingMeasure::dirac(1.0 / 3)}) {
            const double det = det_M(assemble_matrix(m, 0.0, D, params(1)));
            CHECK(det == doctest::Approx(det_at_zero(m, D)).epsilon(1e-9));
            CHECK(det > 0.0);
        }
    }
}

TEST_CASE("series matches the first-step recursion, symmetric") {
    for (int D : {2, 3}) {
        const double lam = D == 2 ? 0.25 : 0.4;
        const auto ref = recursion_means({0.5, 0.5}, lam, D, 400);
        AnalyticModel model(SplittingMeasure::dirac(0.5), lam, D, params(1));
        for (int n : {D, 10, 64}) {
            const auto v = model.mean_size(n);
            CHECK(v.trusted);
            CHECK(v.value == doctest::Approx(ref[static_cast<std::size_t>(n)]).epsilon(1e-8));
        }
    }
}

TEST_CASE("series matches the first-step recursion, asymmetric binary") {
    const auto ref = recursion_means({0.3, 0.7}, 0.1, 3, 300);
    AnalyticModel model(SplittingMeasure({{0.3, 0.3}, {0.7, 0.7}}), 0.1, 3, params(20000, 5));
    for (int n : {3, 20}) {
        const auto v = model.mean_size(n);
        const double want = ref[static_cast<std::size_t>(n)];
        CHECK(std::abs(v.value - want) < 4 * v.std_error + 1e-6 * want);
    }
}

TEST_CASE("symmetric binary ratio C1/C0 = 1/(1 - 2 lam)") {
    for (double lam : {0.1, 0.2, 0.3}) {
        const auto C = solve_constants(SplittingMeasure::dirac(0.5), lam, 2, params(1));
        CHECK(C.c[1] / C.c[0] == doctest::Approx(1.0 / (1.0 - 2.0 * lam)).epsilon(1e-9));
    }
}

TEST_CASE("asymmetric binary ratio follows K(p, lam)") {
    const double p = 0.3;
    const double lam = 0.1;
    const auto C = solve_constants(SplittingMeasure({{p, p}, {1 - p, 1 - p}}), lam, 2, params(20000, 9));
    const double se = C.ratio_std_error(1, 0);
    CHECK(se > 0.0);
    CHECK(std::abs(C.c[1] / C.c[0] - binary_K(p, lam)) < 4 * se + 1e-9);
    CHECK(binary_K(0.5, 0.2) == doctest::Approx(1.0 / 0.6));
    CHECK_THROWS_AS(binary_K(0.5, 0.5), PoleError);
}

TEST_CASE("boundary and functional-equation residuals vanish") {
    AnalyticModel model(SplittingMeasure::dirac(0.5), 0.15, 3, params(1));
    const auto& C = model.constants();
    REQUIRE(C.residuals.boundary.size() == 2);
    for (double r : C.residuals.boundary) CHECK(std::abs(r) < 1e-9);
    CHECK(std::abs(C.residuals.mean_identity) < 1e-9);
    for (double x : {0.0, 0.5, 3.0, 12.0}) CHECK(std::abs(model.functional_residual(x)) < 1e-8);
}

TEST_CASE("regularization leaves the constants unchanged") {
    auto p = params(1);
    const auto a = solve_constants(SplittingMeasure::dirac(0.5), 0.2, 3, p);
    p.regularize = false;
    const auto b = solve_constants(SplittingMeasure::dirac(0.5), 0.2, 3, p);
    for (int j = 0; j < 3; ++j) CHECK(a.c[static_cast<std::size_t>(j)] == doctest::Approx(b.c[static_cast<std::size_t>(j)]).epsilon(1e-9));
}

TEST_CASE("first root of the determinant, symmetric binary D = 2") {
    const auto r = find_lambda_c(SplittingMeasure::dirac(0.5), 2, params(1), 0.05, 1.0, 1e-8);
    CHECK(r.lambda_c == doctest::Approx(0.360177).epsilon(2e-6));
    CHECK(r.jitter == 0.0);
    CHECK_THROWS_AS(find_lambda_c(SplittingMeasure::dirac(0.5), 2, params(1), 0.05, 0.3, 1e-6), NoSignChange);
}

TEST_CASE("past the first root the constants are rejected") {
    CHECK_THROWS_AS(solve_constants(SplittingMeasure::dirac(0.5), 0.5, 2, params(1)), SingularNearLambdaC);
}

TEST_CASE("phi is the generating transform of the mean sizes") {
    // phi(x) = sum_n E R_n x^n e^{-x} / n!, checked on the recursion values.
    const double lam = 0.2;
    const auto ref = recursion_means({0.5, 0.5}, lam, 2, 400);
    AnalyticModel model(SplittingMeasure::dirac(0.5), lam, 2, params(1));
    for (double x : {0.5, 4.0}) {
        double want = 0.0;
        for (int n = 0; n < 120; ++n) want += ref[static_cast<std::size_t>(n)] * std::exp(n * std::log(x) - x - std::lgamma(n + 1.0));
        CHECK(model.phi(x).value == doctest::Approx(want).epsilon(1e-8));
    }
}
