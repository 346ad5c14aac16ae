#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "brimm/estimate.hpp"
#include "brimm/moments.hpp"
#include "brimm/simulate.hpp"

using namespace brimm;

namespace {

BranchingSpec binary_spec(double mu, double p2, std::int64_t immigrants = 1) {
    BranchingSpec spec;
    spec.lifetimes = {mu};
    spec.offspring = {Pmf(1, {{{0}, 1.0 - p2}, {{2}, p2}})};
    spec.immigrant_law = Pmf::constant({immigrants});
    return spec;
}

BranchingSpec two_type_critical() {
    BranchingSpec spec;
    spec.lifetimes = {1.0, 1.0};
    spec.offspring = {Pmf(2, {{{0, 0}, 0.5}, {{1, 1}, 0.5}}),
                      Pmf(2, {{{0, 0}, 0.25}, {{0, 1}, 0.5}, {{1, 1}, 0.25}})};
    spec.immigrant_law = Pmf::constant({1, 0});
    return spec;
}

KernelSpec identity_kernel(double rate) {
    return KernelSpec{PoissonIdentityKernel{}, IntensityDensity::constant(rate)};
}

KernelSpec ginibre_kernel(double rate) {
    return KernelSpec{GinibreGaussianKernel{1.0}, IntensityDensity::constant(rate)};
}

} // namespace

TEST_CASE("moment table initial conditions") {
    const auto spec = two_type_critical();
    const auto table = MomentTable::from_unit(spec, 1, 1.0);
    const Vec m0 = table.mean_at(0.0);
    CHECK(m0[0] == 0.0);
    CHECK(m0[1] == 1.0);
    const Mat s0 = table.second_at(0.0);
    CHECK(s0(1, 1) == 1.0);
    CHECK(s0(0, 0) == 0.0);
}

TEST_CASE("critical binary second moment grows affinely with unit slope") {
    const auto spec = binary_spec(1.0, 0.5);
    const auto table = MomentTable::from_immigrant_law(spec, 10.0);
    CHECK(table.mean_at(10.0)[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(table.second_at(10.0)(0, 0) == doctest::Approx(11.0).epsilon(1e-9));
    CHECK(table.second_at(4.3)(0, 0) == doctest::Approx(5.3).epsilon(1e-9));

    // MC cross-check of E[Z^2(10)].
    RngStream rng(71);
    MeanAccumulator sq;
    for (int i = 0; i < 200000; ++i) {
        const double z = static_cast<double>(
            simulate_no_immigration(spec, InitialCondition::immigrant_group, 10.0, rng)
                .counts[0]);
        sq.add(z * z);
    }
    CHECK(sq.estimate().sigma_distance(11.0) < 3.0);
}

TEST_CASE("subcritical closed forms for mean and second moment") {
    // mu=1, p2=0.25: rho = -1/2 and E[(nu-1)^2] = 1, so
    // S' = -S + e^{-t/2}, S(0)=1  =>  E Z^2(t) = 2 e^{-t/2} - e^{-t}.
    const auto spec = binary_spec(1.0, 0.25);
    const auto table = MomentTable::from_immigrant_law(spec, 8.0);
    for (double t : {0.5, 2.0, 8.0}) {
        CHECK(table.mean_at(t)[0] == doctest::Approx(std::exp(-0.5 * t)).epsilon(1e-9));
        CHECK(table.second_at(t)(0, 0) ==
              doctest::Approx(2.0 * std::exp(-0.5 * t) - std::exp(-t)).epsilon(1e-9));
    }
}

TEST_CASE("mean matrix equals the dense eigendecomposition oracle") {
    const auto spec = two_type_critical();
    const double t = 3.7;
    const Mat direct = mean_matrix_no_immigration(spec, t);

    const Mat a = MomentTable::generator_matrix(spec);
    Eigen::EigenSolver<Mat> solver(a);
    const Eigen::MatrixXcd v = solver.eigenvectors();
    Eigen::VectorXcd evs = solver.eigenvalues();
    for (int i = 0; i < evs.size(); ++i) evs[i] = std::exp(evs[i] * t);
    const Mat oracle = (v * evs.asDiagonal() * v.inverse()).real();
    CHECK((direct - oracle).cwiseAbs().maxCoeff() < 1e-8);

    // Table means are rows of e^{At} transported by the initial vector.
    const auto table = MomentTable::from_unit(spec, 0, t);
    const Vec row0 = table.mean_at(t);
    CHECK(row0[0] == doctest::Approx(direct(0, 0)).epsilon(1e-8));
    CHECK(row0[1] == doctest::Approx(direct(0, 1)).epsilon(1e-8));
}

TEST_CASE("mean with immigration: trivial, benchmark, and K_star dependence") {
    const auto spec = binary_spec(1.0, 0.25);  // rho = -1/2
    const auto kernel = identity_kernel(1.0);
    CHECK(mean_with_immigration(spec, kernel, 0.0)[0] == 0.0);

    const double expected = 2.0 * (1.0 - std::exp(-3.0));
    Vec err;
    const Vec mean = mean_with_immigration(spec, kernel, 6.0, 1e-9, &err);
    CHECK(std::abs(mean[0] - expected) < 1e-6);
    CHECK(err[0] < 1e-6);

    // Means depend on the kernel only through K(x,x).
    const Vec ginibre = mean_with_immigration(spec, ginibre_kernel(1.0), 6.0);
    const Vec identity_scaled =
        mean_with_immigration(spec, identity_kernel(1.0 / M_PI), 6.0);
    CHECK(ginibre[0] == doctest::Approx(identity_scaled[0]).epsilon(1e-8));
}

TEST_CASE("variance under Poisson immigration matches closed form and MC") {
    const auto spec = binary_spec(1.0, 0.25);
    const auto kernel = identity_kernel(1.0);
    const double t = 6.0;
    const Mat cov = covariance_with_immigration(spec, kernel, t, 1e-9);
    // Var(Z(6)) = int_0^6 E[Z_x^2(x)] dx with E Z_x^2 = 2 e^{-x/2} - e^{-x}.
    const double expected = 4.0 * (1.0 - std::exp(-3.0)) - (1.0 - std::exp(-6.0));
    CHECK(std::abs(cov(0, 0) - expected) < 1e-6);

    RngStream master(72);
    const PatternSampler sampler(HomogeneousPoissonImmigration{1.0}, t);
    const double snaps[1] = {t};
    MeanAccumulator acc, square;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        RngStream rng = master.substream(i);
        const double z = static_cast<double>(
            simulate_with_immigration(spec, sampler, snaps, rng).populations[0].counts[0]);
        acc.add(z);
        square.add(z * z);
    }
    const double var_hat = acc.variance();
    // SE of the sample variance from the fourth moment.
    const double m2 = var_hat;
    const double mean_hat = acc.mean();
    MeanAccumulator fourth;
    // rough moment-based SE: Var(s^2) ~ (m4 - m2^2)/n with m4 from samples
    RngStream rng2(73);
    for (int i = 0; i < 20000; ++i) {
        RngStream rng = rng2.substream(i);
        const double z = static_cast<double>(
            simulate_with_immigration(spec, sampler, snaps, rng).populations[0].counts[0]);
        const double c = z - mean_hat;
        fourth.add(c * c * c * c);
    }
    const double se_var = std::sqrt((fourth.mean() - m2 * m2) / n);
    CHECK(std::abs(var_hat - cov(0, 0)) < 4.0 * se_var);
}

TEST_CASE("Ginibre repulsion lowers the variance against matched Poisson") {
    const auto spec = binary_spec(1.0, 0.25);
    const double t = 6.0;
    const Mat dpp = covariance_with_immigration(spec, ginibre_kernel(1.0), t, 1e-8);
    const Mat poisson =
        covariance_with_immigration(spec, identity_kernel(1.0 / M_PI), t, 1e-8);
    CHECK(dpp(0, 0) < poisson(0, 0));
    CHECK(dpp(0, 0) > 0.0);
}

TEST_CASE("covariance is symmetric for a two-type model") {
    const auto spec = two_type_critical();
    const Mat cov = covariance_with_immigration(spec, identity_kernel(0.7), 4.0, 1e-8);
    CHECK(std::abs(cov(0, 1) - cov(1, 0)) < 1e-10);
    CHECK(cov(0, 0) >= 0.0);
    CHECK(cov(1, 1) >= 0.0);
}

TEST_CASE("two-type covariance diagonal brackets the MC variance") {
    const auto spec = two_type_critical();
    const double t = 4.0;
    const Mat cov = covariance_with_immigration(spec, identity_kernel(0.7), t, 1e-8);
    RngStream master(74);
    const PatternSampler sampler(HomogeneousPoissonImmigration{0.7}, t);
    const double snaps[1] = {t};
    SimulationOptions options;
    options.founding_immigrant_at_zero = false;  // align with the formula
    MeanAccumulator z0, z1, z01;
    std::vector<double> z0s, z1s;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        RngStream rng = master.substream(i);
        const auto z =
            simulate_with_immigration(spec, sampler, snaps, rng, options).populations[0];
        z0.add(static_cast<double>(z.counts[0]));
        z1.add(static_cast<double>(z.counts[1]));
        z01.add(static_cast<double>(z.counts[0]) * static_cast<double>(z.counts[1]));
    }
    const double cov01_hat = z01.mean() - z0.mean() * z1.mean();
    CHECK(std::abs(cov01_hat - cov(0, 1)) < 5.0 * z01.estimate().std_error);
}

TEST_CASE("convolution asymptotics: exact flat case and two benchmarks") {
    ConvInputs flat;
    flat.alpha = [](double) { return 1.0; };
    flat.beta = [](double) { return 1.0; };
    flat.alpha_inf = 1.0;
    flat.beta_inf = 1.0;
    const double grid1[3] = {1.0, 7.0, 23.0};
    for (const auto& d : conv_asymptote(flat, ConvRegime::both_converge, grid1)) {
        CHECK(d.convolution == doctest::Approx(d.t).epsilon(1e-10));
        CHECK(d.ratio == doctest::Approx(1.0).epsilon(1e-10));
    }

    ConvInputs growth;
    growth.alpha = [](double x) { return std::exp(0.3 * x); };
    growth.beta = [](double x) { return std::exp(-0.2 * x); };
    growth.alpha_inf = 1.0;
    growth.delta = 0.3;
    const double grid2[3] = {10.0, 25.0, 40.0};
    const auto diag2 = conv_asymptote(growth, ConvRegime::exponential_growth, grid2);
    // Closed form: ratio = 1 - e^{-t/2}.
    for (const auto& d : diag2)
        CHECK(d.ratio == doctest::Approx(1.0 - std::exp(-0.5 * d.t)).epsilon(1e-8));
    CHECK(std::abs(diag2.back().ratio - 1.0) < 0.01);

    ConvInputs growth2;
    growth2.alpha = [](double x) { return std::exp(0.3 * x); };
    growth2.beta = [](double x) { return x * std::exp(-0.1 * x); };
    growth2.alpha_inf = 1.0;
    growth2.delta = 0.3;
    const double grid3[2] = {30.0, 60.0};
    const auto diag3 = conv_asymptote(growth2, ConvRegime::exponential_growth, grid3);
    // Closed form: ratio = 1 - (1 + 0.4 t) e^{-0.4 t}.
    for (const auto& d : diag3)
        CHECK(d.ratio ==
              doctest::Approx(1.0 - (1.0 + 0.4 * d.t) * std::exp(-0.4 * d.t))
                  .epsilon(1e-7));
    CHECK(std::abs(diag3.back().ratio - 1.0) < 0.01);
}

TEST_CASE("growth-rate diagnostics: E[Z(t)] e^{-delta t} stabilises for delta > rho") {
    const auto spec = binary_spec(1.0, 0.25);  // rho = -1/2
    const KernelSpec kernel{PoissonIdentityKernel{},
                            IntensityDensity::exponential(1.0, 0.2)};
    double prev = 0.0;
    std::vector<double> scaled;
    for (double t : {15.0, 20.0, 25.0, 30.0}) {
        const Vec mean = mean_with_immigration(spec, kernel, t, 1e-9);
        scaled.push_back(mean[0] * std::exp(-0.2 * t));
        prev = scaled.back();
    }
    (void)prev;
    // Successive ratios approach 1 within 1%.
    CHECK(std::abs(scaled[3] / scaled[2] - 1.0) < 0.01);
    // Limit constant A = K_star lambda_inf int e^{-0.2 x} E Z_x(x) dx = 1/0.7.
    CHECK(scaled.back() == doctest::Approx(1.0 / 0.7).epsilon(0.01));
}

TEST_CASE("variance order bound: Var e^{-max(2 rho, delta) t} stays bounded") {
    // Supercritical rho = 0.15 (p2 = 0.575), delta = 0.1 < 2 rho = 0.3.
    const auto spec = binary_spec(1.0, 0.575);
    const KernelSpec kernel{PoissonIdentityKernel{},
                            IntensityDensity::exponential(1.0, 0.1)};
    std::vector<double> scaled;
    for (double t : {6.0, 9.0, 12.0}) {
        const Mat cov = covariance_with_immigration(spec, kernel, t, 1e-8);
        scaled.push_back(cov(0, 0) * std::exp(-0.3 * t));
    }
    CHECK(scaled[2] / scaled[0] < 3.0);
    CHECK(scaled[2] / scaled[0] > 1.0 / 3.0);
}

TEST_CASE("ODE tolerance failures surface") {
    // Subcritical: the moment ODE is a genuine exponential, so a huge step
    // cannot meet a tight tolerance.  (The critical binary case is polynomial
    // and RK4-exact at any step.)
    const auto spec = binary_spec(1.0, 0.25);
    CHECK_THROWS_WITH_AS(
        MomentTable::from_immigrant_law(spec, 10.0, /*step=*/2.5, /*tol=*/1e-14),
        doctest::Contains("OdeToleranceFailure"), Error);
}
