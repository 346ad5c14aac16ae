#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "brimm/backward.hpp"
#include "brimm/laplace.hpp"
#include "brimm/model.hpp"
#include "brimm/point_processes.hpp"
#include "brimm/transforms.hpp"

using namespace brimm;

namespace {

KernelSpec identity_kernel(double rate) {
    return KernelSpec{PoissonIdentityKernel{}, IntensityDensity::constant(rate)};
}

KernelSpec rank1_kernel() {
    SpectralExpansionKernel k;
    k.eigenvalues = {0.5};
    k.basis = {[](double) { return 1.0; }};
    return KernelSpec{k, IntensityDensity::constant(1.0)};
}

// Orthonormal cosine modes on [0,2] under Lebesgue.
KernelSpec rank3_kernel() {
    SpectralExpansionKernel k;
    k.eigenvalues = {0.8, 0.5, 0.3};
    k.basis = {[](double) { return std::sqrt(0.5); },
               [](double x) { return std::cos(M_PI * x / 2.0); },
               [](double x) { return std::cos(M_PI * x); }};
    return KernelSpec{k, IntensityDensity::constant(1.0)};
}

KernelSpec ginibre_kernel() {
    return KernelSpec{GinibreGaussianKernel{1.0}, IntensityDensity::constant(1.0)};
}

BranchingSpec binary_spec(double mu, double p2, std::int64_t immigrants = 1) {
    BranchingSpec spec;
    spec.lifetimes = {mu};
    spec.offspring = {Pmf(1, {{{0}, 1.0 - p2}, {{2}, p2}})};
    spec.immigrant_law = Pmf::constant({immigrants});
    return spec;
}

} // namespace

TEST_CASE("Poisson Laplace functional closed forms") {
    CHECK(laplace_poisson(TestFunction::zero(), IntensityDensity::constant(3.0)) == 1.0);
    const auto f = TestFunction::indicator(std::log(2.0), 1.0);
    CHECK(laplace_poisson(f, IntensityDensity::constant(1.0)) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
    // Values stay in (0, 1], and monotonicity in f.
    const auto g = TestFunction::indicator(1.0, 2.0);
    const auto h = TestFunction::indicator(2.0, 2.0);
    const double lg = laplace_poisson(g, IntensityDensity::exponential(0.5, 0.1));
    const double lh = laplace_poisson(h, IntensityDensity::exponential(0.5, 0.1));
    CHECK(lg > 0.0);
    CHECK(lg <= 1.0);
    CHECK(lh <= lg);
}

TEST_CASE("identity-kernel series equals the Poisson functional") {
    std::vector<TestFunction> fns = {
        TestFunction::indicator(std::log(2.0), 1.0),
        TestFunction::indicator(0.3, 2.5),
        {[](double x) { return 0.5 * x; }, 2.0},
        {[](double x) { return std::exp(-x); }, 3.0},
        {[](double x) { return x * (2.0 - x); }, 2.0},
    };
    for (const auto& density :
         {IntensityDensity::constant(1.0), IntensityDensity::exponential(0.7, 0.2)}) {
        for (const auto& f : fns) {
            const auto series = laplace_dpp_series(f, {PoissonIdentityKernel{}, density});
            const double exact = laplace_poisson(f, density);
            CHECK(std::abs(series.value - exact) < 1e-8);
        }
    }
}

TEST_CASE("identity-kernel partial sums reproduce the exponential expansion") {
    const auto f = TestFunction::indicator(0.8, 2.0);
    const auto kernel = identity_kernel(1.0);
    const double exact = laplace_poisson(f, kernel.density);
    double prev_gap = 1.0;
    for (int n_max = 3; n_max <= 8; ++n_max) {
        const auto series = laplace_dpp_series(f, kernel, n_max, 24, 32768, 1.0);
        const double gap = series.value - exact;
        CHECK(std::abs(gap) <= series.tail_bound * (1.0 + 1e-9));
        // Alternating partial sums straddle the limit.
        if (n_max > 3) CHECK(gap * prev_gap <= 0.0);
        prev_gap = gap;
    }
}

TEST_CASE("rank-1 kernel series and Fredholm close at 0.75") {
    const auto f = TestFunction::indicator(std::log(2.0), 1.0);
    const auto kernel = rank1_kernel();
    const auto series = laplace_dpp_series(f, kernel);
    CHECK(series.value == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(laplace_dpp_fredholm(f, kernel) == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(laplace_dpp_series(TestFunction::zero(), kernel).value == 1.0);
    CHECK(laplace_dpp_fredholm(TestFunction::zero(), kernel) == 1.0);
}

TEST_CASE("series and Fredholm agree on rank-3 and Ginibre kernels") {
    std::vector<TestFunction> fns = {
        TestFunction::indicator(1.0, 2.0),
        TestFunction::indicator(0.4, 1.5),
        {[](double x) { return 0.6 * x; }, 2.0},
        {[](double x) { return 1.2 * std::exp(-0.5 * x); }, 2.0},
        {[](double x) { return 0.8 * std::sin(M_PI * x / 2.0); }, 2.0},
    };
    for (const auto& kernel : {rank3_kernel(), ginibre_kernel()}) {
        for (const auto& f : fns) {
            const auto series = laplace_dpp_series(f, kernel);
            const double fredholm = laplace_dpp_fredholm(f, kernel);
            const double tol = std::max(1e-6, series.tail_bound);
            CHECK(std::abs(series.value - fredholm) < tol);
            CHECK(series.value > 0.0);
            CHECK(series.value <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("series truncation failure is reported, not absorbed") {
    const auto f = TestFunction::indicator(5.0, 10.0);
    CHECK_THROWS_WITH_AS(laplace_dpp_series(f, identity_kernel(5.0), 6),
                         doctest::Contains("TruncationTooLoose"), Error);
}

TEST_CASE("gamma-mixed Cox functional matches the mixed-exponential closed form") {
    RngStream rng(41);
    const auto f = TestFunction::indicator(std::log(2.0), 1.0);  // c = 0.5
    const double shape = 2.0, rate = 3.0;
    const auto est = laplace_cox_mc(f, GammaMixedRate{shape, rate}, 200000, rng);
    const double c = 0.5;
    const double exact = std::pow(rate / (rate + c), shape);
    CHECK(est.sigma_distance(exact) < 3.0);
}

TEST_CASE("Cox functional brackets the empirical functional from patterns") {
    RngStream rng(42);
    const auto f = TestFunction{[](double x) { return 0.7 * std::exp(-x); }, 3.0};
    const CoxDirecting directing = ShotNoise{1.5, 1.0};
    const auto est = laplace_cox_mc(f, directing, 40000, rng);
    MeanAccumulator empirical;
    for (int i = 0; i < 40000; ++i) {
        const auto pattern = sample_cox(directing, 3.0, rng);
        double sum = 0.0;
        for (double x : pattern.times) sum += f(x);
        empirical.add(std::exp(-sum));
    }
    CHECK(est.sigma_distance(empirical.estimate()) < 3.0);
}

TEST_CASE("FPP functional: trivial, near-Poisson, and renewal cross-check") {
    RngStream rng(43);
    const auto f = TestFunction::indicator(0.9, 2.0);
    CHECK(laplace_fpp_mc(TestFunction::zero(), 0.7, 1.0, 10, rng).value == 1.0);

    const auto near_poisson = laplace_fpp_mc(f, 0.999, 1.3, 4000, rng);
    const double poisson = laplace_poisson(f, IntensityDensity::constant(1.3));
    CHECK(near_poisson.sigma_distance(poisson) < 3.0);

    const auto est = laplace_fpp_mc(f, 0.7, 1.0, 4000, rng);
    MeanAccumulator empirical;
    for (int i = 0; i < 40000; ++i) {
        const auto pattern = sample_fpp(0.7, 1.0, 2.0, rng);
        double sum = 0.0;
        for (double x : pattern.times) sum += f(x);
        empirical.add(std::exp(-sum));
    }
    CHECK(est.sigma_distance(empirical.estimate()) < 3.0);
}

TEST_CASE("backward table matches the critical binary closed form") {
    const auto spec = binary_spec(1.0, 0.5);
    for (double s : {0.0, 0.5, 0.9}) {
        Vec sv(1);
        sv << s;
        const auto table = pgf_table(spec, sv, 20.0);
        for (double t : {0.5, 1.0, 5.0, 12.5, 20.0}) {
            const double expected = 1.0 - (1.0 - s) / (1.0 + 0.5 * t * (1.0 - s));
            CHECK(table.per_type(t)[0] == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("backward table matches the subcritical closed form and composition") {
    // mu = 2, nu in {0,2} w.p. (3/4, 1/4): dG/dt = (G-1)(G-3)/8.
    const auto spec = binary_spec(2.0, 0.25, 3);
    const double s = 0.5;
    Vec sv(1);
    sv << s;
    const auto table = pgf_table(spec, sv, 10.0);
    for (double t : {0.8, 3.0, 10.0}) {
        const double r = std::exp(t / 4.0) * (s - 3.0) / (s - 1.0);
        const double expected = (3.0 - r) / (1.0 - r);
        CHECK(table.per_type(t)[0] == doctest::Approx(expected).epsilon(1e-9));
        // I = 3 particles: the immigrant-group transform is the cube.
        CHECK(table.composed(t) ==
              doctest::Approx(std::pow(expected, 3.0)).epsilon(1e-9));
    }
}

TEST_CASE("Laplace table is the pgf at exp(-s)") {
    const auto spec = binary_spec(1.0, 0.5);
    Vec s(1), es(1);
    s << 0.8;
    es << std::exp(-0.8);
    const auto lap = laplace_table(spec, s, 5.0);
    const auto pgf = pgf_table(spec, es, 5.0);
    for (double t : {0.5, 2.0, 5.0})
        CHECK(lap.composed(t) == doctest::Approx(pgf.composed(t)).epsilon(1e-12));
}

TEST_CASE("process transform is 1 at s = 1 and t = 0 for every family") {
    const auto spec = binary_spec(1.0, 0.5);
    RngStream rng(44);
    Vec ones(1);
    ones << 1.0;
    std::vector<ImmigrationSpec> families = {
        HomogeneousPoissonImmigration{1.0},
        InhomogeneousPoissonImmigration{IntensityDensity::exponential(1.0, 0.1)},
        CoxImmigration{GammaMixedRate{2.0, 2.0}},
        FppImmigration{0.7, 1.0},
        DppImmigration{identity_kernel(1.0)},
    };
    TransformOptions opts;
    opts.n_rep = 200;
    for (const auto& imm : families) {
        const auto at_one =
            process_transform(spec, imm, 3.0, ones, TransformMode::pgf, rng, opts);
        CHECK(at_one.value == doctest::Approx(1.0).epsilon(1e-9));
        Vec half(1);
        half << 0.5;
        const auto at_zero =
            process_transform(spec, imm, 0.0, half, TransformMode::pgf, rng, opts);
        CHECK(at_zero.value == 1.0);
    }
}

TEST_CASE("empirical transform basics") {
    std::vector<std::vector<std::int64_t>> zeros(100, {0});
    Vec s(1);
    s << 0.3;
    CHECK(empirical_transform(zeros, s, TransformMode::pgf).value == 1.0);
    CHECK(empirical_transform(zeros, s, TransformMode::laplace).value == 1.0);
    std::vector<std::vector<std::int64_t>> some = {{2}, {0}, {1}};
    Vec one(1);
    one << 1.0;
    CHECK(empirical_transform(some, one, TransformMode::pgf).value == 1.0);
    CHECK_THROWS_AS(
        empirical_transform(std::span<const std::vector<std::int64_t>>{}, s,
                            TransformMode::pgf),
        Error);
}

TEST_CASE("deterministic evaluators are monotone in the test function") {
    const auto small = TestFunction::indicator(0.4, 2.0);
    const auto large = TestFunction::indicator(1.1, 2.0);
    const KernelSpec ginibre{GinibreGaussianKernel{1.0}, IntensityDensity::constant(1.0)};
    CHECK(laplace_dpp_series(small, ginibre).value >=
          laplace_dpp_series(large, ginibre).value);
    CHECK(laplace_dpp_fredholm(small, ginibre) >= laplace_dpp_fredholm(large, ginibre));
}

TEST_CASE("Cox with near-deterministic directing collapses to the Poisson functional") {
    RngStream rng(45);
    const auto f = TestFunction::indicator(0.8, 2.0);
    // Gamma(k^2, k^2 / rate) has mean `rate` and variance rate^2/k^2 -> 0.
    const double rate = 1.7, k2 = 1e8;
    const auto est = laplace_cox_mc(f, GammaMixedRate{k2, k2 / rate}, 2000, rng);
    const double poisson = laplace_poisson(f, IntensityDensity::constant(rate));
    CHECK(std::abs(est.value - poisson) < 1e-3);
}
