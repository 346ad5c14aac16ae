#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "brimm/dpp_sampler.hpp"
#include "brimm/estimate.hpp"
#include "brimm/kernels.hpp"
#include "brimm/special.hpp"

using namespace brimm;

namespace {

KernelSpec poisson_kernel(double rate) {
    return KernelSpec{PoissonIdentityKernel{}, IntensityDensity::constant(rate)};
}

KernelSpec ginibre_kernel(double rate = 1.0) {
    return KernelSpec{GinibreGaussianKernel{1.0}, IntensityDensity::constant(rate)};
}

KernelSpec rank1_kernel() {
    SpectralExpansionKernel k;
    k.eigenvalues = {0.5};
    k.basis = {[](double) { return 1.0; }};  // orthonormal on [0,1] with lambda = 1
    return KernelSpec{k, IntensityDensity::constant(1.0)};
}

double chi_square_vs_poisson(const std::vector<std::size_t>& counts, double mean) {
    // Pool Poisson pmf bins so every expected count is >= 5.
    const double n = static_cast<double>(counts.size());
    std::vector<double> observed(40, 0.0);
    for (std::size_t c : counts) observed[std::min<std::size_t>(c, 39)] += 1.0;
    double stat = 0.0;
    int dof = -1;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (int k = 0; k < 40; ++k) {
        obs_acc += observed[k];
        double pk = k < 39 ? poisson_pmf(k, mean) : 0.0;
        if (k == 39) {
            pk = 1.0;
            for (int j = 0; j < 39; ++j) pk -= poisson_pmf(j, mean);
        }
        exp_acc += n * pk;
        if (exp_acc >= 5.0 || k == 39) {
            if (exp_acc > 0.0) {
                stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
                ++dof;
            }
            obs_acc = exp_acc = 0.0;
        }
    }
    return chi_squared_survival(stat, std::max(1, dof));
}

} // namespace

TEST_CASE("identity kernel sampling degenerates to the Poisson process") {
    RngStream rng(21);
    DppModel model(poisson_kernel(1.0), 5.0);
    std::vector<std::size_t> counts;
    counts.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        const auto p = model.sample(rng);
        p.validate();
        counts.push_back(p.size());
    }
    CHECK(chi_square_vs_poisson(counts, 5.0) > 0.01);
}

TEST_CASE("rank-1 projection kernel gives Bernoulli counts") {
    RngStream rng(22);
    DppModel model(rank1_kernel(), 1.0);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto p = model.sample(rng);
        REQUIRE(p.size() <= 1);
        ones += p.size() == 1;
    }
    const double phat = static_cast<double>(ones) / n;
    CHECK(std::abs(phat - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("Ginibre kernel shows repulsion in the pair correlation") {
    RngStream rng(23);
    const double T = 5.0;
    DppModel model(ginibre_kernel(), T);
    // Bin ordered-pair gaps; compare against the Poisson benchmark intensity.
    const double bin = 0.25;
    double near_pairs = 0.0;
    MeanAccumulator counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto p = model.sample(rng);
        counts.add(static_cast<double>(p.size()));
        for (std::size_t a = 0; a < p.size(); ++a)
            for (std::size_t b = a + 1; b < p.size(); ++b)
                if (std::abs(p.times[a] - p.times[b]) < bin) near_pairs += 1.0;
    }
    // Under independence at intensity K(x,x) lambda = 1/pi the expected number
    // of near pairs per draw is about (1/pi)^2 * T * bin (edge effects down).
    const double poisson_near = (1.0 / (M_PI * M_PI)) * T * bin;
    const double observed = near_pairs / n;
    CHECK(observed < poisson_near);  // repulsion: rho_2 = K^2 - K(x,y)^2 <= K^2

    // Count variance below the Poisson variance at matched intensity.
    const double poisson_var = T / M_PI;
    CHECK(counts.estimate().sigma_distance(poisson_var) < 3.0);  // mean matches T/pi
    const double var_se = counts.variance() * std::sqrt(2.0 / (n - 1.0));
    CHECK(counts.variance() < poisson_var + 3.0 * var_se);
    // Spectral prediction: Var = sum lambda_n (1 - lambda_n) < mean.
    double spectral_var = 0.0;
    for (double ev : model.basis().eigenvalues()) spectral_var += ev * (1.0 - ev);
    CHECK(std::abs(counts.variance() - spectral_var) < 5.0 * var_se);
}

TEST_CASE("joint intensity determinants") {
    const auto g = ginibre_kernel();
    const double pts1[] = {1.3};
    CHECK(joint_intensity(g, pts1) == doctest::Approx(1.0 / M_PI));
    const double dup[] = {0.7, 0.7};
    CHECK(joint_intensity(g, dup) == doctest::Approx(0.0).epsilon(1e-14));
    const double dup_id[] = {0.7, 0.7};
    CHECK(joint_intensity(poisson_kernel(1.0), dup_id) == doctest::Approx(0.0));

    // Hadamard bound on random point sets.
    RngStream rng(24);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> pts(4);
        for (auto& x : pts) x = rng.uniform(0.0, 5.0);
        double bound = 1.0;
        for (double x : pts) bound *= g.diagonal(x);
        const double det = joint_intensity(g, pts);
        CHECK(det <= bound * (1.0 + 1e-12));
        CHECK(det >= -1e-12);
    }
}

TEST_CASE("spectral kernel eigenvalues outside [0,1] are rejected") {
    SpectralExpansionKernel bad;
    bad.eigenvalues = {1.2};
    bad.basis = {[](double) { return 1.0; }};
    const KernelSpec kernel{bad, IntensityDensity::constant(1.0)};
    CHECK_THROWS_WITH_AS(kernel.validate(1.0), doctest::Contains("EigenOutOfRange"),
                         Error);
}

TEST_CASE("Nystrom basis reproduces the Ginibre kernel on the window") {
    const auto g = ginibre_kernel();
    const auto basis = spectral_basis(g, 4.0, 120);
    // K(x,y) ~= sum_n nu_n phi_n(x) phi_n(y) for x,y inside the window.
    for (double x : {0.5, 1.7, 3.2}) {
        for (double y : {0.9, 2.4}) {
            double acc = 0.0;
            for (int n = 0; n < basis.rank(); ++n)
                acc += basis.eigenvalues()[n] * basis.eigenfunction(n, x) *
                       basis.eigenfunction(n, y);
            CHECK(acc == doctest::Approx(g.value(x, y)).epsilon(1e-6));
        }
    }
    for (double ev : basis.eigenvalues()) {
        CHECK(ev <= 1.0);
        CHECK(ev > 0.0);
    }
}
