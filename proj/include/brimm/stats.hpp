#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "brimm/errors.hpp"
#include "brimm/special.hpp"

namespace brimm {

struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
};

// One-sample KS against a cdf; the sample is copied and sorted.
inline KsResult ks_one_sample(std::vector<double> sample,
                              const std::function<double(double)>& cdf) {
    require(!sample.empty(), ErrorCode::empty_sample, "KS needs a nonempty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n),
                      std::abs(f - static_cast<double>(i + 1) / n)});
    }
    return {d, ks_p_value(d, sample.size())};
}

// Two-sample KS; ties are resolved by stepping both empiricals at once, which
// is conservative for lattice-valued data.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), ErrorCode::empty_sample,
            "KS needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return {d, ks_two_sample_p_value(d, a.size(), b.size())};
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Goodness of fit of integer counts against a reference pmf; bins are pooled
// from the right so that every expected count is at least `min_expected`.
inline ChiSquareResult chi_square_counts(std::span<const std::size_t> counts,
                                         const std::function<double(std::size_t)>& pmf,
                                         std::size_t max_bin,
                                         double min_expected = 5.0) {
    require(!counts.empty(), ErrorCode::empty_sample, "chi-square needs samples");
    const double n = static_cast<double>(counts.size());
    std::vector<double> observed(max_bin + 2, 0.0);
    for (std::size_t c : counts) observed[std::min(c, max_bin + 1)] += 1.0;

    ChiSquareResult result;
    result.dof = -1;
    double obs_acc = 0.0;
    double exp_acc = 0.0;
    double pmf_acc = 0.0;
    for (std::size_t k = 0; k <= max_bin + 1; ++k) {
        double pk;
        if (k <= max_bin) {
            pk = pmf(k);
            pmf_acc += pk;
        } else {
            pk = std::max(0.0, 1.0 - pmf_acc);  // right tail
        }
        obs_acc += observed[k];
        exp_acc += n * pk;
        if (exp_acc >= min_expected || k == max_bin + 1) {
            if (exp_acc > 0.0) {
                result.statistic += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
                ++result.dof;
            }
            obs_acc = exp_acc = 0.0;
        }
    }
    result.dof = std::max(result.dof, 1);
    result.p_value = chi_squared_survival(result.statistic, result.dof);
    return result;
}

// Two-sample chi-square homogeneity test over pooled integer bins.
inline ChiSquareResult chi_square_two_sample(std::span<const std::size_t> a,
                                             std::span<const std::size_t> b,
                                             std::size_t max_bin,
                                             double min_total = 10.0) {
    std::vector<double> ha(max_bin + 2, 0.0), hb(max_bin + 2, 0.0);
    for (std::size_t c : a) ha[std::min(c, max_bin + 1)] += 1.0;
    for (std::size_t c : b) hb[std::min(c, max_bin + 1)] += 1.0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    ChiSquareResult result;
    result.dof = -1;
    double acc_a = 0.0, acc_b = 0.0;
    for (std::size_t k = 0; k <= max_bin + 1; ++k) {
        acc_a += ha[k];
        acc_b += hb[k];
        if (acc_a + acc_b >= min_total || k == max_bin + 1) {
            const double total = acc_a + acc_b;
            if (total > 0.0) {
                // Pearson statistic for a 2 x bins table.
                const double ea = total * na / (na + nb);
                const double eb = total * nb / (na + nb);
                result.statistic += (acc_a - ea) * (acc_a - ea) / ea +
                                    (acc_b - eb) * (acc_b - eb) / eb;
                ++result.dof;
            }
            acc_a = acc_b = 0.0;
        }
    }
    result.dof = std::max(result.dof, 1);
    result.p_value = chi_squared_survival(result.statistic, result.dof);
    return result;
}

} // namespace brimm
