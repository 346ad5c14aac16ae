#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "brimm/errors.hpp"
#include "brimm/rng.hpp"

namespace brimm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Finite-support probability mass function over N_0^d.
class Pmf {
public:
    Pmf() = default;
    Pmf(int dim, std::vector<std::pair<std::vector<std::int64_t>, double>> atoms)
        : dim_(dim), atoms_(std::move(atoms)) {
        validate();
        cumulative_.reserve(atoms_.size());
        double c = 0.0;
        for (const auto& [value, p] : atoms_) {
            c += p;
            cumulative_.push_back(c);
        }
        cumulative_.back() = 1.0;
    }

    // Point mass at a single vector.
    static Pmf constant(std::vector<std::int64_t> value) {
        const int d = static_cast<int>(value.size());
        return Pmf(d, {{std::move(value), 1.0}});
    }

    int dim() const { return dim_; }
    const auto& atoms() const { return atoms_; }
    std::size_t support_size() const { return atoms_.size(); }
    bool degenerate() const { return atoms_.size() < 2; }

    Vec mean() const {
        Vec m = Vec::Zero(dim_);
        for (const auto& [value, p] : atoms_)
            for (int j = 0; j < dim_; ++j) m[j] += p * static_cast<double>(value[j]);
        return m;
    }

    // Mixed factorial moments E[n_j (n_k - 1{j=k})], i.e. the Hessian of the
    // generating function at the all-ones point.
    Mat second_factorial_moment() const {
        Mat f = Mat::Zero(dim_, dim_);
        for (const auto& [value, p] : atoms_)
            for (int j = 0; j < dim_; ++j)
                for (int k = 0; k < dim_; ++k) {
                    const double nj = static_cast<double>(value[j]);
                    const double nk = static_cast<double>(value[k]);
                    f(j, k) += p * nj * (nk - (j == k ? 1.0 : 0.0));
                }
        return f;
    }

    Mat second_moment() const {
        Mat s = Mat::Zero(dim_, dim_);
        for (const auto& [value, p] : atoms_)
            for (int j = 0; j < dim_; ++j)
                for (int k = 0; k < dim_; ++k)
                    s(j, k) += p * static_cast<double>(value[j]) *
                               static_cast<double>(value[k]);
        return s;
    }

    // Generating function G(s) = sum_n P(n) prod_j s_j^{n_j}.
    double generating(const Vec& s) const {
        double g = 0.0;
        for (const auto& [value, p] : atoms_) {
            double prod = p;
            for (int j = 0; j < dim_; ++j)
                for (std::int64_t c = 0; c < value[j]; ++c) prod *= s[j];
            g += prod;
        }
        return g;
    }

    const std::vector<std::int64_t>& sample(RngStream& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const std::size_t idx =
            std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
        return atoms_[idx].first;
    }

private:
    void validate() const {
        require(dim_ >= 1, ErrorCode::invalid_argument, "pmf dimension must be >= 1");
        require(!atoms_.empty(), ErrorCode::invalid_argument, "pmf has no atoms");
        double sum = 0.0;
        for (const auto& [value, p] : atoms_) {
            require(static_cast<int>(value.size()) == dim_, ErrorCode::invalid_argument,
                    "pmf atom dimension mismatch");
            require(p >= 0.0, ErrorCode::invalid_argument, "pmf probability < 0");
            for (std::int64_t v : value)
                require(v >= 0, ErrorCode::invalid_argument, "pmf support must be in N_0");
            sum += p;
        }
        require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::invalid_argument,
                "pmf probabilities sum to " + std::to_string(sum));
    }

    int dim_ = 0;
    std::vector<std::pair<std::vector<std::int64_t>, double>> atoms_;
    std::vector<double> cumulative_;
};

// Full model: type count, mean lifetimes, per-type offspring laws, immigrant law.
struct BranchingSpec {
    std::vector<double> lifetimes;  // mu_i > 0
    std::vector<Pmf> offspring;     // law of nu_i per type
    Pmf immigrant_law;              // law of I

    int num_types() const { return static_cast<int>(lifetimes.size()); }

    void validate() const {
        const int d = num_types();
        require(d >= 1, ErrorCode::invalid_argument, "model needs at least one type");
        require(static_cast<int>(offspring.size()) == d, ErrorCode::invalid_argument,
                "offspring laws and lifetimes disagree on type count");
        for (double mu : lifetimes)
            require(mu > 0.0, ErrorCode::invalid_argument, "lifetimes must be > 0");
        for (const Pmf& law : offspring)
            require(law.dim() == d, ErrorCode::invalid_argument,
                    "offspring law dimension mismatch");
        require(immigrant_law.dim() == d, ErrorCode::invalid_argument,
                "immigrant law dimension mismatch");
        bool non_degenerate = false;
        for (const Pmf& law : offspring)
            if (!law.degenerate()) non_degenerate = true;
        require(non_degenerate, ErrorCode::degenerate,
                "offspring law is a.s. constant for every type");
    }

    Mat mean_offspring_matrix() const {
        const int d = num_types();
        Mat m(d, d);
        for (int i = 0; i < d; ++i) m.row(i) = offspring[i].mean().transpose();
        return m;
    }
};

enum class Criticality { subcritical, critical, supercritical };

inline const char* criticality_name(Criticality c) {
    switch (c) {
        case Criticality::subcritical:   return "subcritical";
        case Criticality::critical:      return "critical";
        case Criticality::supercritical: return "supercritical";
    }
    return "unknown";
}

// Generator matrix A, its Perron root and the positive eigenvector pair
// normalised so that sum(u) = 1 and <u, v> = 1.
struct GeneratorSummary {
    Mat A;
    Mat M;
    double rho = 0.0;
    Vec u;
    Vec v;
    Criticality criticality = Criticality::critical;
};

namespace detail {

inline bool matrix_all_positive(const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (!(m(i, j) > 0.0)) return false;
    return true;
}

// Primitivity via positivity of (I + M)^d; equivalent to irreducibility plus
// aperiodicity at this scale.
inline bool is_primitive(const Mat& m) {
    const int d = static_cast<int>(m.rows());
    Mat p = Mat::Identity(d, d) + m;
    Mat acc = Mat::Identity(d, d);
    for (int k = 0; k < d; ++k) acc = acc * p;
    return matrix_all_positive(acc);
}

// Dominant eigenpair of a primitive nonnegative matrix: power iteration
// followed by Rayleigh-shifted inverse iteration.  Returns (eigenvalue,
// positive eigenvector with sum 1).
inline std::pair<double, Vec> perron_pair(const Mat& p) {
    const int d = static_cast<int>(p.rows());
    Vec x = Vec::Constant(d, 1.0 / d);
    double theta = 0.0;
    for (int iter = 0; iter < 500; ++iter) {
        Vec y = p * x;
        const double norm = y.sum();
        require(norm > 0.0, ErrorCode::non_primitive, "power iteration collapsed");
        y /= norm;
        const double delta = (y - x).cwiseAbs().maxCoeff();
        x = y;
        theta = x.dot(p * x) / x.squaredNorm();
        if (delta < 1e-15) break;
    }
    // Inverse iteration sharpens clustered spectra that power iteration
    // resolves slowly.
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    for (int iter = 0; iter < 12; ++iter) {
        const Vec residual = p * x - theta * x;
        if (residual.cwiseAbs().maxCoeff() < 1e-13 * scale) break;
        Mat shifted = p - (theta + 1e-11 * scale) * Mat::Identity(d, d);
        Eigen::PartialPivLU<Mat> lu(shifted);
        Vec y = lu.solve(x);
        if (!y.allFinite()) break;
        y /= y.cwiseAbs().maxCoeff();
        if (y.sum() < 0.0) y = -y;
        y = y.cwiseMax(0.0);
        const double norm = y.sum();
        if (norm <= 0.0) break;
        x = y / norm;
        theta = x.dot(p * x) / x.squaredNorm();
    }
    const Vec residual = p * x - theta * x;
    require(residual.cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorCode::non_primitive,
            "Perron iteration did not converge");
    return {theta, x};
}

} // namespace detail

// Builds A_{ij} = mu_i^{-1} (E[(nu_i)_j] - 1{i=j}) together with the Perron
// data.  The iteration runs on A + (1 + max_i 1/mu_i) I, which is
// entrywise nonnegative with positive diagonal, hence primitive whenever M is.
inline GeneratorSummary build_generator(const BranchingSpec& spec,
                                        double criticality_tol = 1e-10) {
    spec.validate();
    const int d = spec.num_types();
    GeneratorSummary gen;
    gen.M = spec.mean_offspring_matrix();
    require(detail::is_primitive(gen.M), ErrorCode::non_primitive,
            "mean offspring matrix is not primitive");

    gen.A = Mat(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            gen.A(i, j) = (gen.M(i, j) - (i == j ? 1.0 : 0.0)) / spec.lifetimes[i];

    double shift = 1.0;
    for (double mu : spec.lifetimes) shift = std::max(shift, 1.0 + 1.0 / mu);
    const Mat p = gen.A + shift * Mat::Identity(d, d);

    auto [theta_r, u] = detail::perron_pair(p);
    auto [theta_l, v] = detail::perron_pair(p.transpose().eval());
    gen.rho = 0.5 * (theta_r + theta_l) - shift;

    gen.u = u;  // already sum-normalised
    const double uv = u.dot(v);
    require(uv > 0.0, ErrorCode::non_primitive, "eigenvector normalisation failed");
    gen.v = v / uv;

    for (int i = 0; i < d; ++i)
        require(gen.u[i] > 0.0 && gen.v[i] > 0.0, ErrorCode::non_primitive,
                "Perron eigenvectors must be strictly positive");

    if (std::abs(gen.rho) < criticality_tol)
        gen.criticality = Criticality::critical;
    else
        gen.criticality = gen.rho < 0.0 ? Criticality::subcritical
                                        : Criticality::supercritical;
    return gen;
}

// Constants entering the critical Gamma limit and the growth asymptotics:
//   Q      = 1/2 sum_{i,j,k} d^2 G_{nu_i} / dx_j dx_k |_1 . mu_i^{-1} v_i u_j u_k
//   beta   = E[<I, u>] / Q
//   a_i    = <u, E[I]> v_i
struct LimitConstants {
    double Q = 0.0;
    double beta_gamma = 0.0;
    Vec a;
    double K_star = 0.0;
};

inline LimitConstants limit_constants(const BranchingSpec& spec,
                                      const GeneratorSummary& gen,
                                      double kernel_diag) {
    const int d = spec.num_types();
    LimitConstants lc;
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
        const Mat f = spec.offspring[i].second_factorial_moment();
        double inner = 0.0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) inner += f(j, k) * gen.u[j] * gen.u[k];
        q += inner * gen.v[i] / spec.lifetimes[i];
    }
    lc.Q = 0.5 * q;
    require(lc.Q > 0.0, ErrorCode::zero_q, "Q = 0: offspring laws degenerate");

    double mean_iu = 0.0;  // E[<I, u>]
    for (const auto& [value, p] : spec.immigrant_law.atoms()) {
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += static_cast<double>(value[j]) * gen.u[j];
        mean_iu += p * dot;
    }
    lc.beta_gamma = mean_iu / lc.Q;
    lc.a = mean_iu * gen.v;
    lc.K_star = kernel_diag;
    return lc;
}

enum class EigenConvention { canonical, weiner, holte };

// Renormalises the Perron pair into the requested literature convention.
// Weiner:  u_W = u,  v_{W,i} = v_i / (mu_i D2)     with D2 = sum_j u_j v_j / mu_j
// Holte :  u_{H,i} = (D1/D2) u_i,  v_{H,i} = v_i / (D1 mu_i)
//          with D1 = sum_j v_j / mu_j
inline std::pair<Vec, Vec> eigen_convert(const GeneratorSummary& gen,
                                         const BranchingSpec& spec,
                                         EigenConvention convention) {
    const int d = spec.num_types();
    if (convention == EigenConvention::canonical) return {gen.u, gen.v};
    double d1 = 0.0, d2 = 0.0;
    for (int j = 0; j < d; ++j) {
        d1 += gen.v[j] / spec.lifetimes[j];
        d2 += gen.u[j] * gen.v[j] / spec.lifetimes[j];
    }
    Vec u(d), v(d);
    if (convention == EigenConvention::weiner) {
        u = gen.u;
        for (int i = 0; i < d; ++i) v[i] = gen.v[i] / (spec.lifetimes[i] * d2);
    } else {
        for (int i = 0; i < d; ++i) {
            u[i] = (d1 / d2) * gen.u[i];
            v[i] = gen.v[i] / (d1 * spec.lifetimes[i]);
        }
    }
    return {u, v};
}

} // namespace brimm
