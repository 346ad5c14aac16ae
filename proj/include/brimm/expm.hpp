#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "brimm/model.hpp"

namespace brimm {

namespace detail {

// [m/m] Pade approximant of exp at 0, evaluated as the solution of
// (-U + V) X = (U + V).
inline Mat expm_pade(const Mat& a, const double* coeffs, int degree) {
    const int d = static_cast<int>(a.rows());
    const Mat a2 = a * a;
    Mat even = coeffs[0] * Mat::Identity(d, d);
    Mat odd = coeffs[1] * Mat::Identity(d, d);
    Mat power = Mat::Identity(d, d);
    for (int k = 2; k <= degree; k += 2) {
        power = power * a2;
        even += coeffs[k] * power;
        if (k + 1 <= degree) odd += coeffs[k + 1] * power;
    }
    const Mat u = a * odd;
    return Eigen::PartialPivLU<Mat>(even - u).solve(even + u);
}

} // namespace detail

// Matrix exponential by scaling and squaring with Pade-13 (Higham 2005).
inline Mat expm(const Mat& a) {
    static const double p13[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    const double theta13 = 5.371920351148152;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        squarings = std::max(0, squarings);
    }
    Mat scaled = a / std::pow(2.0, squarings);
    Mat result = detail::expm_pade(scaled, p13, 13);
    for (int k = 0; k < squarings; ++k) result = result * result;
    return result;
}

} // namespace brimm
