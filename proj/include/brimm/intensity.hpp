#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "brimm/errors.hpp"

namespace brimm {

// Density lambda(x) of the reference measure Lambda(dx) = lambda(x) dx,
// together with a sup bound over [0, T] used as a thinning envelope.
class IntensityDensity {
public:
    IntensityDensity()
        : fn_([](double) { return 0.0; }),
          sup_([](double) { return 0.0; }),
          label_("constant(0)") {}

    static IntensityDensity constant(double c) {
        require(c >= 0.0, ErrorCode::invalid_argument, "constant density must be >= 0");
        IntensityDensity d;
        d.fn_ = [c](double) { return c; };
        d.sup_ = [c](double) { return c; };
        d.label_ = "constant(" + std::to_string(c) + ")";
        return d;
    }

    // lambda(x) = lambda_inf * exp(delta x); monotone, so the window sup is at
    // whichever end delta points to.
    static IntensityDensity exponential(double lambda_inf, double delta) {
        require(lambda_inf > 0.0, ErrorCode::invalid_argument,
                "exponential density scale must be > 0");
        IntensityDensity d;
        d.fn_ = [=](double x) { return lambda_inf * std::exp(delta * x); };
        d.sup_ = [=](double t) {
            return delta > 0.0 ? lambda_inf * std::exp(delta * t) : lambda_inf;
        };
        d.label_ = "exponential(" + std::to_string(lambda_inf) + "," +
                   std::to_string(delta) + ")";
        return d;
    }

    static IntensityDensity custom(std::function<double(double)> fn,
                                   std::function<double(double)> sup_on_window,
                                   std::string label = "custom") {
        IntensityDensity d;
        d.fn_ = std::move(fn);
        d.sup_ = std::move(sup_on_window);
        d.label_ = std::move(label);
        return d;
    }

    double operator()(double x) const { return fn_(x); }
    double envelope(double window_end) const { return sup_(window_end); }
    const std::string& label() const { return label_; }

private:
    std::function<double(double)> fn_;
    std::function<double(double)> sup_;
    std::string label_;
};

} // namespace brimm
