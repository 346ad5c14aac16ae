#pragma once

#include <algorithm>
#include <ostream>
#include <vector>

#include "brimm/errors.hpp"

namespace brimm {

// Finite realisation of a point process on (0, T]: strictly increasing epochs.
struct PointPattern {
    std::vector<double> times;
    double window_end = 0.0;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }

    void validate() const {
        for (std::size_t i = 0; i < times.size(); ++i) {
            require(times[i] > 0.0 && times[i] <= window_end, ErrorCode::invalid_argument,
                    "pattern epoch outside (0, T]");
            if (i > 0)
                require(times[i] > times[i - 1], ErrorCode::invalid_argument,
                        "pattern epochs must be strictly increasing");
        }
    }

    // One epoch per row.
    void to_csv(std::ostream& os) const {
        os << "time\n";
        for (double t : times) os << t << "\n";
    }
};

} // namespace brimm
