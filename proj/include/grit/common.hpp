#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace grit {

/// Raised for malformed or invariant-violating inputs (files, propositions,
/// models). The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using AgentId = std::int64_t;

/// Observed state of one vehicle at one frame.
struct AgentState {
    double time{0.0};
    double x{0.0};
    double y{0.0};
    double heading{0.0};  ///< radians, (-pi, pi]
    double speed{0.0};    ///< m/s, >= 0
    double acceleration{0.0};

    bool finite() const {
        return std::isfinite(time) && std::isfinite(x) && std::isfinite(y) && std::isfinite(heading) &&
               std::isfinite(speed) && std::isfinite(acceleration);
    }
    friend bool operator==(const AgentState&, const AgentState&) = default;
};

}  // namespace grit
