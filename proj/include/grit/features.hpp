#pragma once

// The eight interpretable features computed per (vehicle, candidate goal).

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

#include "grit/scenario.hpp"
#include "grit/trajectory.hpp"

namespace grit {

enum class Feature : std::size_t {
    path_to_goal_length = 0,
    in_correct_lane,
    speed,
    acceleration,
    angle_in_lane,
    vehicle_in_front_dist,
    vehicle_in_front_speed,
    oncoming_vehicle_dist,
};

inline constexpr std::size_t kFeatureCount = 8;

inline constexpr std::array<Feature, kFeatureCount> kFeatures{
    Feature::path_to_goal_length,   Feature::in_correct_lane,       Feature::speed,
    Feature::acceleration,          Feature::angle_in_lane,         Feature::vehicle_in_front_dist,
    Feature::vehicle_in_front_speed, Feature::oncoming_vehicle_dist,
};

constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

inline std::string_view to_string(Feature f) {
    switch (f) {
        case Feature::path_to_goal_length: return "path_to_goal_length";
        case Feature::in_correct_lane: return "in_correct_lane";
        case Feature::speed: return "speed";
        case Feature::acceleration: return "acceleration";
        case Feature::angle_in_lane: return "angle_in_lane";
        case Feature::vehicle_in_front_dist: return "vehicle_in_front_dist";
        case Feature::vehicle_in_front_speed: return "vehicle_in_front_speed";
        case Feature::oncoming_vehicle_dist: return "oncoming_vehicle_dist";
    }
    return "?";
}

inline std::optional<Feature> feature_from_string(std::string_view s) {
    for (Feature f : kFeatures)
        if (to_string(f) == s) return f;
    return std::nullopt;
}

constexpr bool is_boolean(Feature f) { return f == Feature::in_correct_lane; }

/// Dense feature values with MISSING already imputed; booleans as 0/1.
using FeatureValues = std::array<double, kFeatureCount>;

struct FeatureVector {
    double path_to_goal_length{0.0};
    bool in_correct_lane{false};
    double speed{0.0};
    double acceleration{0.0};
    double angle_in_lane{0.0};
    std::optional<double> vehicle_in_front_dist;
    std::optional<double> vehicle_in_front_speed;
    std::optional<double> oncoming_vehicle_dist;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct Interval1D {
    double lo;
    double hi;
};

/// Imputation caps, verifier domains and the shared/per-goal partition.
struct FeatureMetadata {
    double distance_cap{100.0};  ///< lookahead horizon and MISSING distance value
    double speed_cap{20.0};      ///< MISSING front-vehicle speed value
    std::array<Interval1D, kFeatureCount> domain{{
        {0.0, 300.0},                                   // path_to_goal_length
        {0.0, 1.0},                                     // in_correct_lane
        {0.0, 30.0},                                    // speed
        {-8.0, 8.0},                                    // acceleration
        {-std::numbers::pi, std::numbers::pi},          // angle_in_lane, upper end open
        {0.0, 100.0},                                   // vehicle_in_front_dist
        {0.0, 30.0},                                    // vehicle_in_front_speed
        {0.0, 100.0},                                   // oncoming_vehicle_dist
    }};
    std::array<bool, kFeatureCount> shared{false, false, true, true, true, true, true, true};

    bool is_shared(Feature f) const { return shared[index_of(f)]; }
    const Interval1D& domain_of(Feature f) const { return domain[index_of(f)]; }
    /// Whether the domain's upper bound is excluded.
    static constexpr bool upper_open(Feature f) { return f == Feature::angle_in_lane; }

    friend bool operator==(const FeatureMetadata& a, const FeatureMetadata& b) {
        if (a.distance_cap != b.distance_cap || a.speed_cap != b.speed_cap || a.shared != b.shared) return false;
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            if (a.domain[i].lo != b.domain[i].lo || a.domain[i].hi != b.domain[i].hi) return false;
        return true;
    }
};

inline FeatureValues impute(const FeatureVector& x, const FeatureMetadata& meta) {
    return {
        x.path_to_goal_length,
        x.in_correct_lane ? 1.0 : 0.0,
        x.speed,
        x.acceleration,
        x.angle_in_lane,
        x.vehicle_in_front_dist.value_or(meta.distance_cap),
        x.vehicle_in_front_speed.value_or(meta.speed_cap),
        x.oncoming_vehicle_dist.value_or(meta.distance_cap),
    };
}

// ---------------------------------------------------------------------------
// Sub-features

/// True iff a goal is reachable from the lane position by successor links only.
inline bool in_correct_lane(const LanePosition& current, const GoalSpec& goal, const Scenario& sc) {
    RoutingOptions no_changes;
    no_changes.allow_lane_changes = false;
    for (const auto& r : reachable_goals(current, sc, no_changes))
        if (r.goal_id == goal.id) return true;
    return false;
}

struct FrontVehicle {
    std::optional<double> distance;
    std::optional<double> speed;
};

/// Closest agent ahead on the subject's successor corridor (current lane and
/// everything reachable from it by successor links), within the lookahead cap.
inline FrontVehicle vehicle_in_front(const History& h, const Scenario& sc, const LanePosition& ego,
                                     double horizon = 100.0) {
    const LanePath corridor = successor_tree(ego, sc, horizon);
    FrontVehicle best;
    h.for_each_other_agent([&](AgentId, const AgentState& other) {
        const LanePosition pos = nearest_lane(other, sc);
        auto coord = route_coordinate(corridor, pos.lane, pos.s);
        if (!coord || !(*coord > 0.0) || *coord > horizon) return;
        if (!best.distance || *coord < *best.distance) {
            best.distance = *coord;
            best.speed = other.speed;
        }
    });
    return best;
}

inline FrontVehicle vehicle_in_front(const History& h, const Scenario& sc, double horizon = 100.0) {
    return vehicle_in_front(h, sc, nearest_lane(h.current(), sc), horizon);
}

/// Minimum along-lane distance from an approaching agent to the point where its
/// lane crosses the subject's successor corridor.
inline std::optional<double> oncoming_vehicle(const History& h, const Scenario& sc, const LanePosition& ego,
                                              double horizon = 100.0) {
    const LanePath corridor = successor_tree(ego, sc, horizon);
    struct Target {
        std::size_t lane;
        double s;
    };
    std::vector<Target> targets;
    auto on_corridor = [&](std::size_t lane) {
        for (const auto& st : corridor)
            if (st.lane == lane) return true;
        return false;
    };
    for (const auto& c : sc.conflicts()) {
        for (int side = 0; side < 2; ++side) {
            const std::size_t mine = side == 0 ? c.lane_a : c.lane_b;
            const std::size_t theirs = side == 0 ? c.lane_b : c.lane_a;
            const double s_mine = side == 0 ? c.s_a : c.s_b;
            const double s_theirs = side == 0 ? c.s_b : c.s_a;
            if (on_corridor(theirs)) continue;
            auto coord = route_coordinate(corridor, mine, s_mine);
            if (coord && *coord >= 0.0) targets.push_back({theirs, s_theirs});
        }
    }
    if (targets.empty()) return std::nullopt;
    std::optional<double> best;
    h.for_each_other_agent([&](AgentId, const AgentState& other) {
        const LanePosition pos = nearest_lane(other, sc);
        for (const auto& t : targets) {
            if (pos.lane != t.lane || pos.s > t.s) continue;
            const double d = t.s - pos.s;
            if (d <= horizon && (!best || d < *best)) best = d;
        }
    });
    return best;
}

inline std::optional<double> oncoming_vehicle(const History& h, const Scenario& sc, double horizon = 100.0) {
    return oncoming_vehicle(h, sc, nearest_lane(h.current(), sc), horizon);
}

/// Goal-independent part of the feature vector.
struct SharedFeatures {
    LanePosition lane;
    double speed{0.0};
    double acceleration{0.0};
    double angle_in_lane{0.0};
    FrontVehicle front;
    std::optional<double> oncoming;
};

inline SharedFeatures extract_shared_features(const History& h, const Scenario& sc,
                                              const FeatureMetadata& meta = {}) {
    SharedFeatures out;
    const AgentState& st = h.current();
    out.lane = nearest_lane(st, sc);
    out.speed = st.speed;
    out.acceleration = st.acceleration;
    out.angle_in_lane = wrap_angle_half_open(st.heading - out.lane.heading);
    out.front = vehicle_in_front(h, sc, out.lane, meta.distance_cap);
    out.oncoming = oncoming_vehicle(h, sc, out.lane, meta.distance_cap);
    return out;
}

inline FeatureVector combine_features(const SharedFeatures& shared, const ReachableGoal& route, const Scenario& sc) {
    FeatureVector x;
    x.path_to_goal_length = route.length;
    x.in_correct_lane = in_correct_lane(shared.lane, sc.goals()[route.goal], sc);
    x.speed = shared.speed;
    x.acceleration = shared.acceleration;
    x.angle_in_lane = shared.angle_in_lane;
    x.vehicle_in_front_dist = shared.front.distance;
    x.vehicle_in_front_speed = shared.front.speed;
    x.oncoming_vehicle_dist = shared.oncoming;
    return x;
}

/// Feature vector for one candidate goal at the history's final frame.
inline FeatureVector extract_features(const History& h, const ReachableGoal& route, const Scenario& sc,
                                      const FeatureMetadata& meta = {}) {
    return combine_features(extract_shared_features(h, sc, meta), route, sc);
}

// ---------------------------------------------------------------------------
// JSON (MISSING as null)

inline nlohmann::json to_json(const FeatureVector& x) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        if (v) return *v;
        return nullptr;
    };
    return {
        {"path_to_goal_length", x.path_to_goal_length},
        {"in_correct_lane", x.in_correct_lane},
        {"speed", x.speed},
        {"acceleration", x.acceleration},
        {"angle_in_lane", x.angle_in_lane},
        {"vehicle_in_front_dist", opt(x.vehicle_in_front_dist)},
        {"vehicle_in_front_speed", opt(x.vehicle_in_front_speed)},
        {"oncoming_vehicle_dist", opt(x.oncoming_vehicle_dist)},
    };
}

inline FeatureVector feature_vector_from_json(const nlohmann::json& j) {
    auto opt = [&](const char* k) -> std::optional<double> {
        if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
        return j.at(k).get<double>();
    };
    FeatureVector x;
    try {
        x.path_to_goal_length = j.at("path_to_goal_length").get<double>();
        x.in_correct_lane = j.at("in_correct_lane").get<bool>();
        x.speed = j.at("speed").get<double>();
        x.acceleration = j.at("acceleration").get<double>();
        x.angle_in_lane = j.at("angle_in_lane").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("feature vector: ") + e.what());
    }
    x.vehicle_in_front_dist = opt("vehicle_in_front_dist");
    x.vehicle_in_front_speed = opt("vehicle_in_front_speed");
    x.oncoming_vehicle_dist = opt("oncoming_vehicle_dist");
    return x;
}

}  // namespace grit
