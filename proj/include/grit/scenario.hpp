#pragma once

// Static road layout: lane graph, goal locations, reachability and goal types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "grit/common.hpp"
#include "grit/geometry.hpp"

namespace grit {

enum class GoalType { straight_on, turn_left, turn_right, u_turn };

inline constexpr std::array<GoalType, 4> kGoalTypes{GoalType::straight_on, GoalType::turn_left,
                                                    GoalType::turn_right, GoalType::u_turn};

inline std::string_view to_string(GoalType t) {
    switch (t) {
        case GoalType::straight_on: return "straight_on";
        case GoalType::turn_left: return "turn_left";
        case GoalType::turn_right: return "turn_right";
        case GoalType::u_turn: return "u_turn";
    }
    return "?";
}

inline GoalType goal_type_from_string(std::string_view s) {
    for (GoalType t : kGoalTypes)
        if (to_string(t) == s) return t;
    throw InputError("unknown goal type '" + std::string(s) + "'");
}

struct AdjacentLane {
    std::string id;
    bool same_direction{true};
};

struct Lane {
    std::string id;
    Polyline centerline;
    std::vector<std::string> successors;
    std::optional<AdjacentLane> left;
    std::optional<AdjacentLane> right;
    bool in_junction{false};
};

struct GoalSpec {
    std::string id;
    Point location{};
    double radius{1.5};
};

/// Where two junction lanes cross, in each lane's own arclength.
struct ConflictPoint {
    std::size_t lane_a{0};
    std::size_t lane_b{0};
    double s_a{0.0};
    double s_b{0.0};
};

/// Immutable lane graph plus goals. Constructing one validates every invariant.
class Scenario {
public:
    static constexpr double kMaxGoalOffRoad = 5.0;

    Scenario() = default;

    Scenario(std::vector<Lane> lanes, std::vector<GoalSpec> goals,
             std::vector<std::pair<std::string, std::string>> conflicts = {})
        : lanes_(std::move(lanes)), goals_(std::move(goals)), conflict_ids_(std::move(conflicts)) {
        if (lanes_.empty()) throw InputError("scenario has no lanes");
        for (std::size_t i = 0; i < lanes_.size(); ++i) {
            if (!index_.emplace(lanes_[i].id, i).second)
                throw InputError("duplicate lane id '" + lanes_[i].id + "'");
        }
        successors_.resize(lanes_.size());
        adjacent_.resize(lanes_.size());
        for (std::size_t i = 0; i < lanes_.size(); ++i) {
            const Lane& lane = lanes_[i];
            for (const auto& succ : lane.successors) successors_[i].push_back(require_lane(succ, lane.id));
            for (const auto* adj : {&lane.left, &lane.right}) {
                if (!*adj) continue;
                std::size_t j = require_lane((*adj)->id, lane.id);
                if ((*adj)->same_direction) adjacent_[i].push_back(j);
            }
        }
        std::set<std::string> goal_ids;
        for (const auto& g : goals_) {
            if (!goal_ids.insert(g.id).second) throw InputError("duplicate goal id '" + g.id + "'");
            if (!(g.radius > 0.0) || !std::isfinite(g.radius))
                throw InputError("goal '" + g.id + "' has non-positive radius");
            if (!std::isfinite(g.location.x) || !std::isfinite(g.location.y))
                throw InputError("goal '" + g.id + "' has non-finite location");
            double best = std::numeric_limits<double>::infinity();
            for (const auto& lane : lanes_) best = std::min(best, lane.centerline.project(g.location).distance);
            if (best > kMaxGoalOffRoad)
                throw InputError("goal '" + g.id + "' lies off-road (" + std::to_string(best) + " m from any lane)");
        }
        goal_lanes_.resize(goals_.size());
        for (std::size_t g = 0; g < goals_.size(); ++g) {
            for (std::size_t l = 0; l < lanes_.size(); ++l) {
                Projection p = lanes_[l].centerline.project(goals_[g].location);
                if (p.distance <= goals_[g].radius) goal_lanes_[g].push_back({l, p.s, p.heading});
            }
        }
        for (const auto& [a, b] : conflict_ids_) {
            std::size_t ia = require_lane(a, "conflicts");
            std::size_t ib = require_lane(b, "conflicts");
            conflicts_.push_back(make_conflict(ia, ib));
        }
    }

    const std::vector<Lane>& lanes() const { return lanes_; }
    const std::vector<GoalSpec>& goals() const { return goals_; }
    const std::vector<std::pair<std::string, std::string>>& conflict_ids() const { return conflict_ids_; }
    const std::vector<ConflictPoint>& conflicts() const { return conflicts_; }
    const Lane& lane(std::size_t i) const { return lanes_[i]; }

    std::optional<std::size_t> lane_index(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<std::size_t> goal_index(const std::string& id) const {
        for (std::size_t i = 0; i < goals_.size(); ++i)
            if (goals_[i].id == id) return i;
        return std::nullopt;
    }

    const std::vector<std::size_t>& successors(std::size_t lane) const { return successors_[lane]; }
    const std::vector<std::size_t>& same_direction_neighbours(std::size_t lane) const { return adjacent_[lane]; }

    struct GoalOnLane {
        std::size_t lane;
        double s;
        double heading;
    };
    /// Lanes whose centerline passes within the goal's radius.
    const std::vector<GoalOnLane>& goal_lanes(std::size_t goal) const { return goal_lanes_[goal]; }

private:
    std::size_t require_lane(const std::string& id, const std::string& referrer) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw InputError("dangling lane reference '" + id + "' (from '" + referrer + "')");
        return it->second;
    }

    ConflictPoint make_conflict(std::size_t a, std::size_t b) const {
        const Polyline& pa = lanes_[a].centerline;
        const Polyline& pb = lanes_[b].centerline;
        if (auto hit = pa.first_intersection(pb)) return {a, b, hit->first, hit->second};
        // No crossing: use the closest approach between the two centerlines.
        ConflictPoint best{a, b, 0.0, 0.0};
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pa.size(); ++i) {
            Projection p = pb.project(pa.points()[i]);
            if (p.distance < best_d) {
                best_d = p.distance;
                best = {a, b, pa.arclength_at_vertex(i), p.s};
            }
        }
        for (std::size_t i = 0; i < pb.size(); ++i) {
            Projection p = pa.project(pb.points()[i]);
            if (p.distance < best_d) {
                best_d = p.distance;
                best = {a, b, p.s, pb.arclength_at_vertex(i)};
            }
        }
        return best;
    }

    std::vector<Lane> lanes_;
    std::vector<GoalSpec> goals_;
    std::vector<std::pair<std::string, std::string>> conflict_ids_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> successors_;
    std::vector<std::vector<std::size_t>> adjacent_;
    std::vector<std::vector<GoalOnLane>> goal_lanes_;
    std::vector<ConflictPoint> conflicts_;
};

// ---------------------------------------------------------------------------
// JSON I/O

inline Scenario scenario_from_json(const nlohmann::json& j) {
    auto where = [](const std::string& id) { return id.empty() ? std::string("<unnamed>") : id; };
    if (!j.is_object() || !j.contains("lanes")) throw InputError("scenario: expected object with 'lanes'");
    std::vector<Lane> lanes;
    for (const auto& jl : j.at("lanes")) {
        Lane lane;
        try {
            lane.id = jl.at("id").get<std::string>();
            std::vector<Point> pts;
            for (const auto& p : jl.at("centerline")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            try {
                lane.centerline = Polyline(std::move(pts));
            } catch (const std::invalid_argument& e) {
                throw InputError("lane '" + where(lane.id) + "': " + e.what());
            }
            if (jl.contains("successors"))
                for (const auto& s : jl.at("successors")) lane.successors.push_back(s.get<std::string>());
            for (const char* side : {"left", "right"}) {
                if (!jl.contains(side) || jl.at(side).is_null()) continue;
                const auto& a = jl.at(side);
                AdjacentLane adj{a.at("id").get<std::string>(), a.value("same_direction", true)};
                (std::string_view(side) == "left" ? lane.left : lane.right) = adj;
            }
            lane.in_junction = jl.value("in_junction", false);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("lane '" + where(lane.id) + "': " + e.what());
        }
        lanes.push_back(std::move(lane));
    }
    std::vector<GoalSpec> goals;
    if (j.contains("goals")) {
        for (const auto& jg : j.at("goals")) {
            GoalSpec g;
            try {
                g.id = jg.at("id").get<std::string>();
                g.location = {jg.at("x").get<double>(), jg.at("y").get<double>()};
                g.radius = jg.value("radius", 1.5);
            } catch (const nlohmann::json::exception& e) {
                throw InputError("goal '" + where(g.id) + "': " + e.what());
            }
            goals.push_back(g);
        }
    }
    std::vector<std::pair<std::string, std::string>> conflicts;
    if (j.contains("conflicts")) {
        for (const auto& c : j.at("conflicts")) {
            if (!c.is_array() || c.size() != 2) throw InputError("conflicts: each entry must be a pair of lane ids");
            conflicts.emplace_back(c.at(0).get<std::string>(), c.at(1).get<std::string>());
        }
    }
    return Scenario(std::move(lanes), std::move(goals), std::move(conflicts));
}

inline nlohmann::json to_json(const Scenario& sc) {
    nlohmann::json lanes = nlohmann::json::array();
    for (const auto& lane : sc.lanes()) {
        nlohmann::json jl;
        jl["id"] = lane.id;
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : lane.centerline.points()) pts.push_back({p.x, p.y});
        jl["centerline"] = pts;
        jl["successors"] = lane.successors;
        for (const auto& [name, adj] : {std::pair{"left", &lane.left}, std::pair{"right", &lane.right}}) {
            if (*adj)
                jl[name] = {{"id", (*adj)->id}, {"same_direction", (*adj)->same_direction}};
            else
                jl[name] = nullptr;
        }
        jl["in_junction"] = lane.in_junction;
        lanes.push_back(jl);
    }
    nlohmann::json goals = nlohmann::json::array();
    for (const auto& g : sc.goals())
        goals.push_back({{"id", g.id}, {"x", g.location.x}, {"y", g.location.y}, {"radius", g.radius}});
    nlohmann::json conflicts = nlohmann::json::array();
    for (const auto& [a, b] : sc.conflict_ids()) conflicts.push_back({a, b});
    return {{"lanes", lanes}, {"goals", goals}, {"conflicts", conflicts}};
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("scenario file '" + path + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write scenario file '" + path + "'");
    out << to_json(sc).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Localisation

struct LanePosition {
    std::size_t lane{0};
    double s{0.0};
    double distance{0.0};
    double heading{0.0};  ///< lane tangent at the closest point
};

/// Lane minimising perpendicular distance; ties go to the smallest absolute
/// heading difference, then to the lexicographically smallest id.
inline LanePosition nearest_lane(Point position, double heading, const Scenario& sc) {
    LanePosition best;
    double best_dh = std::numeric_limits<double>::infinity();
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sc.lanes().size(); ++i) {
        Projection p = sc.lane(i).centerline.project(position);
        double dh = std::abs(wrap_angle(heading - p.heading));
        bool better = false;
        if (p.distance < best.distance) {
            better = true;
        } else if (p.distance == best.distance) {
            if (dh < best_dh) better = true;
            else if (dh == best_dh && sc.lane(i).id < sc.lane(best.lane).id) better = true;
        }
        if (better) {
            best = {i, p.s, p.distance, p.heading};
            best_dh = dh;
        }
    }
    return best;
}

inline LanePosition nearest_lane(const AgentState& st, const Scenario& sc) {
    return nearest_lane({st.x, st.y}, st.heading, sc);
}

// ---------------------------------------------------------------------------
// Routing

/// One lane of a route. `offset` is the route arclength at which the lane is
/// entered and `entry_s` the lane's own arclength at that point, so a point at
/// lane arclength s sits at route coordinate offset + (s - entry_s).
struct PathStep {
    std::size_t lane{0};
    double entry_s{0.0};
    double offset{0.0};
    bool via_lane_change{false};
};

using LanePath = std::vector<PathStep>;

struct ReachableGoal {
    std::size_t goal{0};
    std::string goal_id;
    LanePath path;
    double length{0.0};  ///< travelled arclength, lane-change penalties excluded
    double cost{0.0};    ///< Dijkstra objective, penalties included
    double goal_s{0.0};  ///< goal projection on the final lane
};

struct RoutingOptions {
    double lane_change_penalty{5.0};
    bool allow_lane_changes{true};
};

namespace detail {

struct RouteState {
    std::size_t lane;
    double entry_s;
    double cost;
    double length;
    bool via_lane_change;
    std::int64_t parent;
};

inline LanePath unwind(const std::vector<RouteState>& states, std::int64_t idx) {
    LanePath path;
    for (std::int64_t i = idx; i >= 0; i = states[static_cast<std::size_t>(i)].parent) {
        const auto& st = states[static_cast<std::size_t>(i)];
        path.push_back({st.lane, st.entry_s, st.length, st.via_lane_change});
    }
    std::reverse(path.begin(), path.end());
    return path;
}

inline bool lane_on_route(const std::vector<RouteState>& states, std::int64_t idx, std::size_t lane) {
    for (std::int64_t i = idx; i >= 0; i = states[static_cast<std::size_t>(i)].parent)
        if (states[static_cast<std::size_t>(i)].lane == lane) return true;
    return false;
}

}  // namespace detail

/// Shortest routes from a lane position to every goal reachable through
/// successor and same-direction adjacency links. Routes never revisit a lane.
/// Result is ordered by goal id.
inline std::vector<ReachableGoal> reachable_goals(const LanePosition& start, const Scenario& sc,
                                                  const RoutingOptions& opt = {}) {
    using detail::RouteState;
    std::vector<RouteState> states;
    states.push_back({start.lane, start.s, 0.0, 0.0, false, -1});
    using Item = std::pair<double, std::int64_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    open.push({0.0, 0});
    std::set<std::pair<std::size_t, std::int64_t>> settled;

    std::vector<std::optional<ReachableGoal>> best(sc.goals().size());

    while (!open.empty()) {
        auto [cost, idx] = open.top();
        open.pop();
        const RouteState st = states[static_cast<std::size_t>(idx)];
        auto key = std::pair{st.lane, static_cast<std::int64_t>(std::llround(st.entry_s * 1e6))};
        if (!settled.insert(key).second) continue;

        const Lane& lane = sc.lane(st.lane);
        for (std::size_t g = 0; g < sc.goals().size(); ++g) {
            for (const auto& on : sc.goal_lanes(g)) {
                if (on.lane != st.lane) continue;
                if (on.s < st.entry_s - sc.goals()[g].radius) continue;  // already passed
                const double extra = std::max(0.0, on.s - st.entry_s);
                const double c = st.cost + extra;
                if (!best[g] || c < best[g]->cost) {
                    best[g] = ReachableGoal{g, sc.goals()[g].id, detail::unwind(states, idx), st.length + extra, c,
                                            on.s};
                }
            }
        }

        const double remaining = std::max(0.0, lane.centerline.length() - st.entry_s);
        for (std::size_t succ : sc.successors(st.lane)) {
            if (detail::lane_on_route(states, idx, succ)) continue;
            states.push_back({succ, 0.0, st.cost + remaining, st.length + remaining, false, idx});
            open.push({states.back().cost, static_cast<std::int64_t>(states.size() - 1)});
        }
        if (!opt.allow_lane_changes) continue;
        for (std::size_t adj : sc.same_direction_neighbours(st.lane)) {
            if (detail::lane_on_route(states, idx, adj)) continue;
            const Polyline& here = lane.centerline;
            const Polyline& there = sc.lane(adj).centerline;
            // Change lanes at the entry point, or where the neighbour begins if later.
            const double s_here = std::max(st.entry_s, here.project(there.point_at(0.0)).s);
            const double travel = s_here - st.entry_s;
            const double s_there = there.project(here.point_at(s_here)).s;
            states.push_back({adj, s_there, st.cost + travel + opt.lane_change_penalty, st.length + travel, true, idx});
            open.push({states.back().cost, static_cast<std::int64_t>(states.size() - 1)});
        }
    }

    std::vector<ReachableGoal> out;
    for (auto& b : best)
        if (b) out.push_back(std::move(*b));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.goal_id < b.goal_id; });
    return out;
}

inline std::vector<ReachableGoal> reachable_goals(const AgentState& state, const Scenario& sc,
                                                  const RoutingOptions& opt = {}) {
    return reachable_goals(nearest_lane(state, sc), sc, opt);
}

/// Route coordinate of a lane position, if the lane is on the route ahead of the entry point.
inline std::optional<double> route_coordinate(const LanePath& path, std::size_t lane, double s) {
    for (const auto& step : path)
        if (step.lane == lane && s >= step.entry_s) return step.offset + (s - step.entry_s);
    return std::nullopt;
}

/// Lanes reachable from a position by successor links alone, within `horizon`
/// metres. Branches are all kept, each lane at its shortest offset.
inline LanePath successor_tree(const LanePosition& start, const Scenario& sc, double horizon) {
    LanePath out{{start.lane, start.s, 0.0, false}};
    std::vector<bool> seen(sc.lanes().size(), false);
    seen[start.lane] = true;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const PathStep step = out[i];
        const double end = step.offset + std::max(0.0, sc.lane(step.lane).centerline.length() - step.entry_s);
        if (end > horizon) continue;
        for (std::size_t succ : sc.successors(step.lane)) {
            if (seen[succ]) continue;
            seen[succ] = true;
            out.push_back({succ, 0.0, end, false});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Goal types

/// Cumulative signed heading change from the vehicle heading, along the route,
/// to the lane tangent at the goal; wrapped to (-pi, pi].
inline double heading_change(double vehicle_heading, const ReachableGoal& route, const Scenario& sc) {
    double total = 0.0;
    double current = vehicle_heading;
    auto turn_to = [&](double h) {
        total += wrap_angle(h - current);
        current = h;
    };
    for (std::size_t k = 0; k < route.path.size(); ++k) {
        const PathStep& step = route.path[k];
        const Polyline& line = sc.lane(step.lane).centerline;
        const double end_s = (k + 1 == route.path.size()) ? route.goal_s : line.length();
        std::size_t first = line.segment_at(step.entry_s);
        std::size_t last = line.segment_at(std::max(end_s, step.entry_s));
        for (std::size_t seg = first; seg <= last; ++seg) turn_to(line.segment_heading(seg));
    }
    return wrap_angle(total);
}

/// Quarter-plane partition of the heading change.
inline GoalType goal_type_from_heading_change(double delta) {
    constexpr double q = std::numbers::pi / 4.0;
    const double a = std::abs(delta);
    if (a < q) return GoalType::straight_on;
    if (delta >= q && delta < 3.0 * q) return GoalType::turn_left;
    if (delta <= -q && delta > -3.0 * q) return GoalType::turn_right;
    return GoalType::u_turn;
}

inline GoalType assign_goal_type(const AgentState& state, const ReachableGoal& route, const Scenario& sc) {
    return goal_type_from_heading_change(heading_change(state.heading, route, sc));
}

}  // namespace grit
