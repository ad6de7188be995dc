#pragma once

// Synthetic road layouts and seeded traffic: vehicles sample a goal, follow
// their lane route with a pure-pursuit controller and a trapezoidal speed
// profile, and are recorded with Gaussian position and heading noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "grit/common.hpp"
#include "grit/geometry.hpp"
#include "grit/scenario.hpp"
#include "grit/trajectory.hpp"

namespace grit {

enum class RoadTemplate { t_junction, crossroad };

inline RoadTemplate road_template_from_string(std::string_view s) {
    if (s == "t-junction" || s == "t_junction") return RoadTemplate::t_junction;
    if (s == "crossroad") return RoadTemplate::crossroad;
    throw InputError("unknown template '" + std::string(s) + "' (expected t-junction or crossroad)");
}

namespace detail {

inline std::vector<Point> arc(Point centre, double radius, double from, double to, int segments) {
    std::vector<Point> pts;
    for (int i = 0; i <= segments; ++i) {
        const double a = from + (to - from) * i / segments;
        pts.push_back({centre.x + radius * std::cos(a), centre.y + radius * std::sin(a)});
    }
    return pts;
}

inline Point rotate(Point p, double a) {
    return {p.x * std::cos(a) - p.y * std::sin(a), p.x * std::sin(a) + p.y * std::cos(a)};
}

inline std::vector<Point> cubic_bezier(Point p0, Point p1, Point p2, Point p3, int segments) {
    std::vector<Point> pts;
    for (int i = 0; i <= segments; ++i) {
        const double t = static_cast<double>(i) / segments, u = 1.0 - t;
        pts.push_back(p0 * (u * u * u) + p1 * (3 * u * u * t) + p2 * (3 * u * t * t) + p3 * (t * t * t));
    }
    return pts;
}

}  // namespace detail

/// Three-arm junction, right-hand traffic. Eastbound traffic has a straight
/// lane and a left-turn pocket; westbound traffic passes straight through.
inline Scenario make_t_junction() {
    constexpr double half = 1.75, outer = 5.25, edge = 8.0, far = 80.0;
    std::vector<Lane> lanes;
    lanes.push_back({"WS", Polyline({{-far, -outer}, {-edge, -outer}}), {"ES"}, AdjacentLane{"WL", true}, {}, false});
    lanes.push_back({"WL", Polyline({{-far, -half}, {-edge, -half}}), {"JL"}, AdjacentLane{"EW", false},
                     AdjacentLane{"WS", true}, false});
    lanes.push_back({"ES", Polyline({{-edge, -outer}, {far, -outer}}), {}, {}, {}, false});
    lanes.push_back({"JL", Polyline(detail::arc({-edge, edge}, edge + half, -std::numbers::pi / 2, 0.0, 16)),
                     {"N_out"}, {}, {}, true});
    lanes.push_back({"N_out", Polyline({{half, edge}, {half, far}}), {}, {}, {}, false});
    lanes.push_back({"EW", Polyline({{far, half}, {-far, half}}), {}, {}, {}, false});
    std::vector<GoalSpec> goals{{"G0", {-75.0, half}, 1.5}, {"G1", {75.0, -outer}, 1.5}, {"G2", {half, 75.0}, 1.5}};
    return Scenario(std::move(lanes), std::move(goals), {{"JL", "EW"}});
}

/// Four-arm crossroad with one lane per direction on each arm and a
/// connector for every turn except U-turns; crossing connectors conflict.
inline Scenario make_crossroad() {
    constexpr double half = 1.75, edge = 8.0, far = 80.0, goal_at = 75.0;
    const std::array<std::string, 4> arm{"W", "S", "E", "N"};
    std::vector<Lane> lanes;
    std::vector<GoalSpec> goals;
    std::array<std::pair<Point, Point>, 4> in_end, out_start;  // point and unit direction
    for (int a = 0; a < 4; ++a) {
        const double rot = a * std::numbers::pi / 2;  // W arm rotated counter-clockwise
        auto R = [&](Point p) { return detail::rotate(p, rot); };
        const Point in0 = R({-far, -half}), in1 = R({-edge, -half});
        const Point out0 = R({-edge, half}), out1 = R({-far, half});
        Lane in{arm[a] + "_in", Polyline({in0, in1}), {}, {}, {}, false};
        for (int b = 1; b < 4; ++b) in.successors.push_back("J_" + arm[a] + arm[(a + b) % 4]);
        lanes.push_back(std::move(in));
        lanes.push_back({arm[a] + "_out", Polyline({out0, out1}), {}, {}, {}, false});
        goals.push_back({"G_" + arm[a], R({-goal_at, half}), 1.5});
        in_end[a] = {in1, (in1 - in0) * (1.0 / distance(in0, in1))};
        out_start[a] = {out0, (out1 - out0) * (1.0 / distance(out0, out1))};
    }
    std::vector<std::string> connectors;
    for (int a = 0; a < 4; ++a) {
        for (int b = 1; b < 4; ++b) {
            const int to = (a + b) % 4;
            const auto [p0, d0] = in_end[a];
            const auto [p3, d3] = out_start[to];
            const double k = 0.55 * distance(p0, p3);
            const std::string id = "J_" + arm[a] + arm[to];
            lanes.push_back({id, Polyline(detail::cubic_bezier(p0, p0 + d0 * k, p3 - d3 * k, p3, 16)),
                             {arm[to] + "_out"}, {}, {}, true});
            connectors.push_back(id);
        }
    }
    std::map<std::string, const Lane*> by_id;
    for (const auto& l : lanes) by_id[l.id] = &l;
    std::vector<std::pair<std::string, std::string>> conflicts;
    for (std::size_t i = 0; i < connectors.size(); ++i) {
        for (std::size_t j = i + 1; j < connectors.size(); ++j) {
            const Lane& a = *by_id[connectors[i]];
            const Lane& b = *by_id[connectors[j]];
            if (connectors[i][2] == connectors[j][2] || connectors[i][3] == connectors[j][3]) continue;
            if (a.centerline.first_intersection(b.centerline)) conflicts.emplace_back(a.id, b.id);
        }
    }
    return Scenario(std::move(lanes), std::move(goals), std::move(conflicts));
}

inline Scenario make_scenario(RoadTemplate t) {
    return t == RoadTemplate::t_junction ? make_t_junction() : make_crossroad();
}

/// Lanes where traffic enters the scene.
inline std::vector<std::string> entry_lanes(RoadTemplate t) {
    if (t == RoadTemplate::t_junction) return {"WS", "EW"};
    return {"W_in", "S_in", "E_in", "N_in"};
}

inline std::map<std::string, double> default_goal_prior(RoadTemplate t) {
    if (t == RoadTemplate::t_junction) return {{"G0", 0.2}, {"G1", 0.5}, {"G2", 0.3}};
    return {{"G_W", 0.25}, {"G_S", 0.25}, {"G_E", 0.25}, {"G_N", 0.25}};
}

struct SyntheticConfig {
    std::map<std::string, double> goal_prior;  ///< empty selects the template default
    std::size_t vehicles_per_episode{25};
    double frame_rate{25.0};
    int substeps{4};
    double position_noise{0.1};
    double heading_noise{0.02};
    double cruise_min{9.0}, cruise_max{12.0};
    double turn_min{4.0}, turn_max{6.0};
    double decel_min{1.5}, decel_max{2.5};
    double spawn_gap_min{2.0}, spawn_gap_max{4.0};
    double spawn_offset_max{30.0};  ///< vehicles enter up to this far along their entry lane
    double lane_change_min{20.0}, lane_change_max{45.0};
    double lane_change_length{15.0};
    int max_attempts{50};
};

struct SyntheticData {
    Scenario scenario;
    std::vector<Episode> episodes;
    std::vector<std::pair<AgentId, std::string>> intended_goals;
};

namespace detail {

/// Reference path along a route plus the arclength range spent inside junctions.
struct ReferencePath {
    Polyline line;
    double junction_from{-1.0};
    double junction_to{-1.0};
    double goal_s{0.0};
};

inline void append_point(std::vector<Point>& pts, Point p) {
    if (pts.empty() || distance(pts.back(), p) > 1e-6) pts.push_back(p);
}

inline void append_lane(std::vector<Point>& pts, const Polyline& c, double from, double to) {
    append_point(pts, c.point_at(from));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double s = c.arclength_at_vertex(i);
        if (s > from && s < to) append_point(pts, c.points()[i]);
    }
    append_point(pts, c.point_at(to));
}

inline double path_length(const std::vector<Point>& pts) {
    double L = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) L += distance(pts[i - 1], pts[i]);
    return L;
}

template <class Rng>
ReferencePath reference_path(const Scenario& sc, const ReachableGoal& route, const SyntheticConfig& cfg, Rng& rng) {
    std::vector<Point> pts;
    ReferencePath ref{Polyline({{0, 0}, {1, 0}})};
    double start_s = route.path.front().entry_s;
    for (std::size_t k = 0; k < route.path.size(); ++k) {
        const Lane& lane = sc.lane(route.path[k].lane);
        const Polyline& c = lane.centerline;
        double end_s = c.length();
        const bool change_next = k + 1 < route.path.size() && route.path[k + 1].via_lane_change;
        if (change_next) {
            std::uniform_real_distribution<double> d(cfg.lane_change_min, cfg.lane_change_max);
            end_s = std::clamp(c.length() - d(rng), start_s, std::max(start_s, c.length() - cfg.lane_change_length));
        }
        const double before = path_length(pts);
        append_lane(pts, c, start_s, end_s);
        if (lane.in_junction) {
            if (ref.junction_from < 0) ref.junction_from = before;
            ref.junction_to = path_length(pts);
        }
        if (!change_next) {
            start_s = 0.0;
            continue;
        }
        const Polyline& target = sc.lane(route.path[k + 1].lane).centerline;
        const double blend = std::min(cfg.lane_change_length, c.length() - end_s);
        Point last = c.point_at(end_s);
        for (int i = 1; i <= 15; ++i) {
            const double t = i / 15.0;
            const double w = t * t * (3.0 - 2.0 * t);
            const Point src = c.point_at(end_s + blend * t);
            const Point dst = target.point_at(target.project(src).s);
            last = src * (1.0 - w) + dst * w;
            append_point(pts, last);
        }
        start_s = target.project(last).s;
    }
    ref.line = Polyline(pts);
    ref.goal_s = ref.line.project(sc.goals()[route.goal].location).s;
    return ref;
}

}  // namespace detail

/// Generates `vehicles` vehicles split into episodes; deterministic in the seed.
inline SyntheticData generate_synthetic(RoadTemplate tmpl, std::size_t vehicles, std::uint64_t seed,
                                        SyntheticConfig cfg = {}) {
    if (vehicles == 0) throw InputError("vehicle count must be at least 1");
    if (cfg.vehicles_per_episode == 0) throw InputError("vehicles per episode must be at least 1");
    SyntheticData out{make_scenario(tmpl), {}, {}};
    const Scenario& sc = out.scenario;
    if (cfg.goal_prior.empty()) cfg.goal_prior = default_goal_prior(tmpl);

    std::vector<std::size_t> goal_idx;
    std::vector<double> weights;
    for (const auto& [id, w] : cfg.goal_prior) {
        const auto g = sc.goal_index(id);
        if (!g) throw InputError("goal prior names unknown goal '" + id + "'");
        if (!(w >= 0.0)) throw InputError("goal prior weights must be non-negative");
        goal_idx.push_back(*g);
        weights.push_back(w);
    }

    // Entry lanes from which each goal is reachable.
    std::map<std::size_t, std::vector<std::size_t>> entries_for;
    for (const auto& entry : entry_lanes(tmpl)) {
        const auto li = *sc.lane_index(entry);
        LanePosition start{li, 0.0, 0.0, sc.lane(li).centerline.heading_at(0.0)};
        for (const auto& r : reachable_goals(start, sc)) entries_for[r.goal].push_back(li);
    }
    for (std::size_t g : goal_idx)
        if (entries_for[g].empty()) throw InputError("goal '" + sc.goals()[g].id + "' is unreachable from every entry");

    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick_goal(weights.begin(), weights.end());
    auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    std::normal_distribution<double> pos_noise(0.0, cfg.position_noise), head_noise(0.0, cfg.heading_noise);

    const double dt = 1.0 / (cfg.frame_rate * cfg.substeps);
    AgentId next_id = 1;
    for (std::size_t done = 0; done < vehicles;) {
        Episode ep;
        ep.frame_rate = cfg.frame_rate;
        double spawn_time = 0.0;
        const std::size_t count = std::min(cfg.vehicles_per_episode, vehicles - done);
        for (std::size_t v = 0; v < count; ++v, ++done) {
            const std::size_t goal = goal_idx[pick_goal(rng)];
            const auto& options = entries_for[goal];
            const std::int64_t first_frame = std::llround(spawn_time * cfg.frame_rate);
            std::optional<Trajectory> accepted;
            for (int attempt = 0; attempt < cfg.max_attempts && !accepted; ++attempt) {
                const std::size_t entry = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
                const Polyline& entry_line = sc.lane(entry).centerline;
                const double s0 = uniform(0.0, std::min(cfg.spawn_offset_max, entry_line.length() / 2));
                std::optional<ReachableGoal> found;
                for (auto& r : reachable_goals(LanePosition{entry, s0, 0.0, entry_line.heading_at(s0)}, sc))
                    if (r.goal == goal) found = std::move(r);
                if (!found) continue;
                const ReachableGoal& route = *found;
                const auto ref = detail::reference_path(sc, route, cfg, rng);
                const double cruise = uniform(cfg.cruise_min, cfg.cruise_max);
                const double slow = uniform(cfg.turn_min, cfg.turn_max);
                const double decel = uniform(cfg.decel_min, cfg.decel_max);
                const Point p0 = ref.line.point_at(0.0);
                AgentState probe{0.0, p0.x, p0.y, ref.line.heading_at(0.0), cruise, 0.0};
                const bool turning = ref.junction_from >= 0.0 && assign_goal_type(probe, route, sc) != GoalType::straight_on;

                auto target_speed = [&](double s) {
                    if (!turning) return cruise;
                    if (s < ref.junction_from)
                        return std::min(cruise, std::sqrt(slow * slow + 2.0 * decel * (ref.junction_from - s)));
                    if (s <= ref.junction_to) return slow;
                    return std::min(cruise, std::sqrt(slow * slow + 2.0 * decel * (s - ref.junction_to)));
                };

                Trajectory traj{next_id, first_frame, {}};
                double x = p0.x, y = p0.y, th = ref.line.heading_at(0.0);
                double v = target_speed(0.0), s = 0.0, prev_v = v;
                const double stop_s = std::min(ref.goal_s + 3.0, ref.line.length() - 0.5);
                for (std::int64_t frame = 0; s < stop_s && frame < 100000; ++frame) {
                    AgentState st{static_cast<double>(first_frame + frame) / cfg.frame_rate,
                                  x + pos_noise(rng),
                                  y + pos_noise(rng),
                                  wrap_angle(th + head_noise(rng)),
                                  v,
                                  (v - prev_v) * cfg.frame_rate};
                    traj.states.push_back(st);
                    prev_v = v;
                    for (int k = 0; k < cfg.substeps; ++k) {
                        s = ref.line.project({x, y}).s;
                        const double look = std::max(3.0, 0.6 * v);
                        const Point target = ref.line.point_at(std::min(s + look, ref.line.length()));
                        const double alpha = wrap_angle(std::atan2(target.y - y, target.x - x) - th);
                        const double curvature = 2.0 * std::sin(alpha) / look;
                        v = target_speed(s);
                        th = wrap_angle(th + v * curvature * dt);
                        x += v * std::cos(th) * dt;
                        y += v * std::sin(th) * dt;
                    }
                    s = ref.line.project({x, y}).s;
                }
                if (traj.states.size() < 3) continue;
                const auto reached = ground_truth_goal(traj.states, sc);
                const auto first = reached ? first_frame_in_goal(traj.states, *reached) : std::nullopt;
                if (reached && reached->id == sc.goals()[goal].id && first && *first > 0) accepted = std::move(traj);
            }
            if (!accepted) throw std::runtime_error("synthetic vehicle failed to reach its goal");
            out.intended_goals.emplace_back(next_id, sc.goals()[goal].id);
            ep.trajectories.emplace(next_id, std::move(*accepted));
            ++next_id;
            spawn_time += uniform(cfg.spawn_gap_min, cfg.spawn_gap_max);
        }
        out.episodes.push_back(std::move(ep));
    }
    return out;
}

}  // namespace grit
