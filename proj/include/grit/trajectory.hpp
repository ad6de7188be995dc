#pragma once

// Trajectory recordings: CSV I/O, kinematics, ground-truth goals and the
// 11-point sampling grid.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "grit/common.hpp"
#include "grit/scenario.hpp"

namespace grit {

struct Trajectory {
    AgentId id{0};
    std::int64_t first_frame{0};  ///< frame number of states.front()
    std::vector<AgentState> states;

    std::int64_t last_frame() const { return first_frame + static_cast<std::int64_t>(states.size()) - 1; }
    bool has_frame(std::int64_t f) const { return f >= first_frame && f <= last_frame(); }
    const AgentState& at_frame(std::int64_t f) const { return states[static_cast<std::size_t>(f - first_frame)]; }
};

/// One recording: every agent sampled on a shared frame grid.
struct Episode {
    double frame_rate{25.0};
    std::map<AgentId, Trajectory> trajectories;

    const Trajectory* find(AgentId id) const {
        auto it = trajectories.find(id);
        return it == trajectories.end() ? nullptr : &it->second;
    }
};

inline constexpr double kFrameTolerance = 1e-6;

/// Checks per-agent ordering and the fixed frame spacing; throws InputError.
inline void validate_episode(const Episode& ep) {
    if (!(ep.frame_rate > 0.0)) throw InputError("frame rate must be positive");
    const double dt = 1.0 / ep.frame_rate;
    for (const auto& [id, traj] : ep.trajectories) {
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            const AgentState& s = traj.states[i];
            if (!s.finite()) throw InputError("agent " + std::to_string(id) + ": non-finite state");
            if (s.speed < 0.0) throw InputError("agent " + std::to_string(id) + ": negative speed");
            if (i == 0) continue;
            const double gap = s.time - traj.states[i - 1].time;
            if (!(gap > 0.0))
                throw InputError("agent " + std::to_string(id) + ": timestamps not strictly increasing at t=" +
                                 std::to_string(s.time));
            if (std::abs(gap - dt) > kFrameTolerance)
                throw InputError("agent " + std::to_string(id) + ": frame gap " + std::to_string(gap) +
                                 " s does not match frame rate at t=" + std::to_string(s.time));
        }
    }
}

// ---------------------------------------------------------------------------
// Kinematics

namespace detail {

inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
    const std::size_t half = window / 2;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(v.size() - 1, i + half);
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) sum += v[k];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

inline std::vector<double> finite_difference(const std::vector<double>& v, double dt) {
    const std::size_t n = v.size();
    std::vector<double> d(n);
    d[0] = (v[1] - v[0]) / dt;
    d[n - 1] = (v[n - 1] - v[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
    return d;
}

}  // namespace detail

inline constexpr std::size_t kKinematicsWindow = 5;

/// Fills speed and acceleration from positions: central differences (one-sided
/// at the ends), each smoothed by a 5-sample moving average.
inline void derive_kinematics(std::vector<AgentState>& states, double frame_rate) {
    const std::size_t n = states.size();
    if (n < 3) throw InputError("derive_kinematics needs at least 3 states, got " + std::to_string(n));
    const double dt = 1.0 / frame_rate;
    std::vector<double> speed(n);
    speed[0] = distance({states[1].x, states[1].y}, {states[0].x, states[0].y}) / dt;
    speed[n - 1] = distance({states[n - 1].x, states[n - 1].y}, {states[n - 2].x, states[n - 2].y}) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i)
        speed[i] = distance({states[i + 1].x, states[i + 1].y}, {states[i - 1].x, states[i - 1].y}) / (2.0 * dt);
    speed = detail::moving_average(speed, kKinematicsWindow);
    auto accel = detail::moving_average(detail::finite_difference(speed, dt), kKinematicsWindow);
    for (std::size_t i = 0; i < n; ++i) {
        states[i].speed = speed[i];
        states[i].acceleration = accel[i];
    }
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        out.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

inline Episode parse_trajectories(std::istream& in, double frame_rate, const std::string& source = "<stream>") {
    if (!(frame_rate > 0.0)) throw InputError("frame rate must be positive");
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw InputError(source + ": empty file, header row required");
    ++line_no;
    auto header = detail::split_csv(line);
    std::map<std::string, std::size_t, std::less<>> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);
    for (const char* required : {"time", "agent_id", "x", "y", "heading"})
        if (!col.count(required)) throw InputError(source + ": missing required column '" + required + "'");
    const bool has_speed = col.count("speed") > 0;
    const bool has_accel = col.count("acceleration") > 0;

    Episode ep;
    ep.frame_rate = frame_rate;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv(line);
        if (fields.size() != header.size())
            throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        auto num = [&](const char* name) {
            double v = 0.0;
            if (!detail::parse_number(fields[col.find(name)->second], v) || !std::isfinite(v))
                throw InputError(source + ":" + std::to_string(line_no) + ": malformed value in column '" + name +
                                 "'");
            return v;
        };
        AgentId id = 0;
        if (!detail::parse_number(fields[col.find("agent_id")->second], id))
            throw InputError(source + ":" + std::to_string(line_no) + ": malformed agent_id");
        AgentState st;
        st.time = num("time");
        st.x = num("x");
        st.y = num("y");
        st.heading = wrap_angle(num("heading"));
        if (has_speed) st.speed = num("speed");
        if (has_accel) st.acceleration = num("acceleration");
        if (st.speed < 0.0) throw InputError(source + ":" + std::to_string(line_no) + ": negative speed");

        auto& traj = ep.trajectories[id];
        traj.id = id;
        if (!traj.states.empty() && !(st.time > traj.states.back().time))
            throw InputError(source + ":" + std::to_string(line_no) + ": non-monotonic timestamp for agent " +
                             std::to_string(id));
        if (traj.states.empty()) traj.first_frame = std::llround(st.time * frame_rate);
        traj.states.push_back(st);
    }
    for (auto& [id, traj] : ep.trajectories) {
        if (!has_speed || !has_accel) {
            if (traj.states.size() < 3)
                throw InputError(source + ": agent " + std::to_string(id) +
                                 " has fewer than 3 rows; cannot derive speed/acceleration");
            auto derived = traj.states;
            derive_kinematics(derived, frame_rate);
            for (std::size_t i = 0; i < derived.size(); ++i) {
                if (!has_speed) traj.states[i].speed = derived[i].speed;
                if (!has_accel) traj.states[i].acceleration = derived[i].acceleration;
            }
        }
    }
    validate_episode(ep);
    return ep;
}

inline Episode load_trajectories(const std::string& path, double frame_rate) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trajectory file '" + path + "'");
    return parse_trajectories(in, frame_rate, path);
}

inline void write_trajectories(std::ostream& out, const Episode& ep) {
    out << "time,agent_id,x,y,heading,speed,acceleration\n";
    // Rows are emitted frame-major, as a recording would be.
    std::vector<std::pair<std::int64_t, const Trajectory*>> order;
    std::int64_t lo = INT64_MAX, hi = INT64_MIN;
    for (const auto& [id, t] : ep.trajectories) {
        if (t.states.empty()) continue;
        lo = std::min(lo, t.first_frame);
        hi = std::max(hi, t.last_frame());
    }
    out << std::setprecision(15);
    for (std::int64_t f = lo; f <= hi && lo <= hi; ++f) {
        for (const auto& [id, t] : ep.trajectories) {
            if (t.states.empty() || !t.has_frame(f)) continue;
            const AgentState& s = t.at_frame(f);
            out << s.time << ',' << id << ',' << s.x << ',' << s.y << ',' << s.heading << ',' << s.speed << ','
                << s.acceleration << '\n';
        }
    }
}

inline void save_trajectories(const Episode& ep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write trajectory file '" + path + "'");
    write_trajectories(out, ep);
}

// ---------------------------------------------------------------------------
// Ground truth and sampling

/// Index of the first state inside the goal's radius.
inline std::optional<std::size_t> first_frame_in_goal(const std::vector<AgentState>& states, const GoalSpec& goal) {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (distance({states[i].x, states[i].y}, goal.location) <= goal.radius) return i;
    return std::nullopt;
}

/// First goal (in time order) whose radius the trajectory enters. Goals entered
/// at the same frame resolve to the closest, then the smallest id.
inline std::optional<GoalSpec> ground_truth_goal(const std::vector<AgentState>& states, const Scenario& sc) {
    for (const auto& st : states) {
        const GoalSpec* hit = nullptr;
        double hit_d = 0.0;
        for (const auto& g : sc.goals()) {
            const double d = distance({st.x, st.y}, g.location);
            if (d > g.radius) continue;
            if (!hit || d < hit_d || (d == hit_d && g.id < hit->id)) {
                hit = &g;
                hit_d = d;
            }
        }
        if (hit) return *hit;
    }
    return std::nullopt;
}

inline constexpr int kSampleCount = 11;

/// Frame index for fraction k/10 of a trimmed trajectory with `n` frames,
/// rounded to the nearest frame with ties toward the earlier one.
inline std::size_t fraction_index(std::size_t n, int k) {
    if (n == 0) return 0;
    const std::size_t num = static_cast<std::size_t>(k) * (n - 1);
    const std::size_t q = num / 10;
    const std::size_t r = num % 10;
    return r > 5 ? q + 1 : q;
}

/// Cutoff indices at fractions 0.0, 0.1, ..., 1.0 of the trajectory trimmed at
/// its first frame inside the goal radius; strictly increasing, 1 to 11 entries.
inline std::vector<std::size_t> sample_points(const std::vector<AgentState>& states, const GoalSpec& goal) {
    if (states.empty()) return {};
    const std::size_t trimmed = first_frame_in_goal(states, goal).value_or(states.size() - 1) + 1;
    std::vector<std::size_t> idx;
    for (int k = 0; k < kSampleCount; ++k) {
        const std::size_t i = fraction_index(trimmed, k);
        if (idx.empty() || idx.back() != i) idx.push_back(i);
    }
    return idx;
}

// ---------------------------------------------------------------------------
// History view

/// Observation history up to and including one frame of one vehicle. Other
/// agents are visible from the subject's first observed frame onward.
class History {
public:
    History(const Episode& ep, AgentId agent, std::size_t cutoff) : episode_(&ep), agent_(agent), cutoff_(cutoff) {
        traj_ = ep.find(agent);
        if (!traj_) throw InputError("agent " + std::to_string(agent) + " not present in history");
        if (cutoff >= traj_->states.size())
            throw InputError("frame " + std::to_string(cutoff) + " out of range for agent " + std::to_string(agent));
    }

    const Episode& episode() const { return *episode_; }
    AgentId agent() const { return agent_; }
    std::size_t cutoff() const { return cutoff_; }
    const Trajectory& trajectory() const { return *traj_; }
    const AgentState& current() const { return traj_->states[cutoff_]; }
    std::int64_t current_frame() const { return traj_->first_frame + static_cast<std::int64_t>(cutoff_); }

    template <class Fn>
    void for_each_other_agent(Fn&& fn) const {
        const std::int64_t f = current_frame();
        for (const auto& [id, t] : episode_->trajectories) {
            if (id == agent_ || t.states.empty() || !t.has_frame(f)) continue;
            fn(id, t.at_frame(f));
        }
    }

private:
    const Episode* episode_;
    AgentId agent_;
    std::size_t cutoff_;
    const Trajectory* traj_{nullptr};
};

}  // namespace grit
