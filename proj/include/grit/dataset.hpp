#pragma once

// Per-(goal, goal type) labelled training sets built from recorded episodes.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grit/features.hpp"
#include "grit/scenario.hpp"
#include "grit/trajectory.hpp"
#include "grit/tree.hpp"

namespace grit {

struct LabeledSample {
    std::size_t episode{0};
    AgentId agent{0};
    std::size_t cutoff{0};  ///< index into the agent's trajectory
    double time{0.0};
    std::string goal;
    GoalType type{GoalType::straight_on};
    FeatureVector features;
    bool label{false};  ///< candidate goal equals the true goal
};

using Datasets = std::map<PairKey, std::vector<LabeledSample>>;

/// Restricts which vehicles are labelled; all agents still appear as context.
using VehicleFilter = std::function<bool(std::size_t episode, AgentId agent)>;

/// One query point: every reachable candidate for a vehicle at one sample time.
struct Candidate {
    PairKey pair;
    ReachableGoal route;
    FeatureVector features;
};

inline std::vector<Candidate> candidates_at(const History& h, const Scenario& sc, const FeatureMetadata& meta = {}) {
    std::vector<Candidate> out;
    const SharedFeatures shared = extract_shared_features(h, sc, meta);
    for (auto& route : reachable_goals(shared.lane, sc)) {
        const GoalType type = assign_goal_type(h.current(), route, sc);
        FeatureVector x = combine_features(shared, route, sc);
        out.push_back({PairKey{route.goal_id, type}, std::move(route), x});
    }
    return out;
}

/// Labelled vehicle: its true goal and the sampled cutoffs.
struct VehicleSamples {
    std::size_t episode;
    AgentId agent;
    GoalSpec goal;
    std::vector<std::size_t> cutoffs;
};

/// Vehicles that reach a goal, each with its sample cutoffs. Vehicles that
/// never reach a goal are dropped.
inline std::vector<VehicleSamples> labelled_vehicles(const std::vector<Episode>& episodes, const Scenario& sc,
                                                     const VehicleFilter& filter = {}) {
    std::vector<VehicleSamples> out;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        for (const auto& [id, traj] : episodes[e].trajectories) {
            if (filter && !filter(e, id)) continue;
            auto goal = ground_truth_goal(traj.states, sc);
            if (!goal) continue;
            out.push_back({e, id, *goal, sample_points(traj.states, *goal)});
        }
    }
    return out;
}

inline Datasets build_datasets(const std::vector<Episode>& episodes, const Scenario& sc,
                               const FeatureMetadata& meta = {}, const VehicleFilter& filter = {}) {
    Datasets out;
    for (const auto& v : labelled_vehicles(episodes, sc, filter)) {
        const Episode& ep = episodes[v.episode];
        for (std::size_t cutoff : v.cutoffs) {
            History h(ep, v.agent, cutoff);
            for (auto& c : candidates_at(h, sc, meta)) {
                LabeledSample s{v.episode, v.agent,    cutoff, h.current().time, c.pair.goal,
                                c.pair.type, c.features, c.pair.goal == v.goal.id};
                out[c.pair].push_back(std::move(s));
            }
        }
    }
    return out;
}

}  // namespace grit
