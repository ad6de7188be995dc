#pragma once

// Bayesian posterior over reachable (goal, goal type) pairs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "grit/dataset.hpp"
#include "grit/features.hpp"
#include "grit/scenario.hpp"
#include "grit/trajectory.hpp"
#include "grit/tree.hpp"

namespace grit {

/// p_i = L_i P_i / sum_j L_j P_j, with priors renormalised over the given set.
/// Zero prior mass falls back to uniform priors; zero total mass to a uniform
/// posterior.
inline std::vector<double> posterior(std::span<const double> likelihoods, std::span<const double> priors) {
    const std::size_t n = likelihoods.size();
    if (priors.size() != n) throw std::invalid_argument("posterior: likelihood/prior size mismatch");
    std::vector<double> out(n, n ? 1.0 / static_cast<double>(n) : 0.0);
    if (n == 0) return out;
    double prior_mass = 0.0;
    for (double p : priors) prior_mass += p;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = prior_mass > 0.0 ? priors[i] / prior_mass : 1.0 / static_cast<double>(n);
        out[i] = likelihoods[i] * p;
        total += out[i];
    }
    if (!(total > 0.0)) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(n));
        return out;
    }
    for (double& v : out) v /= total;
    return out;
}

/// Shannon entropy divided by the entropy of the uniform distribution over the
/// same support; 0 for a single entry.
inline double normalized_entropy(std::span<const double> p) {
    if (p.size() < 2) return 0.0;
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

enum class InferenceStatus { ok, no_goal };

struct PosteriorEntry {
    PairKey pair;
    double likelihood{kRootLikelihood};
    double prior{0.0};  ///< renormalised over the reachable pairs
    double probability{0.0};
    double path_length{0.0};
    FeatureVector features;
    bool trained{false};
};

struct InferenceTiming {
    double goal_generation_us{0.0};
    double feature_extraction_us{0.0};
    double likelihood_us{0.0};  ///< tree traversal plus posterior
    double total_us{0.0};
};

struct GoalPosterior {
    InferenceStatus status{InferenceStatus::no_goal};
    std::vector<PosteriorEntry> entries;
    double normalized_entropy{0.0};
    InferenceTiming timing;

    /// Unique most probable entry; nullptr when empty or tied.
    const PosteriorEntry* argmax() const {
        const PosteriorEntry* best = nullptr;
        bool tie = false;
        for (const auto& e : entries) {
            if (!best || e.probability > best->probability) {
                best = &e;
                tie = false;
            } else if (e.probability == best->probability) {
                tie = true;
            }
        }
        return tie ? nullptr : best;
    }

    double probability_of_goal(const std::string& goal) const {
        double p = 0.0;
        for (const auto& e : entries)
            if (e.pair.goal == goal) p += e.probability;
        return p;
    }
};

/// Prior used for a pair; pairs unseen in training get the smallest model prior.
inline double prior_for(const std::map<PairKey, double>& priors, const PairKey& key) {
    auto it = priors.find(key);
    if (it != priors.end()) return it->second;
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& [k, p] : priors) smallest = std::min(smallest, p);
    return std::isfinite(smallest) ? smallest : 1.0;
}

/// Likelihood of one candidate; untrained pairs return the root value 0.5.
inline double candidate_likelihood(const GoalModel& model, const PairKey& key, const FeatureVector& x) {
    const DecisionTree* tree = model.tree_for(key);
    if (!tree) return kRootLikelihood;
    return tree->nodes[find_leaf(*tree, impute(x, model.metadata))].likelihood;
}

inline void fill_posterior(GoalPosterior& out) {
    std::vector<double> l, p;
    for (const auto& e : out.entries) {
        l.push_back(e.likelihood);
        p.push_back(e.prior);
    }
    double mass = 0.0;
    for (double v : p) mass += v;
    const auto post = posterior(l, p);
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        out.entries[i].prior = mass > 0.0 ? p[i] / mass : 1.0 / static_cast<double>(p.size());
        out.entries[i].probability = post[i];
    }
    out.normalized_entropy = normalized_entropy(post);
    out.status = out.entries.empty() ? InferenceStatus::no_goal : InferenceStatus::ok;
}

/// Posterior from already-extracted candidates.
inline GoalPosterior posterior_from_candidates(const std::vector<Candidate>& candidates, const GoalModel& model) {
    GoalPosterior out;
    for (const auto& c : candidates) {
        PosteriorEntry e;
        e.pair = c.pair;
        e.trained = model.tree_for(c.pair) != nullptr;
        e.likelihood = candidate_likelihood(model, c.pair, c.features);
        e.prior = prior_for(model.priors, c.pair);
        e.path_length = c.route.length;
        e.features = c.features;
        out.entries.push_back(std::move(e));
    }
    fill_posterior(out);
    return out;
}

inline GoalPosterior infer(const History& h, const Scenario& sc, const GoalModel& model) {
    using clock = std::chrono::steady_clock;
    auto us = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double, std::micro>(b - a).count();
    };
    GoalPosterior out;
    const auto t0 = clock::now();
    const LanePosition lane = nearest_lane(h.current(), sc);
    std::vector<ReachableGoal> routes = reachable_goals(lane, sc);
    std::vector<GoalType> types;
    types.reserve(routes.size());
    for (const auto& r : routes) types.push_back(assign_goal_type(h.current(), r, sc));
    const auto t1 = clock::now();

    std::vector<FeatureVector> features;
    if (!routes.empty()) {
        SharedFeatures shared;
        shared.lane = lane;
        shared.speed = h.current().speed;
        shared.acceleration = h.current().acceleration;
        shared.angle_in_lane = wrap_angle_half_open(h.current().heading - lane.heading);
        shared.front = vehicle_in_front(h, sc, lane, model.metadata.distance_cap);
        shared.oncoming = oncoming_vehicle(h, sc, lane, model.metadata.distance_cap);
        for (const auto& r : routes) features.push_back(combine_features(shared, r, sc));
    }
    const auto t2 = clock::now();

    for (std::size_t i = 0; i < routes.size(); ++i) {
        PosteriorEntry e;
        e.pair = {routes[i].goal_id, types[i]};
        e.trained = model.tree_for(e.pair) != nullptr;
        e.likelihood = candidate_likelihood(model, e.pair, features[i]);
        e.prior = prior_for(model.priors, e.pair);
        e.path_length = routes[i].length;
        e.features = features[i];
        out.entries.push_back(std::move(e));
    }
    fill_posterior(out);
    const auto t3 = clock::now();
    out.timing = {us(t0, t1), us(t1, t2), us(t2, t3), us(t0, t3)};
    return out;
}

/// Ablation without trees: priors restricted to the reachable pairs and renormalised.
inline GoalPosterior infer_no_dt(const History& h, const Scenario& sc, const std::map<PairKey, double>& priors) {
    GoalPosterior out;
    for (const auto& r : reachable_goals(h.current(), sc)) {
        PosteriorEntry e;
        e.pair = {r.goal_id, assign_goal_type(h.current(), r, sc)};
        e.likelihood = 1.0;
        e.prior = prior_for(priors, e.pair);
        e.path_length = r.length;
        out.entries.push_back(std::move(e));
    }
    fill_posterior(out);
    return out;
}

inline nlohmann::json to_json(const GoalPosterior& p, bool with_timing = false) {
    nlohmann::json goals = nlohmann::json::array();
    for (const auto& e : p.entries) {
        goals.push_back({{"goal", e.pair.goal},
                         {"type", to_string(e.pair.type)},
                         {"likelihood", e.likelihood},
                         {"prior", e.prior},
                         {"probability", e.probability},
                         {"trained", e.trained},
                         {"features", to_json(e.features)}});
    }
    nlohmann::json out{{"status", p.status == InferenceStatus::ok ? "ok" : "no_goal"},
                       {"goals", goals},
                       {"normalized_entropy", p.normalized_entropy}};
    if (with_timing) out["inference_time_us"] = p.timing.total_us;
    return out;
}

}  // namespace grit
