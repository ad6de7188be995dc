#pragma once

// The synthetic T-junction fixture: 250 vehicles from seed 7, the first 200
// (eight episodes) for training and the last 50 (two episodes) for testing.

#include <string>
#include <vector>

#include "grit/grit.hpp"

namespace fixture {

inline constexpr std::uint64_t kSeed = 7;
inline constexpr std::size_t kVehicles = 250;
inline constexpr std::size_t kTrainEpisodes = 8;

struct TJunction {
    grit::SyntheticData data;
    std::vector<grit::Episode> train;
    std::vector<grit::Episode> test;
};

inline const TJunction& t_junction() {
    static const TJunction fx = [] {
        TJunction f;
        f.data = grit::generate_synthetic(grit::RoadTemplate::t_junction, kVehicles, kSeed);
        f.train.assign(f.data.episodes.begin(), f.data.episodes.begin() + kTrainEpisodes);
        f.test.assign(f.data.episodes.begin() + kTrainEpisodes, f.data.episodes.end());
        return f;
    }();
    return fx;
}

/// Model trained on the training episodes with the default grid search.
inline const grit::TrainingRun& trained() {
    static const grit::TrainingRun run = grit::train_pipeline(t_junction().train, t_junction().data.scenario,
                                                              grit::TrainConfig{});
    return run;
}

inline std::string data_path(const std::string& rel) { return std::string(GRIT_DATA_DIR) + "/" + rel; }

inline const std::vector<std::string>& fixture_propositions() {
    static const std::vector<std::string> names{
        "turn_lane_argmax.json",       "straight_lane_argmax.json",     "turn_lane_at_least.json",
        "near_goal_confident_far.json", "near_goal_confident_close.json",
    };
    return names;
}

}  // namespace fixture
