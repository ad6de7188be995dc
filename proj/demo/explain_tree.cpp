// Trains a model on a small synthetic T-junction and prints, for one vehicle
// halfway to its goal, the posterior and the rule path behind each likelihood.

#include <iostream>

#include "grit/grit.hpp"

int main(int argc, char** argv) {
    using namespace grit;
    const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 7;
    const auto data = generate_synthetic(RoadTemplate::t_junction, 100, seed);
    const std::vector<Episode> train(data.episodes.begin(), data.episodes.end() - 1);
    const GoalModel model = train_model(build_datasets(train, data.scenario), TrainConfig{});

    const Episode& test = data.episodes.back();
    const auto vehicles = eval_vehicles({test}, data.scenario);
    const EvalVehicle& v = vehicles.front();
    const History h(test, v.agent, v.cutoffs[3]);
    const GoalPosterior p = infer(h, data.scenario, model);

    std::cout << "vehicle " << v.agent << " (true goal " << v.goal << ") at t = " << h.current().time << " s\n";
    for (const auto& e : p.entries) {
        std::cout << "  " << to_string(e.pair) << "  P = " << e.probability << '\n';
        if (const DecisionTree* tree = model.tree_for(e.pair))
            std::cout << "    " << explain(*tree, traverse(*tree, e.features, model.metadata), to_string(e.pair))
                      << '\n';
    }
}
