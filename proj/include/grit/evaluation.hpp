#pragma once

// Accuracy and normalised-entropy curves over the fraction of trajectory
// observed, plus per-vehicle inference timing.

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grit/dataset.hpp"
#include "grit/inference.hpp"
#include "grit/parallel.hpp"
#include "grit/scenario.hpp"
#include "grit/trajectory.hpp"

namespace grit {

/// Any goal predictor: maps an observation history to a posterior.
using Predictor = std::function<GoalPosterior(const History&)>;

inline Predictor grit_predictor(const Scenario& sc, const GoalModel& model) {
    return [&sc, &model](const History& h) { return infer(h, sc, model); };
}

inline Predictor no_dt_predictor(const Scenario& sc, const std::map<PairKey, double>& priors) {
    return [&sc, &priors](const History& h) { return infer_no_dt(h, sc, priors); };
}

/// Equal probability over the reachable pairs.
inline Predictor uniform_predictor(const Scenario& sc) {
    return [&sc](const History& h) {
        GoalPosterior out;
        for (const auto& r : reachable_goals(h.current(), sc)) {
            PosteriorEntry e;
            e.pair = {r.goal_id, assign_goal_type(h.current(), r, sc)};
            e.likelihood = 1.0;
            e.prior = 1.0;
            out.entries.push_back(std::move(e));
        }
        fill_posterior(out);
        return out;
    };
}

struct MeanStderr {
    double mean{0.0};
    double stderr_{0.0};
    std::size_t n{0};
};

/// Mean and standard error of the mean (sample standard deviation over sqrt n).
inline MeanStderr mean_stderr(const std::vector<double>& v) {
    MeanStderr r;
    r.n = v.size();
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return r;
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    return r;
}

struct FractionResult {
    double fraction{0.0};
    MeanStderr accuracy;
    MeanStderr entropy;
};

struct TimingSummary {
    MeanStderr total_us;  ///< per-vehicle mean time of one inference call
    double goal_generation_us{0.0};
    double feature_extraction_us{0.0};
    double likelihood_us{0.0};
    std::size_t calls{0};
};

struct EvalReport {
    std::string method;
    std::array<FractionResult, kSampleCount> fractions;
    TimingSummary timing;
    std::size_t vehicles{0};
};

/// One evaluated vehicle and its cutoffs at every fraction.
struct EvalVehicle {
    std::size_t episode;
    AgentId agent;
    std::string goal;
    std::array<std::size_t, kSampleCount> cutoffs;
};

inline std::vector<EvalVehicle> eval_vehicles(const std::vector<Episode>& episodes, const Scenario& sc,
                                              const VehicleFilter& filter = {}) {
    std::vector<EvalVehicle> out;
    for (const auto& v : labelled_vehicles(episodes, sc, filter)) {
        const auto& states = episodes[v.episode].trajectories.at(v.agent).states;
        const std::size_t trimmed = first_frame_in_goal(states, v.goal).value_or(states.size() - 1) + 1;
        EvalVehicle ev{v.episode, v.agent, v.goal.id, {}};
        for (int k = 0; k < kSampleCount; ++k) ev.cutoffs[static_cast<std::size_t>(k)] = fraction_index(trimmed, k);
        out.push_back(ev);
    }
    return out;
}

/// A tie for the top probability or an empty posterior counts as incorrect;
/// an empty posterior scores entropy 1.
inline EvalReport evaluate(const Predictor& predict, const std::vector<Episode>& episodes, const Scenario& sc,
                           const VehicleFilter& filter = {}, std::size_t threads = 1, std::string method = "grit") {
    const auto vehicles = eval_vehicles(episodes, sc, filter);
    if (vehicles.empty()) throw InputError("evaluation set contains no vehicle that reaches a goal");
    struct Row {
        std::array<double, kSampleCount> correct{}, entropy{};
        double time_us{0.0}, goal_us{0.0}, feat_us{0.0}, lik_us{0.0};
    };
    std::vector<Row> rows(vehicles.size());
    parallel_for(vehicles.size(), threads, [&](std::size_t i) {
        const EvalVehicle& v = vehicles[i];
        Row& r = rows[i];
        for (std::size_t k = 0; k < kSampleCount; ++k) {
            const GoalPosterior p = predict(History(episodes[v.episode], v.agent, v.cutoffs[k]));
            const PosteriorEntry* best = p.argmax();
            r.correct[k] = best && best->pair.goal == v.goal ? 1.0 : 0.0;
            r.entropy[k] = p.status == InferenceStatus::no_goal ? 1.0 : p.normalized_entropy;
            r.time_us += p.timing.total_us / kSampleCount;
            r.goal_us += p.timing.goal_generation_us / kSampleCount;
            r.feat_us += p.timing.feature_extraction_us / kSampleCount;
            r.lik_us += p.timing.likelihood_us / kSampleCount;
        }
    });
    EvalReport rep;
    rep.method = std::move(method);
    rep.vehicles = vehicles.size();
    for (std::size_t k = 0; k < kSampleCount; ++k) {
        std::vector<double> acc, ent;
        for (const auto& r : rows) {
            acc.push_back(r.correct[k]);
            ent.push_back(r.entropy[k]);
        }
        rep.fractions[k] = {static_cast<double>(k) / 10.0, mean_stderr(acc), mean_stderr(ent)};
    }
    std::vector<double> t;
    for (const auto& r : rows) {
        t.push_back(r.time_us);
        rep.timing.goal_generation_us += r.goal_us / static_cast<double>(rows.size());
        rep.timing.feature_extraction_us += r.feat_us / static_cast<double>(rows.size());
        rep.timing.likelihood_us += r.lik_us / static_cast<double>(rows.size());
    }
    rep.timing.total_us = mean_stderr(t);
    rep.timing.calls = rows.size() * kSampleCount;
    return rep;
}

inline EvalReport evaluate(const GoalModel& model, const std::vector<Episode>& episodes, const Scenario& sc,
                           const VehicleFilter& filter = {}, std::size_t threads = 1) {
    return evaluate(grit_predictor(sc, model), episodes, sc, filter, threads, "grit");
}

inline constexpr std::size_t kMinBenchmarkCalls = 30;

/// Single-threaded timing of the full inference path. One warm-up pass is
/// discarded; each vehicle's mean call time over `repetitions` passes is one
/// sample of the reported mean.
inline TimingSummary benchmark(const GoalModel& model, const std::vector<Episode>& episodes, const Scenario& sc,
                               int repetitions = 3, const VehicleFilter& filter = {}) {
    if (repetitions < 1) throw InputError("benchmark needs at least one repetition");
    const auto vehicles = eval_vehicles(episodes, sc, filter);
    if (vehicles.size() * kSampleCount < kMinBenchmarkCalls)
        throw InputError("benchmark needs at least " + std::to_string(kMinBenchmarkCalls) + " inference calls");
    for (const auto& v : vehicles)
        for (std::size_t c : v.cutoffs) (void)infer(History(episodes[v.episode], v.agent, c), sc, model);

    TimingSummary out;
    std::vector<double> per_vehicle;
    double goal = 0.0, feat = 0.0, lik = 0.0;
    for (const auto& v : vehicles) {
        double sum = 0.0;
        for (int rep = 0; rep < repetitions; ++rep) {
            for (std::size_t c : v.cutoffs) {
                const History h(episodes[v.episode], v.agent, c);
                const auto p = infer(h, sc, model);
                sum += p.timing.total_us;
                goal += p.timing.goal_generation_us;
                feat += p.timing.feature_extraction_us;
                lik += p.timing.likelihood_us;
                ++out.calls;
            }
        }
        per_vehicle.push_back(sum / static_cast<double>(repetitions * kSampleCount));
    }
    out.total_us = mean_stderr(per_vehicle);
    const double n = static_cast<double>(out.calls);
    out.goal_generation_us = goal / n;
    out.feature_extraction_us = feat / n;
    out.likelihood_us = lik / n;
    return out;
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json to_json(const TimingSummary& t) {
    return {{"mean_us", t.total_us.mean},
            {"stderr_us", t.total_us.stderr_},
            {"vehicles", t.total_us.n},
            {"calls", t.calls},
            {"breakdown_us",
             {{"goal_generation", t.goal_generation_us},
              {"feature_extraction", t.feature_extraction_us},
              {"likelihood", t.likelihood_us}}}};
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json fr = nlohmann::json::array();
    for (const auto& f : r.fractions)
        fr.push_back({{"fraction", f.fraction},
                      {"samples", f.accuracy.n},
                      {"accuracy", f.accuracy.mean},
                      {"accuracy_stderr", f.accuracy.stderr_},
                      {"entropy", f.entropy.mean},
                      {"entropy_stderr", f.entropy.stderr_}});
    return {{"method", r.method}, {"vehicles", r.vehicles}, {"fractions", fr}, {"timing", to_json(r.timing)}};
}

inline void write_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
    os << "method,fraction,samples,accuracy,accuracy_stderr,entropy,entropy_stderr\n";
    os << std::setprecision(10);
    for (const auto& r : reports)
        for (const auto& f : r.fractions)
            os << r.method << ',' << f.fraction << ',' << f.accuracy.n << ',' << f.accuracy.mean << ','
               << f.accuracy.stderr_ << ',' << f.entropy.mean << ',' << f.entropy.stderr_ << '\n';
}

/// Whitespace-separated columns for plotting; one file per method.
inline void write_gnuplot(std::ostream& os, const EvalReport& r) {
    os << "# " << r.method << "\n# fraction accuracy accuracy_stderr entropy entropy_stderr\n";
    os << std::setprecision(10);
    for (const auto& f : r.fractions)
        os << f.fraction << ' ' << f.accuracy.mean << ' ' << f.accuracy.stderr_ << ' ' << f.entropy.mean << ' '
           << f.entropy.stderr_ << '\n';
}

}  // namespace grit
