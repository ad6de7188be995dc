// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "fixture.hpp"

using namespace grit;

namespace {

constexpr double kLikelihoodTol = 1e-12;
constexpr double kProductTol = 1e-9;
constexpr double kPosteriorTol = 1e-9;
constexpr int kRandomTuples = 1000;
constexpr int kInferenceCalls = 10000;
constexpr int kVerifierSamples = 100000;
constexpr double kGridStep = 0.25;
constexpr double kVerifierBudgetSeconds = 60.0;
constexpr double kAccuracyGain = 0.15;
constexpr double kEntropyDrop = 0.10;
constexpr double kTimingBudgetUs = 10000.0;
constexpr int kMaxDepth = 7;
constexpr double kGoalRadius = 1.5;

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << what << " (" << detail << ")" << std::endl;
    if (!ok) ++failures;
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

// ---------------------------------------------------------------------------

double direct_likelihood(double ng, double no, double tg, double to, double alpha) {
    ng += alpha;
    no += alpha;
    tg += alpha;
    to += alpha;
    const double wg = (tg + to) / tg, wo = (tg + to) / to;
    return wg * ng / (wg * ng + wo * no);
}

void criterion1() {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> total(1, 1000);
    std::uniform_real_distribution<double> alpha(0.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < kRandomTuples; ++i) {
        const double tg = total(rng), to = total(rng);
        const double ng = std::uniform_int_distribution<int>(0, static_cast<int>(tg))(rng);
        const double no = std::uniform_int_distribution<int>(0, static_cast<int>(to))(rng);
        const double a = i % 4 == 0 ? 0.0 : alpha(rng);
        if (ng + no + 2 * a == 0.0) {
            --i;
            continue;
        }
        worst = std::max(worst, std::abs(*node_likelihood(ng, no, tg, to, a) - direct_likelihood(ng, no, tg, to, a)));
    }
    const double hand = *node_likelihood(9, 5, 90, 10, 0.0);
    report(1, worst <= kLikelihoodTol && std::abs(hand - 1.0 / 6.0) <= 1e-15, "likelihood oracle equivalence",
           "max |diff| " + fmt(worst) + " over " + std::to_string(kRandomTuples) + " tuples, 90/10/9/5 -> " +
               fmt(hand, 17));
}

// ---------------------------------------------------------------------------

void criterion2(const GoalModel& m) {
    bool roots = true;
    double worst = 0.0;
    std::size_t leaves = 0;
    for (const auto& [key, tree] : m.trees) {
        roots = roots && tree.nodes[0].likelihood == 0.5;
        std::function<void(std::size_t, double)> walk = [&](std::size_t i, double product) {
            const TreeNode& n = tree.nodes[i];
            if (n.is_leaf()) {
                worst = std::max(worst, std::abs(product - n.likelihood));
                ++leaves;
                return;
            }
            walk(static_cast<std::size_t>(n.true_child), product * n.true_weight);
            walk(static_cast<std::size_t>(n.false_child), product * n.false_weight);
        };
        walk(0, 0.5);
    }
    report(2, roots && worst <= kProductTol, "root 0.5 and weight products",
           std::to_string(m.trees.size()) + " trees, " + std::to_string(leaves) + " leaves, max |diff| " + fmt(worst));
}

// ---------------------------------------------------------------------------

void criterion3(const GoalModel& m) {
    const auto& fx = fixture::t_junction();
    const Scenario& sc = fx.data.scenario;
    std::vector<std::pair<const Episode*, std::pair<AgentId, std::size_t>>> queries;
    for (const auto& ep : fx.data.episodes)
        for (const auto& [id, t] : ep.trajectories)
            for (std::size_t f = 0; f < t.states.size(); ++f) queries.push_back({&ep, {id, f}});
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, queries.size() - 1);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    double worst_sum = 0.0, worst_scale = 0.0;
    int calls = 0;
    for (int i = 0; i < kInferenceCalls; ++i) {
        const auto& q = queries[pick(rng)];
        const GoalPosterior p = infer(History(*q.first, q.second.first, q.second.second), sc, m);
        ++calls;
        if (p.entries.empty()) continue;
        std::vector<double> l, pr, post;
        double sum = 0.0;
        for (const auto& e : p.entries) {
            l.push_back(e.likelihood);
            pr.push_back(e.prior);
            post.push_back(e.probability);
            sum += e.probability;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        const double c = scale(rng);
        for (double& v : l) v *= c;
        const auto scaled = posterior(l, pr);
        for (std::size_t k = 0; k < post.size(); ++k) worst_scale = std::max(worst_scale, std::abs(scaled[k] - post[k]));
    }
    report(3, worst_sum <= kPosteriorTol && worst_scale <= kPosteriorTol, "posterior normalisation and scaling",
           std::to_string(calls) + " calls, max |sum-1| " + fmt(worst_sum) + ", max scaling diff " + fmt(worst_scale));
}

// ---------------------------------------------------------------------------

struct Cart {
    std::vector<Feature> features;
    TrainingSet ts;
    int max_depth{2};
};

Cart load_cart(const std::string& file) {
    std::ifstream in(fixture::data_path("fixtures/" + file));
    const auto j = nlohmann::json::parse(in);
    Cart c;
    for (const auto& n : j.at("features")) c.features.push_back(*feature_from_string(n.get<std::string>()));
    for (const auto& s : j.at("samples")) {
        FeatureValues x{};
        for (Feature f : c.features) {
            const auto& v = s.at(std::string(to_string(f)));
            x[index_of(f)] = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>();
        }
        c.ts.x.push_back(x);
        c.ts.y.push_back(s.at("label").get<bool>());
    }
    c.max_depth = j.at("max_depth").get<int>();
    return c;
}

int exhaustive_correct(const Cart& c, const std::vector<std::size_t>& idx, int depth) {
    int p = 0, n = 0;
    for (std::size_t i : idx) (c.ts.y[i] ? p : n) += 1;
    int best = std::max(p, n);
    if (depth == 0) return best;
    for (Feature f : c.features) {
        std::vector<double> v;
        for (std::size_t i : idx) v.push_back(c.ts.x[i][index_of(f)]);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double cut = (v[k] + v[k + 1]) / 2;
            std::vector<std::size_t> a, b;
            for (std::size_t i : idx) (c.ts.x[i][index_of(f)] < cut ? a : b).push_back(i);
            best = std::max(best, exhaustive_correct(c, a, depth - 1) + exhaustive_correct(c, b, depth - 1));
        }
    }
    return best;
}

void criterion4() {
    bool ok = true;
    std::string detail;
    for (const std::string file : {"cart_separable.json", "cart_xor.json", "cart_noisy.json"}) {
        const Cart c = load_cart(file);
        TrainConfig cfg;
        cfg.max_depth = c.max_depth;
        cfg.alpha = 0.0;
        cfg.ccp_alpha = 0.0;
        const DecisionTree t = fit_tree(c.ts, cfg);
        int correct = 0;
        for (std::size_t i = 0; i < c.ts.x.size(); ++i)
            correct += (traverse(t, c.ts.x[i]).likelihood >= 0.5) == c.ts.y[i];
        std::vector<std::size_t> all(c.ts.x.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        const int best = exhaustive_correct(c, all, c.max_depth);
        ok = ok && correct == best;
        detail += file + " " + std::to_string(correct) + "/" + std::to_string(best) + "; ";
        if (file == "cart_separable.json") {
            const bool five = t.root().rule && t.root().rule->threshold == 5.0;
            ok = ok && five;
            detail += std::string("threshold ") + (t.root().rule ? fmt(t.root().rule->threshold, 17) : "none") + "; ";
        }
    }
    report(4, ok, "CART matches exhaustive depth-2 search", detail.substr(0, detail.size() - 2));
}

// ---------------------------------------------------------------------------

double sample_in(std::mt19937_64& rng, Feature f, const Interval& iv) {
    if (is_boolean(f)) {
        const bool t = iv.contains(1.0), z = iv.contains(0.0);
        if (t && z) return std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
        return t ? 1.0 : 0.0;
    }
    for (int tries = 0; tries < 100; ++tries) {
        const double v = std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
        if (iv.contains(v)) return v;
    }
    return witness_value(iv);
}

std::vector<FeatureValues> sample_point(std::mt19937_64& rng, const VerificationProblem& vp) {
    std::vector<FeatureValues> x(vp.pairs.size());
    for (Feature f : kFeatures) {
        const std::size_t fi = index_of(f);
        if (vp.meta.is_shared(f)) {
            const double v = sample_in(rng, f, vp.shared_box[fi]);
            for (auto& row : x) row[fi] = v;
        } else {
            for (std::size_t p = 0; p < x.size(); ++p) x[p][fi] = sample_in(rng, f, vp.pair_boxes[p][fi]);
        }
    }
    return x;
}

std::vector<double> axis_grid(Feature f, const Interval& iv) {
    std::vector<double> out;
    if (is_boolean(f)) {
        for (double v : {0.0, 1.0})
            if (iv.contains(v)) out.push_back(v);
        return out;
    }
    for (double v = iv.lo; v <= iv.hi; v += kGridStep)
        if (iv.contains(v)) out.push_back(v);
    return out;
}

struct SoundnessResult {
    std::string verdict;
    bool ok;
    std::size_t checks;
};

SoundnessResult check_proposition(const GoalModel& m, const Proposition& prop, std::mt19937_64& rng) {
    const Verdict v = verify(m, prop);
    const VerificationProblem vp = resolve(m, prop);
    if (v.status == VerdictStatus::refuted) {
        const auto h = holds_at(vp, v.counterexample->values);
        return {"refuted", h.has_value() && !*h, 1};
    }
    std::size_t checks = 0;
    bool ok = true;
    auto probe = [&](const std::vector<FeatureValues>& x) {
        const auto h = holds_at(vp, x);
        if (!h) return;
        ++checks;
        if (!*h) ok = false;
    };
    for (int i = 0; i < kVerifierSamples; ++i) probe(sample_point(rng, vp));
    // Dense axis sweeps at a fixed step from random base points.
    for (int base = 0; base < 100; ++base) {
        const auto x0 = sample_point(rng, vp);
        for (Feature f : kFeatures) {
            const std::size_t fi = index_of(f);
            if (vp.meta.is_shared(f)) {
                for (double val : axis_grid(f, vp.shared_box[fi])) {
                    auto x = x0;
                    for (auto& row : x) row[fi] = val;
                    probe(x);
                }
            } else {
                for (std::size_t p = 0; p < x0.size(); ++p)
                    for (double val : axis_grid(f, vp.pair_boxes[p][fi])) {
                        auto x = x0;
                        x[p][fi] = val;
                        probe(x);
                    }
            }
        }
    }
    return {"verified", ok, checks};
}

void criterion5(const GoalModel& m) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(5);
    bool ok = true;
    std::string detail;
    for (const auto& file : fixture::fixture_propositions()) {
        const Proposition prop = load_proposition(fixture::data_path("propositions/" + file));
        const SoundnessResult r = check_proposition(m, prop, rng);
        ok = ok && r.ok;
        detail += file.substr(0, file.size() - 5) + " " + r.verdict + (r.ok ? "" : " VIOLATED") + " [" +
                  std::to_string(r.checks) + " checks]; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(5, ok && secs < kVerifierBudgetSeconds, "verifier soundness and sampling completeness",
           detail + fmt(secs, 3) + " s");
}

// ---------------------------------------------------------------------------

std::optional<std::string> find_z3() {
    for (const char* p : {"/usr/local/bin/z3", "/usr/bin/z3"})
        if (std::filesystem::exists(p)) return std::string(p);
    return std::nullopt;
}

std::string run_z3(const std::string& z3, const std::string& script) {
    const auto file = std::filesystem::temp_directory_path() / "grit_acceptance.smt2";
    std::ofstream(file) << script;
    FILE* pipe = ::popen((z3 + " '" + file.string() + "' 2>&1").c_str(), "r");
    if (!pipe) return "";
    char buf[256];
    std::string first;
    if (std::fgets(buf, sizeof buf, pipe)) first = buf;
    while (std::fgets(buf, sizeof buf, pipe)) {
    }
    ::pclose(pipe);
    std::filesystem::remove(file);
    while (!first.empty() && std::isspace(static_cast<unsigned char>(first.back()))) first.pop_back();
    return first;
}

void criterion6(const GoalModel& trained) {
    const auto z3 = find_z3();
    if (!z3) {
        std::cout << "SKIP criterion 6: SMT parity (no z3 on PATH)" << std::endl;
        return;
    }
    struct Case {
        std::string label;
        GoalModel model;
        std::string prop;
    };
    std::vector<Case> cases{
        {"dominant/lane_dominance", load_model(fixture::data_path("fixtures/lane_dominant_model.json")),
         "lane_dominance.json"},
        {"perturbed/lane_dominance", load_model(fixture::data_path("fixtures/lane_perturbed_model.json")),
         "lane_dominance.json"},
        {"single_leaf/prior_order", load_model(fixture::data_path("fixtures/single_leaf_model.json")),
         "prior_order.json"},
    };
    for (const auto& f : fixture::fixture_propositions()) cases.push_back({"trained/" + f, trained, f});
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const Proposition prop = load_proposition(fixture::data_path("propositions/" + c.prop));
        const bool verified = verify(c.model, prop).status == VerdictStatus::verified;
        const std::string answer = run_z3(*z3, export_smtlib(c.model, prop));
        const bool agree = (answer == "unsat") == verified && (answer == "sat" || answer == "unsat");
        ok = ok && agree;
        detail += c.label + " " + answer + (agree ? "" : " MISMATCH") + "; ";
    }
    report(6, ok, "SMT parity with z3", detail.substr(0, detail.size() - 2));
}

// ---------------------------------------------------------------------------

void criterion7(const GoalModel& m) {
    const auto& fx = fixture::t_junction();
    const Scenario& sc = fx.data.scenario;
    const EvalReport grit = evaluate(m, fx.test, sc);
    const EvalReport nodt = evaluate(no_dt_predictor(sc, m.priors), fx.test, sc, {}, 1, "grit-no-dt");
    const double a01 = grit.fractions[1].accuracy.mean, a10 = grit.fractions[10].accuracy.mean;
    const double e01 = grit.fractions[1].entropy.mean, e10 = grit.fractions[10].entropy.mean;
    const double g09 = grit.fractions[9].accuracy.mean, n09 = nodt.fractions[9].accuracy.mean;
    const bool ok = a10 >= a01 + kAccuracyGain && e10 <= e01 - kEntropyDrop && g09 >= n09;
    report(7, ok, "accuracy and entropy trends",
           std::to_string(grit.vehicles) + " test vehicles; accuracy 0.1->" + fmt(a01, 4) + " 1.0->" + fmt(a10, 4) +
               "; entropy 0.1->" + fmt(e01, 4) + " 1.0->" + fmt(e10, 4) + "; at 0.9 GRIT " + fmt(g09, 4) +
               " vs no-DT " + fmt(n09, 4));
}

void criterion8(const GoalModel& m) {
    const auto& fx = fixture::t_junction();
    const TimingSummary t = benchmark(m, fx.test, fx.data.scenario, 5);
    const double parts = t.goal_generation_us + t.feature_extraction_us + t.likelihood_us;
    const double share = t.feature_extraction_us / parts;
    report(8, t.total_us.mean < kTimingBudgetUs && share > 0.5, "inference timing",
           "mean " + fmt(t.total_us.mean, 4) + " us +- " + fmt(t.total_us.stderr_, 3) + " over " +
               std::to_string(t.calls) + " calls; goals " + fmt(t.goal_generation_us, 3) + " us, features " +
               fmt(t.feature_extraction_us, 3) + " us (" + fmt(100 * share, 3) + "%), likelihood " +
               fmt(t.likelihood_us, 3) + " us");
}

void criterion9(const GoalModel& m) {
    int deepest = 0;
    for (const auto& [key, tree] : m.trees) deepest = std::max(deepest, tree.depth());
    report(9, deepest <= kMaxDepth, "depth bound",
           "deepest tree " + std::to_string(deepest) + ", limit " + std::to_string(kMaxDepth) + ", " +
               std::to_string(m.trees.size()) + " trees");
}

// ---------------------------------------------------------------------------

void criterion10() {
    const auto& fx = fixture::t_junction();
    const Scenario& sc = fx.data.scenario;
    bool ok = true;
    for (const auto& g : sc.goals()) ok = ok && g.radius == kGoalRadius;

    auto episodes = fx.data.episodes;
    // A vehicle parked mid-road never reaches a goal.
    Trajectory parked{999999, 0, {}};
    for (int i = 0; i < 50; ++i) {
        AgentState s;
        s.time = i / 25.0;
        s.x = -40.0;
        s.y = -5.25;
        parked.states.push_back(s);
    }
    episodes[0].trajectories[parked.id] = parked;

    std::size_t min_samples = 99, max_samples = 0, vehicles = 0, total = 0;
    bool parked_excluded = true, radius_ok = true;
    for (const auto& v : labelled_vehicles(episodes, sc)) {
        ++vehicles;
        if (v.agent == parked.id) parked_excluded = false;
        min_samples = std::min(min_samples, v.cutoffs.size());
        max_samples = std::max(max_samples, v.cutoffs.size());
        const auto& states = episodes[v.episode].trajectories.at(v.agent).states;
        std::size_t entry = states.size();
        for (std::size_t i = 0; i < states.size() && entry == states.size(); ++i)
            for (const auto& g : sc.goals())
                if (std::hypot(states[i].x - g.location.x, states[i].y - g.location.y) <= kGoalRadius) {
                    entry = i;
                    radius_ok = radius_ok && g.id == v.goal.id;
                    break;
                }
        radius_ok = radius_ok && entry < states.size() && v.cutoffs.back() <= entry;
    }
    for (const auto& ep : fx.data.episodes) total += ep.trajectories.size();
    ok = ok && parked_excluded && radius_ok && min_samples >= 1 && max_samples <= 11 && vehicles == total;
    report(10, ok, "preprocessing fidelity",
           std::to_string(vehicles) + " of " + std::to_string(total) + " fixture vehicles labelled, samples per vehicle " +
               std::to_string(min_samples) + ".." + std::to_string(max_samples) + ", non-goal vehicle " +
               (parked_excluded ? "excluded" : "KEPT") + ", radius " + fmt(kGoalRadius, 3) + " m " +
               (radius_ok ? "honoured" : "VIOLATED"));
}

}  // namespace

int main() {
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const GoalModel& model = fixture::trained().model;
        std::cout << "fixture: seed " << fixture::kSeed << ", " << fixture::kVehicles << " vehicles, trained in "
                  << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 3) << " s"
                  << std::endl;
        criterion1();
        criterion2(model);
        criterion3(model);
        criterion4();
        criterion5(model);
        criterion6(model);
        criterion7(model);
        criterion8(model);
        criterion9(model);
        criterion10();
    } catch (const std::exception& e) {
        std::cout << "FAIL: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
