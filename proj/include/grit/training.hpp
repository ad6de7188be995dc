#pragma once

// CART training of likelihood trees: class-weighted information gain, additive
// smoothing, minimal cost-complexity pruning, prior estimation and grid search.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grit/dataset.hpp"
#include "grit/features.hpp"
#include "grit/inference.hpp"
#include "grit/parallel.hpp"
#include "grit/tree.hpp"

namespace grit {

struct TrainConfig {
    int max_depth{7};
    double alpha{1.0};      ///< additive smoothing
    double ccp_alpha{0.0};  ///< pruning complexity
    int min_samples_split{2};
    std::vector<double> alpha_grid{0.1, 1.0, 10.0};
    std::vector<double> ccp_grid{0.0, 0.001, 0.01};
};

inline void validate_config(const TrainConfig& c) {
    if (c.max_depth < 1) throw InputError("max_depth must be >= 1");
    if (!(c.alpha >= 0.0)) throw InputError("alpha must be >= 0");
    if (!(c.ccp_alpha >= 0.0)) throw InputError("ccp_alpha must be >= 0");
    if (c.min_samples_split < 2) throw InputError("min_samples_split must be >= 2");
}

// ---------------------------------------------------------------------------
// Class-weighted entropy

struct ClassCounts {
    double positive{0.0};
    double negative{0.0};
    double total() const { return positive + negative; }
};

/// w_G = N/N_G and w_notG = N/N_notG on smoothed totals.
struct ClassWeights {
    double positive{1.0};
    double negative{1.0};

    static ClassWeights from_totals(ClassCounts totals, double alpha) {
        const double g = totals.positive + alpha;
        const double o = totals.negative + alpha;
        const double n = g + o;
        return {g > 0.0 ? n / g : 0.0, o > 0.0 ? n / o : 0.0};
    }
    double mass(ClassCounts c) const { return positive * c.positive + negative * c.negative; }
};

inline double weighted_entropy(ClassCounts c, ClassWeights w) {
    const double a = w.positive * c.positive;
    const double b = w.negative * c.negative;
    const double m = a + b;
    if (!(m > 0.0)) return 0.0;
    double h = 0.0;
    for (double v : {a / m, b / m})
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

/// Entropy of the parent minus the mass-weighted mean entropy of the children (bits).
inline double information_gain(ClassCounts parent, std::span<const ClassCounts> children, ClassWeights w) {
    const double mp = w.mass(parent);
    if (!(mp > 0.0)) return 0.0;
    double after = 0.0;
    for (const auto& c : children) after += w.mass(c) / mp * weighted_entropy(c, w);
    return std::max(0.0, weighted_entropy(parent, w) - after);
}

inline double information_gain(ClassCounts parent, ClassCounts left, ClassCounts right, ClassWeights w) {
    const ClassCounts kids[2] = {left, right};
    return information_gain(parent, kids, w);
}

// ---------------------------------------------------------------------------
// Growing

/// Training rows in dense form.
struct TrainingSet {
    std::vector<FeatureValues> x;
    std::vector<bool> y;

    ClassCounts totals() const {
        ClassCounts c;
        for (bool v : y) (v ? c.positive : c.negative) += 1.0;
        return c;
    }
};

inline TrainingSet to_training_set(std::span<const LabeledSample> samples, const FeatureMetadata& meta) {
    TrainingSet ts;
    ts.x.reserve(samples.size());
    ts.y.reserve(samples.size());
    for (const auto& s : samples) {
        ts.x.push_back(impute(s.features, meta));
        ts.y.push_back(s.label);
    }
    return ts;
}

namespace detail {

inline constexpr double kGainEpsilon = 1e-12;

struct SplitCandidate {
    DecisionRule rule;
    double gain{0.0};
};

/// Deterministic preference: larger gain, then feature name, then smaller threshold.
inline bool better_split(const SplitCandidate& a, const std::optional<SplitCandidate>& best) {
    if (!best) return true;
    if (a.gain > best->gain + kGainEpsilon) return true;
    if (a.gain < best->gain - kGainEpsilon) return false;
    const auto na = to_string(a.rule.feature), nb = to_string(best->rule.feature);
    if (na != nb) return na < nb;
    return a.rule.threshold < best->rule.threshold;
}

inline ClassCounts count(const TrainingSet& ts, std::span<const std::size_t> idx) {
    ClassCounts c;
    for (std::size_t i : idx) (ts.y[i] ? c.positive : c.negative) += 1.0;
    return c;
}

inline std::optional<SplitCandidate> best_split(const TrainingSet& ts, std::span<const std::size_t> idx,
                                                ClassWeights w) {
    const ClassCounts parent = count(ts, idx);
    std::optional<SplitCandidate> best;
    std::vector<std::size_t> order(idx.begin(), idx.end());
    for (Feature f : kFeatures) {
        const std::size_t fi = index_of(f);
        if (is_boolean(f)) {
            ClassCounts t, fl;
            for (std::size_t i : idx) {
                ClassCounts& side = ts.x[i][fi] != 0.0 ? t : fl;
                (ts.y[i] ? side.positive : side.negative) += 1.0;
            }
            if (t.total() == 0.0 || fl.total() == 0.0) continue;
            SplitCandidate c{{f, RuleKind::boolean_literal, 0.0}, information_gain(parent, t, fl, w)};
            if (better_split(c, best)) best = c;
            continue;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts.x[a][fi] < ts.x[b][fi]; });
        ClassCounts left;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            (ts.y[order[k]] ? left.positive : left.negative) += 1.0;
            const double a = ts.x[order[k]][fi];
            const double b = ts.x[order[k + 1]][fi];
            if (!(a < b)) continue;
            double c = a + (b - a) / 2.0;
            if (!(c > a)) c = b;
            const ClassCounts right{parent.positive - left.positive, parent.negative - left.negative};
            SplitCandidate cand{{f, RuleKind::threshold, c}, information_gain(parent, left, right, w)};
            if (better_split(cand, best)) best = cand;
        }
    }
    return best;
}

inline std::size_t grow(DecisionTree& tree, const TrainingSet& ts, std::vector<std::size_t> idx, int depth,
                        double parent_likelihood, ClassCounts totals, ClassWeights w, const TrainConfig& cfg) {
    const std::size_t me = tree.nodes.size();
    tree.nodes.emplace_back();
    const ClassCounts c = count(ts, idx);
    TreeNode node;
    node.n_positive = c.positive;
    node.n_negative = c.negative;
    node.likelihood = node_likelihood(c.positive, c.negative, totals.positive, totals.negative, cfg.alpha)
                          .value_or(parent_likelihood);
    const bool pure = c.positive == 0.0 || c.negative == 0.0;
    std::optional<SplitCandidate> split;
    if (depth < cfg.max_depth && static_cast<int>(idx.size()) >= cfg.min_samples_split && !pure)
        split = best_split(ts, idx, w);
    if (!split || !(split->gain > kGainEpsilon)) {
        tree.nodes[me] = node;
        return me;
    }
    std::vector<std::size_t> yes, no;
    for (std::size_t i : idx) (split->rule.test(ts.x[i]) ? yes : no).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    node.rule = split->rule;
    tree.nodes[me] = node;
    const auto t = grow(tree, ts, std::move(yes), depth + 1, node.likelihood, totals, w, cfg);
    const auto f = grow(tree, ts, std::move(no), depth + 1, node.likelihood, totals, w, cfg);
    tree.nodes[me].true_child = static_cast<std::int32_t>(t);
    tree.nodes[me].false_child = static_cast<std::int32_t>(f);
    return me;
}

/// Copies the subtree reachable from the root into a fresh preorder array.
inline void compact_into(const DecisionTree& src, std::size_t i, DecisionTree& dst) {
    const std::size_t me = dst.nodes.size();
    dst.nodes.push_back(src.nodes[i]);
    if (src.nodes[i].is_leaf()) {
        dst.nodes[me].true_child = dst.nodes[me].false_child = -1;
        return;
    }
    const std::size_t t = dst.nodes.size();
    compact_into(src, static_cast<std::size_t>(src.nodes[i].true_child), dst);
    const std::size_t f = dst.nodes.size();
    compact_into(src, static_cast<std::size_t>(src.nodes[i].false_child), dst);
    dst.nodes[me].true_child = static_cast<std::int32_t>(t);
    dst.nodes[me].false_child = static_cast<std::int32_t>(f);
}

}  // namespace detail

/// Per-node class counts of a training set routed through the tree.
inline std::vector<ClassCounts> route_counts(const DecisionTree& tree, const TrainingSet& ts) {
    std::vector<ClassCounts> counts(tree.nodes.size());
    for (std::size_t r = 0; r < ts.x.size(); ++r) {
        std::size_t i = 0;
        while (true) {
            (ts.y[r] ? counts[i].positive : counts[i].negative) += 1.0;
            const TreeNode& n = tree.nodes[i];
            if (n.is_leaf()) break;
            i = static_cast<std::size_t>(n.rule->test(ts.x[r]) ? n.true_child : n.false_child);
        }
    }
    return counts;
}

/// Effective alpha of every internal node: (R(t) - R(T_t)) / (leaves(T_t) - 1),
/// with R the class-weighted entropy times node mass over root mass. Leaves get +inf.
inline std::vector<double> effective_alphas(const DecisionTree& tree, const TrainingSet& ts, double alpha) {
    const auto counts = route_counts(tree, ts);
    const ClassWeights w = ClassWeights::from_totals(ts.totals(), alpha);
    const double root_mass = w.mass(counts[0]);
    std::vector<double> risk(tree.nodes.size()), subtree_risk(tree.nodes.size()), leaves(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        risk[i] = root_mass > 0.0 ? w.mass(counts[i]) * weighted_entropy(counts[i], w) / root_mass : 0.0;
    // Children always follow their parent, so a reverse sweep sees them first.
    for (std::size_t k = tree.nodes.size(); k-- > 0;) {
        const TreeNode& n = tree.nodes[k];
        if (n.is_leaf()) {
            subtree_risk[k] = risk[k];
            leaves[k] = 1.0;
        } else {
            const auto t = static_cast<std::size_t>(n.true_child), f = static_cast<std::size_t>(n.false_child);
            subtree_risk[k] = subtree_risk[t] + subtree_risk[f];
            leaves[k] = leaves[t] + leaves[f];
        }
    }
    std::vector<double> g(tree.nodes.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (!tree.nodes[i].is_leaf()) g[i] = (risk[i] - subtree_risk[i]) / (leaves[i] - 1.0);
    return g;
}

/// Minimal cost-complexity pruning: repeatedly collapses the weakest link
/// until every remaining internal node's effective alpha exceeds ccp_alpha.
inline DecisionTree prune(DecisionTree tree, double ccp_alpha, const TrainingSet& ts, double alpha) {
    if (!(ccp_alpha > 0.0)) return tree;
    while (!tree.root().is_leaf()) {
        const auto g = effective_alphas(tree, ts, alpha);
        std::size_t weakest = 0;
        double gmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] < gmin) {
                gmin = g[i];
                weakest = i;
            }
        }
        if (!(gmin <= ccp_alpha)) break;
        tree.nodes[weakest].rule.reset();
        DecisionTree compact;
        compact.nodes.clear();
        detail::compact_into(tree, 0, compact);
        tree = std::move(compact);
    }
    refresh_edge_weights(tree);
    return tree;
}

inline DecisionTree fit_tree(const TrainingSet& ts, const TrainConfig& cfg) {
    validate_config(cfg);
    DecisionTree tree;
    tree.nodes.clear();
    if (ts.x.empty()) {
        tree.nodes.emplace_back();
        return tree;
    }
    const ClassCounts totals = ts.totals();
    const ClassWeights w = ClassWeights::from_totals(totals, cfg.alpha);
    std::vector<std::size_t> idx(ts.x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    detail::grow(tree, ts, std::move(idx), 0, kRootLikelihood, totals, w, cfg);
    refresh_edge_weights(tree);
    return prune(std::move(tree), cfg.ccp_alpha, ts, cfg.alpha);
}

inline DecisionTree fit_tree(std::span<const LabeledSample> samples, const TrainConfig& cfg,
                             const FeatureMetadata& meta = {}) {
    return fit_tree(to_training_set(samples, meta), cfg);
}

// ---------------------------------------------------------------------------
// Priors

/// P(g) proportional to count(g) + alpha.
inline std::map<PairKey, double> priors_from_counts(const std::map<PairKey, double>& counts, double alpha) {
    std::map<PairKey, double> out;
    double total = 0.0;
    for (const auto& [k, c] : counts) total += c + alpha;
    for (const auto& [k, c] : counts)
        out[k] = total > 0.0 ? (c + alpha) / total : 1.0 / static_cast<double>(counts.size());
    return out;
}

/// Counts vehicles per true (goal, type) pair, the pair being the one of each
/// vehicle's earliest positive sample, then smooths over every bucket.
inline std::map<PairKey, double> estimate_priors(const Datasets& datasets, double alpha) {
    struct First {
        double time;
        std::size_t cutoff;
        PairKey pair;
    };
    std::map<std::pair<std::size_t, AgentId>, First> first;
    for (const auto& [key, samples] : datasets) {
        for (const auto& s : samples) {
            if (!s.label) continue;
            auto vid = std::pair{s.episode, s.agent};
            auto it = first.find(vid);
            if (it == first.end() || s.cutoff < it->second.cutoff ||
                (s.cutoff == it->second.cutoff && key < it->second.pair))
                first[vid] = {s.time, s.cutoff, key};
        }
    }
    std::map<PairKey, double> counts;
    for (const auto& [key, samples] : datasets) counts[key] = 0.0;
    for (const auto& [vid, f] : first) counts[f.pair] += 1.0;
    return priors_from_counts(counts, alpha);
}

// ---------------------------------------------------------------------------
// Whole-model training and grid search

inline GoalModel train_model(const Datasets& datasets, const TrainConfig& cfg, const FeatureMetadata& meta = {}) {
    validate_config(cfg);
    GoalModel m;
    m.metadata = meta;
    for (const auto& [key, samples] : datasets)
        if (!samples.empty()) m.trees[key] = fit_tree(samples, cfg, meta);
    m.priors = estimate_priors(datasets, cfg.alpha);
    return m;
}

/// Pre-extracted candidates for one vehicle at one sample time.
struct ValidationQuery {
    std::vector<Candidate> candidates;
    std::string true_goal;
};

inline std::vector<ValidationQuery> validation_queries(const std::vector<Episode>& episodes, const Scenario& sc,
                                                       const FeatureMetadata& meta = {},
                                                       const VehicleFilter& filter = {}) {
    std::vector<ValidationQuery> out;
    for (const auto& v : labelled_vehicles(episodes, sc, filter)) {
        for (std::size_t cutoff : v.cutoffs) {
            History h(episodes[v.episode], v.agent, cutoff);
            out.push_back({candidates_at(h, sc, meta), v.goal.id});
        }
    }
    return out;
}

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean negative log posterior of the true goal; queries where the true goal
/// is not a candidate are skipped.
inline double mean_log_loss(const GoalModel& model, std::span<const ValidationQuery> queries) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& q : queries) {
        bool present = false;
        for (const auto& c : q.candidates) present |= c.pair.goal == q.true_goal;
        if (!present) continue;
        const double p = posterior_from_candidates(q.candidates, model).probability_of_goal(q.true_goal);
        sum -= std::log(std::max(p, kProbabilityFloor));
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

struct GridPoint {
    double alpha;
    double ccp_alpha;
    double log_loss;
};

struct GridSearchResult {
    TrainConfig config;
    std::vector<GridPoint> points;
};

/// Lowest validation log-loss wins; ties prefer larger ccp_alpha, then larger alpha.
inline GridSearchResult grid_search(const Datasets& train, std::span<const ValidationQuery> validation,
                                    const TrainConfig& base, const FeatureMetadata& meta = {},
                                    std::size_t threads = 1) {
    if (base.alpha_grid.empty() || base.ccp_grid.empty()) throw InputError("grid search needs non-empty grids");
    std::vector<GridPoint> points;
    for (double a : base.alpha_grid)
        for (double c : base.ccp_grid) points.push_back({a, c, 0.0});
    parallel_for(points.size(), threads, [&](std::size_t i) {
        TrainConfig cfg = base;
        cfg.alpha = points[i].alpha;
        cfg.ccp_alpha = points[i].ccp_alpha;
        points[i].log_loss = mean_log_loss(train_model(train, cfg, meta), validation);
    });
    const GridPoint* best = nullptr;
    for (const auto& p : points) {
        if (!best) {
            best = &p;
            continue;
        }
        constexpr double tol = 1e-12;
        if (p.log_loss < best->log_loss - tol) {
            best = &p;
        } else if (std::abs(p.log_loss - best->log_loss) <= tol) {
            if (p.ccp_alpha > best->ccp_alpha || (p.ccp_alpha == best->ccp_alpha && p.alpha > best->alpha))
                best = &p;
        }
    }
    GridSearchResult out{base, points};
    out.config.alpha = best->alpha;
    out.config.ccp_alpha = best->ccp_alpha;
    return out;
}

inline nlohmann::json training_report(const GoalModel& model, const Datasets& datasets, const TrainConfig& cfg,
                                      double train_loss, double validation_loss,
                                      const std::vector<GridPoint>& grid = {}) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [key, tree] : model.trees) {
        auto it = datasets.find(key);
        std::size_t n = it == datasets.end() ? 0 : it->second.size();
        std::size_t pos = 0;
        if (it != datasets.end())
            for (const auto& s : it->second) pos += s.label ? 1 : 0;
        pairs.push_back({{"goal", key.goal},
                         {"type", to_string(key.type)},
                         {"depth", tree.depth()},
                         {"nodes", tree.size()},
                         {"leaves", tree.leaf_count()},
                         {"samples", n},
                         {"positives", pos},
                         {"prior", model.priors.count(key) ? model.priors.at(key) : 0.0}});
    }
    nlohmann::json jgrid = nlohmann::json::array();
    for (const auto& g : grid) jgrid.push_back({{"alpha", g.alpha}, {"ccp_alpha", g.ccp_alpha}, {"log_loss", g.log_loss}});
    return {{"pairs", pairs},
            {"train_log_loss", train_loss},
            {"validation_log_loss", validation_loss},
            {"config",
             {{"max_depth", cfg.max_depth},
              {"alpha", cfg.alpha},
              {"ccp_alpha", cfg.ccp_alpha},
              {"min_samples_split", cfg.min_samples_split}}},
            {"grid", jgrid}};
}

/// Result of the full training pipeline.
struct TrainingRun {
    GoalModel model;
    TrainConfig config;
    std::vector<GridPoint> grid;
    nlohmann::json report;
    std::size_t validation_vehicles{0};
};

/// Holds out the last `val_split` share of labelled vehicles, grid-searches
/// alpha and ccp_alpha on them (skipped for a single grid point), then fits
/// every tree and the priors on all vehicles with the chosen values.
inline TrainingRun train_pipeline(const std::vector<Episode>& episodes, const Scenario& sc, TrainConfig cfg,
                                  double val_split = 0.2, const FeatureMetadata& meta = {}, std::size_t threads = 1) {
    validate_config(cfg);
    if (!(val_split >= 0.0 && val_split < 1.0)) throw InputError("validation split must lie in [0, 1)");
    const auto vehicles = labelled_vehicles(episodes, sc);
    if (vehicles.empty()) throw InputError("no vehicle reaches a goal; nothing to train on");
    const auto n_val = static_cast<std::size_t>(std::ceil(val_split * static_cast<double>(vehicles.size())));
    std::set<std::pair<std::size_t, AgentId>> held_out;
    for (std::size_t i = vehicles.size() - n_val; i < vehicles.size(); ++i)
        held_out.insert({vehicles[i].episode, vehicles[i].agent});
    const VehicleFilter in_train = [&](std::size_t e, AgentId id) { return held_out.count({e, id}) == 0; };
    const VehicleFilter in_val = [&](std::size_t e, AgentId id) { return held_out.count({e, id}) > 0; };

    TrainingRun run;
    run.validation_vehicles = n_val;
    std::vector<ValidationQuery> validation;
    if (n_val > 0) validation = validation_queries(episodes, sc, meta, in_val);
    const bool singleton = cfg.alpha_grid.size() == 1 && cfg.ccp_grid.size() == 1;
    if (singleton || n_val == 0 || n_val == vehicles.size()) {
        if (cfg.alpha_grid.empty() || cfg.ccp_grid.empty()) throw InputError("grid search needs non-empty grids");
        cfg.alpha = cfg.alpha_grid.front();
        cfg.ccp_alpha = cfg.ccp_grid.front();
    } else {
        const Datasets train = build_datasets(episodes, sc, meta, in_train);
        if (train.empty()) throw InputError("training split produced no samples");
        auto gs = grid_search(train, validation, cfg, meta, threads);
        cfg = gs.config;
        run.grid = std::move(gs.points);
    }
    const Datasets all = build_datasets(episodes, sc, meta);
    if (all.empty()) throw InputError("dataset is empty after filtering");
    run.model = train_model(all, cfg, meta);
    run.config = cfg;
    const auto train_queries = validation_queries(episodes, sc, meta, in_train);
    const double train_loss = mean_log_loss(run.model, train_queries);
    const double val_loss = validation.empty() ? 0.0 : mean_log_loss(run.model, validation);
    run.report = training_report(run.model, all, cfg, train_loss, val_loss, run.grid);
    return run;
}

}  // namespace grit
