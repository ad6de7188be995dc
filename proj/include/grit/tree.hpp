#pragma once

// Likelihood decision trees: one per (goal, goal type) pair. Every node carries
// a likelihood; edges carry multiplicative weights so that a leaf's likelihood
// is 0.5 times the product of the weights on its root path.

#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grit/common.hpp"
#include "grit/features.hpp"
#include "grit/scenario.hpp"

namespace grit {

inline constexpr double kRootLikelihood = 0.5;
inline constexpr double kWeightTolerance = 1e-9;

enum class RuleKind { boolean_literal, threshold };

/// Threshold rules read "c > x": the true branch is taken iff x < c.
struct DecisionRule {
    Feature feature{Feature::speed};
    RuleKind kind{RuleKind::threshold};
    double threshold{0.0};

    bool test(const FeatureValues& x) const {
        const double v = x[index_of(feature)];
        if (kind == RuleKind::boolean_literal) return v != 0.0;
        return threshold > v;
    }
    friend bool operator==(const DecisionRule&, const DecisionRule&) = default;
};

inline std::string describe(const DecisionRule& r, bool branch = true) {
    std::ostringstream os;
    os << to_string(r.feature);
    if (r.kind == RuleKind::boolean_literal) {
        if (!branch) return "not " + os.str();
        return os.str();
    }
    os << (branch ? " < " : " >= ") << r.threshold;
    return os.str();
}

struct TreeNode {
    double likelihood{kRootLikelihood};
    std::optional<DecisionRule> rule;
    std::int32_t true_child{-1};
    std::int32_t false_child{-1};
    double true_weight{1.0};
    double false_weight{1.0};
    // Training counts, kept for reporting and pruning.
    double n_positive{0.0};
    double n_negative{0.0};

    bool is_leaf() const { return !rule.has_value(); }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat binary tree, root at index 0, children stored after their parent.
struct DecisionTree {
    std::vector<TreeNode> nodes{TreeNode{}};

    const TreeNode& root() const { return nodes.front(); }
    std::size_t size() const { return nodes.size(); }

    std::size_t leaf_count() const {
        std::size_t n = 0;
        for (const auto& node : nodes) n += node.is_leaf() ? 1 : 0;
        return n;
    }

    int depth(std::size_t i = 0) const {
        const TreeNode& n = nodes[i];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth(static_cast<std::size_t>(n.true_child)),
                            depth(static_cast<std::size_t>(n.false_child)));
    }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

// ---------------------------------------------------------------------------
// Likelihood and edge weights

/// Class-balanced node likelihood with additive smoothing of all four counts.
/// The class weights N/N_G and N/N_notG are folded into the cross-multiplied
/// form n_G N_notG / (n_G N_notG + n_notG N_G), which makes the root exactly
/// 0.5. Returns nullopt for an empty node (caller inherits the parent value).
inline std::optional<double> node_likelihood(double n_node_goal, double n_node_other, double n_goal, double n_other,
                                             double alpha) {
    const double ng = n_node_goal + alpha;
    const double no = n_node_other + alpha;
    const double tg = n_goal + alpha;
    const double to = n_other + alpha;
    if (ng + no <= 0.0) return std::nullopt;
    // A class absent from the whole dataset carries no weight.
    if (tg <= 0.0) return 0.0;
    if (to <= 0.0) return 1.0;
    const double a = ng * to;
    const double b = no * tg;
    return a / (a + b);
}

struct EdgeWeights {
    double true_weight;
    double false_weight;
};

inline EdgeWeights edge_weights(double parent, double true_child, double false_child) {
    if (!(parent > 0.0)) throw std::domain_error("edge weights undefined for a zero-likelihood parent");
    return {true_child / parent, false_child / parent};
}

/// Recomputes every edge weight from stored node likelihoods.
inline void refresh_edge_weights(DecisionTree& tree) {
    for (auto& n : tree.nodes) {
        if (n.is_leaf()) {
            n.true_child = n.false_child = -1;
            n.true_weight = n.false_weight = 1.0;
            continue;
        }
        const auto& t = tree.nodes[static_cast<std::size_t>(n.true_child)];
        const auto& f = tree.nodes[static_cast<std::size_t>(n.false_child)];
        if (n.likelihood > 0.0) {
            auto w = edge_weights(n.likelihood, t.likelihood, f.likelihood);
            n.true_weight = w.true_weight;
            n.false_weight = w.false_weight;
        } else {
            n.true_weight = n.false_weight = 1.0;
        }
    }
}

// ---------------------------------------------------------------------------
// Traversal

struct TraversalStep {
    std::size_t node;
    bool branch;  ///< rule outcome at this node
};

struct Traversal {
    double likelihood{kRootLikelihood};
    std::size_t leaf{0};
    std::vector<TraversalStep> path;
};

inline std::size_t find_leaf(const DecisionTree& tree, const FeatureValues& x) {
    std::size_t i = 0;
    while (!tree.nodes[i].is_leaf()) {
        const TreeNode& n = tree.nodes[i];
        i = static_cast<std::size_t>(n.rule->test(x) ? n.true_child : n.false_child);
    }
    return i;
}

inline Traversal traverse(const DecisionTree& tree, const FeatureValues& x) {
    Traversal out;
    std::size_t i = 0;
    while (!tree.nodes[i].is_leaf()) {
        const TreeNode& n = tree.nodes[i];
        const bool b = n.rule->test(x);
        out.path.push_back({i, b});
        i = static_cast<std::size_t>(b ? n.true_child : n.false_child);
    }
    out.leaf = i;
    out.likelihood = tree.nodes[i].likelihood;
    return out;
}

inline Traversal traverse(const DecisionTree& tree, const FeatureVector& x, const FeatureMetadata& meta) {
    return traverse(tree, impute(x, meta));
}

/// Product of 0.5 and the edge weights along a traversal.
inline double path_product(const DecisionTree& tree, const Traversal& t) {
    double p = kRootLikelihood;
    for (const auto& step : t.path) {
        const TreeNode& n = tree.nodes[step.node];
        p *= step.branch ? n.true_weight : n.false_weight;
    }
    return p;
}

/// One-line explanation of a traversal: each rule with its edge weight.
inline std::string explain(const DecisionTree& tree, const Traversal& t, const std::string& goal_label) {
    std::ostringstream os;
    os.precision(3);
    os << goal_label << " has likelihood " << t.likelihood;
    if (t.path.empty()) return os.str() + " (no evidence, root value)";
    os << " because";
    for (std::size_t k = 0; k < t.path.size(); ++k) {
        const TreeNode& n = tree.nodes[t.path[k].node];
        os << (k == 0 ? " " : ", ") << describe(*n.rule, t.path[k].branch) << " ("
           << (t.path[k].branch ? n.true_weight : n.false_weight) << ")";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Goal model

struct PairKey {
    std::string goal;
    GoalType type{GoalType::straight_on};

    friend auto operator<=>(const PairKey&, const PairKey&) = default;
    friend bool operator==(const PairKey&, const PairKey&) = default;
};

inline std::string to_string(const PairKey& k) { return k.goal + ":" + std::string(to_string(k.type)); }

struct GoalModel {
    std::map<PairKey, DecisionTree> trees;
    std::map<PairKey, double> priors;
    FeatureMetadata metadata;

    const DecisionTree* tree_for(const PairKey& k) const {
        auto it = trees.find(k);
        return it == trees.end() ? nullptr : &it->second;
    }
    friend bool operator==(const GoalModel&, const GoalModel&) = default;
};

/// Collects every structural and numeric invariant violation of a tree.
inline std::vector<std::string> tree_violations(const DecisionTree& tree) {
    std::vector<std::string> errors;
    auto err = [&](std::size_t i, const std::string& msg) { errors.push_back("node " + std::to_string(i) + ": " + msg); };
    if (tree.nodes.empty()) {
        errors.push_back("tree has no nodes");
        return errors;
    }
    if (std::abs(tree.nodes[0].likelihood - kRootLikelihood) > kWeightTolerance)
        err(0, "root likelihood " + std::to_string(tree.nodes[0].likelihood) + " is not 0.5");
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (!(n.likelihood >= 0.0 && n.likelihood <= 1.0)) err(i, "likelihood outside [0, 1]");
        if (n.is_leaf()) {
            if (n.true_child >= 0 || n.false_child >= 0) err(i, "leaf has children");
            continue;
        }
        const auto size = static_cast<std::int32_t>(tree.nodes.size());
        if (n.true_child <= static_cast<std::int32_t>(i) || n.true_child >= size ||
            n.false_child <= static_cast<std::int32_t>(i) || n.false_child >= size) {
            err(i, "child index out of range");
            continue;
        }
        if (n.rule->kind == RuleKind::boolean_literal && !is_boolean(n.rule->feature))
            err(i, "boolean rule on scalar feature " + std::string(to_string(n.rule->feature)));
        if (n.rule->kind == RuleKind::threshold && is_boolean(n.rule->feature))
            err(i, "threshold rule on boolean feature");
        if (!std::isfinite(n.rule->threshold)) err(i, "non-finite threshold");
        const double lt = tree.nodes[static_cast<std::size_t>(n.true_child)].likelihood;
        const double lf = tree.nodes[static_cast<std::size_t>(n.false_child)].likelihood;
        // A zero weight is only consistent with a child likelihood of zero.
        if (!(n.true_weight >= 0.0) || !(n.false_weight >= 0.0) || !std::isfinite(n.true_weight) ||
            !std::isfinite(n.false_weight) || (n.likelihood > 0.0 && ((n.true_weight == 0.0 && lt > 0.0) ||
                                                                      (n.false_weight == 0.0 && lf > 0.0))))
            err(i, "edge weight not positive");
        if (std::abs(n.likelihood * n.true_weight - lt) > kWeightTolerance)
            err(i, "true child likelihood " + std::to_string(lt) + " != parent x weight");
        if (std::abs(n.likelihood * n.false_weight - lf) > kWeightTolerance)
            err(i, "false child likelihood " + std::to_string(lf) + " != parent x weight");
    }
    return errors;
}

inline void validate_model(const GoalModel& m) {
    std::vector<std::string> errors;
    double total = 0.0;
    for (const auto& [k, p] : m.priors) {
        if (!(p >= 0.0 && p <= 1.0)) errors.push_back("prior for " + to_string(k) + " outside [0, 1]");
        total += p;
    }
    if (m.priors.empty()) errors.push_back("model has no priors");
    else if (std::abs(total - 1.0) > kWeightTolerance)
        errors.push_back("priors sum to " + std::to_string(total) + ", expected 1");
    for (const auto& [k, t] : m.trees)
        for (const auto& e : tree_violations(t)) errors.push_back(to_string(k) + ": " + e);
    if (!errors.empty()) {
        std::string msg = "invalid goal model:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw InputError(msg);
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json node_to_json(const DecisionTree& t, std::size_t i) {
    const TreeNode& n = t.nodes[i];
    nlohmann::json j;
    j["L"] = n.likelihood;
    j["n_pos"] = n.n_positive;
    j["n_neg"] = n.n_negative;
    if (n.is_leaf()) return j;
    const DecisionRule& r = *n.rule;
    if (r.kind == RuleKind::boolean_literal)
        j["rule"] = {{"feature", to_string(r.feature)}, {"op", "is_true"}, {"value", true}};
    else
        j["rule"] = {{"feature", to_string(r.feature)}, {"op", "<"}, {"value", r.threshold}};
    j["w_true"] = n.true_weight;
    j["w_false"] = n.false_weight;
    j["true"] = node_to_json(t, static_cast<std::size_t>(n.true_child));
    j["false"] = node_to_json(t, static_cast<std::size_t>(n.false_child));
    return j;
}

inline std::size_t node_from_json(const nlohmann::json& j, DecisionTree& t, const std::string& where) {
    const std::size_t idx = t.nodes.size();
    t.nodes.emplace_back();
    TreeNode n;
    try {
        n.likelihood = j.at("L").get<double>();
        n.n_positive = j.value("n_pos", 0.0);
        n.n_negative = j.value("n_neg", 0.0);
        if (j.contains("rule")) {
            const auto& jr = j.at("rule");
            DecisionRule r;
            auto f = feature_from_string(jr.at("feature").get<std::string>());
            if (!f) throw InputError(where + ": unknown feature '" + jr.at("feature").get<std::string>() + "'");
            r.feature = *f;
            const std::string op = jr.at("op").get<std::string>();
            if (op == "is_true") {
                r.kind = RuleKind::boolean_literal;
            } else if (op == "<") {
                r.kind = RuleKind::threshold;
                r.threshold = jr.at("value").get<double>();
            } else {
                throw InputError(where + ": unknown rule op '" + op + "'");
            }
            n.rule = r;
            n.true_weight = j.at("w_true").get<double>();
            n.false_weight = j.at("w_false").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(where + ": " + e.what());
    }
    if (n.rule) {
        n.true_child = static_cast<std::int32_t>(node_from_json(j.at("true"), t, where));
        n.false_child = static_cast<std::int32_t>(node_from_json(j.at("false"), t, where));
    }
    t.nodes[idx] = n;
    return idx;
}

}  // namespace detail

inline nlohmann::json to_json(const DecisionTree& t) { return detail::node_to_json(t, 0); }

inline DecisionTree tree_from_json(const nlohmann::json& j, const std::string& where = "tree") {
    DecisionTree t;
    t.nodes.clear();
    detail::node_from_json(j, t, where);
    return t;
}

inline nlohmann::json to_json(const FeatureMetadata& m) {
    nlohmann::json domains = nlohmann::json::object();
    nlohmann::json shared = nlohmann::json::array();
    for (Feature f : kFeatures) {
        domains[std::string(to_string(f))] = {m.domain_of(f).lo, m.domain_of(f).hi};
        if (m.is_shared(f)) shared.push_back(to_string(f));
    }
    return {{"distance_cap", m.distance_cap}, {"speed_cap", m.speed_cap}, {"domains", domains}, {"shared", shared}};
}

inline FeatureMetadata metadata_from_json(const nlohmann::json& j) {
    FeatureMetadata m;
    try {
        m.distance_cap = j.value("distance_cap", m.distance_cap);
        m.speed_cap = j.value("speed_cap", m.speed_cap);
        if (j.contains("domains")) {
            for (const auto& [name, range] : j.at("domains").items()) {
                auto f = feature_from_string(name);
                if (!f) throw InputError("metadata: unknown feature '" + name + "'");
                m.domain[index_of(*f)] = {range.at(0).get<double>(), range.at(1).get<double>()};
            }
        }
        if (j.contains("shared")) {
            m.shared.fill(false);
            for (const auto& name : j.at("shared")) {
                auto f = feature_from_string(name.get<std::string>());
                if (!f) throw InputError("metadata: unknown feature '" + name.get<std::string>() + "'");
                m.shared[index_of(*f)] = true;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("metadata: ") + e.what());
    }
    return m;
}

inline nlohmann::json to_json(const GoalModel& m) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [key, prior] : m.priors) {
        nlohmann::json jp = {{"goal", key.goal}, {"type", to_string(key.type)}, {"prior", prior}};
        if (const DecisionTree* t = m.tree_for(key)) jp["tree"] = to_json(*t);
        pairs.push_back(jp);
    }
    for (const auto& [key, tree] : m.trees) {
        if (m.priors.count(key)) continue;
        pairs.push_back({{"goal", key.goal}, {"type", to_string(key.type)}, {"tree", to_json(tree)}});
    }
    return {{"pairs", pairs}, {"metadata", to_json(m.metadata)}};
}

inline GoalModel model_from_json(const nlohmann::json& j) {
    GoalModel m;
    if (!j.is_object() || !j.contains("pairs")) throw InputError("model: expected object with 'pairs'");
    for (const auto& jp : j.at("pairs")) {
        PairKey key;
        try {
            key.goal = jp.at("goal").get<std::string>();
            key.type = goal_type_from_string(jp.at("type").get<std::string>());
            if (jp.contains("prior")) m.priors[key] = jp.at("prior").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("model pair: ") + e.what());
        }
        if (jp.contains("tree")) m.trees[key] = tree_from_json(jp.at("tree"), to_string(key));
    }
    if (j.contains("metadata")) m.metadata = metadata_from_json(j.at("metadata"));
    validate_model(m);
    return m;
}

inline void save_model(const GoalModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write model file '" + path + "'");
    // nlohmann serialises doubles with round-trip precision (17 significant digits).
    out << to_json(m).dump(1) << '\n';
}

inline GoalModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace grit
