#pragma once

// Exhaustive verification of propositions over a goal model. Every rule tests
// a single feature, so each root-leaf path is an axis-aligned box with a
// constant likelihood; a proposition is decided by enumerating one leaf per
// in-scope pair and checking the posterior of every feasible combination.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "grit/common.hpp"
#include "grit/features.hpp"
#include "grit/inference.hpp"
#include "grit/tree.hpp"

namespace grit {

// ---------------------------------------------------------------------------
// Intervals with explicit open/closed ends

struct Interval {
    double lo{-std::numeric_limits<double>::infinity()};
    double hi{std::numeric_limits<double>::infinity()};
    bool lo_open{false};
    bool hi_open{false};

    bool contains(double x) const {
        return (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    }
    bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }

    void tighten_upper(double v, bool open) {
        if (v < hi) {
            hi = v;
            hi_open = open;
        } else if (v == hi) {
            hi_open = hi_open || open;
        }
    }
    void tighten_lower(double v, bool open) {
        if (v > lo) {
            lo = v;
            lo_open = open;
        } else if (v == lo) {
            lo_open = lo_open || open;
        }
    }
    Interval intersect(const Interval& o) const {
        Interval r = *this;
        r.tighten_lower(o.lo, o.lo_open);
        r.tighten_upper(o.hi, o.hi_open);
        return r;
    }

    friend bool operator==(const Interval&, const Interval&) = default;
};

inline constexpr double kOpenBoundaryOffset = 1e-6;

/// Canonical point of a non-empty interval: the midpoint, moved inside when
/// an open end excludes it; unbounded sides use the finite bound plus or minus one.
inline double witness_value(const Interval& iv) {
    const bool lo_inf = std::isinf(iv.lo), hi_inf = std::isinf(iv.hi);
    double x;
    if (lo_inf && hi_inf) x = 0.0;
    else if (lo_inf) x = iv.hi - 1.0;
    else if (hi_inf) x = iv.lo + 1.0;
    else x = iv.lo + (iv.hi - iv.lo) / 2.0;
    if (iv.contains(x)) return x;
    for (double cand : {iv.hi - kOpenBoundaryOffset, iv.lo + kOpenBoundaryOffset})
        if (iv.contains(cand)) return cand;
    for (double cand : {std::nextafter(iv.hi, iv.lo), std::nextafter(iv.lo, iv.hi)})
        if (iv.contains(cand)) return cand;
    return x;
}

/// Feasibility per feature: boolean dimensions only admit 0 and 1.
inline bool feasible(Feature f, const Interval& iv) {
    if (iv.empty()) return false;
    if (is_boolean(f)) return iv.contains(0.0) || iv.contains(1.0);
    return true;
}

inline double witness_value(Feature f, const Interval& iv) {
    if (is_boolean(f)) return iv.contains(1.0) ? 1.0 : 0.0;
    return witness_value(iv);
}

using Box = std::array<Interval, kFeatureCount>;

inline Box domain_box(const FeatureMetadata& meta) {
    Box b;
    for (Feature f : kFeatures) {
        const auto& d = meta.domain_of(f);
        b[index_of(f)] = {d.lo, d.hi, false, FeatureMetadata::upper_open(f)};
    }
    return b;
}

inline bool feasible(const Box& b) {
    for (Feature f : kFeatures)
        if (!feasible(f, b[index_of(f)])) return false;
    return true;
}

inline bool contains(const Box& b, const FeatureValues& x) {
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (!b[i].contains(x[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Paths

struct PathBox {
    Box box;
    double likelihood{kRootLikelihood};
    std::size_t leaf{0};
};

inline void apply_rule(Box& b, const DecisionRule& r, bool branch) {
    Interval& iv = b[index_of(r.feature)];
    if (r.kind == RuleKind::boolean_literal) {
        // v != 0 on the true branch; booleans only take 0 or 1
        if (branch) iv.tighten_lower(0.0, true);
        else iv = iv.intersect({0.0, 0.0, false, false});
    } else if (branch) {
        iv.tighten_upper(r.threshold, true);
    } else {
        iv.tighten_lower(r.threshold, false);
    }
}

/// One box per leaf, in preorder.
inline std::vector<PathBox> enumerate_paths(const DecisionTree& tree, const FeatureMetadata& meta = {}) {
    std::vector<PathBox> out;
    auto rec = [&](auto&& self, std::size_t i, Box box) -> void {
        const TreeNode& n = tree.nodes[i];
        if (n.is_leaf()) {
            out.push_back({box, n.likelihood, i});
            return;
        }
        Box t = box, f = box;
        apply_rule(t, *n.rule, true);
        apply_rule(f, *n.rule, false);
        self(self, static_cast<std::size_t>(n.true_child), t);
        self(self, static_cast<std::size_t>(n.false_child), f);
    };
    rec(rec, 0, domain_box(meta));
    return out;
}

// ---------------------------------------------------------------------------
// Propositions

enum class Comparison { less, less_equal, greater, greater_equal, equal };

inline std::string_view to_string(Comparison c) {
    switch (c) {
        case Comparison::less: return "<";
        case Comparison::less_equal: return "<=";
        case Comparison::greater: return ">";
        case Comparison::greater_equal: return ">=";
        case Comparison::equal: return "=";
    }
    return "?";
}

inline Comparison comparison_from_string(std::string_view s) {
    if (s == "<") return Comparison::less;
    if (s == "<=" || s == "≤") return Comparison::less_equal;
    if (s == ">") return Comparison::greater;
    if (s == ">=" || s == "≥") return Comparison::greater_equal;
    if (s == "=" || s == "==") return Comparison::equal;
    throw InputError("unknown comparison '" + std::string(s) + "'");
}

/// One antecedent conjunct. A goal restricts a per-goal feature to that goal's
/// pairs; without one the bound applies to every copy.
struct Atom {
    Feature feature{Feature::speed};
    std::optional<std::string> goal;
    Comparison op{Comparison::equal};
    double value{0.0};

    Interval interval() const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        switch (op) {
            case Comparison::less: return {-inf, value, false, true};
            case Comparison::less_equal: return {-inf, value, false, false};
            case Comparison::greater: return {value, inf, true, false};
            case Comparison::greater_equal: return {value, inf, false, false};
            case Comparison::equal: return {value, value, false, false};
        }
        return {};
    }
};

struct ArgmaxIs {
    std::string goal;
};
struct ProbGreater {
    std::string goal_a;
    std::string goal_b;
};
struct ProbAtLeast {
    std::string goal;
    double threshold{0.0};
};
using Consequent = std::variant<ArgmaxIs, ProbGreater, ProbAtLeast>;

struct Proposition {
    std::string name;
    std::vector<PairKey> scope;  ///< empty means every pair of the model
    std::vector<Atom> antecedent;
    Consequent consequent;
};

inline std::string describe(const Consequent& c) {
    std::ostringstream os;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ArgmaxIs>) os << "argmax = " << k.goal;
            else if constexpr (std::is_same_v<K, ProbGreater>) os << "P(" << k.goal_a << ") > P(" << k.goal_b << ")";
            else os << "P(" << k.goal << ") >= " << k.threshold;
        },
        c);
    return os.str();
}

inline PairKey pair_key_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        const auto colon = s.rfind(':');
        if (colon == std::string::npos) throw InputError("scope entry '" + s + "' must be goal:type");
        return {s.substr(0, colon), goal_type_from_string(s.substr(colon + 1))};
    }
    return {j.at("goal").get<std::string>(), goal_type_from_string(j.at("type").get<std::string>())};
}

inline nlohmann::json to_json(const Proposition& p) {
    nlohmann::json scope = nlohmann::json::array();
    for (const auto& k : p.scope) scope.push_back({{"goal", k.goal}, {"type", to_string(k.type)}});
    nlohmann::json ante = nlohmann::json::array();
    for (const auto& a : p.antecedent) {
        nlohmann::json j{{"feature", to_string(a.feature)}, {"op", to_string(a.op)}};
        if (is_boolean(a.feature)) j["value"] = a.value != 0.0;
        else j["value"] = a.value;
        if (a.goal) j["goal"] = *a.goal;
        else j["shared"] = true;
        ante.push_back(j);
    }
    nlohmann::json cons;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ArgmaxIs>) cons = {{"kind", "argmax"}, {"goal", k.goal}};
            else if constexpr (std::is_same_v<K, ProbGreater>)
                cons = {{"kind", "greater"}, {"goal_a", k.goal_a}, {"goal_b", k.goal_b}};
            else cons = {{"kind", "at_least"}, {"goal", k.goal}, {"threshold", k.threshold}};
        },
        p.consequent);
    nlohmann::json out{{"scope", scope}, {"antecedent", ante}, {"consequent", cons}};
    if (!p.name.empty()) out["name"] = p.name;
    return out;
}

inline Proposition proposition_from_json(const nlohmann::json& j) {
    try {
        Proposition p;
        p.name = j.value("name", std::string{});
        if (j.contains("scope"))
            for (const auto& s : j.at("scope")) p.scope.push_back(pair_key_from_json(s));
        if (j.contains("antecedent")) {
            for (const auto& a : j.at("antecedent")) {
                Atom atom;
                const auto fname = a.at("feature").get<std::string>();
                const auto f = feature_from_string(fname);
                if (!f) throw InputError("unknown feature '" + fname + "'");
                atom.feature = *f;
                if (a.contains("goal")) atom.goal = a.at("goal").get<std::string>();
                atom.op = comparison_from_string(a.value("op", std::string{"="}));
                const auto& v = a.at("value");
                atom.value = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>();
                if (is_boolean(atom.feature) &&
                    (atom.op != Comparison::equal || (atom.value != 0.0 && atom.value != 1.0)))
                    throw InputError("boolean feature '" + fname + "' only supports '=' with true or false");
                if (!std::isfinite(atom.value)) throw InputError("non-finite bound on '" + fname + "'");
                p.antecedent.push_back(atom);
            }
        }
        const auto& c = j.at("consequent");
        const auto kind = c.at("kind").get<std::string>();
        if (kind == "argmax") {
            p.consequent = ArgmaxIs{c.at("goal").get<std::string>()};
        } else if (kind == "greater") {
            p.consequent = ProbGreater{c.at("goal_a").get<std::string>(), c.at("goal_b").get<std::string>()};
        } else if (kind == "at_least") {
            const double t = c.at("threshold").get<double>();
            if (!(t >= 0.0 && t <= 1.0)) throw InputError("threshold must lie in [0, 1]");
            p.consequent = ProbAtLeast{c.at("goal").get<std::string>(), t};
        } else {
            throw InputError("unknown consequent kind '" + kind + "'");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed proposition: ") + e.what());
    }
}

inline Proposition load_proposition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open proposition file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed proposition '" + path + "': " + e.what());
    }
    return proposition_from_json(j);
}

// ---------------------------------------------------------------------------
// Resolved verification problem

/// A proposition bound to a model: canonical pair order, scoped priors,
/// antecedent boxes and the consequent as goal indices.
struct VerificationProblem {
    std::vector<PairKey> pairs;
    std::vector<const DecisionTree*> trees;
    std::vector<double> priors;  ///< renormalised over the scope
    std::vector<std::string> goals;
    std::vector<std::size_t> goal_of_pair;
    Box shared_box;
    std::vector<Box> pair_boxes;
    Consequent consequent;
    FeatureMetadata meta;

    std::size_t goal_index(const std::string& g) const {
        auto it = std::find(goals.begin(), goals.end(), g);
        if (it == goals.end()) throw InputError("goal '" + g + "' is not in the proposition scope");
        return static_cast<std::size_t>(it - goals.begin());
    }
};

inline VerificationProblem resolve(const GoalModel& model, const Proposition& prop) {
    VerificationProblem vp;
    vp.meta = model.metadata;
    vp.consequent = prop.consequent;
    if (prop.scope.empty()) {
        for (const auto& [k, t] : model.trees) vp.pairs.push_back(k);
    } else {
        vp.pairs = prop.scope;
        std::sort(vp.pairs.begin(), vp.pairs.end());
        vp.pairs.erase(std::unique(vp.pairs.begin(), vp.pairs.end()), vp.pairs.end());
    }
    if (vp.pairs.empty()) throw InputError("proposition scope is empty");
    double mass = 0.0;
    for (const auto& k : vp.pairs) {
        const DecisionTree* t = model.tree_for(k);
        if (!t) throw InputError("scope pair '" + to_string(k) + "' has no tree in the model");
        vp.trees.push_back(t);
        vp.priors.push_back(prior_for(model.priors, k));
        mass += vp.priors.back();
        if (std::find(vp.goals.begin(), vp.goals.end(), k.goal) == vp.goals.end()) vp.goals.push_back(k.goal);
        vp.goal_of_pair.push_back(
            static_cast<std::size_t>(std::find(vp.goals.begin(), vp.goals.end(), k.goal) - vp.goals.begin()));
    }
    for (double& p : vp.priors) p = mass > 0.0 ? p / mass : 1.0 / static_cast<double>(vp.priors.size());

    vp.shared_box = domain_box(vp.meta);
    vp.pair_boxes.assign(vp.pairs.size(), domain_box(vp.meta));
    for (const auto& a : prop.antecedent) {
        const std::size_t fi = index_of(a.feature);
        if (a.goal) vp.goal_index(*a.goal);
        if (vp.meta.is_shared(a.feature)) {
            vp.shared_box[fi] = vp.shared_box[fi].intersect(a.interval());
            continue;
        }
        for (std::size_t p = 0; p < vp.pairs.size(); ++p)
            if (!a.goal || vp.pairs[p].goal == *a.goal)
                vp.pair_boxes[p][fi] = vp.pair_boxes[p][fi].intersect(a.interval());
    }
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ProbGreater>) {
                vp.goal_index(k.goal_a);
                vp.goal_index(k.goal_b);
            } else {
                vp.goal_index(k.goal);
            }
        },
        vp.consequent);
    return vp;
}

/// Goal probabilities (summed over each goal's pairs) for fixed likelihoods.
inline std::vector<double> goal_probabilities(const VerificationProblem& vp, std::span<const double> likelihoods,
                                              std::vector<double>* pair_posterior = nullptr) {
    const auto post = posterior(likelihoods, vp.priors);
    std::vector<double> g(vp.goals.size(), 0.0);
    for (std::size_t i = 0; i < post.size(); ++i) g[vp.goal_of_pair[i]] += post[i];
    if (pair_posterior) *pair_posterior = post;
    return g;
}

inline bool consequent_holds(const VerificationProblem& vp, std::span<const double> goal_probs) {
    return std::visit(
        [&](const auto& k) -> bool {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ArgmaxIs>) {
                const std::size_t a = vp.goal_index(k.goal);
                for (std::size_t g = 0; g < goal_probs.size(); ++g)
                    if (g != a && !(goal_probs[a] > goal_probs[g])) return false;
                return true;
            } else if constexpr (std::is_same_v<K, ProbGreater>) {
                return goal_probs[vp.goal_index(k.goal_a)] > goal_probs[vp.goal_index(k.goal_b)];
            } else {
                return goal_probs[vp.goal_index(k.goal)] >= k.threshold;
            }
        },
        vp.consequent);
}

/// Whether a concrete per-pair assignment satisfies the antecedent and the
/// shared-feature equalities.
inline bool satisfies_antecedent(const VerificationProblem& vp, std::span<const FeatureValues> x) {
    for (std::size_t p = 0; p < x.size(); ++p) {
        for (Feature f : kFeatures) {
            const std::size_t fi = index_of(f);
            if (vp.meta.is_shared(f)) {
                if (x[p][fi] != x[0][fi] || !vp.shared_box[fi].contains(x[p][fi])) return false;
            } else if (!vp.pair_boxes[p][fi].contains(x[p][fi])) {
                return false;
            }
            if (is_boolean(f) && x[p][fi] != 0.0 && x[p][fi] != 1.0) return false;
        }
    }
    return true;
}

/// Evaluates the proposition at one concrete point through the production
/// traversal and posterior. Returns nullopt when the antecedent does not hold.
inline std::optional<bool> holds_at(const VerificationProblem& vp, std::span<const FeatureValues> x) {
    if (!satisfies_antecedent(vp, x)) return std::nullopt;
    std::vector<double> l;
    for (std::size_t p = 0; p < vp.trees.size(); ++p) l.push_back(traverse(*vp.trees[p], x[p]).likelihood);
    return consequent_holds(vp, goal_probabilities(vp, l));
}

// ---------------------------------------------------------------------------
// Verdicts

enum class VerdictStatus { verified, refuted };

struct Counterexample {
    std::vector<PairKey> pairs;
    std::vector<FeatureValues> values;  ///< witness point, one row per pair
    std::vector<double> likelihoods;
    std::vector<double> probabilities;  ///< per pair
    std::vector<std::string> goals;
    std::vector<double> goal_probabilities;
    std::vector<std::size_t> leaves;
    Box shared_box;                ///< violating region, shared features
    std::vector<Box> pair_boxes;   ///< violating region, per-goal features
};

struct Verdict {
    VerdictStatus status{VerdictStatus::verified};
    std::optional<Counterexample> counterexample;
    std::size_t combinations{0};  ///< feasible leaf combinations checked
};

/// Decides the proposition. Pairs are visited in canonical order and leaves in
/// preorder; the first violating combination supplies the witness.
inline Verdict verify(const GoalModel& model, const Proposition& prop) {
    const VerificationProblem vp = resolve(model, prop);
    const std::size_t n = vp.pairs.size();
    std::vector<std::vector<PathBox>> paths;
    for (const auto* t : vp.trees) paths.push_back(enumerate_paths(*t, vp.meta));

    Verdict verdict;
    std::vector<std::size_t> choice(n);
    std::vector<Box> shared(n + 1), own(n);
    shared[0] = vp.shared_box;
    std::vector<double> l(n);
    bool found = false;

    auto rec = [&](auto&& self, std::size_t k) -> void {
        if (found) return;
        if (k == n) {
            ++verdict.combinations;
            if (!consequent_holds(vp, goal_probabilities(vp, l))) found = true;
            return;
        }
        for (std::size_t j = 0; j < paths[k].size() && !found; ++j) {
            const PathBox& pb = paths[k][j];
            Box s = shared[k], o = vp.pair_boxes[k];
            bool ok = true;
            for (Feature f : kFeatures) {
                const std::size_t fi = index_of(f);
                Interval& target = vp.meta.is_shared(f) ? s[fi] : o[fi];
                target = target.intersect(pb.box[fi]);
                if (!feasible(f, target)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            shared[k + 1] = s;
            own[k] = o;
            choice[k] = j;
            l[k] = pb.likelihood;
            self(self, k + 1);
        }
    };
    rec(rec, 0);
    if (!found) return verdict;

    verdict.status = VerdictStatus::refuted;
    Counterexample cx;
    cx.pairs = vp.pairs;
    cx.goals = vp.goals;
    cx.shared_box = shared[n];
    cx.pair_boxes = own;
    for (std::size_t p = 0; p < n; ++p) {
        FeatureValues x{};
        for (Feature f : kFeatures) {
            const std::size_t fi = index_of(f);
            x[fi] = witness_value(f, vp.meta.is_shared(f) ? shared[n][fi] : own[p][fi]);
        }
        const Traversal t = traverse(*vp.trees[p], x);
        if (t.leaf != paths[p][choice[p]].leaf) throw std::logic_error("witness left its violating box");
        cx.values.push_back(x);
        cx.likelihoods.push_back(t.likelihood);
        cx.leaves.push_back(t.leaf);
    }
    cx.goal_probabilities = goal_probabilities(vp, cx.likelihoods, &cx.probabilities);
    verdict.counterexample = std::move(cx);
    return verdict;
}

// ---------------------------------------------------------------------------
// Reporting

/// Feature rows by goal columns, then likelihood and probability rows.
inline std::string counterexample_table(const Counterexample& cx) {
    std::vector<std::string> header{"Feature"};
    for (const auto& k : cx.pairs) header.push_back(to_string(k));
    std::vector<std::vector<std::string>> rows;
    auto fmt = [](double v, int prec) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(prec) << v;
        return os.str();
    };
    for (Feature f : kFeatures) {
        std::vector<std::string> row{std::string(to_string(f))};
        for (const auto& x : cx.values) {
            const double v = x[index_of(f)];
            row.push_back(is_boolean(f) ? (v != 0.0 ? "true" : "false") : fmt(v, 4));
        }
        rows.push_back(row);
    }
    std::vector<std::string> lrow{"likelihood"}, prow{"probability"};
    for (std::size_t p = 0; p < cx.pairs.size(); ++p) {
        lrow.push_back(fmt(cx.likelihoods[p], 4));
        prow.push_back(fmt(cx.probabilities[p], 4));
    }
    rows.push_back(lrow);
    rows.push_back(prow);

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            os << (c ? " | " : "");
            if (c == 0) os << std::left;
            else os << std::right;
            os << std::setw(static_cast<int>(width[c])) << r[c];
        }
        os << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (auto w : width) total += w + 3;
    os << std::string(total - 3, '-') << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i + 2 == rows.size()) os << std::string(total - 3, '-') << '\n';
        line(rows[i]);
    }
    return os.str();
}

inline nlohmann::json to_json(const Interval& iv) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    return {{"lo", num(iv.lo)}, {"hi", num(iv.hi)}, {"lo_open", iv.lo_open}, {"hi_open", iv.hi_open}};
}

inline nlohmann::json to_json(const Verdict& v) {
    nlohmann::json out{{"status", v.status == VerdictStatus::verified ? "verified" : "refuted"},
                       {"combinations", v.combinations}};
    if (!v.counterexample) return out;
    const Counterexample& cx = *v.counterexample;
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t p = 0; p < cx.pairs.size(); ++p) {
        nlohmann::json feats, box;
        for (Feature f : kFeatures) {
            const double x = cx.values[p][index_of(f)];
            if (is_boolean(f)) feats[std::string(to_string(f))] = x != 0.0;
            else feats[std::string(to_string(f))] = x;
        }
        pairs.push_back({{"goal", cx.pairs[p].goal},
                         {"type", to_string(cx.pairs[p].type)},
                         {"features", feats},
                         {"likelihood", cx.likelihoods[p]},
                         {"probability", cx.probabilities[p]},
                         {"leaf", cx.leaves[p]}});
    }
    nlohmann::json goals;
    for (std::size_t g = 0; g < cx.goals.size(); ++g) goals[cx.goals[g]] = cx.goal_probabilities[g];
    nlohmann::json region = nlohmann::json::array();
    for (std::size_t p = 0; p < cx.pairs.size(); ++p) {
        nlohmann::json r;
        for (Feature f : kFeatures) {
            const std::size_t fi = index_of(f);
            r[std::string(to_string(f))] = to_json(cx.pair_boxes[p][fi].intersect(cx.shared_box[fi]));
        }
        region.push_back(r);
    }
    out["counterexample"] = {{"pairs", pairs}, {"goal_probabilities", goals}, {"region", region}};
    return out;
}

}  // namespace grit
