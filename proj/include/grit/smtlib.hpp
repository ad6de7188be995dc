#pragma once

// SMT-LIB2 (QF_LRA) export of a verification problem. The script asserts the
// antecedent and the negated consequent; unsat means the proposition holds.

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "grit/verification.hpp"

namespace grit {

namespace smt {

inline std::string real(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite constant in SMT export");
    const bool neg = v < 0.0;
    char buf[512];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, neg ? -v : v, std::chars_format::fixed);
    if (ec != std::errc{}) throw std::runtime_error("SMT export: cannot format constant");
    std::string s(buf, end);
    if (s.find('.') == std::string::npos) s += ".0";
    return neg ? "(- " + s + ")" : s;
}

inline std::string symbol(const std::string& name) { return "|" + name + "|"; }

inline std::string feature_symbol(const VerificationProblem& vp, Feature f, std::size_t pair) {
    std::string name(to_string(f));
    if (!vp.meta.is_shared(f)) name += "@" + to_string(vp.pairs[pair]);
    return symbol(name);
}

inline std::string node_symbol(const VerificationProblem& vp, std::size_t pair, std::size_t node) {
    return symbol("N@" + to_string(vp.pairs[pair]) + "#" + std::to_string(node));
}

inline std::string likelihood_symbol(const VerificationProblem& vp, std::size_t pair) {
    return symbol("L@" + to_string(vp.pairs[pair]));
}

inline std::string bound(const std::string& x, double v, bool upper, bool open) {
    const char* op = upper ? (open ? "<" : "<=") : (open ? ">" : ">=");
    return std::string("(") + op + " " + x + " " + real(v) + ")";
}

inline std::string interval_constraint(const std::string& x, Feature f, const Interval& iv) {
    std::vector<std::string> parts;
    if (std::isfinite(iv.lo)) parts.push_back(bound(x, iv.lo, false, iv.lo_open));
    if (std::isfinite(iv.hi)) parts.push_back(bound(x, iv.hi, true, iv.hi_open));
    if (is_boolean(f)) parts.push_back("(or (= " + x + " 0.0) (= " + x + " 1.0))");
    if (parts.empty()) return "true";
    if (parts.size() == 1) return parts.front();
    std::string s = "(and";
    for (const auto& p : parts) s += " " + p;
    return s + ")";
}

inline std::string rule_formula(const VerificationProblem& vp, const DecisionRule& r, std::size_t pair) {
    const std::string x = feature_symbol(vp, r.feature, pair);
    if (r.kind == RuleKind::boolean_literal) return "(not (= " + x + " 0.0))";
    return "(< " + x + " " + real(r.threshold) + ")";
}

/// Sum of prior-weighted likelihoods over the pairs of one goal.
inline std::string goal_mass(const VerificationProblem& vp, std::size_t goal) {
    std::vector<std::string> terms;
    for (std::size_t p = 0; p < vp.pairs.size(); ++p)
        if (vp.goal_of_pair[p] == goal) terms.push_back("(* " + real(vp.priors[p]) + " " + likelihood_symbol(vp, p) + ")");
    if (terms.size() == 1) return terms.front();
    std::string s = "(+";
    for (const auto& t : terms) s += " " + t;
    return s + ")";
}

inline std::string total_mass(const VerificationProblem& vp) {
    std::string s = "(+";
    for (std::size_t g = 0; g < vp.goals.size(); ++g) s += " " + goal_mass(vp, g);
    return vp.goals.size() == 1 ? goal_mass(vp, 0) : s + ")";
}

/// The consequent as linear real arithmetic: posterior ratios are
/// cross-multiplied by the positive normaliser.
inline std::string consequent_formula(const VerificationProblem& vp) {
    return std::visit(
        [&](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ArgmaxIs>) {
                const std::size_t a = vp.goal_index(k.goal);
                std::vector<std::string> parts;
                for (std::size_t g = 0; g < vp.goals.size(); ++g)
                    if (g != a) parts.push_back("(> " + goal_mass(vp, a) + " " + goal_mass(vp, g) + ")");
                if (parts.empty()) return "true";
                if (parts.size() == 1) return parts.front();
                std::string s = "(and";
                for (const auto& p : parts) s += " " + p;
                return s + ")";
            } else if constexpr (std::is_same_v<K, ProbGreater>) {
                return "(> " + goal_mass(vp, vp.goal_index(k.goal_a)) + " " + goal_mass(vp, vp.goal_index(k.goal_b)) +
                       ")";
            } else {
                return "(>= " + goal_mass(vp, vp.goal_index(k.goal)) + " (* " + real(k.threshold) + " " +
                       total_mass(vp) + "))";
            }
        },
        vp.consequent);
}

}  // namespace smt

inline void write_smtlib(std::ostream& os, const GoalModel& model, const Proposition& prop) {
    const VerificationProblem vp = resolve(model, prop);
    const std::size_t n = vp.pairs.size();
    os << "; proposition: " << (prop.name.empty() ? "(unnamed)" : prop.name) << '\n';
    os << "; consequent: " << describe(prop.consequent) << '\n';
    os << "(set-logic QF_LRA)\n";

    for (Feature f : kFeatures) {
        if (vp.meta.is_shared(f)) {
            const auto x = smt::feature_symbol(vp, f, 0);
            os << "(declare-const " << x << " Real)\n";
            os << "(assert " << smt::interval_constraint(x, f, vp.shared_box[index_of(f)]) << ")\n";
        } else {
            for (std::size_t p = 0; p < n; ++p) {
                const auto x = smt::feature_symbol(vp, f, p);
                os << "(declare-const " << x << " Real)\n";
                os << "(assert " << smt::interval_constraint(x, f, vp.pair_boxes[p][index_of(f)]) << ")\n";
            }
        }
    }

    for (std::size_t p = 0; p < n; ++p) {
        const DecisionTree& t = *vp.trees[p];
        const auto lsym = smt::likelihood_symbol(vp, p);
        os << "; tree " << to_string(vp.pairs[p]) << '\n';
        os << "(declare-const " << lsym << " Real)\n";
        for (std::size_t i = 0; i < t.nodes.size(); ++i) os << "(declare-const " << smt::node_symbol(vp, p, i) << " Bool)\n";
        os << "(assert " << smt::node_symbol(vp, p, 0) << ")\n";
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            const TreeNode& node = t.nodes[i];
            const auto ni = smt::node_symbol(vp, p, i);
            if (node.is_leaf()) {
                os << "(assert (=> " << ni << " (= " << lsym << " " << smt::real(node.likelihood) << ")))\n";
                continue;
            }
            const auto d = smt::rule_formula(vp, *node.rule, p);
            os << "(assert (= " << smt::node_symbol(vp, p, static_cast<std::size_t>(node.true_child)) << " (and " << ni
               << " " << d << ")))\n";
            os << "(assert (= " << smt::node_symbol(vp, p, static_cast<std::size_t>(node.false_child)) << " (and " << ni
               << " (not " << d << "))))\n";
        }
    }

    os << "; negated consequent\n";
    os << "(assert (not " << smt::consequent_formula(vp) << "))\n";
    os << "(check-sat)\n(get-model)\n";
}

inline std::string export_smtlib(const GoalModel& model, const Proposition& prop) {
    std::ostringstream os;
    write_smtlib(os, model, prop);
    return os.str();
}

inline void export_smtlib(const GoalModel& model, const Proposition& prop, const std::string& path) {
    const std::string text = export_smtlib(model, prop);
    std::ofstream out(path);
    if (!out) throw InputError("cannot write SMT-LIB2 file '" + path + "'");
    out << text;
    if (!out) throw InputError("failed writing SMT-LIB2 file '" + path + "'");
}

}  // namespace grit
