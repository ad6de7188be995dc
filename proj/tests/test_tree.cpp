#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "grit/tree.hpp"

using namespace grit;
using Catch::Approx;

namespace {

// Class-weighted likelihood written with explicit weights w = N / N_class.
double direct_likelihood(double ng, double no, double tg, double to, double alpha) {
    ng += alpha;
    no += alpha;
    tg += alpha;
    to += alpha;
    const double n = tg + to;
    const double wg = n / tg;
    const double wo = n / to;
    return wg * ng / (wg * ng + wo * no);
}

TreeNode leaf(double l) {
    TreeNode n;
    n.likelihood = l;
    return n;
}

// Root splits on in_correct_lane; both children split on speed < 5.
DecisionTree depth_two(double lt, double lf, double ltt, double ltf, double lft, double lff) {
    DecisionTree t;
    t.nodes.assign(7, TreeNode{});
    t.nodes[0].rule = DecisionRule{Feature::in_correct_lane, RuleKind::boolean_literal, 0.0};
    t.nodes[0].true_child = 1;
    t.nodes[0].false_child = 4;
    t.nodes[1] = leaf(lt);
    t.nodes[1].rule = DecisionRule{Feature::speed, RuleKind::threshold, 5.0};
    t.nodes[1].true_child = 2;
    t.nodes[1].false_child = 3;
    t.nodes[2] = leaf(ltt);
    t.nodes[3] = leaf(ltf);
    t.nodes[4] = leaf(lf);
    t.nodes[4].rule = DecisionRule{Feature::speed, RuleKind::threshold, 5.0};
    t.nodes[4].true_child = 5;
    t.nodes[4].false_child = 6;
    t.nodes[5] = leaf(lft);
    t.nodes[6] = leaf(lff);
    refresh_edge_weights(t);
    return t;
}

FeatureValues values(bool lane, double speed) {
    FeatureValues x{};
    x[index_of(Feature::in_correct_lane)] = lane ? 1.0 : 0.0;
    x[index_of(Feature::speed)] = speed;
    return x;
}

GoalModel two_pair_model() {
    GoalModel m;
    m.trees[{"G1", GoalType::straight_on}] = depth_two(0.75, 0.15, 0.8, 0.7, 0.1, 0.2);
    m.trees[{"G2", GoalType::turn_left}] = DecisionTree{};
    m.priors[{"G1", GoalType::straight_on}] = 0.7;
    m.priors[{"G2", GoalType::turn_left}] = 0.3;
    return m;
}

std::string validation_error(const GoalModel& m) {
    try {
        validate_model(m);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("node likelihood matches the weighted formula") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> count(0, 500);
    std::uniform_real_distribution<double> alpha(0.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double tg = count(rng) + 1, to = count(rng) + 1;
        const double ng = std::uniform_int_distribution<int>(0, static_cast<int>(tg))(rng);
        const double no = std::uniform_int_distribution<int>(0, static_cast<int>(to))(rng);
        const double a = i % 5 == 0 ? 0.0 : alpha(rng);
        if (ng + no + 2 * a == 0.0) continue;
        REQUIRE(*node_likelihood(ng, no, tg, to, a) == Approx(direct_likelihood(ng, no, tg, to, a)).margin(1e-12));
    }
}

TEST_CASE("hand-computed node likelihood") {
    CHECK(*node_likelihood(9, 5, 90, 10, 0.0) == Approx(1.0 / 6.0).margin(1e-15));
    CHECK(*node_likelihood(0, 7, 90, 10, 0.0) == 0.0);
    CHECK_FALSE(node_likelihood(0, 0, 90, 10, 0.0));
    CHECK(*node_likelihood(0, 0, 90, 10, 1.0) == Approx(direct_likelihood(0, 0, 90, 10, 1.0)));
}

TEST_CASE("root likelihood is exactly one half") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> count(1, 10000);
    std::uniform_real_distribution<double> alpha(0.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
        const double tg = count(rng), to = count(rng), a = alpha(rng);
        REQUIRE(*node_likelihood(tg, to, tg, to, a) == 0.5);
    }
}

TEST_CASE("likelihoods lie strictly inside (0, 1) with smoothing") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> count(0, 100);
    for (int i = 0; i < 1000; ++i) {
        const double tg = count(rng) + 1, to = count(rng) + 1;
        const double l = *node_likelihood(std::min<double>(count(rng), tg), std::min<double>(count(rng), to), tg, to, 0.5);
        REQUIRE(l > 0.0);
        REQUIRE(l < 1.0);
    }
}

TEST_CASE("edge weights") {
    const auto same = edge_weights(0.5, 0.5, 0.5);
    CHECK(same.true_weight == 1.0);
    CHECK(same.false_weight == 1.0);
    CHECK(edge_weights(0.5, 0.985, 0.2).true_weight == Approx(1.97));
    CHECK_THROWS(edge_weights(0.0, 0.1, 0.1));
}

TEST_CASE("published explanation path multiplies out to its leaf") {
    // Root 0.5, in_correct_lane true to 0.985, then angle_in_lane >= 0.05 to 0.291.
    DecisionTree t;
    t.nodes.assign(5, TreeNode{});
    t.nodes[0].rule = DecisionRule{Feature::in_correct_lane, RuleKind::boolean_literal, 0.0};
    t.nodes[0].true_child = 1;
    t.nodes[0].false_child = 4;
    t.nodes[1] = leaf(0.985);
    t.nodes[1].rule = DecisionRule{Feature::angle_in_lane, RuleKind::threshold, 0.05};
    t.nodes[1].true_child = 2;
    t.nodes[1].false_child = 3;
    t.nodes[2] = leaf(0.99);
    t.nodes[3] = leaf(0.291);
    t.nodes[4] = leaf(0.1);
    refresh_edge_weights(t);
    FeatureValues x = values(true, 0.0);
    x[index_of(Feature::angle_in_lane)] = 0.06;
    const Traversal tr = traverse(t, x);
    CHECK(tr.leaf == 3);
    CHECK(tr.likelihood == 0.291);
    CHECK(std::round(t.nodes[0].true_weight * 100) / 100 == Approx(1.97));
    CHECK(std::round(t.nodes[1].false_weight * 100) / 100 == Approx(0.30));
    CHECK(path_product(t, tr) == Approx(0.291).margin(1e-12));
    const std::string text = explain(t, tr, "G1");
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("angle_in_lane >= 0.05"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("in_correct_lane (1.97)"));
}

TEST_CASE("single leaf returns the root value everywhere") {
    const DecisionTree t;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-100.0, 100.0);
    for (int i = 0; i < 100; ++i) {
        FeatureValues x;
        for (auto& v : x) v = d(rng);
        REQUIRE(traverse(t, x).likelihood == 0.5);
        REQUIRE(traverse(t, x).path.empty());
    }
}

TEST_CASE("threshold rules take the true branch iff x < c") {
    const DecisionRule r{Feature::speed, RuleKind::threshold, 5.0};
    CHECK(r.test(values(false, 4.999)));
    CHECK_FALSE(r.test(values(false, 5.0)));
    CHECK_FALSE(r.test(values(false, 7.0)));
    const DecisionRule b{Feature::in_correct_lane, RuleKind::boolean_literal, 0.0};
    CHECK(b.test(values(true, 0.0)));
    CHECK_FALSE(b.test(values(false, 0.0)));
}

TEST_CASE("all-false path of a depth-two tree") {
    const DecisionTree t = depth_two(0.75, 0.15, 0.8, 0.7, 0.1, 0.2);
    const Traversal tr = traverse(t, values(false, 9.0));
    CHECK(tr.leaf == 6);
    REQUIRE(tr.path.size() == 2);
    CHECK_FALSE(tr.path[0].branch);
    CHECK_FALSE(tr.path[1].branch);
    CHECK(0.5 * t.nodes[0].false_weight * t.nodes[4].false_weight == Approx(0.2).margin(1e-12));
    CHECK(tr.likelihood == 0.2);
}

TEST_CASE("weight products telescope to every leaf") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> count(0, 60);
    for (int trial = 0; trial < 200; ++trial) {
        // Counts at the six non-root nodes, consistent with their parents.
        const double ttp = count(rng), ttn = count(rng), tfp = count(rng), tfn = count(rng);
        const double ftp = count(rng), ftn = count(rng), ffp = count(rng), ffn = count(rng);
        const double tp = ttp + tfp + ftp + ffp, tn = ttn + tfn + ftn + ffn;
        if (tp == 0 || tn == 0) continue;
        auto L = [&](double p, double n) { return *node_likelihood(p, n, tp, tn, 1.0); };
        const DecisionTree t = depth_two(L(ttp + tfp, ttn + tfn), L(ftp + ffp, ftn + ffn), L(ttp, ttn), L(tfp, tfn),
                                         L(ftp, ftn), L(ffp, ffn));
        REQUIRE(tree_violations(t).empty());
        for (bool lane : {true, false})
            for (double speed : {1.0, 9.0}) {
                const Traversal tr = traverse(t, values(lane, speed));
                REQUIRE(path_product(t, tr) == Approx(t.nodes[tr.leaf].likelihood).margin(1e-9));
            }
    }
}

TEST_CASE("model JSON round trip") {
    const GoalModel m = two_pair_model();
    CHECK(model_from_json(to_json(m)) == m);
    const auto path = std::filesystem::temp_directory_path() / "grit_test_tree_model.json";
    save_model(m, path.string());
    CHECK(load_model(path.string()) == m);
    std::filesystem::remove(path);
}

TEST_CASE("likelihood and weight mismatch is reported per node") {
    GoalModel m = two_pair_model();
    m.trees.begin()->second.nodes[4].likelihood = 0.3;
    const std::string err = validation_error(m);
    CHECK_THAT(err, Catch::Matchers::ContainsSubstring("G1:straight_on: node 0"));
    CHECK_THAT(err, Catch::Matchers::ContainsSubstring("node 4"));
    auto j = to_json(two_pair_model());
    j["pairs"][0]["tree"]["true"]["w_true"] = 2.0;
    CHECK_THROWS_AS(model_from_json(j), InputError);
}

TEST_CASE("priors must sum to one") {
    GoalModel m = two_pair_model();
    m.priors[{"G2", GoalType::turn_left}] = 0.28;
    CHECK_THAT(validation_error(m), Catch::Matchers::ContainsSubstring("priors sum to 0.98"));
}

TEST_CASE("structural errors are rejected") {
    GoalModel root = two_pair_model();
    root.trees.begin()->second.nodes[0].likelihood = 0.6;
    CHECK_THAT(validation_error(root), Catch::Matchers::ContainsSubstring("not 0.5"));
    GoalModel boolean = two_pair_model();
    boolean.trees.begin()->second.nodes[1].rule->kind = RuleKind::boolean_literal;
    CHECK_THAT(validation_error(boolean), Catch::Matchers::ContainsSubstring("boolean rule on scalar"));
    auto j = to_json(two_pair_model());
    j["pairs"][0]["tree"]["rule"]["feature"] = "colour";
    CHECK_THROWS_AS(model_from_json(j), InputError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), InputError);
}

TEST_CASE("tree shape queries") {
    const DecisionTree t = depth_two(0.75, 0.15, 0.8, 0.7, 0.1, 0.2);
    CHECK(t.depth() == 2);
    CHECK(t.leaf_count() == 4);
    CHECK(t.size() == 7);
    CHECK(DecisionTree{}.depth() == 0);
}
