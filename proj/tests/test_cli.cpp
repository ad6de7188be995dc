#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixture.hpp"

namespace fs = std::filesystem;
using namespace grit;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("grit_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run grit_cli(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
    const std::string cmd = std::string(GRIT_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

std::string path(const fs::path& p) { return "'" + p.string() + "'"; }

std::string data(const std::string& rel) { return path(fixture::data_path(rel)); }

// Generates once: 50 vehicles of seed 7 in two episode files.
const fs::path& synth_dir() {
    static const fs::path dir = [] {
        const fs::path d = work_dir() / "synth";
        const Run r = grit_cli("synth --template t-junction --vehicles 50 --seed 7 --out-dir " + path(d));
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

const fs::path& model_file() {
    static const fs::path file = [] {
        const fs::path f = work_dir() / "model.json";
        const Run r = grit_cli("train --scenario " + path(synth_dir() / "scenario.json") + " --trajectories " +
                               path(synth_dir()) + " --grid 'alpha=1 ccp=0.001' --out " + path(f));
        REQUIRE(r.code == 0);
        return f;
    }();
    return file;
}

std::vector<Episode> synth_episodes() {
    return {load_trajectories((synth_dir() / "episode_000.csv").string(), 25.0),
            load_trajectories((synth_dir() / "episode_001.csv").string(), 25.0)};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(grit_cli("").code == 1);
    CHECK(grit_cli("frobnicate").code == 1);
    CHECK(grit_cli("synth --vehicles 0 --out-dir " + path(work_dir() / "zero")).code == 1);
    CHECK(grit_cli("verify --model x.json").code == 1);
    CHECK(grit_cli("--help").code == 0);
}

TEST_CASE("synth writes the library's data and is reproducible") {
    const fs::path again = work_dir() / "synth_again";
    REQUIRE(grit_cli("synth --template t-junction --vehicles 50 --seed 7 --out-dir " + path(again)).code == 0);
    const auto lib = generate_synthetic(RoadTemplate::t_junction, 50, 7);
    REQUIRE(lib.episodes.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
        const std::string name = "episode_00" + std::to_string(e) + ".csv";
        CHECK(slurp(synth_dir() / name) == slurp(again / name));
        std::ostringstream expected;
        write_trajectories(expected, lib.episodes[e]);
        CHECK(slurp(synth_dir() / name) == expected.str());
    }
    CHECK(to_json(load_scenario((synth_dir() / "scenario.json").string())) == to_json(lib.scenario));
    CHECK(grit_cli("synth --vehicles 5 --out-dir /proc/grit_cannot_write").code == 2);
}

TEST_CASE("train matches the library pipeline") {
    const GoalModel cli = load_model(model_file().string());
    TrainConfig cfg;
    cfg.alpha_grid = {1.0};
    cfg.ccp_grid = {0.001};
    const Scenario sc = load_scenario((synth_dir() / "scenario.json").string());
    const TrainingRun lib = train_pipeline(synth_episodes(), sc, cfg);
    CHECK(cli == lib.model);
    CHECK(lib.config.ccp_alpha == 0.001);

    const Run json = grit_cli("train --json --scenario " + path(synth_dir() / "scenario.json") + " --trajectories " +
                              path(synth_dir()) + " --grid 'alpha=1 ccp=0.001' --out " +
                              path(work_dir() / "model2.json"));
    REQUIRE(json.code == 0);
    const auto report = nlohmann::json::parse(json.out);
    CHECK(report.at("pairs").size() == cli.trees.size());

    CHECK(grit_cli("train --scenario /nonexistent.json --trajectories " + path(synth_dir()) + " --out " +
                   path(work_dir() / "m.json"))
              .code == 2);
    CHECK(grit_cli("train --scenario " + path(synth_dir() / "scenario.json") + " --trajectories " +
                   path(synth_dir()) + " --grid 'beta=1' --out " + path(work_dir() / "m.json"))
              .code == 2);
}

TEST_CASE("infer prints the library posterior") {
    const Scenario sc = load_scenario((synth_dir() / "scenario.json").string());
    const GoalModel m = load_model(model_file().string());
    const Episode ep = synth_episodes()[0];
    const AgentId id = ep.trajectories.begin()->first;
    for (std::size_t frame : {std::size_t{0}, std::size_t{40}}) {
        const Run r = grit_cli("infer --json --scenario " + path(synth_dir() / "scenario.json") + " --model " +
                               path(model_file()) + " --trajectories " + path(synth_dir() / "episode_000.csv") +
                               " --vehicle " + std::to_string(id) + " --frame " + std::to_string(frame));
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        const GoalPosterior p = infer(History(ep, id, frame), sc, m);
        const auto expected = to_json(p);
        REQUIRE(j.at("goals").size() == expected.at("goals").size());
        for (std::size_t g = 0; g < p.entries.size(); ++g) {
            CHECK(j.at("goals")[g].at("goal") == expected.at("goals")[g].at("goal"));
            CHECK(j.at("goals")[g].at("probability").get<double>() == p.entries[g].probability);
            CHECK(j.at("goals")[g].at("likelihood").get<double>() == p.entries[g].likelihood);
        }
        CHECK(j.at("normalized_entropy").get<double>() == p.normalized_entropy);
        CHECK(j.at("inference_time_us").get<double>() > 0.0);
    }
    const std::string base = "infer --scenario " + path(synth_dir() / "scenario.json") + " --model " +
                             path(model_file()) + " --trajectories " + path(synth_dir() / "episode_000.csv");
    CHECK(grit_cli(base + " --vehicle 99999").code == 2);
    CHECK(grit_cli(base + " --vehicle " + std::to_string(id) + " --frame 100000").code == 2);
}

TEST_CASE("verify exit codes follow the verdict") {
    const fs::path smt_ok = work_dir() / "ok.smt2", smt_bad = work_dir() / "bad.smt2";
    const Run ok = grit_cli("verify --model " + data("fixtures/single_leaf_model.json") + " --prop " +
                            data("propositions/prior_order.json") + " --emit-smt " + path(smt_ok));
    CHECK(ok.code == 0);
    CHECK_THAT(ok.out, Catch::Matchers::ContainsSubstring("Verified"));
    CHECK(fs::exists(smt_ok));

    const Run bad = grit_cli("verify --model " + data("fixtures/lane_perturbed_model.json") + " --prop " +
                             data("propositions/lane_dominance.json") + " --emit-smt " + path(smt_bad));
    CHECK(bad.code == 3);
    CHECK_THAT(bad.out, Catch::Matchers::ContainsSubstring("Refuted"));
    CHECK_THAT(bad.out, Catch::Matchers::ContainsSubstring("speed"));
    CHECK(fs::exists(smt_bad));

    const Run json = grit_cli("verify --json --model " + data("fixtures/lane_perturbed_model.json") + " --prop " +
                              data("propositions/lane_dominance.json"));
    CHECK(json.code == 3);
    CHECK(nlohmann::json::parse(json.out).at("status") == "refuted");

    std::ofstream(work_dir() / "broken.json") << "{\"name\": \"x\", \"consequent\": {\"kind\": \"argmax\"}}";
    CHECK(grit_cli("verify --model " + data("fixtures/single_leaf_model.json") + " --prop " +
                   path(work_dir() / "broken.json"))
              .code == 2);
}

TEST_CASE("eval writes both curves and rejects empty sets") {
    const fs::path out = work_dir() / "eval";
    const Run r = grit_cli("eval --scenario " + path(synth_dir() / "scenario.json") + " --model " + path(model_file()) +
                           " --trajectories " + path(synth_dir()) + " --baseline no-dt --repetitions 1 --out " +
                           path(out));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(out / "report.json"));
    REQUIRE(j.at("reports").size() == 2);
    CHECK(j.at("reports")[0].at("method") == "grit");
    CHECK(j.at("reports")[1].at("method") == "grit-no-dt");
    CHECK(j.at("reports")[0].at("fractions").size() == 11);
    CHECK(fs::exists(out / "report.csv"));
    CHECK(fs::exists(out / "grit.dat"));

    const Scenario sc = load_scenario((synth_dir() / "scenario.json").string());
    const EvalReport lib = evaluate(load_model(model_file().string()), synth_episodes(), sc);
    for (std::size_t k = 0; k < 11; ++k)
        CHECK(j.at("reports")[0].at("fractions")[k].at("accuracy").get<double>() == lib.fractions[k].accuracy.mean);

    std::ofstream(work_dir() / "still.csv") << "time,agent_id,x,y,heading,speed,acceleration\n"
                                            << "0,1,-40,-5.25,0,0,0\n0.04,1,-40,-5.25,0,0,0\n0.08,1,-40,-5.25,0,0,0\n";
    CHECK(grit_cli("eval --scenario " + path(synth_dir() / "scenario.json") + " --model " + path(model_file()) +
                   " --trajectories " + path(work_dir() / "still.csv") + " --out " + path(work_dir() / "eval2"))
              .code == 2);
}
