// grit: synthesise data, train goal models, run inference, verify and evaluate.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "grit/grit.hpp"

namespace fs = std::filesystem;
using namespace grit;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kRefuted = 3 };

struct Common {
    bool json{false};
    std::size_t threads{0};
    double frame_rate{25.0};
};

std::size_t thread_count(const Common& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

/// Expands files and directories (their *.csv entries, sorted) into episode paths.
std::vector<std::string> trajectory_files(const std::vector<std::string>& inputs) {
    std::vector<std::string> out;
    for (const auto& in : inputs) {
        std::error_code ec;
        if (fs::is_directory(in, ec)) {
            std::vector<std::string> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path().string());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else if (fs::exists(in, ec)) {
            out.push_back(in);
        } else {
            throw InputError("trajectory path '" + in + "' does not exist");
        }
    }
    if (out.empty()) throw InputError("no trajectory files found");
    return out;
}

std::vector<Episode> load_episodes(const std::vector<std::string>& inputs, double rate) {
    std::vector<Episode> eps;
    for (const auto& f : trajectory_files(inputs)) eps.push_back(load_trajectories(f, rate));
    return eps;
}

std::vector<double> parse_numbers(const std::string& list, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError("grid value '" + item + "' for '" + key + "' is not a number");
        }
    }
    if (out.empty()) throw InputError("grid key '" + key + "' has no values");
    return out;
}

/// "alpha=0.5,1 ccp=0,0.001"
void apply_grid(const std::string& grid, TrainConfig& cfg) {
    std::stringstream ss(grid);
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw InputError("grid entry '" + tok + "' must look like key=v1,v2");
        const std::string key = tok.substr(0, eq);
        auto values = parse_numbers(tok.substr(eq + 1), key);
        if (key == "alpha") cfg.alpha_grid = values;
        else if (key == "ccp" || key == "ccp_alpha") cfg.ccp_grid = values;
        else throw InputError("unknown grid key '" + key + "' (expected alpha or ccp)");
    }
    for (double a : cfg.alpha_grid)
        if (!(a >= 0.0)) throw InputError("alpha values must be >= 0");
    for (double c : cfg.ccp_grid)
        if (!(c >= 0.0)) throw InputError("ccp values must be >= 0");
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string tmpl{"t-junction"};
    std::size_t vehicles{0};
    std::uint64_t seed{0};
    std::string out_dir;
    std::size_t per_episode{25};
    std::string prior;
};

int cmd_synth(const SynthArgs& a, const Common& c) {
    SyntheticConfig cfg;
    cfg.vehicles_per_episode = a.per_episode;
    cfg.frame_rate = c.frame_rate;
    if (!a.prior.empty()) {
        std::stringstream ss(a.prior);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw InputError("prior entry '" + item + "' must look like G=weight");
            cfg.goal_prior[item.substr(0, eq)] = parse_numbers(item.substr(eq + 1), item.substr(0, eq)).front();
        }
    }
    const auto data = generate_synthetic(road_template_from_string(a.tmpl), a.vehicles, a.seed, cfg);
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec || !fs::is_directory(a.out_dir)) throw InputError("cannot create output directory '" + a.out_dir + "'");
    const fs::path dir(a.out_dir);
    save_scenario(data.scenario, (dir / "scenario.json").string());
    std::vector<std::string> files;
    for (std::size_t e = 0; e < data.episodes.size(); ++e) {
        std::ostringstream name;
        name << "episode_" << std::setw(3) << std::setfill('0') << e << ".csv";
        save_trajectories(data.episodes[e], (dir / name.str()).string());
        files.push_back(name.str());
    }
    nlohmann::json summary{{"scenario", (dir / "scenario.json").string()},
                           {"episodes", files},
                           {"vehicles", a.vehicles},
                           {"seed", a.seed}};
    if (c.json) print_json(summary);
    else
        std::cout << "wrote " << a.vehicles << " vehicles in " << files.size() << " episode file(s) and scenario.json to "
                  << a.out_dir << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string scenario;
    std::vector<std::string> trajectories;
    double val_split{0.2};
    std::string grid;
    std::string out;
    int max_depth{7};
    int min_samples_split{2};
    std::string report;
};

int cmd_train(const TrainArgs& a, const Common& c) {
    const Scenario sc = load_scenario(a.scenario);
    const auto episodes = load_episodes(a.trajectories, c.frame_rate);
    TrainConfig cfg;
    cfg.max_depth = a.max_depth;
    cfg.min_samples_split = a.min_samples_split;
    if (!a.grid.empty()) apply_grid(a.grid, cfg);
    const TrainingRun run = train_pipeline(episodes, sc, cfg, a.val_split, FeatureMetadata{}, thread_count(c));
    save_model(run.model, a.out);
    const auto& report = run.report;
    if (!a.report.empty()) {
        std::ofstream out(a.report);
        if (!out) throw InputError("cannot write report '" + a.report + "'");
        out << report.dump(2) << '\n';
    }
    if (c.json) {
        print_json(report);
    } else {
        std::cout << "model written to " << a.out << " (alpha=" << run.config.alpha
                  << ", ccp_alpha=" << run.config.ccp_alpha << ")\n";
        std::cout << std::left << std::setw(20) << "pair" << std::right << std::setw(8) << "samples" << std::setw(8)
                  << "depth" << std::setw(8) << "leaves" << std::setw(10) << "prior" << '\n';
        for (const auto& p : report.at("pairs"))
            std::cout << std::left << std::setw(20)
                      << (p.at("goal").get<std::string>() + ":" + p.at("type").get<std::string>()) << std::right
                      << std::setw(8) << p.at("samples").get<std::size_t>() << std::setw(8) << p.at("depth").get<int>()
                      << std::setw(8) << p.at("leaves").get<std::size_t>() << std::setw(10) << std::setprecision(4)
                      << p.at("prior").get<double>() << '\n';
        std::cout << "train log-loss " << report.at("train_log_loss").get<double>() << ", validation log-loss "
                  << report.at("validation_log_loss").get<double>() << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct InferArgs {
    std::string scenario, model, trajectories;
    AgentId vehicle{0};
    std::optional<std::size_t> frame;
};

void print_posterior_table(const GoalPosterior& p) {
    if (p.status == InferenceStatus::no_goal) {
        std::cout << "no reachable goal\n";
        return;
    }
    std::cout << std::left << std::setw(20) << "goal" << std::right << std::setw(12) << "likelihood" << std::setw(10)
              << "prior" << std::setw(12) << "probability" << '\n';
    for (const auto& e : p.entries)
        std::cout << std::left << std::setw(20) << to_string(e.pair) << std::right << std::fixed << std::setprecision(4)
                  << std::setw(12) << e.likelihood << std::setw(10) << e.prior << std::setw(12) << e.probability
                  << '\n';
    std::cout << "normalized entropy " << p.normalized_entropy << '\n';
    std::cout.unsetf(std::ios::fixed);
}

int cmd_infer(const InferArgs& a, const Common& c) {
    const Scenario sc = load_scenario(a.scenario);
    const GoalModel model = load_model(a.model);
    const Episode ep = load_trajectories(a.trajectories, c.frame_rate);
    const Trajectory* t = ep.find(a.vehicle);
    if (!t) throw InputError("vehicle " + std::to_string(a.vehicle) + " not found in '" + a.trajectories + "'");
    if (a.frame && *a.frame >= t->states.size())
        throw InputError("frame " + std::to_string(*a.frame) + " out of range (vehicle has " +
                         std::to_string(t->states.size()) + " frames)");
    std::vector<std::size_t> frames;
    if (a.frame) frames.push_back(*a.frame);
    else
        for (std::size_t i = 0; i < t->states.size(); ++i) frames.push_back(i);

    nlohmann::json all = nlohmann::json::array();
    for (std::size_t f : frames) {
        const GoalPosterior p = infer(History(ep, a.vehicle, f), sc, model);
        if (c.json) {
            auto j = to_json(p, true);
            if (!a.frame) j["frame"] = f;
            all.push_back(j);
        } else {
            if (!a.frame) std::cout << "frame " << f << '\n';
            print_posterior_table(p);
        }
    }
    if (c.json) print_json(a.frame ? all.front() : all);
    return kOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string model, prop, emit_smt;
};

int cmd_verify(const VerifyArgs& a, const Common& c) {
    const GoalModel model = load_model(a.model);
    const Proposition prop = load_proposition(a.prop);
    const Verdict v = verify(model, prop);
    if (!a.emit_smt.empty()) export_smtlib(model, prop, a.emit_smt);
    if (c.json) {
        print_json(to_json(v));
    } else if (v.status == VerdictStatus::verified) {
        std::cout << "Verified (" << v.combinations << " feasible leaf combinations)\n";
    } else {
        std::cout << "Refuted: " << describe(prop.consequent) << " fails at\n\n"
                  << counterexample_table(*v.counterexample);
    }
    return v.status == VerdictStatus::verified ? kOk : kRefuted;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string scenario, model, out;
    std::vector<std::string> trajectories;
    std::string baseline;
    int repetitions{3};
};

int cmd_eval(const EvalArgs& a, const Common& c) {
    const Scenario sc = load_scenario(a.scenario);
    const GoalModel model = load_model(a.model);
    const auto episodes = load_episodes(a.trajectories, c.frame_rate);
    if (!a.baseline.empty() && a.baseline != "no-dt") throw InputError("unknown baseline '" + a.baseline + "'");

    std::vector<EvalReport> reports;
    reports.push_back(evaluate(grit_predictor(sc, model), episodes, sc, {}, thread_count(c), "grit"));
    if (a.baseline == "no-dt")
        reports.push_back(evaluate(no_dt_predictor(sc, model.priors), episodes, sc, {}, thread_count(c), "grit-no-dt"));
    std::optional<TimingSummary> timing;
    if (eval_vehicles(episodes, sc).size() * kSampleCount >= kMinBenchmarkCalls)
        timing = benchmark(model, episodes, sc, a.repetitions);

    nlohmann::json j{{"reports", nlohmann::json::array()}};
    for (const auto& r : reports) j["reports"].push_back(to_json(r));
    if (timing) j["benchmark"] = to_json(*timing);

    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec || !fs::is_directory(a.out)) throw InputError("cannot create output directory '" + a.out + "'");
    const fs::path dir(a.out);
    {
        std::ofstream f(dir / "report.json");
        if (!f) throw InputError("cannot write to '" + a.out + "'");
        f << j.dump(2) << '\n';
    }
    {
        std::ofstream f(dir / "report.csv");
        write_csv(f, reports);
    }
    for (const auto& r : reports) {
        std::ofstream f(dir / (r.method + ".dat"));
        write_gnuplot(f, r);
    }

    if (c.json) {
        print_json(j);
        return kOk;
    }
    for (const auto& r : reports) {
        std::cout << r.method << " (" << r.vehicles << " vehicles)\n";
        std::cout << std::setw(9) << "fraction" << std::setw(11) << "accuracy" << std::setw(9) << "+-" << std::setw(10)
                  << "entropy" << std::setw(9) << "+-" << '\n';
        std::cout << std::fixed << std::setprecision(3);
        for (const auto& f : r.fractions)
            std::cout << std::setw(9) << f.fraction << std::setw(11) << f.accuracy.mean << std::setw(9)
                      << f.accuracy.stderr_ << std::setw(10) << f.entropy.mean << std::setw(9) << f.entropy.stderr_
                      << '\n';
        std::cout.unsetf(std::ios::fixed);
    }
    if (timing)
        std::cout << "inference " << timing->total_us.mean << " us +- " << timing->total_us.stderr_
                  << " per call (feature extraction " << timing->feature_extraction_us << " us)\n";
    std::cout << "reports written to " << a.out << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interpretable goal recognition: train, infer, verify, evaluate"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_flag("--json", common.json, "Machine-readable JSON on stdout");
        sub->add_option("--threads", common.threads, "Worker thread cap (default: GRIT_THREADS or all cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--frame-rate", common.frame_rate, "Trajectory frame rate in Hz")->check(CLI::PositiveNumber);
    };

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic scenario and trajectories");
    s->add_option("--template", synth.tmpl, "t-junction or crossroad")
        ->check(CLI::IsMember({"t-junction", "t_junction", "crossroad"}));
    s->add_option("--vehicles", synth.vehicles, "Number of vehicles")->required()->check(CLI::PositiveNumber);
    s->add_option("--seed", synth.seed, "Random seed");
    s->add_option("--out-dir", synth.out_dir, "Output directory")->required();
    s->add_option("--per-episode", synth.per_episode, "Vehicles per episode file")->check(CLI::PositiveNumber);
    s->add_option("--prior", synth.prior, "Goal sampling weights, e.g. G0=0.6,G1=0.3,G2=0.1");
    add_common(s);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train a goal model");
    t->add_option("--scenario", train.scenario)->required();
    t->add_option("--trajectories", train.trajectories, "Trajectory CSV files or directories")->required();
    t->add_option("--val-split", train.val_split, "Fraction of vehicles held out for grid search");
    t->add_option("--grid", train.grid, "Search grid, e.g. \"alpha=0.5,1 ccp=0,0.001\"");
    t->add_option("--out", train.out, "Model output path")->required();
    t->add_option("--max-depth", train.max_depth)->check(CLI::Range(1, 64));
    t->add_option("--min-samples-split", train.min_samples_split)->check(CLI::Range(2, 1 << 30));
    t->add_option("--report", train.report, "Also write the training report JSON here");
    add_common(t);

    InferArgs inf;
    std::size_t frame = 0;
    auto* i = app.add_subcommand("infer", "Posterior over goals for one vehicle");
    i->add_option("--scenario", inf.scenario)->required();
    i->add_option("--model", inf.model)->required();
    i->add_option("--trajectories", inf.trajectories, "Episode CSV")->required();
    i->add_option("--vehicle", inf.vehicle)->required();
    auto* frame_opt = i->add_option("--frame", frame, "Index into the vehicle's trajectory (default: every frame)");
    add_common(i);

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "Verify a proposition against a model");
    v->add_option("--model", ver.model)->required();
    v->add_option("--prop", ver.prop)->required();
    v->add_option("--emit-smt", ver.emit_smt, "Write an SMT-LIB2 script here");
    add_common(v);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Accuracy and entropy curves plus timing");
    e->add_option("--scenario", ev.scenario)->required();
    e->add_option("--model", ev.model)->required();
    e->add_option("--trajectories", ev.trajectories)->required();
    e->add_option("--baseline", ev.baseline, "no-dt")->check(CLI::IsMember({"no-dt"}));
    e->add_option("--out", ev.out, "Output directory")->required();
    e->add_option("--repetitions", ev.repetitions, "Benchmark passes")->check(CLI::PositiveNumber);
    add_common(e);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*s) return cmd_synth(synth, common);
        if (*t) return cmd_train(train, common);
        if (*i) {
            if (frame_opt->count()) inf.frame = frame;
            return cmd_infer(inf, common);
        }
        if (*v) return cmd_verify(ver, common);
        if (*e) return cmd_eval(ev, common);
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInput;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInput;
    }
    return kUsage;
}
