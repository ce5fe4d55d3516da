#include "satrach/cli_app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "satrach/dataset.hpp"
#include "satrach/engine.hpp"
#include "satrach/ioutil.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace satrach {

namespace {

const std::set<std::string> kPrachKeys = {"n_zc",      "n_cs",    "roots",
                                          "n_ant",     "tau_e_max", "sample_period_us"};

std::set<std::string> allowed_keys(const std::string& subcommand) {
    std::set<std::string> keys = {"seed"};
    auto add = [&keys](std::initializer_list<const char*> more) {
        for (const char* k : more) keys.insert(k);
    };
    if (subcommand == "gen-data") {
        keys.insert(kPrachKeys.begin(), kPrachKeys.end());
        add({"profile", "k_max", "snr_grid", "n_per_class_per_snr", "dataset_out"});
    } else if (subcommand == "train") {
        add({"dataset", "learning_rate", "batch_size", "epochs", "beta1", "beta2", "epsilon",
             "train_fraction", "weights_out", "loss_history_out", "confusion_out"});
    } else if (subcommand == "eval") {
        add({"dataset", "weights", "report_out"});
    } else if (subcommand == "simulate" || subcommand == "sweep") {
        keys.insert(kPrachKeys.begin(), kPrachKeys.end());
        add({"n_slots", "slot_period_ms", "max_retries", "t_step1_ms", "t_detect_ms", "t_step2_ms",
             "t_proc23_ms", "t_step3_ms", "t_step4_ms", "rar_window_ms", "cr_window_ms",
             "backoff_window_ms", "detector", "snr_db", "k_max", "profile", "owd_min_ms",
             "owd_max_ms", "arrival", "arrival_rate_per_slot", "weights", "confusion",
             "metrics_out"});
        if (subcommand == "simulate")
            add({"scheme", "n_users", "trace_out", "policy_out"});
        else
            add({"schemes", "user_counts", "n_reps", "summary_out"});
    } else {
        throw UsageError("unknown subcommand: " + subcommand);
    }
    return keys;
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

PrachConfig prach_from(const json& cfg) {
    PrachConfig p;
    p.n_zc = get_or(cfg, "n_zc", p.n_zc);
    p.n_cs = get_or(cfg, "n_cs", p.n_cs);
    p.roots = get_or(cfg, "roots", p.roots);
    p.n_ant = get_or(cfg, "n_ant", p.n_ant);
    p.tau_e_max = get_or(cfg, "tau_e_max", p.tau_e_max);
    p.sample_period_us = get_or(cfg, "sample_period_us", p.sample_period_us);
    return p;
}

struct ArtifactLog {
    fs::path dir;
    std::vector<std::pair<std::string, fs::path>> entries;  // name -> path

    fs::path add(const std::string& name, const std::string& filename) {
        const fs::path p = dir / filename;
        entries.emplace_back(name, p);
        return p;
    }
    void remove_all() {
        std::error_code ec;
        for (const auto& [name, p] : entries) fs::remove(p, ec);
    }
};

void write_manifest(const RunConfig& rc, const ArtifactLog& artifacts) {
    json manifest;
    manifest["subcommand"] = rc.subcommand;
    manifest["seed"] = rc.seed;
    manifest["config"] = rc.config;
    {
        const std::string dump = rc.config.dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const char c : dump) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        manifest["config_hash"] = buf;
    }
    json arts = json::object();
    for (const auto& [name, path] : artifacts.entries) {
        json a;
        a["path"] = path.filename().string();
        a["checksum"] = file_checksum(path.string());
        a["bytes"] = static_cast<std::uint64_t>(fs::file_size(path));
        arts[name] = a;
    }
    manifest["artifacts"] = arts;
    write_text_file((artifacts.dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

void run_gen_data(const RunConfig& rc, ArtifactLog& artifacts) {
    const json& cfg = rc.config;
    const PrachConfig prach = prach_from(cfg);
    const TdlProfile profile = TdlProfile::resolve(get_or<std::string>(cfg, "profile", "los"));
    const int k_max = get_or(cfg, "k_max", 6);
    const std::vector<double> snr_grid =
        get_or(cfg, "snr_grid", std::vector<double>{-13.0, -12.0, -11.0, -10.0});
    const int n_per = get_or(cfg, "n_per_class_per_snr", 10000);

    const Dataset ds = gen_dataset(prach, profile, k_max, snr_grid, n_per, rc.seed);
    const fs::path out = artifacts.add("dataset", get_or<std::string>(cfg, "dataset_out", "dataset.bin"));
    save_dataset(ds, out.string());
    std::cout << "gen-data: " << ds.size() << " windows (" << ds.n_ant << "x" << ds.n_cs
              << ", K=" << ds.k_max << ") -> " << out.string() << "\n";
}

void run_train(const RunConfig& rc, ArtifactLog& artifacts) {
    const json& cfg = rc.config;
    if (!cfg.contains("dataset")) throw UsageError("train: config key 'dataset' is required");
    const Dataset ds = load_dataset(cfg.at("dataset").get<std::string>());

    ClassifierArch arch;
    arch.n_ant = ds.n_ant;
    arch.n_cs = ds.n_cs;
    arch.n_classes = ds.k_max + 1;

    TrainConfig tc;
    tc.learning_rate = get_or(cfg, "learning_rate", tc.learning_rate);
    tc.batch_size = get_or(cfg, "batch_size", tc.batch_size);
    tc.epochs = get_or(cfg, "epochs", tc.epochs);
    tc.beta1 = get_or(cfg, "beta1", tc.beta1);
    tc.beta2 = get_or(cfg, "beta2", tc.beta2);
    tc.epsilon = get_or(cfg, "epsilon", tc.epsilon);
    tc.seed = rc.seed;

    const double train_fraction = get_or(cfg, "train_fraction", 0.7);
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw UsageError("train: train_fraction must lie strictly between 0 and 1");

    const SplitIndices split = split_stratified(ds, train_fraction, rc.seed);
    const TrainResult result = train(arch, ds, split.train, tc);
    const EvalResult eval = evaluate(result.weights, ds, split.test);

    const fs::path wpath = artifacts.add("weights", get_or<std::string>(cfg, "weights_out", "weights.bin"));
    save_weights(result.weights, wpath.string());

    const fs::path lpath =
        artifacts.add("loss_history", get_or<std::string>(cfg, "loss_history_out", "loss_history.csv"));
    {
        std::ostringstream out;
        out << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
            out << e << ',' << fmt_double(result.epoch_loss[e]) << "\n";
        write_text_file(lpath.string(), out.str());
    }

    const fs::path cpath =
        artifacts.add("confusion", get_or<std::string>(cfg, "confusion_out", "confusion.csv"));
    save_confusion_csv(eval.confusion, cpath.string());

    std::cout << "train: " << split.train.size() << " train / " << split.test.size()
              << " test samples, accuracy " << fmt_double(eval.accuracy) << ", misdetection "
              << fmt_double(eval.misdetection_rate) << ", false alarm "
              << fmt_double(eval.false_alarm_rate) << "\n";
}

void run_eval(const RunConfig& rc, ArtifactLog& artifacts) {
    const json& cfg = rc.config;
    if (!cfg.contains("dataset") || !cfg.contains("weights"))
        throw UsageError("eval: config keys 'dataset' and 'weights' are required");
    const Dataset ds = load_dataset(cfg.at("dataset").get<std::string>());
    const Weights w = load_weights(cfg.at("weights").get<std::string>());
    if (w.arch.n_ant != ds.n_ant || w.arch.n_cs != ds.n_cs || w.arch.n_classes != ds.k_max + 1) {
        std::ostringstream msg;
        msg << "eval: weights expect " << w.arch.n_ant << "x" << w.arch.n_cs << " windows with "
            << w.arch.n_classes << " classes, dataset provides " << ds.n_ant << "x" << ds.n_cs
            << " with " << ds.k_max + 1;
        throw std::runtime_error(msg.str());
    }

    std::map<float, std::vector<std::size_t>> by_snr;
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        all[i] = i;
        by_snr[ds.snr_db[i]].push_back(i);
    }

    const fs::path rpath = artifacts.add("report", get_or<std::string>(cfg, "report_out", "eval_report.csv"));
    std::ostringstream out;
    out << "snr_db,count,accuracy,misdetection,false_alarm\n";
    for (const auto& [snr, idx] : by_snr) {
        const EvalResult r = evaluate(w, ds, idx);
        out << fmt_double(snr) << ',' << idx.size() << ',' << fmt_double(r.accuracy) << ','
            << fmt_double(r.misdetection_rate) << ',' << fmt_double(r.false_alarm_rate) << "\n";
    }
    const EvalResult overall = evaluate(w, ds, all);
    out << "all," << all.size() << ',' << fmt_double(overall.accuracy) << ','
        << fmt_double(overall.misdetection_rate) << ',' << fmt_double(overall.false_alarm_rate)
        << "\n";
    write_text_file(rpath.string(), out.str());
    std::cout << "eval: " << ds.size() << " samples, overall accuracy "
              << fmt_double(overall.accuracy) << "\n";
}

SimConfig sim_from(const json& cfg, std::uint64_t seed) {
    SimConfig sc;
    sc.n_users = get_or(cfg, "n_users", sc.n_users);
    sc.n_slots = get_or(cfg, "n_slots", sc.n_slots);
    sc.slot_period_ms = get_or(cfg, "slot_period_ms", sc.slot_period_ms);
    sc.max_retries = get_or(cfg, "max_retries", sc.max_retries);
    sc.t_step1_ms = get_or(cfg, "t_step1_ms", sc.t_step1_ms);
    sc.t_detect_ms = get_or(cfg, "t_detect_ms", sc.t_detect_ms);
    sc.t_step2_ms = get_or(cfg, "t_step2_ms", sc.t_step2_ms);
    sc.t_proc23_ms = get_or(cfg, "t_proc23_ms", sc.t_proc23_ms);
    sc.t_step3_ms = get_or(cfg, "t_step3_ms", sc.t_step3_ms);
    sc.t_step4_ms = get_or(cfg, "t_step4_ms", sc.t_step4_ms);
    sc.rar_window_ms = get_or(cfg, "rar_window_ms", sc.rar_window_ms);
    sc.cr_window_ms = get_or(cfg, "cr_window_ms", sc.cr_window_ms);
    sc.backoff_window_ms = get_or(cfg, "backoff_window_ms", sc.backoff_window_ms);
    if (cfg.contains("scheme")) sc.scheme = scheme_from_name(cfg.at("scheme").get<std::string>());
    if (cfg.contains("detector"))
        sc.detector = detector_from_name(cfg.at("detector").get<std::string>());
    sc.snr_db = get_or(cfg, "snr_db", sc.snr_db);
    sc.k_max = get_or(cfg, "k_max", sc.k_max);
    sc.prach = prach_from(cfg);
    sc.profile = TdlProfile::resolve(get_or<std::string>(cfg, "profile", "los"));
    sc.geometry.owd_min_ms = get_or(cfg, "owd_min_ms", sc.geometry.owd_min_ms);
    sc.geometry.owd_max_ms = get_or(cfg, "owd_max_ms", sc.geometry.owd_max_ms);
    const std::string arrival = get_or<std::string>(cfg, "arrival", "backlogged");
    if (arrival == "poisson")
        sc.arrival = ArrivalModel::poisson;
    else if (arrival != "backlogged")
        throw UsageError("unknown arrival model: " + arrival);
    sc.arrival_rate_per_slot = get_or(cfg, "arrival_rate_per_slot", sc.arrival_rate_per_slot);
    sc.seed = seed;
    return sc;
}

struct ClassifierArtifacts {
    Weights weights;
    ConfusionMatrix confusion;
    bool loaded = false;
};

ClassifierArtifacts load_classifier(const json& cfg, const SimConfig& sc) {
    ClassifierArtifacts a;
    if (sc.detector != Detector::trained_classifier) return a;
    if (!cfg.contains("weights"))
        throw std::runtime_error(
            "trained_classifier detector needs the 'weights' config key (train first)");
    a.weights = load_weights(cfg.at("weights").get<std::string>());
    if (cfg.contains("confusion")) {
        a.confusion = load_confusion_csv(cfg.at("confusion").get<std::string>());
    } else if (sc.scheme == Scheme::proposed) {
        throw std::runtime_error(
            "proposed scheme with trained_classifier needs the 'confusion' config key");
    } else {
        a.confusion = ConfusionMatrix::identity(sc.k_max + 1);
    }
    a.loaded = true;
    return a;
}

void run_simulate(const RunConfig& rc, ArtifactLog& artifacts) {
    const json& cfg = rc.config;
    const SimConfig sc = sim_from(cfg, rc.seed);
    const ClassifierArtifacts cls = load_classifier(cfg, sc);

    const ScenarioResult result =
        run_scenario(sc, cls.loaded ? &cls.weights : nullptr, cls.loaded ? &cls.confusion : nullptr);

    const fs::path mpath = artifacts.add("metrics", get_or<std::string>(cfg, "metrics_out", "metrics.csv"));
    {
        std::ostringstream out;
        write_metrics_csv({SweepCell{sc.scheme, sc.detector, sc.n_users, 0, result.metrics}}, out);
        write_text_file(mpath.string(), out.str());
    }
    if (cfg.contains("trace_out")) {
        const fs::path tpath = artifacts.add("trace", cfg.at("trace_out").get<std::string>());
        std::ostringstream out;
        write_traces(result.traces, out);
        write_text_file(tpath.string(), out.str());
    }
    if (cfg.contains("policy_out")) {
        const fs::path ppath = artifacts.add("policy", cfg.at("policy_out").get<std::string>());
        std::ostringstream out;
        dump_policy_csv(result.first_policy, out);
        write_text_file(ppath.string(), out.str());
    }
    std::cout << "simulate: scheme=" << scheme_name(sc.scheme) << " n_success="
              << result.metrics.n_success << "/" << sc.n_users << " avg_delay_ms="
              << fmt_double(result.metrics.avg_delay_ms) << " pusch_utilization="
              << fmt_double(result.metrics.pusch_utilization) << "\n";
}

void run_sweep(const RunConfig& rc, ArtifactLog& artifacts) {
    const json& cfg = rc.config;
    const SimConfig base = sim_from(cfg, rc.seed);
    const ClassifierArtifacts cls = load_classifier(cfg, base);

    std::vector<Scheme> schemes;
    for (const std::string& name :
         get_or(cfg, "schemes", std::vector<std::string>{"conventional", "withhold", "proposed"}))
        schemes.push_back(scheme_from_name(name));
    const std::vector<int> user_counts = get_or(cfg, "user_counts", std::vector<int>{50, 100, 200});
    const int n_reps = get_or(cfg, "n_reps", 5);

    const std::vector<SweepCell> cells =
        sweep(base, schemes, user_counts, n_reps, rc.seed, cls.loaded ? &cls.weights : nullptr,
              cls.loaded ? &cls.confusion : nullptr);

    const fs::path mpath = artifacts.add("metrics", get_or<std::string>(cfg, "metrics_out", "metrics.csv"));
    {
        std::ostringstream out;
        write_metrics_csv(cells, out);
        write_text_file(mpath.string(), out.str());
    }
    const fs::path spath = artifacts.add("summary", get_or<std::string>(cfg, "summary_out", "summary.csv"));
    {
        std::ostringstream out;
        write_summary_csv(summarize(cells), out);
        write_text_file(spath.string(), out.str());
    }
    std::cout << "sweep: " << cells.size() << " cells -> " << mpath.string() << "\n";
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
    static const std::set<std::string> kSubcommands = {"gen-data", "train", "eval", "simulate",
                                                       "sweep"};
    if (args.empty() || !kSubcommands.count(args[0]))
        throw UsageError(
            "usage: satrach <gen-data|train|eval|simulate|sweep> --config FILE [--set k=v ...] "
            "[--out DIR]");

    RunConfig rc;
    rc.subcommand = args[0];
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto next = [&]() -> const std::string& {
            if (i + 1 >= args.size()) throw UsageError("missing value after " + a);
            return args[++i];
        };
        if (a == "--config") {
            rc.config_path = next();
        } else if (a == "--out") {
            rc.output_dir = next();
        } else if (a == "--set") {
            const std::string& kv = next();
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("malformed override '" + kv + "' (expected key=value)");
            overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        } else {
            throw UsageError("unknown argument: " + a);
        }
    }
    if (rc.config_path.empty()) throw UsageError("--config FILE is required");

    std::string text;
    try {
        text = read_text_file(rc.config_path);
    } catch (const std::exception& e) {
        throw UsageError(std::string("cannot read config file: ") + e.what());
    }
    try {
        rc.config = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!rc.config.is_object()) throw UsageError("config file must hold a JSON object");

    for (const auto& [key, value] : overrides) {
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value;  // bare strings stay strings
        }
        rc.config[key] = parsed;
    }

    const std::set<std::string> allowed = allowed_keys(rc.subcommand);
    for (const auto& [key, value] : rc.config.items())
        if (!allowed.count(key))
            throw UsageError("unknown config key '" + key + "' for subcommand " + rc.subcommand);

    if (!rc.config.contains("seed"))
        throw UsageError("config key 'seed' is mandatory (there is no wall-clock default)");
    try {
        rc.seed = rc.config.at("seed").get<std::uint64_t>();
    } catch (const json::exception&) {
        throw UsageError("config key 'seed' must be an unsigned integer");
    }
    return rc;
}

int dispatch(const RunConfig& rc) {
    fs::create_directories(rc.output_dir);
    ArtifactLog artifacts;
    artifacts.dir = rc.output_dir;
    try {
        if (rc.subcommand == "gen-data")
            run_gen_data(rc, artifacts);
        else if (rc.subcommand == "train")
            run_train(rc, artifacts);
        else if (rc.subcommand == "eval")
            run_eval(rc, artifacts);
        else if (rc.subcommand == "simulate")
            run_simulate(rc, artifacts);
        else if (rc.subcommand == "sweep")
            run_sweep(rc, artifacts);
        else
            throw UsageError("unknown subcommand: " + rc.subcommand);
    } catch (...) {
        artifacts.remove_all();
        throw;
    }
    write_manifest(rc, artifacts);
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        return dispatch(parse_args(args));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace satrach
