// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "satrach/cli_app.hpp"
#include "satrach/engine.hpp"
#include "satrach/ioutil.hpp"

using namespace satrach;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

std::string num(double v) { return fmt_double(v); }

struct CriterionResult {
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

std::map<int, CriterionResult> results;
std::map<int, std::string> titles;

void run_criterion(int id, const std::string& title, const std::function<void()>& fn,
                   double shared_seconds = 0.0) {
    titles[id] = title;
    std::cerr << "... running criterion " << id << ": " << title << std::endl;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult out;
    try {
        fn();
        out.passed = true;
    } catch (const std::exception& e) {
        out.passed = false;
        out.detail = e.what();
    }
    out.seconds = shared_seconds +
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results[id] = out;
}

// ---------------------------------------------------------------- criterion 1

void criterion_zc_identities() {
    const int roots[] = {1, 2, 3, 5, 7};
    for (const int n : {139, 839}) {
        const double root_n = std::sqrt(static_cast<double>(n));
        for (const int r : roots) {
            const CxSeq z = zc_root_sequence(r, n);
            const std::vector<double> c = cyclic_xcorr(z, z, CorrNorm::sqrt_n);
            require(std::abs(c[0] - root_n) <= 1e-9 * root_n,
                    "autocorrelation peak off at n=" + std::to_string(n));
            for (std::size_t m = 1; m < c.size(); ++m)
                require(c[m] <= 1e-9 * root_n, "nonzero off-peak autocorrelation");
        }
        int pairs = 0;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = i + 1; j < 5; ++j) {
                const std::vector<double> c = cyclic_xcorr(zc_root_sequence(roots[i], n),
                                                           zc_root_sequence(roots[j], n),
                                                           CorrNorm::sqrt_n);
                for (const double v : c)
                    require(std::abs(v - 1.0) <= 1e-9, "cross-correlation not constant one");
                ++pairs;
            }
        require(pairs >= 5, "fewer than five root pairs checked");
    }
}

// ---------------------------------------------------------------- criterion 2

void criterion_shift_to_lag() {
    const PrachConfig cfg;
    const CxSeq root = zc_root_sequence(1, cfg.n_zc);
    for (int shift = 0; shift < cfg.shifts_per_root(); ++shift) {
        const CxSeq s = shifted_preamble(Preamble{1, shift}, cfg);
        const std::vector<double> c = cyclic_xcorr(s, root, CorrNorm::full_n);
        const auto peak = std::max_element(c.begin(), c.end());
        require(static_cast<int>(peak - c.begin()) == shift * cfg.n_cs,
                "peak lag mismatch at shift " + std::to_string(shift));
    }
}

// ---------------------------------------------------------------- criterion 3

double grid_max_objective(const ClassPosterior& post, double* argmax = nullptr) {
    double best_v = -1.0, best_p = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double p = i * 1e-4;
        const double v = success_probability(p, post);
        if (v > best_v) {
            best_v = v;
            best_p = p;
        }
    }
    if (argmax) *argmax = best_p;
    return best_v;
}

void criterion_optimal_p() {
    for (int k = 1; k <= 6; ++k) {
        ClassPosterior post;
        post.p.assign(7, 0.0);
        post.p[static_cast<std::size_t>(k)] = 1.0;
        const double p_star = optimal_access_prob(post);
        double grid_arg = 0.0;
        grid_max_objective(post, &grid_arg);
        require(std::abs(p_star - 1.0 / k) <= 0.02,
                "point mass k=" + std::to_string(k) + ": returned " + num(p_star));
        require(std::abs(grid_arg - 1.0 / k) <= 1e-3, "grid oracle disagrees with 1/k");
    }
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        ClassPosterior post;
        post.p.assign(7, 0.0);
        double sum = 0.0;
        for (auto& x : post.p) {
            x = -std::log(std::max(rng.uniform(), 1e-12));
            sum += x;
        }
        for (auto& x : post.p) x /= sum;
        const double p_star = optimal_access_prob(post);
        const double achieved = success_probability(p_star, post);
        const double best = grid_max_objective(post);
        require(achieved >= best - 0.05,
                "objective gap " + num(best - achieved) + " at trial " + std::to_string(trial));
        require(achieved >= success_probability(0.0, post) - 1e-12 &&
                    achieved >= success_probability(1.0, post) - 1e-12,
                "boundary candidate beats the returned probability");
    }
}

// ---------------------------------------------------------------- criterion 4

void criterion_gradients() {
    ClassifierArch arch;
    arch.n_ant = 8;
    arch.n_classes = 7;
    Rng rng(515);
    for (int sample = 0; sample < 20; ++sample) {
        const Weights w = init_weights(arch, derive_seed(99, static_cast<std::uint64_t>(sample)));
        std::vector<float> window(static_cast<std::size_t>(arch.n_ant) * arch.n_cs);
        for (auto& v : window) v = static_cast<float>(rng.uniform(0.0, 2.0));
        const int label = static_cast<int>(rng.uniform_int(0, arch.n_classes - 1));
        const double err = grad_check(arch, w, window.data(), label, 50, rng);
        require(err < 1e-4, "max relative gradient error " + num(err));
    }
}

// ---------------------------------------------------------------- criteria 5+6

struct TrainedModel {
    Weights weights;
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double misdetection = 0.0;
    double false_alarm = 0.0;
    double md_at_m13 = 0.0;
    double fa_at_m13 = 0.0;
};

TrainedModel train_desk_scale(int n_ant, int k_max, int n_per_class, std::uint64_t seed) {
    PrachConfig cfg;
    cfg.n_ant = n_ant;
    const Dataset ds = gen_dataset(cfg, TdlProfile::los_default(), k_max,
                                   {-13.0, -12.0, -11.0, -10.0}, n_per_class, seed);
    const SplitIndices split = split_stratified(ds, 0.7, derive_seed(seed, "split"));

    ClassifierArch arch;
    arch.n_ant = n_ant;
    arch.n_classes = k_max + 1;
    TrainConfig tc;  // defaults: lr 1e-3, batch 32, 20 epochs, betas (0.9, 0.999)
    tc.seed = derive_seed(seed, "train");
    const TrainResult tr = train(arch, ds, split.train, tc);

    TrainedModel model;
    model.weights = tr.weights;
    const EvalResult full = evaluate(tr.weights, ds, split.test);
    model.confusion = full.confusion;
    model.accuracy = full.accuracy;
    model.misdetection = full.misdetection_rate;
    model.false_alarm = full.false_alarm_rate;

    std::vector<std::size_t> at_m13;
    for (const std::size_t i : split.test)
        if (ds.snr_db[i] == -13.0f) at_m13.push_back(i);
    const EvalResult worst = evaluate(tr.weights, ds, at_m13);
    model.md_at_m13 = worst.misdetection_rate;
    model.fa_at_m13 = worst.false_alarm_rate;
    return model;
}

void criteria_detection_and_trends() {
    const int n_per_class = 10000;
    std::cerr << "... generating desk-scale datasets and training three models "
                 "(8ant/K6, 1ant/K6, 8ant/K3); this is the slow part"
              << std::endl;
    const auto block_start = std::chrono::steady_clock::now();
    auto fut_a = std::async(std::launch::async, train_desk_scale, 8, 6, n_per_class, 4001ULL);
    auto fut_b = std::async(std::launch::async, train_desk_scale, 1, 6, n_per_class, 4002ULL);
    auto fut_c = std::async(std::launch::async, train_desk_scale, 8, 3, n_per_class, 4003ULL);
    const TrainedModel a = fut_a.get();
    const TrainedModel b = fut_b.get();
    const TrainedModel c = fut_c.get();
    const double block_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - block_start).count();

    run_criterion(5, "detection requirements at -13 dB (desk scale)", [&] {
        std::cerr << "      8ant/K6: md@-13dB=" << num(a.md_at_m13) << " fa@-13dB="
                  << num(a.fa_at_m13) << " acc=" << num(a.accuracy) << std::endl;
        require(a.md_at_m13 < 0.01,
                "misdetection " + num(a.md_at_m13) + " not below 1% at -13 dB");
        require(a.fa_at_m13 < 0.005,
                "false alarm " + num(a.fa_at_m13) + " not below 0.5% at -13 dB");
    }, block_seconds);

    run_criterion(6, "accuracy ordering across antennas and class counts", [&] {
        std::cerr << "      acc(8ant,K6)=" << num(a.accuracy) << " acc(1ant,K6)=" << num(b.accuracy)
                  << " acc(8ant,K3)=" << num(c.accuracy) << std::endl;
        require(a.accuracy > b.accuracy + 0.02,
                "8-antenna accuracy " + num(a.accuracy) + " not 2 points above 1-antenna " +
                    num(b.accuracy));
        require(c.accuracy > a.accuracy + 0.05,
                "K=3 accuracy " + num(c.accuracy) + " not 5 points above K=6 " + num(a.accuracy));
    });
}

// ---------------------------------------------------------------- criterion 7

void criterion_parameter_budget() {
    ClassifierArch arch;
    arch.n_ant = 8;
    arch.n_classes = 7;
    const int count = arch.param_count();
    require(count >= 2000 && count <= 4000,
            "parameter count " + std::to_string(count) + " outside [2e3, 4e3]");
    require(1.774e5 / count >= 40.0, "not 40x below the dense reference classifier");
    for (int k = 3; k <= 6; ++k) {
        ClassifierArch lo = arch, hi = arch;
        lo.n_classes = k + 1;
        hi.n_classes = k + 2;
        require(hi.param_count() - lo.param_count() == 32 * arch.n_cs + 1,
                "incremental class cost law broken at K=" + std::to_string(k));
    }
}

// ---------------------------------------------------------------- criterion 8

void criterion_protocol_ordering() {
    SimConfig base;
    base.detector = Detector::oracle;
    base.seed = 0;  // sweep derives per-cell seeds
    const std::vector<Scheme> schemes = {Scheme::conventional, Scheme::withhold, Scheme::proposed};
    const std::vector<SweepCell> cells = sweep(base, schemes, {50, 300}, 20, 20250401ULL);

    std::map<std::pair<Scheme, int>, std::vector<SimMetrics>> grid;
    for (const auto& cell : cells) grid[{cell.scheme, cell.n_users}].push_back(cell.metrics);
    auto mean = [&](Scheme s, int d, auto pick) {
        const auto& v = grid[{s, d}];
        double total = 0.0;
        for (const auto& m : v) total += pick(m);
        return total / static_cast<double>(v.size());
    };
    auto util = [](const SimMetrics& m) { return m.pusch_utilization; };
    auto succ = [](const SimMetrics& m) { return static_cast<double>(m.n_success); };
    auto delay = [](const SimMetrics& m) { return m.avg_delay_ms; };

    const double u_prop = mean(Scheme::proposed, 50, util);
    const double u_conv = mean(Scheme::conventional, 50, util);
    std::cerr << "      D=50: util prop=" << num(u_prop) << " conv=" << num(u_conv)
              << " | success prop=" << num(mean(Scheme::proposed, 50, succ))
              << " withhold=" << num(mean(Scheme::withhold, 50, succ))
              << " | delay prop=" << num(mean(Scheme::proposed, 50, delay))
              << " conv=" << num(mean(Scheme::conventional, 50, delay)) << std::endl;
    require(u_prop > u_conv, "PUSCH utilization: proposed " + num(u_prop) +
                                 " not strictly above conventional " + num(u_conv));
    require(mean(Scheme::proposed, 50, succ) >= mean(Scheme::withhold, 50, succ),
            "successful users: proposed below withhold at D=50");
    require(mean(Scheme::proposed, 50, delay) <= mean(Scheme::conventional, 50, delay),
            "average delay: proposed above conventional at D=50");

    const double s_with = mean(Scheme::withhold, 300, succ);
    const double s_prop = mean(Scheme::proposed, 300, succ);
    std::cerr << "      D=300: success withhold=" << num(s_with) << " proposed=" << num(s_prop)
              << std::endl;
    require(s_with <= s_prop, "withhold recovered more users than proposed at D=300");
}

// ---------------------------------------------------------------- criterion 9

void criterion_single_user_timeline() {
    for (const Scheme scheme : {Scheme::conventional, Scheme::withhold, Scheme::proposed}) {
        SimConfig cfg;
        cfg.n_users = 1;
        cfg.seed = 9;
        cfg.scheme = scheme;
        cfg.geometry = {3.0, 3.0};
        const ScenarioResult r = run_scenario(cfg);
        require(r.metrics.n_success == 1, "single user did not succeed");
        const double delay = r.traces[0].outcome_ms - r.traces[0].first_attempt_ms;
        // 2*RTT + t1 + t_detect + t2 + t_proc + t3 + t4 with RTT = 6 ms
        require(delay == 23.0, "single-user delay " + num(delay) + " != 23");
    }
}

// --------------------------------------------------------------- criterion 10

void criterion_cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "satrach_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    auto config_file = [&](const std::string& name, const nlohmann::ordered_json& cfg) {
        const std::string path = (root / name).string();
        write_text_file(path, cfg.dump(2));
        return path;
    };
    auto run_twice = [&](const std::string& sub, const std::string& cfg_path,
                         const std::vector<std::string>& artifacts) {
        const std::string out1 = (root / (sub + "_1")).string();
        const std::string out2 = (root / (sub + "_2")).string();
        dispatch(parse_args({sub, "--config", cfg_path, "--out", out1}));
        dispatch(parse_args({sub, "--config", cfg_path, "--out", out2}));
        for (const std::string& a : artifacts)
            require(read_text_file(out1 + "/" + a) == read_text_file(out2 + "/" + a),
                    sub + ": artifact " + a + " differs across identical runs");
        return out1;
    };
    using nlohmann::ordered_json;

    const std::string gen_cfg =
        config_file("gen.json", ordered_json{{"seed", 11},
                                             {"n_ant", 2},
                                             {"k_max", 2},
                                             {"snr_grid", ordered_json::array({-10.0})},
                                             {"n_per_class_per_snr", 60}});
    const std::string gen_out = run_twice("gen-data", gen_cfg, {"dataset.bin", "manifest.json"});

    const std::string train_cfg = config_file(
        "train.json",
        ordered_json{{"seed", 12}, {"dataset", gen_out + "/dataset.bin"}, {"epochs", 2}});
    run_twice("train", train_cfg, {"weights.bin", "loss_history.csv", "confusion.csv", "manifest.json"});

    const std::string sim_cfg = config_file(
        "sim.json", ordered_json{{"seed", 13}, {"n_users", 25}, {"n_slots", 400}});
    run_twice("simulate", sim_cfg, {"metrics.csv", "manifest.json"});

    const std::string sweep_cfg = config_file(
        "sweep.json", ordered_json{{"seed", 14},
                                   {"n_slots", 300},
                                   {"schemes", ordered_json::array({"conventional", "proposed"})},
                                   {"user_counts", ordered_json::array({10, 30})},
                                   {"n_reps", 2}});
    run_twice("sweep", sweep_cfg, {"metrics.csv", "summary.csv", "manifest.json"});

    fs::remove_all(root);
}

}  // namespace

int main() {
    run_criterion(1, "zc correlation identities", criterion_zc_identities);
    run_criterion(2, "shift-to-lag mapping over all 104 preambles", criterion_shift_to_lag);
    run_criterion(3, "quasi-optimal transmission probability vs grid oracle", criterion_optimal_p);
    run_criterion(4, "backprop gradients vs finite differences", criterion_gradients);
    run_criterion(7, "classifier parameter budget", criterion_parameter_budget);
    run_criterion(9, "single-user deterministic timeline", criterion_single_user_timeline);
    run_criterion(10, "byte-identical artifacts across reruns", criterion_cli_determinism);
    run_criterion(8, "protocol metric ordering across schemes", criterion_protocol_ordering);
    criteria_detection_and_trends();  // fills criteria 5 and 6

    int failures = 0;
    for (int id = 1; id <= 10; ++id) {
        const CriterionResult& out = results.at(id);
        char timing[32];
        std::snprintf(timing, sizeof(timing), "%.1fs", out.seconds);
        if (out.passed) {
            std::cout << "[PASS] " << id << ": " << titles.at(id) << " (" << timing << ")\n";
        } else {
            std::cout << "[FAIL] " << id << ": " << titles.at(id) << " :: " << out.detail << " ("
                      << timing << ")\n";
            ++failures;
        }
    }
    return failures;
}
