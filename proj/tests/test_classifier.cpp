#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "satrach/classifier.hpp"

using namespace satrach;

namespace {

ClassifierArch arch_for(int n_ant, int k_max) {
    ClassifierArch a;
    a.n_ant = n_ant;
    a.n_classes = k_max + 1;
    return a;
}

std::vector<float> random_window(int n_ant, int n_cs, Rng& rng) {
    std::vector<float> w(static_cast<std::size_t>(n_ant) * n_cs);
    for (auto& v : w) v = static_cast<float>(rng.uniform(0.0, 2.0));
    return w;
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

Dataset tiny_dataset(int n_ant, int k_max, int n_per, std::uint64_t seed) {
    PrachConfig cfg;
    cfg.n_ant = n_ant;
    return gen_dataset(cfg, TdlProfile::los_default(), k_max, {-10.0}, n_per, seed);
}

}  // namespace

TEST_CASE("parameter counts follow the architecture") {
    CHECK(arch_for(8, 6).param_count() == 3767);
    CHECK(arch_for(1, 6).param_count() == 3431);

    // budget band and distance to the dense reference design
    CHECK(arch_for(8, 6).param_count() >= 2000);
    CHECK(arch_for(8, 6).param_count() <= 4000);
    CHECK(1.774e5 / arch_for(8, 6).param_count() > 40.0);

    // adding one output class costs exactly 32*n_cs + 1 parameters
    for (int k = 3; k <= 6; ++k)
        CHECK(arch_for(8, k + 1).param_count() - arch_for(8, k).param_count() == 32 * 8 + 1);

    // antenna count only enters conv1: slope 16*kernel per antenna
    for (int n_ant : {1, 2, 4})
        CHECK(arch_for(n_ant + 1, 6).param_count() - arch_for(n_ant, 6).param_count() == 48);
}

TEST_CASE("zero weights give uniform class probabilities and ln(K+1) loss") {
    const ClassifierArch arch = arch_for(4, 6);
    Weights w;
    w.arch = arch;
    w.params.assign(static_cast<std::size_t>(arch.param_count()), 0.0f);
    Rng rng(1);
    const std::vector<float> window = random_window(4, 8, rng);
    const std::vector<double> probs = forward(w, window.data());
    for (const double p : probs) CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    // cross-entropy of a uniform prediction
    CHECK(-std::log(probs[3]) == doctest::Approx(std::log(7.0)).epsilon(1e-12));
    // argmax ties break toward the lower class
    CHECK(predict(w, window.data()) == 0);
}

TEST_CASE("forward always emits a probability distribution") {
    const ClassifierArch arch = arch_for(2, 4);
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Weights w = init_weights(arch, derive_seed(7, static_cast<std::uint64_t>(trial)));
        const std::vector<float> window = random_window(2, 8, rng);
        const std::vector<double> probs = forward(w, window.data());
        double sum = 0.0;
        for (const double p : probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
}

TEST_CASE("backprop matches central finite differences") {
    const ClassifierArch arch = arch_for(3, 5);
    const Weights w = init_weights(arch, 11);
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<float> window = random_window(3, 8, rng);
        const int label = static_cast<int>(rng.uniform_int(0, arch.n_classes - 1));
        CHECK(grad_check(arch, w, window.data(), label, 60, rng) < 1e-4);
    }
}

TEST_CASE("dead network still agrees with finite differences") {
    const ClassifierArch arch = arch_for(2, 3);
    Weights w;
    w.arch = arch;
    w.params.assign(static_cast<std::size_t>(arch.param_count()), 0.0f);
    // negative conv1 biases kill every ReLU path
    for (int i = 0; i < arch.conv1_out; ++i)
        w.params[static_cast<std::size_t>(arch.conv1_b_off() + i)] = -1.0f;
    Rng rng(3);
    const std::vector<float> window = random_window(2, 8, rng);
    const std::vector<double> grad = loss_gradient(w, window.data(), 1);
    for (int i = 0; i < arch.conv1_w_len(); ++i) CHECK(grad[static_cast<std::size_t>(i)] == 0.0);
    CHECK(grad_check(arch, w, window.data(), 1, 60, rng) < 1e-4);
}

TEST_CASE("fc bias gradient equals softmax output minus one-hot, summed over a batch") {
    const ClassifierArch arch = arch_for(2, 4);
    const Weights w = init_weights(arch, 21);
    Rng rng(22);
    std::vector<double> batch_grad(static_cast<std::size_t>(arch.param_count()), 0.0);
    std::vector<double> expected(static_cast<std::size_t>(arch.n_classes), 0.0);
    for (int s = 0; s < 3; ++s) {
        const std::vector<float> window = random_window(2, 8, rng);
        const int label = s % arch.n_classes;
        const std::vector<double> g = loss_gradient(w, window.data(), label);
        for (std::size_t i = 0; i < g.size(); ++i) batch_grad[i] += g[i];
        const std::vector<double> probs = forward(w, window.data());
        for (int c = 0; c < arch.n_classes; ++c)
            expected[static_cast<std::size_t>(c)] += probs[static_cast<std::size_t>(c)] - (c == label ? 1.0 : 0.0);
    }
    for (int c = 0; c < arch.n_classes; ++c)
        CHECK(batch_grad[static_cast<std::size_t>(arch.fc_b_off() + c)] ==
              doctest::Approx(expected[static_cast<std::size_t>(c)]).epsilon(1e-9));
}

TEST_CASE("a single sample can be memorized") {
    const Dataset ds = tiny_dataset(2, 3, 2, 31);
    ClassifierArch arch = arch_for(2, 3);
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 1;
    tc.seed = 5;
    std::vector<std::size_t> one = {5};  // a class-2 sample
    const TrainResult r = train(arch, ds, one, tc);
    CHECK(r.epoch_loss.back() < 0.01);
}

TEST_CASE("training is bit-deterministic given the seed") {
    const Dataset ds = tiny_dataset(2, 2, 30, 33);
    const ClassifierArch arch = arch_for(2, 2);
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 17;
    const TrainResult a = train(arch, ds, all_indices(ds), tc);
    const TrainResult b = train(arch, ds, all_indices(ds), tc);
    CHECK(a.weights.params == b.weights.params);
    CHECK(a.epoch_loss == b.epoch_loss);
    tc.seed = 18;
    const TrainResult c = train(arch, ds, all_indices(ds), tc);
    CHECK(a.weights.params != c.weights.params);
}

TEST_CASE("epoch loss decreases over early epochs for most seeds") {
    const Dataset ds = tiny_dataset(2, 3, 300, 41);
    const ClassifierArch arch = arch_for(2, 3);
    const std::vector<std::size_t> idx = all_indices(ds);
    int nonincreasing = 0;
    const int n_seeds = 10;
    for (int s = 0; s < n_seeds; ++s) {
        TrainConfig tc;
        tc.epochs = 5;
        tc.seed = 100 + static_cast<std::uint64_t>(s);
        const TrainResult r = train(arch, ds, idx, tc);
        bool ok = true;
        for (std::size_t e = 1; e < r.epoch_loss.size(); ++e)
            if (r.epoch_loss[e] > r.epoch_loss[e - 1]) ok = false;
        if (ok) ++nonincreasing;
    }
    CHECK(nonincreasing >= 9);  // >= 90% of seeds
}

TEST_CASE("training rejects mismatched or empty inputs") {
    const Dataset ds = tiny_dataset(2, 3, 5, 43);
    TrainConfig tc;
    CHECK_THROWS_AS(train(arch_for(4, 3), ds, all_indices(ds), tc), std::invalid_argument);
    CHECK_THROWS_AS(train(arch_for(2, 3), ds, {}, tc), std::invalid_argument);
    TrainConfig bad;
    bad.beta1 = 1.5;
    CHECK_THROWS_AS(train(arch_for(2, 3), ds, all_indices(ds), bad), std::invalid_argument);
}

TEST_CASE("weight files round-trip bit-exactly") {
    const ClassifierArch arch = arch_for(3, 4);
    const Weights w = init_weights(arch, 51);
    const char* path = "test_weights.bin";
    save_weights(w, path);
    const Weights back = load_weights(path);
    CHECK(back.params == w.params);
    CHECK(back.arch.n_ant == arch.n_ant);

    Rng rng(52);
    for (int i = 0; i < 100; ++i) {
        const std::vector<float> window = random_window(3, 8, rng);
        const std::vector<double> p1 = forward(w, window.data());
        const std::vector<double> p2 = forward(back, window.data());
        for (std::size_t c = 0; c < p1.size(); ++c) CHECK(p1[c] == p2[c]);
    }
    std::remove(path);
}

TEST_CASE("corrupt weight files are refused") {
    const Weights w = init_weights(arch_for(2, 3), 61);
    const char* path = "test_weights_bad.bin";
    save_weights(w, path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    {  // truncated
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS(load_weights(path));

    {  // parameter count contradicts dimensions
        std::string tampered = bytes;
        tampered[24] = static_cast<char>(tampered[24] + 1);
        std::ofstream out(path, std::ios::binary);
        out.write(tampered.data(), static_cast<std::streamsize>(tampered.size()));
    }
    CHECK_THROWS_WITH_AS(load_weights(path), doctest::Contains("parameters"), std::runtime_error);
    std::remove(path);
    CHECK_THROWS(load_weights("no_such_weights.bin"));
}

TEST_CASE("evaluate: constant class-0 predictor has full misdetection, zero false alarm") {
    const Dataset ds = tiny_dataset(2, 3, 20, 71);
    Weights w;
    w.arch = arch_for(2, 3);
    w.params.assign(static_cast<std::size_t>(w.arch.param_count()), 0.0f);  // uniform -> argmax 0
    const EvalResult r = evaluate(w, ds, all_indices(ds));
    CHECK(r.misdetection_rate == 1.0);
    CHECK(r.false_alarm_rate == 0.0);
    CHECK(r.accuracy == doctest::Approx(0.25));
    for (int t = 0; t < 4; ++t) {
        CHECK(r.confusion.column_defined[static_cast<std::size_t>(t)]);
        double col = 0.0;
        for (int p = 0; p < 4; ++p) col += r.confusion.at(p, t);
        CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("classes absent from the evaluation set are flagged undefined") {
    const Dataset ds = tiny_dataset(2, 3, 20, 73);
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] != 2) subset.push_back(i);
    const Weights w = init_weights(arch_for(2, 3), 74);
    const EvalResult r = evaluate(w, ds, subset);
    CHECK_FALSE(r.confusion.column_defined[2]);
    CHECK(std::isnan(r.confusion.at(0, 2)));
    CHECK(r.confusion.column_defined[0]);
}

TEST_CASE("confusion matrices round-trip through csv") {
    const Dataset ds = tiny_dataset(2, 3, 15, 75);
    const Weights w = init_weights(arch_for(2, 3), 76);
    const EvalResult r = evaluate(w, ds, all_indices(ds));
    const char* path = "test_confusion.csv";
    save_confusion_csv(r.confusion, path);
    const ConfusionMatrix back = load_confusion_csv(path);
    REQUIRE(back.n_classes == 4);
    for (int p = 0; p < 4; ++p)
        for (int t = 0; t < 4; ++t) CHECK(back.at(p, t) == r.confusion.at(p, t));
    std::remove(path);
}

TEST_CASE("baseline mlp averages antennas and stays a distribution") {
    MlpArch arch;
    MlpWeights w = init_mlp(arch, 81);

    // with equal rows, averaging reproduces the single-antenna input
    Rng rng(82);
    std::vector<float> row = random_window(1, 8, rng);
    std::vector<float> two_rows(16);
    std::copy(row.begin(), row.end(), two_rows.begin());
    std::copy(row.begin(), row.end(), two_rows.begin() + 8);
    const std::vector<double> p1 = mlp_forward(w, row.data(), 1);
    const std::vector<double> p2 = mlp_forward(w, two_rows.data(), 2);
    for (std::size_t c = 0; c < p1.size(); ++c) CHECK(p1[c] == doctest::Approx(p2[c]).epsilon(1e-12));

    MlpWeights zero;
    zero.arch = arch;
    zero.params.assign(static_cast<std::size_t>(arch.param_count()), 0.0f);
    for (const double p : mlp_forward(zero, row.data(), 1))
        CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("the dense baseline needs more parameters than the convolutional design") {
    MlpArch mlp;  // averaged input: n_cs wide regardless of antennas
    CHECK(mlp.param_count() == 9863);
    CHECK(mlp.param_count() > arch_for(8, 6).param_count());
}
