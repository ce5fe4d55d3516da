#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "satrach/dataset.hpp"
#include "satrach/rng.hpp"

namespace satrach {

// Two 1D convolutional layers (kernel 3, stride 1, padding 1, 16 then 32
// channels) over the antenna-wise window, followed by one fully connected
// layer and softmax. Input rows are antennas, columns are the n_cs lags of
// one zone.
struct ClassifierArch {
    int n_ant = 8;
    int n_cs = 8;
    int conv1_out = 16;
    int conv2_out = 32;
    int kernel = 3;
    int n_classes = 7;  // K + 1

    void validate() const;

    int conv1_w_len() const { return conv1_out * n_ant * kernel; }
    int conv2_w_len() const { return conv2_out * conv1_out * kernel; }
    int fc_in() const { return conv2_out * n_cs; }
    int fc_w_len() const { return n_classes * fc_in(); }

    int conv1_w_off() const { return 0; }
    int conv1_b_off() const { return conv1_w_len(); }
    int conv2_w_off() const { return conv1_b_off() + conv1_out; }
    int conv2_b_off() const { return conv2_w_off() + conv2_w_len(); }
    int fc_w_off() const { return conv2_b_off() + conv2_out; }
    int fc_b_off() const { return fc_w_off() + fc_w_len(); }
    int param_count() const { return fc_b_off() + n_classes; }
};

// Parameters are stored as float32 (the on-disk format) and promoted to
// double for all arithmetic, so save/load round-trips are bit-exact.
// Flattening before the fully connected layer is channel-major
// (channel * n_cs + position).
struct Weights {
    ClassifierArch arch;
    std::vector<float> params;
};

// Uniform +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
Weights init_weights(const ClassifierArch& arch, std::uint64_t seed);

// Softmax class probabilities for one window (n_ant x n_cs, antenna-major).
std::vector<double> forward(const Weights& w, const float* window);

// Argmax with ties broken toward the lower class index.
int predict(const Weights& w, const float* window);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainResult {
    Weights weights;
    std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Adam over shuffled mini-batches of mean cross-entropy. Single-threaded and
// deterministic given (config, seed). `subset` selects dataset records; pass
// all indices to train on everything. Throws on non-finite loss.
TrainResult train(const ClassifierArch& arch, const Dataset& ds,
                  const std::vector<std::size_t>& subset, const TrainConfig& tc);

// Cross-entropy loss gradient for one sample, in parameter layout order.
std::vector<double> loss_gradient(const Weights& w, const float* window, int label);

// Max relative error between backprop gradients and central finite
// differences (step 1e-4) on n_params randomly chosen parameters, evaluated
// on one sample. Both sides are computed in double precision.
double grad_check(const ClassifierArch& arch, const Weights& w, const float* window, int label,
                  int n_params, Rng& rng);

// q(pred, true) = fraction of true-class samples classified as pred; each
// defined column sums to 1. Columns for classes absent from the evaluation
// set are flagged undefined and hold NaN.
struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<double> q;  // pred-major, n_classes x n_classes
    std::vector<char> column_defined;

    double at(int pred, int truth) const { return q[static_cast<std::size_t>(pred) * n_classes + truth]; }
    double& at(int pred, int truth) { return q[static_cast<std::size_t>(pred) * n_classes + truth]; }
    static ConfusionMatrix identity(int n_classes);
};

struct EvalResult {
    double accuracy = 0.0;
    double misdetection_rate = 0.0;  // P(predict 0 | true > 0)
    double false_alarm_rate = 0.0;   // P(predict > 0 | true = 0)
    ConfusionMatrix confusion;
};

EvalResult evaluate(const Weights& w, const Dataset& ds, const std::vector<std::size_t>& subset);

// Rows are predicted classes, columns are true classes.
void save_confusion_csv(const ConfusionMatrix& q, const std::string& path);
ConfusionMatrix load_confusion_csv(const std::string& path);

// File layout: six little-endian uint32 dims (n_ant, n_cs, conv1_out,
// conv2_out, kernel, n_classes), a uint32 parameter count, then the flat
// float32 parameter array.
void save_weights(const Weights& w, const std::string& path);
Weights load_weights(const std::string& path);

// Averaged-correlation fully connected baseline: mean over antennas, then
// n_cs -> 128 -> 64 -> n_classes with ReLU and softmax.
struct MlpArch {
    int n_cs = 8;
    int n_classes = 7;
    int hidden1 = 128;
    int hidden2 = 64;

    int param_count() const {
        return hidden1 * (n_cs + 1) + hidden2 * (hidden1 + 1) + n_classes * (hidden2 + 1);
    }
};

struct MlpWeights {
    MlpArch arch;
    std::vector<float> params;
};

MlpWeights init_mlp(const MlpArch& arch, std::uint64_t seed);
std::vector<double> mlp_forward(const MlpWeights& w, const float* window, int n_ant);

}  // namespace satrach
