#include "satrach/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace satrach {

void ClassifierArch::validate() const {
    if (n_ant < 1 || n_cs < 1 || conv1_out < 1 || conv2_out < 1 || n_classes < 2)
        throw std::invalid_argument("classifier arch: dimensions out of range");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("classifier arch: kernel must be odd and >= 1");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || batch_size < 1 || epochs < 1 || epsilon <= 0.0)
        throw std::invalid_argument("train config: values must be positive");
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("train config: betas must lie in (0, 1)");
}

namespace {

struct Workspace {
    std::vector<double> x;            // n_ant x n_cs
    std::vector<double> a1, r1;       // conv1_out x n_cs
    std::vector<double> a2, r2;       // conv2_out x n_cs
    std::vector<double> logits, probs;
    std::vector<double> da1, da2, dr1, dr2, dlogits;

    explicit Workspace(const ClassifierArch& a) {
        x.resize(static_cast<std::size_t>(a.n_ant) * a.n_cs);
        a1.resize(static_cast<std::size_t>(a.conv1_out) * a.n_cs);
        r1.resize(a1.size());
        a2.resize(static_cast<std::size_t>(a.conv2_out) * a.n_cs);
        r2.resize(a2.size());
        logits.resize(static_cast<std::size_t>(a.n_classes));
        probs.resize(logits.size());
        da1.resize(a1.size());
        da2.resize(a2.size());
        dr1.resize(a1.size());
        dr2.resize(a2.size());
        dlogits.resize(logits.size());
    }
};

void conv1d_forward(const double* w, const double* b, const double* in, double* out, int in_ch,
                    int out_ch, int len, int kernel) {
    const int pad = kernel / 2;
    for (int oc = 0; oc < out_ch; ++oc) {
        double* orow = out + static_cast<std::size_t>(oc) * len;
        for (int pos = 0; pos < len; ++pos) orow[pos] = b[oc];
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* wk = w + (static_cast<std::size_t>(oc) * in_ch + ic) * kernel;
            const double* irow = in + static_cast<std::size_t>(ic) * len;
            for (int t = 0; t < kernel; ++t) {
                const double wt = wk[t];
                const int lo = std::max(0, pad - t);
                const int hi = std::min(len, len + pad - t);
                for (int pos = lo; pos < hi; ++pos) orow[pos] += wt * irow[pos + t - pad];
            }
        }
    }
}

// d_out is the upstream gradient (already activation-masked). d_in may be
// null when the input gradient is not needed.
void conv1d_backward(const double* w, const double* in, const double* d_out, double* d_w,
                     double* d_b, double* d_in, int in_ch, int out_ch, int len, int kernel) {
    const int pad = kernel / 2;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* drow = d_out + static_cast<std::size_t>(oc) * len;
        double acc_b = 0.0;
        for (int pos = 0; pos < len; ++pos) acc_b += drow[pos];
        d_b[oc] += acc_b;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* irow = in + static_cast<std::size_t>(ic) * len;
            double* dwk = d_w + (static_cast<std::size_t>(oc) * in_ch + ic) * kernel;
            for (int t = 0; t < kernel; ++t) {
                const int lo = std::max(0, pad - t);
                const int hi = std::min(len, len + pad - t);
                double acc = 0.0;
                for (int pos = lo; pos < hi; ++pos) acc += drow[pos] * irow[pos + t - pad];
                dwk[t] += acc;
            }
            if (d_in) {
                const double* wk = w + (static_cast<std::size_t>(oc) * in_ch + ic) * kernel;
                double* dirow = d_in + static_cast<std::size_t>(ic) * len;
                for (int t = 0; t < kernel; ++t) {
                    const double wt = wk[t];
                    const int lo = std::max(0, pad - t);
                    const int hi = std::min(len, len + pad - t);
                    for (int pos = lo; pos < hi; ++pos) dirow[pos + t - pad] += wt * drow[pos];
                }
            }
        }
    }
}

void softmax(const std::vector<double>& logits, std::vector<double>& probs) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
}

void forward_core(const ClassifierArch& a, const double* p, const float* window, Workspace& ws) {
    const std::size_t in_len = static_cast<std::size_t>(a.n_ant) * a.n_cs;
    for (std::size_t i = 0; i < in_len; ++i) ws.x[i] = static_cast<double>(window[i]);

    conv1d_forward(p + a.conv1_w_off(), p + a.conv1_b_off(), ws.x.data(), ws.a1.data(), a.n_ant,
                   a.conv1_out, a.n_cs, a.kernel);
    for (std::size_t i = 0; i < ws.a1.size(); ++i) ws.r1[i] = ws.a1[i] > 0.0 ? ws.a1[i] : 0.0;

    conv1d_forward(p + a.conv2_w_off(), p + a.conv2_b_off(), ws.r1.data(), ws.a2.data(),
                   a.conv1_out, a.conv2_out, a.n_cs, a.kernel);
    for (std::size_t i = 0; i < ws.a2.size(); ++i) ws.r2[i] = ws.a2[i] > 0.0 ? ws.a2[i] : 0.0;

    const double* fcw = p + a.fc_w_off();
    const double* fcb = p + a.fc_b_off();
    const int fc_in = a.fc_in();
    for (int c = 0; c < a.n_classes; ++c) {
        double acc = fcb[c];
        const double* row = fcw + static_cast<std::size_t>(c) * fc_in;
        for (int j = 0; j < fc_in; ++j) acc += row[j] * ws.r2[static_cast<std::size_t>(j)];
        ws.logits[static_cast<std::size_t>(c)] = acc;
    }
    softmax(ws.logits, ws.probs);
}

// Cross-entropy of one sample; accumulates parameter gradients when grad is
// non-null.
double loss_and_grad(const ClassifierArch& a, const double* p, const float* window, int label,
                     Workspace& ws, double* grad) {
    forward_core(a, p, window, ws);
    const double loss = -std::log(std::max(ws.probs[static_cast<std::size_t>(label)], 1e-300));
    if (!grad) return loss;

    for (int c = 0; c < a.n_classes; ++c)
        ws.dlogits[static_cast<std::size_t>(c)] = ws.probs[static_cast<std::size_t>(c)] - (c == label ? 1.0 : 0.0);

    const double* fcw = p + a.fc_w_off();
    double* dfcw = grad + a.fc_w_off();
    double* dfcb = grad + a.fc_b_off();
    const int fc_in = a.fc_in();
    std::fill(ws.dr2.begin(), ws.dr2.end(), 0.0);
    for (int c = 0; c < a.n_classes; ++c) {
        const double dl = ws.dlogits[static_cast<std::size_t>(c)];
        dfcb[c] += dl;
        double* dwrow = dfcw + static_cast<std::size_t>(c) * fc_in;
        const double* wrow = fcw + static_cast<std::size_t>(c) * fc_in;
        for (int j = 0; j < fc_in; ++j) {
            dwrow[j] += dl * ws.r2[static_cast<std::size_t>(j)];
            ws.dr2[static_cast<std::size_t>(j)] += dl * wrow[j];
        }
    }

    for (std::size_t i = 0; i < ws.a2.size(); ++i) ws.da2[i] = ws.a2[i] > 0.0 ? ws.dr2[i] : 0.0;
    std::fill(ws.dr1.begin(), ws.dr1.end(), 0.0);
    conv1d_backward(p + a.conv2_w_off(), ws.r1.data(), ws.da2.data(), grad + a.conv2_w_off(),
                    grad + a.conv2_b_off(), ws.dr1.data(), a.conv1_out, a.conv2_out, a.n_cs,
                    a.kernel);

    for (std::size_t i = 0; i < ws.a1.size(); ++i) ws.da1[i] = ws.a1[i] > 0.0 ? ws.dr1[i] : 0.0;
    conv1d_backward(p + a.conv1_w_off(), ws.x.data(), ws.da1.data(), grad + a.conv1_w_off(),
                    grad + a.conv1_b_off(), nullptr, a.n_ant, a.conv1_out, a.n_cs, a.kernel);
    return loss;
}

std::vector<double> promote(const std::vector<float>& f) {
    std::vector<double> d(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) d[i] = static_cast<double>(f[i]);
    return d;
}

void xavier_fill(std::vector<float>& params, int off, int count, int fan_in, int fan_out,
                 Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (int i = 0; i < count; ++i)
        params[static_cast<std::size_t>(off + i)] = static_cast<float>(rng.uniform(-bound, bound));
}

}  // namespace

Weights init_weights(const ClassifierArch& arch, std::uint64_t seed) {
    arch.validate();
    Weights w;
    w.arch = arch;
    w.params.assign(static_cast<std::size_t>(arch.param_count()), 0.0f);
    Rng rng(seed);
    xavier_fill(w.params, arch.conv1_w_off(), arch.conv1_w_len(), arch.n_ant * arch.kernel,
                arch.conv1_out * arch.kernel, rng);
    xavier_fill(w.params, arch.conv2_w_off(), arch.conv2_w_len(), arch.conv1_out * arch.kernel,
                arch.conv2_out * arch.kernel, rng);
    xavier_fill(w.params, arch.fc_w_off(), arch.fc_w_len(), arch.fc_in(), arch.n_classes, rng);
    return w;
}

std::vector<double> forward(const Weights& w, const float* window) {
    Workspace ws(w.arch);
    const std::vector<double> p = promote(w.params);
    forward_core(w.arch, p.data(), window, ws);
    return ws.probs;
}

int predict(const Weights& w, const float* window) {
    const std::vector<double> probs = forward(w, window);
    int best = 0;
    for (int c = 1; c < w.arch.n_classes; ++c)
        if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
    return best;
}

TrainResult train(const ClassifierArch& arch, const Dataset& ds,
                  const std::vector<std::size_t>& subset, const TrainConfig& tc) {
    arch.validate();
    tc.validate();
    if (subset.empty()) throw std::invalid_argument("train: empty training set");
    if (ds.n_ant != arch.n_ant || ds.n_cs != arch.n_cs || ds.k_max + 1 != arch.n_classes)
        throw std::invalid_argument("train: dataset dimensions do not match architecture");

    Weights w = init_weights(arch, derive_seed(tc.seed, "init"));
    const int n_params = arch.param_count();
    std::vector<double> p = promote(w.params);
    std::vector<double> grad(static_cast<std::size_t>(n_params), 0.0);
    std::vector<double> m(static_cast<std::size_t>(n_params), 0.0);
    std::vector<double> v(static_cast<std::size_t>(n_params), 0.0);
    Workspace ws(arch);
    Rng shuffle_rng(derive_seed(tc.seed, "shuffle"));

    std::vector<std::size_t> order = subset;
    TrainResult result;
    long step = 0;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t batch_n = std::min<std::size_t>(tc.batch_size, order.size() - done);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t b = 0; b < batch_n; ++b) {
                const std::size_t rec = order[done + b];
                batch_loss += loss_and_grad(arch, p.data(), ds.window(rec),
                                            static_cast<int>(ds.labels[rec]), ws, grad.data());
            }
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "training diverged: non-finite loss at epoch " << epoch << ", sample offset "
                    << done;
                throw std::runtime_error(msg.str());
            }
            epoch_loss += batch_loss;
            const double inv_n = 1.0 / static_cast<double>(batch_n);

            ++step;
            const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(step));
            for (int i = 0; i < n_params; ++i) {
                const double g = grad[static_cast<std::size_t>(i)] * inv_n;
                m[static_cast<std::size_t>(i)] = tc.beta1 * m[static_cast<std::size_t>(i)] + (1.0 - tc.beta1) * g;
                v[static_cast<std::size_t>(i)] = tc.beta2 * v[static_cast<std::size_t>(i)] + (1.0 - tc.beta2) * g * g;
                const double mhat = m[static_cast<std::size_t>(i)] / bc1;
                const double vhat = v[static_cast<std::size_t>(i)] / bc2;
                // Parameters round to float32 after every step; that keeps the
                // in-memory state identical to a save/load round-trip.
                w.params[static_cast<std::size_t>(i)] = static_cast<float>(
                    p[static_cast<std::size_t>(i)] - tc.learning_rate * mhat / (std::sqrt(vhat) + tc.epsilon));
                p[static_cast<std::size_t>(i)] = static_cast<double>(w.params[static_cast<std::size_t>(i)]);
            }
            done += batch_n;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    result.weights = std::move(w);
    return result;
}

std::vector<double> loss_gradient(const Weights& w, const float* window, int label) {
    if (label < 0 || label >= w.arch.n_classes)
        throw std::invalid_argument("loss_gradient: label out of range");
    std::vector<double> p = promote(w.params);
    std::vector<double> grad(p.size(), 0.0);
    Workspace ws(w.arch);
    loss_and_grad(w.arch, p.data(), window, label, ws, grad.data());
    return grad;
}

double grad_check(const ClassifierArch& arch, const Weights& w, const float* window, int label,
                  int n_params, Rng& rng) {
    arch.validate();
    if (label < 0 || label >= arch.n_classes) throw std::invalid_argument("grad_check: label out of range");
    std::vector<double> p = promote(w.params);
    std::vector<double> analytic(p.size(), 0.0);
    Workspace ws(arch);
    loss_and_grad(arch, p.data(), window, label, ws, analytic.data());

    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    const std::size_t n_check = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, n_params)), idx.size());

    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t c = 0; c < n_check; ++c) {
        const std::size_t i = idx[c];
        const double saved = p[i];
        p[i] = saved + h;
        const double lp = loss_and_grad(arch, p.data(), window, label, ws, nullptr);
        p[i] = saved - h;
        const double lm = loss_and_grad(arch, p.data(), window, label, ws, nullptr);
        p[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

ConfusionMatrix ConfusionMatrix::identity(int n_classes) {
    ConfusionMatrix q;
    q.n_classes = n_classes;
    q.q.assign(static_cast<std::size_t>(n_classes) * n_classes, 0.0);
    q.column_defined.assign(static_cast<std::size_t>(n_classes), 1);
    for (int c = 0; c < n_classes; ++c) q.at(c, c) = 1.0;
    return q;
}

EvalResult evaluate(const Weights& w, const Dataset& ds, const std::vector<std::size_t>& subset) {
    if (subset.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
    if (ds.n_ant != w.arch.n_ant || ds.n_cs != w.arch.n_cs || ds.k_max + 1 != w.arch.n_classes)
        throw std::invalid_argument("evaluate: dataset dimensions do not match architecture");

    const int ncls = w.arch.n_classes;
    std::vector<long> counts(static_cast<std::size_t>(ncls) * ncls, 0);
    long correct = 0, occupied = 0, missed = 0, idle = 0, alarms = 0;

    Workspace ws(w.arch);
    const std::vector<double> p = promote(w.params);
    for (const std::size_t rec : subset) {
        forward_core(w.arch, p.data(), ds.window(rec), ws);
        int pred = 0;
        for (int c = 1; c < ncls; ++c)
            if (ws.probs[static_cast<std::size_t>(c)] > ws.probs[static_cast<std::size_t>(pred)]) pred = c;
        const int truth = static_cast<int>(ds.labels[rec]);
        ++counts[static_cast<std::size_t>(pred) * ncls + truth];
        if (pred == truth) ++correct;
        if (truth > 0) {
            ++occupied;
            if (pred == 0) ++missed;
        } else {
            ++idle;
            if (pred > 0) ++alarms;
        }
    }

    EvalResult out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(subset.size());
    out.misdetection_rate = occupied > 0 ? static_cast<double>(missed) / static_cast<double>(occupied) : 0.0;
    out.false_alarm_rate = idle > 0 ? static_cast<double>(alarms) / static_cast<double>(idle) : 0.0;

    out.confusion.n_classes = ncls;
    out.confusion.q.assign(static_cast<std::size_t>(ncls) * ncls, 0.0);
    out.confusion.column_defined.assign(static_cast<std::size_t>(ncls), 0);
    for (int truth = 0; truth < ncls; ++truth) {
        long col = 0;
        for (int pred = 0; pred < ncls; ++pred) col += counts[static_cast<std::size_t>(pred) * ncls + truth];
        if (col == 0) {
            for (int pred = 0; pred < ncls; ++pred)
                out.confusion.at(pred, truth) = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        out.confusion.column_defined[static_cast<std::size_t>(truth)] = 1;
        for (int pred = 0; pred < ncls; ++pred)
            out.confusion.at(pred, truth) =
                static_cast<double>(counts[static_cast<std::size_t>(pred) * ncls + truth]) / static_cast<double>(col);
    }
    return out;
}

void save_confusion_csv(const ConfusionMatrix& q, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write confusion matrix: " + path);
    out << "pred";
    for (int t = 0; t < q.n_classes; ++t) out << ",true_" << t;
    out << "\n";
    char buf[32];
    for (int pred = 0; pred < q.n_classes; ++pred) {
        out << pred;
        for (int t = 0; t < q.n_classes; ++t) {
            std::snprintf(buf, sizeof(buf), "%.17g", q.at(pred, t));
            out << ',' << buf;
        }
        out << "\n";
    }
}

ConfusionMatrix load_confusion_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open confusion matrix: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("confusion matrix empty: " + path);
    const int ncls = static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (ncls < 2) throw std::runtime_error("confusion matrix header malformed: " + path);

    ConfusionMatrix q;
    q.n_classes = ncls;
    q.q.assign(static_cast<std::size_t>(ncls) * ncls, 0.0);
    q.column_defined.assign(static_cast<std::size_t>(ncls), 1);
    for (int pred = 0; pred < ncls; ++pred) {
        if (!std::getline(in, line))
            throw std::runtime_error("confusion matrix truncated: " + path);
        std::stringstream ss(line);
        std::string item;
        std::getline(ss, item, ',');  // row label
        for (int t = 0; t < ncls; ++t) {
            if (!std::getline(ss, item, ','))
                throw std::runtime_error("confusion matrix row too short: " + path);
            q.at(pred, t) = std::stod(item);
        }
    }
    for (int t = 0; t < ncls; ++t)
        for (int pred = 0; pred < ncls; ++pred)
            if (std::isnan(q.at(pred, t))) q.column_defined[static_cast<std::size_t>(t)] = 0;
    return q;
}

void save_weights(const Weights& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weights: " + path);
    const std::uint32_t header[7] = {static_cast<std::uint32_t>(w.arch.n_ant),
                                     static_cast<std::uint32_t>(w.arch.n_cs),
                                     static_cast<std::uint32_t>(w.arch.conv1_out),
                                     static_cast<std::uint32_t>(w.arch.conv2_out),
                                     static_cast<std::uint32_t>(w.arch.kernel),
                                     static_cast<std::uint32_t>(w.arch.n_classes),
                                     static_cast<std::uint32_t>(w.params.size())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(w.params.data()),
              static_cast<std::streamsize>(w.params.size() * sizeof(float)));
    if (!out) throw std::runtime_error("short write on weights: " + path);
}

Weights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weights: " + path);
    std::uint32_t header[7];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw std::runtime_error("weights file truncated (header): " + path);

    Weights w;
    w.arch.n_ant = static_cast<int>(header[0]);
    w.arch.n_cs = static_cast<int>(header[1]);
    w.arch.conv1_out = static_cast<int>(header[2]);
    w.arch.conv2_out = static_cast<int>(header[3]);
    w.arch.kernel = static_cast<int>(header[4]);
    w.arch.n_classes = static_cast<int>(header[5]);
    w.arch.validate();
    if (header[6] != static_cast<std::uint32_t>(w.arch.param_count())) {
        std::ostringstream msg;
        msg << "weights file " << path << " declares " << header[6]
            << " parameters but the stored dimensions require " << w.arch.param_count();
        throw std::runtime_error(msg.str());
    }
    w.params.resize(header[6]);
    in.read(reinterpret_cast<char*>(w.params.data()),
            static_cast<std::streamsize>(w.params.size() * sizeof(float)));
    if (!in) throw std::runtime_error("weights file truncated (parameters): " + path);
    return w;
}

MlpWeights init_mlp(const MlpArch& arch, std::uint64_t seed) {
    MlpWeights w;
    w.arch = arch;
    w.params.assign(static_cast<std::size_t>(arch.param_count()), 0.0f);
    Rng rng(seed);
    int off = 0;
    const int dims[4] = {arch.n_cs, arch.hidden1, arch.hidden2, arch.n_classes};
    for (int layer = 0; layer < 3; ++layer) {
        const int fan_in = dims[layer], fan_out = dims[layer + 1];
        xavier_fill(w.params, off, fan_in * fan_out, fan_in, fan_out, rng);
        off += fan_in * fan_out + fan_out;  // biases stay zero
    }
    return w;
}

std::vector<double> mlp_forward(const MlpWeights& w, const float* window, int n_ant) {
    if (n_ant < 1) throw std::invalid_argument("mlp_forward: n_ant must be >= 1");
    const MlpArch& a = w.arch;
    std::vector<double> v(static_cast<std::size_t>(a.n_cs), 0.0);
    for (int j = 0; j < n_ant; ++j)
        for (int k = 0; k < a.n_cs; ++k)
            v[static_cast<std::size_t>(k)] += static_cast<double>(window[static_cast<std::size_t>(j) * a.n_cs + k]);
    for (auto& x : v) x /= static_cast<double>(n_ant);

    const std::vector<double> p = promote(w.params);
    const int dims[4] = {a.n_cs, a.hidden1, a.hidden2, a.n_classes};
    std::size_t off = 0;
    std::vector<double> cur = std::move(v);
    for (int layer = 0; layer < 3; ++layer) {
        const int fan_in = dims[layer], fan_out = dims[layer + 1];
        std::vector<double> nxt(static_cast<std::size_t>(fan_out));
        const double* wm = p.data() + off;
        const double* bias = p.data() + off + static_cast<std::size_t>(fan_in) * fan_out;
        for (int o = 0; o < fan_out; ++o) {
            double acc = bias[o];
            const double* row = wm + static_cast<std::size_t>(o) * fan_in;
            for (int i = 0; i < fan_in; ++i) acc += row[i] * cur[static_cast<std::size_t>(i)];
            nxt[static_cast<std::size_t>(o)] = layer < 2 ? std::max(0.0, acc) : acc;
        }
        off += static_cast<std::size_t>(fan_in) * fan_out + static_cast<std::size_t>(fan_out);
        cur = std::move(nxt);
    }
    std::vector<double> probs(cur.size());
    softmax(cur, probs);
    return probs;
}

}  // namespace satrach
