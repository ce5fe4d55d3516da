#include "satrach/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <stdexcept>
#include <thread>

namespace satrach {

namespace {

struct Cell {
    double snr_db;
    int label;
    std::uint64_t seed;
};

// One (snr, class) cell: n samples, each a fresh reception of `label` users
// on one shared preamble.
std::vector<float> gen_cell(const PrachConfig& cfg, const TdlProfile& profile, int k_max,
                            const Cell& cell, int n_samples) {
    Rng rng(cell.seed);
    const double noise_var = noise_variance_for_snr_db(cell.snr_db);
    const std::size_t wlen = static_cast<std::size_t>(cfg.n_ant) * cfg.n_cs;
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(n_samples) * wlen);

    const int n_users = std::min(cell.label, k_max);
    for (int s = 0; s < n_samples; ++s) {
        const Preamble p = cfg.preamble_at(static_cast<int>(rng.uniform_int(0, cfg.n_preambles() - 1)));
        std::vector<UserTx> users;
        std::vector<ChannelRealization> channels;
        users.reserve(static_cast<std::size_t>(n_users));
        channels.reserve(static_cast<std::size_t>(n_users));
        for (int u = 0; u < n_users; ++u) {
            UserTx tx;
            tx.preamble = p;
            tx.residual_timing_samples = sample_timing_residual(cfg.tau_e_max, rng);
            users.push_back(tx);
            channels.push_back(sample_channel(profile, cfg.n_ant, rng));
        }
        const AntennaSignals rx = superpose_receive(users, channels, noise_var, cfg, rng);
        const CorrelationWindow w = extract_window(rx, p, cfg);
        out.insert(out.end(), w.values.begin(), w.values.end());
    }
    return out;
}

}  // namespace

Dataset gen_dataset(const PrachConfig& cfg, const TdlProfile& profile, int k_max,
                    const std::vector<double>& snr_grid, int n_per_class_per_snr,
                    std::uint64_t seed, int n_threads) {
    cfg.validate();
    profile.validate(cfg.n_cs, cfg.tau_e_max);
    if (k_max < 1) throw std::invalid_argument("gen_dataset: k_max must be >= 1");
    if (snr_grid.empty()) throw std::invalid_argument("gen_dataset: snr_grid must be non-empty");
    if (n_per_class_per_snr < 1)
        throw std::invalid_argument("gen_dataset: n_per_class_per_snr must be >= 1");

    std::vector<Cell> cells;
    for (std::size_t si = 0; si < snr_grid.size(); ++si)
        for (int k = 0; k <= k_max; ++k)
            cells.push_back(Cell{snr_grid[si], k,
                                 derive_seed(derive_seed(seed, "dataset"),
                                             si * static_cast<std::size_t>(k_max + 1) + static_cast<std::size_t>(k))});

    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;

    std::vector<std::future<std::vector<float>>> futures(cells.size());
    std::size_t next = 0;
    while (next < cells.size()) {
        const std::size_t batch_end = std::min(next + static_cast<std::size_t>(n_threads), cells.size());
        for (std::size_t c = next; c < batch_end; ++c)
            futures[c] = std::async(std::launch::async, gen_cell, std::cref(cfg), std::cref(profile),
                                    k_max, cells[c], n_per_class_per_snr);
        for (std::size_t c = next; c < batch_end; ++c) futures[c].wait();
        next = batch_end;
    }

    Dataset ds;
    ds.n_ant = cfg.n_ant;
    ds.n_cs = cfg.n_cs;
    ds.k_max = k_max;
    ds.profile_name = profile.name;
    const std::size_t total = cells.size() * static_cast<std::size_t>(n_per_class_per_snr);
    ds.labels.reserve(total);
    ds.snr_db.reserve(total);
    ds.values.reserve(total * ds.window_len());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::vector<float> vals = futures[c].get();
        ds.values.insert(ds.values.end(), vals.begin(), vals.end());
        for (int s = 0; s < n_per_class_per_snr; ++s) {
            ds.labels.push_back(static_cast<std::uint8_t>(cells[c].label));
            ds.snr_db.push_back(static_cast<float>(cells[c].snr_db));
        }
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    const std::uint32_t header[4] = {static_cast<std::uint32_t>(ds.n_ant),
                                     static_cast<std::uint32_t>(ds.n_cs),
                                     static_cast<std::uint32_t>(ds.k_max),
                                     static_cast<std::uint32_t>(ds.size())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    const std::size_t wlen = ds.window_len();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.write(reinterpret_cast<const char*>(&ds.labels[i]), 1);
        out.write(reinterpret_cast<const char*>(&ds.snr_db[i]), sizeof(float));
        out.write(reinterpret_cast<const char*>(ds.window(i)), static_cast<std::streamsize>(wlen * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short write on dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw std::runtime_error("dataset truncated (header): " + path);

    Dataset ds;
    ds.n_ant = static_cast<int>(header[0]);
    ds.n_cs = static_cast<int>(header[1]);
    ds.k_max = static_cast<int>(header[2]);
    const std::size_t count = header[3];
    if (ds.n_ant < 1 || ds.n_cs < 1 || ds.k_max < 1)
        throw std::runtime_error("dataset header has invalid dimensions: " + path);

    const std::size_t wlen = ds.window_len();
    ds.labels.resize(count);
    ds.snr_db.resize(count);
    ds.values.resize(count * wlen);
    for (std::size_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(&ds.labels[i]), 1);
        in.read(reinterpret_cast<char*>(&ds.snr_db[i]), sizeof(float));
        in.read(reinterpret_cast<char*>(ds.values.data() + i * wlen),
                static_cast<std::streamsize>(wlen * sizeof(float)));
        if (!in) throw std::runtime_error("dataset truncated at record " + std::to_string(i) + ": " + path);
        if (ds.labels[i] > static_cast<std::uint8_t>(ds.k_max))
            throw std::runtime_error("dataset label out of range at record " + std::to_string(i));
    }
    return ds;
}

SplitIndices split_stratified(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (train_fraction < 0.0 || train_fraction > 1.0)
        throw std::invalid_argument("split_stratified: train_fraction must be in [0, 1]");
    std::map<std::pair<int, float>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < ds.size(); ++i)
        strata[{ds.labels[i], ds.snr_db[i]}].push_back(i);

    SplitIndices out;
    std::uint64_t stratum_idx = 0;
    for (auto& [key, idx] : strata) {
        Rng rng(derive_seed(derive_seed(seed, "split"), stratum_idx++));
        rng.shuffle(idx);
        const std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(idx.size()));
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace satrach
