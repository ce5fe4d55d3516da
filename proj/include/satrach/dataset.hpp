#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satrach/channel.hpp"
#include "satrach/prach.hpp"

namespace satrach {

// Labeled correlation windows, stored flat. Record i owns
// values[i*n_ant*n_cs .. (i+1)*n_ant*n_cs) in antenna-major order.
struct Dataset {
    int n_ant = 0;
    int n_cs = 0;
    int k_max = 0;  // labels run 0..k_max, k_max meaning "k_max or more"
    std::vector<std::uint8_t> labels;
    std::vector<float> snr_db;
    std::vector<float> values;
    std::string profile_name;  // metadata only, not serialized

    std::size_t size() const { return labels.size(); }
    std::size_t window_len() const { return static_cast<std::size_t>(n_ant) * n_cs; }
    const float* window(std::size_t i) const { return values.data() + i * window_len(); }
};

// For each (snr, class k) pair, synthesizes n_per_class_per_snr receptions of
// k users on one shared randomly chosen preamble, each user with its own
// channel realization and residual timing error, and extracts that zone's
// window. Class balance is exact. Cells are generated on independent seed
// substreams and merged in (snr, class) order, so the result does not depend
// on threading.
Dataset gen_dataset(const PrachConfig& cfg, const TdlProfile& profile, int k_max,
                    const std::vector<double>& snr_grid, int n_per_class_per_snr,
                    std::uint64_t seed, int n_threads = 0);

// Binary layout: header of four little-endian uint32 (n_ant, n_cs, k_max,
// count), then per record one label byte, the SNR as float32, and the
// antenna-major float32 window.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Deterministic stratified split by (label, snr); each stratum is shuffled on
// a substream of `seed` and its first floor(train_fraction * size) records go
// to the first output.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
SplitIndices split_stratified(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace satrach
