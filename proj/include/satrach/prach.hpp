#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "satrach/channel.hpp"
#include "satrach/rng.hpp"

namespace satrach {

using Cx = std::complex<double>;
using CxSeq = std::vector<Cx>;
// One sequence per receive antenna.
using AntennaSignals = std::vector<CxSeq>;

enum class CorrNorm {
    sqrt_n,  // 1/sqrt(N_ZC): the analytic auto/cross-correlation identities
    full_n,  // 1/N_ZC: the receiver form
};

struct Preamble {
    int root = 1;
    int shift = 0;
};

struct PrachConfig {
    int n_zc = 839;                       // sequence length, prime
    int n_cs = 8;                         // cyclic shift size
    std::vector<int> roots = {1};         // distinct root indices in [1, n_zc-1]
    int n_ant = 8;                        // receive antennas
    double sample_period_us = 1.0 / 1.08; // T_s for a 1.08 MHz PRACH
    int tau_e_max = 2;                    // worst-case timing pre-compensation error

    void validate() const;  // throws std::invalid_argument

    int shifts_per_root() const { return n_zc / n_cs; }
    int n_preambles() const { return static_cast<int>(roots.size()) * shifts_per_root(); }

    // Flat preamble index <-> (root, shift); index is root-major.
    Preamble preamble_at(int index) const;
    int index_of(const Preamble& p) const;
    void check_preamble(const Preamble& p) const;
};

struct UserTx {
    double power = 1.0;              // linear transmit power P_d
    Preamble preamble;
    int ta_precomp_samples = 0;      // applied timing-advance pre-compensation
    double freq_precomp_hz = 0.0;    // applied Doppler pre-compensation
    int residual_timing_samples = 0; // signed, |.| <= tau_e_max
    double residual_freq_hz = 0.0;
};

// Per-antenna correlation magnitudes over one cyclic-shift zone.
struct CorrelationWindow {
    int n_ant = 0;
    int n_cs = 0;
    int preamble_index = 0;
    int root = 1;
    std::vector<float> values;  // n_ant x n_cs, antenna-major

    float at(int ant, int lag) const { return values[static_cast<std::size_t>(ant) * n_cs + lag]; }
    float& at(int ant, int lag) { return values[static_cast<std::size_t>(ant) * n_cs + lag]; }
};

bool is_prime(int n);

// z_r[n] = exp(-j*pi*r*n*(n+1)/N_ZC)
CxSeq zc_root_sequence(int root, int n_zc);

// z_{r,i}[n] = z_r[(n + i*N_CS) mod N_ZC]
CxSeq shifted_preamble(const Preamble& p, const PrachConfig& cfg);

// |c[m]| = |norm * sum_n a[n] * conj(b[(n+m) mod N])| for all lags m.
std::vector<double> cyclic_xcorr(const CxSeq& a, const CxSeq& b, CorrNorm norm);

// sqrt(P_d) * z_{r,i}[(n + ta) mod N] * exp(-j*2*pi*f_hat*n*T_s)
CxSeq synthesize_tx(const UserTx& u, const PrachConfig& cfg);

// Sum of all users' signals through their channel realizations plus
// circularly symmetric complex Gaussian noise of variance noise_var per
// antenna sample. Timing shifts (path delay + residual error) are cyclic.
// The rng is consumed for noise only, and only when noise_var > 0.
AntennaSignals superpose_receive(const std::vector<UserTx>& users,
                                 const std::vector<ChannelRealization>& channels,
                                 double noise_var, const PrachConfig& cfg, Rng& rng);

// Lag index where the detection window of shift i starts. Windows lead the
// nominal shift position by tau_e_max so the two-sided residual timing error
// plus the channel delay spread stays inside one zone.
int window_start_lag(int shift, const PrachConfig& cfg);

// Receiver-form (1/N_ZC) correlation of rx against one root, sliced into one
// window per cyclic-shift zone of that root.
std::vector<CorrelationWindow> correlate_windows(const AntennaSignals& rx, int root,
                                                 const PrachConfig& cfg);

// Same as correlate_windows but computes only the zone of one preamble.
CorrelationWindow extract_window(const AntennaSignals& rx, const Preamble& p,
                                 const PrachConfig& cfg);

// True iff the maximum of the antenna-averaged window strictly exceeds the
// threshold.
bool threshold_detect(const CorrelationWindow& w, double threshold);

// Noise variance for a given SNR in dB under the unit-signal-power
// convention: per antenna, per sample, with unit-power preamble symbols and
// unit total average channel power.
inline double noise_variance_for_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace satrach
