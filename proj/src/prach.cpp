#include "satrach/prach.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace satrach {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; static_cast<long long>(d) * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

void PrachConfig::validate() const {
    if (!is_prime(n_zc)) throw std::invalid_argument("prach: n_zc must be prime");
    if (n_cs < 1 || n_cs > n_zc) throw std::invalid_argument("prach: n_cs out of range");
    if (roots.empty()) throw std::invalid_argument("prach: at least one root required");
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (roots[i] < 1 || roots[i] >= n_zc)
            throw std::invalid_argument("prach: root index out of range [1, n_zc-1]");
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (roots[i] == roots[j]) throw std::invalid_argument("prach: duplicate root index");
    }
    if (n_ant < 1) throw std::invalid_argument("prach: n_ant must be >= 1");
    if (sample_period_us <= 0.0) throw std::invalid_argument("prach: sample_period_us must be > 0");
    if (tau_e_max < 0) throw std::invalid_argument("prach: tau_e_max must be >= 0");
    if (2 * tau_e_max >= n_cs)
        throw std::invalid_argument("prach: 2*tau_e_max must be smaller than n_cs");
}

Preamble PrachConfig::preamble_at(int index) const {
    if (index < 0 || index >= n_preambles())
        throw std::invalid_argument("prach: preamble index out of range");
    const int spr = shifts_per_root();
    return Preamble{roots[static_cast<std::size_t>(index / spr)], index % spr};
}

int PrachConfig::index_of(const Preamble& p) const {
    check_preamble(p);
    for (std::size_t r = 0; r < roots.size(); ++r)
        if (roots[r] == p.root) return static_cast<int>(r) * shifts_per_root() + p.shift;
    return -1;  // unreachable, check_preamble throws first
}

void PrachConfig::check_preamble(const Preamble& p) const {
    if (p.shift < 0 || p.shift >= shifts_per_root())
        throw std::invalid_argument("preamble: shift out of range");
    if (std::find(roots.begin(), roots.end(), p.root) == roots.end())
        throw std::invalid_argument("preamble: root not configured");
}

CxSeq zc_root_sequence(int root, int n_zc) {
    if (!is_prime(n_zc)) throw std::invalid_argument("zc_root_sequence: n_zc must be prime");
    if (root < 1 || root >= n_zc)
        throw std::invalid_argument("zc_root_sequence: root out of range [1, n_zc-1]");
    CxSeq z(static_cast<std::size_t>(n_zc));
    const double pi_over_n = kTwoPi / 2.0 / static_cast<double>(n_zc);
    for (int n = 0; n < n_zc; ++n) {
        // r*n*(n+1) reduced mod 2*N_ZC keeps the phase argument small.
        const long long q =
            (static_cast<long long>(root) * n % (2LL * n_zc)) * (n + 1) % (2LL * n_zc);
        const double phase = -pi_over_n * static_cast<double>(q);
        z[static_cast<std::size_t>(n)] = Cx(std::cos(phase), std::sin(phase));
    }
    return z;
}

CxSeq shifted_preamble(const Preamble& p, const PrachConfig& cfg) {
    cfg.validate();
    cfg.check_preamble(p);
    const CxSeq base = zc_root_sequence(p.root, cfg.n_zc);
    CxSeq out(base.size());
    const int n = cfg.n_zc;
    const int off = p.shift * cfg.n_cs;
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>((i + off) % n)];
    return out;
}

std::vector<double> cyclic_xcorr(const CxSeq& a, const CxSeq& b, CorrNorm norm) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("cyclic_xcorr: sequences must have equal nonzero length");
    const int n = static_cast<int>(a.size());
    const double scale =
        norm == CorrNorm::sqrt_n ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0 / static_cast<double>(n);
    std::vector<double> mags(a.size());
    for (int m = 0; m < n; ++m) {
        Cx acc{0.0, 0.0};
        const int split = n - m;
        for (int i = 0; i < split; ++i) acc += a[static_cast<std::size_t>(i)] * std::conj(b[static_cast<std::size_t>(i + m)]);
        for (int i = split; i < n; ++i) acc += a[static_cast<std::size_t>(i)] * std::conj(b[static_cast<std::size_t>(i + m - n)]);
        mags[static_cast<std::size_t>(m)] = std::abs(acc) * scale;
    }
    return mags;
}

CxSeq synthesize_tx(const UserTx& u, const PrachConfig& cfg) {
    if (u.power <= 0.0) throw std::invalid_argument("synthesize_tx: power must be > 0");
    if (std::abs(u.residual_timing_samples) > cfg.tau_e_max)
        throw std::invalid_argument("synthesize_tx: residual timing exceeds tau_e_max");
    cfg.check_preamble(u.preamble);

    const CxSeq base = zc_root_sequence(u.preamble.root, cfg.n_zc);
    const int n = cfg.n_zc;
    const double amp = std::sqrt(u.power);
    // Cyclic advance by the shift plus the applied timing pre-compensation.
    const int adv = ((u.preamble.shift * cfg.n_cs + u.ta_precomp_samples) % n + n) % n;
    const double ts = cfg.sample_period_us * 1e-6;

    CxSeq s(static_cast<std::size_t>(n));
    if (u.freq_precomp_hz == 0.0) {
        for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = amp * base[static_cast<std::size_t>((i + adv) % n)];
    } else {
        for (int i = 0; i < n; ++i) {
            const double phase = -kTwoPi * u.freq_precomp_hz * static_cast<double>(i) * ts;
            s[static_cast<std::size_t>(i)] =
                amp * base[static_cast<std::size_t>((i + adv) % n)] * Cx(std::cos(phase), std::sin(phase));
        }
    }
    return s;
}

AntennaSignals superpose_receive(const std::vector<UserTx>& users,
                                 const std::vector<ChannelRealization>& channels,
                                 double noise_var, const PrachConfig& cfg, Rng& rng) {
    if (users.size() != channels.size())
        throw std::invalid_argument("superpose_receive: one channel realization per user required");
    if (noise_var < 0.0) throw std::invalid_argument("superpose_receive: noise_var must be >= 0");

    const int n = cfg.n_zc;
    const double ts = cfg.sample_period_us * 1e-6;
    AntennaSignals rx(static_cast<std::size_t>(cfg.n_ant), CxSeq(static_cast<std::size_t>(n), Cx{0.0, 0.0}));

    std::vector<CxSeq> tx;
    tx.reserve(users.size());
    for (const auto& u : users) tx.push_back(synthesize_tx(u, cfg));

    CxSeq contrib(static_cast<std::size_t>(n));
    for (std::size_t d = 0; d < users.size(); ++d) {
        const auto& ch = channels[d];
        if (ch.gains.size() != static_cast<std::size_t>(cfg.n_ant) ||
            ch.delays.empty())
            throw std::invalid_argument("superpose_receive: channel dimensions do not match config");
        for (int j = 0; j < cfg.n_ant; ++j) {
            if (ch.gains[static_cast<std::size_t>(j)].size() != ch.delays.size())
                throw std::invalid_argument("superpose_receive: gain/delay count mismatch");
            std::fill(contrib.begin(), contrib.end(), Cx{0.0, 0.0});
            for (std::size_t l = 0; l < ch.delays.size(); ++l) {
                const Cx h = ch.gains[static_cast<std::size_t>(j)][l];
                const int shift =
                    ((ch.delays[l] + users[d].residual_timing_samples) % n + n) % n;
                const Cx* s = tx[d].data();
                Cx* out = contrib.data();
                const int split = n - shift;
                for (int i = 0; i < split; ++i) out[i] += h * s[i + shift];
                for (int i = split; i < n; ++i) out[i] += h * s[i + shift - n];
            }
            auto& acc = rx[static_cast<std::size_t>(j)];
            if (users[d].residual_freq_hz != 0.0) {
                const double w = -kTwoPi * users[d].residual_freq_hz * ts;
                for (int i = 0; i < n; ++i)
                    acc[static_cast<std::size_t>(i)] +=
                        contrib[static_cast<std::size_t>(i)] * Cx(std::cos(w * i), std::sin(w * i));
            } else {
                for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += contrib[static_cast<std::size_t>(i)];
            }
        }
    }

    if (noise_var > 0.0) {
        for (int j = 0; j < cfg.n_ant; ++j)
            for (int i = 0; i < n; ++i)
                rx[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] += rng.complex_gaussian(noise_var);
    }
    return rx;
}

int window_start_lag(int shift, const PrachConfig& cfg) {
    const int n = cfg.n_zc;
    return ((shift * cfg.n_cs - cfg.tau_e_max) % n + n) % n;
}

namespace {

// Correlation magnitudes of rx against conj(root) at n_cs consecutive lags
// starting at `start`, one row per antenna, written into w.
void fill_window(const AntennaSignals& rx, const CxSeq& root_seq, int start,
                 const PrachConfig& cfg, CorrelationWindow& w) {
    const int n = cfg.n_zc;
    const double scale = 1.0 / static_cast<double>(n);
    for (int j = 0; j < cfg.n_ant; ++j) {
        const Cx* y = rx[static_cast<std::size_t>(j)].data();
        for (int k = 0; k < cfg.n_cs; ++k) {
            const int m = (start + k) % n;
            Cx acc{0.0, 0.0};
            const Cx* z = root_seq.data();
            const int split = n - m;
            for (int i = 0; i < split; ++i) acc += y[i] * std::conj(z[i + m]);
            for (int i = split; i < n; ++i) acc += y[i] * std::conj(z[i + m - n]);
            w.at(j, k) = static_cast<float>(std::abs(acc) * scale);
        }
    }
}

}  // namespace

std::vector<CorrelationWindow> correlate_windows(const AntennaSignals& rx, int root,
                                                 const PrachConfig& cfg) {
    if (rx.size() != static_cast<std::size_t>(cfg.n_ant))
        throw std::invalid_argument("correlate_windows: antenna count mismatch");
    for (const auto& seq : rx)
        if (seq.size() != static_cast<std::size_t>(cfg.n_zc))
            throw std::invalid_argument("correlate_windows: sequence length mismatch");

    const CxSeq root_seq = zc_root_sequence(root, cfg.n_zc);
    std::vector<CorrelationWindow> out;
    out.reserve(static_cast<std::size_t>(cfg.shifts_per_root()));
    for (int i = 0; i < cfg.shifts_per_root(); ++i) {
        CorrelationWindow w;
        w.n_ant = cfg.n_ant;
        w.n_cs = cfg.n_cs;
        w.root = root;
        w.preamble_index = cfg.index_of(Preamble{root, i});
        w.values.assign(static_cast<std::size_t>(cfg.n_ant) * cfg.n_cs, 0.0f);
        fill_window(rx, root_seq, window_start_lag(i, cfg), cfg, w);
        out.push_back(std::move(w));
    }
    return out;
}

CorrelationWindow extract_window(const AntennaSignals& rx, const Preamble& p,
                                 const PrachConfig& cfg) {
    cfg.check_preamble(p);
    const CxSeq root_seq = zc_root_sequence(p.root, cfg.n_zc);
    CorrelationWindow w;
    w.n_ant = cfg.n_ant;
    w.n_cs = cfg.n_cs;
    w.root = p.root;
    w.preamble_index = cfg.index_of(p);
    w.values.assign(static_cast<std::size_t>(cfg.n_ant) * cfg.n_cs, 0.0f);
    fill_window(rx, root_seq, window_start_lag(p.shift, cfg), cfg, w);
    return w;
}

bool threshold_detect(const CorrelationWindow& w, double threshold) {
    if (threshold < 0.0) throw std::invalid_argument("threshold_detect: threshold must be >= 0");
    double best = 0.0;
    for (int k = 0; k < w.n_cs; ++k) {
        double avg = 0.0;
        for (int j = 0; j < w.n_ant; ++j) avg += w.at(j, k);
        avg /= static_cast<double>(w.n_ant);
        best = std::max(best, avg);
    }
    return best > threshold;
}

}  // namespace satrach
