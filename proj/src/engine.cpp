#include "satrach/engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "satrach/ioutil.hpp"

namespace satrach {

const char* detector_name(Detector d) {
    return d == Detector::oracle ? "oracle" : "trained_classifier";
}

Detector detector_from_name(const std::string& name) {
    if (name == "oracle") return Detector::oracle;
    if (name == "trained_classifier") return Detector::trained_classifier;
    throw std::invalid_argument("unknown detector: " + name);
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::succeeded: return "succeeded";
        case Outcome::failed: return "failed";
        case Outcome::in_flight: return "in_flight";
    }
    return "unknown";
}

void SimConfig::validate() const {
    if (n_users < 0) throw std::invalid_argument("sim: n_users must be >= 0");
    if (n_slots < 1) throw std::invalid_argument("sim: n_slots must be >= 1");
    if (max_retries < 1) throw std::invalid_argument("sim: max_retries must be >= 1");
    for (const double d : {slot_period_ms, t_step1_ms, t_detect_ms, t_step2_ms, t_proc23_ms,
                           t_step3_ms, t_step4_ms, rar_window_ms, cr_window_ms, backoff_window_ms})
        if (d <= 0.0) throw std::invalid_argument("sim: all durations must be > 0");
    if (k_max < 1) throw std::invalid_argument("sim: k_max must be >= 1");
    if (arrival == ArrivalModel::poisson && arrival_rate_per_slot <= 0.0)
        throw std::invalid_argument("sim: poisson arrivals need arrival_rate_per_slot > 0");
    prach.validate();
    profile.validate(prach.n_cs, prach.tau_e_max);
}

namespace {

struct UserSim {
    Outcome outcome = Outcome::in_flight;
    int attempts = 0;
    double owd = 0.0;
    double next_time = 0.0;
    double first_attempt = -1.0;
    double outcome_time = 0.0;
    int preamble = -1;  // this slot's choice
};

// Per-slot classifier pass: synthesize the composite reception of all active
// users at the configured SNR and classify every zone of every root.
std::vector<int> classify_slot(const SimConfig& cfg, const Weights& w,
                               const std::vector<int>& active_ids,
                               const std::vector<UserSim>& users, Rng& chan_rng) {
    std::vector<UserTx> txs;
    std::vector<ChannelRealization> chans;
    txs.reserve(active_ids.size());
    chans.reserve(active_ids.size());
    for (const int id : active_ids) {
        UserTx tx;
        tx.preamble = cfg.prach.preamble_at(users[static_cast<std::size_t>(id)].preamble);
        tx.residual_timing_samples = sample_timing_residual(cfg.prach.tau_e_max, chan_rng);
        txs.push_back(tx);
        chans.push_back(sample_channel(cfg.profile, cfg.prach.n_ant, chan_rng));
    }
    const AntennaSignals rx =
        superpose_receive(txs, chans, noise_variance_for_snr_db(cfg.snr_db), cfg.prach, chan_rng);

    std::vector<int> k_hat(static_cast<std::size_t>(cfg.prach.n_preambles()), 0);
    for (const int root : cfg.prach.roots) {
        const std::vector<CorrelationWindow> windows = correlate_windows(rx, root, cfg.prach);
        for (const auto& win : windows)
            k_hat[static_cast<std::size_t>(win.preamble_index)] = predict(w, win.values.data());
    }
    return k_hat;
}

}  // namespace

ScenarioResult run_scenario(const SimConfig& cfg, const Weights* weights,
                            const ConfusionMatrix* confusion) {
    cfg.validate();
    if (cfg.detector == Detector::trained_classifier) {
        if (!weights)
            throw std::invalid_argument("run_scenario: trained_classifier detector needs weights");
        if (weights->arch.n_ant != cfg.prach.n_ant || weights->arch.n_cs != cfg.prach.n_cs ||
            weights->arch.n_classes != cfg.k_max + 1)
            throw std::invalid_argument("run_scenario: weights do not match prach config / k_max");
        if (cfg.scheme == Scheme::proposed && !confusion)
            throw std::invalid_argument(
                "run_scenario: proposed scheme with trained_classifier needs a confusion matrix");
    }
    ConfusionMatrix q = confusion ? *confusion : ConfusionMatrix::identity(cfg.k_max + 1);
    if (q.n_classes != cfg.k_max + 1)
        throw std::invalid_argument("run_scenario: confusion matrix does not match k_max");

    Rng protocol(derive_seed(cfg.seed, "protocol"));
    Rng chan(derive_seed(cfg.seed, "channel"));
    const int n_pa = cfg.prach.n_preambles();

    std::vector<UserSim> users(static_cast<std::size_t>(cfg.n_users));
    for (auto& u : users) u.owd = sample_propagation_delay(cfg.geometry, chan);
    if (cfg.arrival == ArrivalModel::poisson) {
        double t_arr = 0.0;
        for (auto& u : users) {
            double draw = protocol.uniform();
            if (draw < 1e-300) draw = 1e-300;
            t_arr += -std::log(draw) / cfg.arrival_rate_per_slot * cfg.slot_period_ms;
            u.next_time = t_arr;
        }
    }

    long grants_total = 0, grants_success = 0;
    AccessPolicy first_policy;
    int first_policy_slot = -1;
    int n_terminal = 0;

    std::vector<int> active_ids;
    std::vector<std::vector<int>> by_preamble(static_cast<std::size_t>(n_pa));
    std::vector<int> entry_of(static_cast<std::size_t>(n_pa), -1);

    auto fail_attempt = [&](UserSim& u, double fail_time) {
        if (u.attempts >= cfg.max_retries) {
            u.outcome = Outcome::failed;
            u.outcome_time = fail_time;
            ++n_terminal;
        } else {
            u.next_time = fail_time + protocol.uniform(0.0, cfg.backoff_window_ms);
        }
    };

    for (int slot = 0; slot < cfg.n_slots && n_terminal < cfg.n_users; ++slot) {
        const double t = static_cast<double>(slot) * cfg.slot_period_ms;

        active_ids.clear();
        for (int id = 0; id < cfg.n_users; ++id) {
            UserSim& u = users[static_cast<std::size_t>(id)];
            if (u.outcome == Outcome::in_flight && u.next_time <= t) active_ids.push_back(id);
        }
        if (active_ids.empty()) continue;

        // Step 1: every ready user draws a preamble uniformly.
        for (auto& v : by_preamble) v.clear();
        for (const int id : active_ids) {
            UserSim& u = users[static_cast<std::size_t>(id)];
            ++u.attempts;
            if (u.first_attempt < 0.0) u.first_attempt = t;
            u.preamble = static_cast<int>(protocol.uniform_int(0, n_pa - 1));
            by_preamble[static_cast<std::size_t>(u.preamble)].push_back(id);
        }

        // Step 2: detection / classification, then the per-scheme policy.
        std::vector<int> k_hat;
        if (cfg.detector == Detector::oracle) {
            k_hat.assign(static_cast<std::size_t>(n_pa), 0);
            for (int p = 0; p < n_pa; ++p)
                k_hat[static_cast<std::size_t>(p)] =
                    std::min<int>(static_cast<int>(by_preamble[static_cast<std::size_t>(p)].size()), cfg.k_max);
        } else {
            k_hat = classify_slot(cfg, *weights, active_ids, users, chan);
        }
        const AccessPolicy policy = build_policy(k_hat, q, cfg.scheme, n_pa, cfg.k_max);
        grants_total += static_cast<long>(policy.entries.size());
        if (first_policy_slot < 0 && !policy.entries.empty()) {
            first_policy = policy;
            first_policy_slot = slot;
        }

        std::fill(entry_of.begin(), entry_of.end(), -1);
        for (std::size_t e = 0; e < policy.entries.size(); ++e)
            entry_of[static_cast<std::size_t>(policy.entries[e].preamble_index)] = static_cast<int>(e);

        // Steps 3 and 4, resolved preamble by preamble. The user-side RAR
        // window opens after the user's own GNSS-known RTT, so reception only
        // hinges on the base-station processing budget.
        const bool rar_in_window = cfg.t_detect_ms + cfg.t_step2_ms <= cfg.rar_window_ms;
        for (int p = 0; p < n_pa; ++p) {
            const auto& ids = by_preamble[static_cast<std::size_t>(p)];
            const int e = entry_of[static_cast<std::size_t>(p)];
            if (e < 0) {
                // Classified idle or withheld: no RAR, users time out on the
                // RAR window and back off.
                for (const int id : ids) {
                    UserSim& u = users[static_cast<std::size_t>(id)];
                    fail_attempt(u, t + cfg.t_step1_ms + 2.0 * u.owd + cfg.rar_window_ms);
                }
                continue;
            }
            const PolicyEntry& entry = policy.entries[static_cast<std::size_t>(e)];
            int tx_count = 0;
            int tx_id = -1;
            double tx_step3_end = 0.0;
            for (const int id : ids) {
                UserSim& u = users[static_cast<std::size_t>(id)];
                const double rar_time = t + cfg.t_step1_ms + cfg.t_detect_ms + cfg.t_step2_ms + 2.0 * u.owd;
                if (!rar_in_window) {
                    fail_attempt(u, t + cfg.t_step1_ms + 2.0 * u.owd + cfg.rar_window_ms);
                    continue;
                }
                if (!user_decision(entry, protocol)) {
                    // Opportunistic backoff right after the Step-3 decision.
                    fail_attempt(u, rar_time);
                    continue;
                }
                const double step3_end = rar_time + cfg.t_proc23_ms + cfg.t_step3_ms;
                ++tx_count;
                if (tx_count == 1) {
                    tx_id = id;
                    tx_step3_end = step3_end;
                } else {
                    // Collision: this transmitter will wait out the CR window.
                    UserSim& loser = users[static_cast<std::size_t>(id)];
                    fail_attempt(loser, step3_end + cfg.cr_window_ms);
                }
            }
            if (tx_count == 1) {
                UserSim& u = users[static_cast<std::size_t>(tx_id)];
                ++grants_success;  // solo Step 3 decodes regardless of the CR leg
                if (2.0 * u.owd + cfg.t_step4_ms <= cfg.cr_window_ms) {
                    u.outcome = Outcome::succeeded;
                    u.outcome_time = tx_step3_end + u.owd + cfg.t_step4_ms + u.owd;
                    ++n_terminal;
                } else {
                    // CR cannot arrive inside the window under this config
                    fail_attempt(u, tx_step3_end + cfg.cr_window_ms);
                }
            } else if (tx_count >= 2) {
                UserSim& u = users[static_cast<std::size_t>(tx_id)];
                fail_attempt(u, tx_step3_end + cfg.cr_window_ms);
            }
            // tx_count == 0: the grant is simply wasted (opportunistic
            // backoff of everyone, or a false-alarm grant on an idle zone).
        }
    }

    ScenarioResult result;
    result.first_policy = std::move(first_policy);
    result.first_policy_slot = first_policy_slot;
    result.traces.reserve(users.size());
    for (int id = 0; id < cfg.n_users; ++id) {
        const UserSim& u = users[static_cast<std::size_t>(id)];
        UserTrace tr;
        tr.id = id;
        tr.outcome = u.outcome;
        tr.attempts = u.attempts;
        tr.first_attempt_ms = std::max(u.first_attempt, 0.0);
        tr.outcome_ms = u.outcome_time;
        tr.owd_ms = u.owd;
        result.traces.push_back(tr);
    }
    result.metrics = compute_metrics(result.traces, grants_total, grants_success);
    return result;
}

SimMetrics compute_metrics(const std::vector<UserTrace>& traces, long grants_total,
                           long grants_success) {
    SimMetrics m;
    m.grants_total = grants_total;
    m.grants_success = grants_success;
    double delay_sum = 0.0, success_delay_sum = 0.0;
    for (const auto& tr : traces) {
        switch (tr.outcome) {
            case Outcome::succeeded:
                ++m.n_success;
                delay_sum += tr.outcome_ms - tr.first_attempt_ms;
                success_delay_sum += tr.outcome_ms - tr.first_attempt_ms;
                break;
            case Outcome::failed:
                ++m.n_failed;
                delay_sum += tr.outcome_ms - tr.first_attempt_ms;
                break;
            case Outcome::in_flight:
                ++m.n_in_flight;
                break;
        }
    }
    const int terminal = m.n_success + m.n_failed;
    m.avg_delay_ms = terminal > 0 ? delay_sum / static_cast<double>(terminal) : 0.0;
    m.success_delay_ms = m.n_success > 0 ? success_delay_sum / static_cast<double>(m.n_success) : 0.0;
    m.no_grants = grants_total == 0;
    m.pusch_utilization =
        m.no_grants ? 1.0 : static_cast<double>(grants_success) / static_cast<double>(grants_total);
    return m;
}

std::vector<SweepCell> sweep(const SimConfig& base, const std::vector<Scheme>& schemes,
                             const std::vector<int>& user_counts, int n_reps, std::uint64_t seed,
                             const Weights* weights, const ConfusionMatrix* confusion,
                             int n_threads) {
    if (schemes.empty() || user_counts.empty() || n_reps < 1)
        throw std::invalid_argument("sweep: schemes, user_counts and n_reps must be non-empty");

    std::vector<SweepCell> cells;
    for (const Scheme s : schemes)
        for (const int d : user_counts)
            for (int rep = 0; rep < n_reps; ++rep)
                cells.push_back(SweepCell{s, base.detector, d, rep, {}});

    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;

    auto run_cell = [&](std::size_t ci) {
        SimConfig cfg = base;
        cfg.scheme = cells[ci].scheme;
        cfg.n_users = cells[ci].n_users;
        cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(ci));
        return run_scenario(cfg, weights, confusion).metrics;
    };

    std::vector<std::future<SimMetrics>> futures(cells.size());
    std::size_t next = 0;
    while (next < cells.size()) {
        const std::size_t end = std::min(next + static_cast<std::size_t>(n_threads), cells.size());
        for (std::size_t ci = next; ci < end; ++ci)
            futures[ci] = std::async(std::launch::async, run_cell, ci);
        for (std::size_t ci = next; ci < end; ++ci) cells[ci].metrics = futures[ci].get();
        next = end;
    }
    return cells;
}

std::vector<SweepSummaryRow> summarize(const std::vector<SweepCell>& cells) {
    std::vector<SweepSummaryRow> rows;
    for (const auto& cell : cells) {
        SweepSummaryRow* row = nullptr;
        for (auto& r : rows)
            if (r.scheme == cell.scheme && r.n_users == cell.n_users) row = &r;
        if (!row) {
            rows.push_back(SweepSummaryRow{cell.scheme, cell.n_users, 0, 0, 0, 0, 0, 0, 0});
            row = &rows.back();
        }
        ++row->n_reps;
        row->avg_delay_mean += cell.metrics.avg_delay_ms;
        row->n_success_mean += cell.metrics.n_success;
        row->utilization_mean += cell.metrics.pusch_utilization;
    }
    for (auto& r : rows) {
        r.avg_delay_mean /= r.n_reps;
        r.n_success_mean /= r.n_reps;
        r.utilization_mean /= r.n_reps;
    }
    for (const auto& cell : cells)
        for (auto& r : rows)
            if (r.scheme == cell.scheme && r.n_users == cell.n_users) {
                const double dd = cell.metrics.avg_delay_ms - r.avg_delay_mean;
                const double ds = cell.metrics.n_success - r.n_success_mean;
                const double du = cell.metrics.pusch_utilization - r.utilization_mean;
                r.avg_delay_se += dd * dd;
                r.n_success_se += ds * ds;
                r.utilization_se += du * du;
            }
    for (auto& r : rows) {
        const double denom = r.n_reps > 1 ? static_cast<double>(r.n_reps - 1) * r.n_reps : 1.0;
        r.avg_delay_se = std::sqrt(r.avg_delay_se / denom);
        r.n_success_se = std::sqrt(r.n_success_se / denom);
        r.utilization_se = std::sqrt(r.utilization_se / denom);
    }
    return rows;
}

void write_metrics_csv(const std::vector<SweepCell>& cells, std::ostream& out) {
    out << "scheme,detector,n_users,rep,avg_delay_ms,n_success,pusch_utilization,success_delay_ms\n";
    for (const auto& c : cells) {
        out << scheme_name(c.scheme) << ',' << detector_name(c.detector) << ',' << c.n_users << ','
            << c.rep << ',' << fmt_double(c.metrics.avg_delay_ms) << ',' << c.metrics.n_success
            << ',' << fmt_double(c.metrics.pusch_utilization) << ','
            << fmt_double(c.metrics.success_delay_ms) << "\n";
    }
}

void write_summary_csv(const std::vector<SweepSummaryRow>& rows, std::ostream& out) {
    out << "scheme,n_users,n_reps,avg_delay_ms_mean,avg_delay_ms_se,n_success_mean,n_success_se,"
           "pusch_utilization_mean,pusch_utilization_se\n";
    for (const auto& r : rows) {
        out << scheme_name(r.scheme) << ',' << r.n_users << ',' << r.n_reps << ','
            << fmt_double(r.avg_delay_mean) << ',' << fmt_double(r.avg_delay_se) << ','
            << fmt_double(r.n_success_mean) << ',' << fmt_double(r.n_success_se) << ','
            << fmt_double(r.utilization_mean) << ',' << fmt_double(r.utilization_se) << "\n";
    }
}

void write_traces(const std::vector<UserTrace>& traces, std::ostream& out) {
    for (const auto& tr : traces) {
        out << "id=" << tr.id << " outcome=" << outcome_name(tr.outcome)
            << " attempts=" << tr.attempts << " first_attempt_ms=" << fmt_double(tr.first_attempt_ms)
            << " outcome_ms=" << fmt_double(tr.outcome_ms) << " owd_ms=" << fmt_double(tr.owd_ms)
            << "\n";
    }
}

}  // namespace satrach
