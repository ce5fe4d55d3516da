#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "satrach/channel.hpp"
#include "satrach/classifier.hpp"
#include "satrach/policy.hpp"
#include "satrach/prach.hpp"

namespace satrach {

enum class Detector {
    oracle,              // true per-preamble user counts, clamped at k_max
    trained_classifier,  // per-slot synthesized windows through the CNN
};

const char* detector_name(Detector d);
Detector detector_from_name(const std::string& name);

enum class ArrivalModel { backlogged, poisson };

struct SimConfig {
    int n_users = 50;
    int n_slots = 2000;
    double slot_period_ms = 5.0;
    int max_retries = 10;

    double t_step1_ms = 1.0;
    double t_detect_ms = 2.0;
    double t_step2_ms = 1.0;
    double t_proc23_ms = 3.0;
    double t_step3_ms = 3.0;
    double t_step4_ms = 1.0;
    double rar_window_ms = 10.0;
    double cr_window_ms = 64.0;
    double backoff_window_ms = 20.0;

    Scheme scheme = Scheme::proposed;
    Detector detector = Detector::oracle;
    double snr_db = 10.0;
    std::uint64_t seed = 1;
    int k_max = 6;

    PrachConfig prach;
    TdlProfile profile = TdlProfile::los_default();
    GeometryModel geometry;

    // All users are backlogged at t = 0 by default; the Poisson mode spreads
    // first arrivals over slots with the given mean arrivals per slot.
    ArrivalModel arrival = ArrivalModel::backlogged;
    double arrival_rate_per_slot = 0.0;

    void validate() const;
};

enum class Outcome { succeeded, failed, in_flight };

const char* outcome_name(Outcome o);

struct UserTrace {
    int id = 0;
    Outcome outcome = Outcome::in_flight;
    int attempts = 0;
    double first_attempt_ms = 0.0;
    double outcome_ms = 0.0;  // meaningful for terminal outcomes only
    double owd_ms = 0.0;
};

struct SimMetrics {
    // Mean over users reaching a terminal state (success or retry
    // exhaustion); users still mid-procedure at the horizon are excluded.
    double avg_delay_ms = 0.0;
    // Mean over successful users only.
    double success_delay_ms = 0.0;
    int n_success = 0;
    int n_failed = 0;
    int n_in_flight = 0;
    long grants_total = 0;
    long grants_success = 0;
    double pusch_utilization = 1.0;
    bool no_grants = true;
};

struct ScenarioResult {
    SimMetrics metrics;
    std::vector<UserTrace> traces;
    // First slot whose policy had entries, kept for the policy-dump debug
    // interface. Empty when no grants were ever issued.
    AccessPolicy first_policy;
    int first_policy_slot = -1;
};

// One deterministic pass over the RACH slot timeline. Weights are required
// for the trained-classifier detector; the confusion matrix additionally for
// the proposed scheme (identity is substituted otherwise).
ScenarioResult run_scenario(const SimConfig& cfg, const Weights* weights = nullptr,
                            const ConfusionMatrix* confusion = nullptr);

SimMetrics compute_metrics(const std::vector<UserTrace>& traces, long grants_total,
                           long grants_success);

struct SweepCell {
    Scheme scheme;
    Detector detector;
    int n_users = 0;
    int rep = 0;
    SimMetrics metrics;
};

// Cross-product of (scheme, user_count, rep), each cell on a seed derived
// from (seed, cell index). Cells run concurrently; the returned order is
// scheme-major, then user count, then rep, independent of thread timing.
std::vector<SweepCell> sweep(const SimConfig& base, const std::vector<Scheme>& schemes,
                             const std::vector<int>& user_counts, int n_reps, std::uint64_t seed,
                             const Weights* weights = nullptr,
                             const ConfusionMatrix* confusion = nullptr, int n_threads = 0);

struct SweepSummaryRow {
    Scheme scheme;
    int n_users = 0;
    int n_reps = 0;
    double avg_delay_mean = 0.0, avg_delay_se = 0.0;
    double n_success_mean = 0.0, n_success_se = 0.0;
    double utilization_mean = 0.0, utilization_se = 0.0;
};

std::vector<SweepSummaryRow> summarize(const std::vector<SweepCell>& cells);

// scheme, detector, n_users, rep, avg_delay_ms, n_success, pusch_utilization,
// plus the success-only delay as a trailing column.
void write_metrics_csv(const std::vector<SweepCell>& cells, std::ostream& out);
void write_summary_csv(const std::vector<SweepSummaryRow>& rows, std::ostream& out);
void write_traces(const std::vector<UserTrace>& traces, std::ostream& out);

}  // namespace satrach
