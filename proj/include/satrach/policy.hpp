#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "satrach/classifier.hpp"
#include "satrach/rng.hpp"

namespace satrach {

// Distribution over the number of users on one preamble, k = 0..K.
struct ClassPrior {
    std::vector<double> p;
};

struct ClassPosterior {
    std::vector<double> p;
    int conditioned_on = 0;  // the classifier output k_hat
};

// Thrown when Bayes conditioning on k_hat has zero total mass; callers fall
// back to the prior.
struct PosteriorUndefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// P[k] = C(d_hat, k) (1/n_pa)^k (1 - 1/n_pa)^(d_hat - k) for k < K, with the
// k >= K tail accumulated into class K.
ClassPrior binomial_prior(int d_hat, int n_pa, int k_max);

// p[k] proportional to q(k_hat, k) * prior[k].
ClassPosterior posterior(const ConfusionMatrix& q, const ClassPrior& prior, int k_hat);

// Exact per-preamble access success probability,
// sum_k k * P (1-P)^(k-1) * post[k].
double success_probability(double p_tx, const ClassPosterior& post);

// Step-3 transmission probability maximizing the exact success probability.
// Candidates are the closed-form roots of the Taylor-expanded stationarity
// condition, the interval boundaries, and a numerically located interior
// maximizer of the exact objective; the exact objective picks the winner.
double optimal_access_prob(const ClassPosterior& post);

// d_hat = sum of classifier outputs across all zones.
int estimate_active_users(const std::vector<int>& k_hat_per_zone);

enum class Scheme {
    conventional,  // every detected preamble gets a grant, all users transmit
    withhold,      // grants only for preambles classified as single-user
    proposed,      // grants with per-preamble transmission probability
};

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct PolicyEntry {
    int preamble_index = 0;
    int k_hat = 0;
    double transmit_prob = 1.0;
    int pusch_grant_id = 0;
    int temp_id = 0;
};

struct AccessPolicy {
    std::vector<PolicyEntry> entries;
};

// SBS side of the per-slot response: one entry per preamble with k_hat >= 1
// (k_hat >= 2 entries are dropped under the withhold scheme). d_hat is
// estimated from the same slot's classifier outputs. Falls back to the prior
// when the posterior is undefined.
AccessPolicy build_policy(const std::vector<int>& k_hat_per_preamble, const ConfusionMatrix& q,
                          Scheme scheme, int n_pa, int k_max);

// Bernoulli(P) Step-3 decision for a user whose RAR arrived.
bool user_decision(const PolicyEntry& entry, Rng& rng);

// preamble_index, k_hat, P, grant_id
void dump_policy_csv(const AccessPolicy& policy, std::ostream& out);

}  // namespace satrach
