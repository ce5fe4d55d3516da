#include "satrach/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace satrach {

namespace {

void check_distribution(const std::vector<double>& p, const char* what) {
    if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty distribution");
    double sum = 0.0;
    for (const double x : p) {
        if (x < 0.0) throw std::invalid_argument(std::string(what) + ": negative mass");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": distribution does not sum to 1");
}

}  // namespace

ClassPrior binomial_prior(int d_hat, int n_pa, int k_max) {
    if (d_hat < 0) throw std::invalid_argument("binomial_prior: d_hat must be >= 0");
    if (n_pa < 1) throw std::invalid_argument("binomial_prior: n_pa must be >= 1");
    if (k_max < 1) throw std::invalid_argument("binomial_prior: k_max must be >= 1");

    ClassPrior prior;
    prior.p.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
    const double q = 1.0 / static_cast<double>(n_pa);
    // pmf(0) = (1-q)^d_hat, then the stable upward recurrence.
    double pmf = std::pow(1.0 - q, static_cast<double>(d_hat));
    double head = 0.0;
    for (int k = 0; k < k_max; ++k) {
        const double mass = k <= d_hat ? pmf : 0.0;
        prior.p[static_cast<std::size_t>(k)] = mass;
        head += mass;
        if (k < d_hat && n_pa > 1)
            pmf *= (static_cast<double>(d_hat - k) / static_cast<double>(k + 1)) * (q / (1.0 - q));
        else if (n_pa == 1)
            pmf = (k + 1 == d_hat) ? 1.0 : 0.0;
    }
    prior.p[static_cast<std::size_t>(k_max)] = std::max(0.0, 1.0 - head);

    double sum = 0.0;
    for (const double x : prior.p) sum += x;
    for (auto& x : prior.p) x /= sum;
    return prior;
}

ClassPosterior posterior(const ConfusionMatrix& q, const ClassPrior& prior, int k_hat) {
    check_distribution(prior.p, "posterior prior");
    if (static_cast<std::size_t>(q.n_classes) != prior.p.size())
        throw std::invalid_argument("posterior: confusion matrix and prior sizes differ");
    if (k_hat < 0 || k_hat >= q.n_classes)
        throw std::invalid_argument("posterior: k_hat out of range");

    ClassPosterior post;
    post.conditioned_on = k_hat;
    post.p.assign(prior.p.size(), 0.0);
    double denom = 0.0;
    for (int k = 0; k < q.n_classes; ++k) {
        const double likelihood = q.column_defined[static_cast<std::size_t>(k)] ? q.at(k_hat, k) : 0.0;
        post.p[static_cast<std::size_t>(k)] = likelihood * prior.p[static_cast<std::size_t>(k)];
        denom += post.p[static_cast<std::size_t>(k)];
    }
    if (denom <= 0.0)
        throw PosteriorUndefined("posterior: classifier never produces this k_hat under the prior");
    for (auto& x : post.p) x /= denom;
    return post;
}

double success_probability(double p_tx, const ClassPosterior& post) {
    if (p_tx < 0.0 || p_tx > 1.0) throw std::invalid_argument("success_probability: P out of [0, 1]");
    check_distribution(post.p, "success_probability posterior");
    double total = 0.0;
    double pow1m = 1.0;  // (1-P)^(k-1), starting at k = 1
    for (std::size_t k = 1; k < post.p.size(); ++k) {
        total += static_cast<double>(k) * p_tx * pow1m * post.p[k];
        pow1m *= 1.0 - p_tx;
    }
    return total;
}

namespace {

// Interior maximizer of the exact objective: coarse scan then a fine scan in
// the winning bracket. The objective is a degree <= K polynomial in P, so a
// 1e-3 grid cannot skip its global basin.
double exact_interior_maximizer(const ClassPosterior& post) {
    const auto eval = [&post](double p) { return success_probability(p, post); };
    const int coarse = 1000;
    double best_p = 0.0, best_v = eval(0.0);
    for (int i = 1; i <= coarse; ++i) {
        const double p = static_cast<double>(i) / coarse;
        const double v = eval(p);
        if (v > best_v) {
            best_v = v;
            best_p = p;
        }
    }
    const double lo = std::max(0.0, best_p - 1.0 / coarse);
    const double hi = std::min(1.0, best_p + 1.0 / coarse);
    const int fine = 2000;
    for (int i = 0; i <= fine; ++i) {
        const double p = lo + (hi - lo) * static_cast<double>(i) / fine;
        const double v = eval(p);
        if (v > best_v) {
            best_v = v;
            best_p = p;
        }
    }
    return best_p;
}

}  // namespace

double optimal_access_prob(const ClassPosterior& post) {
    check_distribution(post.p, "optimal_access_prob posterior");
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    for (std::size_t k = 0; k < post.p.size(); ++k) {
        const double kd = static_cast<double>(k);
        m1 += kd * post.p[k];
        m2 += kd * (kd - 1.0) * post.p[k];
        m3 += kd * (kd - 1.0) * (kd - 2.0) * post.p[k];
    }

    constexpr double eps = 1e-12;
    if (m3 <= eps) {
        if (m2 <= eps) return m1 > 0.0 ? 1.0 : 0.0;
        return std::clamp(m1 / (2.0 * m2), 0.0, 1.0);
    }

    std::vector<double> candidates{0.0, 1.0};
    const double disc = 4.0 * m2 * m2 - 6.0 * m3 * m1;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        for (const double root : {(2.0 * m2 + s) / (3.0 * m3), (2.0 * m2 - s) / (3.0 * m3)})
            if (root >= 0.0 && root <= 1.0) candidates.push_back(root);
    }
    // The Taylor expansion behind the closed form loses its real roots (or
    // places them far from the true optimum) once the posterior puts weight on
    // k >= 4, so the exact objective's own maximizer joins the candidates.
    candidates.push_back(exact_interior_maximizer(post));

    double best_p = candidates.front();
    double best_v = success_probability(best_p, post);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double v = success_probability(candidates[i], post);
        if (v > best_v) {
            best_v = v;
            best_p = candidates[i];
        }
    }
    return best_p;
}

int estimate_active_users(const std::vector<int>& k_hat_per_zone) {
    int total = 0;
    for (const int k : k_hat_per_zone) {
        if (k < 0) throw std::invalid_argument("estimate_active_users: negative class estimate");
        total += k;
    }
    return total;
}

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::conventional: return "conventional";
        case Scheme::withhold: return "withhold";
        case Scheme::proposed: return "proposed";
    }
    return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "conventional") return Scheme::conventional;
    if (name == "withhold") return Scheme::withhold;
    if (name == "proposed") return Scheme::proposed;
    throw std::invalid_argument("unknown scheme: " + name);
}

AccessPolicy build_policy(const std::vector<int>& k_hat_per_preamble, const ConfusionMatrix& q,
                          Scheme scheme, int n_pa, int k_max) {
    if (static_cast<std::size_t>(q.n_classes) != static_cast<std::size_t>(k_max) + 1)
        throw std::invalid_argument("build_policy: confusion matrix does not match k_max");
    const int d_hat = estimate_active_users(k_hat_per_preamble);
    const ClassPrior prior = binomial_prior(d_hat, n_pa, k_max);

    AccessPolicy policy;
    int grant = 0;
    for (std::size_t idx = 0; idx < k_hat_per_preamble.size(); ++idx) {
        const int k_hat = k_hat_per_preamble[idx];
        if (k_hat < 1) continue;  // classified idle: no RAR entry
        if (scheme == Scheme::withhold && k_hat >= 2) continue;

        PolicyEntry entry;
        entry.preamble_index = static_cast<int>(idx);
        entry.k_hat = k_hat;
        entry.pusch_grant_id = grant;
        entry.temp_id = grant;
        ++grant;
        if (scheme == Scheme::proposed) {
            ClassPosterior post;
            try {
                post = posterior(q, prior, k_hat);
            } catch (const PosteriorUndefined&) {
                post.p = prior.p;
                post.conditioned_on = k_hat;
            }
            entry.transmit_prob = optimal_access_prob(post);
        } else {
            entry.transmit_prob = 1.0;
        }
        policy.entries.push_back(entry);
    }
    return policy;
}

bool user_decision(const PolicyEntry& entry, Rng& rng) {
    return rng.bernoulli(entry.transmit_prob);
}

void dump_policy_csv(const AccessPolicy& policy, std::ostream& out) {
    out << "preamble_index,k_hat,P,grant_id\n";
    char buf[32];
    for (const auto& e : policy.entries) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.transmit_prob);
        out << e.preamble_index << ',' << e.k_hat << ',' << buf << ',' << e.pusch_grant_id << "\n";
    }
}

}  // namespace satrach
