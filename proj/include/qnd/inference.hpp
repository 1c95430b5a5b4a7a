#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace qnd::inference {

enum class MoleculeState { bright, dark };

// Two-hypothesis binomial model of the repeated QND measurement: a "bright"
// molecule succeeds on a single sideband probe with probability p_alpha, a
// "dark" one with p_beta < p_alpha. After n_rep probes the success count is
// thresholded at k > threshold_k (equivalently k/n > threshold_p).
struct QndModel {
    double p_alpha = 0.52;
    double p_beta = 0.06;
    int n_rep = 22;
    int threshold_k = 5;
    double threshold_p = 0.25;

    // Derives threshold_k from the likelihood crossover and, unless
    // overridden, threshold_p as the midpoint of the exclusion gap
    // (threshold_k/n, (threshold_k+1)/n).
    static QndModel make(double p_alpha, double p_beta, int n_rep,
                         std::optional<double> threshold_p_override = std::nullopt);

    void validate() const;
};

// Binomial likelihood C(n,k) p^k (1-p)^(n-k); evaluated in log space for
// large n.
double binomial_likelihood(double p, int k, int n);

// Likelihood-crossover threshold
//   k_t = floor( n / (ln(p_a/p_b)/ln((1-p_b)/(1-p_a)) + 1) );
// counts k <= k_t classify as dark, k > k_t as bright. Equals the direct
// maximization max{k : L(p_a|k,n) < L(p_b|k,n)} (ties at the crossover go to
// the dark side, matching the floor).
int discrimination_threshold(double p_alpha, double p_beta, int n);

struct DetectionErrors {
    double error_dark;    // dark molecule read as bright: sum_{k>k_t} L(p_beta|k,N)
    double error_bright;  // bright molecule read as dark: sum_{k<=k_t} L(p_alpha|k,N)
};

DetectionErrors detection_errors(const QndModel& model);

struct FidelityReport {
    double fidelity_dark;
    double fidelity_bright;
    double fidelity_overall;  // 1 - max(error_dark, error_bright)
};

FidelityReport fidelity_report(const QndModel& model);

// Smallest N whose re-derived threshold reaches the target overall fidelity.
int min_repetitions(double p_alpha, double p_beta, double target_fidelity);

struct BayesEstimate {
    double mean;
    double stddev;
};

// Posterior fidelity from observed state determinations with a uniform prior
// on the per-attempt error rate: Beta(failures+1, successes+1) posterior,
// fidelity = 1 - error.
BayesEstimate bayes_fidelity(long successes, long failures);

// Threshold classification of k successes out of n retained probes.
// Throws DomainError for n = 0 (no evidence).
MoleculeState classify(int k, int n, const QndModel& model);

struct TimeTraceConfig {
    long n_attempts = 0;
    double jump_probability_per_attempt = 0;  // bright -> dark between attempts
    double prep_success = 0.97;               // per-shot D-state preparation
    std::uint64_t rng_seed = 1;
    MoleculeState initial_state = MoleculeState::bright;
    // Deterministic alternative to stochastic jumps: force the bright -> dark
    // transition after this many attempts.
    std::optional<long> forced_jump_after;

    void validate() const;
};

struct DetectionRecord {
    long attempt_index = 0;  // 1-based
    int k_successes = 0;
    int n_used = 0;  // shots surviving preparation post-selection
    double p_hat = 0;
    MoleculeState classification = MoleculeState::dark;
    MoleculeState true_state = MoleculeState::dark;
};

// Simulates a quantum-jump detection time trace. Each attempt draws n_rep
// probe shots; shots whose preparation fails are discarded (they do not count
// toward n_used). The per-shot success probability is p_bright or p_dark
// according to the current true state, which decays bright -> dark and never
// returns. Fully deterministic given the seed: attempt i draws from the
// (seed, i) random stream, so parallel evaluation is bit-identical to serial.
std::vector<DetectionRecord> simulate_timetrace(const QndModel& model,
                                                const TimeTraceConfig& config,
                                                std::optional<double> p_bright = std::nullopt,
                                                std::optional<double> p_dark = std::nullopt);

}
