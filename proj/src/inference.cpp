#include "qnd/inference.hpp"

#include <cmath>
#include <string>

#include "qnd/errors.hpp"
#include "qnd/parallel.hpp"
#include "qnd/rng.hpp"

namespace qnd::inference {

void QndModel::validate() const {
    if (!(p_beta > 0 && p_beta < p_alpha && p_alpha < 1))
        throw DomainError("qnd model: need 0 < p_beta < p_alpha < 1");
    if (n_rep < 1) throw DomainError("qnd model: n_rep < 1");
    if (threshold_k < 0 || threshold_k > n_rep)
        throw DomainError("qnd model: threshold_k outside [0, n_rep]");
}

QndModel QndModel::make(double p_alpha, double p_beta, int n_rep,
                        std::optional<double> threshold_p_override) {
    QndModel model;
    model.p_alpha = p_alpha;
    model.p_beta = p_beta;
    model.n_rep = n_rep;
    model.threshold_k = discrimination_threshold(p_alpha, p_beta, n_rep);
    model.threshold_p = threshold_p_override
                            ? *threshold_p_override
                            : (2.0 * model.threshold_k + 1.0) / (2.0 * n_rep);
    model.validate();
    return model;
}

double binomial_likelihood(double p, int k, int n) {
    if (k < 0 || n < 0 || k > n) throw DomainError("binomial_likelihood: need 0 <= k <= n");
    if (p < 0 || p > 1) throw DomainError("binomial_likelihood: p outside [0, 1]");
    if (n == 0) return 1.0;  // empty product
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    const double ln_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(ln_choose + k * std::log(p) + (n - k) * std::log1p(-p));
}

int discrimination_threshold(double p_alpha, double p_beta, int n) {
    if (!(p_beta > 0 && p_beta < p_alpha && p_alpha < 1))
        throw DomainError("discrimination_threshold: need 0 < p_beta < p_alpha < 1 "
                          "(degenerate model otherwise)");
    if (n < 1) throw DomainError("discrimination_threshold: n < 1");
    const double ratio = std::log(p_alpha / p_beta) / std::log((1.0 - p_beta) / (1.0 - p_alpha));
    return static_cast<int>(std::floor(n / (ratio + 1.0)));
}

DetectionErrors detection_errors(const QndModel& model) {
    model.validate();
    double error_dark = 0.0;
    for (int k = model.threshold_k + 1; k <= model.n_rep; ++k)
        error_dark += binomial_likelihood(model.p_beta, k, model.n_rep);
    double error_bright = 0.0;
    for (int k = 0; k <= model.threshold_k; ++k)
        error_bright += binomial_likelihood(model.p_alpha, k, model.n_rep);
    return {error_dark, error_bright};
}

FidelityReport fidelity_report(const QndModel& model) {
    const auto errors = detection_errors(model);
    return {1.0 - errors.error_dark, 1.0 - errors.error_bright,
            1.0 - std::max(errors.error_dark, errors.error_bright)};
}

int min_repetitions(double p_alpha, double p_beta, double target_fidelity) {
    if (target_fidelity >= 1.0) throw DomainError("min_repetitions: target must be < 1");
    constexpr int kMaxN = 100000;
    for (int n = 1; n <= kMaxN; ++n) {
        const auto model = QndModel::make(p_alpha, p_beta, n);
        if (fidelity_report(model).fidelity_overall >= target_fidelity) return n;
    }
    throw ConvergenceError("min_repetitions: target fidelity not reached by N = " +
                           std::to_string(kMaxN));
}

BayesEstimate bayes_fidelity(long successes, long failures) {
    if (successes < 0 || failures < 0) throw DomainError("bayes_fidelity: negative counts");
    const double a = failures + 1.0;  // Beta(a, b) posterior on the error rate
    const double b = successes + 1.0;
    const double mean_error = a / (a + b);
    const double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
    return {1.0 - mean_error, std::sqrt(var)};
}

MoleculeState classify(int k, int n, const QndModel& model) {
    if (n == 0) throw DomainError("classify: no retained probes (n = 0)");
    if (k < 0 || k > n) throw DomainError("classify: need 0 <= k <= n");
    return (static_cast<double>(k) > model.threshold_p * n) ? MoleculeState::bright
                                                            : MoleculeState::dark;
}

void TimeTraceConfig::validate() const {
    if (n_attempts < 0) throw DomainError("time trace: n_attempts < 0");
    if (jump_probability_per_attempt < 0 || jump_probability_per_attempt > 1)
        throw DomainError("time trace: jump probability outside [0, 1]");
    if (prep_success < 0 || prep_success > 1)
        throw DomainError("time trace: prep_success outside [0, 1]");
    if (forced_jump_after && *forced_jump_after < 0)
        throw DomainError("time trace: forced jump index < 0");
}

std::vector<DetectionRecord> simulate_timetrace(const QndModel& model,
                                                const TimeTraceConfig& config,
                                                std::optional<double> p_bright,
                                                std::optional<double> p_dark) {
    model.validate();
    config.validate();
    const double pb = p_bright.value_or(model.p_alpha);
    const double pd = p_dark.value_or(model.p_beta);

    const long n = config.n_attempts;
    std::vector<DetectionRecord> records(n);

    // The true state is a one-way bright -> dark chain, so the state at
    // attempt i is determined by the first jump draw alone; drawing the jump
    // from the per-attempt stream keeps attempts independent and parallel.
    // Resolve the jump attempt first, then fill attempts in parallel.
    long jump_after = n;  // state is bright through attempt jump_after
    if (config.initial_state == MoleculeState::dark) {
        jump_after = 0;
    } else if (config.forced_jump_after) {
        jump_after = std::min<long>(n, *config.forced_jump_after);
    } else if (config.jump_probability_per_attempt > 0) {
        // Jumps happen between attempts; attempt 1 is always the initial state.
        for (long i = 1; i < n; ++i) {
            SplitRng jump_rng(config.rng_seed, 0x4a756d70ull ^ static_cast<std::uint64_t>(i));
            if (jump_rng.bernoulli(config.jump_probability_per_attempt)) {
                jump_after = i;  // bright through attempt i
                break;
            }
        }
    }

    parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            DetectionRecord& rec = records[i];
            rec.attempt_index = static_cast<long>(i) + 1;
            rec.true_state = (static_cast<long>(i) < jump_after) ? MoleculeState::bright
                                                                 : MoleculeState::dark;
            const double p_shot = (rec.true_state == MoleculeState::bright) ? pb : pd;
            SplitRng rng(config.rng_seed, static_cast<std::uint64_t>(i) + 1);
            int k = 0, used = 0;
            for (int shot = 0; shot < model.n_rep; ++shot) {
                const bool prep_ok = rng.bernoulli(config.prep_success);
                const bool success = rng.bernoulli(p_shot);
                if (!prep_ok) continue;  // post-selected away; does not count
                ++used;
                if (success) ++k;
            }
            rec.k_successes = k;
            rec.n_used = used;
            rec.p_hat = used > 0 ? static_cast<double>(k) / used : 0.0;
            // All n_rep preparations failing is possible only for tiny
            // prep_success; report it as dark (no sideband success observed).
            rec.classification = used > 0 ? classify(k, used, model) : MoleculeState::dark;
        }
    });
    return records;
}

}
