#include "qnd/motion.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qnd/constants.hpp"
#include "qnd/errors.hpp"

namespace qnd::motion {

double FockDistribution::truncation_tail() const {
    double sum = 0.0;
    for (double p : probabilities) sum += p;
    return 1.0 - sum;
}

void SidebandParams::validate() const {
    if (eta <= 0) throw DomainError("sideband params: eta must be positive");
    if (omega0_hz <= 0) throw DomainError("sideband params: omega0 must be positive");
    if (t2_s <= 0) throw DomainError("sideband params: T2 must be positive");
}

void OdfConfig::validate() const {
    if (pulse_time_s < 0) throw DomainError("odf config: negative pulse time");
    if (mass_correction <= 0) throw DomainError("odf config: mass correction must be positive");
}

FockDistribution fock_distribution_coherent(double alpha_magnitude, int n_max,
                                            double tail_tolerance) {
    if (alpha_magnitude < 0) throw DomainError("coherent state: |alpha| < 0");
    if (n_max < 0) throw DomainError("coherent state: n_max < 0");
    FockDistribution dist;
    dist.probabilities.resize(n_max + 1);
    const double mean = alpha_magnitude * alpha_magnitude;
    double p = std::exp(-mean);  // P(0)
    for (int n = 0; n <= n_max; ++n) {
        dist.probabilities[n] = p;
        p *= mean / (n + 1);
    }
    if (dist.truncation_tail() > tail_tolerance)
        throw TruncationError("coherent state |alpha|=" + std::to_string(alpha_magnitude) +
                              ": tail above n_max=" + std::to_string(n_max) + " is " +
                              std::to_string(dist.truncation_tail()) +
                              "; increase n_max");
    return dist;
}

FockDistribution fock_distribution_thermal(double nbar, int n_max, double tail_tolerance) {
    if (nbar < 0) throw DomainError("thermal state: nbar < 0");
    if (n_max < 0) throw DomainError("thermal state: n_max < 0");
    FockDistribution dist;
    dist.probabilities.resize(n_max + 1);
    const double ratio = nbar / (1.0 + nbar);
    double p = 1.0 / (1.0 + nbar);  // P(0)
    for (int n = 0; n <= n_max; ++n) {
        dist.probabilities[n] = p;
        p *= ratio;
    }
    if (dist.truncation_tail() > tail_tolerance)
        throw TruncationError("thermal state nbar=" + std::to_string(nbar) + ": tail above n_max=" +
                              std::to_string(n_max) + " is " +
                              std::to_string(dist.truncation_tail()) + "; increase n_max");
    return dist;
}

double odf_displacement(const OdfConfig& config, double eta) {
    config.validate();
    if (eta <= 0) throw DomainError("odf displacement: eta must be positive");
    return config.coupling_kappa * std::numbers::pi * eta *
           (config.mass_correction * config.stark_shift_hz) * config.pulse_time_s;
}

double laguerre_generalized(int order, int superscript, double x) {
    if (order < 0) throw DomainError("laguerre: order < 0");
    if (superscript < 0) throw DomainError("laguerre: superscript < 0");
    double l_prev = 1.0;  // L^a_0
    if (order == 0) return l_prev;
    double l = 1.0 + superscript - x;  // L^a_1
    for (int k = 2; k <= order; ++k) {
        double l_next = ((2.0 * k - 1.0 + superscript - x) * l - (k - 1.0 + superscript) * l_prev) / k;
        l_prev = l;
        l = l_next;
    }
    return l;
}

double rabi_frequency(int n, const SidebandParams& params, RabiModel model) {
    if (n < 0) throw DomainError("rabi_frequency: n < 0");
    params.validate();
    if (n == 0) return 0.0;  // no |n-1> partner
    if (model == RabiModel::simple)
        return params.eta * std::sqrt(static_cast<double>(n)) * params.omega0_hz;
    const double eta2 = params.eta * params.eta;
    return params.omega0_hz * params.eta * std::exp(-eta2 / 2.0) *
           laguerre_generalized(n - 1, 1, eta2) / std::sqrt(static_cast<double>(n));
}

double sideband_signal(const FockDistribution& dist, double t_s, const SidebandParams& params,
                       RabiModel model) {
    if (t_s < 0) throw DomainError("sideband_signal: t < 0");
    params.validate();

    // Hz -> angular frequency, once, here.
    const double delta = constants::two_pi * params.delta_hz;
    const double eta2 = params.eta * params.eta;
    const double ld_scale = params.eta * std::exp(-eta2 / 2.0) * params.omega0_hz;
    double y = 0.0;
    double cumulative = dist.probabilities.empty() ? 0.0 : dist.probabilities[0];
    // L^1_{n-1}(eta^2) tracked incrementally along n: rolling pair
    // (L^1_{m-1}, L^1_m), advanced by L^1_m = ((2m - x) L^1_{m-1} - m L^1_{m-2}) / m.
    double lag_pp = 1.0;        // L^1_{m-1}
    double lag_p = 2.0 - eta2;  // L^1_m, starting at m = 1
    for (int n = 1; n <= dist.n_max(); ++n) {
        double lag_nm1;  // L^1_{n-1}
        if (n == 1) {
            lag_nm1 = 1.0;
        } else if (n == 2) {
            lag_nm1 = lag_p;
        } else {
            const double m = static_cast<double>(n - 1);
            const double next = ((2.0 * m - eta2) * lag_p - m * lag_pp) / m;
            lag_pp = lag_p;
            lag_p = next;
            lag_nm1 = lag_p;
        }
        const double p = dist.probabilities[n];
        cumulative += p;
        if (p != 0.0) {
            const double sqrt_n = std::sqrt(static_cast<double>(n));
            const double omega_hz = (model == RabiModel::simple)
                                        ? params.eta * sqrt_n * params.omega0_hz
                                        : ld_scale * lag_nm1 / sqrt_n;
            const double omega = constants::two_pi * omega_hz;
            const double r2 = omega * omega + delta * delta;
            if (r2 != 0.0) {
                const double s = std::sin(std::sqrt(r2) * t_s / 2.0);
                y += p * (omega * omega / r2) * s * s;
            }
        }
        // nothing measurable lives beyond this tail
        if (1.0 - cumulative < 1e-13) break;
    }
    const double damp = std::exp(-t_s / params.t2_s);
    return y * damp + (1.0 - damp) / 2.0;
}

double solve_alpha_for_signal(double target_p, double t_probe_s, const SidebandParams& params,
                              RabiModel model, double alpha_max) {
    if (target_p < 0 || target_p > 1) throw DomainError("solve_alpha_for_signal: target outside [0, 1]");
    auto signal = [&](double alpha) {
        return sideband_signal(fock_distribution_coherent(alpha, 64), t_probe_s, params, model);
    };
    double lo = 0.0, hi = alpha_max;
    double f_lo = signal(lo), f_hi = signal(hi);
    if ((f_lo - target_p) * (f_hi - target_p) > 0)
        throw ConvergenceError("solve_alpha_for_signal: target " + std::to_string(target_p) +
                               " not bracketed on [0, " + std::to_string(alpha_max) + "]");
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        double f_mid = signal(mid);
        if ((f_lo - target_p) * (f_mid - target_p) <= 0) {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if (hi - lo < 1e-14) break;
    }
    return 0.5 * (lo + hi);
}

double calibrate_kappa(double alpha_star, double stark_shift_hz, double pulse_time_s,
                       double mass_correction, double eta) {
    if (stark_shift_hz == 0 || pulse_time_s == 0)
        throw DomainError("calibrate_kappa: zero stark shift or pulse time");
    return alpha_star /
           (std::numbers::pi * eta * (mass_correction * stark_shift_hz) * pulse_time_s);
}

}
