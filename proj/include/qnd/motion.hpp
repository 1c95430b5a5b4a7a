#pragma once

#include <limits>
#include <vector>

namespace qnd::motion {

// Probabilities over motional Fock states n = 0..n_max. Constructed by the
// factory functions below, which enforce that the truncated tail stays under
// the tolerance.
struct FockDistribution {
    std::vector<double> probabilities;

    int n_max() const { return static_cast<int>(probabilities.size()) - 1; }
    double truncation_tail() const;

    static constexpr double default_tail_tolerance = 1e-9;
};

// Coherent state |alpha>: P(n) = exp(-|a|^2) |a|^(2n) / n!.
// Throws TruncationError if the tail beyond n_max exceeds the tolerance.
FockDistribution fock_distribution_coherent(double alpha_magnitude, int n_max = 64,
                                            double tail_tolerance = FockDistribution::default_tail_tolerance);

// Thermal state: P(n) = nbar^n / (1 + nbar)^(n+1).
FockDistribution fock_distribution_thermal(double nbar, int n_max = 64,
                                           double tail_tolerance = FockDistribution::default_tail_tolerance);

// Sideband drive parameters. All frequencies are plain Hz (Omega/2pi); the
// single place where 2pi enters is the signal evaluation itself.
struct SidebandParams {
    double eta = 0.1;                  // Lamb-Dicke parameter
    double omega0_hz = 90e3;           // bare Rabi frequency
    double delta_hz = 0;               // detuning from the sideband resonance
    double t2_s = std::numeric_limits<double>::infinity();  // phase coherence time
    double mode_frequency_hz = 620e3;  // in-phase mode f_IP

    void validate() const;
};

// State-dependent optical-dipole-force drive: stark_shift is the molecular
// level shift, kappa a single dimensionless calibration constant, and
// mass_correction the fixed scale from the two-ion dynamics of unequal
// masses.
struct OdfConfig {
    double stark_shift_hz = 0;
    double pulse_time_s = 500e-6;
    double coupling_kappa = 1.0;
    double mass_correction = 1.17;

    void validate() const;
};

// Coherent amplitude excited by the ODF pulse:
//   |alpha| = kappa * pi * eta * (mass_correction * stark_shift) * pulse_time.
// Exactly bilinear in (stark_shift, pulse_time).
double odf_displacement(const OdfConfig& config, double eta = 0.1);

// Generalized Laguerre polynomial L^superscript_order(x) by the three-term
// recurrence.
double laguerre_generalized(int order, int superscript, double x);

enum class RabiModel {
    simple,       // Omega_n = eta sqrt(n) Omega_0
    generalized,  // Omega_n = Omega_0 eta exp(-eta^2/2) L^1_{n-1}(eta^2) / sqrt(n)
};

// Rabi frequency (Hz) of the |n> <-> |n-1> sideband; 0 for n = 0.
double rabi_frequency(int n, const SidebandParams& params,
                      RabiModel model = RabiModel::generalized);

// Sideband excitation probability after a pulse of length t:
//
//   y = sum_n P(n) Omega_n^2/(Omega_n^2+delta^2) sin^2(sqrt(Omega_n^2+delta^2) t/2)
//   P = y exp(-t/T2) + (1 - exp(-t/T2))/2
//
// With delta = 0 and T2 = inf this is the plain sum of sin^2(Omega_n t / 2)
// weighted by P(n). Result is always in [0, 1].
double sideband_signal(const FockDistribution& dist, double t_s, const SidebandParams& params,
                       RabiModel model = RabiModel::generalized);

// Smallest |alpha| in [0, alpha_max] whose coherent-state signal at t_probe
// equals target_p (bisection; the signal is monotone in alpha over the probe
// regime used here). Throws ConvergenceError if the target is not bracketed.
double solve_alpha_for_signal(double target_p, double t_probe_s, const SidebandParams& params,
                              RabiModel model = RabiModel::generalized, double alpha_max = 2.5);

// Calibration constant kappa such that odf_displacement reproduces the
// amplitude alpha_star at the given operating point.
double calibrate_kappa(double alpha_star, double stark_shift_hz, double pulse_time_s,
                       double mass_correction, double eta);

}
