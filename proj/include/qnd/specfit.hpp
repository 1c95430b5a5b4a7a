#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qnd/lsq.hpp"
#include "qnd/motion.hpp"
#include "qnd/stark.hpp"

namespace qnd::specfit {

// Measured (or synthesized) sideband Rabi oscillation: excitation probability
// versus probe pulse length, with the shot count behind each point.
struct RabiSample {
    double t_s = 0;
    double p_excite = 0;
    long n_shots = 1;
};

struct RabiTrace {
    std::vector<RabiSample> samples;
    motion::SidebandParams params;  // eta / omega0 of the probe; delta & T2 are fit outputs
    double odf_pulse_time_s = 500e-6;

    void validate() const;
};

// Binomial standard error of one sample, floored at 1/(2 n_shots) so p = 0/1
// points keep finite weight.
double binomial_sigma(double p, long n_shots);

struct RabiFitResult {
    double nbar = 0;      // alpha^2 of the fitted coherent state
    double delta_hz = 0;  // sideband detuning
    double t2_s = 0;      // phase coherence time
    std::array<double, 3> sigma{};
    std::array<std::array<double, 3>, 3> covariance{};
    double chi2 = 0;
    int iterations = 0;
    bool converged = false;
};

// Weighted three-parameter fit (nbar, delta, T2) of the generalized sideband
// model to a trace, 8-point multistart. Throws ConvergenceError when no start
// converges and DomainError for a degenerate trace (all p equal) or fewer
// than 6 samples.
RabiFitResult fit_rabi_trace(const RabiTrace& trace, int max_iterations = 200);

// Calibration of the trace shape against the drive strength: polynomial
// models of the Rabi-fit parameters versus the applied Stark shift.
struct CalibrationPoint {
    double stark_shift_hz = 0;
    double nbar = 0;
    double delta_hz = 0;
    double t2_s = 0;
};

struct CalibrationModel {
    std::vector<double> nbar_coeffs;   // ascending degree
    std::vector<double> delta_coeffs;
    std::vector<double> t2_coeffs;
    double valid_min_hz = 0;
    double valid_max_hz = 0;

    double nbar(double stark_shift_hz) const { return lsq::polyval(nbar_coeffs, stark_shift_hz); }
    double delta(double stark_shift_hz) const { return lsq::polyval(delta_coeffs, stark_shift_hz); }
    double t2(double stark_shift_hz) const { return lsq::polyval(t2_coeffs, stark_shift_hz); }

    void validate() const;
};

// Least-squares polynomial fits of the calibration points; degrees default to
// quadratic for nbar (physically ~shift^2) and linear for delta and T2.
CalibrationModel build_calibration(const std::vector<CalibrationPoint>& points,
                                   int nbar_degree = 2, int delta_degree = 1, int t2_degree = 1);

struct StarkEstimate {
    double stark_shift_hz = 0;
    double sigma_hz = 0;
    bool boundary_flag = false;  // optimum pinned to the calibration range edge
    double chi2 = 0;
    bool converged = false;
};

// Single-parameter fit of the calibrated signal model to a trace: the applied
// Stark shift is the only free parameter.
StarkEstimate stark_from_trace(const RabiTrace& trace, const CalibrationModel& calibration,
                              int max_iterations = 200);

// One point of a force spectrum: normalized shift magnitude |dE|/(h I) versus
// lattice frequency. `mass_corrected` guards the one-time correction.
struct StarkDataPoint {
    double frequency_hz = 0;
    double detuning_hz = 0;  // from the target line, when known
    double intensity_w_m2 = 0;
    double stark_over_intensity = 0;  // Hz per (W/m^2), magnitude
    double sigma = 0;                 // 1-sigma uncertainty, same units
    bool mass_corrected = false;

    void validate() const;
};

struct LineCenterOptions {
    double pole_guard_hz = 1e3;
    double wavemeter_sigma_hz = 50e6;  // systematic, added in quadrature to sigma_f0
    int max_iterations = 200;
};

struct LineCenterFit {
    double f0_hz = 0;
    double amplitude = 0;  // C in |dE|/(h I) = C / |f - f0|
    double sigma_f0_stat_hz = 0;
    double sigma_f0_hz = 0;  // statistical (+) wavemeter systematic
    double sigma_amplitude = 0;
    double chi2 = 0;
    bool converged = false;
};

// Weighted fit of C/|f - f0| to a force spectrum; multistart around the
// largest-shift point. Works on one-sided data. Throws ConvergenceError if no
// start converges clear of the data poles.
LineCenterFit fit_line_center(const std::vector<StarkDataPoint>& points,
                              const LineCenterOptions& options = {});

// Vibronic Einstein-A from one normalized shift measurement: subtracts the
// fixed contributions of all non-target catalog lines, then divides by the
// target line's geometric kernel. Exact inverse of ac_stark_shift for the
// target line. mass_correction multiplies the measured shift once (skipped
// when the point is already flagged).
double extract_avib(const StarkDataPoint& point, const stark::TransitionLine& target_line,
                    const stark::RoVibronicState& state, const stark::LineCatalog& catalog,
                    double mass_correction = 1.0,
                    const stark::StarkOptions& options = {});

// Probe wavelength that makes an atomic force calibration mass-consistent:
// lambda * sqrt(m_atom / m_molecule).
double mass_corrected_wavelength(double wavelength_m, double mass_atom_amu,
                                 double mass_molecule_amu);

// Plain one-time scaling of a shift (the ~17% two-ion dynamics correction).
double apply_mass_correction(double stark_shift_hz, double factor);
// Flag-guarded variant: throws DomainError when applied twice.
StarkDataPoint apply_mass_correction(StarkDataPoint point, double factor);

}
