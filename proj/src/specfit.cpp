#include "qnd/specfit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <string>

#include "qnd/errors.hpp"

namespace qnd::specfit {

namespace {

constexpr int kFockCutoff = 64;

// The optimizer probes the same parameter vector at every sample time, so the
// Fock distribution and per-n Rabi terms are reused until the parameters
// change.
struct SignalCache {
    double nbar = -1, delta_hz = 0, t2_s = 0, eta = 0, omega0_hz = 0;
    std::vector<double> prob;
    std::vector<double> root_r2;  // sqrt(omega_n^2 + delta^2), angular
    std::vector<double> weight;   // p_n * omega_n^2 / (omega_n^2 + delta^2)

    void rebuild(double nb, double dl, double t2, const motion::SidebandParams& probe) {
        nbar = nb;
        delta_hz = dl;
        t2_s = t2;
        eta = probe.eta;
        omega0_hz = probe.omega0_hz;
        const auto dist = motion::fock_distribution_coherent(std::sqrt(std::max(0.0, nb)),
                                                             kFockCutoff, 1e-6);
        motion::SidebandParams p = probe;
        p.delta_hz = dl;
        p.t2_s = t2;
        const double delta = 2.0 * std::numbers::pi * dl;
        root_r2.clear();
        weight.clear();
        double cumulative = dist.probabilities[0];
        for (int n = 1; n <= dist.n_max(); ++n) {
            const double pn = dist.probabilities[n];
            cumulative += pn;
            const double omega = 2.0 * std::numbers::pi * motion::rabi_frequency(n, p);
            const double r2 = omega * omega + delta * delta;
            root_r2.push_back(std::sqrt(r2));
            weight.push_back(r2 > 0 ? pn * omega * omega / r2 : 0.0);
            if (1.0 - cumulative < 1e-13) break;
        }
    }

    double eval(double t_s) const {
        double y = 0.0;
        for (std::size_t i = 0; i < weight.size(); ++i) {
            const double s = std::sin(root_r2[i] * t_s / 2.0);
            y += weight[i] * s * s;
        }
        const double damp = std::exp(-t_s / t2_s);
        return y * damp + (1.0 - damp) / 2.0;
    }
};

double sideband_model(double nbar, double delta_hz, double t2_s, double t_s,
                      const motion::SidebandParams& probe) {
    thread_local SignalCache cache;
    if (cache.nbar != nbar || cache.delta_hz != delta_hz || cache.t2_s != t2_s ||
        cache.eta != probe.eta || cache.omega0_hz != probe.omega0_hz)
        cache.rebuild(nbar, delta_hz, t2_s, probe);
    return cache.eval(t_s);
}

}  // namespace

void RabiTrace::validate() const {
    params.validate();
    if (odf_pulse_time_s < 0) throw DomainError("rabi trace: negative ODF pulse time");
    double prev = -1.0;
    for (const auto& s : samples) {
        if (s.t_s <= prev) throw DomainError("rabi trace: times must be strictly increasing");
        if (s.p_excite < 0 || s.p_excite > 1)
            throw DomainError("rabi trace: p outside [0, 1]");
        if (s.n_shots < 1) throw DomainError("rabi trace: n_shots < 1");
        prev = s.t_s;
    }
}

double binomial_sigma(double p, long n_shots) {
    const double floor_sigma = 1.0 / (2.0 * static_cast<double>(n_shots));
    return std::max(std::sqrt(p * (1.0 - p) / static_cast<double>(n_shots)), floor_sigma);
}

RabiFitResult fit_rabi_trace(const RabiTrace& trace, int max_iterations) {
    trace.validate();
    const auto& samples = trace.samples;
    if (samples.size() < 6) throw DomainError("fit_rabi_trace: need at least 6 samples");
    const double p_min = std::min_element(samples.begin(), samples.end(),
                                          [](auto& a, auto& b) { return a.p_excite < b.p_excite; })
                             ->p_excite;
    const double p_max = std::max_element(samples.begin(), samples.end(),
                                          [](auto& a, auto& b) { return a.p_excite < b.p_excite; })
                             ->p_excite;
    if (p_max - p_min == 0.0)
        throw DomainError("fit_rabi_trace: degenerate trace (all p equal)");

    std::vector<double> x, y, w;
    for (const auto& s : samples) {
        x.push_back(s.t_s);
        y.push_back(s.p_excite);
        const double sigma = binomial_sigma(s.p_excite, s.n_shots);
        w.push_back(1.0 / (sigma * sigma));
    }

    const double t_span = samples.back().t_s - samples.front().t_s;
    lsq::Options opt;
    opt.max_iterations = max_iterations;
    opt.lower = {0.0, -10.0 * trace.params.omega0_hz, 1e-7};
    opt.upper = {static_cast<double>(kFockCutoff) / 2.0, 10.0 * trace.params.omega0_hz, 1e6};
    opt.scale = {1.0, trace.params.omega0_hz * 0.1, std::max(t_span, 1e-5)};

    lsq::ModelFn model = [&trace](const std::vector<double>& p, double t) {
        return sideband_model(p[0], p[1], p[2], t, trace.params);
    };

    // 8-point multistart over contrast and detuning guesses.
    std::vector<std::vector<double>> starts;
    for (double nb : {0.3, 1.0, 2.0, 4.0})
        for (double dl : {0.0, 0.05 * trace.params.omega0_hz})
            starts.push_back({nb, dl, 8.0 * t_span});

    const auto res = lsq::fit_multistart(model, x, y, w, starts, opt);
    if (!res.converged)
        throw ConvergenceError("fit_rabi_trace: no multistart converged in " +
                               std::to_string(opt.max_iterations) + " iterations");

    RabiFitResult out;
    out.nbar = res.params[0];
    out.delta_hz = res.params[1];
    out.t2_s = res.params[2];
    for (int i = 0; i < 3; ++i) {
        out.sigma[i] = res.sigma[i];
        for (int j = 0; j < 3; ++j) out.covariance[i][j] = res.covariance[i][j];
    }
    out.chi2 = res.chi2;
    out.iterations = res.iterations;
    out.converged = res.converged;
    return out;
}

void CalibrationModel::validate() const {
    if (!(valid_max_hz > valid_min_hz)) throw DomainError("calibration: empty valid range");
    if (nbar_coeffs.empty() || delta_coeffs.empty() || t2_coeffs.empty())
        throw DomainError("calibration: missing coefficients");
    for (int i = 0; i <= 32; ++i) {
        const double s = valid_min_hz + (valid_max_hz - valid_min_hz) * i / 32.0;
        if (nbar(s) < 0) throw DomainError("calibration: nbar(shift) negative inside valid range");
        if (t2(s) <= 0) throw DomainError("calibration: T2(shift) not positive inside valid range");
    }
}

CalibrationModel build_calibration(const std::vector<CalibrationPoint>& points, int nbar_degree,
                                   int delta_degree, int t2_degree) {
    std::vector<double> shifts;
    for (const auto& p : points) shifts.push_back(p.stark_shift_hz);
    std::sort(shifts.begin(), shifts.end());
    shifts.erase(std::unique(shifts.begin(), shifts.end()), shifts.end());
    if (shifts.size() < 4)
        throw DomainError("build_calibration: need at least 4 distinct stark shifts, got " +
                          std::to_string(shifts.size()));

    std::vector<double> x, nb, de, t2;
    for (const auto& p : points) {
        x.push_back(p.stark_shift_hz);
        nb.push_back(p.nbar);
        de.push_back(p.delta_hz);
        t2.push_back(p.t2_s);
    }
    CalibrationModel model;
    model.nbar_coeffs = lsq::polyfit(x, nb, nbar_degree);
    model.delta_coeffs = lsq::polyfit(x, de, delta_degree);
    model.t2_coeffs = lsq::polyfit(x, t2, t2_degree);
    model.valid_min_hz = shifts.front();
    model.valid_max_hz = shifts.back();
    model.validate();
    return model;
}

StarkEstimate stark_from_trace(const RabiTrace& trace, const CalibrationModel& calibration,
                               int max_iterations) {
    trace.validate();
    calibration.validate();

    std::vector<double> x, y, w;
    for (const auto& s : trace.samples) {
        x.push_back(s.t_s);
        y.push_back(s.p_excite);
        const double sigma = binomial_sigma(s.p_excite, s.n_shots);
        w.push_back(1.0 / (sigma * sigma));
    }

    lsq::ModelFn model = [&](const std::vector<double>& p, double t) {
        const double shift = p[0];
        return sideband_model(calibration.nbar(shift), calibration.delta(shift),
                              calibration.t2(shift), t, trace.params);
    };

    const double span = calibration.valid_max_hz - calibration.valid_min_hz;
    lsq::Options opt;
    opt.max_iterations = max_iterations;
    opt.lower = {calibration.valid_min_hz};
    opt.upper = {calibration.valid_max_hz};
    opt.scale = {span};

    std::vector<std::vector<double>> starts;
    for (int i = 0; i < 6; ++i)
        starts.push_back({calibration.valid_min_hz + span * (0.1 + 0.16 * i)});

    const auto res = lsq::fit_multistart(model, x, y, w, starts, opt);
    if (!res.converged) throw ConvergenceError("stark_from_trace: fit did not converge");

    StarkEstimate est;
    est.stark_shift_hz = res.params[0];
    est.sigma_hz = res.sigma[0];
    est.chi2 = res.chi2;
    est.converged = res.converged;
    const double edge_tol = 1e-3 * span;
    est.boundary_flag = est.stark_shift_hz <= calibration.valid_min_hz + edge_tol ||
                        est.stark_shift_hz >= calibration.valid_max_hz - edge_tol;
    return est;
}

void StarkDataPoint::validate() const {
    if (frequency_hz <= 0) throw DomainError("stark data point: frequency must be positive");
    if (intensity_w_m2 <= 0) throw DomainError("stark data point: intensity must be positive");
    if (sigma <= 0) throw DomainError("stark data point: sigma must be positive");
    if (stark_over_intensity < 0)
        throw DomainError("stark data point: shift magnitude must be >= 0");
}

LineCenterFit fit_line_center(const std::vector<StarkDataPoint>& points,
                              const LineCenterOptions& options) {
    if (points.size() < 3)
        throw DomainError("fit_line_center: need at least 3 points, got " +
                          std::to_string(points.size()));
    for (const auto& p : points) p.validate();

    std::vector<double> x, y, w;
    for (const auto& p : points) {
        x.push_back(p.frequency_hz);
        y.push_back(p.stark_over_intensity);
        w.push_back(1.0 / (p.sigma * p.sigma));
    }

    lsq::ModelFn model = [&](const std::vector<double>& p, double f) {
        return p[1] / std::abs(f - p[0]);
    };

    const auto strongest = std::max_element(
        points.begin(), points.end(), [](const StarkDataPoint& a, const StarkDataPoint& b) {
            return a.stark_over_intensity < b.stark_over_intensity;
        });
    const auto [f_lo, f_hi] = std::minmax_element(x.begin(), x.end());
    const double span = std::max(*f_hi - *f_lo, 10.0 * options.pole_guard_hz);

    lsq::Options opt;
    opt.max_iterations = options.max_iterations;
    opt.scale = {span, strongest->stark_over_intensity * span};
    opt.step_ok = [&](const std::vector<double>& p) {
        for (const auto& pt : points)
            if (std::abs(pt.frequency_hz - p[0]) < options.pole_guard_hz) return false;
        return true;
    };

    // 8-point multistart around the largest-shift point
    std::vector<std::vector<double>> starts;
    for (double off : {-span / 20.0, span / 20.0, -span / 10.0, span / 10.0, -span / 5.0,
                       span / 5.0, -span / 3.0, span / 3.0}) {
        const double f0 = strongest->frequency_hz + off;
        const double c0 = strongest->stark_over_intensity * std::abs(std::max(std::abs(off), span / 20.0));
        starts.push_back({f0, c0});
    }

    lsq::Result res;
    try {
        res = lsq::fit_multistart(model, x, y, w, starts, opt);
    } catch (const ConvergenceError&) {
        throw ConvergenceError("fit_line_center: no start converged clear of the data poles");
    }
    if (!res.converged) throw ConvergenceError("fit_line_center: fit did not converge");
    for (const auto& pt : points)
        if (std::abs(pt.frequency_hz - res.params[0]) < options.pole_guard_hz)
            throw PoleError("fit_line_center: fitted f0 collides with a data point");

    LineCenterFit fit;
    fit.f0_hz = res.params[0];
    fit.amplitude = res.params[1];
    fit.sigma_f0_stat_hz = res.sigma[0];
    fit.sigma_f0_hz = std::sqrt(res.sigma[0] * res.sigma[0] +
                                options.wavemeter_sigma_hz * options.wavemeter_sigma_hz);
    fit.sigma_amplitude = res.sigma[1];
    fit.chi2 = res.chi2;
    fit.converged = res.converged;
    return fit;
}

double extract_avib(const StarkDataPoint& point, const stark::TransitionLine& target_line,
                    const stark::RoVibronicState& state, const stark::LineCatalog& catalog,
                    double mass_correction, const stark::StarkOptions& options) {
    point.validate();
    catalog.validate();
    if (mass_correction <= 0) throw DomainError("extract_avib: mass correction must be positive");

    const stark::LaserField laser{point.intensity_w_m2, point.frequency_hz};

    bool target_found = false;
    double target_kernel = 0.0;  // signed shift (Hz) per unit A_vib
    double other_shift = 0.0;
    for (const auto& line : catalog.lines) {
        if (line.lower.label != state.label) continue;
        const double per_avib = stark::stark_shift_per_avib(line, state, laser, options);
        const bool is_target = line.lower.label == target_line.lower.label &&
                               line.upper.label == target_line.upper.label &&
                               line.frequency_hz == target_line.frequency_hz;
        if (is_target) {
            target_found = true;
            target_kernel = per_avib;
        } else {
            other_shift += line.a_vib * per_avib;
        }
    }
    if (!target_found) throw DomainError("extract_avib: target line not in catalog");
    if (target_kernel == 0.0)
        throw DomainError("extract_avib: target line does not couple to the probe sublevel");

    // Data points carry |dE|/(h I); reconstruct the signed shift from the
    // target kernel's sign, correct it, remove the other lines, invert.
    const double measured_magnitude = point.stark_over_intensity * point.intensity_w_m2;
    const double corrected = point.mass_corrected ? measured_magnitude
                                                  : measured_magnitude * mass_correction;
    const double signed_shift = std::copysign(corrected, target_kernel);
    const double target_share = signed_shift - other_shift;
    const double a_vib = target_share / target_kernel;
    if (a_vib < 0)
        throw DomainError("extract_avib: other catalog lines exceed the measured shift "
                          "(negative A); check catalog or data");
    return a_vib;
}

double mass_corrected_wavelength(double wavelength_m, double mass_atom_amu,
                                 double mass_molecule_amu) {
    if (mass_atom_amu <= 0 || mass_molecule_amu <= 0)
        throw DomainError("mass_corrected_wavelength: masses must be positive");
    return wavelength_m * std::sqrt(mass_atom_amu / mass_molecule_amu);
}

double apply_mass_correction(double stark_shift_hz, double factor) {
    if (factor <= 0) throw DomainError("apply_mass_correction: factor must be positive");
    return stark_shift_hz * factor;
}

StarkDataPoint apply_mass_correction(StarkDataPoint point, double factor) {
    if (point.mass_corrected)
        throw DomainError("apply_mass_correction: point is already corrected");
    point.stark_over_intensity = apply_mass_correction(point.stark_over_intensity, factor);
    point.sigma = apply_mass_correction(point.sigma, factor);
    point.mass_corrected = true;
    return point;
}

}
