#include "doctest.h"

#include <cmath>
#include <random>

#include "qnd/catalog.hpp"
#include "qnd/errors.hpp"
#include "qnd/motion.hpp"
#include "qnd/specfit.hpp"

using namespace qnd;
using namespace qnd::specfit;

namespace {

// Trace synthesized from the sideband model itself; n_shots = 0 keeps it
// noiseless (sentinel replaced by a large shot count).
RabiTrace make_trace(double nbar, double delta_hz, double t2_s, int n_points = 30,
                     double t_max = 60e-6, long n_shots = 400) {
    RabiTrace trace;
    trace.params = motion::SidebandParams{};
    motion::SidebandParams p = trace.params;
    p.delta_hz = delta_hz;
    p.t2_s = t2_s;
    const auto dist = motion::fock_distribution_coherent(std::sqrt(nbar), 64);
    for (int i = 1; i <= n_points; ++i) {
        RabiSample s;
        s.t_s = t_max * i / n_points;
        s.p_excite = motion::sideband_signal(dist, s.t_s, p);
        s.n_shots = n_shots;
        trace.samples.push_back(s);
    }
    return trace;
}

RabiTrace sample_trace(const RabiTrace& noiseless, std::mt19937_64& rng, long n_shots) {
    RabiTrace out = noiseless;
    for (auto& s : out.samples) {
        std::binomial_distribution<long> bin(n_shots, s.p_excite);
        s.p_excite = static_cast<double>(bin(rng)) / n_shots;
        s.n_shots = n_shots;
    }
    return out;
}

}  // namespace

TEST_CASE("fit_rabi_trace: noiseless round trip") {
    const auto trace = make_trace(1.2, 0.0, 1e-3);
    const auto fit = fit_rabi_trace(trace);
    CHECK(fit.converged);
    CHECK(fit.nbar == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(std::abs(fit.delta_hz) < 1.0);
    CHECK(fit.t2_s == doctest::Approx(1e-3).epsilon(1e-4));

    const auto detuned = make_trace(0.8, 2500.0, 4e-4);
    const auto fit2 = fit_rabi_trace(detuned);
    CHECK(fit2.nbar == doctest::Approx(0.8).epsilon(1e-5));
    CHECK(std::abs(fit2.delta_hz) == doctest::Approx(2500.0).epsilon(1e-4));
    CHECK(fit2.t2_s == doctest::Approx(4e-4).epsilon(1e-4));
}

TEST_CASE("fit_rabi_trace: degenerate and undersized traces") {
    RabiTrace flat;
    flat.params = motion::SidebandParams{};
    for (int i = 1; i <= 10; ++i) flat.samples.push_back({i * 1e-6, 0.0, 100});
    CHECK_THROWS_AS(fit_rabi_trace(flat), DomainError);

    const auto tiny = make_trace(1.0, 0.0, 1e-3, 5);
    CHECK_THROWS_AS(fit_rabi_trace(tiny), DomainError);
}

TEST_CASE("rabi trace invariants") {
    RabiTrace bad = make_trace(1.0, 0.0, 1e-3, 8);
    bad.samples[3].t_s = bad.samples[2].t_s;  // not strictly increasing
    CHECK_THROWS_AS(bad.validate(), DomainError);

    bad = make_trace(1.0, 0.0, 1e-3, 8);
    bad.samples[1].p_excite = 1.2;
    CHECK_THROWS_AS(bad.validate(), DomainError);

    bad = make_trace(1.0, 0.0, 1e-3, 8);
    bad.samples[0].n_shots = 0;
    CHECK_THROWS_AS(bad.validate(), DomainError);

    // the binomial error floor keeps p = 0 and p = 1 samples at finite weight
    CHECK(binomial_sigma(0.0, 200) == doctest::Approx(1.0 / 400).epsilon(1e-15));
    CHECK(binomial_sigma(1.0, 200) == doctest::Approx(1.0 / 400).epsilon(1e-15));
    CHECK(binomial_sigma(0.5, 200) == doctest::Approx(std::sqrt(0.25 / 200)).epsilon(1e-12));
}

TEST_CASE("fit_rabi_trace: 1-sigma coverage at shot noise") {
    // 68% of fits should cover the true nbar within their 1-sigma interval.
    // The truth keeps all three parameters identifiable: nonzero detuning
    // (away from the delta -> -delta symmetry point) and a coherence time
    // inside the sampled window.
    std::mt19937_64 rng(314159ull);
    const auto noiseless = make_trace(1.2, 300.0, 150e-6, 40, 150e-6);
    const int replicates = 1000;
    int covered = 0, used = 0;
    for (int r = 0; r < replicates; ++r) {
        const auto noisy = sample_trace(noiseless, rng, 100);
        RabiFitResult fit;
        try {
            fit = fit_rabi_trace(noisy);
        } catch (const std::exception&) {
            continue;
        }
        ++used;
        covered += std::abs(fit.nbar - 1.2) <= fit.sigma[0];
    }
    CHECK(used > replicates * 95 / 100);
    const double coverage = static_cast<double>(covered) / used;
    CHECK(coverage > 0.63);
    CHECK(coverage < 0.73);
}

TEST_CASE("build_calibration: exact polynomial recovery") {
    std::vector<CalibrationPoint> points;
    for (double s : {2500.0, 4000.0, 6000.0, 8000.0, 10500.0, 13000.0}) {
        CalibrationPoint p;
        p.stark_shift_hz = s;
        p.nbar = 1e-8 * s * s;           // exact quadratic through zero
        p.delta_hz = -20.0 + 0.003 * s;  // exact linear
        p.t2_s = 9e-4;                   // constant
        points.push_back(p);
    }
    const auto model = build_calibration(points);
    CHECK(model.nbar_coeffs[2] == doctest::Approx(1e-8).epsilon(1e-9));
    CHECK(std::abs(model.nbar_coeffs[0]) < 1e-6);
    CHECK(model.delta_coeffs[0] == doctest::Approx(-20.0).epsilon(1e-9));
    CHECK(model.delta_coeffs[1] == doctest::Approx(0.003).epsilon(1e-9));
    CHECK(std::abs(model.t2_coeffs[1]) < 1e-12);  // constant input, zero slope
    CHECK(model.valid_min_hz == 2500.0);
    CHECK(model.valid_max_hz == 13000.0);

    points.resize(3);
    CHECK_THROWS_AS(build_calibration(points), DomainError);
}

namespace {

// Simulated calibration run over the sensitivity window, mirroring how the
// trace-shape model is built against known drive strengths.
CalibrationModel build_simulated_calibration(double kappa = 0.714, int n_points = 8) {
    std::vector<CalibrationPoint> points;
    for (int i = 0; i < n_points; ++i) {
        const double shift = 2500.0 + (13000.0 - 2500.0) * i / (n_points - 1);
        motion::OdfConfig odf;
        odf.stark_shift_hz = shift;
        odf.coupling_kappa = kappa;
        const double alpha = motion::odf_displacement(odf);
        const double delta = -20.0 + 0.003 * shift;
        const double t2 = 9e-4 - 1e-8 * shift;
        const auto trace = [&] {
            RabiTrace t = make_trace(alpha * alpha, delta, t2);
            return t;
        }();
        const auto fit = fit_rabi_trace(trace);
        points.push_back({shift, fit.nbar, fit.delta_hz, fit.t2_s});
    }
    return build_calibration(points);
}

const CalibrationModel& simulated_calibration() {
    static const CalibrationModel model = build_simulated_calibration();
    return model;
}

RabiTrace trace_at_shift(const CalibrationModel& calib, double shift, long n_shots = 400) {
    return make_trace(calib.nbar(shift), calib.delta(shift), calib.t2(shift), 30, 60e-6,
                      n_shots);
}

}  // namespace

TEST_CASE("stark_from_trace: round trips through the calibration") {
    const auto& calib = simulated_calibration();

    for (double shift : {3000.0, 5500.0, 8000.0, 12000.0}) {
        const auto est = stark_from_trace(trace_at_shift(calib, shift), calib);
        CHECK(est.converged);
        CHECK(est.stark_shift_hz == doctest::Approx(shift).epsilon(1e-3));
        CHECK(!est.boundary_flag);
    }
}

TEST_CASE("stark_from_trace: below-range trace pins to the boundary") {
    const auto& calib = simulated_calibration();
    // synthesize a drive well below the calibrated window
    motion::OdfConfig odf;
    odf.stark_shift_hz = 1000.0;
    odf.coupling_kappa = 0.714;
    const double alpha = motion::odf_displacement(odf);
    const auto trace = make_trace(alpha * alpha, -17.0, 8.9e-4);
    const auto est = stark_from_trace(trace, calib);
    CHECK(est.boundary_flag);
    CHECK(est.stark_shift_hz == doctest::Approx(calib.valid_min_hz).epsilon(1e-6));
}

TEST_CASE("stark_from_trace: noisy traces stay within 3 sigma") {
    const auto& calib = simulated_calibration();
    std::mt19937_64 rng(777ull);
    const auto noiseless = trace_at_shift(calib, 8000.0);
    int inside = 0, used = 0;
    for (int r = 0; r < 1000; ++r) {
        const auto noisy = sample_trace(noiseless, rng, 200);
        StarkEstimate est;
        try {
            est = stark_from_trace(noisy, calib);
        } catch (const std::exception&) {
            continue;
        }
        ++used;
        inside += std::abs(est.stark_shift_hz - 8000.0) <= 3.0 * est.sigma_hz;
    }
    CHECK(used > 950);
    CHECK(static_cast<double>(inside) / used >= 0.99);
}

namespace {

std::vector<StarkDataPoint> synthetic_force_spectrum(double f0, double a_vib,
                                                     double noise_fraction,
                                                     std::mt19937_64* rng) {
    const auto catalog = stark::builtin_n2_meinel();
    const auto state = stark::bright_state_of(catalog);
    auto line = catalog.lines.front();
    line.a_vib = a_vib;
    stark::LineCatalog cat;
    cat.name = "synthetic";
    cat.lines.push_back(line);
    cat.lines.front().frequency_hz = f0;

    // red-detuned points spread like the published force spectrum
    std::vector<double> detunings;
    for (int i = 0; i < 18; ++i)
        detunings.push_back(-8e9 * std::pow(300.0 / 8.0, i / 17.0));

    std::vector<StarkDataPoint> points;
    std::normal_distribution<double> noise(0.0, noise_fraction);
    for (double detuning : detunings) {
        StarkDataPoint p;
        p.frequency_hz = f0 + detuning;
        p.detuning_hz = detuning;
        p.intensity_w_m2 = 2e6;
        const double shift =
            stark::ac_stark_shift(state, {p.intensity_w_m2, p.frequency_hz}, cat);
        double magnitude = std::abs(shift) / p.intensity_w_m2;
        if (rng) magnitude *= 1.0 + noise(*rng);
        p.stark_over_intensity = magnitude;
        p.sigma = std::max(std::abs(shift) / p.intensity_w_m2 * std::max(noise_fraction, 1e-4),
                           1e-12);
        points.push_back(p);
    }
    return points;
}

}  // namespace

TEST_CASE("fit_line_center: noiseless recovery at the published precision") {
    const double f0 = 380.7011e12;
    const auto points = synthetic_force_spectrum(f0, 4.03e4, 0.0, nullptr);
    const auto fit = fit_line_center(points);
    CHECK(fit.converged);
    CHECK(std::abs(fit.f0_hz - f0) < 1e8);
    CHECK(fit.amplitude > 0.0);
    // wavemeter systematic dominates the reported uncertainty when the
    // statistical one collapses
    CHECK(fit.sigma_f0_hz >= 50e6);
}

TEST_CASE("fit_line_center: symmetric points bracket the center") {
    std::vector<StarkDataPoint> points;
    const double f0 = 380.0e12;
    for (double off : {-30e9, -10e9, 10e9, 30e9}) {
        StarkDataPoint p;
        p.frequency_hz = f0 + off;
        p.intensity_w_m2 = 1.0;
        p.stark_over_intensity = 5e3 / std::abs(off) * 1e9;
        p.sigma = 1.0;
        points.push_back(p);
    }
    const auto fit = fit_line_center(points);
    CHECK(fit.f0_hz == doctest::Approx(f0).epsilon(1e-12));

    points.resize(2);
    CHECK_THROWS_AS(fit_line_center(points), DomainError);
}

TEST_CASE("extract_avib: exact inversion of the shift") {
    const auto catalog = stark::builtin_n2_meinel();
    const auto state = stark::bright_state_of(catalog);
    const auto& line = catalog.lines.front();

    std::mt19937_64 rng(99ull);
    std::uniform_real_distribution<double> det(-300e9, -2e9);
    std::uniform_real_distribution<double> avib(1e3, 1e6);
    std::uniform_real_distribution<double> intensity(1e5, 1e7);
    for (int trial = 0; trial < 200; ++trial) {
        stark::LineCatalog cat = catalog;
        cat.lines.front().a_vib = avib(rng);
        StarkDataPoint p;
        p.frequency_hz = line.frequency_hz + det(rng);
        p.intensity_w_m2 = intensity(rng);
        const double shift =
            stark::ac_stark_shift(state, {p.intensity_w_m2, p.frequency_hz}, cat);
        p.stark_over_intensity = std::abs(shift) / p.intensity_w_m2;
        p.sigma = 1e-9;
        const double recovered = extract_avib(p, cat.lines.front(), state, cat, 1.0);
        CHECK(recovered == doctest::Approx(cat.lines.front().a_vib).epsilon(1e-10));
        // doubling the measured shift doubles A exactly
        StarkDataPoint doubled = p;
        doubled.stark_over_intensity *= 2.0;
        CHECK(extract_avib(doubled, cat.lines.front(), state, cat, 1.0) ==
              doctest::Approx(2.0 * recovered).epsilon(1e-12));
    }

    // zero measured shift -> zero A
    StarkDataPoint zero;
    zero.frequency_hz = line.frequency_hz - 17e9;
    zero.intensity_w_m2 = 2e6;
    zero.stark_over_intensity = 0.0;
    zero.sigma = 1e-9;
    CHECK(extract_avib(zero, line, state, catalog, 1.0) == 0.0);
}

TEST_CASE("extract_avib: other-line subtraction and failure modes") {
    // two lines from the same lower state; extraction of one must subtract
    // the fixed contribution of the other
    auto catalog = stark::builtin_n2_meinel();
    stark::TransitionLine second = catalog.lines.front();
    second.upper.label = "N2+_A_v2_J1/2";
    second.upper.twice_j = 1;
    second.frequency_hz = 380.66e12;
    second.a_vib = 2.1e4;
    second.s_rot = 1.0 / 3.0;
    second.branch = "Q-type";
    catalog.lines.push_back(second);
    const auto state = stark::bright_state_of(catalog);

    StarkDataPoint p;
    p.frequency_hz = 380.69e12;
    p.intensity_w_m2 = 2e6;
    const double shift = stark::ac_stark_shift(state, {p.intensity_w_m2, p.frequency_hz}, catalog);
    p.stark_over_intensity = std::abs(shift) / p.intensity_w_m2;
    p.sigma = 1e-9;
    const double recovered = extract_avib(p, catalog.lines.front(), state, catalog, 1.0);
    CHECK(recovered == doctest::Approx(catalog.lines.front().a_vib).epsilon(1e-10));

    // a missing target line is a domain error
    stark::TransitionLine absent = second;
    absent.frequency_hz = 999e12;
    CHECK_THROWS_AS(extract_avib(p, absent, state, catalog, 1.0), DomainError);

    // measurement smaller than the same-sign contribution of the other line
    // -> negative A
    StarkDataPoint too_small;
    too_small.frequency_hz = 380.5e12;  // red of both lines
    too_small.intensity_w_m2 = 2e6;
    too_small.stark_over_intensity = 1e-9;
    too_small.sigma = 1e-12;
    CHECK_THROWS_AS(extract_avib(too_small, catalog.lines.front(), state, catalog, 1.0),
                    DomainError);
}

TEST_CASE("extract_avib: noisy batch reproduces the published band") {
    const double a_true = 4.03e4;
    const auto catalog = stark::builtin_n2_meinel();
    const auto state = stark::bright_state_of(catalog);
    std::mt19937_64 rng(2468ull);
    const int replicates = 200;
    int in_band = 0;
    for (int r = 0; r < replicates; ++r) {
        const auto points = synthetic_force_spectrum(380.7011e12, a_true, 0.05, &rng);
        double mean = 0.0;
        for (const auto& p : points)
            mean += extract_avib(p, catalog.lines.front(), state, catalog, 1.0);
        mean /= points.size();
        in_band += std::abs(mean - a_true) <= 0.11e4;
    }
    CHECK(in_band >= replicates * 95 / 100);
}

TEST_CASE("mass corrections") {
    // 787.47 nm scaled by sqrt(40/28) lands at ~941 nm
    const double scaled = mass_corrected_wavelength(787.47e-9, 40.0, 28.0);
    CHECK(scaled > 938e-9);
    CHECK(scaled < 944e-9);
    CHECK(scaled == doctest::Approx(941.2e-9).epsilon(1e-3));
    CHECK(mass_corrected_wavelength(787.47e-9, 28.0, 28.0) == 787.47e-9);
    CHECK(mass_corrected_wavelength(500e-9, 4.0, 1.0) == doctest::Approx(1000e-9).epsilon(1e-14));
    CHECK_THROWS_AS(mass_corrected_wavelength(500e-9, -1.0, 1.0), DomainError);

    CHECK(apply_mass_correction(10e3, 1.17) == doctest::Approx(11.7e3).epsilon(1e-14));
    CHECK(apply_mass_correction(10e3, 1.0) == 10e3);

    StarkDataPoint p;
    p.frequency_hz = 380.69e12;
    p.intensity_w_m2 = 2e6;
    p.stark_over_intensity = 5e-3;
    p.sigma = 1e-4;
    const auto corrected = apply_mass_correction(p, 1.17);
    CHECK(corrected.mass_corrected);
    CHECK(corrected.stark_over_intensity == doctest::Approx(5.85e-3).epsilon(1e-14));
    CHECK_THROWS_AS(apply_mass_correction(corrected, 1.17), DomainError);
}

TEST_CASE("extract_avib honors the mass-correction flag") {
    const auto catalog = stark::builtin_n2_meinel();
    const auto state = stark::bright_state_of(catalog);
    const auto& line = catalog.lines.front();
    StarkDataPoint p;
    p.frequency_hz = line.frequency_hz - 17e9;
    p.intensity_w_m2 = 2e6;
    const double shift = stark::ac_stark_shift(state, {p.intensity_w_m2, p.frequency_hz}, catalog);
    p.stark_over_intensity = std::abs(shift) / p.intensity_w_m2;
    p.sigma = 1e-9;

    const double with_factor = extract_avib(p, line, state, catalog, 1.17);
    CHECK(with_factor == doctest::Approx(1.17 * line.a_vib).epsilon(1e-10));
    // an already-corrected point is not scaled again
    const auto pre = apply_mass_correction(p, 1.17);
    CHECK(extract_avib(pre, line, state, catalog, 1.17) ==
          doctest::Approx(1.17 * line.a_vib).epsilon(1e-10));
}

TEST_CASE("line-center residuals: reduced chi-square and zero-mean residuals") {
    std::mt19937_64 rng(13579ull);
    const double f0 = 380.7011e12;
    double chi2_sum = 0.0;
    double pull_sum = 0.0;
    long n_fits = 0, n_pulls = 0;
    for (int r = 0; r < 300; ++r) {
        std::vector<StarkDataPoint> points;
        std::normal_distribution<double> noise(0.0, 1.0);
        for (const auto& base : synthetic_force_spectrum(f0, 4.03e4, 0.0, nullptr)) {
            StarkDataPoint p = base;
            p.sigma = 0.03 * p.stark_over_intensity;
            p.stark_over_intensity += p.sigma * noise(rng);
            p.stark_over_intensity = std::max(p.stark_over_intensity, 1e-15);
            points.push_back(p);
        }
        try {
            const auto fit = fit_line_center(points);
            chi2_sum += fit.chi2 / (points.size() - 2);
            ++n_fits;
            for (const auto& p : points) {
                const double model = fit.amplitude / std::abs(p.frequency_hz - fit.f0_hz);
                pull_sum += (p.stark_over_intensity - model) / p.sigma;
                ++n_pulls;
            }
        } catch (const std::exception&) {
        }
    }
    CHECK(n_fits > 290);
    const double mean_reduced = chi2_sum / n_fits;
    CHECK(mean_reduced > 0.5);
    CHECK(mean_reduced < 1.5);
    // symmetric noise leaves the optimum's residuals zero-mean within the
    // Monte Carlo error of the pull average (se ~ 1/sqrt(n_pulls))
    CHECK(std::abs(pull_sum / n_pulls) < 4.0 / std::sqrt(static_cast<double>(n_pulls)));
}
