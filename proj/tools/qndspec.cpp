// qndspec: command-line front end for the QND molecular state-detection
// toolkit. Subcommands wire the stark/motion/inference/specfit modules to
// CSV and JSON files; every run prints one JSON result envelope to stdout.
// Exit codes: 0 success, 2 input or configuration error, 3 fit
// non-convergence.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qnd/catalog.hpp"
#include "qnd/config.hpp"
#include "qnd/constants.hpp"
#include "qnd/csv.hpp"
#include "qnd/errors.hpp"
#include "qnd/inference.hpp"
#include "qnd/motion.hpp"
#include "qnd/specfit.hpp"
#include "qnd/stark.hpp"
#include "qnd/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qnd;

namespace {

// Published operating point used to anchor the drive calibration: the
// R11(1/2) shift at -17 GHz and 2e6 W/m^2, probed at t_729 = 20 us where the
// bright-state signal reaches 0.52.
constexpr double kAnchorDetuningHz = -17e9;
constexpr double kAnchorIntensity = 2e6;
constexpr double kAnchorPulseTime = 500e-6;
constexpr double kAnchorSignal = 0.52;
constexpr double kAnchorProbeTime = 20e-6;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

struct Tool {
    RunConfig config;
    std::string out_dir = ".";
    json inputs = json::object();
    json outputs = json::object();

    stark::LineCatalog catalog() const {
        if (config.has_value("catalog_path"))
            return stark::load_catalog_file(config.get_string("catalog_path"));
        return stark::builtin_n2_meinel();
    }

    motion::SidebandParams sideband_params() const {
        motion::SidebandParams p;
        p.eta = config.get_double("eta");
        p.omega0_hz = config.get_double("omega0_hz");
        p.t2_s = config.get_double("t2_s");
        return p;
    }

    stark::StarkOptions stark_options() const {
        return {config.get_double("pole_guard_hz")};
    }

    // |shift| of the reference line's lower state at the anchor point.
    double anchor_shift_hz() const {
        const auto cat = stark::builtin_n2_meinel();
        const auto bright = stark::bright_state_of(cat);
        const stark::LaserField laser{kAnchorIntensity,
                                      cat.lines.front().frequency_hz + kAnchorDetuningHz};
        return std::abs(stark::ac_stark_shift(bright, laser, cat));
    }

    // kappa from config when set, otherwise calibrated against the anchor.
    double kappa() const {
        if (config.has_value("kappa")) return config.get_double("kappa");
        motion::SidebandParams probe = sideband_params();
        probe.delta_hz = 0.0;
        probe.t2_s = std::numeric_limits<double>::infinity();
        const double alpha_star =
            motion::solve_alpha_for_signal(kAnchorSignal, kAnchorProbeTime, probe);
        return motion::calibrate_kappa(alpha_star, anchor_shift_hz(), kAnchorPulseTime,
                                       config.get_double("mass_correction"), probe.eta);
    }

    motion::OdfConfig odf_config(double stark_shift_hz) const {
        motion::OdfConfig odf;
        odf.stark_shift_hz = stark_shift_hz;
        odf.pulse_time_s = config.get_double("t_odf_s");
        odf.coupling_kappa = kappa();
        odf.mass_correction = config.get_double("mass_correction");
        return odf;
    }

    inference::QndModel qnd_model() const {
        return inference::QndModel::make(config.get_double("p_alpha"),
                                         config.get_double("p_beta"),
                                         static_cast<int>(config.get_long("n_rep")),
                                         config.get_double("threshold_p"));
    }

    std::string out_path(const std::string& name) {
        fs::create_directories(out_dir);
        return (fs::path(out_dir) / name).string();
    }

    std::ofstream open_out(const std::string& name, std::string* path_out = nullptr) {
        const std::string path = out_path(name);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ParseError(path + ": cannot open for writing");
        if (path_out) *path_out = path;
        return out;
    }

    void note_input(const std::string& name, const std::string& path) {
        inputs[name] = {{"path", path}, {"digest_fnv64", file_digest(path)}};
    }

    void note_output(const std::string& name, const std::string& path) {
        outputs[name] = path;
    }

    void emit_envelope(const std::string& command, const json& report) {
        json env;
        env["command"] = command;
        env["version"] = qnd::version;
        env["config"] = json(config.snapshot());
        env["inputs"] = inputs;
        env["outputs"] = outputs;
        env["report"] = report;
        std::cout << env.dump(2) << "\n";
    }
};

std::string fmt(double v) { return csv::format_double(v); }

// --- spectrum -----------------------------------------------------------

struct OtherStateSpec {
    std::string label;
    int twice_j = 1;
    int twice_m = 1;
};

OtherStateSpec parse_other(const std::string& text) {
    OtherStateSpec spec;
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError("--other expects LABEL:TWICE_J:TWICE_M, got '" + text + "'");
    spec.label = text.substr(0, c1);
    spec.twice_j = std::stoi(text.substr(c1 + 1, c2 - c1 - 1));
    spec.twice_m = std::stoi(text.substr(c2 + 1));
    return spec;
}

int cmd_spectrum(Tool& tool, double center_hz, double span_hz, double step_hz, int twice_m,
                 const std::vector<std::string>& other_specs, bool ca_reference) {
    const auto catalog = tool.catalog();
    if (tool.config.has_value("catalog_path"))
        tool.note_input("catalog", tool.config.get_string("catalog_path"));
    const auto bright = stark::bright_state_of(catalog, twice_m);
    if (center_hz == 0.0) center_hz = catalog.lines.front().frequency_hz;
    if (step_hz <= 0.0) throw ConfigError("spectrum: step must be positive");
    if (span_hz < 0.0) throw ConfigError("spectrum: span must be >= 0");

    std::vector<double> grid;
    const long n_steps = span_hz == 0.0 ? 0 : static_cast<long>(std::floor(span_hz / step_hz + 0.25));
    for (long i = 0; i <= n_steps; ++i)
        grid.push_back(center_hz - span_hz / 2.0 + i * step_hz);

    std::vector<stark::RoVibronicState> others;
    for (const auto& text : other_specs) {
        const auto spec = parse_other(text);
        stark::RoVibronicState s;
        s.label = spec.label;
        s.twice_j = spec.twice_j;
        s.twice_m = spec.twice_m;
        s.validate();
        others.push_back(s);
    }

    const double intensity = tool.config.get_double("intensity_w_m2");
    const auto rows =
        stark_spectrum(bright, others, intensity, grid, catalog, tool.stark_options());

    std::string path;
    auto out = tool.open_out("spectrum.csv", &path);
    out << "frequency_hz,bright_shift_hz,other_shift_hz\n";
    long masked = 0;
    for (const auto& row : rows) {
        out << fmt(row.frequency_hz) << ','
            << (row.bright_shift_hz ? fmt(*row.bright_shift_hz) : std::string()) << ','
            << (row.max_other_shift_hz ? fmt(*row.max_other_shift_hz) : std::string()) << '\n';
        masked += !row.bright_shift_hz || !row.max_other_shift_hz;
    }
    out.close();
    tool.note_output("spectrum_csv", path);

    json report;
    report["rows"] = rows.size();
    report["masked_rows"] = masked;
    report["bright_state"] = bright.label;
    report["intensity_w_m2"] = intensity;

    if (ca_reference) {
        const auto ca = stark::builtin_ca40();
        stark::RoVibronicState s12;
        s12.label = "Ca+_4s_S1/2";
        s12.twice_j = 1;
        s12.twice_m = -1;
        stark::RoVibronicState d52;
        d52.label = "Ca+_3d_D5/2";
        d52.twice_j = 5;
        d52.twice_m = -5;
        const stark::LaserField laser{intensity, center_hz};
        const double s_shift = stark::ac_stark_shift(s12, laser, ca, tool.stark_options());
        const double d_shift = stark::ac_stark_shift(d52, laser, ca, tool.stark_options());
        std::string ca_path;
        auto ca_out = tool.open_out("ca_reference.csv", &ca_path);
        ca_out << "state,shift_hz\n";
        ca_out << "Ca+_4s_S1/2(m=-1/2)," << fmt(s_shift) << "\n";
        ca_out << "Ca+_3d_D5/2(m=-5/2)," << fmt(d_shift) << "\n";
        ca_out.close();
        tool.note_output("ca_reference_csv", ca_path);
        report["ca_s12_shift_hz"] = s_shift;
        report["ca_d52_shift_hz"] = d_shift;
    }

    tool.emit_envelope("spectrum", report);
    return 0;
}

// --- rabi ---------------------------------------------------------------

int cmd_rabi(Tool& tool, std::optional<double> alpha, std::optional<double> stark_shift_hz,
             double t_max_s, int points, bool background) {
    if (alpha.has_value() == stark_shift_hz.has_value())
        throw ConfigError("rabi: give exactly one of --alpha or --stark-shift");
    const auto params = tool.sideband_params();

    double amplitude;
    json report;
    if (alpha) {
        amplitude = *alpha;
    } else {
        const auto odf = tool.odf_config(*stark_shift_hz);
        amplitude = motion::odf_displacement(odf, params.eta);
        report["kappa"] = odf.coupling_kappa;
        report["stark_shift_hz"] = *stark_shift_hz;
    }
    report["alpha"] = amplitude;

    const int n_max = static_cast<int>(tool.config.get_long("n_max"));
    const auto dist = motion::fock_distribution_coherent(amplitude, n_max);

    auto write_curve = [&](const std::string& name, const motion::FockDistribution& d) {
        std::string path;
        auto out = tool.open_out(name, &path);
        out << "t_s,p_excite\n";
        for (int i = 0; i <= points; ++i) {
            const double t = t_max_s * i / points;
            out << fmt(t) << ',' << fmt(motion::sideband_signal(d, t, params)) << '\n';
        }
        out.close();
        return path;
    };

    tool.note_output("rabi_csv", write_curve("rabi.csv", dist));
    {
        std::string dist_path;
        auto out = tool.open_out("fock_distribution.csv", &dist_path);
        out << "n,probability\n";
        for (int n = 0; n <= dist.n_max(); ++n)
            out << n << ',' << fmt(dist.probabilities[n]) << '\n';
        out.close();
        tool.note_output("fock_distribution_csv", dist_path);
    }
    if (background) {
        const double nbar = tool.config.get_double("nbar_background");
        tool.note_output("rabi_background_csv",
                         write_curve("rabi_background.csv",
                                     motion::fock_distribution_thermal(nbar, n_max)));
        tool.note_output("rabi_dark_csv",
                         write_curve("rabi_dark.csv", motion::fock_distribution_coherent(0.0, 4)));
        report["nbar_background"] = nbar;
    }
    report["p_at_20us"] = motion::sideband_signal(dist, 20e-6, params);
    tool.emit_envelope("rabi", report);
    return 0;
}

// --- discriminate -----------------------------------------------------------

int cmd_discriminate(Tool& tool, const std::vector<double>& targets) {
    const auto model = tool.qnd_model();
    const auto errors = inference::detection_errors(model);
    const auto fidelity = inference::fidelity_report(model);

    json report;
    report["p_alpha"] = model.p_alpha;
    report["p_beta"] = model.p_beta;
    report["n_rep"] = model.n_rep;
    report["k_t"] = model.threshold_k;
    report["threshold_p"] = model.threshold_p;
    report["e_dark"] = errors.error_dark;
    report["e_bright"] = errors.error_bright;
    report["fidelity_dark"] = fidelity.fidelity_dark;
    report["fidelity_bright"] = fidelity.fidelity_bright;
    report["fidelity_overall"] = fidelity.fidelity_overall;
    json reps = json::object();
    for (double target : targets)
        reps[fmt(target)] = inference::min_repetitions(model.p_alpha, model.p_beta, target);
    report["min_repetitions"] = reps;

    tool.emit_envelope("discriminate", report);
    return 0;
}

// --- timetrace ----------------------------------------------------------

int cmd_timetrace(Tool& tool, long attempts, double jump_probability,
                  std::optional<long> jump_after, const std::string& initial,
                  const std::string& source) {
    const auto model = tool.qnd_model();
    inference::TimeTraceConfig cfg;
    cfg.n_attempts = attempts;
    cfg.jump_probability_per_attempt = jump_probability;
    cfg.prep_success = tool.config.get_double("prep_success");
    cfg.rng_seed = tool.config.get_seed();
    cfg.forced_jump_after = jump_after;
    if (initial == "bright")
        cfg.initial_state = inference::MoleculeState::bright;
    else if (initial == "dark")
        cfg.initial_state = inference::MoleculeState::dark;
    else
        throw ConfigError("timetrace: --initial must be bright or dark");

    std::optional<double> p_bright, p_dark;
    json report;
    if (source == "motion") {
        // Per-shot success probabilities from the motional model, averaged
        // over the probe window 16.7..26.7 us around the contrast maximum.
        const auto params = tool.sideband_params();
        const double alpha =
            motion::odf_displacement(tool.odf_config(tool.anchor_shift_hz()), params.eta);
        const int n_max = static_cast<int>(tool.config.get_long("n_max"));
        const auto bright_dist = motion::fock_distribution_coherent(alpha, n_max);
        const auto dark_dist = motion::fock_distribution_thermal(
            tool.config.get_double("nbar_background"), n_max);
        double pb = 0, pd = 0;
        const int window = 22;
        for (int i = 0; i < window; ++i) {
            const double t = 16.7e-6 + (26.7e-6 - 16.7e-6) * i / (window - 1);
            pb += motion::sideband_signal(bright_dist, t, params);
            pd += motion::sideband_signal(dark_dist, t, params);
        }
        p_bright = pb / window;
        p_dark = pd / window;
        report["p_bright_motion"] = *p_bright;
        report["p_dark_motion"] = *p_dark;
    } else if (source != "config") {
        throw ConfigError("timetrace: --source must be config or motion");
    }

    const auto trace = inference::simulate_timetrace(model, cfg, p_bright, p_dark);

    std::string path;
    auto out = tool.open_out("timetrace.csv", &path);
    out << "attempt,k,n_used,p_hat,classification,true_state\n";
    long bright_count = 0, misclassified = 0;
    std::vector<long> hist_dark(model.n_rep + 1, 0), hist_bright(model.n_rep + 1, 0);
    for (const auto& rec : trace) {
        const bool is_bright = rec.classification == inference::MoleculeState::bright;
        bright_count += is_bright;
        misclassified += rec.classification != rec.true_state;
        out << rec.attempt_index << ',' << rec.k_successes << ',' << rec.n_used << ','
            << fmt(rec.p_hat) << ',' << (is_bright ? "bright" : "dark") << ','
            << (rec.true_state == inference::MoleculeState::bright ? "bright" : "dark") << '\n';
        const int bin = static_cast<int>(std::lround(rec.p_hat * model.n_rep));
        (is_bright ? hist_bright : hist_dark)[bin] += 1;
    }
    out.close();
    tool.note_output("timetrace_csv", path);

    std::string hist_path;
    auto hist = tool.open_out("timetrace_histogram.csv", &hist_path);
    hist << "p_hat_bin_center,count_dark,count_bright\n";
    for (int k = 0; k <= model.n_rep; ++k)
        hist << fmt(static_cast<double>(k) / model.n_rep) << ',' << hist_dark[k] << ','
             << hist_bright[k] << '\n';
    hist.close();
    tool.note_output("histogram_csv", hist_path);

    report["attempts"] = attempts;
    report["classified_bright"] = bright_count;
    report["classified_dark"] = attempts - bright_count;
    report["misclassified"] = misclassified;
    tool.emit_envelope("timetrace", report);
    return 0;
}

// --- fit ----------------------------------------------------------------

specfit::RabiTrace load_rabi_trace(Tool& tool, const std::string& path) {
    specfit::RabiTrace trace;
    trace.params = tool.sideband_params();
    trace.odf_pulse_time_s = tool.config.get_double("t_odf_s");
    for (const auto& row : csv::read_file(path, {"t_s", "p_excite", "n_shots"})) {
        specfit::RabiSample s;
        s.t_s = csv::parse_double(row, 0, path);
        s.p_excite = csv::parse_double(row, 1, path);
        s.n_shots = csv::parse_long(row, 2, path);
        trace.samples.push_back(s);
    }
    try {
        trace.validate();
    } catch (const DomainError& err) {
        throw ParseError(path + ": " + err.what());
    }
    tool.note_input("trace", path);
    return trace;
}

std::vector<specfit::StarkDataPoint> load_stark_points(Tool& tool, const std::string& path) {
    std::vector<specfit::StarkDataPoint> points;
    for (const auto& row : csv::read_file(
             path, {"frequency_hz", "intensity_w_m2", "stark_over_intensity", "sigma"})) {
        specfit::StarkDataPoint p;
        p.frequency_hz = csv::parse_double(row, 0, path);
        p.intensity_w_m2 = csv::parse_double(row, 1, path);
        p.stark_over_intensity = csv::parse_double(row, 2, path);
        p.sigma = csv::parse_double(row, 3, path);
        try {
            p.validate();
        } catch (const DomainError& err) {
            throw ParseError(path, row.line, err.what());
        }
        points.push_back(p);
    }
    tool.note_input("points", path);
    return points;
}

json covariance_json(const std::array<std::array<double, 3>, 3>& cov) {
    json rows = json::array();
    for (const auto& r : cov) rows.push_back(std::vector<double>(r.begin(), r.end()));
    return rows;
}

int cmd_fit_rabi(Tool& tool, const std::string& input) {
    const auto trace = load_rabi_trace(tool, input);
    const auto fit = specfit::fit_rabi_trace(
        trace, static_cast<int>(tool.config.get_long("fit_max_iterations")));
    json report;
    report["nbar"] = fit.nbar;
    report["delta_hz"] = fit.delta_hz;
    report["t2_s"] = fit.t2_s;
    report["sigma"] = {{"nbar", fit.sigma[0]}, {"delta_hz", fit.sigma[1]}, {"t2_s", fit.sigma[2]}};
    report["covariance"] = covariance_json(fit.covariance);
    report["chi2"] = fit.chi2;
    report["iterations"] = fit.iterations;
    report["converged"] = fit.converged;
    tool.emit_envelope("fit_rabi", report);
    return 0;
}

specfit::CalibrationModel auto_calibration(Tool& tool) {
    // Self-consistent calibration over the detection sensitivity window,
    // mirroring the measured-force procedure with model-generated traces.
    const auto params = tool.sideband_params();
    const double t2 = std::isfinite(params.t2_s) ? params.t2_s : 1e-3;
    std::vector<specfit::CalibrationPoint> points;
    for (int i = 0; i < 8; ++i) {
        const double shift = 2500.0 + (13000.0 - 2500.0) * i / 7.0;
        const double alpha = motion::odf_displacement(tool.odf_config(shift), params.eta);
        points.push_back({shift, alpha * alpha, 0.0, t2});
    }
    return specfit::build_calibration(points);
}

specfit::CalibrationModel load_calibration(Tool& tool, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open calibration file");
    json j;
    try {
        in >> j;
        specfit::CalibrationModel model;
        model.nbar_coeffs = j.at("nbar_coeffs").get<std::vector<double>>();
        model.delta_coeffs = j.at("delta_coeffs").get<std::vector<double>>();
        model.t2_coeffs = j.at("t2_coeffs").get<std::vector<double>>();
        model.valid_min_hz = j.at("valid_min_hz").get<double>();
        model.valid_max_hz = j.at("valid_max_hz").get<double>();
        model.validate();
        tool.note_input("calibration", path);
        return model;
    } catch (const json::exception& err) {
        throw ParseError(path + ": " + std::string(err.what()));
    }
}

json calibration_json(const specfit::CalibrationModel& model) {
    json j;
    j["nbar_coeffs"] = model.nbar_coeffs;
    j["delta_coeffs"] = model.delta_coeffs;
    j["t2_coeffs"] = model.t2_coeffs;
    j["valid_min_hz"] = model.valid_min_hz;
    j["valid_max_hz"] = model.valid_max_hz;
    return j;
}

int cmd_fit_stark(Tool& tool, const std::string& input, const std::string& calibration_path,
                  const std::string& calibration_out) {
    const auto trace = load_rabi_trace(tool, input);
    const auto calibration = calibration_path.empty() ? auto_calibration(tool)
                                                      : load_calibration(tool, calibration_path);
    if (!calibration_out.empty()) {
        std::string path;
        auto out = tool.open_out(calibration_out, &path);
        out << calibration_json(calibration).dump(2) << "\n";
        out.close();
        tool.note_output("calibration_json", path);
    }
    const auto est = specfit::stark_from_trace(
        trace, calibration, static_cast<int>(tool.config.get_long("fit_max_iterations")));
    json report;
    report["stark_shift_hz"] = est.stark_shift_hz;
    report["sigma_hz"] = est.sigma_hz;
    report["boundary_flag"] = est.boundary_flag;
    report["chi2"] = est.chi2;
    report["converged"] = est.converged;
    report["calibration"] = calibration_json(calibration);
    tool.emit_envelope("fit_stark", report);
    return 0;
}

int cmd_fit_line(Tool& tool, const std::string& input, double wavemeter_sigma_hz) {
    const auto points = load_stark_points(tool, input);
    specfit::LineCenterOptions options;
    options.pole_guard_hz = tool.config.get_double("pole_guard_hz");
    options.wavemeter_sigma_hz = wavemeter_sigma_hz;
    options.max_iterations = static_cast<int>(tool.config.get_long("fit_max_iterations"));
    const auto fit = specfit::fit_line_center(points, options);
    json report;
    report["f0_hz"] = fit.f0_hz;
    report["sigma_f0_stat_hz"] = fit.sigma_f0_stat_hz;
    report["sigma_f0_hz"] = fit.sigma_f0_hz;
    report["amplitude"] = fit.amplitude;
    report["sigma_amplitude"] = fit.sigma_amplitude;
    report["chi2"] = fit.chi2;
    report["n_points"] = points.size();
    report["converged"] = fit.converged;
    tool.emit_envelope("fit_line", report);
    return 0;
}

int cmd_fit_avib(Tool& tool, const std::string& input, const std::string& branch, int twice_m) {
    const auto points = load_stark_points(tool, input);
    const auto catalog = tool.catalog();
    if (tool.config.has_value("catalog_path"))
        tool.note_input("catalog", tool.config.get_string("catalog_path"));

    const stark::TransitionLine* target = nullptr;
    for (const auto& line : catalog.lines)
        if (branch.empty() || line.branch == branch) {
            target = &line;
            break;
        }
    if (!target) throw ConfigError("fit avib: no catalog line with branch '" + branch + "'");
    auto state = target->lower;
    state.twice_m = twice_m;

    const double mass_correction = tool.config.get_double("mass_correction");
    json per_point = json::array();
    double mean = 0.0, m2 = 0.0;
    long n = 0;
    for (const auto& p : points) {
        const double a =
            specfit::extract_avib(p, *target, state, catalog, mass_correction,
                                  tool.stark_options());
        per_point.push_back({{"frequency_hz", p.frequency_hz},
                             {"detuning_hz", p.frequency_hz - target->frequency_hz},
                             {"a_vib", a}});
        ++n;
        const double d = a - mean;
        mean += d / n;
        m2 += d * (a - mean);
    }
    json report;
    report["line"] = target->branch;
    report["mass_correction"] = mass_correction;
    report["points"] = per_point;
    report["a_vib_mean"] = mean;
    report["a_vib_std"] = n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0;
    report["a_vib_sem"] = n > 1 ? std::sqrt(m2 / (n - 1)) / std::sqrt(double(n)) : 0.0;
    tool.emit_envelope("fit_avib", report);
    return 0;
}

// --- budget ---------------------------------------------------------------

int cmd_budget(Tool& tool, double detuning_hz, double stark_shift_hz) {
    const auto budget = stark::scattering_budget(detuning_hz, stark_shift_hz);
    const auto hfs =
        stark::hyperfine_validity(detuning_hz, tool.config.get_double("hfs_spacing_hz"));
    json report;
    report["detuning_hz"] = detuning_hz;
    report["stark_shift_hz"] = stark_shift_hz;
    report["qnd_cycles"] = budget.qnd_cycles;
    report["bsb_pulses"] = budget.bsb_pulses;
    report["hyperfine_sensitive"] = hfs.hyperfine_sensitive;
    report["hyperfine_note"] = hfs.message;
    tool.emit_envelope("budget", report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QND molecular state-detection and force-spectroscopy toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--out", out_dir, "output directory for data files");
    app.add_option("--set", overrides, "override a configuration key (key=value)")
        ->take_all();
    app.add_option("--seed", seed, "random seed (overrides config)");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "ac-Stark shift vs lattice frequency");
    spectrum->fallthrough();
    double center = 0.0, span = 100e9, step = 0.2e9;
    int twice_m = 1;
    std::vector<std::string> other_specs;
    bool ca_reference = false;
    spectrum->add_option("--center", center, "grid center in Hz (default: first catalog line)");
    spectrum->add_option("--span", span, "grid span in Hz");
    spectrum->add_option("--step", step, "grid step in Hz");
    spectrum->add_option("--twice-m", twice_m, "probe magnetic sublevel as 2m");
    spectrum->add_option("--other", other_specs,
                         "additional probe state LABEL:TWICE_J:TWICE_M (repeatable)");
    spectrum->add_flag("--ca-reference", ca_reference, "emit Ca+ reference shifts");

    // rabi
    auto* rabi = app.add_subcommand("rabi", "sideband Rabi-oscillation curve");
    rabi->fallthrough();
    double alpha_in = 0.0, shift_in = 0.0, t_max = 60e-6;
    int points = 120;
    bool background = false;
    auto* alpha_opt = rabi->add_option("--alpha", alpha_in, "coherent amplitude |alpha|");
    auto* shift_opt =
        rabi->add_option("--stark-shift", shift_in, "molecular ac-Stark shift in Hz");
    rabi->add_option("--t-max", t_max, "maximum probe time in s");
    rabi->add_option("--points", points, "number of curve points");
    rabi->add_flag("--background", background, "emit thermal background and dark curves");

    // discriminate
    auto* discriminate = app.add_subcommand("discriminate", "binomial discrimination report");
    discriminate->fallthrough();
    std::vector<double> targets{0.9, 0.99, 0.995};
    discriminate->add_option("--target", targets, "fidelity targets for min repetitions")
        ->take_all();

    // timetrace
    auto* timetrace = app.add_subcommand("timetrace", "simulated detection time trace");
    timetrace->fallthrough();
    long attempts = 268;
    double jump_probability = 0.0;
    long jump_after_in = -1;
    std::string initial = "bright", source = "config";
    timetrace->add_option("--attempts", attempts, "number of detection attempts");
    timetrace->add_option("--jump-probability", jump_probability,
                          "bright->dark probability per attempt");
    timetrace->add_option("--jump-after", jump_after_in,
                          "force the jump after this attempt (deterministic)");
    timetrace->add_option("--initial", initial, "initial state: bright|dark");
    timetrace->add_option("--source", source, "success probabilities: config|motion");

    // fit
    auto* fit = app.add_subcommand("fit", "least-squares analyses");
    fit->fallthrough();
    fit->require_subcommand(1);
    auto* fit_rabi = fit->add_subcommand("rabi", "three-parameter sideband fit");
    fit_rabi->fallthrough();
    std::string fit_rabi_input;
    fit_rabi->add_option("--input", fit_rabi_input, "trace CSV (t_s,p_excite,n_shots)")
        ->required();
    auto* fit_stark = fit->add_subcommand("stark", "single-parameter Stark-shift fit");
    fit_stark->fallthrough();
    std::string fit_stark_input, calibration_path, calibration_out;
    fit_stark->add_option("--input", fit_stark_input, "trace CSV (t_s,p_excite,n_shots)")
        ->required();
    fit_stark->add_option("--calibration", calibration_path, "calibration model JSON");
    fit_stark->add_option("--calibration-out", calibration_out,
                          "write the calibration model used to this file");
    auto* fit_line = fit->add_subcommand("line", "line-center fit of a force spectrum");
    fit_line->fallthrough();
    std::string fit_line_input;
    double wavemeter_sigma = 50e6;
    fit_line->add_option("--input", fit_line_input,
                         "points CSV (frequency_hz,intensity_w_m2,stark_over_intensity,sigma)")
        ->required();
    fit_line->add_option("--wavemeter-sigma", wavemeter_sigma,
                         "systematic frequency uncertainty added in quadrature (Hz)");
    auto* fit_avib = fit->add_subcommand("avib", "Einstein-A extraction per point");
    fit_avib->fallthrough();
    std::string fit_avib_input, branch;
    int avib_twice_m = 1;
    fit_avib->add_option("--input", fit_avib_input, "points CSV")->required();
    fit_avib->add_option("--line", branch, "target line branch label (default: first line)");
    fit_avib->add_option("--twice-m", avib_twice_m, "probe magnetic sublevel as 2m");

    // budget
    auto* budget = app.add_subcommand("budget", "off-resonant scattering budget");
    budget->fallthrough();
    double budget_detuning = 0.0, budget_shift = 0.0;
    budget->add_option("--detuning", budget_detuning, "lattice detuning in Hz")->required();
    budget->add_option("--stark-shift", budget_shift, "molecular shift in Hz")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Tool tool;
        if (config_path.empty())
            if (const char* env = std::getenv("QNDSPEC_CONFIG")) config_path = env;
        if (!config_path.empty()) {
            tool.config.load_file(config_path);
            tool.note_input("config", config_path);
        }
        tool.config.apply_overrides(overrides);
        if (seed) tool.config.set("seed", std::to_string(*seed));
        tool.out_dir = out_dir;

        if (spectrum->parsed())
            return cmd_spectrum(tool, center, span, step, twice_m, other_specs, ca_reference);
        if (rabi->parsed())
            return cmd_rabi(tool,
                            alpha_opt->count() ? std::optional<double>(alpha_in) : std::nullopt,
                            shift_opt->count() ? std::optional<double>(shift_in) : std::nullopt,
                            t_max, points, background);
        if (discriminate->parsed()) return cmd_discriminate(tool, targets);
        if (timetrace->parsed())
            return cmd_timetrace(tool, attempts, jump_probability,
                                 jump_after_in >= 0 ? std::optional<long>(jump_after_in)
                                                    : std::nullopt,
                                 initial, source);
        if (fit->parsed()) {
            if (fit_rabi->parsed()) return cmd_fit_rabi(tool, fit_rabi_input);
            if (fit_stark->parsed())
                return cmd_fit_stark(tool, fit_stark_input, calibration_path, calibration_out);
            if (fit_line->parsed()) return cmd_fit_line(tool, fit_line_input, wavemeter_sigma);
            if (fit_avib->parsed()) return cmd_fit_avib(tool, fit_avib_input, branch, avib_twice_m);
        }
        if (budget->parsed()) return cmd_budget(tool, budget_detuning, budget_shift);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConvergenceError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
}
