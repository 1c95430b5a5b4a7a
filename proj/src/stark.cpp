#include "qnd/stark.hpp"

#include <cmath>
#include <cstdlib>
#include <set>
#include <tuple>

#include "qnd/angular.hpp"
#include "qnd/constants.hpp"
#include "qnd/errors.hpp"
#include "qnd/parallel.hpp"

namespace qnd::stark {

namespace {

int term_multiplicity(const std::string& term) {
    // Leading digit of the term symbol, e.g. "X2Sigma_g+" -> 2. 0 if absent.
    for (char c : term)
        if (c >= '1' && c <= '9') return c - '0';
    return 0;
}

}  // namespace

void RoVibronicState::validate() const {
    if (v < 0) throw DomainError("state '" + label + "': v < 0");
    if (n_rot < 0) throw DomainError("state '" + label + "': N < 0");
    if (twice_j <= 0) throw DomainError("state '" + label + "': J must be positive");
    if (std::abs(twice_m) > twice_j) throw DomainError("state '" + label + "': |m| > J");
    if (((twice_j + twice_m) & 1) != 0)
        throw DomainError("state '" + label + "': J and m of different parity");
    if (term_multiplicity(electronic_term) == 2) {
        // Doublet: J = N +- 1/2.
        if (twice_j != 2 * n_rot + 1 && twice_j != 2 * n_rot - 1)
            throw DomainError("state '" + label + "': doublet J must be N +- 1/2");
    }
}

void TransitionLine::validate() const {
    lower.validate();
    upper.validate();
    if (frequency_hz <= 0) throw DomainError("line " + branch + ": frequency must be positive");
    if (a_vib < 0) throw DomainError("line " + branch + ": A_vib < 0");
    if (s_rot < 0 || s_rot > 1) throw DomainError("line " + branch + ": S_rot outside [0, 1]");
    if (std::abs(upper.twice_j - lower.twice_j) > 2)
        throw DomainError("line " + branch + ": |dJ| > 1 is not dipole allowed");
}

void LineCatalog::validate() const {
    if (lines.empty()) throw DomainError("catalog '" + name + "' is empty");
    std::set<std::tuple<std::string, std::string, double>> seen;
    for (const auto& line : lines) {
        line.validate();
        if (!seen.insert({line.lower.label, line.upper.label, line.frequency_hz}).second)
            throw DomainError("catalog '" + name + "': duplicate line " + line.lower.label +
                              " -> " + line.upper.label);
    }
}

void LaserField::validate() const {
    if (intensity_w_m2 < 0) throw DomainError("laser intensity < 0");
    if (frequency_hz <= 0) throw DomainError("laser frequency must be positive");
}

double stark_shift_per_avib(const TransitionLine& line, const RoVibronicState& state,
                            const LaserField& laser, const StarkOptions& options) {
    if (std::abs(laser.frequency_hz - line.frequency_hz) < options.pole_guard_hz)
        throw PoleError("laser within " + std::to_string(options.pole_guard_hz) +
                        " Hz of line " + line.branch + " at " +
                        std::to_string(line.frequency_hz) + " Hz");
    // pi light shares m; no contribution if the upper level has no such m.
    if (std::abs(state.twice_m) > line.upper.twice_j) return 0.0;

    using constants::planck;
    using constants::speed_of_light;
    using constants::two_pi;

    const double w_ij = two_pi * line.frequency_hz;
    const double w = two_pi * laser.frequency_hz;
    const double three_j = wigner3j(line.upper.twice_j, 2, state.twice_j,
                                    -state.twice_m, 0, state.twice_m);
    const double angular = (line.upper.twice_j + 1.0) * three_j * three_j;
    const double kernel = 3.0 * std::numbers::pi * speed_of_light * speed_of_light /
                          (w_ij * w_ij * (w_ij * w_ij - w * w));
    return -kernel * laser.intensity_w_m2 * line.s_rot * angular / planck;
}

double ac_stark_shift(const RoVibronicState& state, const LaserField& laser,
                      const LineCatalog& catalog, const StarkOptions& options) {
    state.validate();
    laser.validate();
    catalog.validate();
    double shift = 0.0;
    for (const auto& line : catalog.lines) {
        if (line.lower.label != state.label) continue;
        if (line.lower.twice_j != state.twice_j)
            throw DomainError("catalog line " + line.branch + " lists lower J different from state '" +
                              state.label + "'");
        shift += line.a_vib * stark_shift_per_avib(line, state, laser, options);
    }
    return shift;
}

std::vector<SpectrumRow> stark_spectrum(const RoVibronicState& bright_state,
                                        const std::vector<RoVibronicState>& other_states,
                                        double intensity_w_m2,
                                        const std::vector<double>& frequency_grid_hz,
                                        const LineCatalog& catalog,
                                        const StarkOptions& options) {
    catalog.validate();
    std::vector<SpectrumRow> rows(frequency_grid_hz.size());
    parallel_for(frequency_grid_hz.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            LaserField laser{intensity_w_m2, frequency_grid_hz[i]};
            SpectrumRow& row = rows[i];
            row.frequency_hz = frequency_grid_hz[i];
            try {
                row.bright_shift_hz = ac_stark_shift(bright_state, laser, catalog, options);
            } catch (const PoleError&) {
                row.bright_shift_hz = std::nullopt;
            }
            double max_other = 0.0;
            bool masked = false;
            for (const auto& other : other_states) {
                try {
                    max_other = std::max(max_other,
                                         std::abs(ac_stark_shift(other, laser, catalog, options)));
                } catch (const PoleError&) {
                    masked = true;
                    break;
                }
            }
            row.max_other_shift_hz = masked ? std::nullopt : std::optional<double>(max_other);
        }
    });
    return rows;
}

ScatteringBudget scattering_budget(double detuning_hz, double stark_shift_hz) {
    if (detuning_hz == 0) throw DomainError("scattering_budget: zero detuning");
    if (stark_shift_hz <= 0) throw DomainError("scattering_budget: shift must be positive");
    const double cycles = 1000.0 * (std::abs(detuning_hz) / 10e9) * (10e3 / stark_shift_hz);
    return {cycles, 20.0 * cycles};
}

HyperfineCheck hyperfine_validity(double detuning_hz, double hfs_spacing_hz) {
    HyperfineCheck check;
    check.detuning_hz = detuning_hz;
    check.hfs_spacing_hz = hfs_spacing_hz;
    check.hyperfine_sensitive = std::abs(detuning_hz) <= 10.0 * hfs_spacing_hz;
    check.message = check.hyperfine_sensitive
                        ? "detuning within 10x the assumed hyperfine spacing; the single-line "
                          "shift model is unreliable here"
                        : "detuning well outside the hyperfine manifold";
    return check;
}

}
