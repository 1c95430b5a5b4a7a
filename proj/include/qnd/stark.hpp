#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qnd::stark {

// Rovibronic level of a diatomic (or an atomic level with v = N = 0).
// Half-integer angular momenta are stored as twice their value so parity
// checks stay exact.
struct RoVibronicState {
    std::string label;            // identity used for catalog matching
    std::string electronic_term;  // e.g. "X2Sigma_g+"
    int v = 0;                    // vibrational quantum number
    int n_rot = 0;                // rotational quantum number N
    int twice_j = 1;              // 2J, J excludes nuclear spin
    int twice_m = 1;              // 2m

    // Throws DomainError on |m| > J, parity mismatch, or (for doublet terms)
    // J outside {N-1/2, N+1/2}.
    void validate() const;
};

// One dipole-allowed transition. a_vib is the vibronic Einstein-A coefficient
// (Franck-Condon factor included); s_rot the normalized Hoenl-London factor.
struct TransitionLine {
    RoVibronicState lower;
    RoVibronicState upper;
    double frequency_hz = 0;  // transition frequency omega_ij / 2pi
    double a_vib = 0;         // s^-1
    double s_rot = 1;         // in [0, 1]
    std::string branch;       // e.g. "R11(1/2)"

    void validate() const;
};

struct LineCatalog {
    std::string name;
    std::string source_note;
    std::vector<TransitionLine> lines;

    // Throws DomainError if empty or if two lines share (lower label, upper
    // label, frequency); validates every line.
    void validate() const;
};

enum class Polarization { pi };

struct LaserField {
    double intensity_w_m2 = 0;  // single-beam intensity
    double frequency_hz = 0;
    Polarization polarization = Polarization::pi;

    void validate() const;
};

struct StarkOptions {
    double pole_guard_hz = 1e3;  // reject evaluations this close to a line
};

// Second-order ac-Stark shift of `state` in Hz (energy shift over h), summed
// over all catalog lines whose lower state matches `state`, without the
// rotating-wave approximation:
//
//   dE = -sum_j 3 pi c^2 / (w_ij^2 (w_ij^2 - w^2)) * I * S_rot * A_vib
//        * (2J_j + 1) * wigner3j(J_j, 1, J_i; -m, 0, m)^2
//
// pi polarization: m is shared between the coupled states; lines whose upper
// J cannot host the probe m contribute zero. Red detuning from a single
// dominant line gives a negative shift. Throws PoleError inside the guard
// band of a contributing line and DomainError for an empty catalog.
double ac_stark_shift(const RoVibronicState& state, const LaserField& laser,
                      const LineCatalog& catalog, const StarkOptions& options = {});

// Contribution of one catalog line to the shift of `state`, per unit A_vib
// (Hz per s^-1), sign included. ac_stark_shift is exactly
// sum(line.a_vib * stark_shift_per_avib(line, ...)), which keeps the
// Einstein-A extraction in the fitting module an exact linear inversion.
double stark_shift_per_avib(const TransitionLine& line, const RoVibronicState& state,
                            const LaserField& laser, const StarkOptions& options = {});

struct SpectrumRow {
    double frequency_hz = 0;
    std::optional<double> bright_shift_hz;  // empty = masked (pole guard)
    std::optional<double> max_other_shift_hz;
};

// Shift of the bright state and max |shift| over `other_states` on a
// frequency grid. Grid points inside a pole-guard band are emitted as masked
// values, not errors. An empty `other_states` list yields 0 in that column.
std::vector<SpectrumRow> stark_spectrum(const RoVibronicState& bright_state,
                                        const std::vector<RoVibronicState>& other_states,
                                        double intensity_w_m2,
                                        const std::vector<double>& frequency_grid_hz,
                                        const LineCatalog& catalog,
                                        const StarkOptions& options = {});

struct ScatteringBudget {
    double qnd_cycles = 0;
    double bsb_pulses = 0;
};

// Expected number of QND state determinations before an off-resonant photon
// scatter destroys the state. One-anchor scaling law,
// cycles = 1000 * (|detuning| / 10 GHz) * (10 kHz / shift), pulses = 20x.
ScatteringBudget scattering_budget(double detuning_hz, double stark_shift_hz);

struct HyperfineCheck {
    bool hyperfine_sensitive = false;
    double detuning_hz = 0;
    double hfs_spacing_hz = 0;
    std::string message;
};

// Flags |detuning| <= 10 * hfs_spacing (boundary inclusive) as sensitive to
// unresolved hyperfine structure.
HyperfineCheck hyperfine_validity(double detuning_hz, double hfs_spacing_hz = 300e6);

}
