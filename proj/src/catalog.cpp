#include "qnd/catalog.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "qnd/constants.hpp"
#include "qnd/csv.hpp"
#include "qnd/errors.hpp"

namespace qnd::stark {

const char* const catalog_csv_header =
    "lower_label,upper_label,frequency_hz,a_vib_per_s,s_rot,twice_j_lower,twice_j_upper,branch";

namespace {

std::vector<std::string> header_fields() {
    std::istringstream ss(catalog_csv_header);
    std::vector<std::string> out;
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

RoVibronicState stub_state(const std::string& label, int twice_j) {
    RoVibronicState s;
    s.label = label;
    s.twice_j = twice_j;
    s.twice_m = twice_j % 2;  // any valid sublevel; queries carry their own m
    return s;
}

// Transition frequency from term energies in cm^-1.
double cm1_to_hz(double upper_cm1, double lower_cm1) {
    return (upper_cm1 - lower_cm1) * 100.0 * constants::speed_of_light;
}

}  // namespace

LineCatalog load_catalog(std::istream& in, const std::string& source_name) {
    LineCatalog catalog;
    catalog.name = source_name;
    for (const auto& row : csv::read_rows(in, source_name, header_fields())) {
        if (row.fields.size() != 8)
            throw ParseError(source_name, row.line,
                             "expected 8 fields, got " + std::to_string(row.fields.size()));
        TransitionLine line;
        line.lower = stub_state(row.fields[0], static_cast<int>(csv::parse_long(row, 5, source_name)));
        line.upper = stub_state(row.fields[1], static_cast<int>(csv::parse_long(row, 6, source_name)));
        line.frequency_hz = csv::parse_double(row, 2, source_name);
        line.a_vib = csv::parse_double(row, 3, source_name);
        line.s_rot = csv::parse_double(row, 4, source_name);
        line.branch = row.fields[7];
        try {
            line.validate();
        } catch (const DomainError& err) {
            throw ParseError(source_name, row.line, err.what());
        }
        catalog.lines.push_back(std::move(line));
    }
    catalog.validate();
    return catalog;
}

LineCatalog load_catalog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open catalog file");
    return load_catalog(in, path);
}

void save_catalog(std::ostream& out, const LineCatalog& catalog) {
    out << "# " << catalog.name << "\n";
    std::istringstream note(catalog.source_note);
    std::string note_line;
    while (std::getline(note, note_line)) out << "# " << note_line << "\n";
    out << catalog_csv_header << "\n";
    for (const auto& line : catalog.lines) {
        out << csv::join_line({line.lower.label, line.upper.label,
                               csv::format_double(line.frequency_hz),
                               csv::format_double(line.a_vib), csv::format_double(line.s_rot),
                               std::to_string(line.lower.twice_j),
                               std::to_string(line.upper.twice_j), line.branch})
            << "\n";
    }
}

void save_catalog_file(const std::string& path, const LineCatalog& catalog) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    save_catalog(out, catalog);
}

LineCatalog builtin_n2_meinel() {
    LineCatalog catalog;
    catalog.name = "N2+ Meinel A2Pi_u(v'=2) <- X2Sigma_g+(v''=0), R11(1/2)";
    catalog.source_note =
        "Line center 380.7011 THz (~787.47 nm). A_vib = 4.03e4 s^-1 including the\n"
        "Franck-Condon factor. S_rot = 1/2 for R11(1/2) from N''=0 in the pure\n"
        "Hund's case (a) limit of the inverted A state (F1 = 2Pi_3/2), normalized\n"
        "so the branch factors from a given lower level sum to 1. Only S_rot*A_vib\n"
        "products are observable in shift data; the convention travels with this\n"
        "file. Lines from rotationally excited lower states are not tabulated.";

    TransitionLine r11;
    r11.lower.label = "N2+_X_v0_N0_J1/2";
    r11.lower.electronic_term = "X2Sigma_g+";
    r11.lower.v = 0;
    r11.lower.n_rot = 0;
    r11.lower.twice_j = 1;
    r11.lower.twice_m = 1;
    r11.upper.label = "N2+_A_v2_J3/2";
    r11.upper.electronic_term = "A2Pi_u";
    r11.upper.v = 2;
    r11.upper.n_rot = 1;
    r11.upper.twice_j = 3;
    r11.upper.twice_m = 1;
    r11.frequency_hz = 380.7011e12;
    r11.a_vib = 4.03e4;
    r11.s_rot = 0.5;
    r11.branch = "R11(1/2)";
    catalog.lines.push_back(r11);
    catalog.validate();
    return catalog;
}

LineCatalog builtin_ca40() {
    LineCatalog catalog;
    catalog.name = "Ca+ reference lines (40Ca+)";
    catalog.source_note =
        "Principal dipole lines from NIST ASD level energies; A-values NIST ASD\n"
        "where listed, hydrogenic estimate for the 4f <- 3d pair. Atomic lines:\n"
        "S_rot = 1. Intended for reference-level checks of lattice Stark shifts;\n"
        "core polarizability and higher np/nf states are not included, so D-state\n"
        "shifts carry only the leading valence contributions.";

    struct Entry {
        const char* lower;
        const char* upper;
        double lower_cm1, upper_cm1;
        double a_vib;
        int twice_j_lower, twice_j_upper;
        const char* branch;
        int lower_nrot, upper_nrot;
        const char* lower_term;
        const char* upper_term;
    };
    // Level energies in cm^-1: 4s 0, 3d D3/2 13650.19, 3d D5/2 13710.88,
    // 4p P1/2 25191.51, 4p P3/2 25414.40, 4f F5/2 68056.91, 4f F7/2 68056.63.
    const Entry entries[] = {
        {"Ca+_4s_S1/2", "Ca+_4p_P1/2", 0.0, 25191.51, 1.40e8, 1, 1, "397nm", 0, 1, "2S", "2P"},
        {"Ca+_4s_S1/2", "Ca+_4p_P3/2", 0.0, 25414.40, 1.47e8, 1, 3, "393nm", 0, 1, "2S", "2P"},
        {"Ca+_3d_D3/2", "Ca+_4p_P1/2", 13650.19, 25191.51, 1.06e7, 3, 1, "866nm", 2, 1, "2D", "2P"},
        {"Ca+_3d_D3/2", "Ca+_4p_P3/2", 13650.19, 25414.40, 1.11e6, 3, 3, "850nm", 2, 1, "2D", "2P"},
        {"Ca+_3d_D5/2", "Ca+_4p_P3/2", 13710.88, 25414.40, 9.90e6, 5, 3, "854nm", 2, 1, "2D", "2P"},
        {"Ca+_3d_D3/2", "Ca+_4f_F5/2", 13650.19, 68056.91, 1.32e8, 3, 5, "184nm", 2, 3, "2D", "2F"},
        {"Ca+_3d_D5/2", "Ca+_4f_F5/2", 13710.88, 68056.91, 9.50e6, 5, 5, "184nm", 2, 3, "2D", "2F"},
        {"Ca+_3d_D5/2", "Ca+_4f_F7/2", 13710.88, 68056.63, 1.40e8, 5, 7, "184nm", 2, 3, "2D", "2F"},
    };
    for (const auto& e : entries) {
        TransitionLine line;
        line.lower = stub_state(e.lower, e.twice_j_lower);
        line.lower.electronic_term = e.lower_term;
        line.lower.n_rot = e.lower_nrot;
        line.upper = stub_state(e.upper, e.twice_j_upper);
        line.upper.electronic_term = e.upper_term;
        line.upper.n_rot = e.upper_nrot;
        line.frequency_hz = cm1_to_hz(e.upper_cm1, e.lower_cm1);
        line.a_vib = e.a_vib;
        line.s_rot = 1.0;
        line.branch = e.branch;
        catalog.lines.push_back(std::move(line));
    }
    catalog.validate();
    return catalog;
}

RoVibronicState bright_state_of(const LineCatalog& catalog, int twice_m) {
    catalog.validate();
    RoVibronicState state = catalog.lines.front().lower;
    state.twice_m = twice_m;
    state.validate();
    return state;
}

}
