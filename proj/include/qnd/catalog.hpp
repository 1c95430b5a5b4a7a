#pragma once

#include <iosfwd>
#include <string>

#include "qnd/stark.hpp"

namespace qnd::stark {

// Catalog CSV schema (UTF-8, '#' comment lines carry provenance):
//   lower_label,upper_label,frequency_hz,a_vib_per_s,s_rot,twice_j_lower,twice_j_upper,branch
extern const char* const catalog_csv_header;

LineCatalog load_catalog(std::istream& in, const std::string& source_name);
LineCatalog load_catalog_file(const std::string& path);
void save_catalog(std::ostream& out, const LineCatalog& catalog);
void save_catalog_file(const std::string& path, const LineCatalog& catalog);

// N2+ Meinel A2Pi_u(v'=2) <- X2Sigma_g+(v''=0): the R11(1/2) line from the
// rovibronic ground state, the one probed by the state-detection lattice.
LineCatalog builtin_n2_meinel();

// Ca+ dipole lines relevant at lattice wavelengths (397/393 nm from S1/2,
// 850/854/866 nm from the D states, 4f <- 3d UV lines). Reference levels for
// spectrum runs, not a complete polarizability model.
LineCatalog builtin_ca40();

// Query state for the bright (lattice-coupled) molecular level: the lower
// state of the first catalog line, with the given magnetic sublevel.
RoVibronicState bright_state_of(const LineCatalog& catalog, int twice_m = 1);

}
