#pragma once

namespace qnd {

// Wigner 3j symbol
//
//   ( j1 j2 j3 )
//   ( m1 m2 m3 )
//
// All arguments are passed as twice their value so half-integer momenta stay
// exact integers (J = 1/2 -> twice_j = 1). Evaluated with the Racah single-sum
// formula over a cached log-factorial table.
//
// Returns exactly 0 when a selection rule fails (m1+m2+m3 != 0, triangle rule,
// or the all-m-zero / odd-sum symmetry). Throws DomainError when an argument
// is not a valid (j, m) pair: j < 0, |m| > j, or twice_j and twice_m of
// different parity.
double wigner3j(int twice_j1, int twice_j2, int twice_j3,
                int twice_m1, int twice_m2, int twice_m3);

}
