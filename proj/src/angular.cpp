#include "qnd/angular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qnd/errors.hpp"

namespace qnd {

namespace {

// ln(n!) for n = 0 .. kMaxFact-1. Covers j1+j2+j3+1 for twice-j sums up to
// ~2000, far beyond the 2j = 200 the line catalogs need.
constexpr int kMaxFact = 1024;

const std::array<double, kMaxFact>& ln_factorial_table() {
    static const auto table = [] {
        std::array<double, kMaxFact> t{};
        t[0] = 0.0;
        for (int i = 1; i < kMaxFact; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    return table;
}

double ln_factorial(int n) {
    if (n < 0 || n >= kMaxFact)
        throw DomainError("wigner3j: factorial argument out of range: " + std::to_string(n));
    return ln_factorial_table()[n];
}

int parity_sign(int twice_exponent) {
    // (-1)^(twice_exponent/2); caller guarantees evenness.
    return ((twice_exponent / 2) % 2 + 2) % 2 == 0 ? 1 : -1;
}

}  // namespace

double wigner3j(int twice_j1, int twice_j2, int twice_j3,
                int twice_m1, int twice_m2, int twice_m3) {
    const int tj[3] = {twice_j1, twice_j2, twice_j3};
    const int tm[3] = {twice_m1, twice_m2, twice_m3};
    for (int i = 0; i < 3; ++i) {
        if (tj[i] < 0)
            throw DomainError("wigner3j: negative j in column " + std::to_string(i + 1));
        if (std::abs(tm[i]) > tj[i])
            throw DomainError("wigner3j: |m| > j in column " + std::to_string(i + 1));
        if (((tj[i] + tm[i]) & 1) != 0)
            throw DomainError("wigner3j: j and m of different parity in column " + std::to_string(i + 1));
    }

    if (twice_m1 + twice_m2 + twice_m3 != 0) return 0.0;
    // Triangle rule; the perimeter must also be integral.
    if (((twice_j1 + twice_j2 + twice_j3) & 1) != 0) return 0.0;
    if (twice_j3 < std::abs(twice_j1 - twice_j2) || twice_j3 > twice_j1 + twice_j2) return 0.0;
    // (j1 j2 j3; 0 0 0) vanishes for odd j1+j2+j3.
    if (twice_m1 == 0 && twice_m2 == 0 && twice_m3 == 0 &&
        ((twice_j1 + twice_j2 + twice_j3) / 2) % 2 != 0)
        return 0.0;

    // Racah formula. All factorial arguments below are integers once the
    // parity and triangle checks above have passed.
    const int a1 = (twice_j1 + twice_j2 - twice_j3) / 2;
    const int a2 = (twice_j1 - twice_j2 + twice_j3) / 2;
    const int a3 = (-twice_j1 + twice_j2 + twice_j3) / 2;
    const int perimeter1 = (twice_j1 + twice_j2 + twice_j3) / 2 + 1;

    const double ln_delta = ln_factorial(a1) + ln_factorial(a2) + ln_factorial(a3) -
                            ln_factorial(perimeter1);

    const int j1pm1 = (twice_j1 + twice_m1) / 2, j1mm1 = (twice_j1 - twice_m1) / 2;
    const int j2pm2 = (twice_j2 + twice_m2) / 2, j2mm2 = (twice_j2 - twice_m2) / 2;
    const int j3pm3 = (twice_j3 + twice_m3) / 2, j3mm3 = (twice_j3 - twice_m3) / 2;

    const double ln_prefactor =
        0.5 * (ln_delta + ln_factorial(j1pm1) + ln_factorial(j1mm1) + ln_factorial(j2pm2) +
               ln_factorial(j2mm2) + ln_factorial(j3pm3) + ln_factorial(j3mm3));

    // Sum over k of (-1)^k / [k! (j1+j2-j3-k)! (j1-m1-k)! (j2+m2-k)!
    //                         (j3-j2+m1+k)! (j3-j1-m2+k)!]
    const int b1 = a1;                                  // j1+j2-j3
    const int b2 = j1mm1;                               // j1-m1
    const int b3 = j2pm2;                               // j2+m2
    const int c1 = (twice_j3 - twice_j2 + twice_m1) / 2;  // j3-j2+m1
    const int c2 = (twice_j3 - twice_j1 - twice_m2) / 2;  // j3-j1-m2

    const int k_min = std::max({0, -c1, -c2});
    const int k_max = std::min({b1, b2, b3});
    if (k_min > k_max) return 0.0;

    // Factor the largest term out of the alternating sum.
    std::vector<double> lns(k_max - k_min + 1);
    double ln_max = -HUGE_VAL;
    for (int k = k_min; k <= k_max; ++k) {
        double ln_t = -(ln_factorial(k) + ln_factorial(b1 - k) + ln_factorial(b2 - k) +
                        ln_factorial(b3 - k) + ln_factorial(c1 + k) + ln_factorial(c2 + k));
        lns[k - k_min] = ln_t;
        ln_max = std::max(ln_max, ln_t);
    }
    double sum = 0.0;
    for (int k = k_min; k <= k_max; ++k) {
        double term = std::exp(lns[k - k_min] - ln_max);
        sum += (k % 2 == 0) ? term : -term;
    }

    const int phase = parity_sign(twice_j1 - twice_j2 - twice_m3);
    return phase * sum * std::exp(ln_prefactor + ln_max);
}

}
