#include "qnd/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnd/errors.hpp"

namespace qnd::lsq {

namespace {

// Gauss-Jordan solve of A x = b with partial pivoting; A is overwritten.
// Dimensions here are tiny (<= 4).
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) throw ConvergenceError("lsq: singular normal equations");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

std::vector<std::vector<double>> invert(const std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n));
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<double> e(n, 0.0);
        e[col] = 1.0;
        auto x = solve(a, e);
        for (std::size_t r = 0; r < n; ++r) inv[r][col] = x[r];
    }
    return inv;
}

double chi_squared(const ModelFn& model, const std::vector<double>& x,
                   const std::vector<double>& y, const std::vector<double>& w,
                   const std::vector<double>& p) {
    double chi2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - model(p, x[i]);
        chi2 += w[i] * r * r;
    }
    return chi2;
}

void clamp_params(std::vector<double>& p, const Options& opt) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!opt.lower.empty()) p[i] = std::max(p[i], opt.lower[i]);
        if (!opt.upper.empty()) p[i] = std::min(p[i], opt.upper[i]);
    }
}

}  // namespace

Result fit(const ModelFn& model, const std::vector<double>& x, const std::vector<double>& y,
           const std::vector<double>& weights, std::vector<double> initial,
           const Options& options) {
    if (x.size() != y.size() || x.size() != weights.size())
        throw DomainError("lsq::fit: mismatched data lengths");
    const std::size_t n_par = initial.size();
    if (x.size() < n_par) throw DomainError("lsq::fit: fewer points than parameters");

    std::vector<double> scale = options.scale;
    if (scale.empty()) scale.assign(n_par, 1.0);

    clamp_params(initial, options);
    Result best;
    best.params = initial;
    best.chi2 = chi_squared(model, x, y, weights, initial);

    double lambda = options.lambda0;
    std::vector<std::vector<double>> jt_w_j(n_par, std::vector<double>(n_par));
    std::vector<double> jt_w_r(n_par);
    std::vector<std::vector<double>> jac(x.size(), std::vector<double>(n_par));

    auto fill_normal_equations = [&](const std::vector<double>& p) {
        // Central-difference Jacobian.
        for (std::size_t j = 0; j < n_par; ++j) {
            const double h = 1e-6 * std::max(std::abs(p[j]), scale[j]);
            auto pp = p, pm = p;
            pp[j] += h;
            pm[j] -= h;
            clamp_params(pp, options);
            clamp_params(pm, options);
            const double dp = pp[j] - pm[j];
            for (std::size_t i = 0; i < x.size(); ++i)
                jac[i][j] = dp != 0.0 ? (model(pp, x[i]) - model(pm, x[i])) / dp : 0.0;
        }
        for (std::size_t a = 0; a < n_par; ++a) {
            jt_w_r[a] = 0.0;
            for (std::size_t b = 0; b <= a; ++b) jt_w_j[a][b] = 0.0;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - model(best.params, x[i]);
            for (std::size_t a = 0; a < n_par; ++a) {
                jt_w_r[a] += weights[i] * jac[i][a] * r;
                for (std::size_t b = 0; b <= a; ++b)
                    jt_w_j[a][b] += weights[i] * jac[i][a] * jac[i][b];
            }
        }
        for (std::size_t a = 0; a < n_par; ++a)
            for (std::size_t b = a + 1; b < n_par; ++b) jt_w_j[a][b] = jt_w_j[b][a];
    };

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        best.iterations = iter + 1;
        fill_normal_equations(best.params);

        bool accepted = false;
        for (int damp = 0; damp < 12 && !accepted; ++damp) {
            auto a = jt_w_j;
            for (std::size_t d = 0; d < n_par; ++d)
                a[d][d] += lambda * std::max(jt_w_j[d][d], 1e-300);
            std::vector<double> step;
            try {
                step = solve(a, jt_w_r);
            } catch (const ConvergenceError&) {
                lambda *= 8.0;
                continue;
            }
            auto candidate = best.params;
            for (std::size_t d = 0; d < n_par; ++d) candidate[d] += step[d];
            clamp_params(candidate, options);
            if (options.step_ok && !options.step_ok(candidate)) {
                lambda *= 8.0;
                continue;
            }
            const double chi2 = chi_squared(model, x, y, weights, candidate);
            if (std::isfinite(chi2) && chi2 <= best.chi2 * (1.0 + 1e-14)) {
                double rel_step = 0.0;
                for (std::size_t d = 0; d < n_par; ++d)
                    rel_step = std::max(rel_step,
                                        std::abs(candidate[d] - best.params[d]) / scale[d]);
                const bool chi2_stalled = best.chi2 - chi2 <= 1e-14 * (best.chi2 + 1e-300);
                best.params = candidate;
                best.chi2 = chi2;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_step < options.rel_step_tol || chi2_stalled) {
                    best.converged = true;
                }
            } else {
                lambda *= 8.0;
            }
        }
        if (!accepted) {
            // No downhill direction left at heavy damping: treat as converged
            // to the local optimum.
            best.converged = true;
        }
        if (best.converged) break;
    }

    fill_normal_equations(best.params);
    // Parameters the data do not constrain at the optimum (a vanished
    // Jacobian column: a symmetry point or a pinned bound) are excluded from
    // the inversion and reported with infinite sigma instead of poisoning
    // the block of identifiable parameters.
    best.covariance.assign(n_par, std::vector<double>(n_par, 0.0));
    best.sigma.assign(n_par, HUGE_VAL);
    std::vector<std::size_t> active;
    double max_diag = 0.0;
    for (std::size_t d = 0; d < n_par; ++d)
        max_diag = std::max(max_diag, jt_w_j[d][d] * scale[d] * scale[d]);
    for (std::size_t d = 0; d < n_par; ++d) {
        if (jt_w_j[d][d] * scale[d] * scale[d] > 1e-12 * max_diag)
            active.push_back(d);
        else
            best.covariance[d][d] = HUGE_VAL;
    }
    if (!active.empty()) {
        std::vector<std::vector<double>> reduced(active.size(),
                                                 std::vector<double>(active.size()));
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = 0; b < active.size(); ++b)
                reduced[a][b] = jt_w_j[active[a]][active[b]];
        try {
            const auto inv = invert(reduced);
            for (std::size_t a = 0; a < active.size(); ++a) {
                for (std::size_t b = 0; b < active.size(); ++b)
                    best.covariance[active[a]][active[b]] = inv[a][b];
                best.sigma[active[a]] = std::sqrt(std::max(0.0, inv[a][a]));
            }
        } catch (const ConvergenceError&) {
            for (std::size_t a : active) {
                best.covariance[a][a] = HUGE_VAL;
                best.sigma[a] = HUGE_VAL;
            }
        }
    }
    return best;
}

Result fit_multistart(const ModelFn& model, const std::vector<double>& x,
                      const std::vector<double>& y, const std::vector<double>& weights,
                      const std::vector<std::vector<double>>& starts, const Options& options) {
    if (starts.empty()) throw DomainError("lsq::fit_multistart: no starting points");
    Result best;
    bool have = false;
    for (const auto& start : starts) {
        Result r;
        try {
            r = fit(model, x, y, weights, start, options);
        } catch (const std::exception&) {
            continue;
        }
        if (!std::isfinite(r.chi2)) continue;
        if (!have || std::make_pair(!r.converged, r.chi2) < std::make_pair(!best.converged, best.chi2)) {
            best = std::move(r);
            have = true;
        }
    }
    if (!have) throw ConvergenceError("lsq::fit_multistart: no start produced a finite fit");
    return best;
}

std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y,
                            int degree) {
    if (degree < 0) throw DomainError("polyfit: negative degree");
    const std::size_t n_par = degree + 1;
    if (x.size() != y.size() || x.size() < n_par)
        throw DomainError("polyfit: need at least degree+1 points");
    std::vector<std::vector<double>> ata(n_par, std::vector<double>(n_par, 0.0));
    std::vector<double> atb(n_par, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> pow(n_par, 1.0);
        for (std::size_t d = 1; d < n_par; ++d) pow[d] = pow[d - 1] * x[i];
        for (std::size_t a = 0; a < n_par; ++a) {
            atb[a] += pow[a] * y[i];
            for (std::size_t b = 0; b < n_par; ++b) ata[a][b] += pow[a] * pow[b];
        }
    }
    return solve(std::move(ata), std::move(atb));
}

double polyval(const std::vector<double>& coeffs, double x) {
    double v = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
    return v;
}

}
