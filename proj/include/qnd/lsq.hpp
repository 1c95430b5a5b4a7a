#pragma once

#include <functional>
#include <vector>

namespace qnd::lsq {

// y(x; params) for one abscissa value.
using ModelFn = std::function<double(const std::vector<double>& params, double x)>;

struct Options {
    int max_iterations = 200;
    double rel_step_tol = 1e-10;  // converged when the scaled step falls below this
    double lambda0 = 1e-3;
    // Optional box constraints and characteristic parameter scales (used for
    // finite-difference steps and the convergence metric). Empty = none/unit.
    std::vector<double> lower, upper, scale;
    // Step veto: candidate parameter vectors for which this returns false are
    // rejected (used to keep pole positions away from data points).
    std::function<bool(const std::vector<double>&)> step_ok;
};

struct Result {
    std::vector<double> params;
    std::vector<std::vector<double>> covariance;  // (J^T W J)^-1 at the optimum
    std::vector<double> sigma;                    // sqrt of covariance diagonal
    double chi2 = 0;
    int iterations = 0;
    bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt) weighted least squares:
// minimizes sum_i w_i (y_i - f(p, x_i))^2 with a finite-difference Jacobian.
// Weights are inverse variances, so the covariance needs no chi2 rescaling.
Result fit(const ModelFn& model, const std::vector<double>& x, const std::vector<double>& y,
           const std::vector<double>& weights, std::vector<double> initial,
           const Options& options = {});

// Runs fit() from every start and keeps the best converged result (best chi2
// overall if none converged). Throws ConvergenceError when every start fails
// to produce a finite fit.
Result fit_multistart(const ModelFn& model, const std::vector<double>& x,
                      const std::vector<double>& y, const std::vector<double>& weights,
                      const std::vector<std::vector<double>>& starts,
                      const Options& options = {});

// Ordinary polynomial least squares, coefficients in ascending-degree order.
std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y,
                            int degree);
double polyval(const std::vector<double>& coeffs, double x);

}
