#pragma once

#include <functional>

#include <Eigen/Core>

namespace extdef {

struct NelderMeadOptions {
    int max_evals = 4000;   // per run, including restarts
    double xtol = 1e-7;     // simplex diameter tolerance
    double ftol = 1e-10;    // function spread tolerance, relative to |f_best| + 1
    int restarts = 2;       // simplex re-initializations around the incumbent
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evals = 0;
    bool converged = false;
};

/// Derivative-free simplex minimization with the dimension-adaptive
/// expansion/contraction coefficients of Gao & Han. The objective may
/// return +inf to reject a point. The result is never worse than f(x0).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                             const NelderMeadOptions& opts = {});

}  // namespace extdef
