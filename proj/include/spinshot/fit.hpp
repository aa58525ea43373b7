#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spinshot/types.hpp"

namespace spinshot::fit {

/// Model value at x for the parameter vector theta (linear scale).
using Model = std::function<double(double x, const double* theta)>;

struct ParamSpec {
    std::string name;
    double init = 1.0;
    bool log_scale = false;  // optimize log10(theta); keeps the parameter positive
    // Optional multi-start range (linear scale). Log-scale parameters are
    // seeded on a grid of 8 starts per decade across [grid_lo, grid_hi].
    double grid_lo = 0.0;
    double grid_hi = 0.0;

    bool has_grid() const { return grid_hi > grid_lo && grid_lo > 0.0; }
};

struct Data {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;  // 1/sigma^2 weights; empty means uniform
};

struct Options {
    int max_iterations = 200;
    double rel_step_tol = 1e-10;
    int bootstrap = 0;  // >0: residual-bootstrap uncertainties with this many refits
    std::uint64_t bootstrap_seed = 1;
};

/// Weighted nonlinear least squares: multi-start over the requested log grids,
/// then Levenberg-Marquardt refinement from the best start. Uncertainties come
/// from the Jacobian covariance at the optimum (or the bootstrap when asked).
FitResult fit_curve(const Model& model, const Data& data, std::vector<ParamSpec> params,
                    const Options& options = {});

}  // namespace spinshot::fit
