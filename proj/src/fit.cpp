#include "spinshot/fit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spinshot/rng.hpp"

namespace spinshot::fit {

namespace {

struct Workspace {
    const Model& model;
    const Data& data;
    const std::vector<ParamSpec>& specs;

    double theta_of(double u, std::size_t j) const {
        return specs[j].log_scale ? std::pow(10.0, u) : u;
    }

    std::vector<double> unpack(const Eigen::VectorXd& u) const {
        std::vector<double> theta(specs.size());
        for (std::size_t j = 0; j < specs.size(); ++j) theta[j] = theta_of(u[j], j);
        return theta;
    }

    double weight(std::size_t i) const { return data.w.empty() ? 1.0 : data.w[i]; }

    double rss(const Eigen::VectorXd& u, const std::vector<double>* y_override = nullptr) const {
        const auto theta = unpack(u);
        double sum = 0.0;
        for (std::size_t i = 0; i < data.x.size(); ++i) {
            const double yi = y_override ? (*y_override)[i] : data.y[i];
            const double r = yi - model(data.x[i], theta.data());
            sum += weight(i) * r * r;
        }
        return std::isfinite(sum) ? sum : std::numeric_limits<double>::max();
    }

    void residuals(const Eigen::VectorXd& u, Eigen::VectorXd& r,
                   const std::vector<double>* y_override = nullptr) const {
        const auto theta = unpack(u);
        for (std::size_t i = 0; i < data.x.size(); ++i) {
            const double yi = y_override ? (*y_override)[i] : data.y[i];
            r[i] = std::sqrt(weight(i)) * (yi - model(data.x[i], theta.data()));
        }
    }

    void jacobian(const Eigen::VectorXd& u, Eigen::MatrixXd& jac,
                  const std::vector<double>* y_override = nullptr) const {
        Eigen::VectorXd up = u, rm(data.x.size()), rp(data.x.size());
        for (std::size_t j = 0; j < specs.size(); ++j) {
            const double du = std::max(1e-7, 1e-7 * std::fabs(u[j]));
            up = u;
            up[j] = u[j] + du;
            residuals(up, rp, y_override);
            up[j] = u[j] - du;
            residuals(up, rm, y_override);
            jac.col(j) = (rp - rm) / (2.0 * du);
        }
    }
};

struct LmOutcome {
    Eigen::VectorXd u;
    double rss = 0.0;
    int iterations = 0;
    bool converged = false;
};

LmOutcome levenberg_marquardt(const Workspace& ws, Eigen::VectorXd u, const Options& options,
                              const std::vector<double>* y_override = nullptr) {
    const std::size_t n = ws.data.x.size();
    const std::size_t p = ws.specs.size();
    Eigen::VectorXd r(n);
    Eigen::MatrixXd jac(n, p);
    double lambda = 1e-3;
    double rss = ws.rss(u, y_override);

    LmOutcome out;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        out.iterations = iter + 1;
        ws.residuals(u, r, y_override);
        ws.jacobian(u, jac, y_override);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = -jac.transpose() * r;

        bool stepped = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (std::size_t j = 0; j < p; ++j)
                damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
            const Eigen::VectorXd delta = damped.ldlt().solve(jtr);
            if (!delta.allFinite()) {
                lambda *= 5.0;
                continue;
            }
            const Eigen::VectorXd u_try = u + delta;
            const double rss_try = ws.rss(u_try, y_override);
            if (rss_try <= rss) {
                double step = 0.0;
                for (std::size_t j = 0; j < p; ++j)
                    step = std::max(step, std::fabs(delta[j]) / std::max(1.0, std::fabs(u[j])));
                const double drop = rss - rss_try;
                u = u_try;
                rss = rss_try;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (step < options.rel_step_tol || drop <= 1e-14 * std::max(rss, 1e-300)) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 5.0;
        }
        if (!stepped) {
            out.converged = true;  // no downhill step left at any damping
            break;
        }
        if (out.converged) break;
    }
    out.u = u;
    out.rss = rss;
    return out;
}

}  // namespace

FitResult fit_curve(const Model& model, const Data& data, std::vector<ParamSpec> specs,
                    const Options& options) {
    if (data.x.size() != data.y.size() || (!data.w.empty() && data.w.size() != data.x.size()))
        throw std::invalid_argument("fit_curve: inconsistent data sizes");
    if (data.x.size() < specs.size()) throw std::invalid_argument("fit_curve: underdetermined fit");
    const Workspace ws{model, data, specs};
    const std::size_t p = specs.size();

    // Multi-start: 8 log-spaced starts per decade for each gridded parameter.
    std::vector<std::vector<double>> grids(p);
    for (std::size_t j = 0; j < p; ++j) {
        auto& spec = specs[j];
        if (spec.has_grid() && spec.log_scale) {
            const double lo = std::log10(spec.grid_lo);
            const double hi = std::log10(spec.grid_hi);
            const int n_starts = std::max(2, static_cast<int>(std::ceil((hi - lo) * 8.0)) + 1);
            for (int k = 0; k < n_starts; ++k)
                grids[j].push_back(lo + (hi - lo) * k / (n_starts - 1));
        } else {
            grids[j].push_back(spec.log_scale ? std::log10(spec.init) : spec.init);
        }
    }

    Eigen::VectorXd best_u(p);
    double best_rss = std::numeric_limits<double>::max();
    std::vector<std::size_t> index(p, 0);
    while (true) {
        Eigen::VectorXd u(p);
        for (std::size_t j = 0; j < p; ++j) u[j] = grids[j][index[j]];
        const double rss = ws.rss(u);
        if (rss < best_rss) {
            best_rss = rss;
            best_u = u;
        }
        std::size_t j = 0;
        for (; j < p; ++j) {
            if (++index[j] < grids[j].size()) break;
            index[j] = 0;
        }
        if (j == p) break;
    }

    const LmOutcome lm = levenberg_marquardt(ws, best_u, options);

    FitResult result;
    result.rss = lm.rss;
    result.iterations = lm.iterations;
    result.converged = lm.converged;

    // Jacobian-based covariance at the optimum, mapped back to linear scale.
    const std::size_t n = data.x.size();
    Eigen::MatrixXd jac(n, p);
    ws.jacobian(lm.u, jac);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double dof = static_cast<double>(n > p ? n - p : 1);
    const double variance = lm.rss / dof;
    Eigen::MatrixXd cov = jtj.ldlt().solve(Eigen::MatrixXd::Identity(p, p)) * variance;

    std::vector<double> sigma_u(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        sigma_u[j] = cov(j, j) > 0.0 ? std::sqrt(cov(j, j)) : 0.0;

    if (options.bootstrap > 0) {
        // Residual bootstrap: refit against resampled residuals.
        const auto theta = ws.unpack(lm.u);
        std::vector<double> fitted(n), resid(n);
        for (std::size_t i = 0; i < n; ++i) {
            fitted[i] = model(data.x[i], theta.data());
            resid[i] = data.y[i] - fitted[i];
        }
        Rng rng(options.bootstrap_seed);
        std::vector<std::vector<double>> estimates(p);
        for (int b = 0; b < options.bootstrap; ++b) {
            std::vector<double> y_b(n);
            for (std::size_t i = 0; i < n; ++i)
                y_b[i] = fitted[i] + resid[static_cast<std::size_t>(rng.uniform() * n)];
            const LmOutcome bs = levenberg_marquardt(ws, lm.u, options, &y_b);
            const auto theta_b = ws.unpack(bs.u);
            for (std::size_t j = 0; j < p; ++j) estimates[j].push_back(theta_b[j]);
        }
        for (std::size_t j = 0; j < p; ++j) {
            double mean = 0.0;
            for (double v : estimates[j]) mean += v;
            mean /= estimates[j].size();
            double var = 0.0;
            for (double v : estimates[j]) var += (v - mean) * (v - mean);
            var /= std::max<std::size_t>(1, estimates[j].size() - 1);
            const double theta_j = ws.theta_of(lm.u[j], j);
            sigma_u[j] = specs[j].log_scale ? std::sqrt(var) / (theta_j * std::log(10.0))
                                            : std::sqrt(var);
        }
    }

    for (std::size_t j = 0; j < p; ++j) {
        const double value = ws.theta_of(lm.u[j], j);
        const double sigma =
            specs[j].log_scale ? sigma_u[j] * value * std::log(10.0) : sigma_u[j];
        result.params[specs[j].name] = {value, sigma};
    }
    return result;
}

}  // namespace spinshot::fit
