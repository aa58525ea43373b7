#pragma once

#include <array>
#include <complex>
#include <ostream>
#include <vector>

#include "spinshot/types.hpp"

namespace spinshot {

/// Drive and decay parameters of the driven lambda system.
struct DriveParams {
    double omega = 0.0;       // optical Rabi frequency, s^-1
    double delta = 0.0;       // drive detuning, s^-1
    double lambda_cyc = 1.0;  // cyclicity
    double gamma = 1.0;       // optical decay rate, s^-1

    double gamma_preserving() const { return gamma * lambda_cyc / (1.0 + lambda_cyc); }
    double gamma_flipping() const { return gamma / (1.0 + lambda_cyc); }
};

/// 3x3 density matrix over the basis (|down>, |up>, |A>), row-major.
struct DensityMatrix3 {
    std::array<std::complex<double>, 9> m{};

    std::complex<double>& at(int r, int c) { return m[3 * r + c]; }
    const std::complex<double>& at(int r, int c) const { return m[3 * r + c]; }

    static DensityMatrix3 pure(std::complex<double> down, std::complex<double> up,
                               std::complex<double> excited);

    double trace_real() const { return m[0].real() + m[4].real() + m[8].real(); }
    double hermiticity_defect() const;
    double min_eigenvalue() const;

    /// Hermitian to 1e-12, unit trace to 1e-9, eigenvalues >= -1e-9.
    void validate() const;
};

struct TrajectoryPoint {
    double t = 0.0;
    DensityMatrix3 rho;
};

struct IntegrationResult {
    std::vector<TrajectoryPoint> samples;
    double step = 0.0;
    double trace_drift = 0.0;
    double richardson_error = 0.0;
};

/// Fixed-step RK4 integration of the lambda-system master equation up to
/// t_end. Step size starts at min(1/(50 gamma), 1/(50 omega)); a Richardson
/// halving probe over the leading segment scales it down until the projected
/// global error is below tol. The state is re-hermitized every step and trace
/// drift beyond tol raises an error. At most max_samples points are kept.
IntegrationResult integrate_three_level(const DriveParams& drive, const DensityMatrix3& rho0,
                                        double t_end, double tol, std::size_t max_samples = 200000);

/// Endpoint-only convenience wrapper.
DensityMatrix3 evolve_three_level(const DriveParams& drive, const DensityMatrix3& rho0, double t,
                                  double tol);

/// CSV dump: t_s plus re/im of the six independent entries.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory);

/// Exponential-envelope fits of rho_dd(t) and |rho_du(t)| after the coherent
/// transient (the first 5/gamma are skipped). Returns gamma_p and gamma_phi;
/// converged=false when either channel does not decay.
FitResult extract_rates_from_trajectory(const std::vector<TrajectoryPoint>& trajectory,
                                        double gamma);

}  // namespace spinshot
