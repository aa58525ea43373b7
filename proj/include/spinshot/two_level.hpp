#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "spinshot/rates.hpp"

namespace spinshot {

/// 2x2 density matrix over (|down>, |up>), row-major.
using DensityMatrix2 = std::array<std::complex<double>, 4>;

/// Closed-form evolution of a pure state alpha|down> + beta|up> under a
/// spin-preserving optical drive with pumping rate R and cyclicity lambda:
/// populations relax at Gamma_p = R/(lambda+1), coherences at Gamma_phi = R/2.
inline DensityMatrix2 evolve_two_level(std::complex<double> alpha, std::complex<double> beta,
                                       double pump, double lambda_cyc, double t) {
    const double norm = std::norm(alpha) + std::norm(beta);
    if (std::fabs(norm - 1.0) > 1e-9)
        throw std::invalid_argument("evolve_two_level: |alpha|^2 + |beta|^2 must be 1");
    if (t < 0.0) throw std::invalid_argument("evolve_two_level: t must be >= 0");
    const double gp = polarization_rate(pump, lambda_cyc);
    const double gphi = dephasing_rate(pump);
    const double ep = std::exp(-gp * t);
    const double ephi = std::exp(-gphi * t);
    DensityMatrix2 rho;
    rho[0] = std::norm(alpha) * ep;                      // down-down
    rho[1] = alpha * std::conj(beta) * ephi;             // down-up
    rho[2] = std::conj(alpha) * beta * ephi;             // up-down
    rho[3] = 1.0 + (std::norm(beta) - 1.0) * ep;         // up-up
    return rho;
}

}  // namespace spinshot
