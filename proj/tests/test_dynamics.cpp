#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "oracles.hpp"
#include "spinshot/rates.hpp"
#include "spinshot/three_level.hpp"
#include "spinshot/two_level.hpp"

using namespace spinshot;

namespace {

constexpr double kGamma = 2.2222e8;

EmitterParams emitter(double p_sat = 313.0, double delta = 0.0) {
    EmitterParams p;
    p.gamma = kGamma;
    p.lambda_cyc = 2244.0;
    p.p_sat = p_sat;
    p.delta = delta;
    p.eta = 0.001;
    return p;
}

DensityMatrix3 superposition_state() {
    return DensityMatrix3::pure(M_SQRT1_2, M_SQRT1_2, 0.0);
}

// integrate and extract with spans long enough for both channels
FitResult extract_for(const DriveParams& drive, double gp_expected, double gphi_expected) {
    const double t_phi = std::max(2.6 / gphi_expected, 120.0 / drive.gamma);
    const auto dense = integrate_three_level(drive, superposition_state(), t_phi, 1e-8, 400000);
    const double t_p = 2.6 / gp_expected;
    const auto sparse = integrate_three_level(drive, superposition_state(), t_p, 1e-8, 200000);
    const FitResult phi_fit = extract_rates_from_trajectory(dense.samples, drive.gamma);
    const FitResult p_fit = extract_rates_from_trajectory(sparse.samples, drive.gamma);
    FitResult merged;
    merged.params["gamma_p"] = {p_fit.value("gamma_p"), p_fit.sigma("gamma_p")};
    merged.params["gamma_phi"] = {phi_fit.value("gamma_phi"), phi_fit.sigma("gamma_phi")};
    merged.converged = p_fit.converged && phi_fit.converged;
    return merged;
}

}  // namespace

TEST_CASE("pump rate: saturation curve reference points") {
    EmitterParams p = emitter();
    CHECK(pump_rate(p.p_sat, p) == doctest::Approx(kGamma / 4.0));
    CHECK(pump_rate(1e9 * p.p_sat, p) == doctest::Approx(kGamma / 2.0).epsilon(1e-6));
    CHECK(pump_rate(0.0, p) == 0.0);

    EmitterParams detuned = emitter(313.0, kGamma / 2.0);
    CHECK(pump_rate(detuned.p_sat, detuned) == doctest::Approx(3.7037e7).epsilon(1e-4));

    // monotone in power, bounded by gamma/2
    double prev = -1.0;
    for (double power = 0.0; power < 40 * p.p_sat; power += p.p_sat / 3.0) {
        const double r = pump_rate(power, p);
        CHECK(r > prev);
        CHECK(r < kGamma / 2.0);
        prev = r;
    }
}

TEST_CASE("polarization rate: identity, measured band, and inversion") {
    CHECK(polarization_rate(1.234e7, 0.0) == doctest::Approx(1.234e7));

    const double gp = polarization_rate(kGamma / 2.0, 2244.0);
    CHECK(gp == doctest::Approx(4.95e4).epsilon(2e-3));
    const double t_pol_us = 1e6 / gp;
    CHECK(t_pol_us > 20.4 - 0.30);
    CHECK(t_pol_us < 20.4 + 0.30);

    const double pump = polarization_rate(1.0 / 78.5e-9, 8.6) * (8.6 + 1.0);
    CHECK(pump == doctest::Approx(1.0 / 78.5e-9));
    CHECK((1.0 / 78.5e-9) * (8.6 + 1.0) / (8.6 + 1.0) * (8.6 + 1.0) ==
          doctest::Approx(1.22e8).epsilon(5e-3));
}

TEST_CASE("dephasing rate: zero, plateau, and low-power slope") {
    CHECK(dephasing_rate(0.0) == 0.0);
    EmitterParams p = emitter(1436.0);
    CHECK(dephasing_rate(pump_rate(1e6 * p.p_sat, p)) ==
          doctest::Approx(kGamma / 4.0).epsilon(1e-5));
    const double dp = 1e-3;
    const double slope = dephasing_rate(pump_rate(dp, p)) / dp;
    CHECK(slope == doctest::Approx(kGamma / (4.0 * 1436.0)).epsilon(1e-5));
    CHECK(slope == doctest::Approx(3.87e4).epsilon(1e-2));
}

TEST_CASE("two-level evolution: projector, population and coherence decay") {
    const auto rho0 = evolve_two_level(0.6, 0.8, 1e7, 100.0, 0.0);
    CHECK(rho0[0].real() == doctest::Approx(0.36));
    CHECK(rho0[3].real() == doctest::Approx(0.64));
    CHECK(rho0[1] == std::conj(rho0[2]));

    const double pump = 1e7, lambda = 100.0;
    const double gp = polarization_rate(pump, lambda);
    const auto rho1 = evolve_two_level(1.0, 0.0, pump, lambda, 1.0 / gp);
    CHECK(rho1[0].real() == doctest::Approx(std::exp(-1.0)));
    CHECK(rho1[0].real() + rho1[3].real() == doctest::Approx(1.0));

    const double gphi = dephasing_rate(pump);
    const auto rho2 = evolve_two_level(M_SQRT1_2, M_SQRT1_2, pump, lambda, 1.0 / gphi);
    CHECK(std::abs(rho2[1]) == doctest::Approx(std::exp(-1.0) / 2.0));

    CHECK_THROWS_AS(evolve_two_level(1.0, 0.5, pump, lambda, 0.0), std::invalid_argument);
}

TEST_CASE("two-level model: dephasing-to-polarization ratio is (lambda+1)/2 exactly") {
    for (double lambda : {0.5, 10.0, 100.0, 2244.0})
        for (double pump : {1e5, 1e7, 1e8}) {
            const double ratio = dephasing_rate(pump) / polarization_rate(pump, lambda);
            CHECK(ratio == doctest::Approx((lambda + 1.0) / 2.0).epsilon(1e-12));
        }
}

TEST_CASE("three-level evolution: dark ground state is stationary") {
    DriveParams drive{0.0, 0.0, 100.0, kGamma};
    const auto rho = evolve_three_level(drive, DensityMatrix3::pure(1.0, 0.0, 0.0), 20.0 / kGamma,
                                        1e-9);
    CHECK(rho.at(0, 0).real() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("three-level evolution: undriven excited state decays with the branching ratio") {
    const double lambda = 100.0;
    DriveParams drive{0.0, 0.0, lambda, kGamma};
    const auto rho = evolve_three_level(drive, DensityMatrix3::pure(0.0, 0.0, 1.0), 40.0 / kGamma,
                                        1e-9);
    CHECK(rho.at(0, 0).real() == doctest::Approx(lambda / (lambda + 1.0)).epsilon(1e-6));
    CHECK(rho.at(1, 1).real() == doctest::Approx(1.0 / (lambda + 1.0)).epsilon(1e-6));
}

TEST_CASE("three-level trajectory keeps trace, hermiticity and positivity") {
    DriveParams drive{2.0 * kGamma, 1.0 * kGamma, 10.0, kGamma};
    const auto run = integrate_three_level(drive, superposition_state(), 400.0 / kGamma, 1e-9,
                                           4000);
    CHECK(run.trace_drift < 1e-9);
    for (std::size_t i = 0; i < run.samples.size(); i += 37) {
        const auto& rho = run.samples[i].rho;
        CHECK(rho.hermiticity_defect() < 1e-12);
        CHECK(std::fabs(rho.trace_real() - 1.0) < 1e-9);
        CHECK(rho.min_eigenvalue() > -1e-9);
    }
}

TEST_CASE("rate extraction: two-level synthetic trajectory is recovered to 0.1%") {
    const double pump = 0.01 * kGamma, lambda = 50.0;
    const double gp = polarization_rate(pump, lambda);
    const double gphi = dephasing_rate(pump);
    std::vector<TrajectoryPoint> trajectory;
    const double t_end = 3.0 / gp;
    for (int i = 0; i <= 4000; ++i) {
        const double t = t_end * i / 4000.0;
        const auto rho2 = evolve_two_level(M_SQRT1_2, M_SQRT1_2, pump, lambda, t);
        TrajectoryPoint point;
        point.t = t;
        point.rho.at(0, 0) = rho2[0];
        point.rho.at(0, 1) = rho2[1];
        point.rho.at(1, 0) = rho2[2];
        point.rho.at(1, 1) = rho2[3];
        trajectory.push_back(point);
    }
    const FitResult fit = extract_rates_from_trajectory(trajectory, kGamma);
    CHECK(fit.converged);
    CHECK(fit.value("gamma_p") == doctest::Approx(gp).epsilon(1e-3));
    CHECK(fit.value("gamma_phi") == doctest::Approx(gphi).epsilon(1e-3));
}

TEST_CASE("rate extraction rejects a non-decaying trajectory") {
    std::vector<TrajectoryPoint> flat;
    for (int i = 0; i <= 100; ++i) {
        TrajectoryPoint point;
        point.t = i * 1e-5;
        point.rho = DensityMatrix3::pure(M_SQRT1_2, M_SQRT1_2, 0.0);
        flat.push_back(point);
    }
    const FitResult fit = extract_rates_from_trajectory(flat, kGamma);
    CHECK(!fit.converged);
}

TEST_CASE("three-level rates match the exact sector eigenvalues") {
    // oracle: closed coherence / population sectors of the same master equation
    for (const double omega : {0.25 * kGamma, 1.0 * kGamma, 5.0 * kGamma}) {
        for (const double delta : {0.0, 1.0 * kGamma, 3.0 * kGamma}) {
            const double lambda = 100.0;
            const double gp_exact =
                oracles::polarization_decay_exact(omega, delta, lambda, kGamma);
            const double gphi_exact = oracles::coherence_decay_exact(omega, delta, kGamma);
            DriveParams drive{omega, delta, lambda, kGamma};
            const FitResult fit = extract_for(drive, gp_exact, gphi_exact);
            CHECK(fit.converged);
            CHECK(fit.value("gamma_p") == doctest::Approx(gp_exact).epsilon(0.015));
            CHECK(fit.value("gamma_phi") == doctest::Approx(gphi_exact).epsilon(0.02));
        }
    }
}

TEST_CASE("strongly driven polarization envelope matches the two-level solution to 1%") {
    const double omega = 5.0 * kGamma, lambda = 100.0;
    const double saturation = saturation_from_rabi(omega, kGamma);
    const double pump = 0.5 * kGamma * saturation / (1.0 + saturation);
    const double gp = polarization_rate(pump, lambda);

    DriveParams drive{omega, 0.0, lambda, kGamma};
    const auto run = integrate_three_level(drive, DensityMatrix3::pure(1.0, 0.0, 0.0), 2.6 / gp,
                                           1e-9, 200000);
    const FitResult fit = extract_rates_from_trajectory(run.samples, kGamma);
    CHECK(fit.converged);
    CHECK(fit.value("gamma_p") == doctest::Approx(gp).epsilon(0.01));
}

TEST_CASE("moderate-drive rates at cyclicity 100 agree with the closed forms to 1%") {
    const double omega = 1.0 * kGamma, lambda = 100.0;
    const double saturation = saturation_from_rabi(omega, kGamma);
    const double pump = 0.5 * kGamma * saturation / (1.0 + saturation);
    const double gp_exact = oracles::polarization_decay_exact(omega, 0.0, lambda, kGamma);
    const double gphi_exact = oracles::coherence_decay_exact(omega, 0.0, kGamma);
    // the polarization channel follows the closed-form rate here ...
    CHECK(gp_exact == doctest::Approx(polarization_rate(pump, lambda)).epsilon(0.01));
    // ... while the coherent-model dephasing sits at gamma/4 at this drive,
    // not at the rate-equation value pump/2
    CHECK(gphi_exact == doctest::Approx(0.25 * kGamma).epsilon(1e-9));

    DriveParams drive{omega, 0.0, lambda, kGamma};
    const FitResult fit = extract_for(drive, gp_exact, gphi_exact);
    CHECK(fit.value("gamma_p") == doctest::Approx(gp_exact).epsilon(0.01));
    CHECK(fit.value("gamma_phi") == doctest::Approx(gphi_exact).epsilon(0.01));
}

TEST_CASE("detuning sweep reproduces the power-broadened pumping profile") {
    const double omega = 1.0 * kGamma, lambda = 100.0;
    const double saturation = saturation_from_rabi(omega, kGamma);
    EmitterParams p = emitter();
    p.lambda_cyc = lambda;
    for (const double delta : {-3.0 * kGamma, -1.0 * kGamma, 0.0, 1.0 * kGamma, 3.0 * kGamma}) {
        p.delta = delta;
        const double pump = pump_rate(saturation * p.p_sat, p);
        const double gp_formula = polarization_rate(pump, lambda);
        DriveParams drive{omega, delta, lambda, kGamma};
        const auto run = integrate_three_level(drive, DensityMatrix3::pure(1.0, 0.0, 0.0),
                                               2.6 / gp_formula, 1e-9, 200000);
        const FitResult fit = extract_rates_from_trajectory(run.samples, kGamma);
        CHECK(fit.converged);
        CHECK(fit.value("gamma_p") == doctest::Approx(gp_formula).epsilon(0.02));
    }
}

TEST_CASE("integrator reports step-size underflow on absurdly stiff input") {
    // detuning oscillation far beyond what step halving can resolve
    DriveParams drive{kGamma, 1e9 * kGamma, 10.0, kGamma};
    CHECK_THROWS_AS(
        integrate_three_level(drive, superposition_state(), 1.0 / kGamma, 1e-12, 100),
        std::runtime_error);
}

TEST_CASE("trajectory csv dump has one row per sample") {
    DriveParams drive{kGamma, 0.0, 10.0, kGamma};
    const auto run = integrate_three_level(drive, superposition_state(), 10.0 / kGamma, 1e-9, 50);
    std::ostringstream out;
    write_trajectory_csv(out, run.samples);
    std::size_t lines = 0;
    for (char c : out.str()) lines += c == '\n';
    CHECK(lines == run.samples.size() + 1);
}
