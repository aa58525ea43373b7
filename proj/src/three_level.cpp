#include "spinshot/three_level.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinshot {

namespace {

// Independent degrees of freedom of a hermitian 3x3 matrix over
// (|down>, |up>, |A>): three real populations and three complex coherences.
// Storing only these makes re-hermitization structural.
struct State9 {
    // a=rho_dd, b=rho_uu, c=rho_AA, then re/im of rho_du, rho_dA, rho_uA
    double v[9];
};

struct Rhs {
    double w2;   // omega/2
    double d2;   // delta/2
    double dlt;  // delta
    double g;    // gamma
    double gh;   // gamma/2
    double gA1;  // spin-preserving decay
    double gA2;  // spin-flipping decay

    explicit Rhs(const DriveParams& p)
        : w2(0.5 * p.omega),
          d2(0.5 * p.delta),
          dlt(p.delta),
          g(p.gamma),
          gh(0.5 * p.gamma),
          gA1(p.gamma_preserving()),
          gA2(p.gamma_flipping()) {}

    void operator()(const State9& s, State9& out) const {
        const double a = s.v[0], b = s.v[1], c = s.v[2];
        const double x01 = s.v[3], y01 = s.v[4];
        const double x02 = s.v[5], y02 = s.v[6];
        const double x12 = s.v[7], y12 = s.v[8];
        (void)b;
        out.v[0] = -2.0 * w2 * y02 + gA1 * c;
        out.v[1] = gA2 * c;
        out.v[2] = 2.0 * w2 * y02 - g * c;
        out.v[3] = d2 * y01 - w2 * y12;
        out.v[4] = -d2 * x01 - w2 * x12;
        out.v[5] = dlt * y02 - gh * x02;
        out.v[6] = -dlt * x02 - w2 * (c - a) - gh * y02;
        out.v[7] = d2 * y12 + w2 * y01 - gh * x12;
        out.v[8] = -d2 * x12 + w2 * x01 - gh * y12;
    }
};

State9 pack(const DensityMatrix3& rho) {
    State9 s;
    s.v[0] = rho.at(0, 0).real();
    s.v[1] = rho.at(1, 1).real();
    s.v[2] = rho.at(2, 2).real();
    s.v[3] = rho.at(0, 1).real();
    s.v[4] = rho.at(0, 1).imag();
    s.v[5] = rho.at(0, 2).real();
    s.v[6] = rho.at(0, 2).imag();
    s.v[7] = rho.at(1, 2).real();
    s.v[8] = rho.at(1, 2).imag();
    return s;
}

DensityMatrix3 unpack(const State9& s) {
    DensityMatrix3 rho;
    rho.at(0, 0) = s.v[0];
    rho.at(1, 1) = s.v[1];
    rho.at(2, 2) = s.v[2];
    rho.at(0, 1) = {s.v[3], s.v[4]};
    rho.at(1, 0) = {s.v[3], -s.v[4]};
    rho.at(0, 2) = {s.v[5], s.v[6]};
    rho.at(2, 0) = {s.v[5], -s.v[6]};
    rho.at(1, 2) = {s.v[7], s.v[8]};
    rho.at(2, 1) = {s.v[7], -s.v[8]};
    return rho;
}

inline void rk4_step(const Rhs& rhs, State9& s, double h, State9& k1, State9& k2, State9& k3,
                     State9& k4, State9& tmp) {
    rhs(s, k1);
    for (int i = 0; i < 9; ++i) tmp.v[i] = s.v[i] + 0.5 * h * k1.v[i];
    rhs(tmp, k2);
    for (int i = 0; i < 9; ++i) tmp.v[i] = s.v[i] + 0.5 * h * k2.v[i];
    rhs(tmp, k3);
    for (int i = 0; i < 9; ++i) tmp.v[i] = s.v[i] + h * k3.v[i];
    rhs(tmp, k4);
    const double h6 = h / 6.0;
    for (int i = 0; i < 9; ++i)
        s.v[i] += h6 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
}

double max_abs_diff(const State9& x, const State9& y) {
    double m = 0.0;
    for (int i = 0; i < 9; ++i) {
        const double d = std::fabs(x.v[i] - y.v[i]);
        if (!std::isfinite(d)) return 1e300;
        m = std::max(m, d);
    }
    return m;
}

}  // namespace

DensityMatrix3 DensityMatrix3::pure(std::complex<double> down, std::complex<double> up,
                                    std::complex<double> excited) {
    const std::complex<double> amp[3] = {down, up, excited};
    DensityMatrix3 rho;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rho.at(r, c) = amp[r] * std::conj(amp[c]);
    return rho;
}

double DensityMatrix3::hermiticity_defect() const {
    double defect = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            defect = std::max(defect, std::abs(at(r, c) - std::conj(at(c, r))));
    return defect;
}

double DensityMatrix3::min_eigenvalue() const {
    Eigen::Matrix3cd m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = at(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(m);
    return solver.eigenvalues().minCoeff();
}

void DensityMatrix3::validate() const {
    if (hermiticity_defect() > 1e-12) throw std::invalid_argument("density matrix not hermitian");
    if (std::fabs(trace_real() - 1.0) > 1e-9)
        throw std::invalid_argument("density matrix trace differs from 1");
    if (min_eigenvalue() < -1e-9) throw std::invalid_argument("density matrix not positive");
}

IntegrationResult integrate_three_level(const DriveParams& drive, const DensityMatrix3& rho0,
                                        double t_end, double tol, std::size_t max_samples) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_three_level: tol must be > 0");
    if (!(drive.gamma > 0.0) || !(drive.lambda_cyc > 0.0))
        throw std::invalid_argument("integrate_three_level: gamma and lambda_cyc must be > 0");
    if (t_end < 0.0) throw std::invalid_argument("integrate_three_level: t_end must be >= 0");
    rho0.validate();

    const Rhs rhs(drive);
    double h = 1.0 / (50.0 * drive.gamma);
    if (drive.omega > 0.0) h = std::min(h, 1.0 / (50.0 * drive.omega));

    IntegrationResult result;
    if (t_end == 0.0) {
        result.samples.push_back({0.0, rho0});
        result.step = h;
        return result;
    }

    State9 k1, k2, k3, k4, tmp;

    // Richardson probe over the leading (stiffest) segment: halve the step
    // until one integration at h agrees with two at h/2.
    const State9 s0 = pack(rho0);
    int halvings = 0;
    while (true) {
        const std::size_t probe = std::min<std::size_t>(1000, std::max<std::size_t>(
                                                                  1, std::llround(t_end / h)));
        State9 coarse = s0;
        for (std::size_t i = 0; i < probe; ++i) rk4_step(rhs, coarse, h, k1, k2, k3, k4, tmp);
        State9 fine = s0;
        for (std::size_t i = 0; i < 2 * probe; ++i)
            rk4_step(rhs, fine, 0.5 * h, k1, k2, k3, k4, tmp);
        result.richardson_error = max_abs_diff(coarse, fine);
        if (result.richardson_error <= std::max(tol, 1e-10)) break;
        h *= 0.5;
        if (++halvings > 20 || h < t_end * 1e-15)
            throw std::runtime_error("integrate_three_level: step-size underflow");
    }

    const std::uint64_t n_steps = std::max<std::uint64_t>(1, std::llround(std::ceil(t_end / h)));
    h = t_end / static_cast<double>(n_steps);
    const std::uint64_t stride =
        std::max<std::uint64_t>(1, (n_steps + max_samples - 1) / max_samples);

    State9 s = s0;
    result.samples.reserve(std::min<std::uint64_t>(n_steps / stride + 2, max_samples + 2));
    result.samples.push_back({0.0, rho0});
    for (std::uint64_t i = 1; i <= n_steps; ++i) {
        rk4_step(rhs, s, h, k1, k2, k3, k4, tmp);
        if (i % stride == 0 || i == n_steps)
            result.samples.push_back({static_cast<double>(i) * h, unpack(s)});
    }
    result.step = h;
    result.trace_drift = std::fabs(s.v[0] + s.v[1] + s.v[2] - 1.0);
    if (!(result.trace_drift <= tol))
        throw std::runtime_error("integrate_three_level: trace drift exceeds tolerance");
    return result;
}

DensityMatrix3 evolve_three_level(const DriveParams& drive, const DensityMatrix3& rho0, double t,
                                  double tol) {
    return integrate_three_level(drive, rho0, t, tol, 2).samples.back().rho;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory) {
    out << "t_s,re_dd,re_uu,re_AA,re_du,im_du,re_dA,im_dA,re_uA,im_uA\n";
    for (const auto& p : trajectory) {
        out << p.t << ',' << p.rho.at(0, 0).real() << ',' << p.rho.at(1, 1).real() << ','
            << p.rho.at(2, 2).real() << ',' << p.rho.at(0, 1).real() << ','
            << p.rho.at(0, 1).imag() << ',' << p.rho.at(0, 2).real() << ','
            << p.rho.at(0, 2).imag() << ',' << p.rho.at(1, 2).real() << ','
            << p.rho.at(1, 2).imag() << '\n';
    }
}

namespace {

struct EnvelopeFit {
    double rate = 0.0;
    double sigma = 0.0;
    bool ok = false;
    double span = 0.0;
};

struct LogLine {
    double slope = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
    bool ok = false;
};

LogLine log_linear(const std::vector<double>& t, const std::vector<double>& y, double t_min) {
    LogLine out;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (t[i] < t_min || y[i] <= 0.0) continue;
        const double ly = std::log(y[i]);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++out.n;
    }
    if (out.n < 3) return out;
    const double denom = out.n * sxx - sx * sx;
    if (denom <= 0.0) return out;
    out.slope = (out.n * sxy - sx * sy) / denom;
    const double intercept = (sy - out.slope * sx) / out.n;
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (t[i] < t_min || y[i] <= 0.0) continue;
        const double r = std::log(y[i]) - (intercept + out.slope * t[i]);
        ss += r * r;
    }
    const double var = out.n > 2 ? ss / (out.n - 2) : 0.0;
    out.sigma = std::sqrt(std::max(0.0, var * out.n / denom));
    out.ok = true;
    return out;
}

// Log-linear least squares on an exponentially decaying channel. Deeply
// modulated channels are reduced to their local maxima so that the near-zero
// dips of a rectified oscillation do not dominate; a tail-restricted refit
// then suppresses leftover fast decay modes.
EnvelopeFit fit_envelope(const std::vector<double>& t_in, const std::vector<double>& y_in) {
    EnvelopeFit fit;

    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < y_in.size(); ++i)
        if (y_in[i] > y_in[i - 1] && y_in[i] >= y_in[i + 1]) peaks.push_back(i);
    bool deep = false;
    if (peaks.size() >= 8) {
        std::size_t dips = 0;
        for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
            double valley = y_in[peaks[k]];
            for (std::size_t i = peaks[k]; i <= peaks[k + 1]; ++i)
                valley = std::min(valley, y_in[i]);
            dips += valley < 0.5 * std::min(y_in[peaks[k]], y_in[peaks[k + 1]]);
        }
        deep = 2 * dips >= peaks.size();
    }

    std::vector<double> t, y;
    if (deep) {
        for (auto i : peaks) {
            t.push_back(t_in[i]);
            y.push_back(y_in[i]);
        }
    } else {
        t = t_in;
        y = y_in;
    }

    // drop the numerical floor
    const double floor_value = *std::max_element(y.begin(), y.end()) * 1e-12;
    std::vector<double> ft, fy;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] <= floor_value) continue;
        ft.push_back(t[i]);
        fy.push_back(y[i]);
    }
    if (ft.size() < 3) return fit;

    LogLine line = log_linear(ft, fy, ft.front());
    if (!line.ok || !(line.slope < 0.0)) return fit;

    // refit over the last ~3 e-folds when the record is long enough
    const double rate0 = -line.slope;
    const double t_tail = ft.back() - 3.0 / rate0;
    if (t_tail > ft.front()) {
        const LogLine tail = log_linear(ft, fy, t_tail);
        if (tail.ok && tail.slope < 0.0 && tail.n >= 6) line = tail;
    }

    fit.rate = -line.slope;
    fit.sigma = line.sigma;
    fit.span = ft.back() - ft.front();
    fit.ok = true;
    return fit;
}

}  // namespace

FitResult extract_rates_from_trajectory(const std::vector<TrajectoryPoint>& trajectory,
                                        double gamma) {
    FitResult result;
    if (trajectory.size() < 8) return result;
    const double skip = 5.0 / gamma;

    std::vector<double> t, population, coherence;
    for (const auto& p : trajectory) {
        if (p.t < skip) continue;
        t.push_back(p.t);
        population.push_back(p.rho.at(0, 0).real());
        coherence.push_back(std::abs(p.rho.at(0, 1)));
    }
    if (t.size() < 8) return result;

    // Each channel is kept only when it decays over the fitted span; a
    // trajectory too short for one channel still yields the other.
    const auto try_channel = [&](const std::vector<double>& y, const char* name) {
        if (*std::max_element(y.begin(), y.end()) <= 1e-9) return;
        const EnvelopeFit fit = fit_envelope(t, y);
        if (fit.ok && std::exp(-fit.rate * fit.span) < 0.2)
            result.params[name] = {fit.rate, fit.sigma};
    };
    try_channel(population, "gamma_p");
    try_channel(coherence, "gamma_phi");
    result.converged = !result.params.empty();
    result.iterations = 1;
    return result;
}

}  // namespace spinshot
