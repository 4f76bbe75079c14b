#include "pmu/phasor_core.hpp"

#include "pmu/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pmu {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

// sin(n*x) / (n*sin(x)) with the removable singularities at x = m*pi filled
// by the limit value cos(n*m*pi)/cos(m*pi).
double dirichlet_ratio(int n, double x) {
    const double s = std::sin(x);
    if (std::abs(s) < 1e-12) {
        const auto m = static_cast<long long>(std::llround(x / kPi));
        const bool flip = ((static_cast<long long>(n) - 1) * m) % 2 != 0;
        return flip ? -1.0 : 1.0;
    }
    return std::sin(static_cast<double>(n) * x) / (static_cast<double>(n) * s);
}

std::complex<double> unit_phasor(double angle) {
    return {std::cos(angle), std::sin(angle)};
}

} // namespace

double wrap_angle(double rad) {
    double r = std::remainder(rad, kTwoPi);
    if (r <= -kPi)
        r += kTwoPi;
    return r;
}

PhasorEstimate make_phasor(std::complex<double> z, double timestamp_s) {
    PhasorEstimate p;
    p.real = z.real();
    p.imag = z.imag();
    p.magnitude_rms = std::hypot(z.real(), z.imag());
    p.angle_rad = wrap_angle(std::atan2(z.imag(), z.real()));
    p.timestamp_s = timestamp_s;
    return p;
}

PhasorEstimate dft_window(std::span<const double> window, double theta_rad,
                          double timestamp_s) {
    if (!(theta_rad > 0.0) || !std::isfinite(theta_rad))
        throw InvalidSpecError("dft_window: theta_rad must be finite and > 0");
    const double n_from_theta = kTwoPi / theta_rad;
    const auto n = static_cast<std::size_t>(std::llround(n_from_theta));
    if (n < 2 || std::abs(n_from_theta - static_cast<double>(n)) > 1e-6)
        throw InvalidSpecError("dft_window: theta_rad does not describe an integer window");
    if (window.size() != n)
        throw InvalidSpecError("dft_window: window holds " + std::to_string(window.size()) +
                               " samples, expected " + std::to_string(n));

    std::complex<double> sum{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = theta_rad * static_cast<double>(k);
        sum += window[k] * std::complex<double>(std::cos(ang), -std::sin(ang));
    }
    return make_phasor(sum * (kSqrt2 / static_cast<double>(n)), timestamp_s);
}

PqCoefficients pq_coefficients(int n_samples_per_cycle, double omega,
                               double nominal_omega, double dt_s) {
    if (n_samples_per_cycle < 2)
        throw InvalidSpecError("pq_coefficients: n_samples_per_cycle must be >= 2");
    if (!(dt_s > 0.0))
        throw InvalidSpecError("pq_coefficients: dt_s must be > 0");

    PqCoefficients pq;
    pq.delta_omega = omega - nominal_omega;
    if (pq.delta_omega == 0.0)
        return pq; // analytic branch: p = 1, q = 0 exactly

    const int n = n_samples_per_cycle;
    const double xd = pq.delta_omega * dt_s / 2.0;
    const double xs = (omega + nominal_omega) * dt_s / 2.0;
    pq.p = dirichlet_ratio(n, xd) * unit_phasor(static_cast<double>(n - 1) * xd);
    pq.q = dirichlet_ratio(n, xs) * unit_phasor(-static_cast<double>(n - 1) * xs);
    return pq;
}

PhasorEstimate correct_first_window(const PhasorEstimate& raw, const PqCoefficients& pq,
                                    std::int64_t r_index, double omega,
                                    double nominal_omega, double dt_s) {
    if (!(dt_s > 0.0))
        throw InvalidSpecError("correct_first_window: dt_s must be > 0");

    const double t_offset = static_cast<double>(r_index) * dt_s;
    const std::complex<double> a = pq.p * unit_phasor((omega - nominal_omega) * t_offset);
    const std::complex<double> b = pq.q * unit_phasor(-(omega + nominal_omega) * t_offset);

    // X'_r = a*X + b*conj(X) pairs with its conjugate into a 2x2 system whose
    // determinant is |a|^2 - |b|^2.
    const double det = std::norm(a) - std::norm(b);
    if (std::abs(det) <= 1e-9)
        throw UnrecoverableCorrectionError(
            "correct_first_window: leakage system is near-singular (|det| <= 1e-9)");

    const std::complex<double> z = raw.value();
    const std::complex<double> x = (std::conj(a) * z - b * std::conj(z)) / det;
    return make_phasor(x, raw.timestamp_s);
}

RotationPeriod rotation_period(double f_in_hz, double f0_hz) {
    if (!(f_in_hz > 0.0) || !(f0_hz > 0.0))
        throw InvalidSpecError("rotation_period: frequencies must be > 0");
    RotationPeriod r;
    if (f_in_hz == f0_hz)
        return r;
    r.period_s = 1.0 / std::abs(f_in_hz - f0_hz);
    r.direction = f_in_hz < f0_hz ? RotationDirection::clockwise
                                  : RotationDirection::anticlockwise;
    return r;
}

const char* to_string(RotationDirection dir) {
    switch (dir) {
    case RotationDirection::clockwise:
        return "clockwise";
    case RotationDirection::anticlockwise:
        return "anticlockwise";
    default:
        return "none";
    }
}

RecursiveEstimator::RecursiveEstimator(int n_samples_per_cycle, double dt_s,
                                       double nominal_omega)
    : n_(n_samples_per_cycle), theta_(kTwoPi / n_samples_per_cycle), dt_(dt_s),
      nominal_omega_(nominal_omega) {
    if (n_samples_per_cycle < 2)
        throw InvalidSpecError("estimator: n_samples_per_cycle must be >= 2");
    if (!(dt_s > 0.0) || !std::isfinite(dt_s))
        throw InvalidSpecError("estimator: dt_s must be finite and > 0");
    if (!(nominal_omega > 0.0))
        throw InvalidSpecError("estimator: nominal_omega must be > 0");
    window_.resize(static_cast<std::size_t>(n_));
}

void RecursiveEstimator::prime(std::span<const double> first_window,
                               double window_end_time_s) {
    if (first_window.size() != static_cast<std::size_t>(n_))
        throw InvalidSpecError("estimator: priming window must hold exactly N samples");
    const PhasorEstimate est = dft_window(first_window, theta_, window_end_time_s);
    phasor_ = est.value();
    std::copy(first_window.begin(), first_window.end(), window_.begin());
    head_ = 0;
    updates_ = 0;
    last_time_ = window_end_time_s;
    primed_ = true;
}

PhasorEstimate RecursiveEstimator::update(double new_sample, double timestamp_s) {
    if (!primed_)
        throw InvalidSpecError("estimator: update on unprimed state");

    const double dropped = window_[head_];
    const double ang = theta_ * static_cast<double>(updates_ % n_);
    phasor_ += (kSqrt2 / static_cast<double>(n_)) * (new_sample - dropped) *
               std::complex<double>(std::cos(ang), -std::sin(ang));

    window_[head_] = new_sample;
    head_ = (head_ + 1) % static_cast<std::size_t>(n_);
    ++updates_;
    last_time_ = timestamp_s;
    return make_phasor(phasor_, timestamp_s);
}

PhasorEstimate RecursiveEstimator::current() const {
    if (!primed_)
        throw InvalidSpecError("estimator: current() on unprimed state");
    return make_phasor(phasor_, last_time_);
}

} // namespace pmu
