#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pmu {

// Wraps an angle into (-pi, pi].
double wrap_angle(double rad);

// A phasor in RMS scaling: magnitude_rms is the RMS amplitude of the
// underlying cosine, angle_rad is wrapped to (-pi, pi].
struct PhasorEstimate {
    double real = 0.0;
    double imag = 0.0;
    double magnitude_rms = 0.0;
    double angle_rad = 0.0;
    double timestamp_s = 0.0;

    std::complex<double> value() const { return {real, imag}; }
};

PhasorEstimate make_phasor(std::complex<double> z, double timestamp_s);

// Non-recursive fundamental-bin DFT of one analysis window:
//   X = (sqrt(2)/N) * sum_{n=0}^{N-1} x[n] * exp(-j*n*theta),  theta = 2*pi/N.
// The window must hold exactly N = 2*pi/theta samples.
PhasorEstimate dft_window(std::span<const double> window, double theta_rad,
                          double timestamp_s = 0.0);

// Spectral-leakage coefficients of the rectangular window at an off-nominal
// input frequency. For a pure cosine at angular frequency omega, the window
// estimate starting at sample r obeys
//   X'_r = p * X * exp(+j*r*(omega - omega0)*dt)
//        + q * conj(X) * exp(-j*r*(omega + omega0)*dt).
// delta_omega == 0 takes the analytic branch: p = 1 and q = 0 exactly.
struct PqCoefficients {
    std::complex<double> p{1.0, 0.0};
    std::complex<double> q{0.0, 0.0};
    double delta_omega = 0.0;
};

PqCoefficients pq_coefficients(int n_samples_per_cycle, double omega,
                               double nominal_omega, double dt_s);

// Inverts the leakage relation above for the window starting at sample
// r_index, recovering the constant phasor X from the raw window estimate.
// Throws UnrecoverableCorrectionError when the 2x2 conjugate-pair system is
// near-singular (| |a|^2 - |b|^2 | <= 1e-9).
PhasorEstimate correct_first_window(const PhasorEstimate& raw, const PqCoefficients& pq,
                                    std::int64_t r_index, double omega,
                                    double nominal_omega, double dt_s);

enum class RotationDirection { none, clockwise, anticlockwise };

// Period of the phasor's angle rotation for a constant off-nominal input:
// T = 1 / |f_in - f0|; below-nominal inputs rotate clockwise, above-nominal
// anticlockwise. Equal frequencies rotate not at all (empty period).
struct RotationPeriod {
    std::optional<double> period_s;
    RotationDirection direction = RotationDirection::none;
};

RotationPeriod rotation_period(double f_in_hz, double f0_hz);

const char* to_string(RotationDirection dir);

// Sliding-window estimator state. prime() runs the full dft_window once;
// update() then advances the window one sample at a time:
//   X'_{s+1} = X'_s + (sqrt(2)/N) * (x[s+N] - x[s]) * exp(-j*s*theta),
// where s counts completed updates and only s mod N enters the twiddle
// factor (theta * N = 2*pi). For a cosine at exactly the window frequency
// the correction term vanishes and the estimate is stationary.
class RecursiveEstimator {
public:
    RecursiveEstimator(int n_samples_per_cycle, double dt_s, double nominal_omega);

    void prime(std::span<const double> first_window, double window_end_time_s);
    bool primed() const { return primed_; }

    // Rejects an unprimed state. Returns the estimate for the window ending
    // at the new sample.
    PhasorEstimate update(double new_sample, double timestamp_s);

    PhasorEstimate current() const;
    // Index of the oldest sample in the current window (== updates done).
    std::int64_t window_start_index() const { return updates_; }

    int n_samples_per_cycle() const { return n_; }
    double theta_rad() const { return theta_; }
    double dt_s() const { return dt_; }
    double nominal_omega() const { return nominal_omega_; }

private:
    int n_;
    double theta_;
    double dt_;
    double nominal_omega_;
    std::vector<double> window_;
    std::size_t head_ = 0;
    std::complex<double> phasor_{0.0, 0.0};
    std::int64_t updates_ = 0;
    double last_time_ = 0.0;
    bool primed_ = false;
};

} // namespace pmu
