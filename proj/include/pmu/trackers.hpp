#pragma once

#include "pmu/phasor_core.hpp"
#include "pmu/waveform.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace pmu {

// One output row of the measurement pipeline, aligned to a sample timestamp.
struct MeasurementFrame {
    double timestamp_s = 0.0;
    double rms = 0.0;
    double frequency_hz = 0.0;
    double rocof_hz_per_s = 0.0;
    double sample_rate_hz = 0.0;
    int n_samples_per_cycle = 0;
    PhasorEstimate phasor;
};

// Rising zero crossings and the whole-sample period lengths between them.
struct CyclePeriods {
    std::vector<std::int64_t> crossing_samples; // interpolated, rounded to nearest sample
    std::vector<int> period_samples;            // crossing_samples[i+1] - crossing_samples[i]
};

// Locates rising zero crossings by sign change with linear interpolation,
// rounded to the nearest sample index. Throws UntrackableSignalError when
// fewer than two crossings exist.
CyclePeriods detect_zero_crossing_period(const SampleStream& stream);

// Per-sample RMS series: mean square over one detected period per sample,
// smoothed by a 15-point trailing moving average (partial while fewer values
// exist). Once the tracker has converged the series is replaced by the
// leakage-corrected steady-state amplitude, which recovers the RMS of a
// constant-frequency input to full double precision.
std::vector<double> rms_track(const SampleStream& stream);

// Per-sample frequency series. The raw estimate inverts the normalized
// waveform through arccos on its monotonic branch (increment sign fixed by
// the local slope), excludes samples adjacent to extrema (|u| > 1 - 1e-6),
// and smooths with a 20-point trailing moving average. After convergence the
// series carries the refined steady-state frequency. Throws
// UntrackableSignalError when the normalization amplitude is zero.
std::vector<double> frequency_track(const SampleStream& stream,
                                    std::span<const double> rms_series);

// Fs(n) = 1 / (t(n) - t(n-1)); index 0 repeats index 1. Throws
// InvalidTimebaseError on duplicated or decreasing timestamps.
std::vector<double> detect_sample_rate(std::span<const double> times_s);

// Samples per nominal cycle: the denominator of f0/fs after reducing the
// ratio with both rates rounded to 1e-6 Hz. Throws UnsupportedRateError when
// the reduced denominator exceeds 1e6.
int derive_n(double f0_hz, double sample_rate_hz);

// First difference of the frequency series over the timestamps; index 0 is 0.
std::vector<double> rocof_track(std::span<const double> frequency_series,
                                std::span<const double> times_s);

// Sample index after which steady-state tracker outputs are considered
// converged: two nominal cycles plus 20 samples.
std::size_t convergence_index(double f0_hz, double sample_rate_hz);

// Full measurement pipeline: tracks RMS/frequency/ROCOF, primes the
// sliding-window estimator on the first N samples, applies the leakage
// correction from the first window onward whenever the tracked frequency is
// off-nominal by more than 1e-6 Hz, and emits one frame per sample starting
// at the priming window's end. Reported phasors follow the synchrophasor
// convention: for off-nominal inputs the angle advances at 2*pi*(f - f0).
std::vector<MeasurementFrame> run_pipeline(const SampleStream& stream, double f0_hz);

// Frame serialization. CSV columns:
// timestamp_s,rms,frequency_hz,rocof,sample_rate_hz,n,phasor_re,phasor_im,angle_deg
void write_frames_csv(std::span<const MeasurementFrame> frames, std::ostream& out);
nlohmann::ordered_json frames_to_json(std::span<const MeasurementFrame> frames);

} // namespace pmu
