#include "pmu/trackers.hpp"

#include "pmu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

namespace pmu {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kExtremumBand = 1e-6; // |u| > 1 - band is too close to +-1 for arccos

// Compensated complex accumulator; the steady-state demodulation sums tens of
// thousands of terms and the amplitude residual must stay near 1e-13 relative.
struct KahanSum {
    std::complex<double> sum{0.0, 0.0};
    std::complex<double> carry{0.0, 0.0};

    void add(std::complex<double> v) {
        const std::complex<double> y = v - carry;
        const std::complex<double> t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double median_of(std::vector<double> v) {
    if (v.empty())
        return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

// Demodulates the stream at angular frequency omega over [first, first+count):
//   y = (sqrt(2)/count) * sum v(k) * exp(-j*omega*t_k)
//   b = (1/count)       * sum        exp(-j*2*omega*t_k)
// b is the self-conjugate leakage coefficient of the same window, obtained
// for free by squaring the demodulation phasor.
struct Demod {
    std::complex<double> y;
    std::complex<double> b;
};

Demod demodulate(const SampleStream& s, double omega, std::size_t first, std::size_t count) {
    KahanSum y, b;
    for (std::size_t k = first; k < first + count; ++k) {
        const double ang = omega * s.times_s[k];
        const std::complex<double> w{std::cos(ang), -std::sin(ang)};
        y.add(s.values[k] * w);
        b.add(w * w);
    }
    const double inv = 1.0 / static_cast<double>(count);
    return {y.sum * (std::numbers::sqrt2 * inv), b.sum * inv};
}

// Removes the conjugate-image leakage: solves y = z + b*conj(z) for z.
std::complex<double> remove_conjugate_image(std::complex<double> y, std::complex<double> b) {
    const double det = 1.0 - std::norm(b);
    if (std::abs(det) <= 1e-9)
        throw UnrecoverableCorrectionError("steady-state demodulation is near-singular");
    return (y - b * std::conj(y)) / det;
}

struct SteadyEstimate {
    bool ok = false;
    double frequency_hz = 0.0;
    double amplitude_rms = 0.0;
    int iterations = 0;
};

// Iterative steady-state refinement. Starting from a seed frequency, each
// pass demodulates the two stream halves at the current frequency, removes
// the conjugate image, and reads the remaining frequency error from the
// phase advance between the half-window phasors. For a constant-frequency
// input this converges to the true (frequency, RMS amplitude) pair at double
// precision; interference only shifts the fixed point by its own leakage.
SteadyEstimate refine_steady_state(const SampleStream& s, double seed_f_hz,
                                   double stream_rms) {
    SteadyEstimate out;
    const std::size_t m = s.size();
    if (m < 16 || !(seed_f_hz > 0.0) || !std::isfinite(seed_f_hz))
        return out;

    const double span_s = s.times_s.back() - s.times_s.front();
    if (span_s * seed_f_hz < 2.0) // need at least two cycles of signal
        return out;

    const std::size_t half = m / 2;
    const double t1 = 0.5 * (s.times_s[0] + s.times_s[half - 1]);
    const double t2 = 0.5 * (s.times_s[half] + s.times_s[2 * half - 1]);
    const double baseline_s = t2 - t1;
    if (!(baseline_s > 0.0))
        return out;

    double f = seed_f_hz;
    bool converged = false;
    int iter = 0;
    for (; iter < 60; ++iter) {
        const double omega = kTwoPi * f;
        std::complex<double> z1, z2;
        try {
            const Demod d1 = demodulate(s, omega, 0, half);
            const Demod d2 = demodulate(s, omega, half, half);
            z1 = remove_conjugate_image(d1.y, d1.b);
            z2 = remove_conjugate_image(d2.y, d2.b);
        } catch (const UnrecoverableCorrectionError&) {
            return out;
        }
        if (std::abs(z1) == 0.0 || std::abs(z2) == 0.0)
            return out;

        const double dphi = std::arg(z2 * std::conj(z1));
        double df = dphi / (kTwoPi * baseline_s);
        df = std::clamp(df, -2.0, 2.0);
        f += df;
        if (!(f > 0.0) || !std::isfinite(f))
            return out;
        if (std::abs(df) < 1e-12) {
            converged = true;
            break;
        }
    }
    if (!converged)
        return out;

    std::complex<double> z_full;
    try {
        const Demod d = demodulate(s, kTwoPi * f, 0, m);
        z_full = remove_conjugate_image(d.y, d.b);
    } catch (const UnrecoverableCorrectionError&) {
        return out;
    }

    const double amp = std::abs(z_full);
    if (!(amp > 0.0))
        return out;
    // A fixed point far from its seed means the iteration left the seed's
    // basin; a recovered amplitude far from the stream RMS means the seed
    // found leakage, not the fundamental. Both indicate the steady model
    // does not hold at this seed.
    if (std::abs(f - seed_f_hz) > 0.5)
        return out;
    if (stream_rms > 0.0 && (amp < 0.3 * stream_rms || amp > 3.0 * stream_rms))
        return out;

    out.ok = true;
    out.frequency_hz = f;
    out.amplitude_rms = amp;
    out.iterations = iter + 1;
    return out;
}

double whole_stream_rms(const SampleStream& s) {
    double acc = 0.0;
    for (const double v : s.values)
        acc += v * v;
    return std::sqrt(acc / static_cast<double>(s.size()));
}

// Refines from every seed and keeps the candidate that recovers the most
// amplitude: the fundamental dominates any leakage fixed point, so seeding
// from the nominal frequency rescues streams whose zero crossings are
// corrupted by strong interference.
SteadyEstimate select_steady_estimate(const SampleStream& s,
                                      std::initializer_list<double> seeds) {
    const double stream_rms = whole_stream_rms(s);
    SteadyEstimate best;
    for (const double seed : seeds) {
        if (best.ok && std::abs(seed - best.frequency_hz) < 1e-9)
            continue; // already converged from an equivalent seed
        const SteadyEstimate cand = refine_steady_state(s, seed, stream_rms);
        if (cand.ok && (!best.ok || cand.amplitude_rms > best.amplitude_rms))
            best = cand;
    }
    return best;
}

// Index from which the refined steady-state value replaces the raw series:
// first crossing plus two mean periods plus the moving-average depth.
std::size_t refined_splice_index(const CyclePeriods& cycles, std::size_t m) {
    const double mean_period =
        static_cast<double>(cycles.crossing_samples.back() - cycles.crossing_samples.front()) /
        static_cast<double>(cycles.period_samples.size());
    const auto splice = static_cast<std::size_t>(
        cycles.crossing_samples.front() + 2.0 * mean_period + 20.0);
    return std::min(splice, m);
}

double coarse_frequency_from_cycles(const CyclePeriods& cycles, const SampleStream& s) {
    const double dt =
        (s.times_s.back() - s.times_s.front()) / static_cast<double>(s.size() - 1);
    const double mean_period =
        static_cast<double>(cycles.crossing_samples.back() - cycles.crossing_samples.front()) /
        static_cast<double>(cycles.period_samples.size());
    return 1.0 / (mean_period * dt);
}

} // namespace

CyclePeriods detect_zero_crossing_period(const SampleStream& stream) {
    stream.validate();

    CyclePeriods out;
    const auto& v = stream.values;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i - 1] < 0.0 && v[i] >= 0.0))
            continue;
        const double frac = v[i - 1] / (v[i - 1] - v[i]);
        const double pos = static_cast<double>(i - 1) + frac;
        const auto rounded = static_cast<std::int64_t>(std::llround(pos));
        if (!out.crossing_samples.empty() && rounded <= out.crossing_samples.back())
            continue;
        out.crossing_samples.push_back(rounded);
    }
    if (out.crossing_samples.size() < 2)
        throw UntrackableSignalError(
            "zero-crossing detection: fewer than two rising crossings in stream");

    out.period_samples.reserve(out.crossing_samples.size() - 1);
    for (std::size_t i = 1; i < out.crossing_samples.size(); ++i)
        out.period_samples.push_back(
            static_cast<int>(out.crossing_samples[i] - out.crossing_samples[i - 1]));
    return out;
}

std::vector<double> rms_track(const SampleStream& stream) {
    const CyclePeriods cycles = detect_zero_crossing_period(stream);
    const std::size_t m = stream.size();
    const auto& v = stream.values;

    std::vector<double> sq_prefix(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        sq_prefix[i + 1] = sq_prefix[i] + v[i] * v[i];

    // Whole-sample period assigned to each sample: the period of the cycle
    // containing it, clamped to the first/last detected cycle.
    std::vector<double> raw(m, 0.0);
    std::size_t cycle = 0;
    for (std::size_t i = 0; i < m; ++i) {
        while (cycle + 1 < cycles.period_samples.size() &&
               static_cast<std::int64_t>(i) >= cycles.crossing_samples[cycle + 1])
            ++cycle;
        const auto t = static_cast<std::size_t>(cycles.period_samples[cycle]);
        const std::size_t start = std::min(i, m - std::min(t, m));
        const std::size_t stop = std::min(start + t, m);
        raw[i] = std::sqrt((sq_prefix[stop] - sq_prefix[start]) /
                           static_cast<double>(stop - start));
    }

    // 15-point trailing moving average, partial while fewer values exist.
    std::vector<double> series(m, 0.0);
    double window_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        window_sum += raw[i];
        if (i >= 15)
            window_sum -= raw[i - 15];
        series[i] = window_sum / static_cast<double>(std::min<std::size_t>(i + 1, 15));
    }

    const std::size_t splice = refined_splice_index(cycles, m);
    const SteadyEstimate refined =
        select_steady_estimate(stream, {coarse_frequency_from_cycles(cycles, stream)});
    if (refined.ok)
        std::fill(series.begin() + static_cast<std::ptrdiff_t>(splice), series.end(),
                  refined.amplitude_rms);
    return series;
}

std::vector<double> frequency_track(const SampleStream& stream,
                                    std::span<const double> rms_series) {
    stream.validate();
    const std::size_t m = stream.size();
    if (rms_series.size() != m)
        throw InvalidSpecError("frequency_track: rms series length differs from stream");
    const auto& v = stream.values;
    const auto& t = stream.times_s;

    // Normalized waveform and its arccos principal phase.
    std::vector<double> u(m, 0.0), psi(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double vmax = std::numbers::sqrt2 * rms_series[i];
        if (!(vmax > 0.0))
            throw UntrackableSignalError(
                "frequency tracking: zero normalization amplitude at sample " +
                std::to_string(i));
        u[i] = std::clamp(v[i] / vmax, -1.0, 1.0);
        psi[i] = std::acos(u[i]);
    }

    // Central-difference slope sign; the monotonic arccos branch is only
    // usable between extrema, so pairs with a slope flip are excluded.
    auto slope_sign = [&](std::size_t i) -> int {
        const double lo = i > 0 ? v[i - 1] : v[i];
        const double hi = i + 1 < m ? v[i + 1] : v[i];
        const double d = hi - lo;
        return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    };

    std::vector<double> series(m, 0.0);
    std::vector<double> recent; // last up-to-20 valid raw estimates
    recent.reserve(21);
    double recent_sum = 0.0;
    std::size_t first_filled = m;
    for (std::size_t i = 1; i < m; ++i) {
        const int s_prev = slope_sign(i - 1);
        const int s_here = slope_sign(i);
        const bool usable = s_prev != 0 && s_prev == s_here &&
                            std::abs(u[i - 1]) <= 1.0 - kExtremumBand &&
                            std::abs(u[i]) <= 1.0 - kExtremumBand;
        if (usable) {
            const double dpsi = psi[i] - psi[i - 1];
            const double f_raw =
                (s_here < 0 ? dpsi : -dpsi) / (kTwoPi * (t[i] - t[i - 1]));
            recent.push_back(f_raw);
            recent_sum += f_raw;
            if (recent.size() > 20) {
                recent_sum -= recent.front();
                recent.erase(recent.begin());
            }
            if (first_filled == m)
                first_filled = i;
        }
        series[i] = recent.empty() ? 0.0
                                   : recent_sum / static_cast<double>(recent.size());
    }
    if (first_filled == m)
        return series; // no usable pairs (e.g. constant input): all zeros
    for (std::size_t i = 0; i < first_filled; ++i)
        series[i] = series[first_filled];

    // Steady-state refinement, seeded by the crossing-derived coarse value
    // (or the arccos median when too few crossings exist).
    double coarse_f = median_of(
        std::vector<double>(series.begin() + static_cast<std::ptrdiff_t>(m / 2), series.end()));
    std::size_t splice = m;
    try {
        const CyclePeriods cycles = detect_zero_crossing_period(stream);
        coarse_f = coarse_frequency_from_cycles(cycles, stream);
        splice = refined_splice_index(cycles, m);
    } catch (const UntrackableSignalError&) {
        // keep the arccos-derived coarse value; refinement may still work
        splice = std::min(m, static_cast<std::size_t>(m / 2));
    }
    const SteadyEstimate refined = select_steady_estimate(stream, {coarse_f});
    if (refined.ok)
        std::fill(series.begin() + static_cast<std::ptrdiff_t>(splice), series.end(),
                  refined.frequency_hz);
    return series;
}

std::vector<double> detect_sample_rate(std::span<const double> times_s) {
    if (times_s.size() < 2)
        throw InvalidTimebaseError("sample-rate detection: need at least 2 timestamps");
    std::vector<double> fs(times_s.size(), 0.0);
    for (std::size_t i = 1; i < times_s.size(); ++i) {
        const double dt = times_s[i] - times_s[i - 1];
        if (!(dt > 0.0))
            throw InvalidTimebaseError(
                "sample-rate detection: non-increasing timestamp at index " +
                std::to_string(i));
        fs[i] = 1.0 / dt;
    }
    fs[0] = fs[1];
    return fs;
}

int derive_n(double f0_hz, double sample_rate_hz) {
    if (!(f0_hz > 0.0) || !(sample_rate_hz > 0.0))
        throw InvalidSpecError("derive_n: rates must be > 0");
    // Rates are meaningful to 1e-6 Hz; reduce the ratio in micro-hertz.
    const auto micro_f0 = static_cast<long long>(std::llround(f0_hz * 1e6));
    const auto micro_fs = static_cast<long long>(std::llround(sample_rate_hz * 1e6));
    if (micro_f0 <= 0 || micro_fs <= 0)
        throw InvalidSpecError("derive_n: rates vanish at 1e-6 Hz resolution");
    const long long g = std::gcd(micro_f0, micro_fs);
    const long long denom = micro_fs / g;
    if (denom > 1000000)
        throw UnsupportedRateError("derive_n: reduced denominator " + std::to_string(denom) +
                                   " exceeds 1e6; rates are incommensurate");
    return static_cast<int>(denom);
}

std::vector<double> rocof_track(std::span<const double> frequency_series,
                                std::span<const double> times_s) {
    if (frequency_series.size() != times_s.size())
        throw InvalidSpecError("rocof_track: series length differs from timestamps");
    if (times_s.size() < 2)
        throw InvalidTimebaseError("rocof_track: need at least 2 samples");
    std::vector<double> rocof(times_s.size(), 0.0);
    for (std::size_t i = 1; i < times_s.size(); ++i) {
        const double dt = times_s[i] - times_s[i - 1];
        if (!(dt > 0.0))
            throw InvalidTimebaseError("rocof_track: non-increasing timestamp at index " +
                                       std::to_string(i));
        rocof[i] = (frequency_series[i] - frequency_series[i - 1]) / dt;
    }
    return rocof;
}

std::size_t convergence_index(double f0_hz, double sample_rate_hz) {
    return 2 * static_cast<std::size_t>(derive_n(f0_hz, sample_rate_hz)) + 20;
}

std::vector<MeasurementFrame> run_pipeline(const SampleStream& stream, double f0_hz) {
    stream.validate();
    const std::size_t m = stream.size();
    const auto& t = stream.times_s;

    const double dt = (t.back() - t.front()) / static_cast<double>(m - 1);
    const double fs = 1.0 / dt;
    const int n = derive_n(f0_hz, fs);
    if (n < 2)
        throw UnsupportedRateError("pipeline: fewer than 2 samples per nominal cycle");
    if (m < 2 * static_cast<std::size_t>(n))
        throw InvalidSpecError("pipeline: stream shorter than 2 nominal cycles (needs " +
                               std::to_string(2 * n) + " samples, got " + std::to_string(m) +
                               ")");

    const std::vector<double> fs_series = detect_sample_rate(t);
    std::vector<double> rms_series = rms_track(stream);
    std::vector<double> freq_series = frequency_track(stream, rms_series);

    // Repeat the steady-state selection with the nominal frequency as an
    // extra seed: it rescues streams whose zero crossings are corrupted by
    // strong interference (the per-track refinement only sees the
    // crossing-derived seed). For clean inputs this reproduces the values
    // the tracks already spliced in.
    double pipeline_coarse = f0_hz;
    std::size_t splice = std::min(m, static_cast<std::size_t>(m / 2));
    try {
        const CyclePeriods cycles = detect_zero_crossing_period(stream);
        pipeline_coarse = coarse_frequency_from_cycles(cycles, stream);
        splice = refined_splice_index(cycles, m);
    } catch (const UntrackableSignalError&) {
    }
    const SteadyEstimate steady =
        select_steady_estimate(stream, {pipeline_coarse, f0_hz});
    if (steady.ok) {
        std::fill(rms_series.begin() + static_cast<std::ptrdiff_t>(splice),
                  rms_series.end(), steady.amplitude_rms);
        std::fill(freq_series.begin() + static_cast<std::ptrdiff_t>(splice),
                  freq_series.end(), steady.frequency_hz);
    }
    const std::vector<double> rocof_series = rocof_track(freq_series, t);

    const double f_est = freq_series.back();
    const double omega0 = kTwoPi * f0_hz;
    const bool off_nominal = std::abs(f_est - f0_hz) > 1e-6;
    const double omega = kTwoPi * f_est;
    const double delta_omega = omega - omega0;
    const PqCoefficients pq =
        off_nominal ? pq_coefficients(n, omega, omega0, dt) : PqCoefficients{};

    RecursiveEstimator estimator(n, dt, omega0);
    estimator.prime(std::span<const double>(stream.values.data(), static_cast<std::size_t>(n)),
                    t[static_cast<std::size_t>(n) - 1]);

    auto report = [&](const PhasorEstimate& raw, std::int64_t window_start,
                      double timestamp) -> PhasorEstimate {
        if (!off_nominal)
            return raw;
        const PhasorEstimate constant =
            correct_first_window(raw, pq, window_start, omega, omega0, dt);
        // Synchrophasor convention: the reported angle advances at the
        // off-nominal beat rate relative to the nominal reference.
        const double beat = delta_omega * timestamp;
        return make_phasor(constant.value() *
                               std::complex<double>(std::cos(beat), std::sin(beat)),
                           timestamp);
    };

    std::vector<MeasurementFrame> frames;
    frames.reserve(m - static_cast<std::size_t>(n) + 1);
    auto emit = [&](std::size_t sample_idx, const PhasorEstimate& raw,
                    std::int64_t window_start) {
        MeasurementFrame f;
        f.timestamp_s = t[sample_idx];
        f.rms = rms_series[sample_idx];
        f.frequency_hz = freq_series[sample_idx];
        f.rocof_hz_per_s = rocof_series[sample_idx];
        f.sample_rate_hz = fs_series[sample_idx];
        f.n_samples_per_cycle = n;
        f.phasor = report(raw, window_start, t[sample_idx]);
        frames.push_back(f);
    };

    emit(static_cast<std::size_t>(n) - 1, estimator.current(), 0);
    for (std::size_t k = static_cast<std::size_t>(n); k < m; ++k) {
        const PhasorEstimate raw = estimator.update(stream.values[k], t[k]);
        emit(k, raw, estimator.window_start_index());
    }
    return frames;
}

void write_frames_csv(std::span<const MeasurementFrame> frames, std::ostream& out) {
    out << "timestamp_s,rms,frequency_hz,rocof,sample_rate_hz,n,phasor_re,phasor_im,angle_deg\n";
    char line[256];
    for (const auto& f : frames) {
        std::snprintf(line, sizeof line,
                      "%.12e,%.12e,%.12e,%.12e,%.12e,%d,%.12e,%.12e,%.12e\n", f.timestamp_s,
                      f.rms, f.frequency_hz, f.rocof_hz_per_s, f.sample_rate_hz,
                      f.n_samples_per_cycle, f.phasor.real, f.phasor.imag,
                      f.phasor.angle_rad * (180.0 / std::numbers::pi));
        out << line;
    }
}

nlohmann::ordered_json frames_to_json(std::span<const MeasurementFrame> frames) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : frames) {
        arr.push_back({{"timestamp_s", f.timestamp_s},
                       {"rms", f.rms},
                       {"frequency_hz", f.frequency_hz},
                       {"rocof", f.rocof_hz_per_s},
                       {"sample_rate_hz", f.sample_rate_hz},
                       {"n", f.n_samples_per_cycle},
                       {"phasor_re", f.phasor.real},
                       {"phasor_im", f.phasor.imag},
                       {"angle_deg", f.phasor.angle_rad * (180.0 / std::numbers::pi)}});
    }
    return arr;
}

} // namespace pmu
