#include "pmu/compliance.hpp"

#include "pmu/errors.hpp"
#include "pmu/reference_results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace pmu {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string format_label(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

SignalSpec strip_interference(SignalSpec spec) {
    spec.interference.clear();
    return spec;
}

} // namespace

const char* to_string(PerfClass c) { return c == PerfClass::P ? "P" : "M"; }

const char* to_string(SteadyTest t) {
    switch (t) {
    case SteadyTest::frequency:
        return "frequency";
    case SteadyTest::magnitude:
        return "magnitude";
    case SteadyTest::phase_angle:
        return "phase_angle";
    case SteadyTest::harmonic:
        return "harmonic";
    case SteadyTest::out_of_band:
        return "out_of_band";
    }
    return "unknown";
}

const char* to_string(TveDenominator d) {
    return d == TveDenominator::true_reference ? "true" : "paper";
}

TveSample tve(const PhasorEstimate& estimate, const PhasorEstimate& truth,
              TveDenominator mode) {
    const double num = (estimate.real - truth.real) * (estimate.real - truth.real) +
                       (estimate.imag - truth.imag) * (estimate.imag - truth.imag);
    const double den = mode == TveDenominator::true_reference
                           ? truth.real * truth.real + truth.imag * truth.imag
                           : estimate.real * estimate.real + estimate.imag * estimate.imag;
    if (!(den > 0.0))
        throw UndefinedReferenceError("tve: zero-magnitude reference phasor");
    return {estimate.timestamp_s, std::sqrt(num / den)};
}

PhasorEstimate true_phasor(const SignalSpec& spec, double t_s) {
    spec.validate();
    if (!spec.interference.empty())
        throw InvalidSpecError("true_phasor: reference spec must be interference-free");
    const double angle = wrap_angle(
        spec.phase_rad + kTwoPi * (spec.frequency_hz - spec.nominal_frequency_hz) * t_s);
    return make_phasor(std::polar(spec.amplitude_rms, angle), t_s);
}

double evaluation_skip_time(const CampaignContext& ctx) {
    const double dt = 1.0 / ctx.sample_rate_hz;
    const double convergence =
        static_cast<double>(convergence_index(ctx.f0_hz, ctx.sample_rate_hz)) * dt;
    return std::max(convergence, 0.25);
}

TveEvaluation evaluate_tve(std::span<const MeasurementFrame> frames,
                           const SignalSpec& reference, double reporting_rate_fps,
                           TveDenominator mode, double skip_time_s) {
    if (frames.size() < 2)
        throw InvalidSpecError("evaluate_tve: need at least 2 frames");
    if (!(reporting_rate_fps > 0.0))
        throw InvalidSpecError("evaluate_tve: reporting rate must be > 0");

    const double t0 = frames.front().timestamp_s;
    const double t_end = frames.back().timestamp_s;
    const double dt = (t_end - t0) / static_cast<double>(frames.size() - 1);

    TveEvaluation out;
    const double start = std::max(skip_time_s, t0);
    for (auto j = static_cast<std::int64_t>(std::ceil(start * reporting_rate_fps));; ++j) {
        const double t_report = static_cast<double>(j) / reporting_rate_fps;
        if (t_report > t_end)
            break;
        const auto idx = static_cast<std::size_t>(
            std::clamp<std::int64_t>(std::llround((t_report - t0) / dt), 0,
                                     static_cast<std::int64_t>(frames.size()) - 1));
        const MeasurementFrame& f = frames[idx];
        const TveSample s = tve(f.phasor, true_phasor(reference, f.timestamp_s), mode);
        out.max_tve_fraction = std::max(out.max_tve_fraction, s.tve_fraction);
        ++out.frames_evaluated;
    }
    return out;
}

std::vector<TveSample> tve_series(std::span<const MeasurementFrame> frames,
                                  const SignalSpec& reference, TveDenominator mode,
                                  double skip_time_s) {
    std::vector<TveSample> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
        if (f.timestamp_s < skip_time_s)
            continue;
        out.push_back(tve(f.phasor, true_phasor(reference, f.timestamp_s), mode));
    }
    return out;
}

RotationMeasurement measure_rotation(std::span<const MeasurementFrame> frames,
                                     double skip_time_s) {
    std::vector<double> times, angles;
    double acc = 0.0;
    bool first = true;
    double prev = 0.0;
    for (const auto& f : frames) {
        const double a = f.phasor.angle_rad;
        if (!first)
            acc += wrap_angle(a - prev);
        prev = a;
        first = false;
        if (f.timestamp_s < skip_time_s)
            continue;
        times.push_back(f.timestamp_s);
        angles.push_back(acc);
    }
    RotationMeasurement out;
    if (times.size() < 2)
        return out;

    double t_mean = 0.0, a_mean = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        t_mean += times[i];
        a_mean += angles[i];
    }
    t_mean /= static_cast<double>(times.size());
    a_mean /= static_cast<double>(times.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        sxx += (times[i] - t_mean) * (times[i] - t_mean);
        sxy += (times[i] - t_mean) * (angles[i] - a_mean);
    }
    if (!(sxx > 0.0))
        return out;
    out.slope_rad_per_s = sxy / sxx;
    if (std::abs(out.slope_rad_per_s) < 1e-6)
        return out; // stationary angle: no rotation
    out.period_s = kTwoPi / std::abs(out.slope_rad_per_s);
    out.direction = out.slope_rad_per_s < 0.0 ? RotationDirection::clockwise
                                              : RotationDirection::anticlockwise;
    return out;
}

ComplianceResult run_case(const ComplianceCase& c, const CampaignContext& ctx) {
    ComplianceResult r;
    r.test_case = c;
    try {
        const SampleStream stream = synthesize(c.signal);
        const std::vector<MeasurementFrame> frames =
            run_pipeline(stream, c.signal.nominal_frequency_hz);
        const TveEvaluation eval =
            evaluate_tve(frames, strip_interference(c.signal), c.reporting_rate_fps,
                         ctx.denominator, evaluation_skip_time(ctx));
        if (eval.frames_evaluated == 0)
            throw InvalidSpecError("no reporting frames after convergence");
        r.max_tve_fraction = eval.max_tve_fraction;
        r.frames_evaluated = eval.frames_evaluated;
    } catch (const Error& e) {
        r.error = e.what();
        r.max_tve_fraction = std::numeric_limits<double>::infinity();
    }
    r.pass = r.max_tve_fraction <= c.tve_limit_fraction;
    return r;
}

std::vector<ComplianceResult> run_frequency_test(PerfClass perf_class,
                                                 const CampaignContext& ctx,
                                                 double grid_step_hz) {
    if (!(grid_step_hz > 0.0))
        throw InvalidSpecError("run_frequency_test: grid step must be > 0");
    const double range = perf_class == PerfClass::P ? 2.0 : 5.0;
    const auto steps = static_cast<long long>(std::llround(2.0 * range / grid_step_hz));

    std::vector<ComplianceResult> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (long long k = 0; k <= steps; ++k) {
        const double f_in = ctx.f0_hz - range + static_cast<double>(k) * grid_step_hz;
        ComplianceCase c;
        c.test = SteadyTest::frequency;
        c.perf_class = perf_class;
        c.influence_value = f_in;
        c.reporting_rate_fps = ctx.reporting_rate_fps;
        c.tve_limit_fraction = 0.01;
        c.label = format_label("f_in = %.6g Hz", f_in);
        c.signal.amplitude_rms = ctx.rated_rms;
        c.signal.frequency_hz = f_in;
        c.signal.phase_rad = -std::numbers::pi / 3.0;
        c.signal.nominal_frequency_hz = ctx.f0_hz;
        c.signal.sample_rate_hz = ctx.sample_rate_hz;
        c.signal.duration_s = ctx.duration_s;
        ComplianceResult r = run_case(c, ctx);
        if (std::abs(f_in - reference::kKnownAnomalyFrequencyHz) < 1e-9)
            r.notes = reference::kKnownAnomalyNote;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ComplianceResult> run_magnitude_test(const CampaignContext& ctx) {
    // Published grid is 10 % .. 200 % without 100 %; the rated point is worth
    // covering, so it is an added grid point.
    static constexpr double kFractions[] = {0.1, 0.3, 0.5, 0.7, 0.9, 1.0,
                                            1.1, 1.3, 1.5, 1.7, 1.9, 2.0};
    std::vector<ComplianceResult> out;
    out.reserve(std::size(kFractions));
    for (const double frac : kFractions) {
        ComplianceCase c;
        c.test = SteadyTest::magnitude;
        c.perf_class = PerfClass::M; // P and M share this test
        c.influence_value = frac;
        c.reporting_rate_fps = ctx.reporting_rate_fps;
        c.tve_limit_fraction = 0.01;
        c.label = format_label("%.6g%% of rated", frac * 100.0);
        c.signal.amplitude_rms = ctx.rated_rms * frac;
        c.signal.frequency_hz = ctx.f0_hz;
        c.signal.phase_rad = -std::numbers::pi / 3.0;
        c.signal.nominal_frequency_hz = ctx.f0_hz;
        c.signal.sample_rate_hz = ctx.sample_rate_hz;
        c.signal.duration_s = ctx.duration_s;
        out.push_back(run_case(c, ctx));
    }
    return out;
}

std::vector<ComplianceResult> run_phase_test(const CampaignContext& ctx,
                                             PhaseTestMode mode) {
    std::vector<ComplianceResult> out;
    out.reserve(9);
    for (int k = 0; k <= 8; ++k) {
        const double offset = -std::numbers::pi + static_cast<double>(k) * std::numbers::pi / 4.0;
        ComplianceCase c;
        c.test = SteadyTest::phase_angle;
        c.perf_class = PerfClass::M; // P and M share this test
        c.influence_value = offset;
        c.reporting_rate_fps = ctx.reporting_rate_fps;
        c.tve_limit_fraction = 0.01;
        c.label = format_label("offset = %.6g rad", offset);
        c.signal.amplitude_rms = ctx.rated_rms;
        c.signal.frequency_hz =
            mode == PhaseTestMode::constant_angle ? ctx.f0_hz : ctx.f0_hz + 0.1;
        c.signal.phase_rad = -std::numbers::pi / 2.0 + offset;
        c.signal.nominal_frequency_hz = ctx.f0_hz;
        c.signal.sample_rate_hz = ctx.sample_rate_hz;
        c.signal.duration_s = ctx.duration_s;
        ComplianceResult r = run_case(c, ctx);
        if (mode == PhaseTestMode::gradually_varying)
            r.notes = "gradually varying angle (f_in = f0 + 0.1 Hz)";
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ComplianceResult> run_oob_test(double reporting_rate_fps,
                                           const CampaignContext& ctx, OobMode mode) {
    if (!(reporting_rate_fps > 0.0))
        throw InvalidSpecError("run_oob_test: reporting rate must be > 0");

    std::vector<ComplianceResult> out;
    if (mode == OobMode::fundamental_sweep) {
        const double band = 0.1 * (reporting_rate_fps / 2.0);
        const int points = reporting_rate_fps == 10.0 ? 9 : 11;
        const double step = 2.0 * band / static_cast<double>(points - 1);
        for (int k = 0; k < points; ++k) {
            const double f_in = ctx.f0_hz - band + static_cast<double>(k) * step;
            ComplianceCase c;
            c.test = SteadyTest::out_of_band;
            c.perf_class = PerfClass::M;
            c.influence_value = f_in;
            c.reporting_rate_fps = reporting_rate_fps;
            c.tve_limit_fraction = 0.013;
            c.label = format_label("f_in = %.6g Hz", f_in);
            c.signal.amplitude_rms = ctx.rated_rms;
            c.signal.frequency_hz = f_in;
            c.signal.phase_rad = -std::numbers::pi / 4.0;
            c.signal.nominal_frequency_hz = ctx.f0_hz;
            c.signal.sample_rate_hz = ctx.sample_rate_hz;
            c.signal.duration_s = ctx.duration_s;
            out.push_back(run_case(c, ctx));
        }
        return out;
    }

    // Interfering-tone interpretation: reference-condition fundamental plus a
    // 10 % tone swept outside the reporting passband |f - f0| >= fps/2,
    // from 10 Hz up to the second harmonic.
    std::vector<double> tone_grid;
    const double guard = reporting_rate_fps / 2.0;
    for (double f = 10.0; f <= 2.0 * ctx.f0_hz + 1e-9; f += 5.0)
        if (std::abs(f - ctx.f0_hz) >= guard - 1e-9)
            tone_grid.push_back(f);
    for (const double edge : {ctx.f0_hz - guard, ctx.f0_hz + guard})
        if (edge >= 10.0 && edge <= 2.0 * ctx.f0_hz &&
            std::find(tone_grid.begin(), tone_grid.end(), edge) == tone_grid.end())
            tone_grid.push_back(edge);
    std::sort(tone_grid.begin(), tone_grid.end());

    for (const double f_tone : tone_grid) {
        ComplianceCase c;
        c.test = SteadyTest::out_of_band;
        c.perf_class = PerfClass::M;
        c.influence_value = f_tone;
        c.reporting_rate_fps = reporting_rate_fps;
        c.tve_limit_fraction = 0.013;
        c.informational = true; // probe: a single-cycle window has no out-of-band rejection
        c.label = format_label("tone at %.6g Hz, 10%%", f_tone);
        c.signal.amplitude_rms = ctx.rated_rms;
        c.signal.frequency_hz = ctx.f0_hz;
        c.signal.phase_rad = -std::numbers::pi / 4.0;
        c.signal.nominal_frequency_hz = ctx.f0_hz;
        c.signal.sample_rate_hz = ctx.sample_rate_hz;
        c.signal.duration_s = ctx.duration_s;
        c.signal.interference.push_back({f_tone, 0.10, 0.0});
        ComplianceResult r = run_case(c, ctx);
        r.notes = "interfering-tone interpretation; single-cycle window applies no out-of-band filtering";
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ComplianceResult> run_harmonic_probe(const CampaignContext& ctx, bool strict) {
    std::vector<ComplianceResult> out;
    out.reserve(2 * 49);
    struct Level {
        double fraction;
        PerfClass perf_class;
    };
    for (const Level level : {Level{0.01, PerfClass::P}, Level{0.10, PerfClass::M}}) {
        for (int order = 2; order <= 50; ++order) {
            const double f_tone = static_cast<double>(order) * ctx.f0_hz;
            if (f_tone >= ctx.sample_rate_hz / 2.0)
                break; // beyond Nyquist for this sampling rate
            ComplianceCase c;
            c.test = SteadyTest::harmonic;
            c.perf_class = level.perf_class;
            c.influence_value = static_cast<double>(order);
            c.reporting_rate_fps = ctx.reporting_rate_fps;
            c.tve_limit_fraction = 0.01;
            c.informational = !strict;
            c.label = format_label("order %.6g", static_cast<double>(order)) +
                      format_label(" at %.6g%%", level.fraction * 100.0);
            c.signal.amplitude_rms = ctx.rated_rms;
            c.signal.frequency_hz = ctx.f0_hz;
            c.signal.phase_rad = 0.0;
            c.signal.nominal_frequency_hz = ctx.f0_hz;
            c.signal.sample_rate_hz = ctx.sample_rate_hz;
            c.signal.duration_s = ctx.duration_s;
            c.signal.interference.push_back({f_tone, level.fraction, 0.0});
            ComplianceResult r = run_case(c, ctx);
            r.notes = "probe only: the fundamental-bin estimate cannot measure components at or "
                      "above 2*f0 (documented limitation)";
            out.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace pmu
