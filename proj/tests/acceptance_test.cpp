// End-to-end acceptance gate: one PASS/FAIL line per criterion, nonzero exit
// on any failure. Tolerances are pinned here on purpose; loosening them is a
// behavior change, not a test fix.
#include "pmu/compliance.hpp"
#include "pmu/errors.hpp"
#include "pmu/phasor_core.hpp"
#include "pmu/reference_results.hpp"
#include "pmu/trackers.hpp"
#include "pmu/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

using namespace pmu;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDegPerRad = 180.0 / std::numbers::pi;

// reproduction of the worked inputs
constexpr double kReproductionAbsTol = 1e-9;  // V, Hz, and degrees
constexpr double kRotationPeriodRelTol = 0.01;
// steady-state sweeps
constexpr double kNominalTveMax = 1e-10;        // fraction, nominal-frequency cases
constexpr double kSweepFloorTveMax = 1e-10;     // fraction, magnitude/phase sweeps
constexpr double kPOffNominalTveMax = 1e-4;     // fraction (0.01 %)
constexpr double kMClassTveMax = 0.01;          // fraction (1 %)
constexpr double kMClassAnomalyTveMax = 0.02;   // fraction (2 %), 53 Hz allowance
constexpr double kOobHardLimitFraction = 0.013; // standard limit, every point
constexpr double kOobPerPointMax10 = 1e-4;      // fraction (0.01 %), 10 fps points
constexpr double kOobWorstMax10 = 7.8e-5;       // published worst 0.0052 % + 50 % headroom
constexpr double kOobWorstMax25 = 1.8e-5;       // published worst 0.0012 % + 50 % headroom
// numerical identities
constexpr double kUpdateOracleRelTol = 1e-12; // recursive update vs direct transform
constexpr double kIdentityTol = 1e-12;        // correction round-trip, TVE identities
constexpr double kProbeAgreementTol = 1e-9;   // pipeline vs direct-summation probe TVE
constexpr double kEvaluationSkipS = 0.25;

int g_failed = 0;

void run_criterion(const char* name, const std::function<std::pair<bool, std::string>()>& fn) {
    bool ok = false;
    std::string detail;
    try {
        const auto r = fn();
        ok = r.first;
        detail = r.second;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    std::printf("%s: %s (%s)\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok)
        ++g_failed;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

SignalSpec steady_spec(double f_hz, double phase_rad, double duration_s = 5.0) {
    SignalSpec spec;
    spec.amplitude_rms = 230.0;
    spec.frequency_hz = f_hz;
    spec.phase_rad = phase_rad;
    spec.duration_s = duration_s;
    return spec;
}

double angle_err_deg(double got_rad, double want_rad) {
    return std::abs(wrap_angle(got_rad - want_rad)) * kDegPerRad;
}

struct OffNominalRun {
    double f_in = 0.0;
    std::vector<MeasurementFrame> frames;
};

// Direct-summation replica of the pipeline's reported phasor at the same
// reporting instants: windowed transform per frame, then the identical
// correction and rotating-reference convention. Shares nothing with the
// recursive estimator except the published formulas.
double direct_max_tve(const SignalSpec& signal, const SampleStream& stream,
                      std::span<const MeasurementFrame> frames, double fps, double skip) {
    const std::size_t m = stream.size();
    const int n = frames.front().n_samples_per_cycle;
    const double theta = kTwoPi / static_cast<double>(n);
    const double dt = (stream.times_s.back() - stream.times_s.front()) /
                      static_cast<double>(m - 1);
    const double f0 = signal.nominal_frequency_hz;
    const double omega0 = kTwoPi * f0;
    const double f_est = frames.back().frequency_hz;
    const bool off_nominal = std::abs(f_est - f0) > 1e-6;
    const double omega = kTwoPi * f_est;
    const PqCoefficients pq =
        off_nominal ? pq_coefficients(n, omega, omega0, dt) : PqCoefficients{};

    SignalSpec clean = signal;
    clean.interference.clear();

    const double t0 = frames.front().timestamp_s;
    const double t_end = frames.back().timestamp_s;
    const double frame_dt = (t_end - t0) / static_cast<double>(frames.size() - 1);

    double worst = 0.0;
    for (auto j = static_cast<std::int64_t>(std::ceil(std::max(skip, t0) * fps));; ++j) {
        const double t_report = static_cast<double>(j) / fps;
        if (t_report > t_end)
            break;
        const auto idx = static_cast<std::size_t>(
            std::clamp<std::int64_t>(std::llround((t_report - t0) / frame_dt), 0,
                                     static_cast<std::int64_t>(frames.size()) - 1));
        const double t_frame = frames[idx].timestamp_s;
        const PhasorEstimate w = dft_window(
            std::span<const double>(stream.values.data() + idx, static_cast<std::size_t>(n)),
            theta, t_frame);
        PhasorEstimate est = make_phasor(
            w.value() * std::polar(1.0, -theta * static_cast<double>(idx)), t_frame);
        if (off_nominal) {
            est = correct_first_window(est, pq, static_cast<std::int64_t>(idx), omega, omega0,
                                       dt);
            est = make_phasor(est.value() * std::polar(1.0, (omega - omega0) * t_frame),
                              t_frame);
        }
        worst = std::max(worst,
                         tve(est, true_phasor(clean, t_frame)).tve_fraction);
    }
    return worst;
}

} // namespace

int main() {
    const CampaignContext ctx; // 50 Hz, 230 V, 10 kHz, 5 s, 25 fps

    // Shared runs for the off-nominal reproduction and rotation criteria.
    std::vector<OffNominalRun> off_runs;
    try {
        for (const double f_in : {49.5, 49.7, 50.3, 50.7}) {
            OffNominalRun run;
            run.f_in = f_in;
            run.frames =
                run_pipeline(synthesize(steady_spec(f_in, std::numbers::pi / 2.0)), 50.0);
            off_runs.push_back(std::move(run));
        }
    } catch (const std::exception& e) {
        std::printf("FAIL: off-nominal pipeline setup (exception: %s)\n", e.what());
        ++g_failed;
    }

    run_criterion("nominal reproduction at four reported angles", [&] {
        double worst_rms = 0.0, worst_f = 0.0, worst_angle = 0.0;
        for (const double deg : {-30.0, 0.0, 30.0, 180.0}) {
            const SignalSpec spec = steady_spec(50.0, deg / kDegPerRad);
            const MeasurementFrame last = run_pipeline(synthesize(spec), 50.0).back();
            worst_rms = std::max(worst_rms, std::abs(last.rms - 230.0));
            worst_f = std::max(worst_f, std::abs(last.frequency_hz - 50.0));
            worst_angle =
                std::max(worst_angle, angle_err_deg(last.phasor.angle_rad, deg / kDegPerRad));
        }
        const bool ok = worst_rms <= kReproductionAbsTol && worst_f <= kReproductionAbsTol &&
                        worst_angle <= kReproductionAbsTol;
        return std::make_pair(ok, fmt("worst rms err %.2e V, freq err %.2e Hz, angle err %.2e deg",
                                      worst_rms, worst_f, worst_angle));
    });

    run_criterion("off-nominal amplitude and frequency recovery", [&] {
        if (off_runs.size() != 4)
            return std::make_pair(false, std::string("setup failed"));
        double worst_rms = 0.0, worst_f = 0.0;
        for (const OffNominalRun& run : off_runs) {
            const MeasurementFrame& last = run.frames.back();
            worst_rms = std::max(worst_rms, std::abs(last.rms - 230.0));
            worst_f = std::max(worst_f, std::abs(last.frequency_hz - run.f_in));
        }
        const bool ok = worst_rms <= kReproductionAbsTol && worst_f <= kReproductionAbsTol;
        return std::make_pair(ok, fmt("worst rms err %.2e V, freq err %.2e Hz", worst_rms,
                                      worst_f));
    });

    run_criterion("rotation periods and directions for off-nominal inputs", [&] {
        if (off_runs.size() != 4)
            return std::make_pair(false, std::string("setup failed"));
        double worst_period_err = 0.0;
        bool directions_ok = true;
        for (const OffNominalRun& run : off_runs) {
            const RotationMeasurement got = measure_rotation(run.frames, kEvaluationSkipS);
            const RotationPeriod want = rotation_period(run.f_in, 50.0);
            if (!got.period_s || !want.period_s || got.direction != want.direction) {
                directions_ok = false;
                continue;
            }
            worst_period_err =
                std::max(worst_period_err, std::abs(*got.period_s - *want.period_s) /
                                               *want.period_s);
        }
        const bool ok = directions_ok && worst_period_err <= kRotationPeriodRelTol;
        return std::make_pair(ok, fmt("worst period err %.2e, directions ", worst_period_err) +
                                      (directions_ok ? "as expected" : "wrong"));
    });

    run_criterion("frequency-sweep vector error within class limits", [&] {
        double worst_p = 0.0, worst_nominal = 0.0, worst_m = 0.0, at_53 = 0.0;
        bool rows_ok = true, anomaly_noted = false;
        for (const ComplianceResult& r : run_frequency_test(PerfClass::P, ctx)) {
            if (!r.error.empty())
                rows_ok = false;
            if (std::abs(r.test_case.influence_value - 50.0) < 1e-9)
                worst_nominal = std::max(worst_nominal, r.max_tve_fraction);
            else
                worst_p = std::max(worst_p, r.max_tve_fraction);
        }
        for (const ComplianceResult& r : run_frequency_test(PerfClass::M, ctx)) {
            if (!r.error.empty())
                rows_ok = false;
            if (std::abs(r.test_case.influence_value - 53.0) < 1e-9) {
                at_53 = r.max_tve_fraction;
                anomaly_noted = r.notes == reference::kKnownAnomalyNote;
            } else if (std::abs(r.test_case.influence_value - 50.0) < 1e-9) {
                worst_nominal = std::max(worst_nominal, r.max_tve_fraction);
            } else {
                worst_m = std::max(worst_m, r.max_tve_fraction);
            }
        }
        const bool ok = rows_ok && anomaly_noted && worst_p <= kPOffNominalTveMax &&
                        worst_nominal <= kNominalTveMax && worst_m <= kMClassTveMax &&
                        at_53 <= kMClassAnomalyTveMax;
        return std::make_pair(
            ok, fmt("P worst %.2e, M worst %.2e, 53 Hz %.2e, anomaly note ", worst_p, worst_m,
                    at_53) +
                    (anomaly_noted ? "present" : "MISSING"));
    });

    run_criterion("magnitude-sweep vector error at the numeric floor", [&] {
        double worst = 0.0;
        bool rows_ok = true;
        const std::vector<ComplianceResult> rows = run_magnitude_test(ctx);
        if (rows.size() != 12)
            rows_ok = false;
        for (const ComplianceResult& r : rows) {
            if (!r.error.empty())
                rows_ok = false;
            worst = std::max(worst, r.max_tve_fraction);
        }
        return std::make_pair(rows_ok && worst <= kSweepFloorTveMax,
                              fmt("worst fraction %.2e over %g points", worst,
                                  static_cast<double>(rows.size())));
    });

    run_criterion("phase-sweep vector error at the numeric floor", [&] {
        double worst = 0.0;
        bool rows_ok = true;
        const std::vector<ComplianceResult> rows = run_phase_test(ctx);
        if (rows.size() != 9)
            rows_ok = false;
        for (const ComplianceResult& r : rows) {
            if (!r.error.empty())
                rows_ok = false;
            worst = std::max(worst, r.max_tve_fraction);
        }
        return std::make_pair(rows_ok && worst <= kSweepFloorTveMax,
                              fmt("worst fraction %.2e over %g points", worst,
                                  static_cast<double>(rows.size())));
    });

    run_criterion("out-of-band sweeps hold their margins at both rates", [&] {
        double worst10 = 0.0, worst25 = 0.0;
        bool rows_ok = true;
        for (const ComplianceResult& r : run_oob_test(10.0, ctx)) {
            if (!r.error.empty() || r.max_tve_fraction > kOobHardLimitFraction ||
                r.max_tve_fraction > kOobPerPointMax10)
                rows_ok = false;
            worst10 = std::max(worst10, r.max_tve_fraction);
        }
        for (const ComplianceResult& r : run_oob_test(25.0, ctx)) {
            if (!r.error.empty() || r.max_tve_fraction > kOobHardLimitFraction)
                rows_ok = false;
            worst25 = std::max(worst25, r.max_tve_fraction);
        }
        const bool ok =
            rows_ok && worst10 <= kOobWorstMax10 && worst25 <= kOobWorstMax25;
        return std::make_pair(ok,
                              fmt("worst fraction %.2e at 10 fps, %.2e at 25 fps", worst10,
                                  worst25));
    });

    run_criterion("recursive update tracks the direct transform on random inputs", [&] {
        std::mt19937 rng(12345u);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        constexpr int kSpecs = 100;
        constexpr std::size_t kUpdates = 10000;
        const int n = 200;
        const double theta = kTwoPi / n;

        // twiddle table shared by every oracle evaluation
        std::vector<std::complex<double>> tw(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            tw[static_cast<std::size_t>(k)] = std::polar(1.0, -theta * k);

        double worst_rel = 0.0;
        for (int s = 0; s < kSpecs; ++s) {
            SignalSpec spec;
            spec.amplitude_rms = 1.0 + 10999.0 * u01(rng);
            spec.frequency_hz = 45.0 + 10.0 * u01(rng);
            spec.phase_rad = std::numbers::pi - kTwoPi * u01(rng); // (-pi, pi]
            spec.duration_s = 1.02; // window plus 10^4 updates
            const SampleStream stream = synthesize(spec);

            RecursiveEstimator est(n, 1e-4, kTwoPi * 50.0);
            est.prime(std::span<const double>(stream.values.data(), 200),
                      stream.times_s[199]);
            for (std::size_t k = 200; k < 200 + kUpdates; ++k) {
                const PhasorEstimate e = est.update(stream.values[k], stream.times_s[k]);
                const auto u = static_cast<std::size_t>(est.window_start_index());
                std::complex<double> acc{0.0, 0.0};
                for (int i = 0; i < n; ++i)
                    acc += stream.values[u + static_cast<std::size_t>(i)] *
                           tw[static_cast<std::size_t>(i)];
                const std::complex<double> oracle = acc * (std::numbers::sqrt2 / n) *
                                                    std::polar(1.0, -theta *
                                                                        static_cast<double>(u));
                worst_rel =
                    std::max(worst_rel, std::abs(e.value() - oracle) / std::abs(oracle));
            }
        }
        return std::make_pair(worst_rel <= kUpdateOracleRelTol,
                              fmt("worst relative deviation %.2e over %g specs", worst_rel,
                                  static_cast<double>(kSpecs)));
    });

    run_criterion("leakage coefficients and first-window correction invert exactly", [&] {
        const double omega0 = kTwoPi * 50.0;
        const PqCoefficients trivial = pq_coefficients(200, omega0, omega0, 1e-4);
        if (trivial.p != std::complex<double>(1.0, 0.0) ||
            trivial.q != std::complex<double>(0.0, 0.0))
            return std::make_pair(false, std::string("nominal coefficients are not (1, 0)"));

        double worst_rel = 0.0;
        for (const double f_in : {49.5, 49.7, 50.3, 50.7}) {
            const double omega = kTwoPi * f_in;
            const PqCoefficients pq = pq_coefficients(200, omega, omega0, 1e-4);
            const std::complex<double> x = std::polar(230.0, std::numbers::pi / 2.0);
            for (const std::int64_t r : {0LL, 57LL, 1000LL}) {
                const double tr = static_cast<double>(r) * 1e-4;
                const std::complex<double> fwd =
                    pq.p * x * std::polar(1.0, (omega - omega0) * tr) +
                    pq.q * std::conj(x) * std::polar(1.0, -(omega + omega0) * tr);
                const PhasorEstimate rec =
                    correct_first_window(make_phasor(fwd, 0.0), pq, r, omega, omega0, 1e-4);
                worst_rel = std::max(worst_rel, std::abs(rec.value() - x) / std::abs(x));
            }
        }
        return std::make_pair(worst_rel <= kIdentityTol,
                              fmt("worst round-trip deviation %.2e", worst_rel));
    });

    run_criterion("vector-error identities for scale and rotation errors", [&] {
        const PhasorEstimate x = make_phasor(std::polar(230.0, -0.35), 0.0);
        double worst = 0.0;
        for (double c = 0.5; c <= 2.0 + 1e-12; c += 0.1) {
            const PhasorEstimate est = make_phasor(std::polar(c * 230.0, -0.35), 0.0);
            worst = std::max(worst, std::abs(tve(est, x).tve_fraction - std::abs(c - 1.0)));
        }
        for (double d = -std::numbers::pi; d <= std::numbers::pi + 1e-12;
             d += std::numbers::pi / 8.0) {
            const PhasorEstimate est = make_phasor(std::polar(230.0, -0.35 + d), 0.0);
            worst = std::max(worst, std::abs(tve(est, x).tve_fraction -
                                             2.0 * std::abs(std::sin(d / 2.0))));
        }
        return std::make_pair(worst <= kIdentityTol, fmt("worst identity deviation %.2e", worst));
    });

    run_criterion("harmonic probe completes and matches the direct-summation replica", [&] {
        CampaignContext probe_ctx = ctx;
        probe_ctx.duration_s = 2.0;
        const std::vector<ComplianceResult> rows = run_harmonic_probe(probe_ctx);
        if (rows.size() != 98)
            return std::make_pair(false,
                                  fmt("expected 98 rows, got %g",
                                      static_cast<double>(rows.size())));
        double worst_gap = 0.0;
        for (const ComplianceResult& r : rows) {
            if (!r.error.empty())
                return std::make_pair(false, "case error: " + r.error);
            const SampleStream stream = synthesize(r.test_case.signal);
            const std::vector<MeasurementFrame> frames =
                run_pipeline(stream, r.test_case.signal.nominal_frequency_hz);
            const double oracle =
                direct_max_tve(r.test_case.signal, stream, frames,
                               r.test_case.reporting_rate_fps, evaluation_skip_time(probe_ctx));
            worst_gap = std::max(worst_gap, std::abs(oracle - r.max_tve_fraction));
        }
        return std::make_pair(worst_gap <= kProbeAgreementTol,
                              fmt("worst pipeline-vs-replica gap %.2e over 98 cases",
                                  worst_gap));
    });

    std::printf("%s: %d criterion(s) failed\n", g_failed == 0 ? "ALL PASS" : "RESULT",
                g_failed);
    return g_failed == 0 ? 0 : 1;
}
