#include "pmu/compliance.hpp"
#include "pmu/errors.hpp"
#include "pmu/report.hpp"
#include "pmu/trackers.hpp"
#include "pmu/waveform.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include <CLI11.hpp>

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

struct EstimateOptions {
    std::string input_path;
    double rms = 230.0;
    double freq = 50.0;
    double phase_rad = 0.0;
    double f0 = 50.0;
    double fs = 10000.0;
    double duration = 5.0;
    std::string out_path;
    std::string format = "csv";
    bool quiet = false;
};

int run_estimate(const EstimateOptions& opt) {
    pmu::SampleStream stream;
    if (!opt.input_path.empty()) {
        std::ifstream in(opt.input_path);
        if (!in) {
            std::cerr << "error: cannot open " << opt.input_path << "\n";
            return 2;
        }
        stream = pmu::read_stream_csv(in);
    } else {
        pmu::SignalSpec spec;
        spec.amplitude_rms = opt.rms;
        spec.frequency_hz = opt.freq;
        spec.phase_rad = opt.phase_rad;
        spec.nominal_frequency_hz = opt.f0;
        spec.sample_rate_hz = opt.fs;
        spec.duration_s = opt.duration;
        stream = pmu::synthesize(spec);
    }

    const std::vector<pmu::MeasurementFrame> frames = pmu::run_pipeline(stream, opt.f0);

    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path);
        if (!out) {
            std::cerr << "error: cannot write " << opt.out_path << "\n";
            return 2;
        }
        if (opt.format == "json")
            out << pmu::frames_to_json(frames).dump(2) << '\n';
        else
            pmu::write_frames_csv(frames, out);
    } else if (opt.quiet) {
        // summary suppressed and no output file: emit frames to stdout
        if (opt.format == "json")
            std::cout << pmu::frames_to_json(frames).dump(2) << '\n';
        else
            pmu::write_frames_csv(frames, std::cout);
    }

    if (!opt.quiet) {
        const pmu::MeasurementFrame& last = frames.back();
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "frames: %zu (t = %.6g .. %.6g s), N = %d samples/cycle, Fs = %.6g Hz\n",
                      frames.size(), frames.front().timestamp_s, last.timestamp_s,
                      last.n_samples_per_cycle, last.sample_rate_hz);
        std::cout << buf;
        std::snprintf(buf, sizeof buf,
                      "converged: rms = %.13g V, f = %.13g Hz, rocof = %.3e Hz/s\n",
                      last.rms, last.frequency_hz, last.rocof_hz_per_s);
        std::cout << buf;
        std::snprintf(buf, sizeof buf, "phasor: %.13g V RMS at %.13g deg (t = %.6g s)\n",
                      last.phasor.magnitude_rms, last.phasor.angle_rad * kDegPerRad,
                      last.timestamp_s);
        std::cout << buf;
        const pmu::RotationPeriod rot = pmu::rotation_period(last.frequency_hz, opt.f0);
        if (rot.period_s)
            std::snprintf(buf, sizeof buf, "angle rotation: period %.6g s, %s\n",
                          *rot.period_s, pmu::to_string(rot.direction));
        else
            std::snprintf(buf, sizeof buf, "angle rotation: none (nominal frequency)\n");
        std::cout << buf;
        if (!opt.out_path.empty())
            std::cout << "wrote " << opt.out_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sliding-window synchrophasor estimator and IEEE C37.118.1 "
                 "steady-state compliance harness"};
    app.require_subcommand(1);

    EstimateOptions est;
    CLI::App* estimate = app.add_subcommand(
        "estimate", "estimate phasor, frequency and ROCOF from a waveform");
    estimate->add_option("--input", est.input_path,
                         "waveform CSV (time_s,value); omit to synthesize");
    estimate->add_option("--rms", est.rms, "synthesized RMS amplitude, V");
    estimate->add_option("--freq", est.freq, "synthesized frequency, Hz");
    estimate->add_option("--phase", est.phase_rad, "synthesized initial phase, rad");
    estimate->add_option("--f0", est.f0, "nominal frequency, Hz");
    estimate->add_option("--fs", est.fs, "sample rate for synthesis, Hz");
    estimate->add_option("--duration", est.duration, "synthesis duration, s");
    estimate->add_option("--out", est.out_path, "write frames to this file");
    estimate->add_option("--format", est.format, "frame output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    estimate->add_flag("--quiet", est.quiet,
                       "suppress the summary; with no --out, frames go to stdout");

    struct CampaignCli {
        std::string config_path;
        std::string tests;
        std::string perf_class;
        std::string out_dir;
        std::string denominator;
        double f0 = 0.0;
        double rated = 0.0;
        double fs = 0.0;
        double duration = 0.0;
        double fps = 0.0;
        double freq_step = 0.0;
        bool oob_interference = false;
        bool phase_varying = false;
        bool harmonic_strict = false;
    } camp;
    CLI::App* campaign = app.add_subcommand(
        "campaign", "run steady-state compliance tests and write a report");
    campaign->add_option("--config", camp.config_path, "key=value config file");
    campaign->add_option("--tests", camp.tests,
                         "comma list: frequency,magnitude,phase,oob10,oob25,harmonic");
    campaign->add_option("--class", camp.perf_class, "performance class: P or M")
        ->check(CLI::IsMember({"P", "M"}));
    campaign->add_option("--out", camp.out_dir, "output directory");
    campaign->add_option("--tve-denominator", camp.denominator,
                         "TVE denominator: true or paper")
        ->check(CLI::IsMember({"true", "paper"}));
    campaign->add_option("--f0", camp.f0, "nominal frequency, Hz");
    campaign->add_option("--rated", camp.rated, "rated RMS amplitude, V");
    campaign->add_option("--fs", camp.fs, "sample rate, Hz");
    campaign->add_option("--duration", camp.duration, "per-case duration, s");
    campaign->add_option("--fps", camp.fps, "reporting rate, frames/s");
    campaign->add_option("--freq-step", camp.freq_step, "frequency-sweep step, Hz");
    campaign->add_flag("--oob-interference", camp.oob_interference,
                       "out-of-band test adds a 10% interfering tone instead of "
                       "sweeping the fundamental");
    campaign->add_flag("--phase-varying", camp.phase_varying,
                       "phase test uses a gradually varying angle (f0 + 0.1 Hz)");
    campaign->add_flag("--harmonic-strict", camp.harmonic_strict,
                       "count harmonic-probe failures against the exit code");

    struct RotationCli {
        double f_in = 0.0;
        double f0 = 50.0;
    } rotc;
    CLI::App* rotation = app.add_subcommand(
        "rotation", "phasor-angle rotation period for an off-nominal input");
    rotation->add_option("--fin", rotc.f_in, "input frequency, Hz")->required();
    rotation->add_option("--f0", rotc.f0, "nominal frequency, Hz");

    CLI11_PARSE(app, argc, argv);

    try {
        if (estimate->parsed())
            return run_estimate(est);

        if (campaign->parsed()) {
            pmu::CampaignConfig config;
            if (!camp.config_path.empty()) {
                std::ifstream in(camp.config_path);
                if (!in) {
                    std::cerr << "error: cannot open " << camp.config_path << "\n";
                    return 2;
                }
                config = pmu::read_config(in);
            }
            if (!camp.tests.empty())
                pmu::apply_config_key(config, "tests", camp.tests);
            if (!camp.perf_class.empty())
                pmu::apply_config_key(config, "class", camp.perf_class);
            if (!camp.out_dir.empty())
                config.output_dir = camp.out_dir;
            if (!camp.denominator.empty())
                pmu::apply_config_key(config, "tve_denominator", camp.denominator);
            if (camp.f0 > 0.0)
                config.f0_hz = camp.f0;
            if (camp.rated > 0.0)
                config.rated_rms = camp.rated;
            if (camp.fs > 0.0)
                config.sample_rate_hz = camp.fs;
            if (camp.duration > 0.0)
                config.duration_s = camp.duration;
            if (camp.fps > 0.0)
                config.reporting_rate_fps = camp.fps;
            if (camp.freq_step > 0.0)
                config.frequency_step_hz = camp.freq_step;
            if (camp.oob_interference)
                config.oob_mode = pmu::OobMode::with_interference;
            if (camp.phase_varying)
                config.phase_mode = pmu::PhaseTestMode::gradually_varying;
            if (camp.harmonic_strict)
                config.harmonic_strict = true;

            const pmu::Report report = pmu::run_campaign(config);
            std::cout << pmu::render_report_text(report);
            for (const auto& path : pmu::write_campaign_outputs(report, config.output_dir))
                std::cout << "wrote " << path << "\n";
            return pmu::campaign_failed(report) ? 1 : 0;
        }

        if (rotation->parsed()) {
            const pmu::RotationPeriod rot = pmu::rotation_period(rotc.f_in, rotc.f0);
            if (rot.period_s) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "%.5g s %s\n", *rot.period_s,
                              pmu::to_string(rot.direction));
                std::cout << buf;
            } else {
                std::cout << "no rotation: input frequency equals nominal\n";
            }
            return 0;
        }
    } catch (const pmu::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
