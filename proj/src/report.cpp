#include "pmu/report.hpp"

#include "pmu/errors.hpp"
#include "pmu/reference_results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

namespace pmu {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_double_value(const std::string& key, const std::string& value) {
    try {
        std::size_t idx = 0;
        const double v = std::stod(value, &idx);
        if (idx != value.size() || !std::isfinite(v))
            throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InvalidSpecError("config: '" + key + "' needs a finite number, got '" + value + "'");
    }
}

bool parse_bool_value(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    throw InvalidSpecError("config: '" + key + "' needs true/false, got '" + value + "'");
}

const std::vector<std::string>& known_tests() {
    static const std::vector<std::string> names = {"frequency", "magnitude", "phase",
                                                   "oob10",     "oob25",     "harmonic"};
    return names;
}

std::string now_utc_iso8601() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

// Left-aligned column rendering with two-space gutters.
std::string render_table(const std::vector<std::vector<std::string>>& rows,
                         const std::string& indent) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size())
            widths.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i)
            widths[i] = std::max(widths[i], row[i].size());
    }
    std::string out;
    for (const auto& row : rows) {
        out += indent;
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            if (i + 1 < row.size())
                out += std::string(widths[i] - row[i].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

const char* oob_mode_name(OobMode m) {
    return m == OobMode::fundamental_sweep ? "fundamental_sweep" : "with_interference";
}

const char* phase_mode_name(PhaseTestMode m) {
    return m == PhaseTestMode::constant_angle ? "constant_angle" : "gradually_varying";
}

const MeasurementFrame& frame_at_time(std::span<const MeasurementFrame> frames,
                                      double t_s) {
    const double t0 = frames.front().timestamp_s;
    const double dt = (frames.back().timestamp_s - t0) /
                      static_cast<double>(frames.size() - 1);
    const auto idx = static_cast<std::size_t>(std::clamp<std::int64_t>(
        std::llround((t_s - t0) / dt), 0, static_cast<std::int64_t>(frames.size()) - 1));
    return frames[idx];
}

SteadyResidual steady_residual(const SignalSpec& spec, const std::string& label) {
    const SampleStream stream = synthesize(spec);
    const std::vector<MeasurementFrame> frames =
        run_pipeline(stream, spec.nominal_frequency_hz);
    const MeasurementFrame& last = frames.back();
    const PhasorEstimate truth = true_phasor(spec, last.timestamp_s);

    SteadyResidual r;
    r.label = label;
    r.frequency_hz = spec.frequency_hz;
    r.phase_deg = spec.phase_rad * kDegPerRad;
    r.rms_error = std::abs(last.rms - spec.amplitude_rms);
    r.freq_error_hz = std::abs(last.frequency_hz - spec.frequency_hz);
    r.angle_error_deg = std::abs(wrap_angle(last.phasor.angle_rad - truth.angle_rad)) * kDegPerRad;
    return r;
}

std::string result_status(const ComplianceResult& r) {
    if (r.pass)
        return "pass";
    return r.test_case.informational ? "fail (informational)" : "FAIL";
}

} // namespace

void CampaignConfig::validate() const {
    if (!(f0_hz > 0.0) || !(rated_rms > 0.0) || !(sample_rate_hz > 2.0 * f0_hz))
        throw InvalidSpecError("campaign: need f0 > 0, rated > 0, fs > 2*f0");
    if (!(duration_s > 0.0) || !(reporting_rate_fps > 0.0) || !(frequency_step_hz > 0.0))
        throw InvalidSpecError("campaign: duration, reporting rate and frequency step must be > 0");
    if (output_dir.empty())
        throw InvalidSpecError("campaign: output_dir must not be empty");
    if (tests.empty())
        throw InvalidSpecError("campaign: no tests selected");
    for (const auto& t : tests)
        if (std::find(known_tests().begin(), known_tests().end(), t) == known_tests().end())
            throw InvalidSpecError("campaign: unknown test '" + t + "'");
}

CampaignContext CampaignConfig::context() const {
    CampaignContext ctx;
    ctx.f0_hz = f0_hz;
    ctx.rated_rms = rated_rms;
    ctx.sample_rate_hz = sample_rate_hz;
    ctx.duration_s = duration_s;
    ctx.reporting_rate_fps = reporting_rate_fps;
    ctx.denominator = denominator;
    return ctx;
}

void apply_config_key(CampaignConfig& config, const std::string& key,
                      const std::string& value) {
    if (key == "f0_hz")
        config.f0_hz = parse_double_value(key, value);
    else if (key == "rated_rms")
        config.rated_rms = parse_double_value(key, value);
    else if (key == "sample_rate_hz")
        config.sample_rate_hz = parse_double_value(key, value);
    else if (key == "duration_s")
        config.duration_s = parse_double_value(key, value);
    else if (key == "reporting_rate_fps")
        config.reporting_rate_fps = parse_double_value(key, value);
    else if (key == "frequency_step_hz")
        config.frequency_step_hz = parse_double_value(key, value);
    else if (key == "class") {
        if (value == "P")
            config.perf_class = PerfClass::P;
        else if (value == "M")
            config.perf_class = PerfClass::M;
        else
            throw InvalidSpecError("config: 'class' needs P or M, got '" + value + "'");
    } else if (key == "tve_denominator") {
        if (value == "true")
            config.denominator = TveDenominator::true_reference;
        else if (value == "paper" || value == "estimate")
            config.denominator = TveDenominator::estimate_reference;
        else
            throw InvalidSpecError("config: 'tve_denominator' needs true or paper, got '" +
                                   value + "'");
    } else if (key == "tests") {
        std::vector<std::string> names;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty())
                continue;
            if (std::find(known_tests().begin(), known_tests().end(), item) ==
                known_tests().end())
                throw InvalidSpecError("config: unknown test '" + item + "'");
            names.push_back(item);
        }
        if (names.empty())
            throw InvalidSpecError("config: 'tests' selects nothing");
        config.tests = std::move(names);
    } else if (key == "output_dir")
        config.output_dir = value;
    else if (key == "oob_mode") {
        if (value == "fundamental_sweep" || value == "sweep")
            config.oob_mode = OobMode::fundamental_sweep;
        else if (value == "with_interference" || value == "interference")
            config.oob_mode = OobMode::with_interference;
        else
            throw InvalidSpecError("config: 'oob_mode' needs sweep or interference, got '" +
                                   value + "'");
    } else if (key == "phase_mode") {
        if (value == "constant_angle" || value == "constant")
            config.phase_mode = PhaseTestMode::constant_angle;
        else if (value == "gradually_varying" || value == "varying")
            config.phase_mode = PhaseTestMode::gradually_varying;
        else
            throw InvalidSpecError("config: 'phase_mode' needs constant or varying, got '" +
                                   value + "'");
    } else if (key == "harmonic_strict")
        config.harmonic_strict = parse_bool_value(key, value);
    else
        throw InvalidSpecError("config: unknown key '" + key + "'");
}

CampaignConfig read_config(std::istream& in) {
    CampaignConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
        try {
            apply_config_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const Error& e) {
            throw ParseError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

Report run_campaign(const CampaignConfig& config) {
    config.validate();
    const CampaignContext ctx = config.context();

    Report report;
    report.config = config;
    report.generated_at = now_utc_iso8601();

    for (const auto& name : config.tests) {
        TestSection section;
        section.name = name;
        if (name == "frequency")
            section.results =
                run_frequency_test(config.perf_class, ctx, config.frequency_step_hz);
        else if (name == "magnitude")
            section.results = run_magnitude_test(ctx);
        else if (name == "phase")
            section.results = run_phase_test(ctx, config.phase_mode);
        else if (name == "oob10")
            section.results = run_oob_test(10.0, ctx, config.oob_mode);
        else if (name == "oob25")
            section.results = run_oob_test(25.0, ctx, config.oob_mode);
        else if (name == "harmonic")
            section.results = run_harmonic_probe(ctx, config.harmonic_strict);
        report.sections.push_back(std::move(section));
    }

    // Converged reproduction inputs: four nominal angles, four off-nominal
    // frequencies at +90 deg.
    SignalSpec base;
    base.amplitude_rms = config.rated_rms;
    base.frequency_hz = config.f0_hz;
    base.nominal_frequency_hz = config.f0_hz;
    base.sample_rate_hz = config.sample_rate_hz;
    base.duration_s = config.duration_s;
    for (const double deg : {-30.0, 0.0, 30.0, 180.0}) {
        SignalSpec spec = base;
        spec.phase_rad = deg / kDegPerRad;
        report.steady_state.push_back(
            steady_residual(spec, fmt("nominal, %+g deg", deg)));
    }

    const double skip = evaluation_skip_time(ctx);
    for (const auto& row : reference::kOffNominalInputs) {
        SignalSpec spec = base;
        spec.frequency_hz = row.f_in_hz;
        spec.phase_rad = std::numbers::pi / 2.0;
        report.steady_state.push_back(
            steady_residual(spec, fmt("off-nominal, %g Hz", row.f_in_hz)));

        const SampleStream stream = synthesize(spec);
        const std::vector<MeasurementFrame> frames =
            run_pipeline(stream, config.f0_hz);

        RotationCheck check;
        check.f_in_hz = row.f_in_hz;
        const RotationPeriod expected = rotation_period(row.f_in_hz, config.f0_hz);
        check.expected_period_s = expected.period_s;
        check.expected_direction = expected.direction;
        check.measured = measure_rotation(frames, skip);
        if (check.expected_period_s && check.measured.period_s) {
            check.period_error_fraction =
                std::abs(*check.measured.period_s - *check.expected_period_s) /
                *check.expected_period_s;
            check.pass = *check.period_error_fraction <= 0.01 &&
                         check.measured.direction == check.expected_direction;
        }

        const double t0 = frames.front().timestamp_s;
        const double t_end = frames.back().timestamp_s;
        const double fps = config.reporting_rate_fps;
        for (auto j = static_cast<std::int64_t>(std::ceil(t0 * fps));; ++j) {
            const double t_report = static_cast<double>(j) / fps;
            if (t_report > t_end)
                break;
            const MeasurementFrame& f = frame_at_time(frames, t_report);
            const PhasorEstimate truth = true_phasor(spec, f.timestamp_s);
            check.angle_trace.push_back({f.timestamp_s, f.phasor.angle_rad * kDegPerRad,
                                         truth.angle_rad * kDegPerRad});
        }
        report.rotation.push_back(std::move(check));
    }
    return report;
}

bool campaign_failed(const Report& report) {
    for (const auto& section : report.sections)
        for (const auto& r : section.results)
            if (!r.pass && !r.test_case.informational)
                return true;
    for (const auto& check : report.rotation)
        if (!check.pass)
            return true;
    return false;
}

nlohmann::ordered_json report_to_json(const Report& report) {
    nlohmann::ordered_json j;
    j["tool"] = "pmu";
    j["tool_version"] = report.tool_version;
    j["generated_at"] = report.generated_at;

    nlohmann::ordered_json cfg;
    cfg["f0_hz"] = report.config.f0_hz;
    cfg["rated_rms"] = report.config.rated_rms;
    cfg["sample_rate_hz"] = report.config.sample_rate_hz;
    cfg["duration_s"] = report.config.duration_s;
    cfg["reporting_rate_fps"] = report.config.reporting_rate_fps;
    cfg["class"] = to_string(report.config.perf_class);
    cfg["tve_denominator"] = to_string(report.config.denominator);
    cfg["tests"] = report.config.tests;
    cfg["output_dir"] = report.config.output_dir;
    cfg["frequency_step_hz"] = report.config.frequency_step_hz;
    cfg["oob_mode"] = oob_mode_name(report.config.oob_mode);
    cfg["phase_mode"] = phase_mode_name(report.config.phase_mode);
    cfg["harmonic_strict"] = report.config.harmonic_strict;
    j["config"] = std::move(cfg);

    j["sections"] = nlohmann::ordered_json::array();
    for (const auto& section : report.sections) {
        nlohmann::ordered_json s;
        s["name"] = section.name;
        s["results"] = nlohmann::ordered_json::array();
        for (const auto& r : section.results) {
            nlohmann::ordered_json row;
            row["label"] = r.test_case.label;
            row["test"] = to_string(r.test_case.test);
            row["class"] = to_string(r.test_case.perf_class);
            row["influence_value"] = r.test_case.influence_value;
            row["reporting_rate_fps"] = r.test_case.reporting_rate_fps;
            row["tve_limit_percent"] = r.test_case.tve_limit_fraction * 100.0;
            row["informational"] = r.test_case.informational;
            if (r.error.empty())
                row["max_tve_percent"] = r.max_tve_fraction * 100.0;
            else
                row["max_tve_percent"] = nullptr;
            row["frames_evaluated"] = r.frames_evaluated;
            row["pass"] = r.pass;
            if (!r.notes.empty())
                row["notes"] = r.notes;
            if (!r.error.empty())
                row["error"] = r.error;
            s["results"].push_back(std::move(row));
        }
        j["sections"].push_back(std::move(s));
    }

    j["steady_state"] = nlohmann::ordered_json::array();
    for (const auto& r : report.steady_state) {
        nlohmann::ordered_json row;
        row["label"] = r.label;
        row["frequency_hz"] = r.frequency_hz;
        row["phase_deg"] = r.phase_deg;
        row["rms_error"] = r.rms_error;
        row["freq_error_hz"] = r.freq_error_hz;
        row["angle_error_deg"] = r.angle_error_deg;
        j["steady_state"].push_back(std::move(row));
    }

    j["rotation"] = nlohmann::ordered_json::array();
    for (const auto& c : report.rotation) {
        nlohmann::ordered_json row;
        row["f_in_hz"] = c.f_in_hz;
        if (c.expected_period_s)
            row["expected_period_s"] = *c.expected_period_s;
        else
            row["expected_period_s"] = nullptr;
        row["expected_direction"] = to_string(c.expected_direction);
        if (c.measured.period_s)
            row["measured_period_s"] = *c.measured.period_s;
        else
            row["measured_period_s"] = nullptr;
        row["measured_direction"] = to_string(c.measured.direction);
        row["slope_rad_per_s"] = c.measured.slope_rad_per_s;
        if (c.period_error_fraction)
            row["period_error_fraction"] = *c.period_error_fraction;
        else
            row["period_error_fraction"] = nullptr;
        row["pass"] = c.pass;
        j["rotation"].push_back(std::move(row));
    }

    j["failed"] = campaign_failed(report);
    return j;
}

std::string render_report_text(const Report& report) {
    std::string out = "steady-state synchrophasor compliance report\n";
    out += "generated " + report.generated_at + ", tool version " +
           report.tool_version + "\n";
    out += fmt("f0 = %g Hz", report.config.f0_hz) +
           fmt(", rated = %g V RMS", report.config.rated_rms) +
           fmt(", fs = %g Hz", report.config.sample_rate_hz) +
           fmt(", duration = %g s", report.config.duration_s) + "\n";
    out += std::string("class ") + to_string(report.config.perf_class) +
           fmt(", %g fps reporting", report.config.reporting_rate_fps) +
           ", TVE denominator: " + to_string(report.config.denominator) + "\n";

    for (const auto& section : report.sections) {
        out += "\n== " + section.name + " ==\n";
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"case", "class", "max TVE %", "limit %", "frames", "status", "notes"});
        for (const auto& r : section.results) {
            std::string detail = r.error.empty() ? r.notes : "error: " + r.error;
            rows.push_back({r.test_case.label, to_string(r.test_case.perf_class),
                            r.error.empty() ? fmt("%.4e", r.max_tve_fraction * 100.0) : "-",
                            fmt("%.2g", r.test_case.tve_limit_fraction * 100.0),
                            std::to_string(r.frames_evaluated), result_status(r),
                            std::move(detail)});
        }
        out += render_table(rows, "  ");
    }

    if (!report.steady_state.empty()) {
        out += "\n== converged steady-state residuals ==\n";
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"input", "f_in (Hz)", "phase (deg)", "rms err (V)", "freq err (Hz)",
                        "angle err (deg)"});
        for (const auto& r : report.steady_state)
            rows.push_back({r.label, fmt("%g", r.frequency_hz), fmt("%g", r.phase_deg),
                            fmt("%.3e", r.rms_error), fmt("%.3e", r.freq_error_hz),
                            fmt("%.3e", r.angle_error_deg)});
        out += render_table(rows, "  ");
    }

    if (!report.rotation.empty()) {
        out += "\n== phasor-angle rotation ==\n";
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"f_in (Hz)", "expected (s)", "measured (s)", "direction",
                        "period err", "status"});
        for (const auto& c : report.rotation)
            rows.push_back(
                {fmt("%g", c.f_in_hz),
                 c.expected_period_s ? fmt("%.6f", *c.expected_period_s) : "-",
                 c.measured.period_s ? fmt("%.6f", *c.measured.period_s) : "-",
                 to_string(c.measured.direction),
                 c.period_error_fraction ? fmt("%.2e", *c.period_error_fraction) : "-",
                 c.pass ? "pass" : "FAIL"});
        out += render_table(rows, "  ");
    }

    out += std::string("\noverall: ") + (campaign_failed(report) ? "FAIL" : "PASS") + "\n";
    return out;
}

std::vector<std::string> write_campaign_outputs(const Report& report,
                                                const std::string& output_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);
    std::vector<std::string> written;

    const fs::path json_path = fs::path(output_dir) / "report.json";
    {
        std::ofstream out(json_path);
        if (!out)
            throw Error("cannot write " + json_path.string());
        out << report_to_json(report).dump(2) << '\n';
    }
    written.push_back(json_path.string());

    const fs::path text_path = fs::path(output_dir) / "report.txt";
    {
        std::ofstream out(text_path);
        if (!out)
            throw Error("cannot write " + text_path.string());
        out << render_report_text(report);
    }
    written.push_back(text_path.string());

    for (const auto& check : report.rotation) {
        char name[64];
        std::snprintf(name, sizeof name, "angle_%ghz.csv", check.f_in_hz);
        const fs::path csv_path = fs::path(output_dir) / name;
        std::ofstream out(csv_path);
        if (!out)
            throw Error("cannot write " + csv_path.string());
        out << "time_s,angle_deg,expected_angle_deg\n";
        char line[160];
        for (const auto& row : check.angle_trace) {
            std::snprintf(line, sizeof line, "%.12e,%.12e,%.12e\n", row[0], row[1], row[2]);
            out << line;
        }
        written.push_back(csv_path.string());
    }
    return written;
}

} // namespace pmu
