#pragma once

#include "pmu/compliance.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pmu {

inline constexpr const char* kToolVersion = "1.0.0";

// Campaign selection and influence-quantity settings. Parsed from a flat
// key=value config file, then optionally overridden by CLI flags.
struct CampaignConfig {
    double f0_hz = 50.0;
    double rated_rms = 230.0;
    double sample_rate_hz = 10000.0;
    double duration_s = 5.0;
    double reporting_rate_fps = 25.0;
    PerfClass perf_class = PerfClass::M;
    TveDenominator denominator = TveDenominator::true_reference;
    std::vector<std::string> tests = {"frequency", "magnitude", "phase",
                                      "oob10",     "oob25",     "harmonic"};
    std::string output_dir = ".";
    double frequency_step_hz = 1.0;
    OobMode oob_mode = OobMode::fundamental_sweep;
    PhaseTestMode phase_mode = PhaseTestMode::constant_angle;
    bool harmonic_strict = false;

    void validate() const; // throws InvalidSpecError
    CampaignContext context() const;
};

// Applies one key=value setting; throws InvalidSpecError on unknown keys or
// unparsable values. Shared by config-file parsing and CLI overrides.
void apply_config_key(CampaignConfig& config, const std::string& key,
                      const std::string& value);

// Flat key=value format, '#' starts a comment, blank lines ignored.
// Throws ParseError with a line number on malformed input.
CampaignConfig read_config(std::istream& in);

struct TestSection {
    std::string name;
    std::vector<ComplianceResult> results;
};

// Converged-state residuals for one reproduction input, taken at the final frame.
struct SteadyResidual {
    std::string label;
    double frequency_hz = 0.0;
    double phase_deg = 0.0;
    double rms_error = 0.0;
    double freq_error_hz = 0.0;
    double angle_error_deg = 0.0; // vs the true rotating-reference angle
};

// Measured phasor-angle rotation for one off-nominal input, with the
// decimated angle trace kept for plotting.
struct RotationCheck {
    double f_in_hz = 0.0;
    std::optional<double> expected_period_s;
    RotationDirection expected_direction = RotationDirection::none;
    RotationMeasurement measured;
    std::optional<double> period_error_fraction;
    bool pass = false;
    // rows of {time_s, measured_angle_deg, expected_angle_deg}
    std::vector<std::array<double, 3>> angle_trace;
};

struct Report {
    CampaignConfig config;
    std::string tool_version = kToolVersion;
    std::string generated_at; // ISO 8601 UTC
    std::vector<TestSection> sections;
    std::vector<SteadyResidual> steady_state;
    std::vector<RotationCheck> rotation;
};

Report run_campaign(const CampaignConfig& config);

// True when any non-informational case failed or errored, or a rotation
// check missed its expected period or direction.
bool campaign_failed(const Report& report);

nlohmann::ordered_json report_to_json(const Report& report);

// Aligned-column plain-text rendering of the same content.
std::string render_report_text(const Report& report);

// Writes report.json, report.txt, and one angle_*.csv per rotation check
// into the directory (created if missing). Returns the paths written.
std::vector<std::string> write_campaign_outputs(const Report& report,
                                                const std::string& output_dir);

} // namespace pmu
