#include "pmu/waveform.hpp"

#include "pmu/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>

namespace pmu {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One additive cosine component, evaluated per sample index on the uniform
// grid t_k = k / fs. When fs / f is an integer P the phase argument is
// reduced to the one-cycle lattice k mod P, so values repeat bit-exactly
// every P samples instead of accumulating argument rounding.
class ToneEval {
public:
    ToneEval(double peak_amplitude, double frequency_hz, double phase_rad,
             double sample_rate_hz)
        : peak_(peak_amplitude), f_(frequency_hz), phase_(phase_rad), fs_(sample_rate_hz) {
        const double ratio = sample_rate_hz / frequency_hz;
        const double rounded = std::round(ratio);
        if (rounded >= 1.0 && std::abs(ratio - rounded) < 1e-9 * rounded) {
            lattice_ = static_cast<long long>(rounded);
        }
    }

    double operator()(long long k) const {
        const long long n = lattice_ > 0 ? k % lattice_ : k;
        const double arg = kTwoPi * f_ * (static_cast<double>(n) / fs_) + phase_;
        return peak_ * std::cos(arg);
    }

private:
    double peak_, f_, phase_, fs_;
    long long lattice_ = 0;
};

} // namespace

void SignalSpec::validate() const {
    if (!(amplitude_rms >= 0.0) || !std::isfinite(amplitude_rms))
        throw InvalidSpecError("signal spec: amplitude_rms must be finite and >= 0");
    if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
        throw InvalidSpecError("signal spec: frequency_hz must be finite and > 0");
    if (!(nominal_frequency_hz > 0.0) || !std::isfinite(nominal_frequency_hz))
        throw InvalidSpecError("signal spec: nominal_frequency_hz must be finite and > 0");
    if (!(sample_rate_hz > 2.0 * frequency_hz))
        throw InvalidSpecError("signal spec: sample_rate_hz must exceed twice frequency_hz");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s))
        throw InvalidSpecError("signal spec: duration_s must be finite and > 0");
    if (!std::isfinite(phase_rad))
        throw InvalidSpecError("signal spec: phase_rad must be finite");
    for (const auto& tone : interference) {
        if (!(tone.frequency_hz > 0.0) || !std::isfinite(tone.frequency_hz))
            throw InvalidSpecError("signal spec: tone frequency_hz must be finite and > 0");
        if (!(tone.amplitude_fraction >= 0.0) || !std::isfinite(tone.amplitude_fraction))
            throw InvalidSpecError("signal spec: tone amplitude_fraction must be >= 0");
        if (!std::isfinite(tone.phase_rad))
            throw InvalidSpecError("signal spec: tone phase_rad must be finite");
    }
}

void SampleStream::validate() const {
    if (times_s.size() != values.size())
        throw InvalidSpecError("sample stream: times_s and values lengths differ");
    if (values.size() < 2)
        throw InvalidSpecError("sample stream: need at least 2 samples");
    for (std::size_t i = 1; i < times_s.size(); ++i) {
        if (!(times_s[i] > times_s[i - 1]))
            throw InvalidTimebaseError("sample stream: times_s not strictly increasing at index " +
                                       std::to_string(i));
    }
}

SampleStream synthesize(const SignalSpec& spec) {
    spec.validate();

    const auto count =
        static_cast<long long>(std::floor(spec.duration_s * spec.sample_rate_hz));
    if (count < 2)
        throw InvalidSpecError("signal spec: duration * sample_rate yields fewer than 2 samples");

    const double peak = std::numbers::sqrt2 * spec.amplitude_rms;
    ToneEval fundamental(peak, spec.frequency_hz, spec.phase_rad, spec.sample_rate_hz);

    std::vector<ToneEval> tones;
    tones.reserve(spec.interference.size());
    for (const auto& t : spec.interference)
        tones.emplace_back(peak * t.amplitude_fraction, t.frequency_hz, t.phase_rad,
                           spec.sample_rate_hz);

    SampleStream out;
    out.times_s.resize(static_cast<std::size_t>(count));
    out.values.resize(static_cast<std::size_t>(count));
    for (long long k = 0; k < count; ++k) {
        double v = fundamental(k);
        for (const auto& tone : tones)
            v += tone(k);
        out.times_s[static_cast<std::size_t>(k)] = static_cast<double>(k) / spec.sample_rate_hz;
        out.values[static_cast<std::size_t>(k)] = v;
    }
    return out;
}

SampleStream add_interference(const SampleStream& stream, const InterferenceTone& tone,
                              double fundamental_rms) {
    stream.validate();
    if (!(tone.frequency_hz > 0.0) || !std::isfinite(tone.frequency_hz))
        throw InvalidSpecError("add_interference: tone frequency_hz must be finite and > 0");
    if (!(tone.amplitude_fraction >= 0.0) || !std::isfinite(tone.amplitude_fraction))
        throw InvalidSpecError("add_interference: tone amplitude_fraction must be >= 0");
    if (!(fundamental_rms >= 0.0) || !std::isfinite(fundamental_rms))
        throw InvalidSpecError("add_interference: fundamental_rms must be finite and >= 0");

    const double peak = std::numbers::sqrt2 * fundamental_rms * tone.amplitude_fraction;
    SampleStream out = stream;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] += peak * std::cos(kTwoPi * tone.frequency_hz * out.times_s[i] +
                                         tone.phase_rad);
    return out;
}

void write_stream_csv(const SampleStream& stream, std::ostream& out) {
    out << "time_s,value\n";
    char line[80];
    for (std::size_t i = 0; i < stream.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", stream.times_s[i],
                      stream.values[i]);
        out << line;
    }
}

SampleStream read_stream_csv(std::istream& in, std::string channel_label) {
    SampleStream out;
    out.channel_label = std::move(channel_label);

    std::string line;
    if (!std::getline(in, line))
        throw ParseError("stream csv: empty input");
    if (line.size() && line.back() == '\r')
        line.pop_back();
    if (line != "time_s,value")
        throw ParseError("stream csv: expected header 'time_s,value', got '" + line + "'");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("stream csv: missing comma on line " + std::to_string(line_no));
        std::size_t used = 0;
        double t = 0.0, v = 0.0;
        try {
            t = std::stod(line.substr(0, comma), &used);
            if (used != comma)
                throw std::invalid_argument("");
            const std::string rest = line.substr(comma + 1);
            v = std::stod(rest, &used);
            if (used != rest.size())
                throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("stream csv: malformed number on line " + std::to_string(line_no));
        }
        out.times_s.push_back(t);
        out.values.push_back(v);
    }
    out.validate();
    return out;
}

} // namespace pmu
