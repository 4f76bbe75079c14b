#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pmu {

// Additive tone riding on a fundamental. amplitude_fraction scales the
// fundamental's RMS amplitude (0.10 means a tone at 10 % of the fundamental).
struct InterferenceTone {
    double frequency_hz = 0.0;
    double amplitude_fraction = 0.0;
    double phase_rad = 0.0;
};

// Parameters of a synthetic single-channel cosine test signal.
struct SignalSpec {
    double amplitude_rms = 230.0;
    double frequency_hz = 50.0;
    double phase_rad = 0.0;
    double nominal_frequency_hz = 50.0;
    double sample_rate_hz = 10000.0;
    double duration_s = 5.0;
    std::vector<InterferenceTone> interference;

    // Throws InvalidSpecError on non-physical parameters
    // (negative amplitude, sample rate below Nyquist, ...).
    void validate() const;
};

// Uniformly sampled waveform. times_s is strictly increasing and the same
// length as values.
struct SampleStream {
    std::vector<double> times_s;
    std::vector<double> values;
    std::string channel_label = "v";

    std::size_t size() const { return values.size(); }
    void validate() const;
};

// values[k] = sqrt(2) * amplitude_rms * cos(2*pi*f*t_k + phase) plus any
// interference tones, t_k = k / sample_rate. Sample count is
// floor(duration * sample_rate). When sample_rate / f is an integer the
// cosine argument is evaluated on the one-cycle lattice, which makes the
// stream exactly periodic in floating point.
SampleStream synthesize(const SignalSpec& spec);

// Returns a copy of the stream with the tone added pointwise. The tone
// amplitude is tone.amplitude_fraction * fundamental_rms (RMS volts).
// The input stream is not modified.
SampleStream add_interference(const SampleStream& stream,
                              const InterferenceTone& tone,
                              double fundamental_rms);

// CSV with a "time_s,value" header line. Values are written with 17
// significant digits so a read-back reproduces the doubles bit-exactly.
void write_stream_csv(const SampleStream& stream, std::ostream& out);
SampleStream read_stream_csv(std::istream& in, std::string channel_label = "v");

} // namespace pmu
