#pragma once

#include <stdexcept>
#include <string>

namespace pmu {

// Base class for all library errors. Callers that want to distinguish
// failure modes catch the derived types below.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller-supplied configuration or precondition violation (bad spec
// fields, wrong window length, malformed stream, ...).
class InvalidSpecError : public Error {
public:
    using Error::Error;
};

// The waveform has no usable zero crossings (all-zero, DC, too short).
class UntrackableSignalError : public Error {
public:
    using Error::Error;
};

// Timestamps are not strictly increasing or otherwise unusable.
class InvalidTimebaseError : public Error {
public:
    using Error::Error;
};

// nominal frequency / sample rate do not reduce to a usable samples-per-cycle
// count (reduced denominator too large).
class UnsupportedRateError : public Error {
public:
    using Error::Error;
};

// The leakage-correction system is numerically singular for the given
// frequency pair; the window estimate cannot be inverted.
class UnrecoverableCorrectionError : public Error {
public:
    using Error::Error;
};

// A vector-error comparison was requested against a zero-magnitude phasor.
class UndefinedReferenceError : public Error {
public:
    using Error::Error;
};

// Malformed CSV / config input.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace pmu
