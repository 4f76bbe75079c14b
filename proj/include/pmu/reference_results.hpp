#pragma once

#include "pmu/phasor_core.hpp"

#include <cstddef>

// Steady-state results published for the reference implementation of this
// estimator. They are kept as regression context: reports print them next to
// measured values, and the acceptance suite bounds measured results by
// envelopes derived from them. They are not asserted digit-for-digit.
namespace pmu::reference {

struct FrequencyTveRow {
    double f_in_hz;
    double max_tve_percent;
};

inline constexpr FrequencyTveRow kFrequencyTestP[] = {
    {48.0, 0.0004}, {49.0, 0.0004}, {50.0, 0.0000}, {51.0, 0.0004}, {52.0, 0.0004},
};

// The 53 Hz row is printed as 0.0180 in the published results table while the
// accompanying analysis text calls the same case "max. TVE = 1.8 %"; the text
// figure is the one usually quoted for this known anomaly.
inline constexpr FrequencyTveRow kFrequencyTestM[] = {
    {45.0, 0.0010}, {46.0, 0.0017}, {47.0, 0.0098}, {48.0, 0.0004},
    {49.0, 0.0004}, {50.0, 0.0000}, {51.0, 0.0004}, {52.0, 0.0004},
    {53.0, 1.8},    {54.0, 0.0017}, {55.0, 0.0010},
};

inline constexpr double kKnownAnomalyFrequencyHz = 53.0;
inline constexpr const char* kKnownAnomalyNote =
    "known anomaly: the reference implementation reports 1.8% max TVE at 53 Hz";

struct MagnitudeTveRow {
    double fraction_of_rated;
    double max_tve_percent;
};

inline constexpr MagnitudeTveRow kMagnitudeTest[] = {
    {0.10, 0.3792e-13}, {0.30, 0.3656e-13}, {0.50, 0.3608e-13}, {0.70, 0.3707e-13},
    {0.90, 0.3611e-13}, {1.10, 0.3505e-13}, {1.30, 0.3517e-13}, {1.50, 0.3517e-13},
    {1.70, 0.3601e-13}, {1.90, 0.3700e-13}, {2.00, 0.3675e-13},
};

struct PhaseTveRow {
    int quarter_pi_steps_from_minus_pi; // offset = -pi + steps * pi/4
    double max_tve_percent;
};

inline constexpr PhaseTveRow kPhaseTest[] = {
    {0, 0.3586e-13}, {1, 0.3954e-13}, {2, 0.7056e-13}, {3, 0.4029e-13}, {4, 0.6577e-13},
    {5, 0.6623e-13}, {6, 0.4325e-13}, {7, 0.6315e-13}, {8, 0.5718e-13},
};

struct OobTveRow {
    double f_in_hz;
    double max_tve_percent;
};

inline constexpr OobTveRow kOutOfBand10Fps[] = {
    {49.500, 0.0000}, {49.625, 0.0052}, {49.750, 0.0000}, {49.875, 0.0027},
    {50.000, 0.0000}, {50.125, 0.0030}, {50.250, 0.0002}, {50.375, 0.0038},
    {50.500, 0.0003},
};

inline constexpr OobTveRow kOutOfBand25Fps[] = {
    {48.75, 0.0000}, {49.00, 0.0000}, {49.25, 0.0005}, {49.50, 0.0000},
    {49.75, 0.0000}, {50.00, 0.0000}, {50.25, 0.0002}, {50.50, 0.0003},
    {50.75, 0.0012}, {51.00, 0.0006}, {51.25, 0.0008},
};

struct RotationRow {
    double f_in_hz;
    double period_s;
    RotationDirection direction;
};

// Published rotation-period summary. Its last row lists 50.5 Hz although the
// worked input set uses 50.7 Hz (period 1.4286 s); the 50.5 entry is
// inconsistent with the published per-input outputs, so both are kept.
inline constexpr RotationRow kPublishedRotationTable[] = {
    {49.5, 2.0, RotationDirection::clockwise},
    {49.7, 3.3333, RotationDirection::clockwise},
    {50.3, 3.3333, RotationDirection::anticlockwise},
    {50.5, 2.0, RotationDirection::anticlockwise},
};

// The four worked off-nominal inputs (all at phase pi/2, 230 V RMS).
inline constexpr RotationRow kOffNominalInputs[] = {
    {49.5, 2.0, RotationDirection::clockwise},
    {49.7, 3.3333, RotationDirection::clockwise},
    {50.3, 3.3333, RotationDirection::anticlockwise},
    {50.7, 1.4286, RotationDirection::anticlockwise},
};

inline constexpr const char* kRotationTableNote =
    "published summary lists 50.5 Hz for the fourth row; the worked inputs use 50.7 Hz";

} // namespace pmu::reference
