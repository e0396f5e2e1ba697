#pragma once

#include <stdexcept>
#include <string>

namespace audiodict {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument and shape errors.
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidParam : Error { using Error::Error; };
struct SignalTooShort : Error { using Error::Error; };
struct EmptySpectrogram : Error { using Error::Error; };
struct NoteAboveNyquist : Error { using Error::Error; };
struct InvalidDuration : Error { using Error::Error; };
struct MissingLabel : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };

// Data errors.
struct InsufficientSamples : Error { using Error::Error; };
struct SingleClassInput : Error { using Error::Error; };
struct MissingClass : Error { using Error::Error; };
struct ClassTooSmall : Error { using Error::Error; };
struct EmptyClassDir : Error { using Error::Error; };
struct UnsupportedWavFormat : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct CorruptArchive : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Numerical failures.
struct NonFiniteObjective : Error { using Error::Error; };

}  // namespace audiodict
