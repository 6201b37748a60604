#pragma once

#include <stdexcept>
#include <string>

namespace osids {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// capture / flow assembly
struct BadMagic : Error { using Error::Error; };
struct TruncatedHeader : Error { using Error::Error; };

// feature extraction
struct EmptyFlow : Error { using Error::Error; };
struct EmptyTrainingSet : Error { using Error::Error; };

// neural core
struct ShapeMismatch : Error { using Error::Error; };
struct BackwardBeforeForward : Error { using Error::Error; };

// training
struct SingleClass : Error { using Error::Error; };
struct EmptyClass : Error { using Error::Error; };
struct ClassTooSmall : Error { using Error::Error; };

// openmax
struct TooFewSamples : Error { using Error::Error; };
struct CalibrationMissing : Error { using Error::Error; };

// vae
struct EmptyLossList : Error { using Error::Error; };

// model bundle
struct VersionMismatch : Error { using Error::Error; };
struct CorruptSection : Error { using Error::Error; };
struct BundleClassMismatch : Error { using Error::Error; };

} // namespace osids
