#pragma once

#include <stdexcept>
#include <string>

namespace ecgi {

// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- ingest ---------------------------------------------------------------
struct MalformedHeader : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct TruncatedSignal : Error { using Error::Error; };
struct TruncatedAnnotations : Error { using Error::Error; };
struct UnknownCode : Error { using Error::Error; };
struct MissingFile : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };

// --- dataset --------------------------------------------------------------
struct EmptySide : Error { using Error::Error; };
struct MissingClass : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };

// --- models ---------------------------------------------------------------
struct NonFinite : Error { using Error::Error; };
struct UntrainedModel : Error { using Error::Error; };
struct WrongKind : Error { using Error::Error; };

// --- explainers -----------------------------------------------------------
struct EmptySelection : Error { using Error::Error; };
struct EmptySubset : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };

// --- statistics -----------------------------------------------------------
struct TooFewValues : Error { using Error::Error; };
struct TooFewGroups : Error { using Error::Error; };
struct TooFewBeats : Error { using Error::Error; };
struct ConstantInput : Error { using Error::Error; };
struct AllZeroDifferences : Error { using Error::Error; };
struct ClassTooSmall : Error { using Error::Error; };

} // namespace ecgi
