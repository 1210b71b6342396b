#pragma once

#include <stdexcept>
#include <string>

namespace barb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Argument outside its valid domain (rates, sizes, degrees, ...).
struct ValueError : Error {
    using Error::Error;
};

// Operation invoked out of sequence, e.g. backward without a forward pass.
struct StateError : Error {
    using Error::Error;
};

// Non-finite values produced during training or estimation.
struct DivergenceError : Error {
    using Error::Error;
};

// Too few observations for the requested fit.
struct UnderdeterminedError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Unsupported or malformed image data.
struct FormatError : Error {
    using Error::Error;
};

// Metadata file violates the expected column layout.
struct SchemaError : Error {
    using Error::Error;
};

// Corrupt or inconsistent model container.
struct IntegrityError : Error {
    using Error::Error;
};

// Container written by an unknown format version.
struct IncompatibilityError : Error {
    using Error::Error;
};

}  // namespace barb
