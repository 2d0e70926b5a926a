// Exception types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace rrae {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatch between operands; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Malformed input file; message carries the line number where known.
struct ParseError : Error {
    using Error::Error;
};

// Structurally well-formed input that violates a table/config invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Nearest-word matching failure (e.g. a zero-norm query row).
struct MatchError : Error {
    using Error::Error;
};

// Loss evaluation failure (e.g. zero output vector under the cosine loss).
struct LossError : Error {
    using Error::Error;
};

// Non-finite loss or gradient during optimization.
struct TrainError : Error {
    using Error::Error;
};

// Caller broke an operation precondition (empty sequence, zero steps, ...).
struct UsageError : Error {
    using Error::Error;
};

// Sequence longer than the configured maximum.
struct LengthError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Checkpoint load failure; message names the cause (magic, version, crc, truncation).
struct CheckpointError : Error {
    using Error::Error;
};

} // namespace rrae
