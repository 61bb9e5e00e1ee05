#pragma once

#include <stdexcept>
#include <string>

namespace smc {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input rejected: wrong vector length, out-of-range index, non-finite value.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid configuration: unsupported activation/loss pairing, bad schema,
// unknown config keys, out-of-range parameters.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed serialized data. Messages carry the byte offset or line/column.
struct SmcParseError : Error {
    using Error::Error;
};

// Training produced a non-finite loss or gradient.
struct DivergenceError : Error {
    using Error::Error;
};

// Knowledge base lookup miss; message names the missing key.
struct KnowledgeMissError : Error {
    using Error::Error;
};

// Exhaustive enumeration would exceed the configured size cap.
struct EnumerationRefusedError : Error {
    using Error::Error;
};

// Graph edit would leave the graph in an invalid state.
struct InfeasibleEditError : Error {
    using Error::Error;
};

// Replay asked for a state the symbolic graph does not cover.
struct CoverageError : Error {
    using Error::Error;
};

}  // namespace smc
