#pragma once

#include <stdexcept>
#include <string>

namespace mgsim {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed tree: cycle, disconnected node, missing or duplicate root.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf inputs, zero divisors.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Unknown node or branch id.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Random grid generation could not produce a valid tree.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Communication precondition violated (e.g. a non-smart relay).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Invalid scenario configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Text input that does not follow its documented format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mgsim
