#pragma once

#include <stdexcept>
#include <string>

namespace ovmix {

// Base of every domain error thrown by the library. The CLI maps these to
// exit code 1; usage problems are handled by the argument parser (exit 2).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Vector norm at or below the degeneracy threshold (1e-12); usually signals
// a cancelled mixup or an empty prototype upstream.
class NearZeroNorm : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class SpecError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EmptyClass : public Error {
public:
    using Error::Error;
};

class EmptyGroup : public Error {
public:
    using Error::Error;
};

class UnknownClass : public Error {
public:
    using Error::Error;
};

class UnknownGroup : public Error {
public:
    using Error::Error;
};

class InsufficientClasses : public Error {
public:
    using Error::Error;
};

class MissingTargets : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ovmix
