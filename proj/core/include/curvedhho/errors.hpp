#pragma once

#include <stdexcept>
#include <string>

namespace curvedhho {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (curve parameter, rule size).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A face was used with an element it does not bound.
class IncidenceError : public Error {
public:
    using Error::Error;
};

/// Malformed mesh or element structure.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Numerically singular system, basis or factorization.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Cutting curve grazes a grid line or passes through a grid vertex.
class DegenerateCutError : public Error {
public:
    using Error::Error;
};

/// Invalid mesh generation request.
class CutSpecError : public Error {
public:
    using Error::Error;
};

/// A field returned a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// A precondition of a harness operation does not hold.
class ContractError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace curvedhho
