#pragma once

#include <stdexcept>
#include <string>

namespace sbv {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A mathematical precondition was violated (non-positive depth, negative sigma, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Image or volume dimensions are empty, mismatched, or too small.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A tuning parameter is outside its legal range.
class ParamError : public Error {
public:
    using Error::Error;
};

/// A file could not be decoded (bad magic, truncated payload, unsupported depth, bad JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

/// The operating system refused a read or write.
class IoError : public Error {
public:
    using Error::Error;
};

/// An operation that needs at least one valid sample received none.
class NoDataError : public Error {
public:
    using Error::Error;
};

/// Triangulation rays do not intersect in front of the cameras (disparity <= 0).
class NoIntersectionError : public Error {
public:
    using Error::Error;
};

/// A stereo correspondence violates the epipolar constraint.
class InconsistentPairError : public Error {
public:
    using Error::Error;
};

/// A polygon rasterizes to zero pixels (degenerate or fully outside the image).
class EmptyMaskError : public Error {
public:
    using Error::Error;
};

/// Failure inside the end-to-end pipeline, annotated with the stage that raised it.
class PipelineError : public Error {
public:
    PipelineError(const std::string& stage, const std::string& msg)
        : Error(stage + ": " + msg), stage_(stage) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace sbv
