#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace levitate {

// Base of every error raised by the library. The CLI maps any of these to a
// nonzero exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A physical or configuration invariant was violated. The message names the
// invariant, e.g. "radius > 0".
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& origin, int line, const std::string& what)
        : Error(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// The integrator produced a non-finite position or velocity.
class NonFiniteState : public Error {
public:
    explicit NonFiniteState(double time)
        : Error("non-finite state at t = " + std::to_string(time) + " s"), time_(time) {}
    NonFiniteState(double time, std::size_t trajectory)
        : Error("trajectory " + std::to_string(trajectory) + ": non-finite state at t = " +
                std::to_string(time) + " s"),
          time_(time),
          trajectory_(trajectory) {}
    double time() const { return time_; }
    std::optional<std::size_t> trajectory() const { return trajectory_; }

private:
    double time_;
    std::optional<std::size_t> trajectory_;
};

class InvalidBand : public Error { public: using Error::Error; };
class TooShort : public Error { public: using Error::Error; };
class DegenerateSpectrum : public Error { public: using Error::Error; };
class GridMismatch : public Error { public: using Error::Error; };
class BadWindow : public Error { public: using Error::Error; };
class NoPeak : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace levitate
