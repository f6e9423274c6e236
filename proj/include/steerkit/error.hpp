#pragma once

#include <stdexcept>
#include <string>

namespace steerkit {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller supplied something outside an operation's domain (bad shape, guard
// violation, malformed file).
class InputError : public Error {
public:
    using Error::Error;
};

// A numerical routine failed: singular pivot, iteration cap, non-finite data.
class NumericError : public Error {
public:
    using Error::Error;
};

// Controller synthesis failed at some operating point.
class DesignError : public Error {
public:
    DesignError(const std::string& what, double speed) : Error(what), speed_(speed) {}
    double speed() const noexcept { return speed_; }

private:
    double speed_;
};

// Closed-loop run left its valid domain (vehicle lost, divergence).
class SimulationError : public Error {
public:
    using Error::Error;
};

}  // namespace steerkit
