// errors.hpp: exception types raised by the tdas library

#pragma once

#include <stdexcept>
#include <string>

namespace tdas {

// Base for every library error. The harness maps ConfigError to exit code 1
// and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual const char* kind() const noexcept { return "Error"; }
};

#define TDAS_DEFINE_ERROR(Name)                                                 \
    class Name : public Error {                                                 \
    public:                                                                     \
        using Error::Error;                                                     \
        [[nodiscard]] const char* kind() const noexcept override { return #Name; } \
    };

TDAS_DEFINE_ERROR(DomainError)
TDAS_DEFINE_ERROR(NotAFixedPoint)
TDAS_DEFINE_ERROR(InvariantViolation)
TDAS_DEFINE_ERROR(DegenerateFixedPoint)
TDAS_DEFINE_ERROR(SingularAtFrequency)
TDAS_DEFINE_ERROR(ConfigError)

#undef TDAS_DEFINE_ERROR

class StepTooLarge : public Error {
public:
    StepTooLarge(double step, double tau);
    [[nodiscard]] const char* kind() const noexcept override { return "StepTooLarge"; }
};

class NonFiniteState : public Error {
public:
    explicit NonFiniteState(double time);
    [[nodiscard]] const char* kind() const noexcept override { return "NonFiniteState"; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

class SearchFailed : public Error {
public:
    explicit SearchFailed(const std::string& what, long grid_index = -1);
    [[nodiscard]] const char* kind() const noexcept override { return "SearchFailed"; }
    [[nodiscard]] long grid_index() const noexcept { return grid_index_; }

private:
    long grid_index_;
};

class DivergentFluctuations : public Error {
public:
    DivergentFluctuations(const std::string& what, double nu);
    [[nodiscard]] const char* kind() const noexcept override { return "DivergentFluctuations"; }
    // Frequency [rad/us] at which the instability was detected.
    [[nodiscard]] double frequency() const noexcept { return nu_; }

private:
    double nu_;
};

} // namespace tdas
