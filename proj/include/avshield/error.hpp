#pragma once

#include <stdexcept>
#include <string>

namespace avshield {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct InputError : Error {
    using Error::Error;
};

struct StepError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct AttackError : Error {
    int iteration = -1;
    AttackError(const std::string& msg, int iter)
        : Error(msg + " (iteration " + std::to_string(iter) + ")"), iteration(iter) {}
};

struct PurifyError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace avshield
