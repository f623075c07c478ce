#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nc {

// Invalid parameters, shapes, or data values. Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing, corrupt, truncated, or unwritable files. Maps to CLI exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss encountered while training. Maps to CLI exit code 3.
struct TrainingDivergedError : std::runtime_error {
    TrainingDivergedError(std::size_t epoch_index, const std::string& message)
        : std::runtime_error(message), epoch(epoch_index) {}

    std::size_t epoch;
};

}  // namespace nc
