#pragma once

#include <stdexcept>
#include <string>

namespace flowsieve {

// Error categories map to CLI exit codes: config 2, data 3, training 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace flowsieve
