#pragma once

#include <stdexcept>
#include <string>

namespace skybatch {

// Bad user-supplied configuration (CLI flags, config file, mismatched inputs).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bucket store failures: missing files, truncation, checksum mismatch.
// Maps to exit code 3.
class StorageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The workload manager refused an enqueue past its configured item ceiling.
class SaturationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A scheduling decision was requested with nothing to schedule, or a queue
// operation was applied to an empty queue.
class SchedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace skybatch
