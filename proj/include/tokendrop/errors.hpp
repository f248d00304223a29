#pragma once

#include <stdexcept>
#include <string>

namespace tokendrop {

// Shape disagreement between tensor operands.
struct DimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row/position index outside the valid range.
struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated an operation precondition.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid model/run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Corpus could not be ingested (empty, unreadable, ...).
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Drop plan could not be built (e.g. kept count below special count).
struct PlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File/serialization failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss); a diagnostic checkpoint was written.
struct TrainAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tokendrop
