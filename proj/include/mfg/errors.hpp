#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

// Query left the tube around the boundary where the signed distance is C^2;
// the projection formula x - d(x) Db(x) is not valid there.
struct TubeExceeded : std::runtime_error {
    explicit TubeExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Time argument outside [0, T].
struct OutOfHorizon : std::runtime_error {
    explicit OutOfHorizon(const std::string& what) : std::runtime_error(what) {}
};

// Best-response start point violates the state constraint.
struct InfeasibleStart : std::runtime_error {
    explicit InfeasibleStart(const std::string& what) : std::runtime_error(what) {}
};

// Declared Lagrangian constants fail the sampled growth/coercivity/convexity checks.
struct AssumptionViolation : std::runtime_error {
    explicit AssumptionViolation(const std::string& what) : std::runtime_error(what) {}
};

// Arc and flow snapshots live on different time grids.
struct GridMismatch : std::invalid_argument {
    explicit GridMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Scenario file failed schema validation; `field` is the JSON path of the offender.
struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what), field(std::move(field_path)) {}
};

}  // namespace mfg
