#pragma once

#include <stdexcept>
#include <string>

namespace gridsyn {

// Error taxonomy shared across the library. The CLI maps these onto its
// exit codes: ValidationError -> 2, NumericalError -> 3, SolverError -> 4,
// SimulationError -> 5.

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : ValidationError {
    explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

// Ill-conditioned or divergent numerics outside the conic solver
// (Newton non-convergence, singular Jacobians, Lyapunov ill-posedness).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// The interior-point solver gave up (max iterations, breakdown).
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gridsyn
