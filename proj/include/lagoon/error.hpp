#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lagoon {

/// Base of every error raised by the toolkit. `code()` is a short
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& what) : Error("geometry", what) {}
};

class MeshError : public Error {
public:
    explicit MeshError(const std::string& what) : Error("mesh", what) {}
};

/// Raised when a Krylov solve does not reach its tolerance. Carries the
/// relative residual after every iteration.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : Error("solver", what), history_(std::move(history)) {}

    [[nodiscard]] const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Neumann data that violates the Laplace-Neumann solvability condition.
class CompatibilityError : public Error {
public:
    CompatibilityError(const std::string& what, double defect)
        : Error("compatibility", what), defect_(defect) {}

    [[nodiscard]] double defect() const noexcept { return defect_; }

private:
    double defect_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

} // namespace lagoon
