#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace lagoon {

/// Compressed sparse row matrix. Rows are sorted by column and carry no
/// explicit zeros; immutable after assembly.
class SparseMatrix {
public:
    SparseMatrix() = default;

    [[nodiscard]] std::size_t rows() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
    [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }
    [[nodiscard]] bool symmetric() const { return symmetric_; }

    [[nodiscard]] std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    [[nodiscard]] std::span<const std::int32_t> columns() const { return columns_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    /// Entry (i, j), zero when not stored.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;
    [[nodiscard]] std::vector<double> diagonal() const;

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;

    /// True when the stored pattern and values equal those of the transpose
    /// within `tol` (absolute).
    [[nodiscard]] bool is_symmetric(double tol) const;

private:
    friend class TripletBuilder;
    std::vector<std::size_t> row_offsets_;
    std::vector<std::int32_t> columns_;
    std::vector<double> values_;
    bool symmetric_ = false;
};

/// Collects (row, col, value) contributions; duplicates are summed.
class TripletBuilder {
public:
    explicit TripletBuilder(std::size_t n) : n_(n) {}

    void add(std::size_t row, std::size_t col, double value);
    void reserve(std::size_t count) { entries_.reserve(count); }
    [[nodiscard]] std::size_t size() const { return n_; }

    /// Sums duplicates, drops entries that end up exactly zero.
    [[nodiscard]] SparseMatrix build(bool symmetric) const;

private:
    struct Entry {
        std::int32_t row;
        std::int32_t col;
        double value;
    };
    std::size_t n_;
    std::vector<Entry> entries_;
};

enum class Nullspace { None, Constants };

struct SolverOptions {
    double tol = 1e-10; // relative residual ||b - A x|| / ||b||
    std::size_t max_iter = 20000;
    Nullspace nullspace = Nullspace::None;
    bool jacobi = true;
    /// Allowed |sum(b)| relative to max(1, sum|b|) when nullspace = Constants.
    double compatibility_tol = 1e-10;
    /// Incomplete LU factorization on the matrix pattern; takes precedence
    /// over Jacobi. Used by bicgstab_solve only.
    bool ilu = false;
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> residual_history;
};

/// Preconditioned conjugate gradient for symmetric positive (semi-)definite
/// systems. With Nullspace::Constants the data must be orthogonal to the
/// constants, iterates are deflated every step and the result has zero
/// mean. Throws CompatibilityError / SolverError.
std::vector<double> cg_solve(const SparseMatrix& a, std::span<const double> b, const SolverOptions& options,
                             SolveReport* report = nullptr, std::span<const double> x0 = {});

/// Jacobi-preconditioned BiCGStab for nonsymmetric systems. Same contract as
/// cg_solve without nullspace handling.
std::vector<double> bicgstab_solve(const SparseMatrix& a, std::span<const double> b, const SolverOptions& options,
                                   SolveReport* report = nullptr, std::span<const double> x0 = {});

/// Matrix Market coordinate export (general, 1-based).
void write_matrix_market(std::ostream& os, const SparseMatrix& a);

double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

} // namespace lagoon
