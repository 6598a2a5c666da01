#include "lagoon/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

#include "lagoon/error.hpp"

namespace lagoon {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(j));
    if (it == last || *it != static_cast<std::int32_t>(j)) return 0.0;
    return values_[static_cast<std::size_t>(it - columns_.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(rows(), 0.0);
    for (std::size_t i = 0; i < rows(); ++i) d[i] = at(i, i);
    return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * x[columns_[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(rows());
    multiply(x, y);
    return y;
}

bool SparseMatrix::is_symmetric(double tol) const {
    for (std::size_t i = 0; i < rows(); ++i) {
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (std::abs(values_[k] - at(static_cast<std::size_t>(columns_[k]), i)) > tol) return false;
        }
    }
    return true;
}

void TripletBuilder::add(std::size_t row, std::size_t col, double value) {
    if (row >= n_ || col >= n_) {
        throw InvalidArgument("triplet (" + std::to_string(row) + ", " + std::to_string(col) +
                              ") out of range for dimension " + std::to_string(n_));
    }
    entries_.push_back({static_cast<std::int32_t>(row), static_cast<std::int32_t>(col), value});
}

SparseMatrix TripletBuilder::build(bool symmetric) const {
    std::vector<Entry> sorted = entries_;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.symmetric_ = symmetric;
    m.row_offsets_.assign(n_ + 1, 0);
    std::size_t k = 0;
    while (k < sorted.size()) {
        const Entry first = sorted[k];
        double sum = 0.0;
        while (k < sorted.size() && sorted[k].row == first.row && sorted[k].col == first.col) sum += sorted[k++].value;
        if (sum == 0.0) continue;
        m.columns_.push_back(first.col);
        m.values_.push_back(sum);
        ++m.row_offsets_[static_cast<std::size_t>(first.row) + 1];
    }
    std::partial_sum(m.row_offsets_.begin(), m.row_offsets_.end(), m.row_offsets_.begin());
    return m;
}

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

void remove_mean(std::span<double> v) {
    if (v.empty()) return;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

std::vector<double> inverse_diagonal(const SparseMatrix& a, bool jacobi) {
    std::vector<double> inv(a.rows(), 1.0);
    if (!jacobi) return inv;
    const std::vector<double> d = a.diagonal();
    for (std::size_t i = 0; i < d.size(); ++i) inv[i] = d[i] != 0.0 ? 1.0 / d[i] : 1.0;
    return inv;
}

// ILU(0): L (unit lower) and U share the pattern of A.
class Ilu0 {
public:
    explicit Ilu0(const SparseMatrix& a)
        : offsets_(a.row_offsets().begin(), a.row_offsets().end()),
          cols_(a.columns().begin(), a.columns().end()),
          vals_(a.values().begin(), a.values().end()),
          diag_(a.rows()) {
        const std::size_t n = a.rows();
        std::vector<std::ptrdiff_t> where(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = offsets_[i], hi = offsets_[i + 1];
            for (std::size_t k = lo; k < hi; ++k) where[static_cast<std::size_t>(cols_[k])] = static_cast<std::ptrdiff_t>(k);
            std::size_t d = hi;
            for (std::size_t k = lo; k < hi; ++k) {
                const auto c = static_cast<std::size_t>(cols_[k]);
                if (c >= i) {
                    if (c == i) d = k;
                    break;
                }
                vals_[k] /= vals_[diag_[c]];
                const double f = vals_[k];
                for (std::size_t m = diag_[c] + 1; m < offsets_[c + 1]; ++m) {
                    const std::ptrdiff_t pos = where[static_cast<std::size_t>(cols_[m])];
                    if (pos >= 0) vals_[static_cast<std::size_t>(pos)] -= f * vals_[m];
                }
            }
            if (d == hi || vals_[d] == 0.0) throw SolverError("zero pivot in incomplete factorization", {});
            diag_[i] = d;
            for (std::size_t k = lo; k < hi; ++k) where[static_cast<std::size_t>(cols_[k])] = -1;
        }
    }

    void apply(std::span<const double> in, std::span<double> out) const {
        const std::size_t n = diag_.size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = in[i];
            for (std::size_t k = offsets_[i]; k < diag_[i]; ++k) s -= vals_[k] * out[static_cast<std::size_t>(cols_[k])];
            out[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = out[i];
            for (std::size_t k = diag_[i] + 1; k < offsets_[i + 1]; ++k) s -= vals_[k] * out[static_cast<std::size_t>(cols_[k])];
            out[i] = s / vals_[diag_[i]];
        }
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::int32_t> cols_;
    std::vector<double> vals_;
    std::vector<std::size_t> diag_;
};

void check_sizes(const SparseMatrix& a, std::span<const double> b, std::span<const double> x0) {
    if (b.size() != a.rows()) throw InvalidArgument("right-hand side size does not match the matrix");
    if (!x0.empty() && x0.size() != a.rows()) throw InvalidArgument("initial guess size does not match the matrix");
}

} // namespace

std::vector<double> cg_solve(const SparseMatrix& a, std::span<const double> b, const SolverOptions& options,
                             SolveReport* report, std::span<const double> x0) {
    check_sizes(a, b, x0);
    const std::size_t n = a.rows();
    const bool deflate = options.nullspace == Nullspace::Constants;
    if (deflate) {
        double sum = 0.0, abs_sum = 0.0;
        for (double v : b) sum += v, abs_sum += std::abs(v);
        if (std::abs(sum) > options.compatibility_tol * std::max(1.0, abs_sum)) {
            throw CompatibilityError("right-hand side is not orthogonal to the constants (sum = " +
                                         sci(sum) + ")",
                                     sum);
        }
    }

    std::vector<double> x(n, 0.0);
    if (!x0.empty()) std::copy(x0.begin(), x0.end(), x.begin());
    if (deflate) remove_mean(x);

    SolveReport local;
    SolveReport& rep = report ? *report : local;
    rep = {};

    std::vector<double> bb(b.begin(), b.end());
    if (deflate) remove_mean(bb);
    const double bnorm = norm2(bb);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return x;
    }

    const std::vector<double> dinv = inverse_diagonal(a, options.jacobi);
    std::vector<double> r(n), z(n), p(n), ap(n);
    const auto precondition = [&](std::span<const double> in, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = dinv[i] * in[i];
        if (deflate) remove_mean(out);
    };
    const auto true_residual = [&] {
        a.multiply(x, ap);
        for (std::size_t i = 0; i < n; ++i) r[i] = bb[i] - ap[i];
        if (deflate) remove_mean(r);
        return norm2(r) / bnorm;
    };

    std::size_t it = 0;
    double rel = true_residual();
    rep.residual_history.push_back(rel);
    // Restarts guard against drift between the recursive and true residuals.
    for (int restart = 0; restart < 4 && rel > options.tol && it < options.max_iter; ++restart) {
        precondition(r, z);
        p = z;
        double rz = dot(r, z);
        while (rel > options.tol && it < options.max_iter) {
            a.multiply(p, ap);
            const double pap = dot(p, ap);
            if (!(pap > 0.0)) break;
            const double alpha = rz / pap;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if (deflate) remove_mean(r);
            precondition(r, z);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
            ++it;
            rel = norm2(r) / bnorm;
            rep.residual_history.push_back(rel);
        }
        rel = true_residual();
    }
    if (deflate) remove_mean(x);
    rep.iterations = it;
    rep.relative_residual = true_residual();
    if (rep.relative_residual > options.tol) {
        throw SolverError("CG did not converge in " + std::to_string(it) + " iterations (relative residual " +
                              sci(rep.relative_residual) + ")",
                          rep.residual_history);
    }
    return x;
}

std::vector<double> bicgstab_solve(const SparseMatrix& a, std::span<const double> b, const SolverOptions& options,
                                   SolveReport* report, std::span<const double> x0) {
    check_sizes(a, b, x0);
    const std::size_t n = a.rows();
    std::vector<double> x(n, 0.0);
    if (!x0.empty()) std::copy(x0.begin(), x0.end(), x.begin());

    SolveReport local;
    SolveReport& rep = report ? *report : local;
    rep = {};

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return x;
    }
    const std::vector<double> dinv = inverse_diagonal(a, options.jacobi);
    std::optional<Ilu0> ilu;
    if (options.ilu) ilu.emplace(a);
    const auto precondition = [&](std::span<const double> in, std::span<double> out) {
        if (ilu) {
            ilu->apply(in, out);
            return;
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = dinv[i] * in[i];
    };
    std::vector<double> r(n), r_hat(n), p(n), v(n), s(n), t(n), y(n), zz(n);
    const auto true_residual = [&] {
        a.multiply(x, t);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
        return norm2(r) / bnorm;
    };

    std::size_t it = 0;
    double rel = true_residual();
    rep.residual_history.push_back(rel);
    for (int restart = 0; restart < 8 && rel > options.tol && it < options.max_iter; ++restart) {
        r_hat = r;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        while (rel > options.tol && it < options.max_iter) {
            const double rho_new = dot(r_hat, r);
            if (rho_new == 0.0) break;
            const double beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            precondition(p, y);
            a.multiply(y, v);
            const double rv = dot(r_hat, v);
            if (rv == 0.0) break;
            alpha = rho / rv;
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            ++it;
            if (norm2(s) / bnorm <= options.tol) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * y[i];
                rel = norm2(s) / bnorm;
                rep.residual_history.push_back(rel);
                break;
            }
            precondition(s, zz);
            a.multiply(zz, t);
            const double tt = dot(t, t);
            omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * y[i] + omega * zz[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm2(r) / bnorm;
            rep.residual_history.push_back(rel);
            if (omega == 0.0) break;
        }
        rel = true_residual();
    }
    rep.iterations = it;
    rep.relative_residual = true_residual();
    if (rep.relative_residual > options.tol) {
        throw SolverError("BiCGStab did not converge in " + std::to_string(it) + " iterations (relative residual " +
                              sci(rep.relative_residual) + ")",
                          rep.residual_history);
    }
    return x;
}

void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.rows() << ' ' << a.nonzeros() << '\n';
    os << std::setprecision(17);
    const auto offsets = a.row_offsets();
    const auto cols = a.columns();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) os << i + 1 << ' ' << cols[k] + 1 << ' ' << vals[k] << '\n';
    }
}

} // namespace lagoon
