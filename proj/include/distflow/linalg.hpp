#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "distflow/errors.hpp"

namespace distflow {

/// Dense row-major square matrix, sized for feeder-scale systems (N up to a
/// few hundred), solved by LU with partial pivoting.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

struct LuFactors {
    DenseMatrix lu;
    std::vector<std::size_t> perm;
    double rcond = 0.0;  // min/max pivot magnitude; cheap conditioning estimate
};

inline constexpr double kSingularRcond = 1e-12;

/// Factor A = P*L*U in place (copy taken). Throws singular_system when a
/// pivot collapses or the pivot-ratio conditioning estimate falls below
/// kSingularRcond.
inline LuFactors lu_factor(DenseMatrix a) {
    const std::size_t n = a.size();
    LuFactors f{std::move(a), {}, 0.0};
    f.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

    double min_piv = 0.0, max_piv = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > std::abs(f.lu(p, k))) p = i;
        if (p != k) {
            std::swap(f.perm[k], f.perm[p]);
            for (std::size_t j = 0; j < n; ++j) {
                const double t = f.lu(k, j);
                f.lu(k, j) = f.lu(p, j);
                f.lu(p, j) = t;
            }
        }
        const double piv = std::abs(f.lu(k, k));
        min_piv = (k == 0) ? piv : std::min(min_piv, piv);
        max_piv = std::max(max_piv, piv);
        if (piv == 0.0) fail(errc::singular_system, "exactly singular matrix");
        for (std::size_t i = k + 1; i < n; ++i) {
            f.lu(i, k) /= f.lu(k, k);
            const double lik = f.lu(i, k);
            if (lik == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= lik * f.lu(k, j);
        }
    }
    f.rcond = (max_piv > 0.0) ? min_piv / max_piv : 0.0;
    if (f.rcond < kSingularRcond) fail(errc::singular_system, "matrix numerically singular");
    return f;
}

inline std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b) {
    const std::size_t n = f.lu.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[f.perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
        y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= f.lu(ii, j) * y[j];
        y[ii] = s / f.lu(ii, ii);
    }
    return y;
}

/// One-shot solve of A x = b.
inline std::vector<double> solve_dense(DenseMatrix a, const std::vector<double>& b) {
    return lu_solve(lu_factor(std::move(a)), b);
}

}  // namespace distflow
