#include "latentseg/kernels.hpp"

#include <cstdint>

namespace latentseg::kernels {

namespace {
void check_gemm(std::size_t ak, std::size_t bk, const char* op) {
    if (ak != bk) throw ValidationError(std::string(op) + ": inner dimensions differ");
}
} // namespace

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
    check_gemm(a.cols, b.cols, "gemm_nt");
    Matrix c(a.rows, b.rows);
    const std::int64_t m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        const double* ai = a.row_ptr(static_cast<std::size_t>(i));
        double* ci = c.row_ptr(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) s += ai[t] * bj[t];
            ci[j] = s;
        }
    }
    return c;
}

Matrix gemm_nn(const Matrix& a, const Matrix& b) {
    check_gemm(a.cols, b.rows, "gemm_nn");
    Matrix c(a.rows, b.cols);
    const std::int64_t m = static_cast<std::int64_t>(a.rows);
    // t stays the innermost accumulation order per element, matching the
    // serial reference bit for bit; rows of b are walked contiguously.
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        const double* ai = a.row_ptr(static_cast<std::size_t>(i));
        double* ci = c.row_ptr(static_cast<std::size_t>(i));
        for (std::size_t t = 0; t < a.cols; ++t) {
            const double av = ai[t];
            const double* bt = b.row_ptr(t);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += av * bt[j];
        }
    }
    return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
    check_gemm(a.rows, b.rows, "gemm_tn");
    Matrix c(a.cols, b.cols);
    const std::int64_t m = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        double* ci = c.row_ptr(static_cast<std::size_t>(i));
        for (std::size_t t = 0; t < a.rows; ++t) {
            const double av = a(t, static_cast<std::size_t>(i));
            const double* bt = b.row_ptr(t);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += av * bt[j];
        }
    }
    return c;
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& c) {
    check_gemm(x.cols, c.cols, "pairwise_sqdist");
    Matrix d(x.rows, c.rows);
    const std::int64_t n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto xi = x.row(static_cast<std::size_t>(i));
        double* di = d.row_ptr(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < c.rows; ++j) di[j] = sq_dist(xi, c.row(j));
    }
    return d;
}

void colwise_mean_var(const Matrix& x, std::vector<double>& mean, std::vector<double>& var) {
    mean.assign(x.cols, 0.0);
    var.assign(x.cols, 0.0);
    if (x.rows == 0) return;
    const std::int64_t d = static_cast<std::int64_t>(x.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) s += x(i, static_cast<std::size_t>(j));
        const double mu = s / static_cast<double>(x.rows);
        double ss = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double dlt = x(i, static_cast<std::size_t>(j)) - mu;
            ss += dlt * dlt;
        }
        mean[static_cast<std::size_t>(j)] = mu;
        var[static_cast<std::size_t>(j)] = ss / static_cast<double>(x.rows);
    }
}

namespace serial {

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
    check_gemm(a.cols, b.cols, "gemm_nt");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) s += a(i, t) * b(j, t);
            c(i, j) = s;
        }
    return c;
}

Matrix gemm_nn(const Matrix& a, const Matrix& b) {
    check_gemm(a.cols, b.rows, "gemm_nn");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) s += a(i, t) * b(t, j);
            c(i, j) = s;
        }
    return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
    check_gemm(a.rows, b.rows, "gemm_tn");
    Matrix c(a.cols, b.cols);
    for (std::size_t i = 0; i < a.cols; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < a.rows; ++t) s += a(t, i) * b(t, j);
            c(i, j) = s;
        }
    return c;
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& c) {
    check_gemm(x.cols, c.cols, "pairwise_sqdist");
    Matrix d(x.rows, c.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < c.rows; ++j) d(i, j) = sq_dist(x.row(i), c.row(j));
    return d;
}

void colwise_mean_var(const Matrix& x, std::vector<double>& mean, std::vector<double>& var) {
    mean.assign(x.cols, 0.0);
    var.assign(x.cols, 0.0);
    if (x.rows == 0) return;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) s += x(i, j);
        const double mu = s / static_cast<double>(x.rows);
        double ss = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double dlt = x(i, j) - mu;
            ss += dlt * dlt;
        }
        mean[j] = mu;
        var[j] = ss / static_cast<double>(x.rows);
    }
}

} // namespace serial

} // namespace latentseg::kernels
