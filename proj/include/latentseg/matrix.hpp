#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentseg/errors.hpp"

namespace latentseg {

// Dense row-major matrix of doubles. 64-bit floats throughout.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    std::span<double> row(std::size_t i) { return {row_ptr(i), cols}; }
    std::span<const double> row(std::size_t i) const { return {row_ptr(i), cols}; }

    std::vector<double> row_copy(std::size_t i) const {
        return {row_ptr(i), row_ptr(i) + cols};
    }

    void set_row(std::size_t i, std::span<const double> v) {
        for (std::size_t j = 0; j < cols; ++j) (*this)(i, j) = v[j];
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix from_rows(const std::vector<std::vector<double>>& r) {
        Matrix m(r.size(), r.empty() ? 0 : r.front().size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i].size() != m.cols) throw ValidationError("from_rows: ragged input");
            m.set_row(i, r[i]);
        }
        return m;
    }

    // Rows selected by index, in the given order.
    Matrix take(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i) out.set_row(i, row(idx[i]));
        return out;
    }
};

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace latentseg
