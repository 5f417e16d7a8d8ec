#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "it2ml/errors.hpp"

namespace it2ml {

// Dense row-major matrix of doubles. All training math is done in 64-bit so
// finite-difference gradient checks stay tight.
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

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix from_row(std::span<const double> v) {
        Matrix m(1, v.size());
        std::copy(v.begin(), v.end(), m.data.begin());
        return m;
    }
};

// Binary label matrix (n instances x L labels), values strictly 0/1.
struct LabelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> data;

    LabelMatrix() = default;
    LabelMatrix(std::size_t r, std::size_t c, std::uint8_t fill = 0)
        : rows(r), cols(c), data(r * c, fill) {}

    std::uint8_t& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    std::uint8_t operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<const std::uint8_t> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<std::uint8_t> row(std::size_t i) { return {data.data() + i * cols, cols}; }

    // Count of ones in row i (the label cardinality |y*|).
    std::size_t cardinality(std::size_t i) const {
        std::size_t c = 0;
        for (std::size_t j = 0; j < cols; ++j) c += (*this)(i, j);
        return c;
    }
};

}  // namespace it2ml
