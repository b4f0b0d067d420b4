#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "exakit/precision.hpp"

namespace exakit {

/// Thrown when a caller breaks a documented precondition (shape, index range).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-owning column-major view with a leading dimension.
template <class T>
struct MatrixRef {
    T* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t ld = 0;

    T& operator()(std::size_t i, std::size_t j) const { return data[i + j * ld]; }

    MatrixRef block(std::size_t i0, std::size_t j0, std::size_t m, std::size_t n) const {
        if (i0 + m > rows || j0 + n > cols) {
            throw ContractViolation("MatrixRef::block out of range");
        }
        return {data + i0 + j0 * ld, m, n, ld};
    }

    operator MatrixRef<const T>() const { return {data, rows, cols, ld}; }
};

template <class T>
using ConstMatrixRef = MatrixRef<const T>;

/// Dense column-major matrix. Element type fixes the precision tag.
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = one();
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    const std::vector<T>& storage() const { return data_; }

    MatrixRef<T> ref() { return {data_.data(), rows_, cols_, rows_}; }
    ConstMatrixRef<T> ref() const { return {data_.data(), rows_, cols_, rows_}; }
    ConstMatrixRef<T> cref() const { return ref(); }

    static constexpr PrecisionTag precision() { return precision_of<T>(); }
    std::size_t storage_bytes() const { return data_.size() * element_bytes(precision()); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    static T one() {
        if constexpr (std::is_same_v<T, Bf16>) {
            return Bf16::from_bits(0x3F80);
        } else {
            return T{1};
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using DenseMatrix = Matrix<double>;

template <class T>
Matrix<T> to_matrix(ConstMatrixRef<T> v) {
    Matrix<T> m(v.rows, v.cols);
    for (std::size_t j = 0; j < v.cols; ++j)
        for (std::size_t i = 0; i < v.rows; ++i) m(i, j) = v(i, j);
    return m;
}

}  // namespace exakit
