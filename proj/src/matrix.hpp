// Row-major int64 matrix. Element values carry whatever dtype the context
// declares; the container itself is width-agnostic.
#pragma once

#include <cstdint>
#include <vector>

namespace aiegrid {

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int64_t& at(int r, int c) { return data_[size_t(r) * cols_ + c]; }
    int64_t at(int r, int c) const { return data_[size_t(r) * cols_ + c]; }
    const std::vector<int64_t>& data() const { return data_; }
    std::vector<int64_t>& data() { return data_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    // Zero-padded copy with extents grown to (rows, cols).
    Matrix padded(int rows, int cols) const {
        Matrix out(rows, cols);
        for (int r = 0; r < rows_ && r < rows; ++r)
            for (int c = 0; c < cols_ && c < cols; ++c) out.at(r, c) = at(r, c);
        return out;
    }

    Matrix cropped(int rows, int cols) const {
        Matrix out(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) out.at(r, c) = at(r, c);
        return out;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int64_t> data_;
};

} // namespace aiegrid
