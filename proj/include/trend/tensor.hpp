#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trend {

// Dense row-major 2-D array of doubles. The only tensor type in the project;
// everything downstream (MLPs, batched losses) is built on it.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::size_t size() const { return data.size(); }
    void fill(double v) { data.assign(data.size(), v); }

    bool all_finite() const;
};

// C = A * B^T   (A: m×k, B: n×k, C: m×n)
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
// C = A^T * B   (A: k×m, B: k×n, C: m×n)
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
// C = A * B     (A: m×k, B: k×n, C: m×n)
Tensor2 matmul_nn(const Tensor2& a, const Tensor2& b);

// Adds v to every row of m (v.size() == m.cols).
void add_row_inplace(Tensor2& m, std::span<const double> v);

// Column sums of m, length m.cols.
std::vector<double> column_sums(const Tensor2& m);

}  // namespace trend
