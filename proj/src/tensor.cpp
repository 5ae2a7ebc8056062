#include "trend/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace trend {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

ConstMap map_of(const Tensor2& t) {
    return ConstMap(t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
}

}  // namespace

bool Tensor2::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
    Tensor2 c(a.rows, b.rows);
    Map(c.data.data(), c.rows, c.cols).noalias() = map_of(a) * map_of(b).transpose();
    return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: inner dimension mismatch");
    Tensor2 c(a.cols, b.cols);
    Map(c.data.data(), c.rows, c.cols).noalias() = map_of(a).transpose() * map_of(b);
    return c;
}

Tensor2 matmul_nn(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul_nn: inner dimension mismatch");
    Tensor2 c(a.rows, b.cols);
    Map(c.data.data(), c.rows, c.cols).noalias() = map_of(a) * map_of(b);
    return c;
}

void add_row_inplace(Tensor2& m, std::span<const double> v) {
    if (v.size() != m.cols) throw std::invalid_argument("add_row_inplace: width mismatch");
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += v[c];
    }
}

std::vector<double> column_sums(const Tensor2& m) {
    std::vector<double> out(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c];
    }
    return out;
}

}  // namespace trend
