#pragma once

#include <vector>

#include "dsie/params.hpp"
#include "dsie/types.hpp"

namespace dsie {

inline constexpr double kLayerNormEps = 1e-5;

Vector softmax(const Vector& logits);

// Backward of y = softmax(x): dx = y * (dy - <y, dy>).
Vector softmax_backward(const Vector& y, const Vector& dy);

// Row-wise softmax of a matrix.
Matrix softmax_rows(const Matrix& logits);
Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy);

double sigmoid(double x);

// Numerically stable -log(sigmoid(x)).
double softplus_neg(double x);

// Row-wise layer normalization with elementwise affine.
struct LayerNormCache {
  Matrix normalized;  // (x - mean) / std per row
  Vector inv_std;     // per row
};

Matrix layer_norm(const Matrix& x, const LayerNormParams& ln, LayerNormCache* cache = nullptr);
Matrix layer_norm_backward(const LayerNormCache& cache, const LayerNormParams& ln, const Matrix& d_out,
                           LayerNormParams& grad);

// Indices of real positions in a mask, ascending.
std::vector<Eigen::Index> real_positions(const Mask& mask);

// Copies the real rows of a full-length matrix into a compact one and back.
Matrix gather_rows(const Matrix& full, const std::vector<Eigen::Index>& rows);
Matrix scatter_rows(const Matrix& compact, const std::vector<Eigen::Index>& rows, Eigen::Index total_rows);

}  // namespace dsie
