#include "dsie/layers.hpp"

#include <cmath>

namespace dsie {

Vector softmax(const Vector& logits) {
  Vector y = (logits.array() - logits.maxCoeff()).exp();
  return y / y.sum();
}

Vector softmax_backward(const Vector& y, const Vector& dy) {
  return (y.array() * (dy.array() - y.dot(dy))).matrix();
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix y(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    auto e = (row.array() - row.maxCoeff()).exp();
    y.row(r) = e / e.sum();
  }
  return y;
}

Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy) {
  Vector inner = (y.array() * dy.array()).rowwise().sum();
  return (y.array() * (dy.colwise() - inner).array()).matrix();
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_neg(double x) {
  // -log(sigmoid(x)) = log(1 + exp(-x))
  if (x > 0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& ln, LayerNormCache* cache) {
  const double n = static_cast<double>(x.cols());
  Vector mean = x.rowwise().sum() / n;
  Matrix centered = x.colwise() - mean;
  Vector var = centered.array().square().rowwise().sum() / n;
  Vector inv_std = (var.array() + kLayerNormEps).rsqrt();
  Matrix normalized = centered.array().colwise() * inv_std.array();
  Matrix out = (normalized.array().rowwise() * ln.gain.transpose().array()).rowwise() + ln.bias.transpose().array();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

Matrix layer_norm_backward(const LayerNormCache& cache, const LayerNormParams& ln, const Matrix& d_out,
                           LayerNormParams& grad) {
  grad.gain += (d_out.array() * cache.normalized.array()).colwise().sum().transpose().matrix();
  grad.bias += d_out.colwise().sum().transpose();
  const double n = static_cast<double>(d_out.cols());
  Matrix d_norm = d_out.array().rowwise() * ln.gain.transpose().array();
  Vector mean_d = d_norm.rowwise().sum() / n;
  Vector mean_dx = (d_norm.array() * cache.normalized.array()).rowwise().sum() / n;
  Matrix dx = d_norm.colwise() - mean_d;
  dx -= (cache.normalized.array().colwise() * mean_dx.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

std::vector<Eigen::Index> real_positions(const Mask& mask) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

Matrix gather_rows(const Matrix& full, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), full.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = full.row(rows[i]);
  return out;
}

Matrix scatter_rows(const Matrix& compact, const std::vector<Eigen::Index>& rows, Eigen::Index total_rows) {
  Matrix out = Matrix::Zero(total_rows, compact.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(rows[i]) = compact.row(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace dsie
