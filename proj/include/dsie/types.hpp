#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dsie {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using ItemIndex = std::int32_t;
using UserIndex = std::int32_t;

// 1 marks a real item, 0 a padding slot.
using Mask = std::vector<std::uint8_t>;

using Rng = std::mt19937_64;

enum class Execution { serial, parallel };

// Domain-level failure: bad input data, inconsistent files, diverged training.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dsie
