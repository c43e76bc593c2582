#include "dsie/params.hpp"

#include <cmath>

namespace dsie {

ModelParams zeros_like(const ModelDims& dims) {
  if (dims.item_count < 1 || dims.dim < 1 || dims.layers < 1 || dims.interests < 1)
    throw std::invalid_argument("model dimensions must be positive");
  const Eigen::Index d = dims.dim, k = dims.interests;
  ModelParams p;
  p.dims = dims;
  p.item_embeddings = Matrix::Zero(dims.item_count + 1, d);
  p.blocks.resize(static_cast<std::size_t>(dims.layers));
  for (auto& b : p.blocks) {
    b.attention.query = Matrix::Zero(d, d);
    b.attention.key = Matrix::Zero(d, d);
    b.attention.value = Matrix::Zero(d, d);
    b.weight = Matrix::Zero(d, d);
    b.bias = Vector::Zero(d);
  }
  p.readout_hidden = Matrix::Zero(dims.layers * d, d);
  p.readout_score = Vector::Zero(d);
  p.prototypes = Matrix::Zero(k, d);
  p.assign_proj = Matrix::Zero(d, d);
  for (auto* ln : {&p.item_norm, &p.prototype_norm, &p.interest_norm}) {
    ln->gain = Vector::Zero(d);
    ln->bias = Vector::Zero(d);
  }
  p.position_hidden = Matrix::Zero(d, 4 * d);
  p.position_hidden_bias = Vector::Zero(4 * d);
  p.position_out = Matrix::Zero(4 * d, k);
  p.position_out_bias = Vector::Zero(k);
  p.guide_hidden = Matrix::Zero(2 * d, d);
  p.guide_score = Vector::Zero(d);
  p.interest_bias = Matrix::Zero(k, d);
  return p;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = zeros_like(dims);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dims.dim));
  std::uniform_real_distribution<double> uniform(-scale, scale);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
  };
  fill(p.item_embeddings);
  p.item_embeddings.row(p.pad_index()).setZero();
  for (auto& b : p.blocks) {
    fill(b.attention.query);
    fill(b.attention.key);
    fill(b.attention.value);
    fill(b.weight);
  }
  fill(p.readout_hidden);
  fill(p.readout_score);
  fill(p.prototypes);
  fill(p.assign_proj);
  for (auto* ln : {&p.item_norm, &p.prototype_norm, &p.interest_norm}) ln->gain.setOnes();
  fill(p.position_hidden);
  fill(p.position_out);
  fill(p.guide_hidden);
  fill(p.guide_score);
  return p;
}

std::vector<TensorRef> tensors(ModelParams& p) {
  std::vector<TensorRef> out;
  auto add = [&out](std::string name, auto& m) {
    out.push_back({std::move(name), m.data(), m.rows(), m.cols()});
  };
  add("item_embeddings", p.item_embeddings);
  for (std::size_t s = 0; s < p.blocks.size(); ++s) {
    const auto prefix = "block" + std::to_string(s) + ".";
    add(prefix + "query", p.blocks[s].attention.query);
    add(prefix + "key", p.blocks[s].attention.key);
    add(prefix + "value", p.blocks[s].attention.value);
    add(prefix + "weight", p.blocks[s].weight);
    add(prefix + "bias", p.blocks[s].bias);
  }
  add("readout_hidden", p.readout_hidden);
  add("readout_score", p.readout_score);
  add("prototypes", p.prototypes);
  add("assign_proj", p.assign_proj);
  add("item_norm.gain", p.item_norm.gain);
  add("item_norm.bias", p.item_norm.bias);
  add("prototype_norm.gain", p.prototype_norm.gain);
  add("prototype_norm.bias", p.prototype_norm.bias);
  add("interest_norm.gain", p.interest_norm.gain);
  add("interest_norm.bias", p.interest_norm.bias);
  add("position_hidden", p.position_hidden);
  add("position_hidden_bias", p.position_hidden_bias);
  add("position_out", p.position_out);
  add("position_out_bias", p.position_out_bias);
  add("guide_hidden", p.guide_hidden);
  add("guide_score", p.guide_score);
  add("interest_bias", p.interest_bias);
  return out;
}

void set_zero(ModelParams& params) {
  for (auto& t : tensors(params))
    for (auto& v : t.values()) v = 0.0;
}

void add_into(ModelParams& dst, const ModelParams& src) {
  auto a = tensors(dst);
  auto b = tensors(const_cast<ModelParams&>(src));
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto av = a[i].values();
    auto bv = b[i].values();
    for (std::size_t j = 0; j < av.size(); ++j) av[j] += bv[j];
  }
}

bool all_finite(const ModelParams& params) {
  for (auto& t : tensors(const_cast<ModelParams&>(params)))
    for (double v : t.values())
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace dsie
