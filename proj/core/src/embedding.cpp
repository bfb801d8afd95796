#include "confusable/embedding.hpp"

#include <cmath>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {

LearnerParams::LearnerParams(std::size_t d_in, std::vector<DenseLayer> layers)
    : d_in_(d_in), layers_(std::move(layers)) {
  std::size_t width = d_in_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.cols() != width || layer.bias.size() != layer.weight.rows()) {
      throw InputError("layer " + std::to_string(l) + " shape does not chain from width " +
                       std::to_string(width));
    }
    width = layer.weight.rows();
  }
}

LearnerParams LearnerParams::random(std::span<const std::size_t> widths, Rng& rng) {
  if (widths.empty()) throw InputError("embedding needs at least an input width");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    std::uniform_real_distribution<double> init(-bound, bound);
    DenseLayer layer{Matrix(widths[l + 1], widths[l]), std::vector<double>(widths[l + 1])};
    for (double& w : layer.weight.values()) w = init(rng);
    for (double& b : layer.bias) b = init(rng);
    layers.push_back(std::move(layer));
  }
  return LearnerParams(widths.front(), std::move(layers));
}

LearnerParams LearnerParams::zeros_like(const LearnerParams& other) {
  LearnerParams zeros = other;
  for (auto& layer : zeros.layers_) {
    layer.weight.fill(0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return zeros;
}

std::size_t LearnerParams::d_emb() const noexcept {
  return layers_.empty() ? d_in_ : layers_.back().weight.rows();
}

std::size_t LearnerParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> LearnerParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void LearnerParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw InputError("expected " + std::to_string(parameter_count()) + " parameter values, got " +
                     std::to_string(values.size()));
  }
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    for (double& w : layer.weight.values()) w = values[pos++];
    for (double& b : layer.bias) b = values[pos++];
  }
}

std::size_t LearnerParams::first_non_finite_layer() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (double w : layers_[l].weight.values()) {
      if (!std::isfinite(w)) return l;
    }
    for (double b : layers_[l].bias) {
      if (!std::isfinite(b)) return l;
    }
  }
  return layers_.size();
}

Matrix embed_batch(const LearnerParams& params, const Matrix& xs, ForwardCache* cache) {
  if (xs.cols() != params.d_in()) {
    throw InputError("embedding expects " + std::to_string(params.d_in()) + " features, got " +
                     std::to_string(xs.cols()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix current = xs;
  const auto& layers = params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix out;
    multiply_transposed(current, layers[l].weight, out);
    for (std::size_t i = 0; i < out.rows(); ++i) {
      auto row = out.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += layers[l].bias[j];
    }
    if (cache) {
      cache->inputs.push_back(std::move(current));
      cache->pre.push_back(out);
    }
    if (l + 1 < layers.size()) {
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    }
    current = std::move(out);
  }
  return current;
}

std::vector<double> embed(const LearnerParams& params, std::span<const double> x) {
  Matrix single(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const Matrix out = embed_batch(params, single);
  return {out.values().begin(), out.values().end()};
}

void backpropagate(const LearnerParams& params, const ForwardCache& cache, Matrix grad_embeddings,
                   LearnerParams& grad) {
  const auto& layers = params.layers();
  Matrix upstream = std::move(grad_embeddings);
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) {
      const Matrix& pre = cache.pre[l];
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (pre.values()[i] <= 0.0) upstream.values()[i] = 0.0;
      }
    }
    auto& g = grad.layers()[l];
    accumulate_transposed_product(upstream, cache.inputs[l], g.weight);
    for (std::size_t i = 0; i < upstream.rows(); ++i) {
      const auto row = upstream.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g.bias[j] += row[j];
    }
    if (l > 0) {
      Matrix next;
      multiply(upstream, layers[l].weight, next);
      upstream = std::move(next);
    }
  }
}

}  // namespace confusable
