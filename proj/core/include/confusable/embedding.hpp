#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confusable/matrix.hpp"
#include "confusable/rng.hpp"

namespace confusable {

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

// Trainable MLP embedding x -> e(x): dense layers with rectifiers between them
// and a linear output layer. Zero layers is the identity embedding.
class LearnerParams {
 public:
  explicit LearnerParams(std::size_t d_in = 0) : d_in_(d_in) {}
  // Throws InputError when the layer shapes do not chain from d_in.
  LearnerParams(std::size_t d_in, std::vector<DenseLayer> layers);

  // widths = {d_in, hidden..., d_emb}; entries uniform in +-1/sqrt(fan_in).
  static LearnerParams random(std::span<const std::size_t> widths, Rng& rng);
  static LearnerParams zeros_like(const LearnerParams& other);

  std::size_t d_in() const noexcept { return d_in_; }
  std::size_t d_emb() const noexcept;
  std::size_t num_layers() const noexcept { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  std::size_t parameter_count() const noexcept;
  // Layer by layer: weights row-major, then bias.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);
  // Index of the first layer holding a non-finite entry, or num_layers().
  std::size_t first_non_finite_layer() const;

  bool operator==(const LearnerParams&) const = default;

 private:
  std::size_t d_in_ = 0;
  std::vector<DenseLayer> layers_;
};

std::vector<double> embed(const LearnerParams& params, std::span<const double> x);

// Activations kept for backpropagation: inputs[l] feeds layer l, pre[l] is its
// output before the rectifier.
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
};

// Row i of the result embeds row i of xs.
Matrix embed_batch(const LearnerParams& params, const Matrix& xs, ForwardCache* cache = nullptr);

// Accumulates d(loss)/d(params) into grad given d(loss)/d(embeddings) for the
// batch recorded in cache.
void backpropagate(const LearnerParams& params, const ForwardCache& cache, Matrix grad_embeddings,
                   LearnerParams& grad);

}  // namespace confusable
