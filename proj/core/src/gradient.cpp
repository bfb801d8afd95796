#include "confusable/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {
namespace {

struct TaskBatch {
  Matrix inputs;  // support rows class by class (target first), then queries
  std::size_t way = 0;
  std::size_t shot = 0;
  std::size_t queries = 0;

  std::size_t support_rows() const { return way * shot; }
};

TaskBatch stack_task(const Dataset& dataset, const EpisodeTask& task) {
  TaskBatch batch;
  batch.way = task.support.size();
  batch.shot = task.support.front().instances.size();
  batch.queries = task.query.size();
  batch.inputs = Matrix(batch.support_rows() + batch.queries, dataset.dim());
  std::size_t r = 0;
  for (const auto& group : task.support) {
    if (group.instances.size() != batch.shot) throw InputError("task support classes differ in shot");
    for (std::size_t i : group.instances) batch.inputs.set_row(r++, dataset.instance(group.class_id, i));
  }
  for (std::size_t i : task.query) batch.inputs.set_row(r++, dataset.instance(task.target, i));
  return batch;
}

// Adds d(scale * log p_target)/dZ into grad for every query; returns the sum of
// floored log-probabilities.
double prototypical_head(const TaskBatch& batch, const Matrix& z, double temperature, double scale,
                         Matrix& grad) {
  const std::size_t d = z.cols();
  Matrix support(batch.support_rows(), d);
  for (std::size_t i = 0; i < batch.support_rows(); ++i) support.set_row(i, z.row(i));
  Matrix queries(batch.queries, d);
  for (std::size_t q = 0; q < batch.queries; ++q) queries.set_row(q, z.row(batch.support_rows() + q));

  const Matrix prototypes = block_means(support, batch.shot);
  Matrix probs = prototype_logits(queries, prototypes, temperature);
  Matrix proto_grad(batch.way, d);
  double log_sum = 0.0;
  for (std::size_t q = 0; q < batch.queries; ++q) {
    auto p = probs.row(q);
    softmax_inplace(p);
    log_sum += std::log(std::max(p[0], kProbabilityFloor));
    if (p[0] < kProbabilityFloor) continue;
    auto gq = grad.row(batch.support_rows() + q);
    const auto zq = queries.row(q);
    for (std::size_t w = 0; w < batch.way; ++w) {
      // d log p_0 / d logit_w, logit_w = -||zq - c_w||^2 / T.
      const double g = scale * ((w == 0 ? 1.0 : 0.0) - p[w]) * 2.0 / temperature;
      const auto cw = prototypes.row(w);
      auto gc = proto_grad.row(w);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = zq[j] - cw[j];
        gq[j] -= g * diff;
        gc[j] += g * diff;
      }
    }
  }
  const double inv_shot = 1.0 / static_cast<double>(batch.shot);
  for (std::size_t i = 0; i < batch.support_rows(); ++i) {
    const auto gc = proto_grad.row(i / batch.shot);
    auto gi = grad.row(i);
    for (std::size_t j = 0; j < d; ++j) gi[j] += gc[j] * inv_shot;
  }
  return log_sum;
}

// d cos(u, v) / du with norms offset by kNormEpsilon.
void cosine_grad_wrt_first(std::span<const double> u, std::span<const double> v, double norm_u,
                           double norm_v, double coeff, std::span<double> out) {
  const double nu = norm_u + kNormEpsilon;
  const double nv = norm_v + kNormEpsilon;
  const double uv = dot(u, v);
  const double radial = norm_u > 0.0 ? uv / (nu * nu * nv * norm_u) : 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) out[j] += coeff * (v[j] / (nu * nv) - radial * u[j]);
}

double matching_head(const TaskBatch& batch, const Matrix& z, double temperature, double scale,
                     Matrix& grad) {
  const std::size_t n_support = batch.support_rows();
  std::vector<double> norms(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) norms[i] = std::sqrt(dot(z.row(i), z.row(i)));

  std::vector<double> attention(n_support);
  double log_sum = 0.0;
  for (std::size_t q = 0; q < batch.queries; ++q) {
    const std::size_t qr = n_support + q;
    const auto zq = z.row(qr);
    for (std::size_t i = 0; i < n_support; ++i) {
      attention[i] = dot(zq, z.row(i)) /
                     ((norms[qr] + kNormEpsilon) * (norms[i] + kNormEpsilon)) / temperature;
    }
    softmax_inplace(attention);
    double p_target = 0.0;
    for (std::size_t i = 0; i < batch.shot; ++i) p_target += attention[i];
    log_sum += std::log(std::max(p_target, kProbabilityFloor));
    if (p_target < kProbabilityFloor) continue;
    for (std::size_t i = 0; i < n_support; ++i) {
      const double in_target = i < batch.shot ? 1.0 : 0.0;
      // d log p_target / d score_i, score_i = cos_i / T.
      const double g = scale * attention[i] * (in_target - p_target) / p_target / temperature;
      if (g == 0.0) continue;
      cosine_grad_wrt_first(zq, z.row(i), norms[qr], norms[i], g, grad.row(qr));
      cosine_grad_wrt_first(z.row(i), zq, norms[i], norms[qr], g, grad.row(i));
    }
  }
  return log_sum;
}

}  // namespace

EpisodeGradient loss_gradient(const LearnerParams& params, const Dataset& dataset,
                              std::span<const EpisodeTask> tasks, LearnerKind kind,
                              double temperature) {
  if (!(temperature > 0.0)) throw InputError("softmax temperature must be positive");
  EpisodeGradient result{0.0, LearnerParams::zeros_like(params)};
  std::size_t total_queries = 0;
  for (const auto& task : tasks) total_queries += task.query.size();
  if (total_queries == 0) return result;
  // The gradient is of -J, J being a mean over all queries.
  const double scale = -1.0 / static_cast<double>(total_queries);

  double log_sum = 0.0;
  ForwardCache cache;
  for (const auto& task : tasks) {
    const TaskBatch batch = stack_task(dataset, task);
    const Matrix z = embed_batch(params, batch.inputs, &cache);
    Matrix grad_z(z.rows(), z.cols());
    log_sum += kind == LearnerKind::Prototypical
                   ? prototypical_head(batch, z, temperature, scale, grad_z)
                   : matching_head(batch, z, temperature, scale, grad_z);
    backpropagate(params, cache, std::move(grad_z), result.gradient);
  }
  result.objective = log_sum / static_cast<double>(total_queries);

  const std::size_t bad = result.gradient.first_non_finite_layer();
  if (bad < result.gradient.num_layers()) {
    throw NumericalError("non-finite gradient in layer " + std::to_string(bad));
  }
  return result;
}

}  // namespace confusable
