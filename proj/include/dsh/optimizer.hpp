#pragma once

#include "dsh/codec.hpp"
#include "dsh/config.hpp"
#include "dsh/kernel.hpp"
#include "dsh/rng.hpp"
#include "dsh/types.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

// Alternating minimization of the relaxed code-learning objective
//
//   sum_m alpha_m^gamma ||B - P_m k_m||_F^2 + beta ||W B - L||_F^2
//     + eta ||B - D L||_F^2 + lambda (||D||^2 + ||W||^2 + sum_m ||P_m||^2)
//   s.t. sum_m alpha_m = 1, B in {-1,+1}^{r x n}
//
// with closed-form ridge solves for the classifier W, projections P_m and
// label basis D, discrete cyclic coordinate descent over the rows of B, and a
// Lagrangian update of the modality weights. Every block solves its
// subproblem exactly, so the objective never increases.

namespace dsh {

template <typename Scalar>
struct OptState {
  MatrixX<Scalar> codes;                          // B, r x n, entries +-1
  MatrixX<Scalar> classifier;                     // W, c x r
  MatrixX<Scalar> basis;                          // D, r x c
  std::vector<MatrixX<Scalar>> projections;       // P_m, r x M each
  VectorX<Scalar> modality_weights;               // alpha, length v
  std::vector<MatrixX<Scalar>> kernel_feats;      // cached k(X_m), M x n each
  std::vector<double> objective_trace;            // objective per full iteration

  Index modality_count() const { return static_cast<Index>(kernel_feats.size()); }
  Index code_length() const { return codes.rows(); }
  Index sample_count() const { return codes.cols(); }
};

template <typename Scalar, typename Derived>
Scalar objective(const OptState<Scalar>& state, const TrainConfig& cfg,
                 const Eigen::MatrixBase<Derived>& labels) {
  if (labels.cols() != state.sample_count())
    throw std::invalid_argument("objective: label count does not match sample count");
  Scalar value = Scalar(0);
  Scalar projection_ridge = Scalar(0);
  for (Index m = 0; m < state.modality_count(); ++m) {
    const auto& proj = state.projections[static_cast<std::size_t>(m)];
    const auto& feats = state.kernel_feats[static_cast<std::size_t>(m)];
    const Scalar weight = std::pow(state.modality_weights(m), Scalar(cfg.gamma));
    value += weight * (state.codes - proj * feats).squaredNorm();
    projection_ridge += proj.squaredNorm();
  }
  value += Scalar(cfg.beta) * (state.classifier * state.codes - labels).squaredNorm();
  value += Scalar(cfg.eta) * (state.codes - state.basis * labels).squaredNorm();
  value += Scalar(cfg.lambda) *
           (state.basis.squaredNorm() + state.classifier.squaredNorm() + projection_ridge);
  return value;
}

// W = beta L B^T (beta B B^T + lambda I)^-1, the exact minimizer of
// beta ||W B - L||^2 + lambda ||W||^2.
template <typename Scalar, typename Derived>
void update_classifier(OptState<Scalar>& state, const TrainConfig& cfg,
                       const Eigen::MatrixBase<Derived>& labels) {
  const Index r = state.code_length();
  if (cfg.beta == 0) {  // ridge shrinkage only
    state.classifier = MatrixX<Scalar>::Zero(labels.rows(), r);
    return;
  }
  MatrixX<Scalar> gram = Scalar(cfg.beta) * (state.codes * state.codes.transpose());
  gram.diagonal().array() += Scalar(cfg.lambda);
  const MatrixX<Scalar> rhs = Scalar(cfg.beta) * (state.codes * labels.transpose());
  state.classifier = solve_spd(gram, rhs).transpose();
}

// P_m = a B k^T (a k k^T + lambda I)^-1 with a = alpha_m^gamma.
template <typename Scalar>
void update_projection(OptState<Scalar>& state, const TrainConfig& cfg, Index modality) {
  if (modality < 0 || modality >= state.modality_count())
    throw std::invalid_argument("update_projection: bad modality index");
  const auto& feats = state.kernel_feats[static_cast<std::size_t>(modality)];
  const Scalar weight = std::pow(state.modality_weights(modality), Scalar(cfg.gamma));
  if (weight == Scalar(0)) {  // data term vanishes, ridge minimizer is zero
    state.projections[static_cast<std::size_t>(modality)] =
        MatrixX<Scalar>::Zero(state.code_length(), feats.rows());
    return;
  }
  MatrixX<Scalar> gram = weight * (feats * feats.transpose());
  gram.diagonal().array() += Scalar(cfg.lambda);
  const MatrixX<Scalar> rhs = weight * (feats * state.codes.transpose());
  state.projections[static_cast<std::size_t>(modality)] = solve_spd(gram, rhs).transpose();
}

// D = eta B L^T (eta L L^T + lambda I)^-1.
template <typename Scalar, typename Derived>
void update_basis(OptState<Scalar>& state, const TrainConfig& cfg,
                  const Eigen::MatrixBase<Derived>& labels) {
  if (cfg.eta == 0) {
    state.basis = MatrixX<Scalar>::Zero(state.code_length(), labels.rows());
    return;
  }
  MatrixX<Scalar> gram = Scalar(cfg.eta) * (labels * labels.transpose());
  gram.diagonal().array() += Scalar(cfg.lambda);
  const MatrixX<Scalar> rhs = Scalar(cfg.eta) * (labels * state.codes.transpose());
  state.basis = solve_spd(gram, rhs).transpose();
}

// Target matrix of the code subproblem min_B -2 tr(QB) + beta ||WB||^2:
// Q = sum_m alpha_m^gamma k_m^T P_m^T + beta L^T W + eta L^T D^T, n x r.
template <typename Scalar, typename Derived>
MatrixX<Scalar> dcc_target(const OptState<Scalar>& state, const TrainConfig& cfg,
                           const Eigen::MatrixBase<Derived>& labels) {
  MatrixX<Scalar> target = MatrixX<Scalar>::Zero(state.sample_count(), state.code_length());
  for (Index m = 0; m < state.modality_count(); ++m) {
    const Scalar weight = std::pow(state.modality_weights(m), Scalar(cfg.gamma));
    target.noalias() += weight * (state.kernel_feats[static_cast<std::size_t>(m)].transpose() *
                                  state.projections[static_cast<std::size_t>(m)].transpose());
  }
  target.noalias() += Scalar(cfg.beta) * (labels.transpose() * state.classifier);
  target.noalias() += Scalar(cfg.eta) * (labels.transpose() * state.basis.transpose());
  return target;
}

// One DCC row update: with q = column `row` of Q and w the matching classifier
// column, the exact row minimizer is b = sgn(q - beta Bbar^T Wbar^T w), where
// Bbar/Wbar drop the row and column being updated. The beta factor carries the
// classifier weight of the quadratic term into the coupling.
template <typename Scalar>
void dcc_row_update(MatrixX<Scalar>& codes, const MatrixX<Scalar>& target,
                    const MatrixX<Scalar>& classifier, Scalar beta, Index row) {
  if (row < 0 || row >= codes.rows()) throw std::invalid_argument("dcc_row_update: bad row");
  if (target.rows() != codes.cols() || target.cols() != codes.rows())
    throw std::invalid_argument("dcc_row_update: target must be n x r");
  VectorX<Scalar> arg = target.col(row);
  if (beta != Scalar(0) && classifier.size() > 0) {
    const VectorX<Scalar> w = classifier.col(row);
    const VectorX<Scalar> cross = classifier.transpose() * w;        // W^T w, r
    VectorX<Scalar> coupling = codes.transpose() * cross;            // B^T W^T w, n
    coupling.noalias() -= w.squaredNorm() * codes.row(row).transpose();
    arg.noalias() -= beta * coupling;
  }
  codes.row(row) = sign_matrix(arg).transpose();
}

// Cyclic passes over all code rows against a fixed target.
template <typename Scalar, typename Derived>
void update_codes(OptState<Scalar>& state, const TrainConfig& cfg,
                  const Eigen::MatrixBase<Derived>& labels) {
  const MatrixX<Scalar> target = dcc_target(state, cfg, labels);
  for (Index sweep = 0; sweep < cfg.dcc_sweeps; ++sweep)
    for (Index row = 0; row < state.code_length(); ++row)
      dcc_row_update(state.codes, target, state.classifier, Scalar(cfg.beta), row);
}

// Per-modality reconstruction losses C_m = ||B - P_m k_m||_F^2.
template <typename Scalar>
VectorX<Scalar> per_modality_losses(const OptState<Scalar>& state) {
  VectorX<Scalar> losses(state.modality_count());
  for (Index m = 0; m < state.modality_count(); ++m)
    losses(m) = (state.codes - state.projections[static_cast<std::size_t>(m)] *
                                   state.kernel_feats[static_cast<std::size_t>(m)])
                    .squaredNorm();
  return losses;
}

// alpha_m = (gamma C_m)^{1/(1-gamma)} / sum_v (gamma C_v)^{1/(1-gamma)}.
// The common gamma factor and any common rescaling of the losses cancel, so
// the computation normalizes by the largest loss first. Zero-loss modalities
// take the limit: weight 1 split uniformly among them.
template <typename Scalar>
VectorX<Scalar> modality_weights_from_losses(const VectorX<Scalar>& losses, double gamma) {
  const Index v = losses.size();
  if (v < 1) throw std::invalid_argument("modality_weights_from_losses: no losses");
  if (!(gamma > 1)) throw std::invalid_argument("modality_weights_from_losses: gamma must be > 1");
  if ((losses.array() < Scalar(0)).any())
    throw std::invalid_argument("modality_weights_from_losses: negative loss");
  const Scalar largest = losses.maxCoeff();
  VectorX<Scalar> weights(v);
  const Scalar zero_cut = largest * Scalar(1e-300);
  if (largest == Scalar(0) || (losses.array() <= zero_cut).any()) {
    const auto zero_loss = (losses.array() <= zero_cut).template cast<Scalar>();
    return zero_loss.matrix() / zero_loss.sum();
  }
  const Scalar exponent = Scalar(1) / (Scalar(1) - Scalar(gamma));
  for (Index m = 0; m < v; ++m) weights(m) = std::pow(losses(m) / largest, exponent);
  return weights / weights.sum();
}

template <typename Scalar>
void update_modality_weights(OptState<Scalar>& state, const TrainConfig& cfg) {
  state.modality_weights = modality_weights_from_losses(per_modality_losses(state), cfg.gamma);
}

// One full alternating pass in algorithm order: classifier, projections,
// basis, codes, modality weights.
template <typename Scalar, typename Derived>
void iterate(OptState<Scalar>& state, const TrainConfig& cfg,
             const Eigen::MatrixBase<Derived>& labels) {
  update_classifier(state, cfg, labels);
  for (Index m = 0; m < state.modality_count(); ++m) update_projection(state, cfg, m);
  update_basis(state, cfg, labels);
  update_codes(state, cfg, labels);
  update_modality_weights(state, cfg);
}

// Initial state: codes are signs of a seeded standard-normal draw, projections
// and regression blocks zero, weights uniform. The first pass then consists of
// exact ridge solves.
template <typename Scalar>
OptState<Scalar> init_state(std::vector<MatrixX<Scalar>> kernel_feats, Index label_count,
                            const TrainConfig& cfg, Rng& rng) {
  if (kernel_feats.empty()) throw std::invalid_argument("init_state: no modalities");
  const Index n = kernel_feats.front().cols();
  for (const auto& feats : kernel_feats)
    if (feats.cols() != n)
      throw std::invalid_argument("init_state: modalities disagree on sample count");
  OptState<Scalar> state;
  state.kernel_feats = std::move(kernel_feats);
  const Index v = state.modality_count();
  state.codes = sign_matrix(normal_matrix<Scalar>(cfg.bits, n, rng));
  state.classifier = MatrixX<Scalar>::Zero(label_count, cfg.bits);
  state.basis = MatrixX<Scalar>::Zero(cfg.bits, label_count);
  state.projections.resize(static_cast<std::size_t>(v));
  for (Index m = 0; m < v; ++m)
    state.projections[static_cast<std::size_t>(m)] =
        MatrixX<Scalar>::Zero(cfg.bits, state.kernel_feats[static_cast<std::size_t>(m)].rows());
  state.modality_weights = VectorX<Scalar>::Constant(v, Scalar(1) / Scalar(v));
  return state;
}

template <typename Scalar>
struct TrainResult {
  HashModel<Scalar> model;
  OptState<Scalar> state;
  Index iterations = 0;
  bool converged = false;  // stopped by tol rather than by max_iters
  double seconds = 0.0;
};

// Full training pipeline on raw (uncentered) per-modality features: center,
// draw anchors, evaluate kernel features, then alternate block updates until
// the relative objective change drops below tol or max_iters is reached.
template <typename Scalar>
TrainResult<Scalar> train(const std::vector<MatrixX<Scalar>>& modality_features,
                          const MatrixX<Scalar>& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (modality_features.empty()) throw std::invalid_argument("train: no modalities");
  const Index n = modality_features.front().cols();
  for (std::size_t m = 0; m < modality_features.size(); ++m)
    if (modality_features[m].cols() != n)
      throw std::invalid_argument("train: modality " + std::to_string(m) + " has " +
                                  std::to_string(modality_features[m].cols()) +
                                  " samples, expected " + std::to_string(n));
  if (labels.cols() != n)
    throw std::invalid_argument("train: label matrix has " + std::to_string(labels.cols()) +
                                " samples, expected " + std::to_string(n));
  validate_label_matrix(labels);
  if (cfg.anchors > n)
    throw std::invalid_argument("train: anchor count " + std::to_string(cfg.anchors) +
                                " exceeds sample count " + std::to_string(n));

  const auto start = std::chrono::steady_clock::now();
  const Index v = static_cast<Index>(modality_features.size());
  Rng rng(cfg.seed);

  TrainResult<Scalar> result;
  HashModel<Scalar>& model = result.model;
  model.code_length = cfg.bits;
  model.config = cfg;
  model.modalities.resize(static_cast<std::size_t>(v));
  std::vector<MatrixX<Scalar>> kernel_feats(static_cast<std::size_t>(v));
  for (Index m = 0; m < v; ++m) {
    auto& mod = model.modalities[static_cast<std::size_t>(m)];
    Centered<Scalar> centered = center_features(modality_features[static_cast<std::size_t>(m)]);
    mod.center = std::move(centered.mean);
    mod.kernel = sample_anchors(centered.features, cfg.anchors, rng, m);
    kernel_feats[static_cast<std::size_t>(m)] = kernel_features(mod.kernel, centered.features);
  }

  OptState<Scalar> state = init_state(std::move(kernel_feats), labels.rows(), cfg, rng);
  double previous = double(objective(state, cfg, labels));
  state.objective_trace.push_back(previous);
  for (Index iter = 0; iter < cfg.max_iters; ++iter) {
    iterate(state, cfg, labels);
    const double current = double(objective(state, cfg, labels));
    state.objective_trace.push_back(current);
    ++result.iterations;
    const double change = std::abs(current - previous) / std::max(previous, 1e-12);
    previous = current;
    if (change < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  for (Index m = 0; m < v; ++m)
    model.modalities[static_cast<std::size_t>(m)].projection =
        state.projections[static_cast<std::size_t>(m)];
  model.modality_weights = state.modality_weights;
  model.iterations = static_cast<std::uint64_t>(result.iterations);
  model.final_objective = previous;
  result.state = std::move(state);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace dsh
