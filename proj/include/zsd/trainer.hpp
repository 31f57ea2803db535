#pragma once

#include <cstdint>
#include <functional>

#include "zsd/losses.hpp"
#include "zsd/model.hpp"
#include "zsd/sgd.hpp"
#include "zsd/synthdata.hpp"

namespace zsd {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // epochs between periodic checkpoints; 0 = final only
};

struct TrainStep {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global step counter
  LossBreakdown losses;
};

using StepCallback = std::function<void(const TrainStep&)>;
using EpochCallback = std::function<void(std::size_t epoch, const ModelParams& params)>;

struct TrainResult {
  ModelParams params;
  LossBreakdown last_losses;
  std::size_t steps = 0;
};

/// Minibatch loop: forward, loss breakdown, backward, SGD step. A non-finite
/// loss or gradient aborts with non_finite_value so the caller can keep the
/// last good checkpoint. `on_epoch` fires after every epoch (checkpoint hook).
TrainResult train_model(const SynthDataset& train_data, const SemanticTable& table,
                        const ClassVocabulary& vocab, const ModelConfig& model_config,
                        const TrainConfig& train_config,
                        const StepCallback& on_step = {},
                        const EpochCallback& on_epoch = {});

/// One forward/backward on a batch without the update; exposed for gradient
/// verification and tests.
struct BatchEvaluation {
  LossBreakdown losses;
  ModelGrads grads;
  TrainForwardOutput forward;
};

BatchEvaluation evaluate_batch(const ModelParams& params, const ModelConfig& config,
                               const RegionBatch& batch, const Matrix& class_matrix,
                               const SimilarityMatrix& sim, const ClassVocabulary& vocab);

}  // namespace zsd
