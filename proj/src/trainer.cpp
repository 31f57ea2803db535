#include "zsd/trainer.hpp"

#include <cmath>

#include "zsd/error.hpp"

namespace zsd {

BatchEvaluation evaluate_batch(const ModelParams& params, const ModelConfig& config,
                               const RegionBatch& batch, const Matrix& class_matrix,
                               const SimilarityMatrix& sim, const ClassVocabulary& vocab) {
  BatchEvaluation eval;
  eval.forward = forward_train(params, config, batch.features, class_matrix, vocab);

  const LossGrad cls_s = seen_classification_loss(eval.forward.seen_logits, batch.labels);
  const LossGrad cls_u = unseen_alignment_loss(eval.forward.unseen_probs, batch.labels, sim);
  const LossGrad con_r =
      region_contrastive_loss(eval.forward.region_embeddings, batch.labels,
                              config.temperature, config.background_in_contrastive);
  const LossGrad reg = box_regression_loss(eval.forward.offsets, batch.targets, batch.labels);

  eval.losses = combine_losses(reg.value, cls_s.value, cls_u.value, con_r.value,
                               config.lambda, config.beta);

  Matrix d_unseen = cls_u.grad;
  scale_in_place(d_unseen, config.lambda);
  Matrix d_embeddings = con_r.grad;
  scale_in_place(d_embeddings, config.beta);

  eval.grads = backward_train(params, config, eval.forward, cls_s.grad, d_unseen,
                              d_embeddings, reg.grad);
  return eval;
}

TrainResult train_model(const SynthDataset& train_data, const SemanticTable& table,
                        const ClassVocabulary& vocab, const ModelConfig& model_config,
                        const TrainConfig& train_config, const StepCallback& on_step,
                        const EpochCallback& on_epoch) {
  require(train_data.proposal_count() > 0, ErrorCode::invalid_argument,
          "train_model: empty training set");

  TrainResult result;
  result.params = init_model(model_config, table, vocab, train_config.seed);

  const SimilarityMatrix sim =
      build_similarity_matrix(table, vocab, model_config.similarity_temperature);
  SgdState optimizer({train_config.learning_rate, train_config.momentum});
  BatchIterator batches(train_data, train_config.batch_size,
                        mix_seed(train_config.seed, 0x7a));

  const std::vector<Matrix*> params = parameter_list(result.params);
  std::size_t global_step = 0;

  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    batches.start_epoch(epoch);
    while (auto batch = batches.next()) {
      const Matrix class_matrix =
          assemble_class_matrix(table, result.params.background_embedding);
      BatchEvaluation eval =
          evaluate_batch(result.params, model_config, *batch, class_matrix, sim, vocab);
      require(std::isfinite(eval.losses.total), ErrorCode::non_finite_value,
              "train_model: non-finite loss at step " + std::to_string(global_step));

      optimizer.step(params, gradient_list(eval.grads));

      result.last_losses = eval.losses;
      ++global_step;
      if (on_step) on_step({epoch, global_step, eval.losses});
    }
    if (on_epoch) on_epoch(epoch, result.params);
  }
  result.steps = global_step;
  return result;
}

}  // namespace zsd
