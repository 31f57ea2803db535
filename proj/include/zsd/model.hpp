#pragma once

#include <cstdint>
#include <vector>

#include "zsd/gradcheck.hpp"
#include "zsd/mlp.hpp"
#include "zsd/semantics.hpp"
#include "zsd/vocab.hpp"

namespace zsd {

struct ModelConfig {
  std::size_t region_dim = 32;    // input region-feature width
  std::size_t semantic_dim = 16;  // class-embedding width
  std::size_t common_dim = 64;    // joint embedding space
  std::size_t consistency_hidden = 32;  // hidden width of both consistency heads
  std::size_t contrast_dim = 32;        // output width of the region-embedding head
  double temperature = 0.1;             // contrastive temperature
  double lambda = 0.2;                  // unseen-alignment weight
  double beta = 0.5;                    // region-contrastive weight
  bool background_in_contrastive = true;
  double similarity_temperature = 1.0;  // softmax squash for seen similarity rows
};

/// All trainable state of the detection head.
///
/// visual_mapper and semantic_mapper project region features and class
/// embeddings into the common space. The two consistency heads score the
/// element-wise fusion of a mapped region with a mapped class embedding:
/// seen_head emits raw logits (softmax lives in the loss / at inference),
/// unseen_head ends in a sigmoid. contrast_head produces the embedding used
/// by the region-region contrastive loss. The box regressor reads the raw
/// region feature. background_embedding is the learnable class embedding for
/// the background slot.
struct ModelParams {
  Mlp visual_mapper;    // d_r -> d_e, relu
  Mlp semantic_mapper;  // d_c -> d_e, relu
  Mlp seen_head;        // d_e -> hidden (relu) -> 1 (identity)
  Mlp unseen_head;      // d_e -> hidden (relu) -> 1 (sigmoid)
  Mlp contrast_head;    // d_e -> contrast_dim, identity (normalized afterwards)
  AffineLayer box_regressor;    // d_r -> 4, identity
  Matrix background_embedding;  // 1 x d_c
};

/// background_embedding starts at the mean of the seen embeddings plus small
/// noise; everything else uses the uniform fan-in/fan-out rule.
ModelParams init_model(const ModelConfig& config, const SemanticTable& table,
                       const ClassVocabulary& vocab, std::uint64_t seed);

struct ModelGrads {
  MlpGrads visual_mapper;
  MlpGrads semantic_mapper;
  MlpGrads seen_head;
  MlpGrads unseen_head;
  MlpGrads contrast_head;
  AffineGrads box_regressor;
  Matrix background_embedding;
};

ModelGrads zero_model_grads(const ModelParams& params);

/// Stable enumeration of every trainable matrix; gradient_list matches it
/// entry for entry.
std::vector<NamedParam> trainable_parameters(ModelParams& params);
std::vector<Matrix*> parameter_list(ModelParams& params);
std::vector<const Matrix*> gradient_list(const ModelGrads& grads);

/// Full class-embedding matrix (n_c x d_c): row 0 is the current background
/// embedding (not re-normalized), remaining rows come from the table.
Matrix assemble_class_matrix(const SemanticTable& table, const Matrix& background_embedding);

struct TrainForwardCache {
  MlpCache visual, semantic, seen, unseen, contrast;
  LayerCache regressor;
  Matrix mapped_regions;   // n_r x d_e
  Matrix mapped_classes;   // n_c x d_e
  std::vector<double> contrast_norms;  // pre-normalization row norms
  std::size_t seen_cols = 0;
  std::size_t unseen_cols = 0;
};

struct TrainForwardOutput {
  Matrix seen_logits;        // n_r x (n_s + 1)
  Matrix unseen_probs;       // n_r x n_u, strictly inside (0, 1)
  Matrix region_embeddings;  // n_r x contrast_dim, unit rows
  Matrix offsets;            // n_r x 4
  TrainForwardCache cache;
};

TrainForwardOutput forward_train(const ModelParams& params, const ModelConfig& config,
                                 const Matrix& features, const Matrix& class_matrix,
                                 const ClassVocabulary& vocab);

struct InferForwardOutput {
  Matrix class_logits;  // n_r x n_c, seen head against every class embedding
  Matrix class_scores;  // n_r x n_c, softmax rows of class_logits
  Matrix unseen_probs;  // n_r x n_u
  Matrix offsets;       // n_r x 4
};

InferForwardOutput forward_infer(const ModelParams& params, const ModelConfig& config,
                                 const Matrix& features, const Matrix& class_matrix,
                                 const ClassVocabulary& vocab);

/// Backpropagates loss gradients on the four training outputs into parameter
/// gradients. Gradients flowing to the fixed foreground embeddings are
/// discarded; row 0 of the class-matrix gradient lands on background_embedding.
ModelGrads backward_train(const ModelParams& params, const ModelConfig& config,
                          const TrainForwardOutput& forward,
                          const Matrix& d_seen_logits, const Matrix& d_unseen_probs,
                          const Matrix& d_region_embeddings, const Matrix& d_offsets);

/// Kink signature over every ReLU in the training forward pass.
std::uint64_t relu_sign_hash(const ModelParams& params, const TrainForwardCache& cache);

}  // namespace zsd
