#include "zsd/model.hpp"

#include <array>
#include <cmath>

#include "zsd/error.hpp"

namespace zsd {

namespace {
constexpr double kNormFloor = 1e-12;
}

ModelParams init_model(const ModelConfig& config, const SemanticTable& table,
                       const ClassVocabulary& vocab, std::uint64_t seed) {
  require(config.region_dim > 0 && config.semantic_dim > 0 && config.common_dim > 0 &&
              config.consistency_hidden > 0 && config.contrast_dim > 0,
          ErrorCode::invalid_argument, "model dimensions must be positive");
  require(config.temperature > 0.0, ErrorCode::invalid_argument,
          "contrastive temperature must be positive");
  require(config.lambda >= 0.0 && config.beta >= 0.0, ErrorCode::invalid_argument,
          "loss weights must be non-negative");
  require(table.dim() == config.semantic_dim, ErrorCode::dimension_mismatch,
          "semantic table width does not match model config");

  Rng rng(mix_seed(seed, 0x6d));
  ModelParams params;

  const std::array<std::size_t, 1> map_w{config.common_dim};
  const std::array<Activation, 1> map_a{Activation::relu};
  params.visual_mapper = make_mlp(config.region_dim, map_w, map_a, rng);
  params.semantic_mapper = make_mlp(config.semantic_dim, map_w, map_a, rng);

  const std::array<std::size_t, 2> head_w{config.consistency_hidden, 1};
  const std::array<Activation, 2> seen_a{Activation::relu, Activation::identity};
  const std::array<Activation, 2> unseen_a{Activation::relu, Activation::sigmoid};
  params.seen_head = make_mlp(config.common_dim, head_w, seen_a, rng);
  params.unseen_head = make_mlp(config.common_dim, head_w, unseen_a, rng);

  // identity output keeps the embedding on the full sphere; a relu here can
  // zero a whole row, which the normalization invariant cannot absorb
  const std::array<std::size_t, 1> contrast_w{config.contrast_dim};
  const std::array<Activation, 1> contrast_a{Activation::identity};
  params.contrast_head = make_mlp(config.common_dim, contrast_w, contrast_a, rng);

  params.box_regressor = make_affine_layer(config.region_dim, 4, Activation::identity, rng);

  params.background_embedding = Matrix(1, config.semantic_dim);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (std::size_t d = 0; d < config.semantic_dim; ++d) {
    double mean = 0.0;
    for (std::size_t c = 1; c <= vocab.seen_count(); ++c)
      mean += table.class_embedding(vocab, c)[d];
    mean /= static_cast<double>(vocab.seen_count());
    params.background_embedding(0, d) = mean + noise(rng);
  }
  return params;
}

ModelGrads zero_model_grads(const ModelParams& params) {
  ModelGrads grads;
  grads.visual_mapper = zero_grads(params.visual_mapper);
  grads.semantic_mapper = zero_grads(params.semantic_mapper);
  grads.seen_head = zero_grads(params.seen_head);
  grads.unseen_head = zero_grads(params.unseen_head);
  grads.contrast_head = zero_grads(params.contrast_head);
  grads.box_regressor = zero_grads(params.box_regressor);
  grads.background_embedding = Matrix(1, params.background_embedding.cols());
  return grads;
}

namespace {

void collect_mlp(std::vector<NamedParam>& out, const std::string& prefix, Mlp& net) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    out.push_back({prefix + ".w" + std::to_string(i), &net.layers[i].weights});
    out.push_back({prefix + ".b" + std::to_string(i), &net.layers[i].bias});
  }
}

void collect_mlp_grads(std::vector<const Matrix*>& out, const MlpGrads& grads) {
  for (const auto& layer : grads.layers) {
    out.push_back(&layer.weights);
    out.push_back(&layer.bias);
  }
}

}  // namespace

std::vector<NamedParam> trainable_parameters(ModelParams& params) {
  std::vector<NamedParam> out;
  collect_mlp(out, "visual_mapper", params.visual_mapper);
  collect_mlp(out, "semantic_mapper", params.semantic_mapper);
  collect_mlp(out, "seen_head", params.seen_head);
  collect_mlp(out, "unseen_head", params.unseen_head);
  collect_mlp(out, "contrast_head", params.contrast_head);
  out.push_back({"box_regressor.w", &params.box_regressor.weights});
  out.push_back({"box_regressor.b", &params.box_regressor.bias});
  out.push_back({"background_embedding", &params.background_embedding});
  return out;
}

std::vector<Matrix*> parameter_list(ModelParams& params) {
  std::vector<Matrix*> out;
  for (auto& named : trainable_parameters(params)) out.push_back(named.value);
  return out;
}

std::vector<const Matrix*> gradient_list(const ModelGrads& grads) {
  std::vector<const Matrix*> out;
  collect_mlp_grads(out, grads.visual_mapper);
  collect_mlp_grads(out, grads.semantic_mapper);
  collect_mlp_grads(out, grads.seen_head);
  collect_mlp_grads(out, grads.unseen_head);
  collect_mlp_grads(out, grads.contrast_head);
  out.push_back(&grads.box_regressor.weights);
  out.push_back(&grads.box_regressor.bias);
  out.push_back(&grads.background_embedding);
  return out;
}

Matrix assemble_class_matrix(const SemanticTable& table, const Matrix& background_embedding) {
  require(background_embedding.rows() == 1 &&
              background_embedding.cols() == table.dim(),
          ErrorCode::dimension_mismatch,
          "background embedding width does not match semantic table");
  Matrix full(table.embeddings.rows() + 1, table.dim());
  for (std::size_t d = 0; d < table.dim(); ++d) full(0, d) = background_embedding(0, d);
  for (std::size_t r = 0; r < table.embeddings.rows(); ++r)
    for (std::size_t d = 0; d < table.dim(); ++d) full(r + 1, d) = table.embeddings(r, d);
  return full;
}

namespace {

/// Rows of the fused pair matrix: region i x class j (over `class_rows`),
/// flattened as i * class_rows.size() + j.
Matrix fuse_pairs(const Matrix& regions, const Matrix& classes,
                  std::size_t first_class, std::size_t class_count) {
  Matrix fused(regions.rows() * class_count, regions.cols());
  for (std::size_t i = 0; i < regions.rows(); ++i) {
    const double* region = regions.data() + i * regions.cols();
    for (std::size_t j = 0; j < class_count; ++j) {
      const double* cls = classes.data() + (first_class + j) * classes.cols();
      double* out = fused.data() + (i * class_count + j) * fused.cols();
      for (std::size_t d = 0; d < regions.cols(); ++d) out[d] = region[d] * cls[d];
    }
  }
  return fused;
}

Matrix reshape_column(const Matrix& flat, std::size_t rows, std::size_t cols) {
  require(flat.cols() == 1 && flat.rows() == rows * cols, ErrorCode::shape_mismatch,
          "head output must be a single column");
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = flat[i];
  return out;
}

}  // namespace

TrainForwardOutput forward_train(const ModelParams& params, const ModelConfig& config,
                                 const Matrix& features, const Matrix& class_matrix,
                                 const ClassVocabulary& vocab) {
  require(features.cols() == config.region_dim, ErrorCode::shape_mismatch,
          "forward_train: feature width mismatch");
  require(features.all_finite(), ErrorCode::non_finite_value,
          "forward_train: non-finite features");
  require(class_matrix.rows() == vocab.size() &&
              class_matrix.cols() == config.semantic_dim,
          ErrorCode::shape_mismatch, "forward_train: class matrix shape mismatch");

  const std::size_t n_r = features.rows();
  const std::size_t seen_cols = vocab.seen_count() + 1;
  const std::size_t n_u = vocab.unseen_count();

  TrainForwardOutput out;
  out.cache.seen_cols = seen_cols;
  out.cache.unseen_cols = n_u;

  out.cache.mapped_regions = mlp_forward(params.visual_mapper, features, &out.cache.visual);
  out.cache.mapped_classes =
      mlp_forward(params.semantic_mapper, class_matrix, &out.cache.semantic);

  const Matrix seen_pairs =
      fuse_pairs(out.cache.mapped_regions, out.cache.mapped_classes, 0, seen_cols);
  out.seen_logits = reshape_column(
      mlp_forward(params.seen_head, seen_pairs, &out.cache.seen), n_r, seen_cols);

  const Matrix unseen_pairs = fuse_pairs(out.cache.mapped_regions, out.cache.mapped_classes,
                                         vocab.first_unseen_index(), n_u);
  out.unseen_probs = reshape_column(
      mlp_forward(params.unseen_head, unseen_pairs, &out.cache.unseen), n_r, n_u);

  Matrix raw_embeddings =
      mlp_forward(params.contrast_head, out.cache.mapped_regions, &out.cache.contrast);
  out.cache.contrast_norms.resize(n_r);
  out.region_embeddings = raw_embeddings;
  for (std::size_t i = 0; i < n_r; ++i) {
    const double norm = l2_norm(raw_embeddings.row(i));
    require(std::isfinite(norm), ErrorCode::non_finite_value,
            "forward_train: non-finite activation");
    out.cache.contrast_norms[i] = norm;
    auto row = out.region_embeddings.row(i);
    if (norm > kNormFloor) {
      for (double& v : row) v /= norm;
    } else {
      // degenerate row: fall back to a fixed unit vector (no gradient)
      row[0] = 1.0;
      for (std::size_t d = 1; d < row.size(); ++d) row[d] = 0.0;
    }
  }

  out.offsets = affine_forward(params.box_regressor, features, &out.cache.regressor);

  require(out.seen_logits.all_finite() && out.unseen_probs.all_finite() &&
              out.region_embeddings.all_finite() && out.offsets.all_finite(),
          ErrorCode::non_finite_value, "forward_train: non-finite activation");
  return out;
}

InferForwardOutput forward_infer(const ModelParams& params, const ModelConfig& config,
                                 const Matrix& features, const Matrix& class_matrix,
                                 const ClassVocabulary& vocab) {
  require(features.cols() == config.region_dim, ErrorCode::shape_mismatch,
          "forward_infer: feature width mismatch");
  require(features.all_finite(), ErrorCode::non_finite_value,
          "forward_infer: non-finite features");
  require(class_matrix.rows() == vocab.size(), ErrorCode::shape_mismatch,
          "forward_infer: class matrix shape mismatch");

  const std::size_t n_r = features.rows();
  const std::size_t n_c = vocab.size();
  const std::size_t n_u = vocab.unseen_count();

  InferForwardOutput out;
  const Matrix mapped_regions = mlp_forward(params.visual_mapper, features, nullptr);
  const Matrix mapped_classes = mlp_forward(params.semantic_mapper, class_matrix, nullptr);

  const Matrix all_pairs = fuse_pairs(mapped_regions, mapped_classes, 0, n_c);
  out.class_logits =
      reshape_column(mlp_forward(params.seen_head, all_pairs, nullptr), n_r, n_c);

  out.class_scores = Matrix(n_r, n_c);
  for (std::size_t i = 0; i < n_r; ++i) {
    auto logits = out.class_logits.row(i);
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - max_logit);
    for (std::size_t j = 0; j < n_c; ++j)
      out.class_scores(i, j) = std::exp(logits[j] - max_logit) / denom;
  }

  const Matrix unseen_pairs =
      fuse_pairs(mapped_regions, mapped_classes, vocab.first_unseen_index(), n_u);
  out.unseen_probs =
      reshape_column(mlp_forward(params.unseen_head, unseen_pairs, nullptr), n_r, n_u);

  out.offsets = affine_forward(params.box_regressor, features, nullptr);

  require(out.class_scores.all_finite() && out.unseen_probs.all_finite() &&
              out.offsets.all_finite(),
          ErrorCode::non_finite_value, "forward_infer: non-finite activation");
  return out;
}

namespace {

/// Distributes pair-matrix gradients back onto the mapped regions/classes.
void unfuse_pairs(const Matrix& d_pairs, const Matrix& regions, const Matrix& classes,
                  std::size_t first_class, std::size_t class_count, Matrix& d_regions,
                  Matrix& d_classes) {
  for (std::size_t i = 0; i < regions.rows(); ++i) {
    const double* region = regions.data() + i * regions.cols();
    double* d_region = d_regions.data() + i * d_regions.cols();
    for (std::size_t j = 0; j < class_count; ++j) {
      const std::size_t cls_row = first_class + j;
      const double* cls = classes.data() + cls_row * classes.cols();
      double* d_cls = d_classes.data() + cls_row * d_classes.cols();
      const double* d_pair = d_pairs.data() + (i * class_count + j) * d_pairs.cols();
      for (std::size_t d = 0; d < regions.cols(); ++d) {
        d_region[d] += d_pair[d] * cls[d];
        d_cls[d] += d_pair[d] * region[d];
      }
    }
  }
}

Matrix flatten_to_column(const Matrix& m) {
  Matrix out(m.rows() * m.cols(), 1);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i];
  return out;
}

}  // namespace

ModelGrads backward_train(const ModelParams& params, const ModelConfig& config,
                          const TrainForwardOutput& forward,
                          const Matrix& d_seen_logits, const Matrix& d_unseen_probs,
                          const Matrix& d_region_embeddings, const Matrix& d_offsets) {
  (void)config;
  require(d_seen_logits.same_shape(forward.seen_logits) &&
              d_unseen_probs.same_shape(forward.unseen_probs) &&
              d_region_embeddings.same_shape(forward.region_embeddings) &&
              d_offsets.same_shape(forward.offsets),
          ErrorCode::shape_mismatch, "backward_train: gradient shape mismatch");

  const TrainForwardCache& cache = forward.cache;
  const Matrix& regions = cache.mapped_regions;
  const Matrix& classes = cache.mapped_classes;

  ModelGrads grads = zero_model_grads(params);
  Matrix d_regions(regions.rows(), regions.cols());
  Matrix d_classes(classes.rows(), classes.cols());

  const Matrix d_seen_pairs = mlp_backward(params.seen_head, cache.seen,
                                           flatten_to_column(d_seen_logits),
                                           grads.seen_head);
  unfuse_pairs(d_seen_pairs, regions, classes, 0, cache.seen_cols, d_regions, d_classes);

  const Matrix d_unseen_pairs = mlp_backward(params.unseen_head, cache.unseen,
                                             flatten_to_column(d_unseen_probs),
                                             grads.unseen_head);
  const std::size_t first_unseen = classes.rows() - cache.unseen_cols;
  unfuse_pairs(d_unseen_pairs, regions, classes, first_unseen, cache.unseen_cols,
               d_regions, d_classes);

  // z = h / |h|; rows that hit the degenerate fallback carry no gradient
  Matrix d_raw(forward.region_embeddings.rows(), forward.region_embeddings.cols());
  for (std::size_t i = 0; i < d_raw.rows(); ++i) {
    const double norm = cache.contrast_norms[i];
    if (norm <= kNormFloor) continue;
    auto z = forward.region_embeddings.row(i);
    auto dz = d_region_embeddings.row(i);
    auto dh = d_raw.row(i);
    const double projection = dot(dz, z);
    for (std::size_t d = 0; d < dh.size(); ++d)
      dh[d] = (dz[d] - projection * z[d]) / norm;
  }
  add_in_place(d_regions,
               mlp_backward(params.contrast_head, cache.contrast, d_raw,
                            grads.contrast_head));

  mlp_backward(params.visual_mapper, cache.visual, d_regions, grads.visual_mapper);

  const Matrix d_class_matrix = mlp_backward(params.semantic_mapper, cache.semantic,
                                             d_classes, grads.semantic_mapper);
  for (std::size_t d = 0; d < d_class_matrix.cols(); ++d)
    grads.background_embedding(0, d) = d_class_matrix(0, d);

  affine_backward(params.box_regressor, cache.regressor, d_offsets, grads.box_regressor);
  return grads;
}

std::uint64_t relu_sign_hash(const ModelParams& params, const TrainForwardCache& cache) {
  std::uint64_t h = 1469598103934665603ULL;
  h = relu_sign_hash(params.visual_mapper, cache.visual, h);
  h = relu_sign_hash(params.semantic_mapper, cache.semantic, h);
  h = relu_sign_hash(params.seen_head, cache.seen, h);
  h = relu_sign_hash(params.unseen_head, cache.unseen, h);
  h = relu_sign_hash(params.contrast_head, cache.contrast, h);
  return h;
}

}  // namespace zsd
