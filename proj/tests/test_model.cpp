#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "zsd/checkpoint.hpp"
#include "zsd/model.hpp"

using namespace zsd;

namespace {

struct Fixture {
  ClassVocabulary vocab = ClassVocabulary::from_parts("bg", {"s0", "s1"}, {"u0", "u1"});
  ModelConfig config;
  SemanticTable table;
  ModelParams params;
  Matrix class_matrix;

  explicit Fixture(std::uint64_t seed = 42) {
    config.region_dim = 6;
    config.semantic_dim = 4;
    config.common_dim = 8;
    config.consistency_hidden = 5;
    config.contrast_dim = 3;

    Rng rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix rows(vocab.foreground_count(), config.semantic_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = dist(rng);
    table = make_semantic_table(std::move(rows), vocab);
    params = init_model(config, table, vocab, seed);
    class_matrix = assemble_class_matrix(table, params.background_embedding);
  }

  Matrix random_features(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix f(n, config.region_dim);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = dist(rng);
    return f;
  }
};

}  // namespace

TEST_CASE("assemble_class_matrix orders background then foreground") {
  Fixture fx;
  CHECK(fx.class_matrix.rows() == 5);  // bg + 2 seen + 2 unseen
  for (std::size_t d = 0; d < fx.config.semantic_dim; ++d) {
    CHECK(fx.class_matrix(0, d) == fx.params.background_embedding(0, d));
    CHECK(fx.class_matrix(1, d) == fx.table.embeddings(0, d));
    CHECK(fx.class_matrix(4, d) == fx.table.embeddings(3, d));
  }
}

TEST_CASE("assemble_class_matrix tracks background embedding updates") {
  Fixture fx;
  fx.params.background_embedding(0, 0) += 0.25;
  const Matrix updated = assemble_class_matrix(fx.table, fx.params.background_embedding);
  CHECK(updated(0, 0) == fx.params.background_embedding(0, 0));
  CHECK(updated(0, 0) != fx.class_matrix(0, 0));
}

TEST_CASE("a 16/4 vocabulary assembles 21 class rows") {
  std::vector<std::string> seen, unseen;
  for (int i = 0; i < 16; ++i) seen.push_back("s" + std::to_string(i));
  for (int i = 0; i < 4; ++i) unseen.push_back("u" + std::to_string(i));
  const auto vocab = ClassVocabulary::from_parts("bg", seen, unseen);
  Rng rng(1);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix rows(vocab.foreground_count(), 8);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = dist(rng);
  const SemanticTable table = make_semantic_table(std::move(rows), vocab);
  const Matrix background(1, 8, 0.1);
  CHECK(assemble_class_matrix(table, background).rows() == 21);
}

TEST_CASE("forward_train output shapes and ranges") {
  Fixture fx;
  const Matrix features = fx.random_features(3, 9);
  const TrainForwardOutput out =
      forward_train(fx.params, fx.config, features, fx.class_matrix, fx.vocab);

  CHECK(out.seen_logits.rows() == 3);
  CHECK(out.seen_logits.cols() == 3);  // bg + 2 seen
  CHECK(out.unseen_probs.rows() == 3);
  CHECK(out.unseen_probs.cols() == 2);
  CHECK(out.offsets.rows() == 3);
  CHECK(out.offsets.cols() == 4);
  CHECK(out.region_embeddings.cols() == fx.config.contrast_dim);

  for (std::size_t i = 0; i < out.unseen_probs.size(); ++i) {
    CHECK(out.unseen_probs[i] > 0.0);
    CHECK(out.unseen_probs[i] < 1.0);
  }
  for (std::size_t r = 0; r < out.region_embeddings.rows(); ++r)
    CHECK(l2_norm(out.region_embeddings.row(r)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("duplicate regions produce identical output rows") {
  Fixture fx;
  Matrix features(2, fx.config.region_dim);
  for (std::size_t d = 0; d < fx.config.region_dim; ++d) {
    features(0, d) = 0.3 * static_cast<double>(d) - 0.7;
    features(1, d) = features(0, d);
  }
  const TrainForwardOutput out =
      forward_train(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  for (std::size_t j = 0; j < out.seen_logits.cols(); ++j)
    CHECK(out.seen_logits(0, j) == out.seen_logits(1, j));
  for (std::size_t j = 0; j < out.unseen_probs.cols(); ++j)
    CHECK(out.unseen_probs(0, j) == out.unseen_probs(1, j));
  for (std::size_t j = 0; j < out.offsets.cols(); ++j)
    CHECK(out.offsets(0, j) == out.offsets(1, j));
}

TEST_CASE("permuting regions permutes outputs identically") {
  Fixture fx;
  const Matrix features = fx.random_features(4, 17);
  Matrix reversed(4, fx.config.region_dim);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t d = 0; d < fx.config.region_dim; ++d)
      reversed(i, d) = features(3 - i, d);

  const auto a = forward_train(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  const auto b = forward_train(fx.params, fx.config, reversed, fx.class_matrix, fx.vocab);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < a.seen_logits.cols(); ++j)
      CHECK(a.seen_logits(i, j) == b.seen_logits(3 - i, j));
}

TEST_CASE("inference softmax rows are normalized and sigmoid outputs bounded") {
  Fixture fx;
  const Matrix features = fx.random_features(1, 23);
  const InferForwardOutput out =
      forward_infer(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  CHECK(out.class_scores.rows() == 1);
  CHECK(out.class_scores.cols() == fx.vocab.size());
  CHECK(out.unseen_probs.cols() == fx.vocab.unseen_count());

  double sum = 0.0;
  for (std::size_t j = 0; j < out.class_scores.cols(); ++j) sum += out.class_scores(0, j);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t j = 0; j < out.unseen_probs.cols(); ++j) {
    CHECK(out.unseen_probs(0, j) > 0.0);
    CHECK(out.unseen_probs(0, j) < 1.0);
  }
}

TEST_CASE("training logits equal inference logits on the shared columns") {
  Fixture fx;
  const Matrix features = fx.random_features(3, 29);
  const auto train_out =
      forward_train(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  const auto infer_out =
      forward_infer(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j <= fx.vocab.seen_count(); ++j)
      CHECK(train_out.seen_logits(i, j) == infer_out.class_logits(i, j));
}

TEST_CASE("forward_infer is a pure function of its inputs") {
  Fixture fx;
  const Matrix features = fx.random_features(2, 31);
  const auto a = forward_infer(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  const auto b = forward_infer(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  CHECK(a.class_scores == b.class_scores);
  CHECK(a.unseen_probs == b.unseen_probs);
  CHECK(a.offsets == b.offsets);
}

TEST_CASE("init_model seeds background embedding near the seen mean") {
  Fixture fx;
  for (std::size_t d = 0; d < fx.config.semantic_dim; ++d) {
    const double mean =
        (fx.table.embeddings(0, d) + fx.table.embeddings(1, d)) / 2.0;
    CHECK(std::abs(fx.params.background_embedding(0, d) - mean) < 0.1);
  }
}

TEST_CASE("trainable parameter enumeration aligns with gradient enumeration") {
  Fixture fx;
  const auto named = trainable_parameters(fx.params);
  const ModelGrads grads = zero_model_grads(fx.params);
  const auto grad_ptrs = gradient_list(grads);
  REQUIRE(named.size() == grad_ptrs.size());
  for (std::size_t i = 0; i < named.size(); ++i)
    CHECK(named[i].value->same_shape(*grad_ptrs[i]));
}

TEST_CASE("checkpoints round-trip bit for bit") {
  Fixture fx;
  const auto path = std::filesystem::temp_directory_path() / "model_rt.json";
  const Checkpoint saved{1234, fx.config, fx.vocab, fx.params};
  save_checkpoint(path, saved);
  const Checkpoint loaded = load_checkpoint(path);

  CHECK(loaded.rng_seed == 1234);
  CHECK(loaded.vocab == fx.vocab);
  ModelParams original = fx.params;
  ModelParams restored = loaded.params;
  const auto a = trainable_parameters(original);
  const auto b = trainable_parameters(restored);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].value == *b[i].value);

  const Matrix features = fx.random_features(2, 37);
  const auto before = forward_infer(fx.params, fx.config, features, fx.class_matrix, fx.vocab);
  const Matrix loaded_classes =
      assemble_class_matrix(fx.table, loaded.params.background_embedding);
  const auto after =
      forward_infer(loaded.params, loaded.config, features, loaded_classes, fx.vocab);
  CHECK(before.class_scores == after.class_scores);
}
