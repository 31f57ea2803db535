#pragma once

#include <filesystem>
#include <span>

#include <json.hpp>

#include "zsd/matrix.hpp"
#include "zsd/vocab.hpp"

namespace zsd {

/// Foreground class embeddings, one row per class in vocabulary order
/// (background excluded). Rows are unit L2 norm after construction.
struct SemanticTable {
  Matrix embeddings;  // (n_s + n_u) x d_c

  std::size_t dim() const { return embeddings.cols(); }
  std::span<const double> class_embedding(const ClassVocabulary& vocab,
                                          std::size_t class_index) const {
    return embeddings.row(vocab.foreground_row(class_index));
  }
};

/// Per-class distribution over unseen classes, n_c x n_u:
/// row 0 (background) is zero, seen rows are softmax of cosine similarities
/// to the unseen classes, unseen rows are one-hot at their own position.
struct SimilarityMatrix {
  Matrix values;
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Normalizes each row to unit L2 norm; rejects zero-norm rows.
SemanticTable make_semantic_table(Matrix foreground_rows, const ClassVocabulary& vocab);

/// CSV with one `class_name,v1,...,vd` row per foreground class; `#` starts a
/// comment line. Rows may appear in any order and are reordered to match the
/// vocabulary.
SemanticTable load_embeddings(const std::filesystem::path& csv_path,
                              const ClassVocabulary& vocab);
void save_embeddings_csv(const std::filesystem::path& csv_path,
                         const SemanticTable& table, const ClassVocabulary& vocab);

SimilarityMatrix build_similarity_matrix(const SemanticTable& table,
                                         const ClassVocabulary& vocab,
                                         double temperature = 1.0);

nlohmann::json similarity_to_json(const SimilarityMatrix& sim,
                                  const ClassVocabulary& vocab);

/// Shortest round-trip decimal form of a double (for CSV output).
std::string format_double(double value);

}  // namespace zsd
