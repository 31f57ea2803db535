#include "zsd/semantics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "zsd/error.hpp"

namespace zsd {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), ErrorCode::dimension_mismatch,
          "cosine_similarity: dimension mismatch");
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  require(nu > 0.0 && nv > 0.0, ErrorCode::zero_norm_vector,
          "cosine_similarity: zero-norm input");
  return dot(u, v) / (nu * nv);
}

SemanticTable make_semantic_table(Matrix foreground_rows, const ClassVocabulary& vocab) {
  require(foreground_rows.rows() == vocab.foreground_count(),
          ErrorCode::dimension_mismatch,
          "semantic table must have one row per foreground class");
  require(foreground_rows.cols() > 0, ErrorCode::dimension_mismatch,
          "semantic table needs a positive embedding dimension");
  require(foreground_rows.all_finite(), ErrorCode::non_finite_value,
          "semantic table contains non-finite values");
  for (std::size_t r = 0; r < foreground_rows.rows(); ++r) {
    auto row = foreground_rows.row(r);
    const double norm = l2_norm(row);
    require(norm > 0.0, ErrorCode::zero_norm_vector,
            "zero-norm embedding for class '" + vocab.name(r + 1) + "'");
    for (double& v : row) v /= norm;
  }
  return SemanticTable{std::move(foreground_rows)};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

double parse_double_field(const std::string& field, const std::filesystem::path& path) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  require(ec == std::errc() && ptr == end, ErrorCode::io_error,
          "bad numeric field '" + field + "' in " + path.string());
  return value;
}

}  // namespace

SemanticTable load_embeddings(const std::filesystem::path& csv_path,
                              const ClassVocabulary& vocab) {
  std::ifstream in(csv_path);
  require(in.good(), ErrorCode::io_error,
          "cannot open embeddings file " + csv_path.string());

  std::unordered_map<std::string, std::vector<double>> rows;
  std::size_t dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    require(fields.size() >= 2, ErrorCode::io_error,
            "embeddings row needs a name and at least one value: " + line);
    const std::string& name = fields[0];
    require(vocab.index_of(name).has_value(), ErrorCode::unknown_class,
            "embeddings file names unknown class '" + name + "'");
    require(!vocab.is_background(*vocab.index_of(name)), ErrorCode::unknown_class,
            "background class must not appear in the embeddings file");
    require(!rows.contains(name), ErrorCode::duplicate_class,
            "duplicate embeddings row for class '" + name + "'");
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      values.push_back(parse_double_field(fields[i], csv_path));
    if (dim == 0) dim = values.size();
    require(values.size() == dim, ErrorCode::dimension_mismatch,
            "inconsistent embedding dimension for class '" + name + "'");
    rows.emplace(name, std::move(values));
  }

  Matrix table(vocab.foreground_count(), dim);
  for (std::size_t c = 1; c < vocab.size(); ++c) {
    auto it = rows.find(vocab.name(c));
    require(it != rows.end(), ErrorCode::missing_class,
            "embeddings file is missing class '" + vocab.name(c) + "'");
    std::copy(it->second.begin(), it->second.end(),
              table.row(vocab.foreground_row(c)).begin());
  }
  return make_semantic_table(std::move(table), vocab);
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  require(ec == std::errc(), ErrorCode::io_error, "double formatting failed");
  return std::string(buffer, ptr);
}

void save_embeddings_csv(const std::filesystem::path& csv_path,
                         const SemanticTable& table, const ClassVocabulary& vocab) {
  std::ofstream out(csv_path);
  require(out.good(), ErrorCode::io_error,
          "cannot write embeddings file " + csv_path.string());
  out << "# class_name,v1..v" << table.dim() << "\n";
  for (std::size_t c = 1; c < vocab.size(); ++c) {
    out << vocab.name(c);
    for (double v : table.embeddings.row(vocab.foreground_row(c)))
      out << ',' << format_double(v);
    out << '\n';
  }
  require(out.good(), ErrorCode::io_error, "write failed for " + csv_path.string());
}

SimilarityMatrix build_similarity_matrix(const SemanticTable& table,
                                         const ClassVocabulary& vocab,
                                         double temperature) {
  require(table.embeddings.rows() == vocab.foreground_count(),
          ErrorCode::dimension_mismatch, "semantic table does not match vocabulary");
  require(temperature > 0.0, ErrorCode::invalid_argument,
          "similarity temperature must be positive");

  const std::size_t n_u = vocab.unseen_count();
  Matrix values(vocab.size(), n_u);  // background row stays zero

  for (std::size_t c = 1; c <= vocab.seen_count(); ++c) {
    auto seen_row = table.class_embedding(vocab, c);
    std::vector<double> logits(n_u);
    for (std::size_t j = 0; j < n_u; ++j) {
      auto unseen_row = table.class_embedding(vocab, vocab.unseen_class_index(j));
      logits[j] = cosine_similarity(seen_row, unseen_row) / temperature;
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double& l : logits) {
      l = std::exp(l - max_logit);
      denom += l;
    }
    for (std::size_t j = 0; j < n_u; ++j) values(c, j) = logits[j] / denom;
  }

  for (std::size_t j = 0; j < n_u; ++j) values(vocab.unseen_class_index(j), j) = 1.0;

  return SimilarityMatrix{std::move(values)};
}

nlohmann::json similarity_to_json(const SimilarityMatrix& sim,
                                  const ClassVocabulary& vocab) {
  nlohmann::json out;
  out["unseen_classes"] = nlohmann::json::array();
  for (std::size_t j = 0; j < vocab.unseen_count(); ++j)
    out["unseen_classes"].push_back(vocab.name(vocab.unseen_class_index(j)));
  out["rows"] = nlohmann::json::array();
  for (std::size_t c = 0; c < sim.values.rows(); ++c) {
    nlohmann::json row;
    row["class"] = vocab.name(c);
    row["distribution"] = std::vector<double>(sim.values.row(c).begin(),
                                              sim.values.row(c).end());
    out["rows"].push_back(std::move(row));
  }
  return out;
}

}  // namespace zsd
