#include "zsd/checkpoint.hpp"

#include <fstream>

#include "zsd/error.hpp"

namespace zsd {

namespace {
constexpr int kCheckpointVersion = 1;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.values().begin(), m.values().end());
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(data.size() == rows * cols, ErrorCode::io_error,
          "matrix payload does not match its shape header");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.values().begin());
  return m;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"region_dim", c.region_dim},
          {"semantic_dim", c.semantic_dim},
          {"common_dim", c.common_dim},
          {"consistency_hidden", c.consistency_hidden},
          {"contrast_dim", c.contrast_dim},
          {"temperature", c.temperature},
          {"lambda", c.lambda},
          {"beta", c.beta},
          {"background_in_contrastive", c.background_in_contrastive},
          {"similarity_temperature", c.similarity_temperature}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  c.region_dim = j.value("region_dim", c.region_dim);
  c.semantic_dim = j.value("semantic_dim", c.semantic_dim);
  c.common_dim = j.value("common_dim", c.common_dim);
  c.consistency_hidden = j.value("consistency_hidden", c.consistency_hidden);
  c.contrast_dim = j.value("contrast_dim", c.contrast_dim);
  c.temperature = j.value("temperature", c.temperature);
  c.lambda = j.value("lambda", c.lambda);
  c.beta = j.value("beta", c.beta);
  c.background_in_contrastive =
      j.value("background_in_contrastive", c.background_in_contrastive);
  c.similarity_temperature = j.value("similarity_temperature", c.similarity_temperature);
  return c;
}

nlohmann::json vocab_to_json(const ClassVocabulary& vocab) {
  nlohmann::json j;
  j["background"] = vocab.name(0);
  auto seen = nlohmann::json::array();
  for (std::size_t c = 1; c <= vocab.seen_count(); ++c) seen.push_back(vocab.name(c));
  auto unseen = nlohmann::json::array();
  for (std::size_t u = 0; u < vocab.unseen_count(); ++u)
    unseen.push_back(vocab.name(vocab.unseen_class_index(u)));
  j["seen"] = std::move(seen);
  j["unseen"] = std::move(unseen);
  return j;
}

ClassVocabulary vocab_from_json(const nlohmann::json& j) {
  return ClassVocabulary::from_parts(j.at("background").get<std::string>(),
                                     j.at("seen").get<std::vector<std::string>>(),
                                     j.at("unseen").get<std::vector<std::string>>());
}

void save_vocab_json(const std::filesystem::path& path, const ClassVocabulary& vocab) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write " + path.string());
  out << vocab_to_json(vocab).dump(2) << '\n';
  require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
}

ClassVocabulary load_vocab_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return vocab_from_json(j);
}

namespace {

nlohmann::json affine_to_json(const AffineLayer& layer) {
  static const char* kNames[] = {"identity", "relu", "sigmoid"};
  nlohmann::json j;
  j["weights"] = matrix_to_json(layer.weights);
  j["bias"] = matrix_to_json(layer.bias);
  j["activation"] = kNames[static_cast<int>(layer.activation)];
  return j;
}

AffineLayer affine_from_json(const nlohmann::json& j) {
  AffineLayer layer;
  layer.weights = matrix_from_json(j.at("weights"));
  layer.bias = matrix_from_json(j.at("bias"));
  const auto name = j.at("activation").get<std::string>();
  if (name == "identity") layer.activation = Activation::identity;
  else if (name == "relu") layer.activation = Activation::relu;
  else if (name == "sigmoid") layer.activation = Activation::sigmoid;
  else fail(ErrorCode::io_error, "unknown activation '" + name + "'");
  return layer;
}

nlohmann::json mlp_to_json(const Mlp& net) {
  auto layers = nlohmann::json::array();
  for (const auto& layer : net.layers) layers.push_back(affine_to_json(layer));
  return layers;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  for (const auto& layer : j) net.layers.push_back(affine_from_json(layer));
  require(!net.layers.empty(), ErrorCode::io_error, "empty network in checkpoint");
  return net;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["rng_seed"] = checkpoint.rng_seed;
  j["model_config"] = model_config_to_json(checkpoint.config);
  j["vocabulary"] = vocab_to_json(checkpoint.vocab);
  j["params"] = {
      {"visual_mapper", mlp_to_json(checkpoint.params.visual_mapper)},
      {"semantic_mapper", mlp_to_json(checkpoint.params.semantic_mapper)},
      {"seen_head", mlp_to_json(checkpoint.params.seen_head)},
      {"unseen_head", mlp_to_json(checkpoint.params.unseen_head)},
      {"contrast_head", mlp_to_json(checkpoint.params.contrast_head)},
      {"box_regressor", affine_to_json(checkpoint.params.box_regressor)},
      {"background_embedding", matrix_to_json(checkpoint.params.background_embedding)},
  };

  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
  require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io_error, "malformed checkpoint " + path.string() + ": " + e.what());
  }
  require(j.value("format_version", 0) == kCheckpointVersion, ErrorCode::io_error,
          "unsupported checkpoint version in " + path.string());

  Checkpoint checkpoint;
  checkpoint.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  checkpoint.config = model_config_from_json(j.at("model_config"));
  checkpoint.vocab = vocab_from_json(j.at("vocabulary"));
  const auto& p = j.at("params");
  checkpoint.params.visual_mapper = mlp_from_json(p.at("visual_mapper"));
  checkpoint.params.semantic_mapper = mlp_from_json(p.at("semantic_mapper"));
  checkpoint.params.seen_head = mlp_from_json(p.at("seen_head"));
  checkpoint.params.unseen_head = mlp_from_json(p.at("unseen_head"));
  checkpoint.params.contrast_head = mlp_from_json(p.at("contrast_head"));
  checkpoint.params.box_regressor = affine_from_json(p.at("box_regressor"));
  checkpoint.params.background_embedding =
      matrix_from_json(p.at("background_embedding"));
  return checkpoint;
}

}  // namespace zsd
