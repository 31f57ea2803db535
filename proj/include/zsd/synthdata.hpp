#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "zsd/geometry.hpp"
#include "zsd/matrix.hpp"
#include "zsd/semantics.hpp"
#include "zsd/vocab.hpp"

namespace zsd {

/// Stand-in for a backbone + proposal network: a deterministic world where
/// class semantics predict region features through a fixed linear map, so
/// zero-shot transfer is measurable at desk scale.
struct SynthConfig {
  std::size_t seen_classes = 16;
  std::size_t unseen_classes = 4;
  std::size_t semantic_dim = 16;
  std::size_t region_dim = 32;
  std::size_t train_images = 200;
  std::size_t test_images = 80;
  std::size_t min_objects = 1;
  std::size_t max_objects = 3;
  std::size_t proposals_per_image = 9;
  double feature_noise = 0.25;          // sigma of additive feature noise
  double embedding_mix_noise = 0.15;    // noise in unseen = mix(seen) construction
  std::size_t min_mix_parents = 2;      // parents per unseen embedding (1..3 supported)
  std::size_t max_mix_parents = 3;
  double proposal_jitter = 0.13;        // relative box jitter scale
  double background_proposal_fraction = 0.25;
  double iou_label_threshold = 0.5;
  std::uint64_t seed = 7;
};

ClassVocabulary make_vocabulary(const SynthConfig& config);

/// How an unseen class embedding was mixed from seen ones. Parent indices are
/// semantic-table rows (seen block, 0..n_s-1).
struct UnseenMix {
  std::vector<std::size_t> parents;
  std::vector<double> weights;
};

struct GeneratedEmbeddings {
  SemanticTable table;
  std::vector<UnseenMix> mixes;  // one per unseen class
};

/// Seen classes get random unit embeddings; each unseen class is a noisy
/// convex mix of 1-3 seen embeddings, so cosine structure between seen and
/// unseen classes carries real signal.
GeneratedEmbeddings generate_embeddings(const SynthConfig& config, std::uint64_t seed);

/// Which object classes a split may contain. test_seen follows the train
/// policy (seen-only objects) on held-out images.
enum class Split { train, test_seen, test_zsd, test_gzsd };

struct GtObject {
  Box box;
  int label = 0;  // vocabulary index, always foreground
};

struct Proposal {
  Box box;
  std::vector<double> feature;
  int label = 0;   // assigned vocabulary index; 0 = background
  Offsets target;  // zero for background proposals
};

struct SynthImage {
  int image_id = 0;
  std::vector<GtObject> ground_truth;
  std::vector<Proposal> proposals;
};

struct SynthDataset {
  std::vector<SynthImage> images;
  std::size_t region_dim = 0;

  std::size_t proposal_count() const;
};

/// Class prototypes are a fixed random linear image of the class embeddings
/// (derived from config.seed, shared by every split); proposal features are
/// the prototype of the assigned label scaled by the proposal's best IoU plus
/// Gaussian noise. Labels and regression targets follow the max-IoU rule.
SynthDataset generate_scene(const SynthConfig& config, const SemanticTable& table,
                            const ClassVocabulary& vocab, Split split,
                            std::uint64_t seed);

/// JSON-lines, one image per line:
/// {"image_id":., "gts":[{"box":[x,y,w,h],"label":.}],
///  "proposals":[{"box":[...],"feature":[...],"label":.,"target":[...]}]}
void save_dataset_jsonl(const std::filesystem::path& path, const SynthDataset& dataset);
SynthDataset load_dataset_jsonl(const std::filesystem::path& path);

struct RegionBatch {
  Matrix features;          // b x d_r
  std::vector<int> labels;  // vocabulary indices
  std::vector<Box> boxes;
  Matrix targets;  // b x 4, zero rows for background
};

/// Streams the dataset's proposals in seeded shuffled order, reshuffled per
/// epoch; every epoch covers each proposal exactly once.
class BatchIterator {
 public:
  BatchIterator(const SynthDataset& dataset, std::size_t batch_size, std::uint64_t seed);

  void start_epoch(std::size_t epoch);
  std::optional<RegionBatch> next();
  std::size_t batches_per_epoch() const;

 private:
  const SynthDataset* dataset_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<std::pair<std::size_t, std::size_t>> order_;  // (image, proposal)
  std::size_t cursor_ = 0;
};

}  // namespace zsd
