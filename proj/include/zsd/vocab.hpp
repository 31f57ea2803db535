#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace zsd {

enum class ClassRole { background, seen, unseen };

/// Ordered class set. Index 0 is the single background class, seen classes
/// occupy 1..n_s and unseen classes n_s+1..n_s+n_u.
class ClassVocabulary {
 public:
  static ClassVocabulary create(std::vector<std::string> names,
                                std::vector<ClassRole> roles);
  static ClassVocabulary from_parts(std::string background,
                                    std::vector<std::string> seen,
                                    std::vector<std::string> unseen);

  std::size_t size() const { return names_.size(); }  // n_c
  std::size_t seen_count() const { return seen_count_; }
  std::size_t unseen_count() const { return unseen_count_; }
  std::size_t foreground_count() const { return seen_count_ + unseen_count_; }

  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  ClassRole role(std::size_t index) const;
  std::optional<std::size_t> index_of(const std::string& name) const;

  bool is_background(std::size_t index) const { return index == 0; }
  bool is_seen(std::size_t index) const {
    return index >= 1 && index <= seen_count_;
  }
  bool is_unseen(std::size_t index) const {
    return index > seen_count_ && index < size();
  }

  std::size_t first_unseen_index() const { return 1 + seen_count_; }
  /// Position of an unseen class within the unseen block (0..n_u-1).
  std::size_t unseen_offset(std::size_t class_index) const;
  std::size_t unseen_class_index(std::size_t offset) const;
  /// Row of a foreground class in a SemanticTable (0..n_s+n_u-1).
  std::size_t foreground_row(std::size_t class_index) const;

  bool operator==(const ClassVocabulary& other) const {
    return names_ == other.names_ && seen_count_ == other.seen_count_ &&
           unseen_count_ == other.unseen_count_;
  }

 private:
  std::vector<std::string> names_;
  std::size_t seen_count_ = 0;
  std::size_t unseen_count_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace zsd
