#include "zsd/vocab.hpp"

#include "zsd/error.hpp"

namespace zsd {

ClassVocabulary ClassVocabulary::create(std::vector<std::string> names,
                                        std::vector<ClassRole> roles) {
  require(names.size() == roles.size(), ErrorCode::invalid_argument,
          "vocabulary: names/roles length mismatch");
  require(!names.empty() && roles[0] == ClassRole::background,
          ErrorCode::invalid_argument, "vocabulary: index 0 must be background");

  ClassVocabulary vocab;
  vocab.names_ = std::move(names);
  std::size_t i = 1;
  while (i < roles.size() && roles[i] == ClassRole::seen) ++i;
  vocab.seen_count_ = i - 1;
  while (i < roles.size() && roles[i] == ClassRole::unseen) ++i;
  vocab.unseen_count_ = i - 1 - vocab.seen_count_;
  require(i == roles.size(), ErrorCode::invalid_argument,
          "vocabulary: roles must be background, then seen block, then unseen block");

  for (std::size_t k = 0; k < vocab.names_.size(); ++k) {
    auto [it, inserted] = vocab.index_.emplace(vocab.names_[k], k);
    (void)it;
    require(inserted, ErrorCode::duplicate_class,
            "vocabulary: duplicate class name '" + vocab.names_[k] + "'");
  }
  return vocab;
}

ClassVocabulary ClassVocabulary::from_parts(std::string background,
                                            std::vector<std::string> seen,
                                            std::vector<std::string> unseen) {
  std::vector<std::string> names;
  std::vector<ClassRole> roles;
  names.reserve(1 + seen.size() + unseen.size());
  names.push_back(std::move(background));
  roles.push_back(ClassRole::background);
  for (auto& n : seen) {
    names.push_back(std::move(n));
    roles.push_back(ClassRole::seen);
  }
  for (auto& n : unseen) {
    names.push_back(std::move(n));
    roles.push_back(ClassRole::unseen);
  }
  return create(std::move(names), std::move(roles));
}

ClassRole ClassVocabulary::role(std::size_t index) const {
  require(index < size(), ErrorCode::invalid_argument, "class index out of range");
  if (index == 0) return ClassRole::background;
  return index <= seen_count_ ? ClassRole::seen : ClassRole::unseen;
}

std::optional<std::size_t> ClassVocabulary::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ClassVocabulary::unseen_offset(std::size_t class_index) const {
  require(is_unseen(class_index), ErrorCode::invalid_argument,
          "unseen_offset: class is not unseen");
  return class_index - first_unseen_index();
}

std::size_t ClassVocabulary::unseen_class_index(std::size_t offset) const {
  require(offset < unseen_count_, ErrorCode::invalid_argument,
          "unseen_class_index: offset out of range");
  return first_unseen_index() + offset;
}

std::size_t ClassVocabulary::foreground_row(std::size_t class_index) const {
  require(class_index >= 1 && class_index < size(), ErrorCode::invalid_argument,
          "foreground_row: background has no semantic row");
  return class_index - 1;
}

}  // namespace zsd
