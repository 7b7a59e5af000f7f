#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "cluspr/corpus.hpp"
#include "cluspr/statclust.hpp"

namespace cluspr {

/// Word vectors loaded from a plain-text embedding file; similarity is cosine.
class SimilarityModel {
 public:
  SimilarityModel() = default;
  /// Rows of `vectors` belong to `words`; zero rows are rejected.
  SimilarityModel(std::vector<std::string> words, Eigen::MatrixXd vectors);

  /// Format: `<vocab_size> <dimension>` then `<word> <D floats>` per line.
  static SimilarityModel parse(std::istream& is);
  static SimilarityModel load(const std::filesystem::path& path);

  std::size_t size() const { return words_.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(unit_.cols()); }
  bool contains(std::string_view word) const;
  std::span<const std::string> words() const { return words_; }

  /// Cosine similarity, or nullopt when either word is out of vocabulary.
  std::optional<double> similarity(std::string_view a, std::string_view b) const;

 private:
  std::optional<Eigen::Index> row(std::string_view word) const;

  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> rows_;
  Eigen::MatrixXd unit_;
};

/// Mean pairwise similarity over the in-vocabulary elements. Throws
/// InsufficientVocabulary when fewer than two elements are in vocabulary.
double coherency(std::span<const std::string> elements, const SimilarityModel& model);
std::optional<double> try_coherency(std::span<const std::string> elements, const SimilarityModel& model);

struct Abstract {
  int cluster_id = 0;
  std::vector<std::string> elements;
  std::optional<double> coherency;
};

/// Threshold used when no abstract has a defined coherency.
inline constexpr double kDefaultTheta = 0.1;

struct AbstractSet {
  std::vector<Abstract> abstracts;
  double theta = kDefaultTheta;

  const Abstract* find(int cluster_id) const;
  /// theta = min of the defined coherencies, or kDefaultTheta if none.
  void recompute_theta();
};

/// Top-`alpha` members of each cluster by total frequency (ties by sealed hex),
/// unsealed. Coherency is computed when a model is given.
AbstractSet build_abstracts(const ClusterSet& clusters, const InvertedIndex& index,
                            const std::map<SealedToken, std::string>& unseal, std::size_t alpha,
                            const SimilarityModel* model);

void write_abstracts(std::ostream& os, const AbstractSet& set);
AbstractSet read_abstracts(std::istream& is);
void save_abstracts(const std::filesystem::path& path, const AbstractSet& set);
AbstractSet load_abstracts(const std::filesystem::path& path);

}  // namespace cluspr
