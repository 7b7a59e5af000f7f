#pragma once

// Maintenance of an existing clustering as document batches arrive.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cluspr/abstracts.hpp"
#include "cluspr/corpus.hpp"
#include "cluspr/statclust.hpp"

namespace cluspr {

/// Critical value of the chi-square distribution, one degree of freedom, 95%.
inline constexpr double kChiSquareCritical = 3.841;

/// Initial threshold for clustering a stream from scratch.
inline constexpr double kStreamTheta = 0.1;

struct ReclusterDecision {
  std::size_t new_count = 0;
  std::size_t existing_count = 0;
  double chi2 = 0.0;
  double threshold = kChiSquareCritical;
  bool recluster = false;
};

/// chi2 = (new - existing)^2 / existing; re-cluster when chi2 <= 3.841.
ReclusterDecision decide_recluster(std::size_t new_count, std::size_t existing_count);

/// One batch of documents, indexed with the central key.
struct UpdateBatch {
  TempIndex temp;
  /// Tokens of `temp` that the central index does not hold.
  std::set<SealedToken> new_tokens;
  /// Edge-side plaintexts of the batch tokens.
  std::map<SealedToken, std::string> plaintexts;
};

UpdateBatch make_batch(TempIndex temp, const InvertedIndex& central, std::map<SealedToken, std::string> plaintexts);

/// Merges `batch` into `buffer`: postings summed, new-token sets unioned.
UpdateBatch accumulate(const UpdateBatch& batch, const UpdateBatch& buffer);

/// A plaintext token and the cluster it was placed in.
struct Assignment {
  std::string token;
  int cluster_id = 0;
  bool created = false;
  /// Best abstract-element similarity seen; nullopt for out-of-vocabulary tokens.
  std::optional<double> best_similarity;
};

using AssignmentMap = std::vector<Assignment>;

/// Places each token (in the given order) in the cluster whose abstract holds
/// the element of highest similarity strictly above `abstracts.theta`; ties go
/// to the lower cluster id. Otherwise a singleton abstract is appended and the
/// token starts a new cluster. `abstracts.theta` itself is not changed.
/// New cluster ids start at `first_new_id`, or after the largest abstract id
/// when it is 0.
AssignmentMap assign_tokens(AbstractSet& abstracts, std::span<const std::string> tokens,
                            const SimilarityModel* model, int first_new_id = 0);

/// Orders batch tokens by descending batch frequency, ties by sealed hex.
std::vector<SealedToken> batch_order(const UpdateBatch& batch, const std::set<SealedToken>& subset);

struct UpdateResult {
  AssignmentMap assignments;
  InvertedIndex index;
  ClusterSet clusters;
};

/// Incremental path: assigns the batch's new tokens through the abstracts,
/// seals the result into the cluster set and merges the batch postings into
/// the central index. `abstracts` gains any singleton abstracts created.
UpdateResult update_clusters(AbstractSet& abstracts, const ClusterSet& clusters, const InvertedIndex& central,
                             const UpdateBatch& batch, const SimilarityModel* model);

struct ReclusterResult {
  InvertedIndex index;
  StaticClustering clustering;
};

/// Merges `temp` into `index` and runs the static pipeline on the result.
ReclusterResult full_recluster(const InvertedIndex& index, const TempIndex& temp, const StaticOptions& options = {});

struct StreamClustering {
  /// Plaintext members; the first token is the center of cluster 1.
  ClusterSet clusters;
  AbstractSet abstracts;
  AssignmentMap assignments;
};

/// Clusters the tokens of the first document of a stream: the most frequent
/// token (ties lexicographic) seeds cluster 1 and the rest follow in
/// descending frequency through `assign_tokens` with theta = 0.1.
StreamClustering fd_bootstrap(std::span<const TokenCount> first_doc_tokens, const SimilarityModel* model,
                              double theta = kStreamTheta);

/// `BATCH <id> new=<n> existing=<e> chi2=<v> decision=<recluster|update>`
std::string journal_line(int batch_id, const ReclusterDecision& decision);

}  // namespace cluspr
