#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cluspr/abstracts.hpp"
#include "cluspr/corpus.hpp"
#include "cluspr/statclust.hpp"

namespace cluspr {

struct Query {
  std::string raw;
  /// Normalized, de-duplicated terms in order of first appearance.
  std::vector<std::string> terms;
  /// trapdoor[i] = seal(terms[i]).
  std::vector<SealedToken> trapdoor;
};

/// Throws DomainError when no term survives normalization.
Query make_query(std::string_view raw, const KeyMaterial& key);

struct Hit {
  SealedDocId doc;
  double score = 0.0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

struct ResultSet {
  std::vector<Hit> hits;
  std::vector<int> searched_cluster_ids;
};

/// Abstract relevance of a query: mean over in-vocabulary terms of the best
/// element similarity. Zero when nothing is comparable.
double abstract_score(std::span<const std::string> terms, const Abstract& abstract, const SimilarityModel& model);

/// Ids of the `top_p` best-scoring abstracts (ties by lower id). Returns every
/// id when all scores are zero.
std::vector<int> prune(const Query& query, const AbstractSet& abstracts, const SimilarityModel& model,
                       std::size_t top_p);

/// Sums f(token, doc) over trapdoor tokens that are members of the selected
/// clusters; top `cutoff` documents by score, ties by sealed doc hex.
ResultSet search_clusters(const Query& query, std::span<const int> cluster_ids, const ClusterSet& clusters,
                          const InvertedIndex& index, std::size_t cutoff);

/// Same scoring over the whole index, without pruning.
ResultSet search_index(const Query& query, const InvertedIndex& index, std::size_t cutoff);

/// `<rank>\t<sealed-doc-hex>\t<score>` per hit, then `searched-clusters: <ids>`.
void write_results(std::ostream& os, const ResultSet& results);

/// TREC-style average precision at a cutoff: the precision at each relevant
/// rank, summed and divided by the cutoff. Missing ranks count as irrelevant.
double tsap(std::span<const bool> relevance, std::size_t cutoff);
inline double tsap_at_10(std::span<const bool> relevance) { return tsap(relevance, 10); }

/// query id -> set of relevant document ids (plaintext names).
using Qrels = std::map<std::string, std::set<std::string>>;

/// `<query-id>\t<doc-id>\t<0|1>` per line.
Qrels read_qrels(std::istream& is);

/// `<query-id>\t<query text>` per line, in file order.
std::vector<std::pair<std::string, std::string>> read_queries(std::istream& is);

}  // namespace cluspr
