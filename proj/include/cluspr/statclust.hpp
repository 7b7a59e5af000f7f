#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cluspr/corpus.hpp"
#include "cluspr/kestimate.hpp"

namespace cluspr {

/// One token considered by center selection.
struct CenterCandidate {
  SealedToken token;
  /// |A - U| / |A ∩ U|; +inf when nothing is covered yet.
  double uniqueness = 0.0;
  /// uniqueness * q_ii * (1 - q_ii), with |A - U| + 1 standing in for an
  /// infinite uniqueness.
  double centrality = 0.0;
  double separation = 0.0;
  std::size_t doc_count = 0;
  std::size_t new_docs = 0;
  bool accepted = false;
};

struct CenterSelection {
  std::vector<SealedToken> centers;
  /// Every visited token in visiting order, accepted or not.
  std::vector<CenterCandidate> audit;
};

/// Visits `tokens` by descending document count (ties lexicographic), keeps
/// those with uniqueness > 1 while growing the covered-document set, then
/// returns at most `k` of them by descending centrality (ties lexicographic).
/// `separation[i]` is q_ii for `tokens[i]`.
CenterSelection choose_centers(std::size_t k, std::span<const SealedToken> tokens, const Vector<double>& separation,
                               const InvertedIndex& index);

/// Co-occurrence value of `t_i` and `t_j` in `d`, a document both appear in.
double cooccurrence_value(const SealedToken& t_i, const SealedToken& t_j, const SealedDocId& d,
                          const InvertedIndex& index);

/// Disparity value of `t_i` and `t_j` in `d`, a document exactly one of them appears in.
double disparity_value(const SealedToken& t_i, const SealedToken& t_j, const SealedDocId& d,
                       const InvertedIndex& index);

/// Relatedness of token `t` to center `c`: the relative co-occurrence summed
/// over F_t ∪ F_c and weighted by t's share of its own frequency mass.
double relatedness(const SealedToken& center, const SealedToken& t, const InvertedIndex& index);

/// Relatedness values closer than this are ties; the smaller center token wins.
inline constexpr double kTieTolerance = 1e-12;

struct Cluster {
  int id = 0;
  SealedToken center;
  /// Sorted; includes the center.
  std::vector<SealedToken> members;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct ClusterSet {
  std::vector<Cluster> clusters;

  std::size_t k_used() const { return clusters.size(); }
  const Cluster* find(int id) const;
  Cluster* find(int id);
  int next_id() const;
  /// token -> cluster id
  std::map<SealedToken, int> membership() const;
  std::set<SealedToken> tokens() const;
  /// Sorts members and clusters by id.
  void canonicalize();

  friend bool operator==(const ClusterSet&, const ClusterSet&) = default;
};

/// Clusters are pairwise disjoint, centers belong to their own cluster and the
/// union of members equals `expected`. Returns a description of the first
/// violation, or nullopt.
std::optional<std::string> partition_violation(const ClusterSet& clusters, const std::set<SealedToken>& expected);

/// Assigns every index token to the center with maximum relatedness. Cluster
/// ids follow the order of `centers`, starting at 1.
ClusterSet distribute(const InvertedIndex& index, std::span<const SealedToken> centers);

struct StaticOptions {
  Trim trim = Trim::MeanDocCount;
  std::optional<std::size_t> k_override;
};

struct StaticClustering {
  KEstimate estimate;
  std::size_t k_requested = 0;
  CenterSelection selection;
  ClusterSet clusters;
};

/// Full static pipeline: estimate k, choose centers, distribute.
StaticClustering cluster_static(const InvertedIndex& index, const StaticOptions& options = {});

void write_clusters(std::ostream& os, const ClusterSet& clusters);
ClusterSet read_clusters(std::istream& is);
void save_clusters(const std::filesystem::path& path, const ClusterSet& clusters);
ClusterSet load_clusters(const std::filesystem::path& path);

}  // namespace cluspr
