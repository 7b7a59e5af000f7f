#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cluspr/abstracts.hpp"
#include "cluspr/corpus.hpp"
#include "cluspr/kestimate.hpp"
#include "cluspr/statclust.hpp"

namespace cluspr {

struct CoherencyReport {
  std::string scheme;
  /// cluster id -> mean pairwise similarity of its in-vocabulary members.
  std::map<int, std::optional<double>> per_cluster;
  /// Unweighted mean over clusters with a defined value.
  double overall = 0.0;
  std::size_t k_used = 0;
};

CoherencyReport cluster_coherency(const ClusterSet& clusters, const std::map<SealedToken, std::string>& unseal,
                                  const SimilarityModel& model, std::string scheme = "");

/// Lloyd's k-means over the rows of the normalized (untrimmed) token-document
/// matrix with Euclidean distance and `k` distinct seeded starting rows.
/// Clusters that end up empty are dropped; each center is the member nearest
/// its centroid.
ClusterSet kmeans_baseline(const InvertedIndex& index, std::size_t k, std::size_t iters, std::uint64_t seed);

/// Uniform random assignment of every index token to one of `k` clusters.
ClusterSet random_assignment(const InvertedIndex& index, std::size_t k, std::uint64_t seed);

/// Batch-update experiment. Plan files are `key=value` lines:
///
///   base=<dir>          (repeatable) documents of the initial clustering
///   pool=<dir>          (repeatable) documents batches are sampled from
///   batch=<name> <docs> (repeatable, in order)
///   repetitions=<n>     seed=<u64>   tokens_per_doc=<n>   alpha=<n>   trim=<mean|none>
///
/// Relative directories resolve against the plan file's directory.
struct ExperimentPlan {
  std::vector<std::filesystem::path> base;
  std::vector<std::filesystem::path> pool;
  std::vector<std::pair<std::string, std::size_t>> batches;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  std::size_t tokens_per_doc = 20;
  std::size_t alpha = 10;
  Trim trim = Trim::MeanDocCount;
};

ExperimentPlan read_plan(std::istream& is, const std::filesystem::path& relative_to);
ExperimentPlan load_plan(const std::filesystem::path& path);

struct ExperimentRow {
  std::string scheme;
  std::string batch;
  double coherency_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double k_used = 0.0;
  std::string decision;
  std::size_t recluster_count = 0;
  std::size_t repetitions = 0;
};

inline constexpr const char* kGatedScheme = "sd-gated";
inline constexpr const char* kBaselineScheme = "sd-baseline";

/// Runs the gated arm (chi-square decides between re-clustering and
/// incremental update) against the baseline arm (always incremental) over
/// each repetition's sampled batches. Coherency means carry a normal-
/// approximation 95% interval.
std::vector<ExperimentRow> run_update_experiment(const ExperimentPlan& plan, const SimilarityModel& model);

/// `scheme\tbatch\tcoherency_mean\tci_low\tci_high\tk_used\tdecision`
void write_experiment_report(std::ostream& os, const std::vector<ExperimentRow>& rows);

}  // namespace cluspr
