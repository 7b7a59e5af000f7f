#pragma once

// On-disk workspace and the lifecycle commands that operate on it.
//
//   <root>/config            key=value defaults
//   <root>/.lock             advisory lock held while a command runs
//   <root>/cloud/index.txt   central index (sealed only)
//   <root>/cloud/clusters.txt
//   <root>/cloud/journal.txt one line per update batch
//   <root>/cloud/buffer.txt  sealed tokens awaiting the next re-clustering
//   <root>/cloud/state.txt   token count at the last full clustering
//   <root>/edge/dictionary.tsv
//   <root>/edge/abstracts.txt
//   <root>/edge/key.bin      generated when no key file is configured

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cluspr/corpus.hpp"
#include "cluspr/kestimate.hpp"

namespace cluspr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitState = 2;
inline constexpr int kExitFormat = 3;

struct WorkspaceConfig {
  std::size_t tokens_per_doc = 20;
  std::size_t alpha = 10;
  std::size_t top_p = 3;
  std::size_t cutoff = 10;
  std::uint64_t seed = 0;
  Trim trim = Trim::MeanDocCount;
  std::optional<double> theta;
  std::filesystem::path model;
  std::filesystem::path key;

  /// Applies one `key=value` assignment; throws FormatError on bad input.
  void set(const std::string& key, const std::string& value);
};

WorkspaceConfig read_config(std::istream& is);
void write_config(std::ostream& os, const WorkspaceConfig& config);

class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path cloud() const { return root_ / "cloud"; }
  std::filesystem::path edge() const { return root_ / "edge"; }
  std::filesystem::path config_path() const { return root_ / "config"; }
  std::filesystem::path lock_path() const { return root_ / ".lock"; }
  std::filesystem::path index_path() const { return cloud() / "index.txt"; }
  std::filesystem::path clusters_path() const { return cloud() / "clusters.txt"; }
  std::filesystem::path journal_path() const { return cloud() / "journal.txt"; }
  std::filesystem::path buffer_path() const { return cloud() / "buffer.txt"; }
  std::filesystem::path state_path() const { return cloud() / "state.txt"; }
  std::filesystem::path dictionary_path() const { return edge() / "dictionary.tsv"; }
  std::filesystem::path abstracts_path() const { return edge() / "abstracts.txt"; }
  std::filesystem::path generated_key_path() const { return edge() / "key.bin"; }

  /// Defaults when no config file exists yet.
  WorkspaceConfig config() const;
  void save_config(const WorkspaceConfig& config) const;

  /// Resolves a configured path relative to the workspace root.
  std::filesystem::path resolve(const std::filesystem::path& p) const;

  KeyMaterial key() const;
  EdgeDictionary dictionary() const;
  void save_dictionary(const EdgeDictionary& dict) const;

  std::set<SealedToken> buffer() const;
  void save_buffer(const std::set<SealedToken>& tokens) const;
  std::size_t existing_count() const;
  void save_existing_count(std::size_t count) const;

 private:
  std::filesystem::path root_;
};

/// flock-based guard; shared for read-only commands.
class WorkspaceLock {
 public:
  enum class Mode { Shared, Exclusive };
  WorkspaceLock(const Workspace& ws, Mode mode);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  int fd_ = -1;
};

struct IngestOptions {
  std::optional<std::size_t> tokens_per_doc;
  std::optional<std::filesystem::path> key;
  std::optional<std::filesystem::path> model;
};

struct ClusterOptions {
  bool no_trim = false;
  std::optional<std::size_t> k_override;
  std::optional<std::size_t> alpha;
};

struct SearchOptions {
  std::optional<std::size_t> top_p;
  std::optional<std::size_t> cutoff;
};

struct EvalOptions {
  std::optional<std::filesystem::path> qrels;
  std::optional<std::filesystem::path> queries;
  std::optional<std::filesystem::path> plan;
  std::optional<std::filesystem::path> out;
  std::size_t kmeans_iters = 50;
};

// Each command returns a process exit code and reports through `out`/`err`.
int cmd_ingest(const std::filesystem::path& corpus, const std::filesystem::path& root, const IngestOptions& options,
               std::ostream& out, std::ostream& err);
int cmd_cluster(const std::filesystem::path& root, const ClusterOptions& options, std::ostream& out,
                std::ostream& err);
int cmd_update(const std::filesystem::path& root, const std::filesystem::path& batch_dir, std::ostream& out,
               std::ostream& err);
int cmd_search(const std::filesystem::path& root, const std::string& query, const SearchOptions& options,
               std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& root, const EvalOptions& options, std::ostream& out, std::ostream& err);
/// Prints the config, or applies `key=value` assignments when given.
int cmd_config(const std::filesystem::path& root, const std::vector<std::string>& assignments, std::ostream& out,
               std::ostream& err);
int cmd_keygen(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

}  // namespace cluspr
