#include "cluspr/workspace.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cluspr/abstracts.hpp"
#include "cluspr/dynclust.hpp"
#include "cluspr/errors.hpp"
#include "cluspr/evalharness.hpp"
#include "cluspr/search.hpp"
#include "cluspr/statclust.hpp"

namespace fs = std::filesystem;

namespace cluspr {

namespace {

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || value.front() == '-') {
    throw FormatError("config " + key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw StateError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StateError("cannot read " + path.string());
  return in;
}

std::optional<SimilarityModel> try_model(const Workspace& ws, const WorkspaceConfig& config, std::ostream& err) {
  if (config.model.empty()) return std::nullopt;
  const auto path = ws.resolve(config.model);
  if (!fs::exists(path)) {
    err << "warning: model file " << path.string() << " not found\n";
    return std::nullopt;
  }
  return SimilarityModel::load(path);
}

AbstractSet make_abstracts(const ClusterSet& clusters, const InvertedIndex& index, const EdgeDictionary& dict,
                           std::size_t alpha, const SimilarityModel* model, const WorkspaceConfig& config) {
  auto set = build_abstracts(clusters, index, dict.tokens, alpha, model);
  if (config.theta) set.theta = *config.theta;
  return set;
}

std::size_t journal_length(const Workspace& ws) {
  std::ifstream in(ws.journal_path());
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) lines += line.empty() ? 0 : 1;
  return lines;
}

// Maps library errors onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitState;
  }
}

void require(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw StateError(what);
}

}  // namespace

// --- config ---------------------------------------------------------------

void WorkspaceConfig::set(const std::string& key, const std::string& value) {
  if (key == "tokens_per_doc") {
    tokens_per_doc = parse_unsigned(key, value);
    if (tokens_per_doc == 0) throw FormatError("config tokens_per_doc must be positive");
  } else if (key == "alpha") {
    alpha = parse_unsigned(key, value);
    if (alpha == 0) throw FormatError("config alpha must be positive");
  } else if (key == "top_p") {
    top_p = parse_unsigned(key, value);
    if (top_p == 0) throw FormatError("config top_p must be positive");
  } else if (key == "cutoff") {
    cutoff = parse_unsigned(key, value);
    if (cutoff == 0) throw FormatError("config cutoff must be positive");
  } else if (key == "seed") {
    seed = parse_unsigned(key, value);
  } else if (key == "trim") {
    if (value == "mean") {
      trim = Trim::MeanDocCount;
    } else if (value == "none") {
      trim = Trim::None;
    } else {
      throw FormatError("config trim must be 'mean' or 'none'");
    }
  } else if (key == "theta") {
    if (value.empty()) {
      theta.reset();
      return;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size() || !(v >= -1.0 && v <= 1.0)) {
      throw FormatError("config theta must be a number in [-1, 1]");
    }
    theta = v;
  } else if (key == "model") {
    model = value;
  } else if (key == "key") {
    this->key = value;
  } else {
    throw FormatError("unknown config key '" + key + "'");
  }
}

WorkspaceConfig read_config(std::istream& is) {
  WorkspaceConfig config;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line without '=': " + line);
    config.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

void write_config(std::ostream& os, const WorkspaceConfig& c) {
  os << "alpha=" << c.alpha << '\n'
     << "cutoff=" << c.cutoff << '\n'
     << "key=" << c.key.string() << '\n'
     << "model=" << c.model.string() << '\n'
     << "seed=" << c.seed << '\n'
     << "theta=";
  if (c.theta) os << *c.theta;
  os << '\n'
     << "tokens_per_doc=" << c.tokens_per_doc << '\n'
     << "top_p=" << c.top_p << '\n'
     << "trim=" << (c.trim == Trim::None ? "none" : "mean") << '\n';
}

// --- workspace ------------------------------------------------------------

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

WorkspaceConfig Workspace::config() const {
  if (!fs::exists(config_path())) return {};
  auto in = open_in(config_path());
  return read_config(in);
}

void Workspace::save_config(const WorkspaceConfig& config) const {
  auto out = open_out(config_path());
  write_config(out, config);
}

fs::path Workspace::resolve(const fs::path& p) const { return p.is_absolute() ? p : root_ / p; }

KeyMaterial Workspace::key() const {
  const auto c = config();
  const auto path = c.key.empty() ? generated_key_path() : resolve(c.key);
  if (!fs::exists(path)) throw StateError("key file " + path.string() + " not found");
  return KeyMaterial::from_file(path);
}

EdgeDictionary Workspace::dictionary() const {
  if (!fs::exists(dictionary_path())) return {};
  auto in = open_in(dictionary_path());
  return read_dictionary(in);
}

void Workspace::save_dictionary(const EdgeDictionary& dict) const {
  auto out = open_out(dictionary_path());
  write_dictionary(out, dict);
}

std::set<SealedToken> Workspace::buffer() const {
  std::set<SealedToken> tokens;
  if (!fs::exists(buffer_path())) return tokens;
  auto in = open_in(buffer_path());
  std::string line;
  if (!std::getline(in, line) || line.rfind("CLUSPR-BUFFER v1 ", 0) != 0) {
    throw FormatError("bad buffer header in " + buffer_path().string());
  }
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.insert(line);
  }
  return tokens;
}

void Workspace::save_buffer(const std::set<SealedToken>& tokens) const {
  auto out = open_out(buffer_path());
  out << "CLUSPR-BUFFER v1 " << tokens.size() << '\n';
  for (const auto& t : tokens) out << t << '\n';
}

std::size_t Workspace::existing_count() const {
  auto in = open_in(state_path());
  std::string line;
  std::getline(in, line);
  if (line.rfind("existing=", 0) != 0) throw FormatError("bad state file " + state_path().string());
  return parse_unsigned("existing", line.substr(9));
}

void Workspace::save_existing_count(std::size_t count) const {
  auto out = open_out(state_path());
  out << "existing=" << count << '\n';
}

WorkspaceLock::WorkspaceLock(const Workspace& ws, Mode mode) {
  fs::create_directories(ws.root());
  fd_ = ::open(ws.lock_path().c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw StateError("cannot open lock file: " + std::string(std::strerror(errno)));
  const int op = (mode == Mode::Shared ? LOCK_SH : LOCK_EX) | LOCK_NB;
  if (::flock(fd_, op) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw StateError("workspace " + ws.root().string() + " is in use by another command");
  }
}

WorkspaceLock::~WorkspaceLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// --- commands -------------------------------------------------------------

int cmd_ingest(const fs::path& corpus, const fs::path& root, const IngestOptions& options, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const Workspace ws(root);
    WorkspaceLock lock(ws, WorkspaceLock::Mode::Exclusive);
    auto config = ws.config();
    if (options.tokens_per_doc) config.tokens_per_doc = *options.tokens_per_doc;
    if (options.key) config.key = fs::absolute(*options.key);
    if (options.model) config.model = fs::absolute(*options.model);

    const auto docs = load_corpus(corpus);
    if (docs.empty()) throw StateError("no documents");

    fs::create_directories(ws.cloud());
    fs::create_directories(ws.edge());
    if (config.key.empty() && !fs::exists(ws.generated_key_path())) {
      KeyMaterial::generate().write_file(ws.generated_key_path());
      fs::permissions(ws.generated_key_path(), fs::perms::owner_read | fs::perms::owner_write);
    }
    ws.save_config(config);

    const auto built = build_index(docs, config.tokens_per_doc, ws.key());
    for (const auto& id : built.skipped) err << "warning: " << id << " has no indexable terms; skipped\n";

    // A new index invalidates every derived artifact.
    for (const auto& p : {ws.clusters_path(), ws.journal_path(), ws.buffer_path(), ws.state_path(),
                          ws.abstracts_path()}) {
      fs::remove(p);
    }
    save_index(ws.index_path(), built.index);
    ws.save_dictionary(built.dictionary);
    out << "documents=" << built.index.doc_count() << " tokens=" << built.index.token_count() << '\n';
    return kExitOk;
  });
}

int cmd_cluster(const fs::path& root, const ClusterOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Workspace ws(root);
    require(ws.index_path(), "no index in " + root.string() + "; run ingest first");
    WorkspaceLock lock(ws, WorkspaceLock::Mode::Exclusive);
    const auto config = ws.config();
    const auto index = load_index(ws.index_path());

    StaticOptions static_options{options.no_trim ? Trim::None : config.trim, options.k_override};
    const auto result = cluster_static(index, static_options);
    save_clusters(ws.clusters_path(), result.clusters);
    ws.save_existing_count(index.token_count());
    ws.save_buffer({});

    const std::size_t alpha = options.alpha.value_or(config.alpha);
    const bool model_missing = !config.model.empty() && !fs::exists(ws.resolve(config.model));
    if (model_missing) {
      err << "warning: model file " << ws.resolve(config.model).string() << " not found; abstracts skipped\n";
      fs::remove(ws.abstracts_path());
    } else {
      const auto model = try_model(ws, config, err);
      const auto abstracts =
          make_abstracts(result.clusters, index, ws.dictionary(), alpha, model ? &*model : nullptr, config);
      save_abstracts(ws.abstracts_path(), abstracts);
    }
    out << "k=" << result.k_requested << '\n';
    return kExitOk;
  });
}

int cmd_update(const fs::path& root, const fs::path& batch_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Workspace ws(root);
    require(ws.clusters_path(), "no prior clustering in " + root.string() + "; run cluster first");
    WorkspaceLock lock(ws, WorkspaceLock::Mode::Exclusive);
    const auto config = ws.config();
    const auto key = ws.key();
    const auto index = load_index(ws.index_path());
    const auto clusters = load_clusters(ws.clusters_path());
    auto dict = ws.dictionary();
    const auto model = try_model(ws, config, err);
    const SimilarityModel* model_ptr = model ? &*model : nullptr;

    const int batch_id = static_cast<int>(journal_length(ws)) + 1;
    auto docs = load_corpus(batch_dir);
    if (docs.empty()) throw StateError("no documents");
    // Batch documents are namespaced so they never collide with earlier ids.
    for (auto& d : docs) d.doc_id = "batch" + std::to_string(batch_id) + "/" + d.doc_id;
    auto built = build_index(docs, config.tokens_per_doc, key);
    for (const auto& id : built.skipped) err << "warning: " << id << " has no indexable terms; skipped\n";
    dict.merge(built.dictionary);

    auto batch = make_batch(std::move(built.index), index, built.dictionary.tokens);
    auto pending = ws.buffer();
    pending.insert(batch.new_tokens.begin(), batch.new_tokens.end());
    const auto decision = decide_recluster(pending.size(), ws.existing_count());

    InvertedIndex next_index;
    ClusterSet next_clusters;
    if (decision.recluster) {
      auto re = full_recluster(index, batch.temp, StaticOptions{config.trim, std::nullopt});
      next_index = std::move(re.index);
      next_clusters = std::move(re.clustering.clusters);
      ws.save_buffer({});
      ws.save_existing_count(next_index.token_count());
    } else {
      AbstractSet abstracts = fs::exists(ws.abstracts_path())
                                  ? load_abstracts(ws.abstracts_path())
                                  : make_abstracts(clusters, index, dict, config.alpha, model_ptr, config);
      auto up = update_clusters(abstracts, clusters, index, batch, model_ptr);
      next_index = std::move(up.index);
      next_clusters = std::move(up.clusters);
      ws.save_buffer(pending);
    }

    save_index(ws.index_path(), next_index);
    save_clusters(ws.clusters_path(), next_clusters);
    ws.save_dictionary(dict);
    save_abstracts(ws.abstracts_path(), make_abstracts(next_clusters, next_index, dict, config.alpha, model_ptr, config));

    const auto line = journal_line(batch_id, decision);
    auto journal = open_out(ws.journal_path(), std::ios::app);
    journal << line << '\n';
    out << line << '\n';
    return kExitOk;
  });
}

int cmd_search(const fs::path& root, const std::string& query, const SearchOptions& options, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const Workspace ws(root);
    require(ws.clusters_path(), "no clustering in " + root.string() + "; run cluster first");
    WorkspaceLock lock(ws, WorkspaceLock::Mode::Shared);
    const auto config = ws.config();
    const auto index = load_index(ws.index_path());
    const auto clusters = load_clusters(ws.clusters_path());
    const auto q = make_query(query, ws.key());

    std::vector<int> ids;
    const auto model = try_model(ws, config, err);
    if (model && fs::exists(ws.abstracts_path())) {
      ids = prune(q, load_abstracts(ws.abstracts_path()), *model, options.top_p.value_or(config.top_p));
    } else {
      for (const auto& c : clusters.clusters) ids.push_back(c.id);
    }
    write_results(out, search_clusters(q, ids, clusters, index, options.cutoff.value_or(config.cutoff)));
    return kExitOk;
  });
}

int cmd_eval(const fs::path& root, const EvalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Workspace ws(root);
    require(ws.clusters_path(), "no clustering in " + root.string() + "; run cluster first");
    if (options.qrels.has_value() != options.queries.has_value()) {
      throw StateError("--qrels and --queries must be given together");
    }
    WorkspaceLock lock(ws, WorkspaceLock::Mode::Shared);
    const auto config = ws.config();
    const auto model = try_model(ws, config, err);
    if (!model) throw StateError("evaluation needs a model file; set model= in the config");

    // Parse inputs before doing any work so malformed files fail fast.
    std::optional<Qrels> qrels;
    std::vector<std::pair<std::string, std::string>> queries;
    if (options.qrels) {
      auto qin = open_in(*options.qrels);
      try {
        qrels = read_qrels(qin);
        auto in = open_in(*options.queries);
        queries = read_queries(in);
      } catch (const FormatError& e) {
        throw StateError(e.what());
      }
    }
    std::optional<ExperimentPlan> plan;
    if (options.plan) {
      try {
        plan = load_plan(*options.plan);
      } catch (const FormatError& e) {
        throw StateError(e.what());
      }
    }

    const auto index = load_index(ws.index_path());
    const auto clusters = load_clusters(ws.clusters_path());
    const auto dict = ws.dictionary();

    std::ostringstream report;
    report << std::fixed << std::setprecision(6);
    report << "scheme\tk_used\tcoherency\n";
    const auto k = clusters.k_used();
    const std::vector<std::pair<std::string, ClusterSet>> schemes = {
        {"s-cluspr", clusters},
        {"kmeans", kmeans_baseline(index, k, options.kmeans_iters, config.seed)},
        {"random", random_assignment(index, k, config.seed)},
    };
    for (const auto& [name, set] : schemes) {
      report << name << '\t' << set.k_used() << '\t';
      try {
        report << cluster_coherency(set, dict.tokens, *model, name).overall << '\n';
      } catch (const NoDefinedClusters&) {
        report << "na\n";
      }
    }

    if (qrels) {
      const auto key = ws.key();
      const auto abstracts = fs::exists(ws.abstracts_path())
                                 ? load_abstracts(ws.abstracts_path())
                                 : make_abstracts(clusters, index, dict, config.alpha, &*model, config);
      report << "\nquery\ttsap10\n";
      double sum = 0.0;
      for (const auto& [qid, text] : queries) {
        const auto q = make_query(text, key);
        const auto ids = prune(q, abstracts, *model, config.top_p);
        const auto results = search_clusters(q, ids, clusters, index, 10);
        const auto rel_it = qrels->find(qid);
        std::array<bool, 10> rel{};
        std::size_t ranked = 0;
        for (const auto& hit : results.hits) {
          const auto name = dict.docs.find(hit.doc);
          rel[ranked++] = rel_it != qrels->end() && name != dict.docs.end() && rel_it->second.contains(name->second);
        }
        const double v = tsap_at_10(std::span<const bool>(rel.data(), ranked));
        sum += v;
        report << qid << '\t' << v << '\n';
      }
      report << "mean\t" << (queries.empty() ? 0.0 : sum / static_cast<double>(queries.size())) << '\n';
    }

    if (plan) {
      report << '\n';
      write_experiment_report(report, run_update_experiment(*plan, *model));
    }

    if (options.out) {
      auto file = open_out(*options.out);
      file << report.str();
    } else {
      out << report.str();
    }
    return kExitOk;
  });
}

int cmd_config(const fs::path& root, const std::vector<std::string>& assignments, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const Workspace ws(root);
    WorkspaceLock lock(ws, WorkspaceLock::Mode::Exclusive);
    auto config = ws.config();
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw StateError("expected key=value, got '" + a + "'");
      try {
        config.set(a.substr(0, eq), a.substr(eq + 1));
      } catch (const FormatError& e) {
        throw StateError(e.what());
      }
    }
    if (!assignments.empty()) ws.save_config(config);
    write_config(out, config);
    return kExitOk;
  });
}

int cmd_keygen(const fs::path& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (fs::exists(path)) throw StateError(path.string() + " already exists");
    KeyMaterial::generate().write_file(path);
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write);
    out << "wrote " << KeyMaterial::kFileBytes << "-byte key to " << path.string() << '\n';
    return kExitOk;
  });
}

}  // namespace cluspr
