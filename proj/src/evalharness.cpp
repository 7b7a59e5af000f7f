#include "cluspr/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "cluspr/dynclust.hpp"
#include "cluspr/errors.hpp"

namespace cluspr {

CoherencyReport cluster_coherency(const ClusterSet& clusters, const std::map<SealedToken, std::string>& unseal,
                                  const SimilarityModel& model, std::string scheme) {
  CoherencyReport report;
  report.scheme = std::move(scheme);
  report.k_used = clusters.k_used();
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& c : clusters.clusters) {
    std::vector<std::string> words;
    words.reserve(c.members.size());
    for (const auto& m : c.members) {
      auto it = unseal.find(m);
      if (it == unseal.end()) throw MissingPlaintext("no plaintext for sealed token " + m);
      words.push_back(it->second);
    }
    const auto k = try_coherency(words, model);
    report.per_cluster.emplace(c.id, k);
    if (k) {
      sum += *k;
      ++defined;
    }
  }
  if (defined == 0) throw NoDefinedClusters("no cluster has two in-vocabulary members");
  report.overall = sum / static_cast<double>(defined);
  return report;
}

ClusterSet kmeans_baseline(const InvertedIndex& index, std::size_t k, std::size_t iters, std::uint64_t seed) {
  const auto freq = trim(index, Trim::None);
  const Eigen::MatrixXd points(normalize(freq.values));
  const auto m = static_cast<std::size_t>(points.rows());
  if (k == 0 || k > m) throw DomainError("k must be in [1, token count]");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t c = 0; c < k; ++c) centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(order[c]));

  std::vector<std::size_t> assign(m, std::numeric_limits<std::size_t>::max());
  for (std::size_t round = 0; round < std::max<std::size_t>(iters, 1); ++round) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - points.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      if (assign[i] != static_cast<std::size_t>(best)) {
        assign[i] = static_cast<std::size_t>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), centroids.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      sums.row(static_cast<Eigen::Index>(assign[i])) += points.row(static_cast<Eigen::Index>(i));
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c]) centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
    }
  }

  ClusterSet out;
  for (std::size_t c = 0; c < k; ++c) {
    Cluster cluster;
    cluster.id = static_cast<int>(c + 1);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (assign[i] != c) continue;
      const auto& token = freq.tokens[i];
      cluster.members.push_back(token);
      const double d = (points.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
      if (d < nearest || (d == nearest && token < cluster.center)) {
        nearest = d;
        cluster.center = token;
      }
    }
    if (!cluster.members.empty()) out.clusters.push_back(std::move(cluster));
  }
  out.canonicalize();
  return out;
}

ClusterSet random_assignment(const InvertedIndex& index, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw DomainError("k must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<Cluster> buckets(k);
  for (const auto& [token, postings] : index.entries()) buckets[pick(rng)].members.push_back(token);
  ClusterSet out;
  for (std::size_t c = 0; c < k; ++c) {
    if (buckets[c].members.empty()) continue;
    buckets[c].id = static_cast<int>(c + 1);
    buckets[c].center = buckets[c].members.front();
    out.clusters.push_back(std::move(buckets[c]));
  }
  out.canonicalize();
  return out;
}

// --- experiment -----------------------------------------------------------

ExperimentPlan read_plan(std::istream& is, const std::filesystem::path& relative_to) {
  ExperimentPlan plan;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError("plan line " + std::to_string(lineno) + ": " + why);
  };
  auto number = [&](const std::string& text) -> std::uint64_t {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(text, &used);
    } catch (const std::exception&) {
      fail("expected a number, got '" + text + "'");
    }
    if (used != text.size()) fail("expected a number, got '" + text + "'");
    return v;
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : relative_to / path;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value");
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "base") {
      plan.base.push_back(resolve(value));
    } else if (key == "pool") {
      plan.pool.push_back(resolve(value));
    } else if (key == "batch") {
      const auto space = value.find(' ');
      if (space == std::string::npos) fail("batch needs '<name> <size>'");
      plan.batches.emplace_back(value.substr(0, space), number(value.substr(space + 1)));
    } else if (key == "repetitions") {
      plan.repetitions = number(value);
    } else if (key == "seed") {
      plan.seed = number(value);
    } else if (key == "tokens_per_doc") {
      plan.tokens_per_doc = number(value);
    } else if (key == "alpha") {
      plan.alpha = number(value);
    } else if (key == "trim") {
      if (value == "mean") {
        plan.trim = Trim::MeanDocCount;
      } else if (value == "none") {
        plan.trim = Trim::None;
      } else {
        fail("trim must be 'mean' or 'none'");
      }
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (plan.base.empty()) throw FormatError("plan has no base corpus");
  if (plan.repetitions == 0) throw FormatError("plan repetitions must be at least 1");
  if (plan.tokens_per_doc == 0 || plan.alpha == 0) throw FormatError("tokens_per_doc and alpha must be positive");
  if (!plan.batches.empty() && plan.pool.empty()) throw FormatError("plan has batches but no pool");
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StateError("cannot read plan " + path.string());
  return read_plan(in, path.parent_path());
}

namespace {

std::vector<Document> load_dirs(const std::vector<std::filesystem::path>& dirs) {
  std::vector<Document> docs;
  for (const auto& dir : dirs) {
    const auto prefix = dir.filename().string();
    for (auto& d : load_corpus(dir)) {
      d.doc_id = prefix + "/" + d.doc_id;
      docs.push_back(std::move(d));
    }
  }
  return docs;
}

// One arm of the experiment: the evolving cloud and edge state.
struct Arm {
  InvertedIndex index;
  ClusterSet clusters;
  AbstractSet abstracts;
  UpdateBatch buffer;
  std::size_t existing = 0;
};

struct Stats {
  std::vector<double> coherency;
  std::vector<double> k_used;
  std::size_t reclusters = 0;
};

double safe_coherency(const ClusterSet& clusters, const EdgeDictionary& dict, const SimilarityModel& model) {
  try {
    return cluster_coherency(clusters, dict.tokens, model).overall;
  } catch (const NoDefinedClusters&) {
    return 0.0;
  }
}

ExperimentRow summarize(std::string scheme, std::string batch, const Stats& stats, std::string decision) {
  ExperimentRow row;
  row.scheme = std::move(scheme);
  row.batch = std::move(batch);
  row.repetitions = stats.coherency.size();
  const double n = static_cast<double>(row.repetitions);
  row.coherency_mean = std::accumulate(stats.coherency.begin(), stats.coherency.end(), 0.0) / n;
  row.k_used = std::accumulate(stats.k_used.begin(), stats.k_used.end(), 0.0) / n;
  double var = 0.0;
  for (double v : stats.coherency) var += (v - row.coherency_mean) * (v - row.coherency_mean);
  const double stderr_ = row.repetitions > 1 ? std::sqrt(var / (n - 1.0)) / std::sqrt(n) : 0.0;
  row.ci_low = row.coherency_mean - 1.96 * stderr_;
  row.ci_high = row.coherency_mean + 1.96 * stderr_;
  row.recluster_count = stats.reclusters;
  row.decision = std::move(decision);
  return row;
}

}  // namespace

std::vector<ExperimentRow> run_update_experiment(const ExperimentPlan& plan, const SimilarityModel& model) {
  const auto base_docs = load_dirs(plan.base);
  const auto pool_docs = load_dirs(plan.pool);
  std::size_t needed = 0;
  for (const auto& [name, size] : plan.batches) needed += size;
  if (needed > pool_docs.size()) {
    throw StateError("plan batches need " + std::to_string(needed) + " documents but the pool holds " +
                     std::to_string(pool_docs.size()));
  }

  const auto key = KeyMaterial::derive("cluspr-experiment");
  const StaticOptions options{plan.trim, std::nullopt};
  const auto base = build_index(base_docs, plan.tokens_per_doc, key);
  const auto base_clustering = cluster_static(base.index, options);

  Stats base_stats;
  std::vector<Stats> gated(plan.batches.size()), baseline(plan.batches.size());

  for (std::size_t rep = 0; rep < plan.repetitions; ++rep) {
    std::mt19937_64 rng(plan.seed + rep);
    std::vector<std::size_t> order(pool_docs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    EdgeDictionary dict = base.dictionary;
    Arm start;
    start.index = base.index;
    start.clusters = base_clustering.clusters;
    start.abstracts = build_abstracts(start.clusters, start.index, dict.tokens, plan.alpha, &model);
    start.existing = start.index.token_count();
    Arm g = start, b = start;

    base_stats.coherency.push_back(safe_coherency(start.clusters, dict, model));
    base_stats.k_used.push_back(static_cast<double>(start.clusters.k_used()));

    std::size_t cursor = 0;
    for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
      std::vector<Document> docs;
      for (std::size_t i = 0; i < plan.batches[bi].second; ++i) docs.push_back(pool_docs[order[cursor++]]);
      auto built = build_index(docs, plan.tokens_per_doc, key);
      dict.merge(built.dictionary);

      // gated arm
      {
        auto batch = make_batch(built.index, g.index, built.dictionary.tokens);
        g.buffer = accumulate(batch, g.buffer);
        const auto decision = decide_recluster(g.buffer.new_tokens.size(), g.existing);
        if (decision.recluster) {
          auto re = full_recluster(g.index, batch.temp, options);
          g.index = std::move(re.index);
          g.clusters = std::move(re.clustering.clusters);
          g.buffer = UpdateBatch{};
          g.existing = g.index.token_count();
          ++gated[bi].reclusters;
        } else {
          auto up = update_clusters(g.abstracts, g.clusters, g.index, batch, &model);
          g.index = std::move(up.index);
          g.clusters = std::move(up.clusters);
        }
        g.abstracts = build_abstracts(g.clusters, g.index, dict.tokens, plan.alpha, &model);
        gated[bi].coherency.push_back(safe_coherency(g.clusters, dict, model));
        gated[bi].k_used.push_back(static_cast<double>(g.clusters.k_used()));
      }
      // baseline arm
      {
        auto batch = make_batch(built.index, b.index, built.dictionary.tokens);
        auto up = update_clusters(b.abstracts, b.clusters, b.index, batch, &model);
        b.index = std::move(up.index);
        b.clusters = std::move(up.clusters);
        b.abstracts = build_abstracts(b.clusters, b.index, dict.tokens, plan.alpha, &model);
        baseline[bi].coherency.push_back(safe_coherency(b.clusters, dict, model));
        baseline[bi].k_used.push_back(static_cast<double>(b.clusters.k_used()));
      }
    }
  }

  std::vector<ExperimentRow> rows;
  rows.push_back(summarize(kGatedScheme, "base", base_stats, "-"));
  for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
    const auto r = gated[bi].reclusters;
    const std::string decision = r == plan.repetitions ? "recluster"
                                 : r == 0              ? "update"
                                                       : "mixed";
    rows.push_back(summarize(kGatedScheme, plan.batches[bi].first, gated[bi], decision));
  }
  rows.push_back(summarize(kBaselineScheme, "base", base_stats, "-"));
  for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
    rows.push_back(summarize(kBaselineScheme, plan.batches[bi].first, baseline[bi], "update"));
  }
  return rows;
}

void write_experiment_report(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "scheme\tbatch\tcoherency_mean\tci_low\tci_high\tk_used\tdecision\n";
  for (const auto& r : rows) {
    os << std::fixed << std::setprecision(6) << r.scheme << '\t' << r.batch << '\t' << r.coherency_mean << '\t'
       << r.ci_low << '\t' << r.ci_high << '\t' << std::setprecision(2) << r.k_used << '\t' << r.decision << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace cluspr
