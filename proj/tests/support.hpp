#pragma once

// Fixtures and independent oracles shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cluspr/abstracts.hpp"
#include "cluspr/corpus.hpp"

namespace cluspr::test {

namespace fs = std::filesystem;

inline fs::path data_dir() { return CLUSPR_DATA_DIR; }
inline fs::path minicorpus_dir() { return data_dir() / "minicorpus"; }

// Token labels sort in table order, so matrix rows line up with the tables.
inline const std::vector<std::string> kTable1Tokens = {"1book", "2solve", "3traffic", "4net", "5enter"};
inline const std::vector<std::string> kTable1Docs = {"d1", "d2", "d3", "d4", "d5", "d6"};
inline constexpr int kTable1[5][6] = {
    {30, 0, 23, 4, 40, 0},
    {5, 0, 0, 60, 34, 0},
    {0, 23, 0, 30, 0, 0},
    {52, 49, 0, 23, 0, 26},
    {0, 45, 68, 0, 3, 5},
};

inline InvertedIndex table1_index(std::uint32_t scale = 1) {
  InvertedIndex index;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      if (kTable1[i][j]) index.add(kTable1Tokens[i], kTable1Docs[j], static_cast<std::uint32_t>(kTable1[i][j]) * scale);
    }
  }
  index.set_doc_count(6);
  return index;
}

inline std::string label(char prefix, std::size_t i) {
  std::ostringstream os;
  os << prefix << (i < 10 ? "0" : "") << i;
  return os.str();
}

/// Random sparse index with 1..max_tokens tokens over 1..max_docs documents.
/// Every token has at least one posting.
inline InvertedIndex random_index(std::mt19937_64& rng, std::size_t max_tokens, std::size_t max_docs,
                                  std::uint32_t max_freq = 9) {
  const auto m = std::uniform_int_distribution<std::size_t>(1, max_tokens)(rng);
  const auto n = std::uniform_int_distribution<std::size_t>(1, max_docs)(rng);
  const double density = std::uniform_real_distribution<double>(0.1, 0.6)(rng);
  std::bernoulli_distribution hit(density);
  std::uniform_int_distribution<std::size_t> any_doc(0, n - 1);
  std::uniform_int_distribution<std::uint32_t> freq(1, max_freq);
  InvertedIndex index;
  for (std::size_t t = 0; t < m; ++t) {
    bool placed = false;
    for (std::size_t d = 0; d < n; ++d) {
      if (hit(rng)) {
        index.add(label('t', t), label('d', d), freq(rng));
        placed = true;
      }
    }
    if (!placed) index.add(label('t', t), label('d', any_doc(rng)), freq(rng));
  }
  index.set_doc_count(n);
  return index;
}

/// Relatedness evaluated straight from its definition over dense per-document
/// frequency tables. Shares no code with the library implementation.
inline double oracle_relatedness(const std::string& c, const std::string& t, const InvertedIndex& index) {
  const auto docs = index.documents();
  std::map<std::string, double> fc, ft;
  for (const auto& d : docs) {
    fc[d] = index.frequency(c, d);
    ft[d] = index.frequency(t, d);
  }
  double co_c = 0, co_t = 0, dis_c = 0, dis_t = 0, tot_t = 0;
  for (const auto& d : docs) {
    tot_t += ft[d];
    if (fc[d] > 0 && ft[d] > 0) {
      co_c += fc[d];
      co_t += ft[d];
    } else if (fc[d] > 0 || ft[d] > 0) {
      dis_c += fc[d];
      dis_t += ft[d];
    }
  }
  double r = 0;
  for (const auto& d : docs) {
    double rho = 0;
    if (fc[d] > 0 && ft[d] > 0) {
      rho = (ft[d] / co_t) * (fc[d] / co_c);
    } else if (fc[d] > 0 || ft[d] > 0) {
      const double phi = (dis_t > 0 ? ft[d] / dis_t : 0.0) + (dis_c > 0 ? fc[d] / dis_c : 0.0);
      rho = -phi;
    }
    r += rho * ft[d] / tot_t;
  }
  return r;
}

/// Center of the maximum relatedness; near-ties go to the smallest center.
inline std::string oracle_argmax(const std::string& t, std::vector<std::string> centers, const InvertedIndex& index) {
  std::sort(centers.begin(), centers.end());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : centers) best = std::max(best, oracle_relatedness(c, t, index));
  for (const auto& c : centers) {
    if (oracle_relatedness(c, t, index) >= best - 1e-12) return c;
  }
  return centers.front();
}

/// Mean over all pairs of in-vocabulary words, by brute force.
inline std::optional<double> oracle_coherency(const std::vector<std::string>& words, const SimilarityModel& model) {
  std::vector<std::string> known;
  for (const auto& w : words) {
    if (model.contains(w)) known.push_back(w);
  }
  if (known.size() < 2) return std::nullopt;
  double sum = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < known.size(); ++i) {
    for (std::size_t j = i + 1; j < known.size(); ++j) {
      sum += *model.similarity(known[i], known[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

/// Fresh scratch directory under the shared test work area. Left in place so
/// the trust-boundary scan can inspect every workspace the suite produced.
inline fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(CLUSPR_TEST_WORK_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline SimilarityModel model_from(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::vector<std::string> words;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().second.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    words.push_back(rows[i].first);
    for (std::size_t j = 0; j < rows[i].second.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].second[j];
    }
  }
  return SimilarityModel(std::move(words), std::move(m));
}

/// The bundled mini corpus run through the static pipeline with default settings.
struct MiniPipeline {
  KeyMaterial key = KeyMaterial::derive("mini-corpus");
  IndexBuild built;
  StaticClustering run;
  SimilarityModel model;
  AbstractSet abstracts;
};

inline MiniPipeline mini_pipeline(std::size_t tokens_per_doc = 20, std::size_t alpha = 10) {
  MiniPipeline p;
  p.built = build_index(load_corpus(minicorpus_dir() / "docs"), tokens_per_doc, p.key);
  p.run = cluster_static(p.built.index);
  p.model = SimilarityModel::load(minicorpus_dir() / "vectors.txt");
  p.abstracts = build_abstracts(p.run.clusters, p.built.index, p.built.dictionary.tokens, alpha, &p.model);
  return p;
}

inline std::vector<std::pair<std::string, std::string>> mini_queries() {
  std::ifstream in(minicorpus_dir() / "queries.tsv");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab != std::string::npos) out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

}  // namespace cluspr::test
