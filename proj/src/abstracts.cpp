#include "cluspr/abstracts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "cluspr/errors.hpp"

namespace cluspr {

SimilarityModel::SimilarityModel(std::vector<std::string> words, Eigen::MatrixXd vectors)
    : words_(std::move(words)), unit_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(words_.size()) != unit_.rows()) {
    throw FormatError("word count does not match vector rows");
  }
  if (words_.empty()) throw EmptyModel("similarity model has no words");
  for (Eigen::Index i = 0; i < unit_.rows(); ++i) {
    const double norm = unit_.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw FormatError("vector for '" + words_[static_cast<std::size_t>(i)] + "' has zero or invalid norm");
    }
    unit_.row(i) /= norm;
    if (!rows_.emplace(words_[static_cast<std::size_t>(i)], i).second) {
      throw FormatError("duplicate word '" + words_[static_cast<std::size_t>(i)] + "'");
    }
  }
}

SimilarityModel SimilarityModel::parse(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw EmptyModel("vector file is empty");
  std::istringstream header(line);
  long long vocab = -1, dim = -1;
  header >> vocab >> dim;
  if (!header || vocab < 0 || dim <= 0) throw FormatError("bad vector header: '" + line + "'");
  if (vocab == 0) throw EmptyModel("vector file declares zero words");

  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(vocab));
  Eigen::MatrixXd vectors(vocab, dim);
  Eigen::Index row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= vocab) throw FormatError("vector file holds more words than declared");
    const char* p = line.data();
    const char* end = p + line.size();
    const char* space = std::find(p, end, ' ');
    words.emplace_back(p, space);
    p = space;
    for (Eigen::Index j = 0; j < dim; ++j) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw FormatError("word '" + words.back() + "' has fewer than " + std::to_string(dim) + " components");
      }
      vectors(row, j) = v;
      p = next;
    }
    while (p < end && (*p == ' ' || *p == '\r')) ++p;
    if (p != end) throw FormatError("word '" + words.back() + "' has more than " + std::to_string(dim) + " components");
    ++row;
  }
  if (row != vocab) {
    throw FormatError("vector file declares " + std::to_string(vocab) + " words but holds " + std::to_string(row));
  }
  return SimilarityModel(std::move(words), std::move(vectors));
}

SimilarityModel SimilarityModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StateError("cannot read vector file " + path.string());
  return parse(in);
}

std::optional<Eigen::Index> SimilarityModel::row(std::string_view word) const {
  auto it = rows_.find(std::string(word));
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

bool SimilarityModel::contains(std::string_view word) const { return row(word).has_value(); }

std::optional<double> SimilarityModel::similarity(std::string_view a, std::string_view b) const {
  const auto ra = row(a);
  const auto rb = row(b);
  if (!ra || !rb) return std::nullopt;
  return std::clamp(unit_.row(*ra).dot(unit_.row(*rb)), -1.0, 1.0);
}

std::optional<double> try_coherency(std::span<const std::string> elements, const SimilarityModel& model) {
  std::vector<const std::string*> known;
  for (const auto& e : elements) {
    if (model.contains(e)) known.push_back(&e);
  }
  if (known.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < known.size(); ++i) {
    for (std::size_t j = i + 1; j < known.size(); ++j) sum += *model.similarity(*known[i], *known[j]);
  }
  const double pairs = static_cast<double>(known.size() * (known.size() - 1) / 2);
  return sum / pairs;
}

double coherency(std::span<const std::string> elements, const SimilarityModel& model) {
  auto k = try_coherency(elements, model);
  if (!k) throw InsufficientVocabulary("fewer than two elements have vectors");
  return *k;
}

const Abstract* AbstractSet::find(int cluster_id) const {
  auto it = std::find_if(abstracts.begin(), abstracts.end(), [&](const Abstract& a) { return a.cluster_id == cluster_id; });
  return it == abstracts.end() ? nullptr : &*it;
}

void AbstractSet::recompute_theta() {
  std::optional<double> lowest;
  for (const auto& a : abstracts) {
    if (a.coherency && (!lowest || *a.coherency < *lowest)) lowest = a.coherency;
  }
  theta = lowest.value_or(kDefaultTheta);
}

AbstractSet build_abstracts(const ClusterSet& clusters, const InvertedIndex& index,
                            const std::map<SealedToken, std::string>& unseal, std::size_t alpha,
                            const SimilarityModel* model) {
  if (alpha == 0) throw DomainError("alpha must be positive");
  AbstractSet out;
  for (const auto& cluster : clusters.clusters) {
    std::vector<std::pair<std::uint64_t, const SealedToken*>> ranked;
    for (const auto& m : cluster.members) ranked.emplace_back(index.total_frequency(m), &m);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : *a.second < *b.second;
    });
    if (ranked.size() > alpha) ranked.resize(alpha);

    Abstract a;
    a.cluster_id = cluster.id;
    for (const auto& [freq, token] : ranked) {
      auto it = unseal.find(*token);
      if (it == unseal.end()) throw MissingPlaintext("no plaintext for sealed token " + *token);
      a.elements.push_back(it->second);
    }
    if (model) a.coherency = try_coherency(a.elements, *model);
    out.abstracts.push_back(std::move(a));
  }
  out.recompute_theta();
  return out;
}

void write_abstracts(std::ostream& os, const AbstractSet& set) {
  const auto flags = os.flags();
  os << std::fixed << std::setprecision(6);
  os << "CLUSPR-ABSTRACTS v1 " << set.theta << '\n';
  for (const auto& a : set.abstracts) {
    os << 'A' << a.cluster_id << '\t';
    if (a.coherency) {
      os << *a.coherency;
    } else {
      os << "na";
    }
    os << '\n';
    for (const auto& e : a.elements) os << e << '\n';
  }
  os.flags(flags);
}

AbstractSet read_abstracts(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("abstract manifest is empty");
  std::istringstream header(line);
  std::string tag, version;
  double theta = 0.0;
  header >> tag >> version >> theta;
  if (tag != "CLUSPR-ABSTRACTS" || version != "v1" || !header) {
    throw FormatError("bad abstract manifest header: '" + line + "'");
  }
  AbstractSet out;
  out.theta = theta;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab != std::string::npos && line.front() == 'A') {
      Abstract a;
      try {
        a.cluster_id = std::stoi(line.substr(1, tab - 1));
        const auto k = line.substr(tab + 1);
        if (k != "na") a.coherency = std::stod(k);
      } catch (const std::exception&) {
        throw FormatError("bad abstract line: '" + line + "'");
      }
      out.abstracts.push_back(std::move(a));
    } else {
      if (out.abstracts.empty()) throw FormatError("element line before any abstract line");
      out.abstracts.back().elements.push_back(line);
    }
  }
  return out;
}

void save_abstracts(const std::filesystem::path& path, const AbstractSet& set) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot write " + path.string());
  write_abstracts(out, set);
}

AbstractSet load_abstracts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot read " + path.string());
  return read_abstracts(in);
}

}  // namespace cluspr
