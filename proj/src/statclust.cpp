#include "cluspr/statclust.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "cluspr/errors.hpp"

namespace cluspr {

namespace {

const InvertedIndex::Postings& postings_of(const InvertedIndex& index, const SealedToken& token) {
  const auto* p = index.find(token);
  if (!p) throw DomainError("token not in index: " + token);
  return *p;
}

// Walks two sorted posting lists; fn(doc, f_a, f_b) sees 0 for an absent side.
template <typename Fn>
void merge_walk(const InvertedIndex::Postings& a, const InvertedIndex::Postings& b, Fn&& fn) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->doc < ib->doc)) {
      fn(ia->doc, ia->freq, 0u);
      ++ia;
    } else if (ia == a.end() || ib->doc < ia->doc) {
      fn(ib->doc, 0u, ib->freq);
      ++ib;
    } else {
      fn(ia->doc, ia->freq, ib->freq);
      ++ia;
      ++ib;
    }
  }
}

struct PairSums {
  double co_a = 0, co_b = 0;    // mass over F_co
  double dis_a = 0, dis_b = 0;  // mass over F_dis
  double total_a = 0;
};

PairSums pair_sums(const InvertedIndex::Postings& a, const InvertedIndex::Postings& b) {
  PairSums s;
  merge_walk(a, b, [&](const SealedDocId&, std::uint32_t fa, std::uint32_t fb) {
    s.total_a += fa;
    if (fa && fb) {
      s.co_a += fa;
      s.co_b += fb;
    } else {
      s.dis_a += fa;
      s.dis_b += fb;
    }
  });
  return s;
}

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

}  // namespace

CenterSelection choose_centers(std::size_t k, std::span<const SealedToken> tokens, const Vector<double>& separation,
                               const InvertedIndex& index) {
  if (static_cast<Eigen::Index>(tokens.size()) != separation.size()) {
    throw ShapeMismatch("separation factors do not match the token list");
  }
  std::vector<std::size_t> order(tokens.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto da = postings_of(index, tokens[a]).size();
    const auto db = postings_of(index, tokens[b]).size();
    return da != db ? da > db : tokens[a] < tokens[b];
  });

  CenterSelection out;
  std::unordered_set<SealedDocId> covered;
  for (std::size_t i : order) {
    const auto& postings = postings_of(index, tokens[i]);
    std::size_t inside = 0;
    for (const auto& p : postings) inside += covered.contains(p.doc) ? 1 : 0;

    CenterCandidate c;
    c.token = tokens[i];
    c.doc_count = postings.size();
    c.new_docs = postings.size() - inside;
    c.separation = separation[static_cast<Eigen::Index>(i)];
    c.uniqueness = inside == 0 ? std::numeric_limits<double>::infinity()
                               : static_cast<double>(c.new_docs) / static_cast<double>(inside);
    if (c.uniqueness > 1.0) {
      for (const auto& p : postings) covered.insert(p.doc);
      const double weight = inside == 0 ? static_cast<double>(c.new_docs + 1) : c.uniqueness;
      c.centrality = weight * c.separation * (1.0 - c.separation);
      c.accepted = true;
    }
    out.audit.push_back(std::move(c));
  }

  std::vector<const CenterCandidate*> heap;
  for (const auto& c : out.audit) {
    if (c.accepted) heap.push_back(&c);
  }
  // Centralities equal up to rounding tie, so scaling every frequency cannot reorder them.
  auto grid = [](double c) { return std::llround(c / kTieTolerance); };
  std::sort(heap.begin(), heap.end(), [&](const CenterCandidate* a, const CenterCandidate* b) {
    const auto ga = grid(a->centrality), gb = grid(b->centrality);
    return ga != gb ? ga > gb : a->token < b->token;
  });
  for (std::size_t i = 0; i < heap.size() && i < k; ++i) out.centers.push_back(heap[i]->token);
  return out;
}

double cooccurrence_value(const SealedToken& t_i, const SealedToken& t_j, const SealedDocId& d,
                          const InvertedIndex& index) {
  const auto& a = postings_of(index, t_i);
  const auto& b = postings_of(index, t_j);
  const auto fa = index.frequency(t_i, d);
  const auto fb = index.frequency(t_j, d);
  if (fa == 0 || fb == 0) throw DomainError("document is not shared by both tokens");
  const auto s = pair_sums(a, b);
  return (fa / s.co_a) * (fb / s.co_b);
}

double disparity_value(const SealedToken& t_i, const SealedToken& t_j, const SealedDocId& d,
                       const InvertedIndex& index) {
  const auto& a = postings_of(index, t_i);
  const auto& b = postings_of(index, t_j);
  const auto fa = index.frequency(t_i, d);
  const auto fb = index.frequency(t_j, d);
  if ((fa == 0) == (fb == 0)) throw DomainError("document is not in the symmetric difference");
  const auto s = pair_sums(a, b);
  return ratio(fa, s.dis_a) + ratio(fb, s.dis_b);
}

double relatedness(const SealedToken& center, const SealedToken& t, const InvertedIndex& index) {
  if (center == t) throw DomainError("relatedness of a center with itself");
  const auto& ft = postings_of(index, t);
  const auto& fc = postings_of(index, center);
  const auto s = pair_sums(ft, fc);

  double r = 0.0;
  merge_walk(ft, fc, [&](const SealedDocId&, std::uint32_t f_t, std::uint32_t f_c) {
    if (f_t == 0) return;  // trailing weight f(t,d) is zero
    const double weight = f_t / s.total_a;
    if (f_c) {
      r += (f_t / s.co_a) * (f_c / s.co_b) * weight;
    } else {
      r -= ratio(f_t, s.dis_a) * weight;
    }
  });
  return r;
}

const Cluster* ClusterSet::find(int id) const {
  auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) { return c.id == id; });
  return it == clusters.end() ? nullptr : &*it;
}

Cluster* ClusterSet::find(int id) {
  return const_cast<Cluster*>(std::as_const(*this).find(id));
}

int ClusterSet::next_id() const {
  int id = 0;
  for (const auto& c : clusters) id = std::max(id, c.id);
  return id + 1;
}

std::map<SealedToken, int> ClusterSet::membership() const {
  std::map<SealedToken, int> out;
  for (const auto& c : clusters) {
    for (const auto& m : c.members) out.emplace(m, c.id);
  }
  return out;
}

std::set<SealedToken> ClusterSet::tokens() const {
  std::set<SealedToken> out;
  for (const auto& c : clusters) out.insert(c.members.begin(), c.members.end());
  return out;
}

void ClusterSet::canonicalize() {
  for (auto& c : clusters) std::sort(c.members.begin(), c.members.end());
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
}

std::optional<std::string> partition_violation(const ClusterSet& clusters, const std::set<SealedToken>& expected) {
  std::set<SealedToken> seen;
  std::set<int> ids;
  for (const auto& c : clusters.clusters) {
    if (!ids.insert(c.id).second) return "duplicate cluster id " + std::to_string(c.id);
    if (std::find(c.members.begin(), c.members.end(), c.center) == c.members.end()) {
      return "center of cluster " + std::to_string(c.id) + " is not one of its members";
    }
    for (const auto& m : c.members) {
      if (!seen.insert(m).second) return "token " + m + " appears in more than one cluster";
    }
  }
  if (seen != expected) return std::string("cluster members do not cover the token set exactly");
  return std::nullopt;
}

ClusterSet distribute(const InvertedIndex& index, std::span<const SealedToken> centers) {
  if (centers.empty()) throw DomainError("distribute needs at least one center");
  std::set<SealedToken> center_set(centers.begin(), centers.end());
  if (center_set.size() != centers.size()) throw DomainError("centers must be pairwise distinct");

  ClusterSet out;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    postings_of(index, centers[i]);
    out.clusters.push_back({static_cast<int>(i + 1), centers[i], {centers[i]}});
  }
  for (const auto& [token, postings] : index.entries()) {
    if (center_set.contains(token)) continue;
    std::size_t best = 0;
    double best_r = relatedness(centers[0], token, index);
    for (std::size_t c = 1; c < centers.size(); ++c) {
      const double r = relatedness(centers[c], token, index);
      if (r > best_r + kTieTolerance || (std::abs(r - best_r) <= kTieTolerance && centers[c] < centers[best])) {
        best = c;
        best_r = r;
      }
    }
    out.clusters[best].members.push_back(token);
  }
  out.canonicalize();
  return out;
}

StaticClustering cluster_static(const InvertedIndex& index, const StaticOptions& options) {
  StaticClustering out;
  out.estimate = estimate_clusters(index, options.trim);
  if (options.k_override && *options.k_override == 0) throw DomainError("k override must be positive");
  out.k_requested = options.k_override.value_or(out.estimate.k);
  out.selection = choose_centers(out.k_requested, out.estimate.freq.tokens,
                                 separation_factors(out.estimate.topic_similarity), index);
  out.clusters = distribute(index, out.selection.centers);
  return out;
}

void write_clusters(std::ostream& os, const ClusterSet& clusters) {
  ClusterSet sorted = clusters;
  sorted.canonicalize();
  os << "CLUSPR-CLUSTERS v1 " << sorted.k_used() << '\n';
  for (const auto& c : sorted.clusters) {
    os << 'C' << c.id << '\t' << c.center << '\n';
    for (const auto& m : c.members) os << "  " << m << '\n';
  }
}

ClusterSet read_clusters(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("cluster manifest is empty");
  std::istringstream header(line);
  std::string tag, version;
  long long k = -1;
  header >> tag >> version >> k;
  if (tag != "CLUSPR-CLUSTERS" || version != "v1" || k < 0) {
    throw FormatError("bad cluster manifest header: '" + line + "'");
  }
  ClusterSet out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("  ", 0) == 0) {
      if (out.clusters.empty()) throw FormatError("member line before any cluster line");
      out.clusters.back().members.push_back(line.substr(2));
    } else if (line.front() == 'C') {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw FormatError("bad cluster line: '" + line + "'");
      int id = 0;
      try {
        id = std::stoi(line.substr(1, tab - 1));
      } catch (const std::exception&) {
        throw FormatError("bad cluster id in '" + line + "'");
      }
      out.clusters.push_back({id, line.substr(tab + 1), {}});
    } else {
      throw FormatError("unexpected manifest line: '" + line + "'");
    }
  }
  if (static_cast<long long>(out.clusters.size()) != k) {
    throw FormatError("cluster manifest declares " + std::to_string(k) + " clusters but holds " +
                      std::to_string(out.clusters.size()));
  }
  out.canonicalize();
  std::set<int> ids;
  for (const auto& c : out.clusters) {
    if (!ids.insert(c.id).second) throw FormatError("duplicate cluster id " + std::to_string(c.id));
  }
  if (auto problem = partition_violation(out, out.tokens())) throw FormatError("cluster manifest: " + *problem);
  return out;
}

void save_clusters(const std::filesystem::path& path, const ClusterSet& clusters) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot write " + path.string());
  write_clusters(out, clusters);
}

ClusterSet load_clusters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot read " + path.string());
  return read_clusters(in);
}

}  // namespace cluspr
