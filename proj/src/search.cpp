#include "cluspr/search.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "cluspr/errors.hpp"

namespace cluspr {

namespace {

ResultSet rank(const std::unordered_map<SealedDocId, double>& scores, std::size_t cutoff) {
  ResultSet out;
  out.hits.reserve(scores.size());
  for (const auto& [doc, score] : scores) out.hits.push_back({doc, score});
  std::sort(out.hits.begin(), out.hits.end(),
            [](const Hit& a, const Hit& b) { return a.score != b.score ? a.score > b.score : a.doc < b.doc; });
  if (out.hits.size() > cutoff) out.hits.resize(cutoff);
  return out;
}

void accumulate_postings(const InvertedIndex& index, const SealedToken& token,
                         std::unordered_map<SealedDocId, double>& scores) {
  if (const auto* postings = index.find(token)) {
    for (const auto& p : *postings) scores[p.doc] += p.freq;
  }
}

}  // namespace

Query make_query(std::string_view raw, const KeyMaterial& key) {
  Query q;
  q.raw = std::string(raw);
  for (auto& term : normalize_terms(raw)) {
    if (std::find(q.terms.begin(), q.terms.end(), term) == q.terms.end()) q.terms.push_back(std::move(term));
  }
  if (q.terms.empty()) throw DomainError("query has no searchable terms");
  for (const auto& t : q.terms) q.trapdoor.push_back(seal(t, key));
  return q;
}

double abstract_score(std::span<const std::string> terms, const Abstract& abstract, const SimilarityModel& model) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& term : terms) {
    if (!model.contains(term)) continue;
    ++counted;
    std::optional<double> best;
    for (const auto& e : abstract.elements) {
      const auto s = model.similarity(term, e);
      if (s && (!best || *s > *best)) best = s;
    }
    sum += best.value_or(0.0);
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

std::vector<int> prune(const Query& query, const AbstractSet& abstracts, const SimilarityModel& model,
                       std::size_t top_p) {
  std::vector<std::pair<double, int>> scored;
  bool any_signal = false;
  for (const auto& a : abstracts.abstracts) {
    const double s = abstract_score(query.terms, a, model);
    any_signal = any_signal || s != 0.0;
    scored.emplace_back(s, a.cluster_id);
  }
  std::vector<int> ids;
  if (!any_signal) {
    for (const auto& [s, id] : scored) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  for (std::size_t i = 0; i < scored.size() && i < top_p; ++i) ids.push_back(scored[i].second);
  return ids;
}

ResultSet search_clusters(const Query& query, std::span<const int> cluster_ids, const ClusterSet& clusters,
                          const InvertedIndex& index, std::size_t cutoff) {
  std::set<SealedToken> searchable;
  for (int id : cluster_ids) {
    const auto* c = clusters.find(id);
    if (!c) throw DomainError("unknown cluster id " + std::to_string(id));
    searchable.insert(c->members.begin(), c->members.end());
  }
  std::unordered_map<SealedDocId, double> scores;
  for (const auto& token : query.trapdoor) {
    if (searchable.contains(token)) accumulate_postings(index, token, scores);
  }
  auto out = rank(scores, cutoff);
  out.searched_cluster_ids.assign(cluster_ids.begin(), cluster_ids.end());
  return out;
}

ResultSet search_index(const Query& query, const InvertedIndex& index, std::size_t cutoff) {
  std::unordered_map<SealedDocId, double> scores;
  for (const auto& token : query.trapdoor) accumulate_postings(index, token, scores);
  return rank(scores, cutoff);
}

void write_results(std::ostream& os, const ResultSet& results) {
  for (std::size_t i = 0; i < results.hits.size(); ++i) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, results.hits[i].score);
    os << (i + 1) << '\t' << results.hits[i].doc << '\t' << std::string_view(buf, end - buf) << '\n';
  }
  os << "searched-clusters:";
  for (std::size_t i = 0; i < results.searched_cluster_ids.size(); ++i) {
    os << (i ? "," : " ") << results.searched_cluster_ids[i];
  }
  os << '\n';
}

double tsap(std::span<const bool> relevance, std::size_t cutoff) {
  if (cutoff == 0) throw DomainError("cutoff must be positive");
  std::size_t relevant = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < cutoff && i < relevance.size(); ++i) {
    if (relevance[i]) {
      ++relevant;
      sum += static_cast<double>(relevant) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(cutoff);
}

Qrels read_qrels(std::istream& is) {
  Qrels out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw FormatError("qrels line " + std::to_string(lineno) + ": expected 3 fields");
    const auto flag = line.substr(b + 1);
    if (flag != "0" && flag != "1") {
      throw FormatError("qrels line " + std::to_string(lineno) + ": relevance must be 0 or 1");
    }
    auto& docs = out[line.substr(0, a)];
    if (flag == "1") docs.insert(line.substr(a + 1, b - a - 1));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_queries(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("queries line " + std::to_string(lineno) + ": missing tab");
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

}  // namespace cluspr
