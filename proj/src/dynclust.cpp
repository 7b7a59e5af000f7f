#include "cluspr/dynclust.hpp"

#include <algorithm>
#include <cstdio>

#include "cluspr/errors.hpp"

namespace cluspr {

ReclusterDecision decide_recluster(std::size_t new_count, std::size_t existing_count) {
  if (existing_count == 0) throw DomainError("existing token count must be positive");
  ReclusterDecision d;
  d.new_count = new_count;
  d.existing_count = existing_count;
  const double diff = static_cast<double>(new_count) - static_cast<double>(existing_count);
  d.chi2 = diff * diff / static_cast<double>(existing_count);
  d.recluster = d.chi2 <= d.threshold;
  return d;
}

UpdateBatch make_batch(TempIndex temp, const InvertedIndex& central, std::map<SealedToken, std::string> plaintexts) {
  UpdateBatch batch;
  for (const auto& [token, postings] : temp.entries()) {
    if (!central.contains(token)) batch.new_tokens.insert(token);
  }
  batch.temp = std::move(temp);
  batch.plaintexts = std::move(plaintexts);
  return batch;
}

UpdateBatch accumulate(const UpdateBatch& batch, const UpdateBatch& buffer) {
  UpdateBatch out;
  out.temp = merge_temp(buffer.temp, batch.temp);
  out.new_tokens = buffer.new_tokens;
  out.new_tokens.insert(batch.new_tokens.begin(), batch.new_tokens.end());
  out.plaintexts = buffer.plaintexts;
  out.plaintexts.insert(batch.plaintexts.begin(), batch.plaintexts.end());
  return out;
}

AssignmentMap assign_tokens(AbstractSet& abstracts, std::span<const std::string> tokens,
                            const SimilarityModel* model, int first_new_id) {
  int next_id = first_new_id;
  if (next_id <= 0) {
    next_id = 1;
    for (const auto& a : abstracts.abstracts) next_id = std::max(next_id, a.cluster_id + 1);
  }
  const double theta = abstracts.theta;

  AssignmentMap out;
  out.reserve(tokens.size());
  for (const auto& token : tokens) {
    Assignment as;
    as.token = token;
    const Abstract* best = nullptr;
    double best_sim = 0.0;
    if (model && model->contains(token)) {
      for (const auto& a : abstracts.abstracts) {
        for (const auto& e : a.elements) {
          const auto s = model->similarity(token, e);
          if (!s) continue;
          if (!as.best_similarity || *s > *as.best_similarity) as.best_similarity = s;
          if (*s > theta && (!best || *s > best_sim)) {
            best = &a;
            best_sim = *s;
          }
        }
      }
    }
    if (best) {
      as.cluster_id = best->cluster_id;
    } else {
      as.cluster_id = next_id++;
      as.created = true;
      abstracts.abstracts.push_back({as.cluster_id, {token}, std::nullopt});
    }
    out.push_back(std::move(as));
  }
  return out;
}

std::vector<SealedToken> batch_order(const UpdateBatch& batch, const std::set<SealedToken>& subset) {
  std::vector<std::pair<std::uint64_t, SealedToken>> ranked;
  for (const auto& t : subset) ranked.emplace_back(batch.temp.total_frequency(t), t);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<SealedToken> out;
  out.reserve(ranked.size());
  for (auto& [freq, t] : ranked) out.push_back(std::move(t));
  return out;
}

UpdateResult update_clusters(AbstractSet& abstracts, const ClusterSet& clusters, const InvertedIndex& central,
                             const UpdateBatch& batch, const SimilarityModel* model) {
  const auto order = batch_order(batch, batch.new_tokens);
  std::vector<std::string> plain;
  std::map<std::string, SealedToken> reseal;
  plain.reserve(order.size());
  for (const auto& sealed : order) {
    auto it = batch.plaintexts.find(sealed);
    if (it == batch.plaintexts.end()) throw MissingPlaintext("no plaintext for new token " + sealed);
    plain.push_back(it->second);
    reseal.emplace(it->second, sealed);
  }

  int first_new = clusters.next_id();
  for (const auto& a : abstracts.abstracts) first_new = std::max(first_new, a.cluster_id + 1);

  UpdateResult out;
  out.assignments = assign_tokens(abstracts, plain, model, first_new);
  out.clusters = clusters;
  for (const auto& as : out.assignments) {
    const auto& sealed = reseal.at(as.token);
    if (as.created) {
      out.clusters.clusters.push_back({as.cluster_id, sealed, {sealed}});
    } else {
      auto* c = out.clusters.find(as.cluster_id);
      if (!c) throw StateError("abstract " + std::to_string(as.cluster_id) + " has no cluster");
      c->members.push_back(sealed);
    }
  }
  out.clusters.canonicalize();
  out.index = merge_temp(central, batch.temp);
  return out;
}

ReclusterResult full_recluster(const InvertedIndex& index, const TempIndex& temp, const StaticOptions& options) {
  ReclusterResult out;
  out.index = merge_temp(index, temp);
  out.clustering = cluster_static(out.index, options);
  return out;
}

StreamClustering fd_bootstrap(std::span<const TokenCount> first_doc_tokens, const SimilarityModel* model,
                              double theta) {
  if (first_doc_tokens.empty()) throw DomainError("the first document has no tokens");
  std::vector<TokenCount> ranked(first_doc_tokens.begin(), first_doc_tokens.end());
  std::sort(ranked.begin(), ranked.end(), [](const TokenCount& a, const TokenCount& b) {
    return a.freq != b.freq ? a.freq > b.freq : a.token < b.token;
  });

  StreamClustering out;
  const auto& seed = ranked.front().token;
  out.clusters.clusters.push_back({1, seed, {seed}});
  out.abstracts.abstracts.push_back({1, {seed}, std::nullopt});
  out.abstracts.theta = theta;
  out.assignments.push_back({seed, 1, true, std::nullopt});

  std::vector<std::string> rest;
  for (std::size_t i = 1; i < ranked.size(); ++i) rest.push_back(ranked[i].token);
  for (auto& as : assign_tokens(out.abstracts, rest, model)) {
    if (as.created) {
      out.clusters.clusters.push_back({as.cluster_id, as.token, {as.token}});
    } else {
      out.clusters.find(as.cluster_id)->members.push_back(as.token);
    }
    out.assignments.push_back(std::move(as));
  }
  out.clusters.canonicalize();
  return out;
}

std::string journal_line(int batch_id, const ReclusterDecision& decision) {
  char chi2[64];
  std::snprintf(chi2, sizeof chi2, "%.6f", decision.chi2);
  return "BATCH " + std::to_string(batch_id) + " new=" + std::to_string(decision.new_count) +
         " existing=" + std::to_string(decision.existing_count) + " chi2=" + chi2 +
         " decision=" + (decision.recluster ? "recluster" : "update");
}

}  // namespace cluspr
