#include "cluspr/kestimate.hpp"

#include <iomanip>
#include <map>
#include <ostream>

namespace cluspr {

FreqMatrix trim(const InvertedIndex& index, Trim mode) {
  if (index.empty()) throw EmptyAfterTrim("index is empty");

  std::uint64_t total_docs = 0;
  for (const auto& [token, postings] : index.entries()) total_docs += postings.size();
  const std::uint64_t token_count = index.token_count();

  FreqMatrix out;
  for (const auto& [token, postings] : index.entries()) {
    // count >= total / m, compared in integers
    if (mode == Trim::None || postings.size() * token_count >= total_docs) out.tokens.push_back(token);
  }
  if (out.tokens.empty()) throw EmptyAfterTrim("no token reaches the mean document count");

  std::map<SealedDocId, Eigen::Index> columns;
  for (const auto& token : out.tokens) {
    for (const auto& p : *index.find(token)) columns.emplace(p.doc, 0);
  }
  Eigen::Index next = 0;
  out.docs.reserve(columns.size());
  for (auto& [doc, col] : columns) {
    col = next++;
    out.docs.push_back(doc);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index row = 0; row < static_cast<Eigen::Index>(out.tokens.size()); ++row) {
    for (const auto& p : *index.find(out.tokens[static_cast<std::size_t>(row)])) {
      triplets.emplace_back(row, columns.at(p.doc), static_cast<double>(p.freq));
    }
  }
  out.values.resize(static_cast<Eigen::Index>(out.tokens.size()), static_cast<Eigen::Index>(out.docs.size()));
  out.values.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

KEstimate estimate_clusters(FreqMatrix freq) {
  KEstimate out;
  out.freq = std::move(freq);
  out.normalized = normalize(out.freq.values);
  out.row_importance = row_importance(out.normalized);
  out.doc_importance = doc_importance(out.normalized);
  out.topic_similarity = topic_similarity(out.row_importance, out.doc_importance);
  out.k = estimate_k(out.topic_similarity);
  return out;
}

KEstimate estimate_clusters(const InvertedIndex& index, Trim mode) {
  return estimate_clusters(trim(index, mode));
}

void write_matrix_tsv(std::ostream& os, const SparseRowMatrix<double>& m, std::span<const std::string> row_labels,
                      std::span<const std::string> col_labels) {
  const Eigen::MatrixXd dense(m);
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(6);
  if (!col_labels.empty()) {
    if (!row_labels.empty()) os << '\t';
    for (std::size_t j = 0; j < col_labels.size(); ++j) os << (j ? "\t" : "") << col_labels[j];
    os << '\n';
  }
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    if (!row_labels.empty()) os << row_labels[static_cast<std::size_t>(i)] << '\t';
    for (Eigen::Index j = 0; j < dense.cols(); ++j) os << (j ? "\t" : "") << dense(i, j);
    os << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace cluspr
