#pragma once

// Cluster-count estimation over a sealed inverted index.
//
//   A  token x doc frequencies (trimmed)
//   N  A with every column divided by its maximum
//   R  N with every row scaled to sum 1          (token -> doc importance)
//   S  N with every column scaled to sum 1, transposed (doc -> token importance)
//   Q  R * S, token x token, row-stochastic
//   k  ceil(trace(Q))
//
// The matrix steps are free functions templated on the scalar type so they
// compose over any Eigen sparse row-major matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cluspr/corpus.hpp"
#include "cluspr/errors.hpp"

namespace cluspr {

template <typename Scalar>
using SparseRowMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Scalar>
Vector<Scalar> safe_inverse(const Vector<Scalar>& v) {
  return v.unaryExpr([](Scalar x) { return x > Scalar(0) ? Scalar(1) / x : Scalar(0); });
}

template <typename Scalar>
Vector<Scalar> column_max(const SparseRowMatrix<Scalar>& m) {
  Vector<Scalar> out = Vector<Scalar>::Zero(m.cols());
  for (Eigen::Index row = 0; row < m.outerSize(); ++row) {
    for (typename SparseRowMatrix<Scalar>::InnerIterator it(m, row); it; ++it) {
      out[it.col()] = std::max(out[it.col()], it.value());
    }
  }
  return out;
}

}  // namespace detail

/// n[i][j] = a[i][j] / max_i a[i][j]; all-zero columns stay zero.
template <typename Scalar>
SparseRowMatrix<Scalar> normalize(const SparseRowMatrix<Scalar>& a) {
  const Vector<Scalar> inv = detail::safe_inverse<Scalar>(detail::column_max(a));
  return SparseRowMatrix<Scalar>(a * inv.asDiagonal());
}

/// r[i][j] = n[i][j] / sum_k n[i][k]. Throws ZeroRow on an all-zero row.
template <typename Scalar>
SparseRowMatrix<Scalar> row_importance(const SparseRowMatrix<Scalar>& n) {
  const Vector<Scalar> sums = n * Vector<Scalar>::Ones(n.cols());
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (!(sums[i] > Scalar(0))) throw ZeroRow("row " + std::to_string(i) + " has no positive entry");
  }
  return SparseRowMatrix<Scalar>(sums.cwiseInverse().asDiagonal() * n);
}

/// s[j][i] = n[i][j] / sum_q n[q][j]; result is docs x tokens.
/// A document without any entry yields an all-zero row.
template <typename Scalar>
SparseRowMatrix<Scalar> doc_importance(const SparseRowMatrix<Scalar>& n) {
  const Vector<Scalar> sums = (Vector<Scalar>::Ones(n.rows()).transpose() * n).transpose();
  const Vector<Scalar> inv = detail::safe_inverse<Scalar>(sums);
  return SparseRowMatrix<Scalar>((n * inv.asDiagonal()).transpose());
}

/// q = r * s (tokens x tokens).
template <typename Scalar>
SparseRowMatrix<Scalar> topic_similarity(const SparseRowMatrix<Scalar>& r, const SparseRowMatrix<Scalar>& s) {
  if (r.cols() != s.rows() || r.rows() != s.cols()) {
    throw ShapeMismatch("R is " + std::to_string(r.rows()) + "x" + std::to_string(r.cols()) + " but S is " +
                        std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  }
  SparseRowMatrix<Scalar> q = r * s;
  // Both factors are row-stochastic, so anything past 1 is rounding.
  for (Eigen::Index i = 0; i < q.outerSize(); ++i) {
    for (typename SparseRowMatrix<Scalar>::InnerIterator it(q, i); it; ++it) it.valueRef() = std::min(it.value(), Scalar(1));
  }
  return q;
}

/// Diagonal of a square matrix (the per-token separation factors of Q).
template <typename Scalar>
Vector<Scalar> separation_factors(const SparseRowMatrix<Scalar>& q) {
  return Vector<Scalar>(q.diagonal());
}

/// Rounding slack subtracted from the trace before taking the ceiling.
inline constexpr double kTraceSlack = 1e-9;

template <typename Derived>
std::size_t estimate_k_from_diagonal(const Eigen::MatrixBase<Derived>& diagonal, std::size_t m) {
  const double trace = static_cast<double>(diagonal.sum());
  const double k = std::ceil(trace - kTraceSlack);
  if (k < 1.0) return 1;
  return std::min(m, static_cast<std::size_t>(k));
}

/// k = ceil(sum_i q[i][i]) clamped to [1, m].
template <typename Scalar>
std::size_t estimate_k(const SparseRowMatrix<Scalar>& q) {
  if (q.rows() != q.cols()) throw ShapeMismatch("Q must be square");
  const auto m = static_cast<std::size_t>(q.rows());
  if (m == 0) throw EmptyAfterTrim("Q is empty");
  return estimate_k_from_diagonal(separation_factors(q), m);
}

/// Token-document frequency matrix with lexicographic row/column labels.
struct FreqMatrix {
  std::vector<SealedToken> tokens;
  std::vector<SealedDocId> docs;
  SparseRowMatrix<double> values;
};

enum class Trim { MeanDocCount, None };

/// Keeps tokens whose distinct-document count is >= the mean over all tokens
/// (or every token with Trim::None). Columns are the documents touched by a
/// kept token.
FreqMatrix trim(const InvertedIndex& index, Trim mode = Trim::MeanDocCount);

/// Every matrix of the estimation chain, kept for auditing and debug dumps.
struct KEstimate {
  FreqMatrix freq;
  SparseRowMatrix<double> normalized;
  SparseRowMatrix<double> row_importance;
  SparseRowMatrix<double> doc_importance;
  SparseRowMatrix<double> topic_similarity;
  std::size_t k = 0;
};

KEstimate estimate_clusters(FreqMatrix freq);
KEstimate estimate_clusters(const InvertedIndex& index, Trim mode = Trim::MeanDocCount);

/// Dense TSV dump with 6-decimal fixed formatting. Labels may be empty.
void write_matrix_tsv(std::ostream& os, const SparseRowMatrix<double>& m, std::span<const std::string> row_labels,
                      std::span<const std::string> col_labels);

}  // namespace cluspr
