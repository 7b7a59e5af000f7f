#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cluspr {

/// Lowercase hex produced by `seal`. Used for both tokens and document ids.
using SealedToken = std::string;
using SealedDocId = std::string;

struct Document {
  std::string doc_id;
  std::string body;
};

struct TokenCount {
  std::string token;
  std::uint32_t freq = 0;

  friend bool operator==(const TokenCount&, const TokenCount&) = default;
};

struct Posting {
  SealedDocId doc;
  std::uint32_t freq = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Secret sealing key. Lives on the edge side only.
class KeyMaterial {
 public:
  static constexpr std::size_t kMinBytes = 16;
  static constexpr std::size_t kFileBytes = 32;

  explicit KeyMaterial(std::vector<std::uint8_t> bytes);

  /// Reads a raw key file of exactly `kFileBytes` bytes.
  static KeyMaterial from_file(const std::filesystem::path& path);
  static KeyMaterial generate();
  /// Deterministic key for tests and offline experiments.
  static KeyMaterial derive(std::string_view label);

  void write_file(const std::filesystem::path& path) const;
  std::span<const std::uint8_t> bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// HMAC-SHA256 of `input` under `key`, as 64 lowercase hex characters.
SealedToken seal(std::string_view input, const KeyMaterial& key);

const std::unordered_set<std::string>& stop_words();

/// Whitespace-separated words, lowercased with ASCII punctuation deleted. Stop words are dropped.
/// Order and duplicates are preserved.
std::vector<std::string> normalize_terms(std::string_view text);

/// Top-`n` tokens of a document by in-document frequency (ties lexicographic).
std::vector<TokenCount> extract_tokens(const Document& doc, std::size_t n);

/// Sealed token -> postings sorted by sealed doc id.
class InvertedIndex {
 public:
  using Postings = std::vector<Posting>;

  /// Adds `freq` occurrences; frequencies of an existing (token, doc) are summed.
  void add(const SealedToken& token, const SealedDocId& doc, std::uint32_t freq);

  const std::map<SealedToken, Postings>& entries() const { return entries_; }
  const Postings* find(const SealedToken& token) const;
  bool contains(const SealedToken& token) const { return entries_.contains(token); }
  std::uint32_t frequency(const SealedToken& token, const SealedDocId& doc) const;
  std::uint64_t total_frequency(const SealedToken& token) const;

  std::size_t token_count() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::set<SealedDocId> documents() const;

  std::size_t doc_count() const { return doc_count_; }
  void set_doc_count(std::size_t n) { doc_count_ = n; }

  friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

 private:
  std::map<SealedToken, Postings> entries_;
  std::size_t doc_count_ = 0;
};

/// A temporary index has the same shape; only its file header differs.
using TempIndex = InvertedIndex;

enum class IndexKind { Central, Temp };

/// Edge-side plaintext dictionary built during extraction.
struct EdgeDictionary {
  std::map<SealedToken, std::string> tokens;
  std::map<SealedDocId, std::string> docs;

  void merge(const EdgeDictionary& other);
};

struct IndexBuild {
  InvertedIndex index;
  EdgeDictionary dictionary;
  /// Ids of documents that produced no tokens.
  std::vector<std::string> skipped;
};

IndexBuild build_index(std::span<const Document> docs, std::size_t n, const KeyMaterial& key);

/// Union of postings; frequencies of shared (token, doc) pairs are summed.
InvertedIndex merge_temp(const InvertedIndex& index, const TempIndex& temp);

void write_index(std::ostream& os, const InvertedIndex& index, IndexKind kind = IndexKind::Central);
InvertedIndex read_index(std::istream& is, IndexKind kind = IndexKind::Central);
void save_index(const std::filesystem::path& path, const InvertedIndex& index,
                IndexKind kind = IndexKind::Central);
InvertedIndex load_index(const std::filesystem::path& path, IndexKind kind = IndexKind::Central);

void write_dictionary(std::ostream& os, const EdgeDictionary& dict);
EdgeDictionary read_dictionary(std::istream& is);

/// Reads every regular, non-hidden file below `dir` (recursively) in path order.
/// Document ids are paths relative to `dir` with '/' separators.
std::vector<Document> load_corpus(const std::filesystem::path& dir);

}  // namespace cluspr
