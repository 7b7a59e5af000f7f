#include "cluspr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include "cluspr/errors.hpp"
#include "stopwords_data.hpp"

namespace cluspr {

namespace {

std::string to_hex(std::span<const unsigned char> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

bool is_hex(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

std::string_view header_tag(IndexKind kind) {
  return kind == IndexKind::Central ? "CLUSPR-INDEX" : "CLUSPR-TEMP";
}

}  // namespace

// --- key material ---------------------------------------------------------

KeyMaterial::KeyMaterial(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < kMinBytes) {
    throw FormatError("seal key must be at least 16 bytes, got " + std::to_string(bytes_.size()));
  }
}

KeyMaterial KeyMaterial::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot read key file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != kFileBytes) {
    throw FormatError("key file " + path.string() + " must hold exactly 32 bytes, found " +
                      std::to_string(bytes.size()));
  }
  return KeyMaterial(std::move(bytes));
}

KeyMaterial KeyMaterial::generate() {
  std::vector<std::uint8_t> bytes(kFileBytes);
  if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1) {
    throw Error("random key generation failed");
  }
  return KeyMaterial(std::move(bytes));
}

KeyMaterial KeyMaterial::derive(std::string_view label) {
  std::vector<std::uint8_t> bytes(SHA256_DIGEST_LENGTH);
  SHA256(reinterpret_cast<const unsigned char*>(label.data()), label.size(), bytes.data());
  return KeyMaterial(std::move(bytes));
}

void KeyMaterial::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot write key file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
}

SealedToken seal(std::string_view input, const KeyMaterial& key) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const auto k = key.bytes();
  HMAC(EVP_sha256(), k.data(), static_cast<int>(k.size()),
       reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest, &len);
  return to_hex(std::span<const unsigned char>(digest, len));
}

// --- extraction -----------------------------------------------------------

const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = [] {
    std::unordered_set<std::string> out;
    std::istringstream in{std::string(detail::kStopWordsText)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      out.insert(line);
    }
    return out;
  }();
  return words;
}

std::vector<std::string> normalize_terms(std::string_view text) {
  std::vector<std::string> terms;
  const auto& stops = stop_words();
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !stops.contains(current)) terms.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      continue;
    } else {
      current.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return terms;
}

std::vector<TokenCount> extract_tokens(const Document& doc, std::size_t n) {
  if (n == 0) throw DomainError("tokens per document must be positive");
  std::map<std::string, std::uint32_t> counts;
  for (auto& term : normalize_terms(doc.body)) ++counts[term];
  if (counts.empty()) throw EmptyDocument("document '" + doc.doc_id + "' has no tokens after filtering");

  std::vector<TokenCount> ranked;
  ranked.reserve(counts.size());
  for (auto& [token, freq] : counts) ranked.push_back({token, freq});
  // counts is already lexicographic, so a stable sort keeps the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const TokenCount& a, const TokenCount& b) { return a.freq > b.freq; });
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

// --- inverted index -------------------------------------------------------

void InvertedIndex::add(const SealedToken& token, const SealedDocId& doc, std::uint32_t freq) {
  if (freq == 0) return;
  auto& postings = entries_[token];
  auto it = std::lower_bound(postings.begin(), postings.end(), doc,
                             [](const Posting& p, const SealedDocId& d) { return p.doc < d; });
  if (it != postings.end() && it->doc == doc) {
    it->freq += freq;
  } else {
    postings.insert(it, Posting{doc, freq});
  }
}

const InvertedIndex::Postings* InvertedIndex::find(const SealedToken& token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

std::uint32_t InvertedIndex::frequency(const SealedToken& token, const SealedDocId& doc) const {
  const auto* postings = find(token);
  if (!postings) return 0;
  auto it = std::lower_bound(postings->begin(), postings->end(), doc,
                             [](const Posting& p, const SealedDocId& d) { return p.doc < d; });
  return (it != postings->end() && it->doc == doc) ? it->freq : 0;
}

std::uint64_t InvertedIndex::total_frequency(const SealedToken& token) const {
  std::uint64_t total = 0;
  if (const auto* postings = find(token)) {
    for (const auto& p : *postings) total += p.freq;
  }
  return total;
}

std::set<SealedDocId> InvertedIndex::documents() const {
  std::set<SealedDocId> docs;
  for (const auto& [token, postings] : entries_) {
    for (const auto& p : postings) docs.insert(p.doc);
  }
  return docs;
}

void EdgeDictionary::merge(const EdgeDictionary& other) {
  tokens.insert(other.tokens.begin(), other.tokens.end());
  docs.insert(other.docs.begin(), other.docs.end());
}

IndexBuild build_index(std::span<const Document> docs, std::size_t n, const KeyMaterial& key) {
  if (docs.empty()) throw StateError("no documents");
  IndexBuild out;
  std::unordered_map<std::string, SealedToken> sealed_cache;
  for (const auto& doc : docs) {
    std::vector<TokenCount> tokens;
    try {
      tokens = extract_tokens(doc, n);
    } catch (const EmptyDocument&) {
      out.skipped.push_back(doc.doc_id);
      continue;
    }
    const SealedDocId sealed_doc = seal(doc.doc_id, key);
    out.dictionary.docs.emplace(sealed_doc, doc.doc_id);
    for (const auto& [token, freq] : tokens) {
      auto [it, inserted] = sealed_cache.try_emplace(token);
      if (inserted) it->second = seal(token, key);
      out.index.add(it->second, sealed_doc, freq);
      out.dictionary.tokens.emplace(it->second, token);
    }
  }
  if (out.index.empty()) throw EmptyDocument("no document yielded any token");
  out.index.set_doc_count(docs.size());
  return out;
}

InvertedIndex merge_temp(const InvertedIndex& index, const TempIndex& temp) {
  InvertedIndex merged = index;
  for (const auto& [token, postings] : temp.entries()) {
    for (const auto& p : postings) merged.add(token, p.doc, p.freq);
  }
  const auto base_docs = index.documents();
  std::size_t shared = 0;
  for (const auto& doc : temp.documents()) shared += base_docs.contains(doc) ? 1 : 0;
  const std::size_t by_count = index.doc_count() + temp.doc_count() - std::min(shared, temp.doc_count());
  merged.set_doc_count(std::max(by_count, merged.documents().size()));
  return merged;
}

// --- file formats ---------------------------------------------------------

void write_index(std::ostream& os, const InvertedIndex& index, IndexKind kind) {
  os << header_tag(kind) << " v1 " << index.doc_count() << '\n';
  for (const auto& [token, postings] : index.entries()) {
    os << token << '\t';
    for (std::size_t i = 0; i < postings.size(); ++i) {
      if (i) os << ',';
      os << postings[i].doc << ':' << postings[i].freq;
    }
    os << '\n';
  }
}

InvertedIndex read_index(std::istream& is, IndexKind kind) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("index file is empty");
  std::istringstream header(line);
  std::string tag, version;
  long long count = -1;
  header >> tag >> version >> count;
  if (tag != header_tag(kind) || version != "v1" || count < 0 || !header.eof()) {
    throw FormatError("bad index header: '" + line + "'");
  }
  InvertedIndex index;
  index.set_doc_count(static_cast<std::size_t>(count));
  std::string previous;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("line " + std::to_string(lineno) + ": missing tab");
    std::string token = line.substr(0, tab);
    if (!is_hex(token)) throw FormatError("line " + std::to_string(lineno) + ": token is not hex");
    if (!previous.empty() && token <= previous) {
      throw FormatError("line " + std::to_string(lineno) + ": tokens out of order");
    }
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    std::string last_doc;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) {
        throw FormatError("line " + std::to_string(lineno) + ": posting without ':'");
      }
      std::string doc(item.substr(0, colon));
      const std::string freq_text(item.substr(colon + 1));
      if (!is_hex(doc) || freq_text.empty() ||
          !std::all_of(freq_text.begin(), freq_text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw FormatError("line " + std::to_string(lineno) + ": malformed posting");
      }
      const unsigned long freq = std::stoul(freq_text);
      if (freq == 0 || (!last_doc.empty() && doc <= last_doc)) {
        throw FormatError("line " + std::to_string(lineno) + ": postings must be sorted with freq >= 1");
      }
      index.add(token, doc, static_cast<std::uint32_t>(freq));
      last_doc = std::move(doc);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (last_doc.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty posting list");
    previous = std::move(token);
  }
  if (index.documents().size() > index.doc_count()) {
    throw FormatError("index references more documents than its header declares");
  }
  return index;
}

void save_index(const std::filesystem::path& path, const InvertedIndex& index, IndexKind kind) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot write " + path.string());
  write_index(out, index, kind);
}

InvertedIndex load_index(const std::filesystem::path& path, IndexKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot read " + path.string());
  return read_index(in, kind);
}

void write_dictionary(std::ostream& os, const EdgeDictionary& dict) {
  for (const auto& [hex, plain] : dict.tokens) os << "T\t" << hex << '\t' << plain << '\n';
  for (const auto& [hex, name] : dict.docs) os << "D\t" << hex << '\t' << name << '\n';
}

EdgeDictionary read_dictionary(std::istream& is) {
  EdgeDictionary dict;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw FormatError("bad dictionary line: '" + line + "'");
    const auto kind = line.substr(0, a);
    auto hex = line.substr(a + 1, b - a - 1);
    auto plain = line.substr(b + 1);
    if (kind == "T") {
      dict.tokens.emplace(std::move(hex), std::move(plain));
    } else if (kind == "D") {
      dict.docs.emplace(std::move(hex), std::move(plain));
    } else {
      throw FormatError("bad dictionary entry kind '" + kind + "'");
    }
  }
  return dict;
}

std::vector<Document> load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw StateError("corpus directory not readable: " + dir.string());
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    const auto name = it->path().filename().string();
    if (!name.empty() && name.front() == '.') {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) files.push_back(it->path());
  }
  if (ec) throw StateError("cannot walk corpus directory " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw StateError("cannot read " + file.string());
    std::ostringstream body;
    body << in.rdbuf();
    docs.push_back({fs::relative(file, dir).generic_string(), body.str()});
  }
  return docs;
}

}  // namespace cluspr
