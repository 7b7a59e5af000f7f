#include <doctest.h>

#include <regex>

#include "cluspr/errors.hpp"
#include "cluspr/kestimate.hpp"
#include "support.hpp"

using namespace cluspr;
namespace fs = std::filesystem;

namespace {

const KeyMaterial kKey = KeyMaterial::derive("corpus-tests");

std::string serialize(const InvertedIndex& index, IndexKind kind = IndexKind::Central) {
  std::ostringstream os;
  write_index(os, index, kind);
  return os.str();
}

InvertedIndex parse(const std::string& text, IndexKind kind = IndexKind::Central) {
  std::istringstream is(text);
  return read_index(is, kind);
}

const std::string kHexA(64, 'a');
const std::string kHexB(64, 'b');
const std::string kHexC(64, 'c');

}  // namespace

TEST_CASE("extract_tokens keeps the most frequent terms") {
  CHECK(extract_tokens({"x", "a a b"}, 1) == std::vector<TokenCount>{{"a", 2}});
  CHECK(extract_tokens({"x", "the the the cat"}, 5) == std::vector<TokenCount>{{"cat", 1}});
  CHECK(extract_tokens({"x", "net net traffic net traffic solve"}, 2) ==
        std::vector<TokenCount>{{"net", 3}, {"traffic", 2}});
}

TEST_CASE("extract_tokens breaks frequency ties lexicographically") {
  CHECK(extract_tokens({"x", "zeta alpha mid"}, 2) == std::vector<TokenCount>{{"alpha", 1}, {"mid", 1}});
}

TEST_CASE("normalization lowercases, strips punctuation and drops stop words") {
  CHECK(normalize_terms("The Router, the PACKET!  and (latency).") ==
        std::vector<std::string>{"router", "packet", "latency"});
  CHECK_THROWS_AS(extract_tokens({"x", "the of and"}, 3), EmptyDocument);
  CHECK_THROWS_AS(extract_tokens({"x", "cat"}, 0), DomainError);
}

TEST_CASE("seal is deterministic, key-dependent and hex encoded") {
  const auto k2 = KeyMaterial::derive("other");
  CHECK(seal("book", kKey) == seal("book", kKey));
  CHECK(seal("book", kKey) != seal("book", k2));
  CHECK(seal("book", kKey) != seal("solve", kKey));
  CHECK(std::regex_match(seal("book", kKey), std::regex("[0-9a-f]{64}")));

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ch('a', 'z');
  for (int i = 0; i < 100; ++i) {
    std::string word(1 + static_cast<std::size_t>(i % 12), ' ');
    for (auto& c : word) c = static_cast<char>(ch(rng));
    CHECK(seal(word, kKey) != seal(word, k2));
  }
}

TEST_CASE("key material validation") {
  CHECK_THROWS_AS(KeyMaterial(std::vector<std::uint8_t>(8, 1)), FormatError);
  const auto dir = test::scratch("corpus-keys");
  test::write_text(dir / "short.bin", std::string(31, 'k'));
  CHECK_THROWS_AS(KeyMaterial::from_file(dir / "short.bin"), FormatError);
  CHECK_THROWS_AS(KeyMaterial::from_file(dir / "missing.bin"), StateError);

  const auto fresh = KeyMaterial::generate();
  fresh.write_file(dir / "key.bin");
  const auto loaded = KeyMaterial::from_file(dir / "key.bin");
  CHECK(seal("book", loaded) == seal("book", fresh));
  CHECK(fs::file_size(dir / "key.bin") == KeyMaterial::kFileBytes);
}

TEST_CASE("build_index examples") {
  SUBCASE("one document, one token") {
    const std::vector<Document> docs = {{"d1", "cat cat"}};
    const auto built = build_index(docs, 1, kKey);
    REQUIRE(built.index.token_count() == 1);
    const auto* postings = built.index.find(seal("cat", kKey));
    REQUIRE(postings != nullptr);
    REQUIRE(postings->size() == 1);
    CHECK(postings->front().freq == 2);
    CHECK(postings->front().doc == seal("d1", kKey));
    CHECK(built.index.doc_count() == 1);
  }
  SUBCASE("shared token has one posting per document") {
    const std::vector<Document> docs = {{"d1", "net traffic"}, {"d2", "net solve"}};
    const auto built = build_index(docs, 5, kKey);
    CHECK(built.index.find(seal("net", kKey))->size() == 2);
    CHECK(built.dictionary.tokens.at(seal("net", kKey)) == "net");
    CHECK(built.dictionary.docs.at(seal("d2", kKey)) == "d2");
  }
  SUBCASE("documents without terms are skipped, not fatal") {
    const std::vector<Document> docs = {{"d1", "net"}, {"d2", "the of"}};
    const auto built = build_index(docs, 5, kKey);
    CHECK(built.skipped == std::vector<std::string>{"d2"});
    CHECK(built.index.token_count() == 1);
  }
  SUBCASE("no documents") {
    CHECK_THROWS_AS(build_index(std::vector<Document>{}, 5, kKey), StateError);
  }
}

TEST_CASE("injected Table 1 fixture yields the Table 1 frequency matrix") {
  const auto index = test::table1_index();
  const auto freq = trim(index, Trim::None);
  REQUIRE(freq.tokens == test::kTable1Tokens);
  REQUIRE(freq.docs == test::kTable1Docs);
  const Eigen::MatrixXd dense(freq.values);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 6; ++j) CHECK(dense(i, j) == test::kTable1[i][j]);
  }
}

TEST_CASE("merge_temp") {
  InvertedIndex a;
  a.add(kHexA, kHexB, 2);
  a.set_doc_count(1);

  SUBCASE("empty temp is the identity") { CHECK(merge_temp(a, InvertedIndex{}) == a); }
  SUBCASE("disjoint tokens add up") {
    InvertedIndex b;
    b.add(kHexC, kHexB, 1);
    b.set_doc_count(1);
    const auto m = merge_temp(a, b);
    CHECK(m.token_count() == 2);
    CHECK(m.doc_count() == 1);
  }
  SUBCASE("shared (token, doc) frequencies are summed") {
    InvertedIndex b;
    b.add(kHexA, kHexB, 3);
    b.set_doc_count(1);
    CHECK(merge_temp(a, b).frequency(kHexA, kHexB) == 5);
  }
  SUBCASE("associative on disjoint batches") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = test::random_index(rng, 8, 5);
      const auto y = test::random_index(rng, 8, 5);
      const auto z = test::random_index(rng, 8, 5);
      CHECK(merge_temp(merge_temp(x, y), z) == merge_temp(x, merge_temp(y, z)));
    }
  }
}

TEST_CASE("index serialization round-trips byte for byte") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Document> docs;
    for (int d = 0; d < 4; ++d) {
      std::string body;
      for (int w = 0; w < 12; ++w) body += "w" + std::to_string(rng() % 9) + " ";
      docs.push_back({"doc" + std::to_string(d), body});
    }
    const auto built = build_index(docs, 5, kKey);
    const auto text = serialize(built.index);
    CHECK(text.rfind("CLUSPR-INDEX v1 4\n", 0) == 0);
    CHECK(serialize(parse(text)) == text);
    CHECK(parse(text) == built.index);
  }
  const auto temp = serialize(test::table1_index(), IndexKind::Temp);
  CHECK(temp.rfind("CLUSPR-TEMP v1 6\n", 0) == 0);
}

TEST_CASE("index reader rejects malformed input") {
  const std::string good = "CLUSPR-INDEX v1 1\n" + kHexA + "\t" + kHexB + ":2\n";
  CHECK_NOTHROW(parse(good));
  CHECK_THROWS_AS(parse("CLUSPR-INDEX v2 1\n"), FormatError);
  CHECK_THROWS_AS(parse(good, IndexKind::Temp), FormatError);
  CHECK_THROWS_AS(parse("CLUSPR-INDEX v1 1\n" + kHexA + "\t" + kHexB + ":0\n"), FormatError);
  CHECK_THROWS_AS(parse("CLUSPR-INDEX v1 1\n" + kHexA + "\t" + kHexB + "\n"), FormatError);
  CHECK_THROWS_AS(parse("CLUSPR-INDEX v1 1\nbook\t" + kHexB + ":1\n"), FormatError);
  CHECK_THROWS_AS(parse("CLUSPR-INDEX v1 2\n" + kHexA + "\t" + kHexC + ":1," + kHexB + ":1\n"), FormatError);
  CHECK_THROWS_AS(parse("CLUSPR-INDEX v1 1\n" + kHexB + "\t" + kHexA + ":1\n" + kHexA + "\t" + kHexA + ":1\n"),
                  FormatError);
}

TEST_CASE("serialized index holds no plaintext") {
  const std::vector<Document> docs = {{"alpha.txt", "router packet latency router"},
                                      {"beta.txt", "stock bond stock"}};
  const auto text = serialize(build_index(docs, 5, kKey).index);
  for (const char* word : {"router", "packet", "latency", "stock", "bond", "alpha", "beta"}) {
    CHECK(text.find(word) == std::string::npos);
  }
}

TEST_CASE("dictionary round-trip") {
  const std::vector<Document> docs = {{"a/one.txt", "router packet"}, {"two.txt", "stock"}};
  const auto dict = build_index(docs, 5, kKey).dictionary;
  std::ostringstream os;
  write_dictionary(os, dict);
  std::istringstream is(os.str());
  const auto back = read_dictionary(is);
  CHECK(back.tokens == dict.tokens);
  CHECK(back.docs == dict.docs);
}

TEST_CASE("load_corpus walks directories in path order and skips hidden files") {
  const auto dir = test::scratch("corpus-load");
  test::write_text(dir / "b.txt", "beta");
  test::write_text(dir / "a.txt", "alpha");
  test::write_text(dir / "sub" / "c.txt", "gamma");
  test::write_text(dir / ".hidden", "secret");
  const auto docs = load_corpus(dir);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].doc_id == "a.txt");
  CHECK(docs[1].doc_id == "b.txt");
  CHECK(docs[2].doc_id == "sub/c.txt");
  CHECK(docs[2].body == "gamma");
  CHECK_THROWS_AS(load_corpus(dir / "nope"), StateError);
}
