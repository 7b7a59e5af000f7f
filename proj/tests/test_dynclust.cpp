#include <doctest.h>

#include "cluspr/dynclust.hpp"
#include "cluspr/errors.hpp"
#include "support.hpp"

using namespace cluspr;

namespace {

// Unit vectors in the plane at the given angles (degrees).
SimilarityModel planar(const std::vector<std::pair<std::string, double>>& words) {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (const auto& [w, deg] : words) {
    const double rad = deg * 3.14159265358979323846 / 180.0;
    rows.push_back({w, {std::cos(rad), std::sin(rad)}});
  }
  return test::model_from(rows);
}

std::set<SealedToken> token_set(const InvertedIndex& index) {
  std::set<SealedToken> out;
  for (const auto& [t, postings] : index.entries()) out.insert(t);
  return out;
}

double angle_for(double cosine) { return std::acos(cosine) * 180.0 / 3.14159265358979323846; }

UpdateBatch batch_of(const std::vector<std::tuple<std::string, std::string, std::uint32_t>>& postings,
                     const InvertedIndex& central) {
  TempIndex temp;
  std::map<SealedToken, std::string> plain;
  std::set<std::string> docs;
  for (const auto& [t, d, f] : postings) {
    temp.add(t, d, f);
    plain[t] = "plain-" + t;
    docs.insert(d);
  }
  temp.set_doc_count(docs.size());
  return make_batch(std::move(temp), central, std::move(plain));
}

}  // namespace

TEST_CASE("decide_recluster examples") {
  const auto same = decide_recluster(100, 100);
  CHECK(same.chi2 == 0.0);
  CHECK(same.recluster);
  const auto small = decide_recluster(10, 100);
  CHECK(small.chi2 == doctest::Approx(81.0));
  CHECK_FALSE(small.recluster);
  const auto large = decide_recluster(120, 100);
  CHECK(large.chi2 == doctest::Approx(4.0));
  CHECK_FALSE(large.recluster);
  CHECK(decide_recluster(0, 1).recluster);
  CHECK_THROWS_AS(decide_recluster(5, 0), DomainError);
}

TEST_CASE("decide_recluster agrees with the closed form") {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<std::size_t> count(0, 400);
  for (int i = 0; i < 1000; ++i) {
    const auto n = count(rng);
    const auto e = count(rng) + 1;
    const double o = static_cast<double>(n), x = static_cast<double>(e);
    const auto d = decide_recluster(n, e);
    CHECK(d.chi2 == doctest::Approx((o - x) * (o - x) / x));
    CHECK(d.recluster == ((o - x) * (o - x) / x <= 3.841));
    CHECK(d.threshold == 3.841);
  }
}

TEST_CASE("make_batch marks tokens the central index lacks") {
  const auto central = test::table1_index();
  const auto batch = batch_of({{"4net", "e1", 2}, {"6stock", "e1", 3}, {"7bond", "e2", 1}}, central);
  CHECK(batch.new_tokens == std::set<SealedToken>{"6stock", "7bond"});
  CHECK(batch.temp.token_count() == 3);
}

TEST_CASE("accumulate") {
  const InvertedIndex central;
  const auto a = batch_of({{"x", "e1", 2}, {"y", "e1", 1}}, central);
  const auto b = batch_of({{"z", "e2", 4}, {"x", "e1", 1}}, central);

  SUBCASE("onto an empty buffer") {
    const auto out = accumulate(a, UpdateBatch{});
    CHECK(out.temp == a.temp);
    CHECK(out.new_tokens == a.new_tokens);
    CHECK(out.plaintexts == a.plaintexts);
  }
  SUBCASE("token union and summed postings") {
    const auto out = accumulate(b, a);
    CHECK(out.new_tokens == std::set<SealedToken>{"x", "y", "z"});
    CHECK(out.temp.frequency("x", "e1") == 3);
  }
  SUBCASE("repeated accumulation eventually triggers re-clustering") {
    const std::size_t existing = 40;
    UpdateBatch buffer;
    int batches = 0;
    while (!decide_recluster(buffer.new_tokens.size(), existing).recluster) {
      std::vector<std::tuple<std::string, std::string, std::uint32_t>> postings;
      for (int t = 0; t < 5; ++t) postings.emplace_back(test::label('n', static_cast<std::size_t>(batches * 5 + t)), "e", 1);
      buffer = accumulate(batch_of(postings, central), buffer);
      ++batches;
      REQUIRE(batches < 20);
    }
    CHECK(buffer.new_tokens.size() >= 28);
    CHECK(buffer.new_tokens.size() <= 52);
  }
}

TEST_CASE("assign_tokens examples") {
  SUBCASE("identical token joins the cluster") {
    const auto model = planar({{"net", 0}, {"router", 0}, {"stock", 90}});
    AbstractSet set;
    set.abstracts = {{1, {"net"}, std::nullopt}, {2, {"stock"}, std::nullopt}};
    set.theta = 0.99;
    const std::vector<std::string> tokens = {"router"};
    const auto out = assign_tokens(set, tokens, &model);
    REQUIRE(out.size() == 1);
    CHECK(out[0].cluster_id == 1);
    CHECK_FALSE(out[0].created);
  }
  SUBCASE("orthogonal token starts a new cluster") {
    const auto model = planar({{"net", 0}, {"stock", 90}});
    AbstractSet set;
    set.abstracts = {{1, {"net"}, std::nullopt}};
    set.theta = 0.1;
    const std::vector<std::string> tokens = {"stock"};
    const auto out = assign_tokens(set, tokens, &model);
    CHECK(out[0].created);
    CHECK(out[0].cluster_id == 2);
    CHECK(set.abstracts.size() == 2);
    CHECK(set.abstracts.back().elements == std::vector<std::string>{"stock"});
    CHECK(set.theta == 0.1);
  }
  SUBCASE("best score above theta wins") {
    const auto model = planar({{"t", 0}, {"a1", angle_for(0.3)}, {"a2", -angle_for(0.5)}});
    AbstractSet set;
    set.abstracts = {{1, {"a1"}, std::nullopt}, {2, {"a2"}, std::nullopt}};
    set.theta = 0.2;
    const std::vector<std::string> tokens = {"t"};
    const auto out = assign_tokens(set, tokens, &model);
    CHECK(out[0].cluster_id == 2);
    CHECK(*out[0].best_similarity == doctest::Approx(0.5));
  }
  SUBCASE("similarity equal to theta does not join") {
    const auto model = planar({{"t", 0}, {"a1", 60}});
    AbstractSet set;
    set.abstracts = {{1, {"a1"}, std::nullopt}};
    set.theta = *model.similarity("t", "a1");
    const std::vector<std::string> tokens = {"t"};
    CHECK(assign_tokens(set, tokens, &model)[0].created);
  }
  SUBCASE("out-of-vocabulary tokens start new clusters") {
    const auto model = planar({{"net", 0}});
    AbstractSet set;
    set.abstracts = {{4, {"net"}, std::nullopt}};
    const std::vector<std::string> tokens = {"mystery", "enigma"};
    const auto out = assign_tokens(set, tokens, &model);
    CHECK(out[0].cluster_id == 5);
    CHECK(out[1].cluster_id == 6);
    CHECK_FALSE(out[0].best_similarity.has_value());
  }
  SUBCASE("tokens see singletons created earlier in the batch") {
    const auto model = planar({{"net", 0}, {"stock", 90}, {"bond", 90}});
    AbstractSet set;
    set.abstracts = {{1, {"net"}, std::nullopt}};
    const std::vector<std::string> tokens = {"stock", "bond"};
    const auto out = assign_tokens(set, tokens, &model);
    CHECK(out[0].created);
    CHECK(out[1].cluster_id == out[0].cluster_id);
    CHECK_FALSE(out[1].created);
  }
}

TEST_CASE("update_clusters merges the batch and keeps a partition") {
  const auto central = test::table1_index();
  const auto static_run = cluster_static(central, {Trim::None, std::nullopt});
  const auto model = planar({{"book", 0}, {"solve", 40}, {"traffic", 80}, {"net", 120}, {"enter", 160},
                             {"novel", 2}, {"stock", 250}});
  const std::map<SealedToken, std::string> unseal = {
      {"1book", "book"}, {"2solve", "solve"}, {"3traffic", "traffic"}, {"4net", "net"}, {"5enter", "enter"}};
  auto abstracts = build_abstracts(static_run.clusters, central, unseal, 10, &model);
  const double theta = abstracts.theta;

  TempIndex temp;
  temp.add("4net", "d7", 3);
  temp.add("6novel", "d7", 5);
  temp.add("7stock", "d8", 2);
  temp.set_doc_count(2);
  const auto batch = make_batch(temp, central, {{"4net", "net"}, {"6novel", "novel"}, {"7stock", "stock"}});
  const auto result = update_clusters(abstracts, static_run.clusters, central, batch, &model);

  REQUIRE(result.assignments.size() == 2);
  CHECK(result.assignments[0].token == "novel");
  CHECK(result.assignments[1].token == "stock");
  CHECK(abstracts.theta == theta);
  CHECK_FALSE(partition_violation(result.clusters, token_set(result.index)));
  CHECK(result.index.frequency("4net", "d7") == 3);
  CHECK(result.index.doc_count() == 8);
  const auto membership = result.clusters.membership();
  CHECK(membership.at("6novel") == static_run.clusters.membership().at("1book"));

  SUBCASE("missing plaintext") {
    auto broken = batch;
    broken.plaintexts.erase("7stock");
    auto copy = build_abstracts(static_run.clusters, central, unseal, 10, &model);
    CHECK_THROWS_AS(update_clusters(copy, static_run.clusters, central, broken, &model), MissingPlaintext);
  }
}

TEST_CASE("threshold discipline on random updates") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (std::size_t w = 0; w < 24; ++w) {
      std::vector<double> v(4);
      for (auto& x : v) x = gauss(rng);
      rows.emplace_back(test::label('w', w), v);
    }
    const auto model = test::model_from(rows);
    AbstractSet set;
    for (int a = 0; a < 4; ++a) {
      Abstract abs{a + 1, {}, std::nullopt};
      for (int e = 0; e < 3; ++e) abs.elements.push_back(rows[static_cast<std::size_t>(a * 3 + e)].first);
      set.abstracts.push_back(abs);
    }
    set.theta = std::uniform_real_distribution<double>(-0.2, 0.8)(rng);
    const auto before = set;
    std::vector<std::string> tokens;
    for (std::size_t w = 12; w < 24; ++w) tokens.push_back(rows[w].first);
    const auto out = assign_tokens(set, tokens, &model);
    for (const auto& as : out) {
      if (!as.created) {
        CHECK(*as.best_similarity > set.theta);
      } else if (before.find(as.cluster_id) == nullptr && as.best_similarity) {
        // Nothing cleared theta, so every pre-existing element scored at or below it.
        for (const auto& a : before.abstracts) {
          for (const auto& e : a.elements) CHECK(*model.similarity(as.token, e) <= set.theta);
        }
      }
    }
  }
}

TEST_CASE("full_recluster examples") {
  const auto index = test::table1_index();
  const StaticOptions options{Trim::None, std::nullopt};

  SUBCASE("empty temp equals static clustering") {
    const auto r = full_recluster(index, TempIndex{}, options);
    CHECK(r.clustering.clusters == cluster_static(index, options).clusters);
  }
  SUBCASE("an exact copy under fresh doc ids leaves k unchanged") {
    TempIndex copy;
    for (const auto& [t, postings] : index.entries()) {
      for (const auto& p : postings) copy.add(t, "copy-" + p.doc, p.freq);
    }
    copy.set_doc_count(6);
    const auto r = full_recluster(index, copy, options);
    CHECK(r.index.doc_count() == 12);
    CHECK(r.clustering.estimate.k == cluster_static(index, options).estimate.k);
  }
  SUBCASE("a disjoint-topic batch raises k") {
    TempIndex other;
    other.add("6stock", "e1", 9);
    other.add("7bond", "e2", 7);
    other.add("8market", "e3", 8);
    other.set_doc_count(3);
    const auto r = full_recluster(index, other, options);
    CHECK(r.clustering.estimate.k > cluster_static(index, options).estimate.k);
    CHECK_FALSE(partition_violation(r.clustering.clusters, token_set(r.index)));
  }
}

TEST_CASE("fd_bootstrap examples") {
  SUBCASE("single token") {
    const std::vector<TokenCount> tokens = {{"net", 3}};
    const auto out = fd_bootstrap(tokens, nullptr);
    REQUIRE(out.clusters.k_used() == 1);
    CHECK(out.clusters.clusters[0].center == "net");
  }
  SUBCASE("identical vectors share a cluster") {
    const auto model = planar({{"net", 10}, {"router", 10}});
    const std::vector<TokenCount> tokens = {{"router", 1}, {"net", 4}};
    const auto out = fd_bootstrap(tokens, &model);
    REQUIRE(out.clusters.k_used() == 1);
    CHECK(out.clusters.clusters[0].center == "net");
    CHECK(out.clusters.clusters[0].members == std::vector<std::string>{"net", "router"});
  }
  SUBCASE("mutual similarity below theta gives singletons") {
    const double deg = angle_for(0.05);
    const auto model = planar({{"a", 0}, {"b", deg}, {"c", 2 * deg}});
    CHECK(*model.similarity("a", "b") == doctest::Approx(0.05));
    CHECK(*model.similarity("a", "c") < 0.05);
    const std::vector<TokenCount> tokens = {{"a", 3}, {"b", 2}, {"c", 1}};
    CHECK(fd_bootstrap(tokens, &model).clusters.k_used() == 3);
  }
  SUBCASE("ties on frequency pick the lexicographically smallest seed") {
    const std::vector<TokenCount> tokens = {{"zeta", 2}, {"alpha", 2}};
    CHECK(fd_bootstrap(tokens, nullptr).clusters.find(1)->center == "alpha");
  }
  CHECK_THROWS_AS(fd_bootstrap(std::vector<TokenCount>{}, nullptr), DomainError);
}

TEST_CASE("fd_bootstrap equals token-by-token assignment from the seed") {
  std::mt19937_64 rng(97);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    std::vector<TokenCount> tokens;
    for (std::size_t w = 0; w < 15; ++w) {
      std::vector<double> v(3);
      for (auto& x : v) x = gauss(rng);
      rows.emplace_back(test::label('w', w), v);
      tokens.push_back({rows.back().first, static_cast<std::uint32_t>(1 + rng() % 6)});
    }
    const auto model = test::model_from(rows);
    const auto fd = fd_bootstrap(tokens, &model);

    std::sort(tokens.begin(), tokens.end(), [](const TokenCount& a, const TokenCount& b) {
      return a.freq != b.freq ? a.freq > b.freq : a.token < b.token;
    });
    AbstractSet set;
    set.abstracts = {{1, {tokens[0].token}, std::nullopt}};
    set.theta = 0.1;
    std::map<int, std::vector<std::string>> members = {{1, {tokens[0].token}}};
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const std::vector<std::string> one = {tokens[i].token};
      const auto as = assign_tokens(set, one, &model).front();
      members[as.cluster_id].push_back(as.token);
    }
    REQUIRE(fd.clusters.k_used() == members.size());
    for (auto& [id, m] : members) {
      std::sort(m.begin(), m.end());
      CHECK(fd.clusters.find(id)->members == m);
    }
  }
}

TEST_CASE("journal line") {
  CHECK(journal_line(1, decide_recluster(100, 100)) == "BATCH 1 new=100 existing=100 chi2=0.000000 decision=recluster");
  CHECK(journal_line(2, decide_recluster(10, 100)) == "BATCH 2 new=10 existing=100 chi2=81.000000 decision=update");
  CHECK(journal_line(3, decide_recluster(120, 100)) == "BATCH 3 new=120 existing=100 chi2=4.000000 decision=update");
}
