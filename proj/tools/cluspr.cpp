#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cluspr/workspace.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Clustering and pruned search over a sealed token index"};
  app.require_subcommand(1);
  int code = cluspr::kExitOk;

  fs::path corpus, workspace, batch, key_out;
  std::string query;
  std::vector<std::string> assignments;
  cluspr::IngestOptions ingest;
  cluspr::ClusterOptions cluster;
  cluspr::SearchOptions search;
  cluspr::EvalOptions eval;

  auto* c_ingest = app.add_subcommand("ingest", "Index a corpus directory into a workspace");
  c_ingest->add_option("corpus", corpus, "Directory of UTF-8 text files")->required();
  c_ingest->add_option("workspace", workspace, "Workspace directory")->required();
  c_ingest->add_option("--tokens-per-doc,-n", ingest.tokens_per_doc, "Top-n terms kept per document");
  c_ingest->add_option("--key", ingest.key, "32-byte key file (default: generated under edge/)");
  c_ingest->add_option("--model", ingest.model, "Word vector file used for abstracts and evaluation");
  c_ingest->callback([&] { code = cluspr::cmd_ingest(corpus, workspace, ingest, std::cout, std::cerr); });

  auto* c_cluster = app.add_subcommand("cluster", "Estimate k and cluster the central index");
  c_cluster->add_option("workspace", workspace)->required();
  c_cluster->add_flag("--no-trim", cluster.no_trim, "Keep every token when estimating k");
  c_cluster->add_option("--k-override", cluster.k_override, "Use this cluster count instead of the estimate")
      ->check(CLI::PositiveNumber);
  c_cluster->add_option("--alpha", cluster.alpha, "Abstract size")->check(CLI::PositiveNumber);
  c_cluster->callback([&] { code = cluspr::cmd_cluster(workspace, cluster, std::cout, std::cerr); });

  auto* c_update = app.add_subcommand("update", "Fold a batch of new documents into the clustering");
  c_update->add_option("workspace", workspace)->required();
  c_update->add_option("batch", batch, "Directory of new documents")->required();
  c_update->callback([&] { code = cluspr::cmd_update(workspace, batch, std::cout, std::cerr); });

  auto* c_search = app.add_subcommand("search", "Run a pruned keyword search");
  c_search->add_option("workspace", workspace)->required();
  c_search->add_option("query", query)->required();
  c_search->add_option("--top-p", search.top_p, "Clusters searched after pruning")->check(CLI::PositiveNumber);
  c_search->add_option("--cutoff", search.cutoff, "Results returned")->check(CLI::PositiveNumber);
  c_search->callback([&] { code = cluspr::cmd_search(workspace, query, search, std::cout, std::cerr); });

  auto* c_eval = app.add_subcommand("eval", "Coherency, TSAP@10 and batch-update reports");
  c_eval->add_option("workspace", workspace)->required();
  c_eval->add_option("--qrels", eval.qrels, "Relevance judgments: <qid>\\t<doc>\\t<0|1>");
  c_eval->add_option("--queries", eval.queries, "Queries: <qid>\\t<text>");
  c_eval->add_option("--plan", eval.plan, "Batch-update experiment plan");
  c_eval->add_option("--out", eval.out, "Write the report here instead of stdout");
  c_eval->callback([&] { code = cluspr::cmd_eval(workspace, eval, std::cout, std::cerr); });

  auto* c_config = app.add_subcommand("config", "Show or set workspace defaults");
  c_config->add_option("workspace", workspace)->required();
  c_config->add_option("assignments", assignments, "key=value pairs");
  c_config->callback([&] { code = cluspr::cmd_config(workspace, assignments, std::cout, std::cerr); });

  auto* c_keygen = app.add_subcommand("keygen", "Write a fresh random key file");
  c_keygen->add_option("path", key_out)->required();
  c_keygen->callback([&] { code = cluspr::cmd_keygen(key_out, std::cout, std::cerr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cluspr::kExitState;
  }
  return code;
}
