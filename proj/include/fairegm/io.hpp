#pragma once

#include <string>
#include <vector>

#include "fairegm/graph.hpp"
#include "fairegm/metrics.hpp"
#include "fairegm/model.hpp"

namespace fairegm {

enum class DatasetKind { ContentCites, SnapEgo, GenericCsv };

struct DatasetSpec {
  DatasetKind kind;
  std::string path;  // prefix; see the loader for the files it implies
};

// "content-cites:/path/prefix" etc.
DatasetSpec parse_dataset_spec(const std::string& spec);
std::string dataset_kind_name(DatasetKind kind);

// Counters for skipped input surfaced by the loaders.
struct LoadStats {
  long skipped_unknown_ids = 0;  // cites/edges lines naming unseen nodes
  long dropped_self_loops = 0;
  long dropped_featless_nodes = 0;  // snap-ego: in .edges but not .feat
  long sensitive_fallbacks = 0;     // snap-ego: tie or both-zero gender
};

// Planetoid-style pair of files:
//   <prefix>.content  lines: <id> <f_0> ... <f_{m-1}> <label>
//   <prefix>.cites    lines: <cited_id> <citing_id>
// Nodes are ordered by ascending original id (numeric when all ids are
// numeric, lexicographic otherwise). The label column becomes the one-hot
// sensitive attribute.
Graph load_content_cites(const std::string& content_path, const std::string& cites_path,
                         LoadStats* stats = nullptr);

// SNAP ego-network trio <prefix>.edges / <prefix>.feat / <prefix>.featnames.
// The two feature columns whose name contains "gender" become the sensitive
// attribute (argmax; ties and all-zero rows fall back to class 0 and are
// counted) and are removed from the feature matrix. Nodes absent from .feat
// are dropped.
Graph load_snap_ego(const std::string& prefix, LoadStats* stats = nullptr);

// Generic CSV pair <prefix>.nodes.csv (header: id,label,<feature...>) and
// <prefix>.edges.csv (header: src,dst). Covers the tab-separated Pubmed
// release after conversion.
Graph load_generic_csv(const std::string& prefix, LoadStats* stats = nullptr);

Graph load_dataset(const DatasetSpec& spec, LoadStats* stats = nullptr);

// Text table "node group e0 ... e{d-1}", one row per node, 17 significant
// digits so a round trip is bit-exact.
void export_embeddings(const Embeddings& emb, const Graph& g, const std::string& path);

struct EmbeddingFile {
  DenseMatrix phi;
  std::vector<int> group;
};

EmbeddingFile read_embeddings(const std::string& path);

// results CSV: one row per record, then per-model mean/std summary rows.
// Columns: dataset,model,seed,L_R,L_D_sum,L_D_mean,auroc,f1,dp<k>...
void write_results(const std::string& dataset, const std::string& model,
                   const std::vector<MetricsRecord>& records, const std::vector<int>& k_list,
                   const std::string& path);

// Multi-model variant used by the experiment harness; rows are emitted in
// the given (model, record) order.
struct ResultsBlock {
  std::string dataset;
  std::string model;
  std::vector<MetricsRecord> records;
};
void write_results_blocks(const std::vector<ResultsBlock>& blocks, const std::vector<int>& k_list,
                          const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace fairegm
