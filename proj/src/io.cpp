#include "fairegm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "fairegm/errors.hpp"

namespace fairegm {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

// minimal RFC-4180 field splitting (quotes, embedded commas)
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, long line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, line, "expected a number, got '" + s + "'");
  }
}

bool all_numeric(const std::vector<std::string>& ids) {
  for (const auto& s : ids) {
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// ascending original id; numeric comparison when every id is numeric
std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  if (all_numeric(ids)) {
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
  } else {
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  return in;
}

struct RawNodes {
  std::vector<std::string> ids;                       // sorted
  std::unordered_map<std::string, int> index;         // id -> row
  DenseMatrix features;
  std::vector<std::string> labels;                    // per row
};

Graph assemble(int n, std::vector<Edge> edges, DenseMatrix features,
               const std::vector<std::string>& labels) {
  if (n == 0) throw std::invalid_argument("dataset has no nodes");
  std::vector<std::string> distinct = labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  DenseMatrix sensitive(n, int(distinct.size()));
  for (int i = 0; i < n; ++i) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), labels[i]);
    sensitive(i, int(it - distinct.begin())) = 1.0;
  }
  return make_graph(n, std::move(edges), std::move(features), std::move(sensitive));
}

}  // namespace

DatasetSpec parse_dataset_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("dataset spec must be <kind>:<path>, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string path = spec.substr(colon + 1);
  if (kind == "content-cites") return {DatasetKind::ContentCites, path};
  if (kind == "snap-ego") return {DatasetKind::SnapEgo, path};
  if (kind == "generic-csv") return {DatasetKind::GenericCsv, path};
  throw std::invalid_argument("unknown dataset kind '" + kind + "'");
}

std::string dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::ContentCites:
      return "content-cites";
    case DatasetKind::SnapEgo:
      return "snap-ego";
    case DatasetKind::GenericCsv:
      return "generic-csv";
  }
  return "?";
}

Graph load_content_cites(const std::string& content_path, const std::string& cites_path,
                         LoadStats* stats) {
  LoadStats local;
  std::ifstream content = open_or_throw(content_path);
  std::string line;
  long lineno = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  int m = -1;
  while (std::getline(content, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() < 3)
      throw ParseError(content_path, lineno, "expected <id> <features...> <label>");
    if (m == -1) m = int(toks.size()) - 2;
    if (int(toks.size()) != m + 2)
      throw ParseError(content_path, lineno,
                       "expected " + std::to_string(m + 2) + " fields, got " +
                           std::to_string(toks.size()));
    ids.push_back(toks.front());
    labels.push_back(toks.back());
    std::vector<double> feat(m);
    for (int j = 0; j < m; ++j) feat[j] = parse_double(toks[j + 1], content_path, lineno);
    rows.push_back(std::move(feat));
  }
  if (ids.empty()) throw std::invalid_argument(content_path + ": no nodes");

  const std::vector<std::string> order = sorted_ids(ids);
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < int(order.size()); ++i) {
    if (!index.emplace(order[i], i).second)
      throw std::invalid_argument(content_path + ": duplicate node id '" + order[i] + "'");
  }
  const int n = int(order.size());
  DenseMatrix features(n, m);
  std::vector<std::string> sorted_labels(n);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int i = index.at(ids[r]);
    for (int j = 0; j < m; ++j) features(i, j) = rows[r][j];
    sorted_labels[i] = labels[r];
  }

  std::ifstream cites = open_or_throw(cites_path);
  std::vector<Edge> edges;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 2) throw ParseError(cites_path, lineno, "expected <cited> <citing>");
    const auto a = index.find(toks[0]);
    const auto b = index.find(toks[1]);
    if (a == index.end() || b == index.end()) {
      ++local.skipped_unknown_ids;
      continue;
    }
    if (a->second == b->second) {
      ++local.dropped_self_loops;
      continue;
    }
    edges.push_back({std::min(a->second, b->second), std::max(a->second, b->second)});
  }
  if (stats) *stats = local;
  return assemble(n, std::move(edges), std::move(features), sorted_labels);
}

Graph load_snap_ego(const std::string& prefix, LoadStats* stats) {
  LoadStats local;
  // featnames: find the two gender columns
  std::ifstream fn = open_or_throw(prefix + ".featnames");
  std::string line;
  long lineno = 0;
  std::vector<int> gender_cols;
  int total_cols = 0;
  while (std::getline(fn, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() < 2)
      throw ParseError(prefix + ".featnames", lineno, "expected <index> <name...>");
    std::string lower = line;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower.find("gender") != std::string::npos)
      gender_cols.push_back(int(std::stol(toks[0])));
    ++total_cols;
  }
  if (gender_cols.size() != 2)
    throw SchemaError(prefix + ".featnames: expected exactly 2 gender columns, found " +
                      std::to_string(gender_cols.size()));

  std::ifstream feat = open_or_throw(prefix + ".feat");
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  lineno = 0;
  while (std::getline(feat, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (int(toks.size()) != total_cols + 1)
      throw ParseError(prefix + ".feat", lineno,
                       "expected " + std::to_string(total_cols + 1) + " fields, got " +
                           std::to_string(toks.size()));
    ids.push_back(toks[0]);
    std::vector<double> r(total_cols);
    for (int j = 0; j < total_cols; ++j)
      r[j] = parse_double(toks[j + 1], prefix + ".feat", lineno);
    rows.push_back(std::move(r));
  }
  if (ids.empty()) throw std::invalid_argument(prefix + ".feat: no nodes");

  const std::vector<std::string> order = sorted_ids(ids);
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < int(order.size()); ++i) index.emplace(order[i], i);
  const int n = int(order.size());

  const int g0 = gender_cols[0], g1 = gender_cols[1];
  DenseMatrix features(n, total_cols - 2);
  DenseMatrix sensitive(n, 2);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int i = index.at(ids[r]);
    int out = 0;
    for (int j = 0; j < total_cols; ++j) {
      if (j == g0 || j == g1) continue;
      features(i, out++) = rows[r][j];
    }
    const double a = rows[r][g0], b = rows[r][g1];
    int cls;
    if (a > b) {
      cls = 0;
    } else if (b > a) {
      cls = 1;
    } else {
      cls = 0;
      ++local.sensitive_fallbacks;
    }
    sensitive(i, cls) = 1.0;
  }

  std::ifstream ed = open_or_throw(prefix + ".edges");
  std::vector<Edge> edges;
  lineno = 0;
  while (std::getline(ed, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 2) throw ParseError(prefix + ".edges", lineno, "expected <u> <v>");
    const auto a = index.find(toks[0]);
    const auto b = index.find(toks[1]);
    if (a == index.end() || b == index.end()) {
      ++local.dropped_featless_nodes;
      continue;
    }
    if (a->second == b->second) {
      ++local.dropped_self_loops;
      continue;
    }
    edges.push_back({std::min(a->second, b->second), std::max(a->second, b->second)});
  }
  if (stats) *stats = local;
  return make_graph(n, std::move(edges), std::move(features), std::move(sensitive));
}

Graph load_generic_csv(const std::string& prefix, LoadStats* stats) {
  LoadStats local;
  std::ifstream nodes = open_or_throw(prefix + ".nodes.csv");
  std::string line;
  long lineno = 0;
  if (!std::getline(nodes, line)) throw ParseError(prefix + ".nodes.csv", 1, "missing header");
  ++lineno;
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "id" || header[1] != "label")
    throw SchemaError(prefix + ".nodes.csv: header must start with id,label");
  const int m = int(header.size()) - 2;

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  while (std::getline(nodes, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_csv(line);
    if (int(toks.size()) != m + 2)
      throw ParseError(prefix + ".nodes.csv", lineno,
                       "expected " + std::to_string(m + 2) + " fields, got " +
                           std::to_string(toks.size()));
    ids.push_back(toks[0]);
    labels.push_back(toks[1]);
    std::vector<double> r(m);
    for (int j = 0; j < m; ++j) r[j] = parse_double(toks[j + 2], prefix + ".nodes.csv", lineno);
    rows.push_back(std::move(r));
  }
  if (ids.empty()) throw std::invalid_argument(prefix + ".nodes.csv: no nodes");

  const std::vector<std::string> order = sorted_ids(ids);
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < int(order.size()); ++i) {
    if (!index.emplace(order[i], i).second)
      throw std::invalid_argument(prefix + ".nodes.csv: duplicate node id '" + order[i] + "'");
  }
  const int n = int(order.size());
  DenseMatrix features(n, m);
  std::vector<std::string> sorted_labels(n);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int i = index.at(ids[r]);
    for (int j = 0; j < m; ++j) features(i, j) = rows[r][j];
    sorted_labels[i] = labels[r];
  }

  std::ifstream ed = open_or_throw(prefix + ".edges.csv");
  lineno = 0;
  if (!std::getline(ed, line)) throw ParseError(prefix + ".edges.csv", 1, "missing header");
  ++lineno;
  std::vector<Edge> edges;
  while (std::getline(ed, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_csv(line);
    if (toks.size() != 2) throw ParseError(prefix + ".edges.csv", lineno, "expected src,dst");
    const auto a = index.find(toks[0]);
    const auto b = index.find(toks[1]);
    if (a == index.end() || b == index.end()) {
      ++local.skipped_unknown_ids;
      continue;
    }
    if (a->second == b->second) {
      ++local.dropped_self_loops;
      continue;
    }
    edges.push_back({std::min(a->second, b->second), std::max(a->second, b->second)});
  }
  if (stats) *stats = local;
  return assemble(n, std::move(edges), std::move(features), sorted_labels);
}

Graph load_dataset(const DatasetSpec& spec, LoadStats* stats) {
  switch (spec.kind) {
    case DatasetKind::ContentCites:
      return load_content_cites(spec.path + ".content", spec.path + ".cites", stats);
    case DatasetKind::SnapEgo:
      return load_snap_ego(spec.path, stats);
    case DatasetKind::GenericCsv:
      return load_generic_csv(spec.path, stats);
  }
  throw std::invalid_argument("load_dataset: unknown kind");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void export_embeddings(const Embeddings& emb, const Graph& g, const std::string& path) {
  if (emb.phi.rows() != g.n)
    throw std::invalid_argument("export_embeddings: embedding rows != graph nodes");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_embeddings: cannot write " + path);
  const int d = emb.phi.cols();
  out << "node group";
  for (int j = 0; j < d; ++j) out << " e" << j;
  out << "\n";
  const std::vector<int> group = g.group_ids();
  for (int i = 0; i < g.n; ++i) {
    out << i << ' ' << group[i];
    for (int j = 0; j < d; ++j) out << ' ' << format_double(emb.phi(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("export_embeddings: write failed for " + path);
}

EmbeddingFile read_embeddings(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  const auto header = split_ws(line);
  if (header.size() < 3 || header[0] != "node" || header[1] != "group")
    throw ParseError(path, 1, "header must be: node group e0 ...");
  const int d = int(header.size()) - 2;
  std::vector<std::vector<double>> rows;
  std::vector<int> group;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (int(toks.size()) != d + 2)
      throw ParseError(path, lineno,
                       "expected " + std::to_string(d + 2) + " fields, got " +
                           std::to_string(toks.size()));
    const long row = std::stol(toks[0]);
    if (row != long(rows.size()))
      throw ParseError(path, lineno, "node ids must be consecutive from 0");
    group.push_back(int(std::stol(toks[1])));
    std::vector<double> r(d);
    for (int j = 0; j < d; ++j) r[j] = parse_double(toks[j + 2], path, lineno);
    rows.push_back(std::move(r));
  }
  EmbeddingFile out;
  out.phi = DenseMatrix(int(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < d; ++j) out.phi(int(i), j) = rows[i][j];
  out.group = std::move(group);
  return out;
}

namespace {

void write_results_header(std::ofstream& out, const std::vector<int>& k_list) {
  out << "dataset,model,seed,L_R,L_D_sum,L_D_mean,auroc,f1";
  for (int k : k_list) out << ",dp" << k;
  out << "\n";
}

void write_record_row(std::ofstream& out, const std::string& dataset, const std::string& model,
                      const std::string& seed_field, double l_r, double l_d_sum, double l_d_mean,
                      double auroc_v, double f1_v, const std::vector<int>& k_list,
                      const std::map<int, double>& dp) {
  out << dataset << ',' << model << ',' << seed_field << ',' << format_double(l_r) << ','
      << format_double(l_d_sum) << ',' << format_double(l_d_mean) << ',' << format_double(auroc_v)
      << ',' << format_double(f1_v);
  for (int k : k_list) out << ',' << format_double(dp.at(k));
  out << "\n";
}

void write_block(std::ofstream& out, const ResultsBlock& b, const std::vector<int>& k_list) {
  for (const auto& r : b.records)
    write_record_row(out, b.dataset, b.model, std::to_string(r.seed), r.l_r, r.l_d_sum,
                     r.l_d_mean, r.auroc, r.f1, k_list, r.dp);
  if (b.records.size() >= 2) {
    const SummaryRecord s = summarize(b.records);
    std::map<int, double> dp_mean, dp_std;
    for (const auto& [k, ms] : s.dp) {
      dp_mean[k] = ms.mean;
      dp_std[k] = ms.std;
    }
    write_record_row(out, b.dataset, b.model, "mean", s.l_r.mean, s.l_d_sum.mean, s.l_d_mean.mean,
                     s.auroc.mean, s.f1.mean, k_list, dp_mean);
    write_record_row(out, b.dataset, b.model, "std", s.l_r.std, s.l_d_sum.std, s.l_d_mean.std,
                     s.auroc.std, s.f1.std, k_list, dp_std);
  }
}

}  // namespace

void write_results(const std::string& dataset, const std::string& model,
                   const std::vector<MetricsRecord>& records, const std::vector<int>& k_list,
                   const std::string& path) {
  write_results_blocks({ResultsBlock{dataset, model, records}}, k_list, path);
}

void write_results_blocks(const std::vector<ResultsBlock>& blocks, const std::vector<int>& k_list,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_results: cannot write " + path);
  write_results_header(out, k_list);
  for (const auto& b : blocks) write_block(out, b, k_list);
  if (!out) throw std::runtime_error("write_results: write failed for " + path);
}

}  // namespace fairegm
