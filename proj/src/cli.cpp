#include "fairegm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairegm/errors.hpp"
#include "fairegm/io.hpp"
#include "fairegm/losses.hpp"
#include "fairegm/metrics.hpp"
#include "fairegm/parallel.hpp"
#include "fairegm/training.hpp"

namespace fairegm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ModelSpec {
  Variant variant;
  int cfo_c = 0;
  std::string token;  // as written, e.g. "cfo:10"
};

ModelSpec parse_model_token(const std::string& token) {
  std::string t = token;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "base") return {Variant::Base, 0, t};
  if (t == "gfo") return {Variant::GFO, 0, t};
  if (t == "few") return {Variant::FEW, 0, t};
  if (t == "aug") return {Variant::AUG, 0, t};
  if (t.rfind("cfo:", 0) == 0) {
    const int c = std::stoi(t.substr(4));
    if (c < 1) throw std::invalid_argument("model '" + token + "': c must be >= 1");
    return {Variant::CFO, c, t};
  }
  throw std::invalid_argument("unknown model '" + token +
                              "' (expected base|gfo|cfo:<c>|few|aug)");
}

std::string path_stem(const std::string& path) {
  return fs::path(path).filename().string();
}

// Table of per-dataset training defaults, keyed on the dataset name.
void resolve_defaults(ExperimentConfig& cfg) {
  if (cfg.dataset_name.empty() && !cfg.dataset.empty())
    cfg.dataset_name = path_stem(parse_dataset_spec(cfg.dataset).path);
  std::string name = cfg.dataset_name;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  const bool pubmed = name.find("pubmed") != std::string::npos;
  if (cfg.epochs < 0) cfg.epochs = pubmed ? 200 : 300;
  if (cfg.lr <= 0.0) cfg.lr = pubmed ? 1e-3 : 1e-4;
  if (cfg.threads <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    cfg.threads = hc == 0 ? 1 : int(hc);
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["dataset_name"] = c.dataset_name;
  j["models"] = c.models;
  j["splits"] = c.splits;
  j["test_fraction"] = c.test_fraction;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["lambda_f"] = c.lambda_f;
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  j["threads"] = c.threads;
  j["k"] = c.k_list;
  j["c"] = c.c_list;
  j["hidden"] = c.hidden;
  j["embed"] = c.embed;
  j["classifier_iters"] = c.classifier_iters;
  j["classifier_lr"] = c.classifier_lr;
  return j;
}

ExperimentConfig config_from_json(const json& j_in) {
  // a manifest wraps the config under "config"; accept both
  const json& j = j_in.contains("config") ? j_in.at("config") : j_in;
  ExperimentConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("dataset", c.dataset);
  get("dataset_name", c.dataset_name);
  get("models", c.models);
  get("splits", c.splits);
  get("test_fraction", c.test_fraction);
  get("epochs", c.epochs);
  get("lr", c.lr);
  get("lambda_f", c.lambda_f);
  get("seed", c.seed);
  get("out", c.out_dir);
  get("threads", c.threads);
  get("k", c.k_list);
  get("c", c.c_list);
  get("hidden", c.hidden);
  get("embed", c.embed);
  get("classifier_iters", c.classifier_iters);
  get("classifier_lr", c.classifier_lr);
  return c;
}

void validate_config(const ExperimentConfig& c) {
  if (c.dataset.empty()) throw std::invalid_argument("config: dataset is required");
  if (c.models.empty()) throw std::invalid_argument("config: at least one model is required");
  if (c.splits < 1) throw std::invalid_argument("config: splits must be >= 1");
  if (!(c.test_fraction >= 0.0 && c.test_fraction < 1.0))
    throw std::invalid_argument("config: test_fraction must be in [0, 1)");
  for (const auto& m : c.models) parse_model_token(m);
}

// Atomic file replace: write to a sibling temp path, then rename.
void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
  }
  fs::rename(tmp, path);
}

struct Cell {
  ModelSpec model;
  int split_index;
};

struct CellOutcome {
  MetricsRecord record;
  bool ok = false;
  std::string error;
};

TrainConfig cell_train_config(const ExperimentConfig& cfg, const ModelSpec& model,
                              std::uint64_t split_seed) {
  TrainConfig tc;
  tc.variant = model.variant;
  tc.cfo_c = model.cfo_c;
  tc.learning_rate = cfg.lr;
  tc.epochs = cfg.epochs;
  tc.lambda_f = cfg.lambda_f;
  tc.seed = split_seed;
  tc.hidden_dim = cfg.hidden;
  tc.embed_dim = cfg.embed;
  return tc;
}

CellOutcome run_cell(const Graph& g, const ExperimentConfig& cfg, const Cell& cell,
                     const std::string& emb_path) {
  CellOutcome out;
  try {
    const std::uint64_t split_seed = cfg.seed + std::uint64_t(cell.split_index);
    Rng split_rng = Rng::derive(split_seed, /*split stream*/ 1);
    const SplitResult split = train_test_split(g, cfg.test_fraction, split_rng);
    const TrainConfig tc = cell_train_config(cfg, cell.model, split_seed);
    const TrainResult trained = joint_train(split.train, tc);
    EvalOptions opts;
    opts.k_list = cfg.k_list;
    opts.classifier_iters = cfg.classifier_iters;
    opts.classifier_lr = cfg.classifier_lr;
    out.record =
        evaluate_run(split.train, split.test_pos, trained.embeddings, split_seed, opts);
    if (!emb_path.empty()) {
      const std::string tmp = emb_path + ".tmp";
      export_embeddings(trained.embeddings, split.train, tmp);
      fs::rename(tmp, emb_path);
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// Runs cells concurrently up to the configured budget. Kernel threads and
// cell workers share cfg.threads; outcomes land in a pre-sized vector so
// assembly order never depends on completion order.
std::vector<CellOutcome> run_cells(const Graph& g, const ExperimentConfig& cfg,
                                   const std::vector<Cell>& cells,
                                   const std::vector<std::string>& emb_paths) {
  const int workers = std::max(1, std::min<int>(cfg.threads, int(cells.size())));
  set_num_threads(std::max(1, cfg.threads / workers));
  std::vector<CellOutcome> outcomes(cells.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      outcomes[i] = run_cell(g, cfg, cells[i], emb_paths[i]);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        outcomes[i] = run_cell(g, cfg, cells[i], emb_paths[i]);
      }
    });
  for (auto& t : pool) t.join();
  return outcomes;
}

json load_stats_json(const LoadStats& s) {
  return json{{"skipped_unknown_ids", s.skipped_unknown_ids},
              {"dropped_self_loops", s.dropped_self_loops},
              {"dropped_featless_nodes", s.dropped_featless_nodes},
              {"sensitive_fallbacks", s.sensitive_fallbacks}};
}

void write_manifest(const std::string& path, const std::string& command,
                    const ExperimentConfig& cfg, const Graph& g, const LoadStats& stats,
                    const json& cells) {
  json m;
  m["command"] = command;
  m["config"] = config_to_json(cfg);
  m["dataset_stats"] = {{"nodes", g.n},
                        {"edges", g.edges.size()},
                        {"features", g.feature_dim()},
                        {"groups", g.num_groups()}};
  m["load_stats"] = load_stats_json(stats);
  m["cells"] = cells;
  write_text_atomic(path, m.dump(2) + "\n");
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  in >> j;
  return config_from_json(j);
}

int run_train(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  resolve_defaults(cfg);
  validate_config(cfg);
  fs::create_directories(cfg.out_dir);

  LoadStats stats;
  const Graph g = load_dataset(parse_dataset_spec(cfg.dataset), &stats);

  std::vector<Cell> cells;
  std::vector<std::string> emb_paths;
  for (const auto& token : cfg.models) {
    const ModelSpec model = parse_model_token(token);
    for (int s = 0; s < cfg.splits; ++s) {
      cells.push_back({model, s});
      emb_paths.push_back(cfg.out_dir + "/" + model.token + "_split" + std::to_string(s) +
                          ".emb");
      std::replace(emb_paths.back().begin(), emb_paths.back().end(), ':', '-');
    }
  }

  const std::vector<CellOutcome> outcomes = run_cells(g, cfg, cells, emb_paths);

  std::vector<ResultsBlock> blocks;
  json cell_json = json::array();
  bool all_ok = true;
  std::size_t idx = 0;
  for (const auto& token : cfg.models) {
    ResultsBlock block;
    block.dataset = cfg.dataset_name;
    block.model = token;
    for (int s = 0; s < cfg.splits; ++s, ++idx) {
      const CellOutcome& oc = outcomes[idx];
      json cj{{"model", token}, {"seed", cfg.seed + std::uint64_t(s)}};
      if (oc.ok) {
        block.records.push_back(oc.record);
        cj["status"] = "ok";
      } else {
        cj["status"] = "error";
        cj["error"] = oc.error;
        all_ok = false;
        std::cerr << "cell (" << token << ", split " << s << ") failed: " << oc.error << "\n";
      }
      cell_json.push_back(std::move(cj));
    }
    if (!block.records.empty()) blocks.push_back(std::move(block));
  }

  {
    const std::string results_path = cfg.out_dir + "/results.csv";
    const std::string tmp = results_path + ".tmp";
    write_results_blocks(blocks, cfg.k_list, tmp);
    fs::rename(tmp, results_path);
  }
  write_manifest(cfg.out_dir + "/manifest.json", "train", cfg, g, stats, cell_json);
  return all_ok ? 0 : 1;
}

int run_sweep(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  resolve_defaults(cfg);
  if (cfg.c_list.empty()) throw std::invalid_argument("sweep-c: --c list is required");
  for (int c : cfg.c_list)
    if (c < 1) throw std::invalid_argument("sweep-c: every c must be >= 1");
  cfg.models.clear();
  for (int c : cfg.c_list) cfg.models.push_back("cfo:" + std::to_string(c));
  validate_config(cfg);
  fs::create_directories(cfg.out_dir);

  LoadStats stats;
  const Graph g = load_dataset(parse_dataset_spec(cfg.dataset), &stats);

  std::vector<Cell> cells;
  std::vector<std::string> emb_paths;
  for (const auto& token : cfg.models) {
    const ModelSpec model = parse_model_token(token);
    for (int s = 0; s < cfg.splits; ++s) {
      cells.push_back({model, s});
      emb_paths.push_back("");  // sweep keeps only metrics
    }
  }
  const std::vector<CellOutcome> outcomes = run_cells(g, cfg, cells, emb_paths);

  std::vector<ResultsBlock> blocks;
  json cell_json = json::array();
  bool all_ok = true;
  std::size_t idx = 0;
  std::ostringstream sweep;
  sweep << "c,L_R,L_D_sum,L_D_mean,auroc,dp" << (cfg.k_list.empty() ? 40 : cfg.k_list.back())
        << ",L_R_std,L_D_sum_std,auroc_std\n";
  for (std::size_t ci = 0; ci < cfg.c_list.size(); ++ci) {
    const std::string& token = cfg.models[ci];
    ResultsBlock block;
    block.dataset = cfg.dataset_name;
    block.model = token;
    for (int s = 0; s < cfg.splits; ++s, ++idx) {
      const CellOutcome& oc = outcomes[idx];
      json cj{{"model", token}, {"seed", cfg.seed + std::uint64_t(s)}};
      if (oc.ok) {
        block.records.push_back(oc.record);
        cj["status"] = "ok";
      } else {
        cj["status"] = "error";
        cj["error"] = oc.error;
        all_ok = false;
        std::cerr << "cell (" << token << ", split " << s << ") failed: " << oc.error << "\n";
      }
      cell_json.push_back(std::move(cj));
    }
    if (block.records.empty()) continue;
    const int k_report = cfg.k_list.empty() ? 40 : cfg.k_list.back();
    auto mean_of = [&](auto getter) {
      double m = 0.0;
      for (const auto& r : block.records) m += getter(r);
      return m / double(block.records.size());
    };
    auto std_of = [&](auto getter, double mean) {
      if (block.records.size() < 2) return 0.0;
      double acc = 0.0;
      for (const auto& r : block.records) {
        const double d = getter(r) - mean;
        acc += d * d;
      }
      return std::sqrt(acc / double(block.records.size() - 1));
    };
    const double m_lr = mean_of([](const MetricsRecord& r) { return r.l_r; });
    const double m_lds = mean_of([](const MetricsRecord& r) { return r.l_d_sum; });
    const double m_ldm = mean_of([](const MetricsRecord& r) { return r.l_d_mean; });
    const double m_auc = mean_of([](const MetricsRecord& r) { return r.auroc; });
    const double m_dp = mean_of([&](const MetricsRecord& r) { return r.dp.at(k_report); });
    sweep << cfg.c_list[ci] << ',' << format_double(m_lr) << ',' << format_double(m_lds) << ','
          << format_double(m_ldm) << ',' << format_double(m_auc) << ',' << format_double(m_dp)
          << ',' << format_double(std_of([](const MetricsRecord& r) { return r.l_r; }, m_lr))
          << ','
          << format_double(std_of([](const MetricsRecord& r) { return r.l_d_sum; }, m_lds))
          << ','
          << format_double(std_of([](const MetricsRecord& r) { return r.auroc; }, m_auc))
          << "\n";
    blocks.push_back(std::move(block));
  }

  {
    const std::string results_path = cfg.out_dir + "/results.csv";
    const std::string tmp = results_path + ".tmp";
    write_results_blocks(blocks, cfg.k_list, tmp);
    fs::rename(tmp, results_path);
  }
  write_text_atomic(cfg.out_dir + "/sweep.csv", sweep.str());
  write_manifest(cfg.out_dir + "/manifest.json", "sweep-c", cfg, g, stats, cell_json);
  return all_ok ? 0 : 1;
}

int run_split(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  resolve_defaults(cfg);
  if (cfg.dataset.empty()) throw std::invalid_argument("split: dataset is required");
  fs::create_directories(cfg.out_dir);
  LoadStats stats;
  const Graph g = load_dataset(parse_dataset_spec(cfg.dataset), &stats);
  Rng rng = Rng::derive(cfg.seed, /*split stream*/ 1);
  const SplitResult split = train_test_split(g, cfg.test_fraction, rng);

  std::ostringstream nm;
  nm << "original_id,train_id\n";
  for (int v = 0; v < g.n; ++v)
    if (split.node_map[v] >= 0) nm << v << ',' << split.node_map[v] << "\n";
  write_text_atomic(cfg.out_dir + "/node_map.csv", nm.str());

  std::ostringstream tr;
  tr << "u,v\n";
  for (const auto& e : split.train.edges) tr << e.u << ',' << e.v << "\n";
  write_text_atomic(cfg.out_dir + "/train_edges.csv", tr.str());

  std::ostringstream te;
  te << "u,v\n";
  for (const auto& e : split.test_pos) te << e.u << ',' << e.v << "\n";
  write_text_atomic(cfg.out_dir + "/test_edges.csv", te.str());

  json cells = json::array();
  write_manifest(cfg.out_dir + "/manifest.json", "split", cfg, g, stats, cells);
  std::cout << "train nodes: " << split.train.n << ", train edges: " << split.train.edges.size()
            << ", test edges: " << split.test_pos.size() << "\n";
  return 0;
}

int run_eval(const EvalArgs& args) {
  const EmbeddingFile emb = read_embeddings(args.emb_path);
  const int n = emb.phi.rows();
  int k_groups = 0;
  for (int gid : emb.group) k_groups = std::max(k_groups, gid + 1);
  DenseMatrix sensitive(n, k_groups);
  for (int i = 0; i < n; ++i) sensitive(i, emb.group[i]) = 1.0;
  const Graph g = make_graph(n, {}, DenseMatrix(n, 1), std::move(sensitive));

  const Embeddings e{emb.phi};
  const LinkDivergence ld = link_divergence(e.phi, g);
  std::ostringstream out;
  out << "metric,value\n";
  out << "L_D_sum," << format_double(ld.sum) << "\n";
  out << "L_D_mean," << format_double(ld.mean) << "\n";
  for (int k : args.k_list) out << "dp" << k << ',' << format_double(dp_at_k(e, g, k)) << "\n";
  std::cout << out.str();
  if (!args.out_path.empty()) write_text_atomic(args.out_path, out.str());
  return 0;
}

int main(int argc, char** argv) {
  CLI::App app{"FairEGM: fair graph embeddings via emulated graph modifications"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;
  std::string models_csv, k_csv, c_csv;
  bool have_dataset = false;

  auto add_common = [&](CLI::App* sub, bool with_models) {
    sub->add_option("--config", config_path, "JSON config or manifest file");
    sub->add_option("--dataset", cfg.dataset, "dataset as <kind>:<path-prefix>")
        ->each([&](const std::string&) { have_dataset = true; });
    if (with_models) sub->add_option("--models", models_csv, "comma-separated model list");
    sub->add_option("--splits", cfg.splits, "number of randomized train/test splits");
    sub->add_option("--test-fraction", cfg.test_fraction, "test edge fraction (default 0.2)");
    sub->add_option("--epochs", cfg.epochs, "training epochs (default per dataset)");
    sub->add_option("--lr", cfg.lr, "learning rate (default per dataset)");
    sub->add_option("--lambda-f", cfg.lambda_f, "fairness weight");
    sub->add_option("--seed", cfg.seed, "base seed; split i uses seed+i");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--threads", cfg.threads, "total thread budget (0 = hardware)");
    sub->add_option("--k", k_csv, "comma-separated DP@k list (default 10,20,40)");
    sub->add_option("--hidden", cfg.hidden, "hidden layer width");
    sub->add_option("--embed", cfg.embed, "embedding dimension");
  };

  CLI::App* train = app.add_subcommand("train", "train and evaluate models over splits");
  add_common(train, true);

  CLI::App* sweep = app.add_subcommand("sweep-c", "CFO c-sweep with cross-validation folds");
  add_common(sweep, false);
  sweep->add_option("--c", c_csv, "comma-separated c values");

  CLI::App* split = app.add_subcommand("split", "materialize one train/test split");
  add_common(split, false);

  CLI::App* eval = app.add_subcommand("eval", "recompute fairness metrics from an embedding file");
  EvalArgs eval_args;
  std::string eval_k_csv;
  eval->add_option("--emb", eval_args.emb_path, "embedding file")->required();
  eval->add_option("--k", eval_k_csv, "comma-separated DP@k list");
  eval->add_option("--out", eval_args.out_path, "optional output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto parse_int_list = [](const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
  };

  try {
    // config file first, then flag overrides
    if (!config_path.empty()) {
      ExperimentConfig file_cfg = load_config_file(config_path);
      // flags already parsed into cfg; merge: non-default flags win
      ExperimentConfig defaults;
      auto pick = [](auto flag, auto file, auto def) { return flag != def ? flag : file; };
      file_cfg.dataset = have_dataset ? cfg.dataset : file_cfg.dataset;
      file_cfg.splits = pick(cfg.splits, file_cfg.splits, defaults.splits);
      file_cfg.test_fraction = pick(cfg.test_fraction, file_cfg.test_fraction, defaults.test_fraction);
      file_cfg.epochs = pick(cfg.epochs, file_cfg.epochs, defaults.epochs);
      file_cfg.lr = pick(cfg.lr, file_cfg.lr, defaults.lr);
      file_cfg.lambda_f = pick(cfg.lambda_f, file_cfg.lambda_f, defaults.lambda_f);
      file_cfg.seed = pick(cfg.seed, file_cfg.seed, defaults.seed);
      file_cfg.out_dir = pick(cfg.out_dir, file_cfg.out_dir, defaults.out_dir);
      file_cfg.threads = pick(cfg.threads, file_cfg.threads, defaults.threads);
      file_cfg.hidden = pick(cfg.hidden, file_cfg.hidden, defaults.hidden);
      file_cfg.embed = pick(cfg.embed, file_cfg.embed, defaults.embed);
      cfg = file_cfg;
    }
    if (!models_csv.empty()) {
      cfg.models.clear();
      std::stringstream ss(models_csv);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.models.push_back(tok);
    }
    if (!k_csv.empty()) cfg.k_list = parse_int_list(k_csv);
    if (!c_csv.empty()) cfg.c_list = parse_int_list(c_csv);
    if (!eval_k_csv.empty()) eval_args.k_list = parse_int_list(eval_k_csv);

    if (train->parsed()) return run_train(cfg);
    if (sweep->parsed()) return run_sweep(cfg);
    if (split->parsed()) return run_split(cfg);
    if (eval->parsed()) return run_eval(eval_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace fairegm::cli
