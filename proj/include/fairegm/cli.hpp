#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fairegm::cli {

// Resolved experiment configuration; serialized verbatim into the run
// manifest so a manifest is itself a valid --config input.
struct ExperimentConfig {
  std::string dataset;       // "<kind>:<path-prefix>"
  std::string dataset_name;  // defaults to the path stem
  std::vector<std::string> models = {"base"};
  int splits = 5;
  double test_fraction = 0.2;
  int epochs = -1;      // -1: per-dataset default (pubmed 200, others 300)
  double lr = -1.0;     // -1: per-dataset default (pubmed 1e-3, others 1e-4)
  double lambda_f = 1.0;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;  // 0 = hardware concurrency
  std::vector<int> k_list = {10, 20, 40};
  std::vector<int> c_list;  // sweep-c only
  int hidden = 32;
  int embed = 16;
  int classifier_iters = 500;
  double classifier_lr = 0.5;
};

ExperimentConfig load_config_file(const std::string& path);

// Experiment drivers; return a process exit code (0 iff every requested
// (model, split) cell succeeded).
int run_train(const ExperimentConfig& cfg);
int run_sweep(const ExperimentConfig& cfg);
int run_split(const ExperimentConfig& cfg);

struct EvalArgs {
  std::string emb_path;
  std::vector<int> k_list = {10, 20, 40};
  std::string out_path;  // optional CSV; always printed to stdout
};
int run_eval(const EvalArgs& args);

// Full argv interface (subcommands train / sweep-c / split / eval).
int main(int argc, char** argv);

}  // namespace fairegm::cli
