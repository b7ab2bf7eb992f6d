// Compares the OpenMP kernels against the serial reference implementation
// and reports per-kernel timings and speedups.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fairegm/graph.hpp"
#include "fairegm/linalg.hpp"
#include "fairegm/losses.hpp"
#include "fairegm/parallel.hpp"
#include "fairegm/reference.hpp"
#include "fairegm/rng.hpp"

using namespace fairegm;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const std::string& name, double serial, double parallel) {
  std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", name.c_str(),
              serial * 1e3, parallel * 1e3, serial / parallel);
}

Graph random_graph(int n, int edges, int m, int k, Rng& rng) {
  std::vector<Edge> e;
  while (int(e.size()) < edges) {
    int u = int(rng.below(n)), v = int(rng.below(n));
    if (u == v) continue;
    e.push_back({std::min(u, v), std::max(u, v)});
  }
  DenseMatrix f(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) f(i, j) = rng.uniform() < 0.02 ? 1.0 : 0.0;
  DenseMatrix s(n, k);
  for (int i = 0; i < n; ++i) s(i, int(rng.below(k))) = 1.0;
  return make_graph(n, std::move(e), std::move(f), std::move(s));
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 0;
  set_num_threads(threads);
  std::printf("kernel benchmark, %d thread(s) for the parallel side\n", num_threads());

  Rng rng(7);
  const DenseMatrix a = glorot_normal_init(768, 768, rng);
  const DenseMatrix b = glorot_normal_init(768, 768, rng);
  const Graph g = random_graph(4000, 20000, 64, 5, rng);
  const SparseMatrix ah = normalize_adjacency(g);
  const DenseMatrix dense_n = glorot_normal_init(4000, 64, rng);
  const DenseMatrix phi = glorot_normal_init(4000, 16, rng);
  const DenseMatrix ew = DenseMatrix::constant(ah.nnz(), 1, 1.0);
  const PosWeight pw = pos_weight(g);

  {
    const double ts = time_of([&] { ref::matmul(a, b); }, 3);
    const double tp = time_of([&] { matmul(a, b); }, 3);
    report("matmul 768^3", ts, tp);
  }
  {
    const double ts = time_of([&] { ref::matmul_tn(a, b); }, 3);
    const double tp = time_of([&] { matmul_tn(a, b); }, 3);
    report("matmul_tn 768^3", ts, tp);
  }
  {
    const double ts = time_of([&] { ref::matmul_nt(a, b); }, 3);
    const double tp = time_of([&] { matmul_nt(a, b); }, 3);
    report("matmul_nt 768^3", ts, tp);
  }
  {
    const double ts = time_of([&] { ref::spmm(ah, dense_n); }, 10);
    const double tp = time_of([&] { spmm(ah, dense_n); }, 10);
    report("spmm 4k nodes", ts, tp);
  }
  {
    const double ts = time_of([&] { ref::edge_weighted_spmm(ah, ew, dense_n); }, 10);
    const double tp = time_of([&] { edge_weighted_spmm(ah, ew, dense_n); }, 10);
    report("edge_weighted_spmm", ts, tp);
  }
  {
    // losses run the same code path; compare thread counts directly
    const int nt = num_threads();
    set_num_threads(1);
    const double ts = time_of([&] { reconstruction_loss(phi, g, pw); }, 3);
    set_num_threads(nt);
    const double tp = time_of([&] { reconstruction_loss(phi, g, pw); }, 3);
    report("reconstruction_loss", ts, tp);
  }
  {
    const int nt = num_threads();
    set_num_threads(1);
    const double ts = time_of([&] { link_divergence(phi, g); }, 3);
    set_num_threads(nt);
    const double tp = time_of([&] { link_divergence(phi, g); }, 3);
    report("link_divergence", ts, tp);
  }
  return 0;
}
