#include "fairegm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fairegm/losses.hpp"
#include "fairegm/parallel.hpp"

namespace fairegm {

double EdgeClassifier::score(const double* features) const {
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[j];
  return stable_sigmoid(z);
}

DenseMatrix edge_features(const Embeddings& emb, const std::vector<Edge>& edges) {
  const DenseMatrix& phi = emb.phi;
  const int d = phi.cols();
  DenseMatrix out(int(edges.size()), d);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.u < 0 || e.v < 0 || e.u >= phi.rows() || e.v >= phi.rows())
      throw std::invalid_argument("edge_features: endpoint out of range");
    const double* pu = phi.row(e.u);
    const double* pv = phi.row(e.v);
    double* r = out.row(int(i));
    for (int j = 0; j < d; ++j) r[j] = pu[j] * pv[j];
  }
  return out;
}

EdgeClassifier fit_classifier(const DenseMatrix& features, const std::vector<int>& labels,
                              Rng& rng, int iters, double lr) {
  const int n = features.rows(), d = features.cols();
  if (int(labels.size()) != n)
    throw std::invalid_argument("fit_classifier: label count mismatch");
  if (iters < 1) throw std::invalid_argument("fit_classifier: iters must be >= 1");
  int positives = 0;
  for (int y : labels) positives += y != 0;
  if (positives == 0 || positives == n)
    throw std::invalid_argument("fit_classifier: both classes must be present");

  // column standardization (folded back into the weights afterwards)
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mu[j] += features(i, j);
  for (int j = 0; j < d; ++j) mu[j] /= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double c = features(i, j) - mu[j];
      sd[j] += c * c;
    }
  for (int j = 0; j < d; ++j) {
    sd[j] = std::sqrt(sd[j] / n);
    if (sd[j] == 0.0) sd[j] = 1.0;  // constant column
  }

  std::vector<double> w(d);
  for (int j = 0; j < d; ++j) w[j] = 0.01 * rng.normal();
  double b = 0.0;

  std::vector<double> gw(d);
  for (int it = 0; it < iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = b;
      for (int j = 0; j < d; ++j) z += w[j] * (features(i, j) - mu[j]) / sd[j];
      const double r = stable_sigmoid(z) - double(labels[i]);
      for (int j = 0; j < d; ++j) gw[j] += r * (features(i, j) - mu[j]) / sd[j];
      gb += r;
    }
    for (int j = 0; j < d; ++j) w[j] -= lr * gw[j] / n;
    b -= lr * gb / n;
  }

  EdgeClassifier clf;
  clf.weights.resize(d);
  clf.bias = b;
  for (int j = 0; j < d; ++j) {
    clf.weights[j] = w[j] / sd[j];
    clf.bias -= w[j] * mu[j] / sd[j];
  }
  return clf;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("auroc: size mismatch or empty input");
  const int n = int(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });
  // midranks over tie groups
  std::vector<double> rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * double(i + 1 + j);  // average of ranks i+1 .. j
    for (int t = i; t < j; ++t) rank[order[t]] = mid;
    i = j;
  }
  long long npos = 0;
  double rank_sum = 0.0;
  for (int t = 0; t < n; ++t)
    if (labels[t] != 0) {
      ++npos;
      rank_sum += rank[t];
    }
  const long long nneg = n - npos;
  if (npos == 0 || nneg == 0)
    throw std::invalid_argument("auroc: both classes must be present");
  return (rank_sum - 0.5 * double(npos) * double(npos + 1)) / (double(npos) * double(nneg));
}

double f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("f1: size mismatch or empty input");
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > threshold;
    const bool pos = labels[i] != 0;
    tp += pred && pos;
    fp += pred && !pos;
    fn += !pred && pos;
  }
  if (tp == 0) return 0.0;
  const double precision = double(tp) / double(tp + fp);
  const double recall = double(tp) / double(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double dp_at_k(const Embeddings& emb, const Graph& g, int k) {
  const int n = g.n;
  if (k < 1 || k >= n) throw std::invalid_argument("dp_at_k: k must satisfy 1 <= k < n");
  const int kg = g.num_groups();
  const std::vector<double> ps = sensitive_distribution(g);
  const std::vector<int> group = g.group_ids();
  const DenseMatrix& phi = emb.phi;
  const int d = phi.cols();

  std::vector<double> node_kl(n, 0.0);
  parallel_for(0, n, [&](int u) {
    const double* pu = phi.row(u);
    std::vector<double> score(n);
    for (int v = 0; v < n; ++v) {
      const double* pv = phi.row(v);
      double z = 0.0;
      for (int j = 0; j < d; ++j) z += pu[j] * pv[j];
      score[v] = stable_sigmoid(z);
    }
    std::vector<int> cand;
    cand.reserve(n - 1);
    for (int v = 0; v < n; ++v)
      if (v != u) cand.push_back(v);
    auto better = [&](int a, int b) {
      return score[a] != score[b] ? score[a] > score[b] : a < b;
    };
    std::nth_element(cand.begin(), cand.begin() + k, cand.end(), better);
    std::vector<double> counts(kg, 0.0);
    for (int t = 0; t < k; ++t) counts[group[cand[t]]] += 1.0;
    const double denom = double(k) + kg * kDpSmoothing;
    double kl = 0.0;
    for (int j = 0; j < kg; ++j) {
      if (ps[j] <= 0.0) continue;
      const double pi = (counts[j] + kDpSmoothing) / denom;
      kl += ps[j] * std::log(ps[j] / pi);
    }
    node_kl[u] = kl;
  });

  double total = 0.0;
  for (int u = 0; u < n; ++u) total += node_kl[u];
  return total / double(n);
}

SummaryRecord summarize(const std::vector<MetricsRecord>& records) {
  if (records.size() < 2)
    throw std::invalid_argument("summarize: need at least 2 records");
  auto stat = [&](auto getter) {
    MeanStd s;
    for (const auto& r : records) s.mean += getter(r);
    s.mean /= double(records.size());
    double acc = 0.0;
    for (const auto& r : records) {
      const double d = getter(r) - s.mean;
      acc += d * d;
    }
    s.std = std::sqrt(acc / double(records.size() - 1));
    return s;
  };
  SummaryRecord out;
  out.l_r = stat([](const MetricsRecord& r) { return r.l_r; });
  out.l_d_sum = stat([](const MetricsRecord& r) { return r.l_d_sum; });
  out.l_d_mean = stat([](const MetricsRecord& r) { return r.l_d_mean; });
  out.auroc = stat([](const MetricsRecord& r) { return r.auroc; });
  out.f1 = stat([](const MetricsRecord& r) { return r.f1; });
  for (const auto& [k, unused] : records.front().dp) {
    (void)unused;
    out.dp[k] = stat([k = k](const MetricsRecord& r) { return r.dp.at(k); });
  }
  return out;
}

MetricsRecord evaluate_run(const Graph& train, const std::vector<Edge>& test_pos,
                           const Embeddings& emb, std::uint64_t seed, const EvalOptions& opts) {
  MetricsRecord rec;
  rec.seed = seed;
  rec.l_r = reconstruction_loss(emb.phi, train, pos_weight(train));
  const LinkDivergence ld = link_divergence(emb.phi, train);
  rec.l_d_sum = ld.sum;
  rec.l_d_mean = ld.mean;

  Rng rng = Rng::derive(seed, /*eval stream*/ 2);
  // classifier trained on all train edges plus an equal number of sampled
  // non-edges; both samplers exclude the held-out positives
  const std::vector<Edge>& pos_train = train.edges;
  const std::vector<Edge> neg_train =
      sample_negative_edges(train, int(pos_train.size()), rng, test_pos);
  std::vector<Edge> clf_edges = pos_train;
  clf_edges.insert(clf_edges.end(), neg_train.begin(), neg_train.end());
  std::vector<int> clf_labels(pos_train.size(), 1);
  clf_labels.resize(clf_edges.size(), 0);
  const DenseMatrix clf_features = edge_features(emb, clf_edges);
  const EdgeClassifier clf =
      fit_classifier(clf_features, clf_labels, rng, opts.classifier_iters, opts.classifier_lr);

  if (!test_pos.empty()) {
    const std::vector<Edge> neg_test =
        sample_negative_edges(train, int(test_pos.size()), rng, test_pos);
    std::vector<Edge> eval_edges = test_pos;
    eval_edges.insert(eval_edges.end(), neg_test.begin(), neg_test.end());
    std::vector<int> eval_labels(test_pos.size(), 1);
    eval_labels.resize(eval_edges.size(), 0);
    const DenseMatrix eval_features = edge_features(emb, eval_edges);
    std::vector<double> scores(eval_edges.size());
    for (std::size_t i = 0; i < eval_edges.size(); ++i)
      scores[i] = clf.score(eval_features.row(int(i)));
    rec.auroc = auroc(scores, eval_labels);
    rec.f1 = f1(scores, eval_labels);
  } else {
    rec.auroc = std::nan("");
    rec.f1 = std::nan("");
  }

  for (int k : opts.k_list) rec.dp[k] = dp_at_k(emb, train, k);
  return rec;
}

}  // namespace fairegm
