#include "npp/chain.hpp"

#include <algorithm>

#include "npp/rng.hpp"

namespace npp {

Matrix GreedyChain::F_basis(int j) const {
  const Eigen::Index n = u.rows();
  if (j == 0) return Matrix::Identity(n, n);
  return orthogonal_complement(u.leftCols(j));
}

GreedyChain greedy_chain(const GaugeBody& body, int k, std::uint64_t seed, const ChainOptions& options) {
  const int n = body.dim();
  if (k < 1 || k > n) throw InputError("greedy_chain needs 1 <= k <= n");
  const GaugeBody B2 = GaugeBody::ball(n);
  GreedyChain c;
  c.x.resize(n, 0);
  c.y.resize(n, 0);
  c.u.resize(n, 0);
  std::vector<Vector> extra;  // later witnesses that beat an earlier step
  int retries = 0;
  auto pop = [&] {
    const Eigen::Index j = c.x.cols() - 1;
    c.x.conservativeResize(n, j);
    c.y.conservativeResize(n, j);
    c.u.conservativeResize(n, j);
    c.a.pop_back();
    c.kinds.pop_back();
  };
  while (c.k() < k) {
    const int j = c.k();
    Matrix P = Matrix::Identity(n, n) - c.u * c.u.transpose();
    OperatorNormOptions o = options.norm_options;
    o.seed = derive_seed(seed, stream_tag("chain"), static_cast<std::uint64_t>(j));
    o.starts.insert(o.starts.end(), extra.begin(), extra.end());
    NormEstimate e = operator_norm(P, body, B2, o);
    const double g = body.gauge(e.witness);
    if (!(g > 0)) break;
    Vector y = e.witness / g;
    Vector x = P * y;
    const double aj = x.norm();
    // A witness for F_j is also one for F_{j-1}; a larger value means that
    // earlier step was underestimated, so redo it with this start.
    if (j > 0 && aj > c.a.back() * (1 + 1e-9) && retries < 2 * k) {
      extra.push_back(y);
      ++retries;
      pop();
      continue;
    }
    if (aj < 1e-10) break;
    c.x.conservativeResize(n, j + 1);
    c.y.conservativeResize(n, j + 1);
    c.u.conservativeResize(n, j + 1);
    c.x.col(j) = x;
    c.y.col(j) = y;
    c.u.col(j) = x / aj;
    c.a.push_back(aj);
    c.kinds.push_back(e.kind);
    if (aj < options.stop_below) break;
  }
  return c;
}

Interval pick_interval(const std::vector<double>& a) {
  if (a.empty()) throw InputError("pick_interval needs a nonempty chain");
  Interval best;
  const int k = static_cast<int>(a.size());
  for (int i = 0; i < k; ++i) {
    double hi = a[i], lo = a[i];
    int len = 0;
    for (int j = i; j < k; ++j) {
      hi = std::max(hi, a[j]);
      lo = std::min(lo, a[j]);
      if (hi > 2 * lo) break;
      len = j - i + 1;
    }
    if (len > best.length) best = {i, len, a[i]};
  }
  return best;
}

}  // namespace npp
