#include "npp/operator_norm.hpp"

#include <algorithm>
#include <cmath>

#include "npp/parallel.hpp"
#include "npp/rng.hpp"

namespace npp {

std::string to_string(EstimateKind kind) { return kind == EstimateKind::exact ? "exact" : "lower-witness"; }

namespace {

struct Candidate {
  double value = -1.0;
  Vector point;
};

// Max over columns of f(col), chunked for deterministic parallel reduction.
template <class F>
Candidate max_over_columns(const Matrix& V, F&& f) {
  const Eigen::Index count = V.cols();
  const Eigen::Index chunk = 64;
  const std::size_t chunks = static_cast<std::size_t>((count + chunk - 1) / chunk);
  std::vector<Candidate> best(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const Eigen::Index lo = static_cast<Eigen::Index>(c) * chunk, hi = std::min(count, lo + chunk);
    for (Eigen::Index j = lo; j < hi; ++j) {
      double v = f(j);
      if (v > best[c].value) {
        best[c].value = v;
        best[c].point = V.col(j);
      }
    }
  });
  Candidate out;
  for (auto& b : best)
    if (b.value > out.value) out = b;
  return out;
}

}  // namespace

NormEstimate operator_norm(const Matrix& T, const GaugeBody& from, const GaugeBody& to,
                           const OperatorNormOptions& opt) {
  if (T.rows() != to.dim() || T.cols() != from.dim()) throw InputError("operator dimension mismatch");
  NormEstimate est;
  const int n = from.dim();

  if (from.same_as(to) && T.rows() == T.cols() && T == Matrix::Identity(n, n)) {
    est.value = 1.0;
    Vector e = Vector::Unit(n, 0);
    est.witness = e / from.gauge(e);
    return est;
  }
  if (T.cwiseAbs().maxCoeff() == 0.0) {
    est.value = 0.0;
    est.witness = Vector::Unit(n, 0);
    return est;
  }

  // Ellipsoid to ellipsoid: top singular value.
  const Matrix* L2 = to.gauge_norm()->ellipse_map();
  auto E1 = from.ellipsoid_map();
  if (L2 && E1) {
    Matrix C = (*L2) * T * (*E1);
    Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinV);
    est.value = svd.singularValues()(0);
    est.witness = (*E1) * svd.matrixV().col(0);
    return est;
  }

  // Extreme points of the source.
  if (auto V = from.vertices(opt.vertex_limit)) {
    const Matrix TV = T * (*V);
    Candidate c = max_over_columns(*V, [&](Eigen::Index j) { return to.gauge(TV.col(j)); });
    est.value = c.value;
    est.witness = c.point;
    return est;
  }

  // Extreme points of the target's polar: |T| = max_w support_from(T^T w).
  if (auto W = to.polar().vertices(opt.vertex_limit)) {
    const Matrix TW = T.transpose() * (*W);
    Candidate c = max_over_columns(TW, [&](Eigen::Index j) { return from.support(TW.col(j)); });
    est.value = c.value;
    est.witness = from.support_eval(c.point).dual;
    return est;
  }

  // Multistart alternating ascent (lower bound).
  const int extra = static_cast<int>(opt.starts.size());
  const int total = extra + std::max(1, opt.restarts);
  std::vector<Candidate> results(static_cast<std::size_t>(total));
  Eigen::JacobiSVD<Matrix> svd(T, Eigen::ComputeThinV);
  const Vector top = svd.matrixV().col(0);
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t r) {
    Vector x;
    if (static_cast<int>(r) < extra) {
      x = opt.starts[r];
    } else if (static_cast<int>(r) == extra) {
      x = top;
    } else {
      Stream s(opt.seed, stream_tag("operator_norm"), r);
      Vector phi(n);
      for (int i = 0; i < n; ++i) phi(i) = s.normal();
      x = from.support_eval(phi).dual;
    }
    double gx = from.gauge(x);
    if (!(gx > 0) || !std::isfinite(gx)) return;
    x /= gx;
    NormValue cur = to.gauge_eval(T * x);
    for (int it = 0; it < opt.max_iterations; ++it) {
      Vector phi = T.transpose() * cur.dual;
      if (phi.cwiseAbs().maxCoeff() == 0.0) break;
      Vector xn = from.support_eval(phi).dual;
      NormValue next = to.gauge_eval(T * xn);
      if (!(next.value > cur.value * (1.0 + 1e-12))) break;
      x = xn;
      cur = next;
    }
    results[r].value = to.gauge(T * x) / from.gauge(x);
    results[r].point = x;
  });
  Candidate best;
  for (auto& c : results)
    if (c.value > best.value) best = c;
  est.kind = EstimateKind::lower_witness;
  est.value = std::max(0.0, best.value);
  est.witness = best.point;
  est.restarts = total;
  return est;
}

ProjectionRecord projection_constant_record(const GaugeBody& body, int k, std::uint64_t seed) {
  const int n = body.dim();
  if (k < 1 || k > n) throw InputError("k must lie in [1, n]");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Stream s(seed, stream_tag("projection_record"), static_cast<std::uint64_t>(k));
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[s.below(static_cast<std::uint64_t>(i) + 1)]);
  ProjectionRecord rec;
  rec.k = k;
  rec.coordinates.assign(perm.begin(), perm.begin() + k);
  std::sort(rec.coordinates.begin(), rec.coordinates.end());
  Matrix P = Matrix::Zero(n, n);
  for (int i : rec.coordinates) P(i, i) = 1.0;
  OperatorNormOptions opt;
  opt.seed = seed;
  opt.restarts = 16;
  rec.norm = operator_norm(P, body, body, opt).value;
  rec.bound = std::sqrt(static_cast<double>(k));
  rec.satisfied = rec.norm <= rec.bound * (1.0 + 1e-12);
  return rec;
}

}  // namespace npp
