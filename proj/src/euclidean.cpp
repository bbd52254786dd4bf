#include "npp/euclidean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "npp/parallel.hpp"
#include "npp/rng.hpp"

namespace npp {
namespace {

struct Probe {
  double value = 0.0;
  Vector c;  // unit coordinates in F
};

// Monotone: the normalised dual direction never lowers a convex gauge.
Probe ascend(const GaugeBody& body, const Matrix& B, Vector c) {
  NormValue nv = body.gauge_eval(B * c);
  for (int it = 0; it < 100; ++it) {
    Vector d = B.transpose() * nv.dual;
    const double len = d.norm();
    if (!(len > 0)) break;
    Vector cn = d / len;
    NormValue next = body.gauge_eval(B * cn);
    if (!(next.value > nv.value * (1 + 1e-14))) break;
    c = std::move(cn);
    nv = std::move(next);
  }
  return {nv.value, c};
}

// Projected subgradient descent on the unit sphere of F with backtracking.
Probe descend(const GaugeBody& body, const Matrix& B, Vector c) {
  NormValue nv = body.gauge_eval(B * c);
  double t = 0.5;
  for (int it = 0; it < 200 && t > 1e-9; ++it) {
    Vector g = B.transpose() * nv.dual;
    Vector tangent = g - g.dot(c) * c;
    const double len = tangent.norm();
    if (len < 1e-13) break;
    Vector cn = c - (t / len) * tangent;
    cn.normalize();
    NormValue next = body.gauge_eval(B * cn);
    if (next.value < nv.value * (1 - 1e-14)) {
      c = std::move(cn);
      nv = std::move(next);
      t = std::min(1.0, 1.5 * t);
    } else {
      t *= 0.5;
    }
  }
  return {nv.value, c};
}

EuclideanRatio from_extremes(double gmax, const Vector& vmax, double gmin, const Vector& vmin, bool exact) {
  EuclideanRatio out;
  out.r = 1.0 / gmax;
  out.R = 1.0 / gmin;
  out.ratio = out.R / out.r;
  out.r_witness = vmax;
  out.R_witness = vmin;
  out.exact = exact;
  return out;
}

}  // namespace

EuclideanRatio euclidean_ratio(const GaugeBody& body, const Subspace& F, int directions, std::uint64_t seed,
                               int refinements) {
  if (F.dim() < 1) throw InputError("euclidean_ratio needs dim F >= 1");
  if (F.ambient_dim() != body.dim()) throw InputError("subspace and body dimensions differ");
  const Matrix& B = F.basis();
  const int m = F.dim();
  if (m == 1) {
    Vector v = B.col(0);
    const double g = body.gauge(v);
    return from_extremes(g, v, g, v, true);
  }
  if (const Matrix* L = body.gauge_norm()->ellipse_map()) {
    Eigen::JacobiSVD<Matrix> svd(*L * B, Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    return from_extremes(s(0), B * svd.matrixV().col(0), s(m - 1), B * svd.matrixV().col(m - 1), true);
  }

  Matrix C = gaussian_columns(m, 0, std::max(1, directions), seed, stream_tag("section_dirs"));
  for (Eigen::Index j = 0; j < C.cols(); ++j) C.col(j).normalize();
  Vector vals;
  body.gauge_norm()->evaluate_columns(B * C, vals, nullptr);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals(a) < vals(b); });

  const int k = std::min<int>(std::max(1, refinements), static_cast<int>(order.size()));
  std::vector<Probe> lows(k), highs(k);
  parallel_for(static_cast<std::size_t>(2 * k), [&](std::size_t i) {
    if (static_cast<int>(i) < k)
      lows[i] = descend(body, B, C.col(order[i]));
    else
      highs[i - k] = ascend(body, B, C.col(order[order.size() - 1 - (i - k)]));
  });
  auto lo = std::min_element(lows.begin(), lows.end(), [](const Probe& a, const Probe& b) { return a.value < b.value; });
  auto hi = std::max_element(highs.begin(), highs.end(), [](const Probe& a, const Probe& b) { return a.value < b.value; });
  return from_extremes(hi->value, B * hi->c, lo->value, B * lo->c, false);
}

int dvoretzky_dimension(double ell, double radius_bound, double c_desk, int ambient) {
  if (!(c_desk > 0)) throw InputError("c_desk must be positive");
  if (!(radius_bound > 0)) throw InputError("radius bound must be positive");
  const double x = c_desk * ell / radius_bound;
  // The relative slack keeps exact squares such as (sqrt(32)/4)^2 = 2 intact.
  const double m = std::floor(x * x * (1 + 1e-12));
  if (m < 1) return 0;
  return static_cast<int>(std::min<double>(m, ambient));
}

int dvoretzky_dimension(const GaugeBody& body, double radius_bound, double c_desk, long samples,
                        std::uint64_t seed) {
  auto exact = ell_body_exact(body);
  const double ell = exact ? exact->value : ell_body(body, samples, seed).value;
  return dvoretzky_dimension(ell, radius_bound, c_desk, body.dim());
}

SectionReport find_euclidean_complement(const GaugeBody& K1, const GaugeBody& K2, int m, int trials,
                                        std::uint64_t seed, const SectionOptions& options) {
  const int n = K1.dim();
  if (K2.dim() != n) throw InputError("K1 and K2 must have the same dimension");
  if (m < 1 || m > n) throw InputError("section dimension must satisfy 1 <= m <= n");
  if (trials < 1) throw InputError("at least one trial is required");

  SectionReport rep;
  const Matrix I = Matrix::Identity(n, n);
  const GaugeBody B2 = GaugeBody::ball(n);
  OperatorNormOptions nopt = options.norm_options;
  nopt.seed = derive_seed(seed, stream_tag("section_radii"), 0);
  rep.alpha = operator_norm(I, K1, B2, nopt).value;
  rep.beta = operator_norm(I, B2, K2, nopt).value;

  const GaugeBody K1polar = K1.polar();
  auto ell = [&](const GaugeBody& K, std::uint64_t tag) {
    if (auto e = ell_body_exact(K)) return *e;
    return ell_body(K, options.ell_samples, derive_seed(seed, tag, 0));
  };
  rep.ell_k1polar = ell(K1polar, stream_tag("section_ell_k1polar"));
  rep.ell_k2 = ell(K2, stream_tag("section_ell_k2"));
  rep.bound = rep.ell_k1polar.value * rep.ell_k2.value / n;

  struct Outcome {
    Subspace F = Subspace::full(1);
    EuclideanRatio er;
    NormEstimate pf;
  };
  std::vector<Outcome> out(static_cast<std::size_t>(trials));
  rep.trial_rows.resize(out.size());
  parallel_for(out.size(), [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, stream_tag("section_trial"), i);
    Outcome& o = out[i];
    o.F = haar_subspace(n, m, s);
    o.er = euclidean_ratio(K2, o.F, options.directions, s, options.refinements);
    OperatorNormOptions po = options.norm_options;
    po.seed = s;
    o.pf = operator_norm(o.F.projector(), K1, K2, po);
    rep.trial_rows[i] = {s, m, o.er.r, o.er.R, o.er.ratio, o.pf.value};
  });

  int good = 0;
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double score = std::max(out[i].er.ratio, out[i].pf.value / rep.bound);
    if (score < best_score) {
      best_score = score;
      best = i;
    }
    if (out[i].er.ratio <= options.ratio_cap && out[i].pf.value <= options.C_desk * rep.bound) ++good;
  }
  Outcome& o = out[best];
  rep.F = o.F;
  rep.r = o.er.r;
  rep.R = o.er.R;
  rep.ratio = o.er.ratio;
  rep.r_witness = o.er.r_witness;
  rep.R_witness = o.er.R_witness;
  rep.pf_norm = o.pf;
  rep.trials = trials;
  rep.chosen = static_cast<int>(best);
  rep.fraction_good = static_cast<double>(good) / trials;
  rep.ratio_cap = options.ratio_cap;
  rep.C_desk = options.C_desk;
  rep.c_desk = options.c_desk;
  return rep;
}

}  // namespace npp
