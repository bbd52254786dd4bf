#include "npp/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npp/rng.hpp"

namespace npp {
namespace {

// Relative slack for comparing a computed maximum with a bound it may attain
// exactly (e.g. |sum of m orthonormal vectors| = sqrt(m)).
constexpr double kSlack = 1e-12;

Matrix columns(const Matrix& M, const std::vector<int>& idx) {
  Matrix out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = M.col(idx[j]);
  return out;
}

double smallest_singular_value(const Matrix& Y) {
  if (Y.cols() == 0) return std::numeric_limits<double>::infinity();
  return sigma_min(Y);
}

int ceil_target(double x) { return std::max(1, static_cast<int>(std::ceil(x - 1e-12))); }

}  // namespace

SubsetSearch largest_feasible_subset(int count, const std::function<bool(const std::vector<int>&)>& feasible,
                                     int at_least, long budget) {
  SubsetSearch best;
  best.indices.clear();
  int best_size = at_least - 1;  // only strictly larger sets are recorded
  std::vector<int> cur;
  long calls = 0;
  bool out_of_budget = false;
  std::function<void(int)> dfs = [&](int next) {
    if (out_of_budget) return;
    if (static_cast<int>(cur.size()) > best_size) {
      best_size = static_cast<int>(cur.size());
      best.indices = cur;
    }
    for (int i = next; i < count; ++i) {
      if (static_cast<int>(cur.size()) + (count - i) <= best_size) return;
      cur.push_back(i);
      if (++calls > budget) {
        out_of_budget = true;
        cur.pop_back();
        return;
      }
      if (feasible(cur)) dfs(i + 1);
      cur.pop_back();
      if (out_of_budget) return;
    }
  };
  dfs(0);
  best.complete = !out_of_budget;
  return best;
}

InvertibleSelection restricted_invertibility(const Matrix& Y, double a_prime, int exhaustive_limit) {
  const int p = static_cast<int>(Y.cols());
  const double theta = a_prime / 8.0;
  InvertibleSelection out;
  std::vector<int> sel;
  std::vector<bool> used(p, false);
  for (;;) {
    int pick = -1;
    double pick_val = -1;
    for (int c = 0; c < p; ++c) {
      if (used[c]) continue;
      std::vector<int> trial = sel;
      trial.push_back(c);
      const double v = smallest_singular_value(columns(Y, trial));
      if (v > pick_val) {
        pick_val = v;
        pick = c;
      }
    }
    if (pick < 0 || pick_val < theta) break;
    sel.push_back(pick);
    used[pick] = true;
  }
  std::sort(sel.begin(), sel.end());
  out.greedy = sel;
  if (p <= exhaustive_limit && static_cast<int>(sel.size()) < p) {
    SubsetSearch s = largest_feasible_subset(
        p, [&](const std::vector<int>& idx) { return smallest_singular_value(columns(Y, idx)) >= theta; },
        static_cast<int>(sel.size()) + 1);
    if (s.indices.size() > sel.size()) sel = s.indices;
  }
  if (sel.empty()) throw ExtractionFailure("restricted invertibility selected no vector");
  out.sigma = sel;
  out.sigma_min = smallest_singular_value(columns(Y, sel));
  return out;
}

Matrix biorthogonal(const Matrix& Y) {
  if (Y.cols() == 0) return Y;
  Eigen::JacobiSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-12 * s(0))) throw InputError("biorthogonal needs linearly independent vectors");
  // Z = Y (Y^T Y)^{-1} = U S^{-1} V^T.
  return svd.matrixU() * s.cwiseInverse().asDiagonal() * svd.matrixV().transpose();
}

TauSelection talagrand_select(const Matrix& Z, const GaugeBody& dual_body, const SignAverage& m1w,
                              int exhaustive_limit) {
  const int s = static_cast<int>(Z.cols());
  TauSelection out;
  out.bound = 4.0 * m1w.m1;
  out.target = std::min(s, ceil_target(s * m1w.m1 / (2.0 * m1w.w)));
  auto feasible = [&](const std::vector<int>& idx) {
    SignSup sup = sign_sup(columns(Z, idx), dual_body, out.bound * (1 + kSlack));
    return !sup.exceeded && sup.value <= out.bound * (1 + kSlack);
  };
  std::vector<double> norms(s);
  for (int i = 0; i < s; ++i) norms[i] = dual_body.gauge(Z.col(i));
  std::vector<int> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return norms[x] > norms[y]; });
  std::vector<int> tau;
  for (int i : order) {
    std::vector<int> trial = tau;
    trial.push_back(i);
    std::sort(trial.begin(), trial.end());
    if (feasible(trial)) tau = trial;
  }
  out.greedy = tau;
  if (s <= exhaustive_limit && static_cast<int>(tau.size()) < s) {
    SubsetSearch search = largest_feasible_subset(s, feasible, static_cast<int>(tau.size()) + 1);
    if (search.indices.size() > tau.size()) tau = search.indices;
  }
  if (static_cast<int>(tau.size()) < out.target)
    throw ExtractionFailure("talagrand_select: no subset of size " + std::to_string(out.target) +
                            " has sign sums below 4 M1");
  out.tau = tau;
  out.certified = sign_sup(columns(Z, tau), dual_body).value;
  return out;
}

BlockingRound james_round(const Matrix& V, const GaugeBody& norm_body, double beta, std::uint64_t seed,
                          Matrix& out) {
  const int N = static_cast<int>(V.cols());
  int m = static_cast<int>(std::sqrt(static_cast<double>(N)));
  while ((m + 1) * (m + 1) <= N) ++m;
  while (m * m > N) --m;
  BlockingRound r;
  r.input = N;
  r.output = m;
  r.threshold = std::sqrt(beta);
  const double limit = r.threshold * (1 + kSlack);
  auto passes = [&](const std::vector<int>& idx) {
    SignSup sup = sign_sup(columns(V, idx), norm_body, limit);
    return !sup.exceeded && sup.value <= limit;
  };
  const int M2 = m * m;
  std::vector<std::vector<int>> candidates;
  for (int i = 0; i + m <= M2; ++i) {
    std::vector<int> w(m);
    std::iota(w.begin(), w.end(), i);
    candidates.push_back(std::move(w));
  }
  Stream st(seed, stream_tag("james"), static_cast<std::uint64_t>(N));
  for (int t = 0; t < 256 && m < M2; ++t) {
    std::vector<int> pool(M2);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < m; ++i) std::swap(pool[i], pool[i + st.below(static_cast<std::uint64_t>(M2 - i))]);
    std::vector<int> pick(pool.begin(), pool.begin() + m);
    std::sort(pick.begin(), pick.end());
    candidates.push_back(std::move(pick));
  }
  for (const auto& c : candidates) {
    if (passes(c)) {
      r.subset_branch = true;
      r.subset = c;
      out = columns(V, c);
      break;
    }
  }
  if (!r.subset_branch) {
    // Every block violates: its worst sign pattern, rescaled, has norm > 1.
    out.resize(V.rows(), m);
    for (int b = 0; b < m; ++b) {
      std::vector<int> block(m);
      std::iota(block.begin(), block.end(), b * m);
      Matrix Vb = columns(V, block);
      SignSup sup = sign_sup(Vb, norm_body);
      Vector sum = Vector::Zero(V.rows());
      for (int i = 0; i < m; ++i) sum += sup.pattern[i] * Vb.col(i);
      out.col(b) = sum / r.threshold;
    }
  }
  r.certified = sign_sup(out, norm_body).value;
  return r;
}

BlockingResult james_blocking(const Matrix& V, const GaugeBody& norm_body, double beta, int rounds,
                              std::uint64_t seed) {
  BlockingResult res;
  res.v = V;
  res.beta = beta;
  res.rounds_requested = rounds;
  double b = beta;
  for (int r = 0; r < rounds; ++r) {
    if (res.v.cols() < 4) {
      res.flagged = true;
      break;
    }
    Matrix next;
    BlockingRound round = james_round(res.v, norm_body, b, derive_seed(seed, stream_tag("james_round"), r), next);
    res.v = std::move(next);
    // The certified value is at most the threshold and is a valid new beta.
    b = std::min(round.threshold, round.certified);
    res.rounds.push_back(round);
  }
  res.omega = res.v.cols() ? sign_sup(res.v, norm_body).value : 0.0;
  return res;
}

double coordinate_functional_norm(const Matrix& Z, int i, const GaugeBody& body) {
  const int l = static_cast<int>(Z.cols());
  Matrix M(Z.rows(), l - 1);
  for (int j = 0, c = 0; j < l; ++j)
    if (j != i) M.col(c++) = Z.col(j);
  const double v = l == 1 ? body.gauge(Z.col(i)) : min_norm_affine(*body.gauge_norm(), Z.col(i), M).value;
  return 1.0 / v;
}

FinalSelection final_select(const Matrix& Zp, const GaugeBody& dual_body, double w_prime, int exhaustive_limit) {
  const int l = static_cast<int>(Zp.cols());
  FinalSelection out;
  out.target = std::min(l, ceil_target(l / (8.0 * w_prime)));
  const double cap = 2.0 * (1 + 1e-9);
  auto norms_of = [&](const std::vector<int>& idx) {
    Matrix Zs = columns(Zp, idx);
    std::vector<double> v(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) v[j] = coordinate_functional_norm(Zs, static_cast<int>(j), dual_body);
    return v;
  };
  auto feasible = [&](const std::vector<int>& idx) {
    for (double v : norms_of(idx))
      if (v > cap) return false;
    return true;
  };
  std::vector<int> sel(l);
  std::iota(sel.begin(), sel.end(), 0);
  for (;;) {
    std::vector<double> v = norms_of(sel);
    auto worst = std::max_element(v.begin(), v.end());
    if (*worst <= cap || sel.size() == 1) break;
    sel.erase(sel.begin() + (worst - v.begin()));
  }
  out.greedy = sel;
  if (l <= exhaustive_limit && static_cast<int>(sel.size()) < l) {
    SubsetSearch s = largest_feasible_subset(l, feasible, static_cast<int>(sel.size()) + 1);
    if (s.indices.size() > sel.size()) sel = s.indices;
  }
  out.functional_norms = norms_of(sel);
  if (static_cast<int>(sel.size()) < out.target || *std::max_element(out.functional_norms.begin(), out.functional_norms.end()) > cap)
    throw ExtractionFailure("final_select: no subset of size " + std::to_string(out.target) +
                            " has coordinate functionals of norm <= 2");
  out.tau_prime = sel;
  return out;
}

ExtractionReport extract_l1(const GaugeBody& body, double a, int k, std::uint64_t seed, const ExtractionParams& params) {
  const int n = body.dim();
  ExtractionReport rep;
  rep.a = a;
  rep.k = k;
  auto check = [&](std::string name, double value, double bound, bool pass, bool required = true) {
    rep.checks.push_back({std::move(name), value, bound, pass, required});
  };

  ChainOptions co;
  co.stop_below = a;
  co.norm_options = params.norm_options;
  rep.chain = greedy_chain(body, k, derive_seed(seed, stream_tag("extract_chain"), 0), co);
  const GreedyChain& ch = rep.chain;
  if (ch.k() < k || ch.a.back() < a) {
    rep.refused = true;
    rep.refusal_index = (ch.k() > 0 && ch.a.back() < a) ? ch.k() - 1 : ch.k();
    rep.refusal_F = ch.F_basis(rep.refusal_index);
    return rep;
  }

  try {
    const GaugeBody dual = body.polar();
    rep.interval = pick_interval(ch.a);
    const double ap = rep.interval.a_prime;
    Matrix X = ch.x.middleCols(rep.interval.first, rep.interval.length);
    Matrix Fb = X;
    for (Eigen::Index j = 0; j < Fb.cols(); ++j) Fb.col(j).normalize();
    Matrix PF = Fb * Fb.transpose();
    Matrix Yt = PF * ch.y.middleCols(rep.interval.first, rep.interval.length);

    InvertibleSelection ri = restricted_invertibility(Yt, ap, params.ri_exhaustive);
    rep.sigma_min = ri.sigma_min;
    for (int i : ri.sigma) rep.sigma.push_back(rep.interval.first + i);
    check("sigma_min >= a'/8", ri.sigma_min, ap / 8, ri.sigma_min >= ap / 8);
    const int s = static_cast<int>(ri.sigma.size());
    Matrix Ysel = columns(Yt, ri.sigma);
    rep.z = biorthogonal(Ysel);
    const double bio = (rep.z.transpose() * Ysel - Matrix::Identity(s, s)).cwiseAbs().maxCoeff();
    check("biorthogonality residual", bio, 1e-8, bio <= 1e-8);
    const double zop = sigma_max(rep.z);
    check("|Z|_2->2 <= 8/a'", zop, 8 / ap, zop <= 8 / ap * (1 + 1e-9));
    double zmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < s; ++j) zmin = std::min(zmin, dual.gauge(rep.z.col(j)));
    check("min |z_j|_{K0 polar} >= 1", zmin, 1.0, zmin >= 1 - 1e-8);

    auto exact = ell_body_exact(dual);
    rep.ell_polar = exact ? *exact : ell_body(dual, params.ell_samples, derive_seed(seed, stream_tag("extract_ell"), 0));
    rep.M = ell_operator(rep.z, dual, params.ell_samples, derive_seed(seed, stream_tag("extract_M"), 0));
    rep.m1w = sign_average(rep.z, dual, 20, params.ell_samples, derive_seed(seed, stream_tag("extract_signs"), 0));
    check("w <= 8 sqrt(s)", rep.m1w.w, 8 * std::sqrt(double(s)), rep.m1w.w <= 8 * std::sqrt(double(s)) * (1 + 1e-9));
    const double m1_bound = 8 / ap * rep.ell_polar.value;
    check("M1 <= (8/a') l(K0 polar)", rep.m1w.m1, m1_bound, rep.m1w.m1 <= m1_bound + 3 * rep.ell_polar.stderr * 8 / ap);
    const double rms = std::sqrt(rep.m1w.second_moment);
    check("M1 <= (E|sum eps z|^2)^1/2 <= M", rms, rep.M.value,
          rep.m1w.m1 <= rms * (1 + 1e-12) && rms <= rep.M.value + 3 * rep.M.stderr, false);
    check("a1/ak <= l(K0 polar)/a", ch.a.front() / ch.a.back(), rep.ell_polar.value / a,
          ch.a.front() / ch.a.back() <= (rep.ell_polar.value + 3 * rep.ell_polar.stderr) / a, false);

    rep.tau = talagrand_select(rep.z, dual, rep.m1w, params.talagrand_exhaustive);
    check("|tau| >= s M1 / 2w", rep.tau.tau.size(), rep.tau.target, int(rep.tau.tau.size()) >= rep.tau.target);
    check("sign sup on tau <= 4 M1", rep.tau.certified, rep.tau.bound, rep.tau.certified <= rep.tau.bound * (1 + kSlack));

    // d = floor(log2 log2 (4 M1)), at least 1, and no more rounds than keep >= 4 inputs.
    const double l2 = std::log2(std::max(1.0, std::log2(4 * rep.m1w.m1)));
    rep.d_formula = std::max(1, static_cast<int>(std::floor(l2)));
    int rounds = 0;
    for (long cnt = static_cast<long>(rep.tau.tau.size()); rounds < rep.d_formula && cnt >= 4; ++rounds)
      cnt = static_cast<long>(std::floor(std::sqrt(static_cast<double>(cnt))));
    Matrix Zt = columns(rep.z, rep.tau.tau);
    rep.blocking = james_blocking(Zt, dual, rep.tau.certified, rounds, derive_seed(seed, stream_tag("extract_james"), 0));
    if (rounds == 0) rep.blocking.flagged = true;
    const BlockingResult& bl = rep.blocking;
    const int l = static_cast<int>(bl.v.cols());
    const int done = static_cast<int>(bl.rounds.size());
    const double omega_cap = std::pow(rep.tau.certified, std::ldexp(1.0, -done));
    check("omega <= beta^(1/2^d)", bl.omega, omega_cap, bl.omega <= omega_cap * (1 + 1e-9));
    check("omega < 4", bl.omega, 4.0, bl.omega < 4.0, false);
    const long len_floor = static_cast<long>(std::floor(std::pow(double(rep.tau.tau.size()), std::ldexp(1.0, -done)) + 1e-9));
    check("l >= floor(|tau|^(1/2^d))", l, double(len_floor), l >= len_floor);
    double vmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < l; ++j) vmin = std::min(vmin, dual.gauge(bl.v.col(j)));
    check("min |z'_i| >= 1", vmin, 1.0, vmin >= 1 - 1e-8);

    rep.w_prime = bl.omega;
    rep.final = final_select(bl.v, dual, rep.w_prime, params.final_exhaustive);
    rep.m = static_cast<int>(rep.final.tau_prime.size());
    check("|tau'| >= l / 8w'", rep.m, rep.final.target, rep.m >= rep.final.target);
    const double fmax = *std::max_element(rep.final.functional_norms.begin(), rep.final.functional_norms.end());
    check("coordinate functional norms <= 2", fmax, 2.0, fmax <= 2.0 * (1 + 1e-9));
    check("m > l/32", rep.m, l / 32.0, rep.m > l / 32.0, false);

    // Dual system: minimal-norm extensions f_i with <f_i, z'_j> = delta_ij.
    const int m = rep.m;
    Matrix Zp = columns(bl.v, rep.final.tau_prime);
    rep.dual_basis = Zp;
    Matrix pinv = biorthogonal(Zp);  // particular solutions
    Matrix kernel = orthogonal_complement(Zp);
    Matrix Phi(n, m);
    for (int i = 0; i < m; ++i)
      Phi.col(i) = kernel.cols() ? min_norm_affine(*body.gauge_norm(), pinv.col(i), kernel).argmin : Vector(pinv.col(i));
    Matrix G = Phi.transpose() * Zp;
    Phi = Phi * G.inverse().transpose();
    rep.basis = Phi;
    rep.Q = Phi * Zp.transpose();
    rep.c_f = 0;
    for (int i = 0; i < m; ++i) rep.c_f = std::max(rep.c_f, body.gauge(Phi.col(i)));
    rep.iso = rep.c_f * bl.omega;
    OperatorNormOptions qo = params.norm_options;
    qo.seed = derive_seed(seed, stream_tag("extract_qnorm"), 0);
    rep.q_norm = operator_norm(rep.Q, body, body, qo);
    const double idem = (rep.Q * rep.Q - rep.Q).cwiseAbs().maxCoeff();
    check("Q idempotent", idem, 1e-8, idem < 1e-8);
    check("|Q : K0 -> K0| <= C", rep.q_norm.value, params.C_report, rep.q_norm.value <= params.C_report);
    check("d(range Q, l1^m) <= C", rep.iso, params.C_report, rep.iso <= params.C_report);

    rep.gamma = 2 * std::log2(32 * rep.ell_polar.value / a);
    rep.k_power = std::pow(static_cast<double>(k), 1 / rep.gamma);
  } catch (const ExtractionFailure& e) {
    rep.failure = e.what();
  }
  rep.passed = rep.failure.empty();
  for (const auto& c : rep.checks)
    if (c.required && !c.pass) rep.passed = false;
  return rep;
}

}  // namespace npp
