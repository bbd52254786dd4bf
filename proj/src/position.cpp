#include "npp/position.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "npp/lbfgs.hpp"
#include "npp/rng.hpp"

namespace npp {
namespace {

struct Evaluation {
  std::array<double, kBatches> h2{}, s2{};  // batch means of gauge^2 and support^2
  double h2_mean = 0.0, s2_mean = 0.0;
  Matrix gradient;  // d log(product) / du, u symmetric

  double product() const { return std::sqrt(h2_mean * s2_mean); }
  double batch_product(int b) const { return std::sqrt(h2[b] * s2[b]); }
};

double batch_stderr(const std::array<double, kBatches>& v, double mean) {
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / (static_cast<double>(kBatches) * (kBatches - 1)));
}

// LP warm starts for the two norms, one basis per sample column.
struct Caches {
  BasisCache gauge, support;
};

Evaluation evaluate(const GaugeBody& body, const Matrix& u, const Matrix& uinv, const Matrix& G, bool gradient,
                    Caches& caches) {
  const Eigen::Index S = G.cols();
  Matrix X = uinv * G, Y = u * G;
  Vector h, sig;
  Matrix Psi, Pts;
  body.gauge_norm()->evaluate_columns_warm(X, h, gradient ? &Psi : nullptr, caches.gauge);
  body.support_norm()->evaluate_columns_warm(Y, sig, gradient ? &Pts : nullptr, caches.support);
  Evaluation ev;
  for (int b = 0; b < kBatches; ++b) {
    const Eigen::Index lo = S * b / kBatches, hi = S * (b + 1) / kBatches;
    double a = 0, c = 0;
    for (Eigen::Index j = lo; j < hi; ++j) {
      a += h(j) * h(j);
      c += sig(j) * sig(j);
    }
    ev.h2[b] = a / static_cast<double>(hi - lo);
    ev.s2[b] = c / static_cast<double>(hi - lo);
    ev.h2_mean += a;
    ev.s2_mean += c;
  }
  ev.h2_mean /= static_cast<double>(S);
  ev.s2_mean /= static_cast<double>(S);
  if (gradient) {
    const double inv = 1.0 / static_cast<double>(S);
    Matrix Gm = -inv / ev.h2_mean * ((uinv * Psi) * h.asDiagonal() * X.transpose()) +
                inv / ev.s2_mean * (Pts * sig.asDiagonal() * G.transpose());
    ev.gradient = 0.5 * (Gm + Gm.transpose());
  }
  return ev;
}

PositionResult finish(const Evaluation& ev, const Matrix& u, int n, long samples, std::uint64_t seed) {
  PositionResult r;
  const double l = std::sqrt(ev.h2_mean), lp = std::sqrt(ev.s2_mean);
  const double t = std::sqrt(l / lp);
  r.map = t * u;
  auto make = [&](double value, double se_sq) {
    EllEstimate e;
    e.value = value;
    e.stderr = value > 0 ? se_sq / (2.0 * value) : 0.0;
    e.samples = samples;
    e.seed = seed;
    return e;
  };
  r.ell_k = make(l / t, batch_stderr(ev.h2, ev.h2_mean) / (t * t));
  r.ell_kpolar = make(lp * t, batch_stderr(ev.s2, ev.s2_mean) * t * t);
  r.product = ev.product();
  std::array<double, kBatches> prod{};
  for (int b = 0; b < kBatches; ++b) prod[b] = ev.batch_product(b);
  r.product_stderr = batch_stderr(prod, r.product);
  r.target = n * (1.0 + std::log(static_cast<double>(n)));
  r.balanced = true;
  return r;
}

Matrix sample_matrix(int n, long samples, std::uint64_t seed) {
  if (samples < 100) throw InputError("at least 100 samples are required");
  return gaussian_columns(n, 0, samples, seed, stream_tag("position"));
}

}  // namespace

PositionResult balance_scale(const GaugeBody& body, long samples, std::uint64_t seed) {
  const int n = body.dim();
  Matrix I = Matrix::Identity(n, n);
  Caches caches;
  Evaluation ev = evaluate(body, I, I, sample_matrix(n, samples, seed), false, caches);
  PositionResult r = finish(ev, I, n, samples, seed);
  r.start_product = r.product;
  return r;
}

PositionResult optimize_position(const GaugeBody& body, int budget, long samples, std::uint64_t seed) {
  if (budget < 1) throw InputError("position budget must be at least 1");
  const int n = body.dim();
  const Matrix G = sample_matrix(n, samples, seed);
  const Matrix I = Matrix::Identity(n, n);
  Caches caches;
  const Evaluation first = evaluate(body, I, I, G, false, caches);

  // u = exp(S) with S symmetric. The sample set is fixed, so the objective
  // log l(uK) + log l((uK) polar) is deterministic and quasi-Newton applies.
  auto objective = [&](const Vector& x, Vector& grad) -> double {
    Matrix S = Eigen::Map<const Matrix>(x.data(), n, n);
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    const Vector lam = es.eigenvalues();
    grad = Vector::Zero(x.size());
    if (lam.cwiseAbs().maxCoeff() > 30.0) return std::numeric_limits<double>::infinity();
    const Matrix& Q = es.eigenvectors();
    const Matrix u = Q * lam.array().exp().matrix().asDiagonal() * Q.transpose();
    const Matrix uinv = Q * (-lam.array()).exp().matrix().asDiagonal() * Q.transpose();
    Evaluation ev = evaluate(body, u, uinv, G, true, caches);
    // Chain rule through the symmetric exponential (divided differences).
    Matrix W = Q.transpose() * ev.gradient * Q;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = lam(i) - lam(j);
        W(i, j) *= std::abs(d) > 1e-12 ? (std::exp(lam(i)) - std::exp(lam(j))) / d : std::exp(0.5 * (lam(i) + lam(j)));
      }
    Matrix dS = Q * W * Q.transpose();
    grad = Eigen::Map<const Vector>(dS.data(), dS.size());
    return 0.5 * (std::log(ev.h2_mean) + std::log(ev.s2_mean));
  };
  LbfgsResult opt = minimize_lbfgs(objective, Vector::Zero(n * n), budget, 1e-8);

  Matrix S = Eigen::Map<const Matrix>(opt.x.data(), n, n);
  Matrix u = sym_expm(0.5 * (S + S.transpose())), uinv = sym_expm(-0.5 * (S + S.transpose()));
  Evaluation last = evaluate(body, u, uinv, G, false, caches);
  std::array<double, kBatches> diff{};
  double mean = 0.0;
  for (int b = 0; b < kBatches; ++b) {
    diff[b] = first.batch_product(b) - last.batch_product(b);
    mean += diff[b];
  }
  mean /= kBatches;
  const double gain = first.product() - last.product();
  if (!(gain > 0 && gain >= 3.0 * batch_stderr(diff, mean))) {
    u = I;
    uinv = I;
  }
  // Report on fresh samples; the optimisation samples are biased toward u.
  const Matrix fresh = gaussian_columns(n, 0, samples, seed, stream_tag("position_check"));
  Caches fresh_caches;
  PositionResult r = finish(evaluate(body, u, uinv, fresh, false, fresh_caches), u, n, samples, seed);
  r.start_product = evaluate(body, I, I, fresh, false, fresh_caches).product();
  r.iterations = opt.converged ? opt.iterations : budget;
  return r;
}

}  // namespace npp
