#include "npp/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace npp {

LbfgsResult minimize_lbfgs(const Objective& fg, Vector x, int max_iter, double gtol) {
  const int memory = 8;
  LbfgsResult out;
  Vector g(x.size());
  double f = fg(x, g);
  std::deque<Vector> S, Y;
  std::deque<double> rho;
  int stalls = 0;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= gtol * std::max(1.0, std::abs(f))) {
      out.converged = true;
      break;
    }
    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    double gamma = S.empty() ? 1.0 / std::max(1e-300, g.norm()) : S.back().dot(Y.back()) / Y.back().squaredNorm();
    Vector d = gamma * q;
    for (std::size_t i = 0; i < S.size(); ++i) {
      double beta = rho[i] * Y[i].dot(d);
      d += S[i] * (alpha[i] - beta);
    }
    d = -d;
    double slope = g.dot(d);
    if (slope >= 0) {
      d = -g * (1.0 / std::max(1e-300, g.norm()));
      slope = g.dot(d);
      S.clear();
      Y.clear();
      rho.clear();
    }
    double t = 1.0;
    Vector xn(x.size()), gn(x.size());
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * d;
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.converged = true;  // no further decrease representable
      break;
    }
    Vector s = xn - x, y = gn - g;
    double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    double decrease = f - fn;
    x = xn;
    g = gn;
    f = fn;
    stalls = decrease <= 1e-15 * std::max(1.0, std::abs(f)) ? stalls + 1 : 0;
    if (stalls >= 3) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.f = f;
  return out;
}

}  // namespace npp
