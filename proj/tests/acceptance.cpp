// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "npp/driver.hpp"
#include "npp/euclidean.hpp"
#include "npp/extraction.hpp"
#include "npp/gaussian.hpp"
#include "npp/operator_norm.hpp"
#include "npp/parallel.hpp"
#include "npp/position.hpp"
#include "oracles.hpp"

using namespace npp;
using namespace npp::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      else detail.str("");
      pass = false;
      detail << what;
    }
  }
};

bool report(int id, Outcome& o, const std::string& summary) {
  std::printf("criterion %d: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", o.pass ? summary.c_str() : o.detail.str().c_str());
  std::fflush(stdout);
  return o.pass;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Matrix unit_columns(Matrix Z, const GaugeBody& body) {
  for (Eigen::Index j = 0; j < Z.cols(); ++j) Z.col(j) /= body.gauge(Z.col(j));
  return Z;
}

// Random columns in R^dim with lengths in [a'/2, a'].
Matrix random_tilde_y(int dim, int count, double ap, std::uint64_t seed) {
  Matrix Y = gaussian_matrix(dim, count, seed, 0);
  Stream st(seed, stream_tag("lengths"), 0);
  for (int j = 0; j < count; ++j) Y.col(j) *= ap * (0.5 + 0.5 * st.uniform()) / Y.col(j).norm();
  return Y;
}

bool criterion1() {
  Outcome o;
  double slowest = 0;
  for (int n : {4, 16, 64}) {
    auto t0 = Clock::now();
    const EllEstimate e = ell_body(GaugeBody::ball(n), 100000, 10 + n);
    slowest = std::max(slowest, seconds_since(t0));
    o.require(std::abs(e.value - std::sqrt(n)) <= 3 * e.stderr,
              "l(B2^" + std::to_string(n) + ") = " + fmt(e.value) + " +- " + fmt(e.stderr));

    t0 = Clock::now();
    const EllEstimate f = ell_body(GaugeBody::lq(n, 1.0), 100000, 20 + n);
    slowest = std::max(slowest, seconds_since(t0));
    const double exact = n + n * (n - 1) * (2 / std::numbers::pi);
    // The square has standard error 2 l stderr(l).
    o.require(std::abs(f.value * f.value - exact) <= 3 * 2 * f.value * f.stderr,
              "l(B1^" + std::to_string(n) + ")^2 = " + fmt(f.value * f.value) + " vs " + fmt(exact));
  }
  o.require(slowest < 10, "slowest estimate took " + fmt(slowest) + " s");
  return report(1, o, "B2 and B1 anchors within 3 stderr, slowest " + fmt(slowest) + " s");
}

bool criterion2() {
  Outcome o;
  std::vector<Named> corpus;
  for (int n : {8, 16, 32})
    for (double q : {1.0, 1.5, 2.0, 4.0, inf()})
      corpus.push_back({"l" + fmt(q) + "^" + std::to_string(n), GaugeBody::lq(n, q)});
  for (int s = 0; s < 5; ++s) corpus.push_back({"polytope" + std::to_string(s), random_polytope(8, 32, 200 + s)});
  for (int s = 0; s < 3; ++s)
    corpus.push_back({"image" + std::to_string(s),
                      GaugeBody::linear_image(gaussian_matrix(16, 16, 300 + s, 0), GaugeBody::ball(16))});
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const GaugeBody& K = corpus[i].body;
    const int n = K.dim();
    const EllEstimate a = ell_body(K, 20000, 400 + i);
    const EllEstimate b = ell_body(K.polar(), 20000, 500 + i);
    const double prod = a.value * b.value;
    const double rel = std::hypot(a.stderr / a.value, b.stderr / b.value);
    worst = std::min(worst, prod / n);
    o.require(prod >= n * (1 - 3 * rel), corpus[i].name + ": product " + fmt(prod) + " < n");
  }
  return report(2, o, std::to_string(corpus.size()) + " bodies, min product/n = " + fmt(worst));
}

bool criterion3() {
  Outcome o;
  const int n = 16;
  double worst = 0, slowest = 0;
  for (int t = 0; t < 10; ++t) {
    const Matrix v = gaussian_matrix(n, n, 600 + t, 0);
    const GaugeBody K = GaugeBody::linear_image(v, GaugeBody::ball(n));
    auto t0 = Clock::now();
    const PositionResult r = optimize_position(K, 60, 4000, 700 + t);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    worst = std::max(worst, r.product / n);
    o.require(r.product <= 1.05 * n, "instance " + std::to_string(t) + ": product " + fmt(r.product));
    o.require(secs < 120, "instance " + std::to_string(t) + " took " + fmt(secs) + " s");
  }
  return report(3, o, "max product/n = " + fmt(worst) + ", slowest " + fmt(slowest) + " s");
}

bool criterion4() {
  Outcome o;
  const GaugeBody B1 = GaugeBody::lq(32, 1.0);
  const SectionReport s1 = find_euclidean_complement(B1, B1, 2, 100, 800);
  int good = 0;
  for (const auto& t : s1.trial_rows) good += t.ratio <= 2.0;
  o.require(s1.trial_rows.size() == 100, "expected 100 trials");
  o.require(good >= 90, "B1^32: only " + std::to_string(good) + " of 100 sections have ratio <= 2");

  const GaugeBody B2 = GaugeBody::ball(32);
  const SectionReport s2 = find_euclidean_complement(B2, B2, 2, 100, 801);
  int exact = 0;
  for (const auto& t : s2.trial_rows) exact += t.ratio <= 1 + 1e-8;
  o.require(exact == 100, "B2^32: " + std::to_string(exact) + " of 100 sections have ratio <= 1 + 1e-8");

  const GaugeBody B64 = GaugeBody::lq(64, 1.0);
  const SectionReport s3 = find_euclidean_complement(B64, B64, 2, 100, 802);
  std::vector<double> radii;
  for (const auto& t : s3.trial_rows) radii.push_back(t.r);
  std::sort(radii.begin(), radii.end());
  const double median = 0.5 * (radii[49] + radii[50]);
  const double ell = std::sqrt(64 + 64 * 63 * (2 / std::numbers::pi));
  const double predicted = std::sqrt(64.0) / ell;
  o.require(median <= 2 * predicted && median >= predicted / 2,
            "B1^64 median radius " + fmt(median) + " vs " + fmt(predicted));
  return report(4, o,
                "B1^32 " + std::to_string(good) + "/100 with ratio <= 2; B2^32 100/100 exact; B1^64 median r = " +
                    fmt(median) + " vs sqrt(n)/l = " + fmt(predicted));
}

bool criterion5() {
  Outcome o;
  const int instances = 100;
  int ri_opt = 0, tal_opt = 0, fin_opt = 0, ri_greedy = 0, tal_greedy = 0, fin_greedy = 0;
  for (int t = 0; t < instances; ++t) {
    const std::string tag = "instance " + std::to_string(t);

    // Restricted invertibility: sigma_min >= a'/8, checked by SVD.
    const double ap = 1.0;
    const Matrix Y = random_tilde_y(6, 10, ap, 1000 + t);
    const InvertibleSelection ri = restricted_invertibility(Y, ap);
    o.require(brute_sigma_min(pick_columns(Y, ri.sigma)) >= ap / 8, tag + ": restricted invertibility bound");
    const int ri_best = brute_largest_subset(10, [&](const std::vector<int>& idx) {
      return brute_sigma_min(pick_columns(Y, idx)) >= ap / 8;
    });
    ri_opt += static_cast<int>(ri.sigma.size()) >= ri_best;
    ri_greedy += static_cast<int>(ri.greedy.size()) >= ri_best;

    // Talagrand selection: sup over signs <= 4 M1 by enumeration, |tau| >= s M1 / 2w.
    const int s = 8 + t % 5;
    const GaugeBody dual = random_polytope(10, 30, 2000 + t).polar();
    const Matrix Z = unit_columns(gaussian_matrix(10, s, 3000 + t, 0), dual);
    const SignAverage avg = sign_average(Z, dual);
    const TauSelection tal = talagrand_select(Z, dual, avg);
    const double bound = 4 * avg.m1;
    o.require(brute_sign_sup(pick_columns(Z, tal.tau), dual) <= bound * (1 + 1e-12), tag + ": talagrand bound");
    o.require(static_cast<double>(tal.tau.size()) >= s * avg.m1 / (2 * avg.w) - 1e-12, tag + ": |tau| floor");
    const int tal_best = brute_largest_subset(s, [&](const std::vector<int>& idx) {
      return brute_sign_sup(pick_columns(Z, idx), dual) <= bound * (1 + 1e-12);
    });
    tal_opt += static_cast<int>(tal.tau.size()) >= tal_best;
    tal_greedy += static_cast<int>(tal.greedy.size()) >= tal_best;

    // Final selection: coordinate functionals of norm <= 2 by an independent LP,
    // |tau'| >= l / 8w'.
    const int l = 8 + t % 3;
    const Matrix V = gaussian_matrix(8, 24, 4000 + t, 0);
    const GaugeBody norm = GaugeBody::polytope(V).polar();
    const Matrix Zp = unit_columns(gaussian_matrix(8, l, 5000 + t, 0), norm);
    const double w = brute_sign_sup(Zp, norm);
    const FinalSelection fin = final_select(Zp, norm, w);
    const Matrix S = pick_columns(Zp, fin.tau_prime);
    for (int i = 0; i < S.cols(); ++i)
      o.require(lp_functional_norm(S, i, V) <= 2 * (1 + 1e-7), tag + ": functional norm above 2");
    o.require(static_cast<double>(fin.tau_prime.size()) >= l / (8 * w) - 1e-12, tag + ": |tau'| floor");
    const int fin_best = brute_largest_subset(l, [&](const std::vector<int>& idx) {
      const Matrix P = pick_columns(Zp, idx);
      for (int i = 0; i < P.cols(); ++i)
        if (lp_functional_norm(P, i, V) > 2 * (1 + 1e-9)) return false;
      return true;
    });
    fin_opt += static_cast<int>(fin.tau_prime.size()) >= fin_best;
    fin_greedy += static_cast<int>(fin.greedy.size()) >= fin_best;
  }
  o.require(ri_opt >= 90, "restricted invertibility optimal in " + std::to_string(ri_opt) + "/100");
  o.require(tal_opt >= 90, "talagrand optimal in " + std::to_string(tal_opt) + "/100");
  o.require(fin_opt >= 90, "final selection optimal in " + std::to_string(fin_opt) + "/100");
  return report(5, o,
                "optimal sizes " + std::to_string(ri_opt) + "/" + std::to_string(tal_opt) + "/" +
                    std::to_string(fin_opt) + " of 100 (greedy alone " + std::to_string(ri_greedy) + "/" +
                    std::to_string(tal_greedy) + "/" + std::to_string(fin_greedy) + "), all bounds and floors met");
}

bool criterion6() {
  Outcome o;
  int iterated = 0;
  for (int t = 0; t < 100; ++t) {
    const std::string tag = "instance " + std::to_string(t);
    const int m = 2 + t % 2;
    const GaugeBody norm = random_polytope(6, 24, 6000 + t).polar();
    const Matrix V = unit_columns(gaussian_matrix(6, m * m, 7000 + t, 0), norm);
    const double beta = brute_sign_sup(V, norm);
    Matrix out;
    james_round(V, norm, beta, t, out);
    o.require(out.cols() == m, tag + ": round output length");
    // |t_i| <= 1 for the unit coefficient patterns enumerated here.
    o.require(brute_sign_sup(out, norm) <= std::sqrt(beta) * (1 + 1e-12), tag + ": round bound");

    const GaugeBody norm2 = random_polytope(8, 32, 8000 + t).polar();
    const int count = 16;
    const Matrix W = unit_columns(gaussian_matrix(8, count, 9000 + t, 0), norm2);
    const double b = brute_sign_sup(W, norm2);
    const int d = static_cast<int>(std::floor(std::log2(std::log2(b))));
    if (d >= 1) {
      ++iterated;
      const BlockingResult r = james_blocking(W, norm2, b, d, t);
      const double omega = brute_sign_sup(r.v, norm2);
      o.require(omega < 4, tag + ": omega = " + fmt(omega));
      o.require(omega <= std::pow(b, 1.0 / std::pow(2.0, d)) * (1 + 1e-12), tag + ": omega above beta^(1/2^d)");
      o.require(r.v.cols() >= static_cast<int>(std::floor(std::pow(count, 1.0 / std::pow(2.0, d)) + 1e-12)),
                tag + ": output length " + std::to_string(r.v.cols()));
    }
  }
  return report(6, o, "100 rounds certified by enumeration; " + std::to_string(iterated) + " iterated runs with d >= 1");
}

struct Case {
  std::string name;
  GaugeBody body;
  Branch expected;
  bool has_expectation;
};

// Runs the end-to-end corpus and collects the certificate texts.
bool criterion7(std::vector<std::string>& texts, bool print) {
  Outcome o;
  auto t0 = Clock::now();
  int count = 0;
  texts.clear();
  for (int n : {8, 16, 32, 64}) {
    std::vector<Case> cases = {{"B1", GaugeBody::lq(n, 1.0), Branch::l1, true},
                               {"B2", GaugeBody::ball(n), Branch::l2, true},
                               {"Binf", GaugeBody::lq(n, inf()), Branch::linf, true}};
    for (int s = 0; s < 5; ++s)
      cases.push_back({"polytope" + std::to_string(s), random_polytope(n, 4 * n, 100 * n + s), Branch::none, false});
    for (int s = 0; s < 3; ++s)
      cases.push_back({"ellipsoid" + std::to_string(s), random_ellipsoid(n, 100 * n + 50 + s), Branch::l2, true});
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const Case& c = cases[i];
      const std::string tag = c.name + "^" + std::to_string(n);
      const ProjectionCertificate cert = find_projection(c.body, DichotomyParams::defaults(n, 31 * n + i));
      texts.push_back(certificate_to_json(cert).dump());
      ++count;
      o.require(cert.passed, tag + ": not passed");
      o.require((cert.P * cert.P - cert.P).cwiseAbs().maxCoeff() < 1e-8, tag + ": P is not idempotent");
      o.require(std::min(cert.m, n - cert.m) >= cert.params.k_n_target, tag + ": rank or corank below k_n");
      if (c.has_expectation) o.require(cert.branch == c.expected, tag + ": branch " + to_string(cert.branch));
      if (cert.branch == Branch::l2)
        o.require(cert.iso_constant <= 4, tag + ": ratio " + fmt(cert.iso_constant));
      else
        o.require(cert.iso_constant <= 8, tag + ": iso " + fmt(cert.iso_constant));
      const VerificationReport v = verify_certificate(c.body, cert, 9000 + count);
      o.require(v.passed, tag + ": verification failed");
      for (const auto& ch : v.checks)
        if (ch.name == "operator norm of P")
          o.require(ch.recomputed <= cert.norm_budget && cert.params.C_desk == 16.0,
                    tag + ": verified norm " + fmt(ch.recomputed) + " above budget");
      if (print) {
        std::printf("  %s: branch %s, m %d, norm %s, iso %s\n", tag.c_str(), to_string(cert.branch).c_str(), cert.m,
                    fmt(cert.norm_P.value).c_str(), fmt(cert.iso_constant).c_str());
        std::fflush(stdout);
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 1800, "runtime " + fmt(secs) + " s");
  if (!print) return o.pass;
  return report(7, o, std::to_string(count) + " certificates passed and verified in " + fmt(secs) + " s");
}

bool criterion8() {
  Outcome o;
  for (double q : {2.0, 3.0, 4.0, 10.0, inf()})
    for (int k : {1, 4, 9, 16, 100})
      for (int n : {1, 8, 64}) {
        const GammaBounds g = gamma_bounds(q, k, n, 0.7);
        if (q == 2.0) o.require(std::abs(g.b1 - std::sqrt(k)) <= 1e-12 * std::sqrt(k), "b1 at q = 2");
        const double np = std::isinf(q) ? 1.0 : std::pow(n, 1.0 / q);
        o.require(std::abs(g.b4 * np - g.b2) <= 1e-12 * g.b2, "b4 n^{1/q} = b2");
      }
  const NearOptTable t = near_optimality_table({1e3, 1e6, 1e9}, {});
  for (const auto& r : t.rows) o.require(r.rel_err <= 1e-9, "k^{1/q} = log k at k = " + fmt(r.k));
  for (int k : {2, 4, 9}) {
    const NormEstimate e = operator_norm(Matrix::Identity(k, k), GaugeBody::lq(k, inf()), GaugeBody::ball(k));
    o.require(std::abs(e.value - std::sqrt(k)) <= 1e-12 * std::sqrt(k) && e.kind == EstimateKind::exact,
              "||Id: l_inf^" + std::to_string(k) + " -> l_2|| = " + fmt(e.value));
  }
  return report(8, o, "identities to 1e-12, k^{1/q} = log k to 1e-9, ||Id|| = sqrt k exactly");
}

bool criterion9(const std::vector<std::string>& single) {
  Outcome o;
  set_thread_count(8);
  std::vector<std::string> multi;
  criterion7(multi, false);
  set_thread_count(1);
  o.require(single.size() == multi.size(), "different certificate counts");
  int same = 0;
  for (std::size_t i = 0; i < std::min(single.size(), multi.size()); ++i) same += single[i] == multi[i];
  o.require(same == static_cast<int>(single.size()),
            std::to_string(single.size() - same) + " certificates differ between 1 and 8 threads");
  return report(9, o, std::to_string(same) + " certificates byte-identical at 1 and 8 threads");
}

}  // namespace

int main() {
  set_thread_count(1);
  bool ok = true;
  ok &= criterion1();
  ok &= criterion2();
  ok &= criterion3();
  ok &= criterion4();
  ok &= criterion5();
  ok &= criterion6();
  std::vector<std::string> texts;
  ok &= criterion7(texts, true);
  ok &= criterion8();
  ok &= criterion9(texts);
  return ok ? 0 : 1;
}
