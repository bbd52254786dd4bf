#include "npp/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "npp/rng.hpp"

namespace npp {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t stage_seed(std::uint64_t seed, const char* tag) { return derive_seed(seed, stream_tag(tag), 0); }

nlohmann::json ell_json(const EllEstimate& e) {
  return {{"value", e.value}, {"stderr", e.stderr}, {"samples", e.samples}, {"mode", to_string(e.mode)}};
}

nlohmann::json chain_json(const ExtractionReport& r) {
  std::vector<std::string> kinds;
  for (EstimateKind k : r.chain.kinds) kinds.push_back(to_string(k));
  return {{"a", r.chain.a},
          {"kinds", kinds},
          {"threshold", r.a},
          {"k", r.k},
          {"refused", r.refused},
          {"refusal_index", r.refusal_index}};
}

nlohmann::json extraction_json(const ExtractionReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}, {"required", c.required}});
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& b : r.blocking.rounds)
    rounds.push_back({{"input", b.input},
                      {"output", b.output},
                      {"subset_branch", b.subset_branch},
                      {"subset", b.subset},
                      {"threshold", b.threshold},
                      {"certified", b.certified}});
  return {{"interval", {{"first", r.interval.first}, {"length", r.interval.length}, {"a_prime", r.interval.a_prime}}},
          {"sigma", r.sigma},
          {"sigma_min", r.sigma_min},
          {"ell_polar", ell_json(r.ell_polar)},
          {"M", ell_json(r.M)},
          {"M1", r.m1w.m1},
          {"w", r.m1w.w},
          {"sign_mode", r.m1w.mode == SignMode::enumerated ? "enumerated" : "sampled"},
          {"tau", r.tau.tau},
          {"tau_target", r.tau.target},
          {"tau_certified", r.tau.certified},
          {"d", r.d_formula},
          {"blocking_rounds", rounds},
          {"blocking_flagged", r.blocking.flagged},
          {"omega", r.blocking.omega},
          {"l", r.blocking.v.cols()},
          {"tau_prime", r.final.tau_prime},
          {"tau_prime_target", r.final.target},
          {"functional_norms", r.final.functional_norms},
          {"m", r.m},
          {"c_f", r.c_f},
          {"iso", r.iso},
          {"q_norm", {{"value", r.q_norm.value}, {"kind", to_string(r.q_norm.kind)}}},
          {"gamma", r.gamma},
          {"k_power", r.k_power},
          {"checks", checks},
          {"failure", r.failure},
          {"passed", r.passed}};
}

EllEstimate ell_of(const GaugeBody& K, long samples, std::uint64_t seed) {
  if (auto e = ell_body_exact(K)) return *e;
  return ell_body(K, samples, seed);
}

}  // namespace

std::string to_string(Branch b) {
  switch (b) {
    case Branch::l1: return "l1";
    case Branch::linf: return "linf";
    case Branch::l2: return "l2";
    case Branch::none: break;
  }
  return "none";
}

Branch branch_from_string(const std::string& s) {
  if (s == "l1") return Branch::l1;
  if (s == "linf") return Branch::linf;
  if (s == "l2") return Branch::l2;
  if (s == "none") return Branch::none;
  throw InputError("unknown branch '" + s + "'");
}

double threshold_for(int n, ThresholdRule rule) {
  const double dn = n;
  double a = rule == ThresholdRule::quarter_power ? std::pow(dn, 0.25)
                                                  : std::sqrt(dn) / std::exp(std::sqrt(std::log(dn)));
  return std::clamp(a, 1.0, std::sqrt(dn));
}

DichotomyParams DichotomyParams::defaults(int n, std::uint64_t seed) {
  DichotomyParams p;
  p.n = n;
  p.seed = seed;
  p.k = (n + 3) / 4;
  p.a = threshold_for(n, p.rule);
  p.k_n_target = std::max(1, static_cast<int>(std::floor(p.c_desk * std::exp(0.5 * std::sqrt(std::log(double(n)))))));
  return p;
}

double norm_budget(const DichotomyParams& p, int rank) {
  if (p.budget_mode == BudgetMode::tradeoff) {
    // Both factors are floored at 1 so small ranks keep a usable gate.
    const double lm = std::max(1.0, std::log(static_cast<double>(std::max(rank, 1))));
    return p.C_prime_desk * lm * std::max(1.0, std::log(lm));
  }
  const double t = 1.0 + std::log(static_cast<double>(std::max(p.k_n_target, 1)));
  return p.C_desk * t * t;
}

ProjectionCertificate find_projection(const GaugeBody& body, const DichotomyParams& params) {
  const int n = body.dim();
  if (n < 2) throw InputError("find_projection needs dimension >= 2");
  DichotomyParams p = params;
  if (p.n != 0 && p.n != n) throw InputError("params.n does not match the body dimension");
  {
    const DichotomyParams d = DichotomyParams::defaults(n, p.seed);
    p.n = n;
    if (p.k == 0) p.k = d.k;
    if (p.a == 0.0) p.a = threshold_for(n, p.rule);
    if (p.k_n_target == 0)
      p.k_n_target = std::max(1, static_cast<int>(std::floor(p.c_desk * std::exp(0.5 * std::sqrt(std::log(double(n)))))));
  }
  if (p.k < 1 || p.k > n) throw InputError("k must lie in [1, n]");
  if (!(p.a >= 1.0 && p.a <= std::sqrt(double(n)) * (1 + 1e-12))) throw InputError("a must lie in [1, sqrt n]");

  ProjectionCertificate cert;
  cert.params = p;
  cert.body_spec = body.to_json();
  auto fail = [&](std::string why) { cert.failures.push_back(std::move(why)); };
  auto t0 = Clock::now();

  cert.position = optimize_position(body, p.position_budget, p.position_samples, stage_seed(p.seed, "dichotomy_position"));
  const Matrix& u = cert.position.map;
  const Matrix uinv = u.inverse();
  const GaugeBody Kt = GaugeBody::linear_image(u, body);
  cert.trace["position"] = {{"ell_k", ell_json(cert.position.ell_k)},
                            {"ell_kpolar", ell_json(cert.position.ell_kpolar)},
                            {"product", cert.position.product},
                            {"product_stderr", cert.position.product_stderr},
                            {"start_product", cert.position.start_product},
                            {"iterations", cert.position.iterations}};
  if (p.record_timings) cert.timings_ms["position"] = ms_since(t0);

  Matrix Pt, range, dual;
  t0 = Clock::now();
  const ExtractionReport e1 = extract_l1(Kt, p.a, p.k, stage_seed(p.seed, "dichotomy_l1"), p.extraction);
  cert.trace["chain_K"] = chain_json(e1);
  if (p.record_timings) cert.timings_ms["branch_l1"] = ms_since(t0);

  if (!e1.refused) {
    cert.branch = Branch::l1;
    cert.trace["extraction"] = extraction_json(e1);
    if (!e1.passed) fail("extraction on K: " + (e1.failure.empty() ? std::string("a required check failed") : e1.failure));
    if (e1.m > 0) {
      Pt = e1.Q;
      range = e1.basis;
      dual = e1.dual_basis;
      cert.iso_constant = e1.iso;
    }
  } else {
    t0 = Clock::now();
    const GaugeBody Kp = Kt.polar();
    const ExtractionReport e2 = extract_l1(Kp, p.a, p.k, stage_seed(p.seed, "dichotomy_linf"), p.extraction);
    cert.trace["chain_Kpolar"] = chain_json(e2);
    if (p.record_timings) cert.timings_ms["branch_linf"] = ms_since(t0);
    if (!e2.refused) {
      // The l1 system found for the dual norm dualises to an l_inf system
      // spanned by the z' vectors, with projection Q^T.
      cert.branch = Branch::linf;
      cert.trace["extraction"] = extraction_json(e2);
      if (!e2.passed) fail("extraction on K polar: " + (e2.failure.empty() ? std::string("a required check failed") : e2.failure));
      if (e2.m > 0) {
        Pt = e2.Q.transpose();
        range = e2.dual_basis;
        dual = e2.basis;
        cert.iso_constant = e2.iso;
      }
    } else {
      t0 = Clock::now();
      cert.branch = Branch::l2;
      nlohmann::json tr;
      const Subspace E1 = Subspace::from_basis(e1.refusal_F);
      const Subspace E2 = Subspace::from_basis(e2.refusal_F);
      const Subspace H = E1.intersect(E2);
      const int dimH = H.dim();
      tr["dim_E1"] = E1.dim();
      tr["dim_E2"] = E2.dim();
      tr["dim_H"] = dimH;
      if (!(2 * dimH > n)) fail("dim H <= n/2");
      const GaugeBody B2 = GaugeBody::ball(n);
      OperatorNormOptions no = p.extraction.norm_options;
      no.seed = stage_seed(p.seed, "dichotomy_witness");
      const double alpha1 = operator_norm(H.projector(), Kt, B2, no).value;
      const double alpha2 = operator_norm(H.projector(), Kp, B2, no).value;
      tr["norm_PH_K"] = alpha1;
      tr["norm_PH_Kpolar"] = alpha2;
      if (!(alpha1 < p.a)) fail("P_H K is not inside a B2");
      if (!(alpha2 < p.a)) fail("K cap H does not contain B2 / a");

      const GaugeBody K1 = GaugeBody::projection(Kt, H);
      const GaugeBody K2 = GaugeBody::section(Kt, H);
      const EllEstimate ell_k2 = ell_of(K2, p.ell_samples, stage_seed(p.seed, "dichotomy_ell_section"));
      const EllEstimate ell_k1p = ell_of(K1.polar(), p.ell_samples, stage_seed(p.seed, "dichotomy_ell_polar_section"));
      const double kappa = cert.position.ell_k.value * cert.position.ell_k.value / n;
      const double lo = 0.5 * std::sqrt(n / kappa), hi = std::sqrt(n * kappa);
      // The window itself is measured (kappa comes from l(K)), so both
      // relative errors enter.
      const double pos_eps = cert.position.ell_k.stderr / cert.position.ell_k.value;
      auto inside = [&](const EllEstimate& e) {
        const double e_rel = e.value > 0 ? e.stderr / e.value : 0.0;
        const double eps = std::hypot(e_rel, pos_eps);
        return e.value >= lo * (1 - 3 * eps) && e.value <= hi * (1 + 3 * eps);
      };
      tr["kappa"] = kappa;
      tr["ell_window"] = {lo, hi};
      tr["ell_section"] = ell_json(ell_k2);
      tr["ell_polar_section"] = ell_json(ell_k1p);
      if (!inside(ell_k2)) fail("l(K cap H) outside the window");
      if (!inside(ell_k1p)) fail("l(K polar cap H) outside the window");

      const int m1 = dvoretzky_dimension(ell_k1p.value, alpha1, p.c_desk, dimH);
      const int m2 = dvoretzky_dimension(ell_k2.value, alpha2, p.c_desk, dimH);
      const int m = std::max(1, std::min({m1, m2, n - p.k_n_target}));
      tr["m_projection"] = m1;
      tr["m_section"] = m2;
      tr["m"] = m;

      SectionOptions so;
      so.c_desk = p.c_desk;
      so.directions = p.section_directions;
      so.ell_samples = p.ell_samples;
      so.norm_options = p.extraction.norm_options;
      const SectionReport sr = find_euclidean_complement(K1, K2, m, p.section_trials,
                                                         stage_seed(p.seed, "dichotomy_section"), so);
      tr["section"] = {{"r", sr.r},
                       {"R", sr.R},
                       {"ratio", sr.ratio},
                       {"pf_norm", sr.pf_norm.value},
                       {"bound", sr.bound},
                       {"alpha", sr.alpha},
                       {"beta", sr.beta},
                       {"trials", sr.trials},
                       {"chosen", sr.chosen},
                       {"fraction_good", sr.fraction_good}};
      cert.trace["dichotomy"] = tr;
      range = H.basis() * sr.F.basis();
      Pt = range * range.transpose();
      cert.iso_constant = sr.ratio;
      if (p.record_timings) cert.timings_ms["branch_l2"] = ms_since(t0);
    }
  }

  t0 = Clock::now();
  if (Pt.size() == 0) {
    fail("no projection was produced");
    cert.P = cert.P_position = Matrix::Zero(n, n);
  } else {
    cert.P_position = Pt;
    cert.P = uinv * Pt * u;
    cert.m = static_cast<int>(range.cols());
    cert.range_basis = uinv * range;
    if (dual.size()) cert.dual_system = u.transpose() * dual;
    OperatorNormOptions no = p.extraction.norm_options;
    no.seed = stage_seed(p.seed, "dichotomy_norm");
    cert.norm_P = operator_norm(cert.P, body, body, no);
  }
  cert.norm_budget = norm_budget(p, cert.m);
  const double idem = (cert.P * cert.P - cert.P).cwiseAbs().maxCoeff();
  const int rank = numerical_rank(cert.P, 1e-8);
  if (!(idem < 1e-8)) fail("P is not idempotent");
  if (rank != cert.m) fail("rank of P differs from m");
  if (std::min(cert.m, n - cert.m) < p.k_n_target) fail("min(rank, corank) below k_n target");
  if (!(cert.norm_P.value <= cert.norm_budget)) fail("norm of P exceeds the budget");
  const double iso_cap = cert.branch == Branch::l2 ? p.l2_ratio_cap : p.iso_cap;
  if (!(cert.iso_constant <= iso_cap)) fail("isomorphism constant above its cap");
  cert.trace["idempotency_residual"] = idem;
  cert.trace["rank"] = rank;
  if (p.record_timings) cert.timings_ms["certify"] = ms_since(t0);
  cert.passed = cert.failures.empty();
  return cert;
}

VerificationReport verify_certificate(const GaugeBody& body, const ProjectionCertificate& cert, std::uint64_t seed) {
  const int n = body.dim();
  if (cert.P.rows() != n || cert.P.cols() != n) throw InputError("certificate dimension does not match the body");
  VerificationReport rep;
  auto add = [&](std::string name, double claimed, double recomputed, bool pass) {
    rep.checks.push_back({std::move(name), claimed, recomputed, pass});
  };
  auto safe_upper = [](double claimed, double recomputed) { return recomputed <= claimed * 1.05 + 1e-12; };

  const Matrix& P = cert.P;
  const double idem = (P * P - P).cwiseAbs().maxCoeff();
  add("idempotency residual", 1e-8, idem, idem < 1e-8);
  const int rank = numerical_rank(P, 1e-8);
  add("rank", cert.m, rank, rank == cert.m);
  add("min(rank, corank) >= k_n target", cert.params.k_n_target, std::min(rank, n - rank),
      std::min(rank, n - rank) >= cert.params.k_n_target);

  OperatorNormOptions no = cert.params.extraction.norm_options;
  no.seed = derive_seed(seed, stream_tag("verify_norm"), 0);
  const double norm = operator_norm(P, body, body, no).value;
  add("operator norm of P", cert.norm_P.value, norm, safe_upper(cert.norm_P.value, norm));
  add("norm within budget", cert.norm_budget, norm, norm <= cert.norm_budget);

  const Matrix& B = cert.range_basis;
  if (B.cols() != cert.m || B.rows() != n) {
    add("range basis shape", cert.m, static_cast<double>(B.cols()), false);
  } else {
    const double inv = B.cols() ? (P * B - B).cwiseAbs().maxCoeff() / std::max(1.0, B.cwiseAbs().maxCoeff()) : 0.0;
    add("range basis fixed by P", 1e-8, inv, inv < 1e-8);
    if (cert.branch == Branch::l1 || cert.branch == Branch::linf) {
      const Matrix& D = cert.dual_system;
      const bool shape = D.rows() == n && D.cols() == B.cols();
      const double bio = shape ? (D.transpose() * B - Matrix::Identity(B.cols(), B.cols())).cwiseAbs().maxCoeff() : 1.0;
      add("biorthogonality of the dual system", 1e-8, bio, shape && bio < 1e-8);
      if (shape) {
        // l1: |x| <= max|b_i| sum|t_i| and sum|t_i| <= sup|sum eps d_i|_* |x|.
        // linf: the same two bounds with the roles of the norms exchanged.
        const GaugeBody polar = body.polar();
        const bool l1 = cert.branch == Branch::l1;
        const GaugeBody& single = l1 ? body : polar;
        const GaugeBody& signs = l1 ? polar : body;
        const Matrix& S = l1 ? B : D;
        const Matrix& E = l1 ? D : B;
        double cf = 0.0;
        for (Eigen::Index i = 0; i < S.cols(); ++i) cf = std::max(cf, single.gauge(S.col(i)));
        const double omega = sign_sup(E, signs).value;
        add("isomorphism constant", cert.iso_constant, cf * omega, safe_upper(cert.iso_constant, cf * omega));
      }
    } else if (cert.branch == Branch::l2) {
      const Matrix& u = cert.position.map;
      const GaugeBody Kt = GaugeBody::linear_image(u, body);
      const Subspace F = Subspace::from_basis(u * B);
      const EuclideanRatio er = euclidean_ratio(Kt, F, cert.params.section_directions,
                                                derive_seed(seed, stream_tag("verify_ratio"), 0));
      add("Euclidean ratio of the range", cert.iso_constant, er.ratio, safe_upper(cert.iso_constant, er.ratio));
    }
  }
  const double cap = cert.branch == Branch::l2 ? cert.params.l2_ratio_cap : cert.params.iso_cap;
  add("isomorphism constant within cap", cap, cert.iso_constant, cert.iso_constant <= cap);
  rep.passed = cert.branch != Branch::none;
  for (const auto& c : rep.checks)
    if (!c.pass) rep.passed = false;
  return rep;
}

}  // namespace npp
