#include <doctest.h>

#include <cmath>
#include <numbers>

#include "corpus.hpp"
#include "npp/driver.hpp"
#include "npp/operator_norm.hpp"

using namespace npp;
using namespace npp::testing;

namespace {

const VerificationCheck* find_check(const VerificationReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

ProjectionCertificate run(const GaugeBody& K, std::uint64_t seed = 7) {
  return find_projection(K, DichotomyParams::defaults(K.dim(), seed));
}

// Projection structure that every certificate must satisfy, checked directly.
void check_projection(const GaugeBody& K, const ProjectionCertificate& c) {
  const int n = K.dim();
  CHECK((c.P * c.P - c.P).cwiseAbs().maxCoeff() < 1e-8);
  Eigen::JacobiSVD<Matrix> svd(c.P);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-8;
  CHECK(rank == c.m);
  CHECK(std::min(c.m, n - c.m) >= 1);
  CHECK(std::min(c.m, n - c.m) >= c.params.k_n_target);
  CHECK((c.P * c.range_basis - c.range_basis).cwiseAbs().maxCoeff() < 1e-8);
  // Conjugation by the position map.
  const Matrix& u = c.position.map;
  CHECK((u * c.P * u.inverse() - c.P_position).cwiseAbs().maxCoeff() < 1e-8);
}

}  // namespace

TEST_CASE("B2 at n = 32 takes the l2 branch with norm and ratio near 1") {
  const GaugeBody K = GaugeBody::ball(32);
  const ProjectionCertificate c = run(K);
  CHECK(c.branch == Branch::l2);
  CHECK(c.passed);
  CHECK(c.norm_P.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.iso_constant == doctest::Approx(1.0).epsilon(1e-6));
  check_projection(K, c);
  // Orthogonal projection: symmetric.
  CHECK((c.P - c.P.transpose()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(verify_certificate(K, c, 99).passed);
}

TEST_CASE("B1 at n = 32 takes the l1 branch") {
  const GaugeBody K = GaugeBody::lq(32, 1.0);
  const ProjectionCertificate c = run(K);
  CHECK(c.branch == Branch::l1);
  CHECK(c.passed);
  CHECK(c.norm_P.value <= 8.0);
  CHECK(c.iso_constant <= 8.0);
  check_projection(K, c);
  CHECK(verify_certificate(K, c, 99).passed);
}

TEST_CASE("B_inf at n = 32 takes the linf branch") {
  const GaugeBody K = GaugeBody::lq(32, inf());
  const ProjectionCertificate c = run(K);
  CHECK(c.branch == Branch::linf);
  CHECK(c.passed);
  CHECK(c.iso_constant <= 8.0);
  check_projection(K, c);
  CHECK(verify_certificate(K, c, 99).passed);
}

TEST_CASE("l2 branch witnesses") {
  for (int n : {16, 32}) {
    const GaugeBody K = random_ellipsoid(n, 5);
    const ProjectionCertificate c = run(K, 3);
    REQUIRE(c.branch == Branch::l2);
    CHECK(c.passed);
    const auto& tr = c.trace.at("dichotomy");
    const int dimH = tr.at("dim_H").get<int>();
    CHECK(2 * dimH > n);
    CHECK(dimH >= n - 2 * (c.params.k - 1));
    CHECK(tr.at("norm_PH_K").get<double>() < c.params.a);
    CHECK(tr.at("norm_PH_Kpolar").get<double>() < c.params.a);
    // Recompute the two witnesses from the range of P in position coordinates:
    // H contains that range, and orthogonal projections onto subspaces of H
    // have norms at most those of P_H.
    const Matrix& u = c.position.map;
    const GaugeBody Kt = GaugeBody::linear_image(u, K);
    const GaugeBody B2 = GaugeBody::ball(n);
    OperatorNormOptions no;
    no.seed = 1234;
    CHECK(operator_norm(c.P_position, Kt, B2, no).value < c.params.a);
    CHECK(operator_norm(c.P_position, Kt.polar(), B2, no).value < c.params.a);
    check_projection(K, c);
  }
}

TEST_CASE("exactly one branch per corpus body") {
  for (const auto& [name, K] : small_corpus(8)) {
    CAPTURE(name);
    const ProjectionCertificate c = run(K, 11);
    CHECK(c.branch != Branch::none);
    if (!c.passed) CHECK(!c.failures.empty());
    const bool l1_chain = !c.trace.at("chain_K").at("refused").get<bool>();
    CHECK(l1_chain == (c.branch == Branch::l1));
    if (c.branch != Branch::l1) CHECK(c.trace.contains("chain_Kpolar"));
  }
}

TEST_CASE("verification rejects Id/2 with residual 0.25") {
  const GaugeBody K = GaugeBody::ball(8);
  ProjectionCertificate c = run(K);
  c.P = 0.5 * Matrix::Identity(8, 8);
  const VerificationReport r = verify_certificate(K, c, 5);
  CHECK_FALSE(r.passed);
  const VerificationCheck* idem = find_check(r, "idempotency residual");
  REQUIRE(idem != nullptr);
  CHECK(idem->recomputed == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(idem->pass);
}

TEST_CASE("verification rejects a halved norm claim") {
  const GaugeBody K = GaugeBody::lq(16, 1.0);
  ProjectionCertificate c = run(K);
  REQUIRE(verify_certificate(K, c, 5).passed);
  c.norm_P.value *= 0.5;
  const VerificationReport r = verify_certificate(K, c, 5);
  CHECK_FALSE(r.passed);
  const VerificationCheck* norm = find_check(r, "operator norm of P");
  REQUIRE(norm != nullptr);
  CHECK_FALSE(norm->pass);
}

TEST_CASE("certificates round-trip through JSON") {
  for (const GaugeBody& K : {GaugeBody::lq(16, 1.0), GaugeBody::ball(16), random_polytope(8, 32, 2)}) {
    const ProjectionCertificate c = run(K);
    const nlohmann::json j = certificate_to_json(c);
    const std::string text = j.dump();
    const ProjectionCertificate back = certificate_from_json(nlohmann::json::parse(text));
    CHECK(certificate_to_json(back).dump() == text);
    CHECK(back.P == c.P);
    CHECK(verify_certificate(GaugeBody::from_json(back.body_spec), back, 77).passed == c.passed);
  }
}

TEST_CASE("certificate parsing rejects other schema versions") {
  nlohmann::json j = certificate_to_json(run(GaugeBody::ball(4)));
  j["schema_version"] = kSchemaVersion + 1;
  CHECK_THROWS_AS(certificate_from_json(j), InputError);
  j.erase("schema_version");
  CHECK_THROWS_AS(certificate_from_json(j), InputError);
}

TEST_CASE("runs are deterministic") {
  const GaugeBody K = random_polytope(8, 32, 4);
  CHECK(certificate_to_json(run(K)).dump() == certificate_to_json(run(K)).dump());
}

TEST_CASE("gamma_bounds examples") {
  const GammaBounds g = gamma_bounds(4.0, 16, 1);
  CHECK(g.b1 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g.q_star == doctest::Approx(4.0 / 3.0).epsilon(1e-15));

  const GammaBounds h = gamma_bounds(std::numeric_limits<double>::infinity(), 9, 1);
  CHECK(h.b4 > 3.0 * std::sqrt(2.0 / std::numbers::pi));
  CHECK(h.b4 <= 3.0);
  CHECK(h.b4_window_lo == doctest::Approx(3.0 * std::sqrt(2.0 / std::numbers::pi)));
  CHECK(h.b4_window_hi == 3.0);
  CHECK(h.b1 == 1.0);

  // q = 2: b1 = sqrt(k), the distance between l_inf^k and l_2^k.
  const GammaBounds e = gamma_bounds(2.0, 4, 1);
  CHECK(e.b1 == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_AS(gamma_bounds(1.5, 4, 1), InputError);
  CHECK_THROWS_AS(gamma_bounds(2.0, 0, 1), InputError);
}

TEST_CASE("gamma_bounds identities") {
  for (double q : {2.0, 3.0, 4.0, 7.5, 100.0})
    for (int k : {1, 2, 9, 64, 1000})
      for (int n : {1, 2, 50})
        for (double c : {0.5, 1.0, 3.0}) {
          const GammaBounds g = gamma_bounds(q, k, n, c);
          CHECK(g.b1 >= 0);
          CHECK(g.b3 >= 0);
          CHECK(std::abs(g.b4 * std::pow(n, 1.0 / q) - g.b2) <= 1e-12 * g.b2);
          CHECK(std::abs(g.b2 - c * std::sqrt(k)) <= 1e-12 * g.b2);
          CHECK(g.b3 <= g.b2 * (1 + 1e-15));
          if (q == 2.0) CHECK(std::abs(g.b1 - std::sqrt(k)) <= 1e-12 * std::sqrt(k));
          CHECK(std::abs(1.0 / g.q + 1.0 / g.q_star - 1.0) <= 1e-15);
        }
}

TEST_CASE("near-optimality table") {
  const double e2 = std::exp(2.0);
  const NearOptTable t = near_optimality_table({std::exp(e2), 1e3, 1e6, 1e9}, {1e2, 1e4, 1e8});
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].q == doctest::Approx(e2 / 2).epsilon(1e-12));
  CHECK(t.rows[0].k_pow == doctest::Approx(e2).epsilon(1e-12));
  CHECK(t.rows[2].k_pow == doctest::Approx(13.815510557964274).epsilon(1e-9));
  for (const auto& r : t.rows) {
    CHECK(r.rel_err <= 1e-9);
    CHECK(r.sqrt_q_bound == doctest::Approx(std::sqrt(r.q)));
  }
  for (std::size_t i = 2; i < t.rows.size(); ++i) CHECK(t.rows[i].k_pow > t.rows[i - 1].k_pow);
  // n^{1/q} <= k^{1/4} with q = sqrt(log k): at equality (4 log n)^{2/3} = log k
  // the two sides agree, and the ceiling only helps.
  for (const auto& r : t.thresholds) CHECK(r.holds);
  CHECK_THROWS_AS(near_optimality_table({10.0}, {}), InputError);
}

TEST_CASE("norm_budget") {
  DichotomyParams p = DichotomyParams::defaults(16);
  p.k_n_target = 1;
  CHECK(norm_budget(p) == doctest::Approx(p.C_desk));
  p.k_n_target = 0;  // treated as 1
  CHECK(norm_budget(p) == doctest::Approx(p.C_desk));
  p.k_n_target = 3;
  const double t = 1 + std::log(3.0);
  CHECK(norm_budget(p) == doctest::Approx(p.C_desk * t * t));
  const double before = norm_budget(p);
  p.C_desk *= 2;
  CHECK(norm_budget(p) == doctest::Approx(2 * before));
  // k_n = e - 1 (fractional, through the formula itself) gives about 2.374 C.
  const double f = 1 + std::log(std::numbers::e - 1);
  CHECK(f * f == doctest::Approx(2.374).epsilon(1e-3));

  p.budget_mode = BudgetMode::tradeoff;
  CHECK(norm_budget(p, 1) == doctest::Approx(p.C_prime_desk));
  const double lm = std::log(1000.0);
  CHECK(norm_budget(p, 1000) == doctest::Approx(p.C_prime_desk * lm * std::log(lm)));
}

TEST_CASE("threshold and defaults") {
  for (int n : {2, 4, 16, 64, 1000}) {
    const double a = threshold_for(n, ThresholdRule::quarter_power);
    CHECK(a == doctest::Approx(std::pow(n, 0.25)));
    const double b = threshold_for(n, ThresholdRule::exp_sqrt_log);
    CHECK(b >= 1.0);
    CHECK(b <= std::sqrt(n) * (1 + 1e-12));
  }
  // sqrt(n) / exp(sqrt(log n)) is below 1 for n = 2, so the clamp engages.
  CHECK(threshold_for(2, ThresholdRule::exp_sqrt_log) == 1.0);
  const DichotomyParams p = DichotomyParams::defaults(32, 5);
  CHECK(p.k == 8);
  CHECK(p.seed == 5);
  CHECK(p.k_n_target == static_cast<int>(std::floor(std::exp(0.5 * std::sqrt(std::log(32.0))))));
  for (int n : {8, 16, 32, 64}) {
    const int t = DichotomyParams::defaults(n).k_n_target;
    CHECK(t >= 1);
    CHECK(t <= 4);
  }
  CHECK_THROWS_AS(find_projection(GaugeBody::ball(1), DichotomyParams{}), InputError);
}
