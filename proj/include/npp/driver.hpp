#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/euclidean.hpp"
#include "npp/extraction.hpp"
#include "npp/position.hpp"

namespace npp {

enum class Branch { l1, linf, l2, none };
std::string to_string(Branch b);
Branch branch_from_string(const std::string& s);

// quarter_power: a = n^{1/4}; exp_sqrt_log: a = sqrt(n) / exp(sqrt(log n)).
// Both are clamped into [1, sqrt n].
enum class ThresholdRule { quarter_power, exp_sqrt_log };
// log_squared: C (1 + log k_n)^2; tradeoff: C' log(m) log log(m).
enum class BudgetMode { log_squared, tradeoff };

struct DichotomyParams {
  int n = 0;
  int k = 0;             // ceil(n/4)
  double a = 0.0;        // dichotomy threshold
  int k_n_target = 0;    // max(1, floor(c_desk exp(sqrt(log n) / 2)))
  double c_desk = 1.0;
  double C_desk = 16.0;
  double C_prime_desk = 16.0;
  ThresholdRule rule = ThresholdRule::quarter_power;
  BudgetMode budget_mode = BudgetMode::log_squared;
  double iso_cap = 8.0;       // l1 / linf branches
  double l2_ratio_cap = 4.0;  // l2 branch
  std::uint64_t seed = 0;
  int position_budget = 60;
  long position_samples = 4000;
  long ell_samples = 20000;
  int section_trials = 20;
  int section_directions = 2048;
  ExtractionParams extraction{};
  bool record_timings = false;  // timings make certificates run-dependent

  // Fills every derived field (k, a, k_n_target) left at zero.
  static DichotomyParams defaults(int n, std::uint64_t seed = 0);
};

double threshold_for(int n, ThresholdRule rule);

// Gate on the certified projection norm. `rank` is used by the tradeoff mode.
double norm_budget(const DichotomyParams& p, int rank = 0);

struct ProjectionCertificate {
  Branch branch = Branch::none;
  Matrix P;           // original coordinates
  Matrix P_position;  // coordinates of the positioned body u K
  int m = 0;
  NormEstimate norm_P;
  double norm_budget = 0.0;
  double iso_constant = 0.0;
  // Isomorphism data in original coordinates: range basis and the dual system
  // (l1/linf), or the range basis alone (l2).
  Matrix range_basis, dual_system;
  PositionResult position;
  nlohmann::json body_spec;
  nlohmann::json trace;
  DichotomyParams params;
  std::vector<std::string> failures;
  std::map<std::string, double> timings_ms;
  bool passed = false;
};

ProjectionCertificate find_projection(const GaugeBody& body, const DichotomyParams& params);

struct VerificationCheck {
  std::string name;
  double claimed = 0.0;
  double recomputed = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<VerificationCheck> checks;
  bool passed = false;
};

// Recomputes the certificate claims from P and the stored isomorphism data,
// with a fresh seed. A check passes when the recomputed value is within 5% of
// the claim or on the safe side of it.
VerificationReport verify_certificate(const GaugeBody& body, const ProjectionCertificate& cert, std::uint64_t seed);

struct GammaBounds {
  double q = 2.0, q_star = 2.0;
  int k = 1, n = 1;
  double c = 1.0;
  double b1 = 0.0;  // k^{1/q}
  double b2 = 0.0;  // c sqrt(k)
  double b3 = 0.0;  // c min(sqrt k, sqrt q)
  double b4 = 0.0;  // c sqrt(k) / n^{1/q}
  // For q = inf: gamma_inf(l2^k) / sqrt(k) lies in (sqrt(2/pi), 1].
  double b4_window_lo = 0.0, b4_window_hi = 0.0;
};

GammaBounds gamma_bounds(double q, int k, int n, double c_desk = 1.0);

struct NearOptRow {
  double k = 0.0, log_k = 0.0, q = 0.0, k_pow = 0.0, rel_err = 0.0, sqrt_q_bound = 0.0;
};
struct ThresholdRow {
  double n = 0.0, k = 0.0, q = 0.0, n_pow = 0.0, k_quarter = 0.0;
  bool holds = false;
};
struct NearOptTable {
  std::vector<NearOptRow> rows;
  std::vector<ThresholdRow> thresholds;
};

// Rows for q = log k / log log k; threshold rows for q = sqrt(log k) at
// k = ceil(exp((4 log n)^{2/3})).
NearOptTable near_optimality_table(const std::vector<double>& k_values, const std::vector<double>& n_grid,
                                   double c_desk = 1.0);

// Certificate JSON.
constexpr int kSchemaVersion = 1;
nlohmann::json params_to_json(const DichotomyParams& p);
DichotomyParams params_from_json(const nlohmann::json& j);
nlohmann::json certificate_to_json(const ProjectionCertificate& c);
ProjectionCertificate certificate_from_json(const nlohmann::json& j);
nlohmann::json verification_to_json(const VerificationReport& r);
nlohmann::json matrix_to_json(const Matrix& M);  // row-major nested arrays
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace npp
