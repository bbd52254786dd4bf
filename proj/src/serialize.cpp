#include <cmath>
#include <limits>

#include "npp/driver.hpp"
#include "npp/rng.hpp"

namespace npp {
namespace {

using nlohmann::json;

// Non-finite doubles are written as null by the JSON library.
double num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json ell_to_json(const EllEstimate& e) {
  return {{"value", e.value}, {"stderr", e.stderr}, {"samples", e.samples}, {"seed", e.seed}, {"mode", to_string(e.mode)}};
}

EllEstimate ell_from_json(const json& j) {
  EllEstimate e;
  e.value = num(j.at("value"));
  e.stderr = num(j.at("stderr"));
  e.samples = j.at("samples").get<long>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.mode = j.at("mode").get<std::string>() == "exact" ? EstimateMode::exact : EstimateMode::monte_carlo;
  return e;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(j[i]);
  return v;
}

std::string rule_name(ThresholdRule r) { return r == ThresholdRule::quarter_power ? "quarter-power" : "exp-sqrt-log"; }
std::string mode_name(BudgetMode m) { return m == BudgetMode::log_squared ? "log-squared" : "tradeoff"; }

}  // namespace

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw InputError("matrix must be an array of rows");
  if (j.empty()) return Matrix(0, 0);
  const std::size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw InputError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = num(j[i][c]);
  }
  return M;
}

json params_to_json(const DichotomyParams& p) {
  const OperatorNormOptions& o = p.extraction.norm_options;
  return {{"n", p.n},
          {"k", p.k},
          {"a", p.a},
          {"k_n_target", p.k_n_target},
          {"c_desk", p.c_desk},
          {"C_desk", p.C_desk},
          {"C_prime_desk", p.C_prime_desk},
          {"threshold_rule", rule_name(p.rule)},
          {"budget_mode", mode_name(p.budget_mode)},
          {"iso_cap", p.iso_cap},
          {"l2_ratio_cap", p.l2_ratio_cap},
          {"seed", p.seed},
          {"position_budget", p.position_budget},
          {"position_samples", p.position_samples},
          {"ell_samples", p.ell_samples},
          {"section_trials", p.section_trials},
          {"section_directions", p.section_directions},
          {"record_timings", p.record_timings},
          {"extraction",
           {{"ell_samples", p.extraction.ell_samples},
            {"ri_exhaustive", p.extraction.ri_exhaustive},
            {"talagrand_exhaustive", p.extraction.talagrand_exhaustive},
            {"final_exhaustive", p.extraction.final_exhaustive},
            {"C_report", p.extraction.C_report},
            {"restarts", o.restarts},
            {"max_iterations", o.max_iterations},
            {"vertex_limit", o.vertex_limit}}}};
}

DichotomyParams params_from_json(const json& j) {
  DichotomyParams p;
  p.n = j.at("n").get<int>();
  p.k = j.at("k").get<int>();
  p.a = num(j.at("a"));
  p.k_n_target = j.at("k_n_target").get<int>();
  p.c_desk = num(j.at("c_desk"));
  p.C_desk = num(j.at("C_desk"));
  p.C_prime_desk = num(j.at("C_prime_desk"));
  const std::string rule = j.at("threshold_rule").get<std::string>();
  if (rule != "quarter-power" && rule != "exp-sqrt-log") throw InputError("unknown threshold_rule '" + rule + "'");
  p.rule = rule == "quarter-power" ? ThresholdRule::quarter_power : ThresholdRule::exp_sqrt_log;
  const std::string mode = j.at("budget_mode").get<std::string>();
  if (mode != "log-squared" && mode != "tradeoff") throw InputError("unknown budget_mode '" + mode + "'");
  p.budget_mode = mode == "log-squared" ? BudgetMode::log_squared : BudgetMode::tradeoff;
  p.iso_cap = num(j.at("iso_cap"));
  p.l2_ratio_cap = num(j.at("l2_ratio_cap"));
  p.seed = j.at("seed").get<std::uint64_t>();
  p.position_budget = j.at("position_budget").get<int>();
  p.position_samples = j.at("position_samples").get<long>();
  p.ell_samples = j.at("ell_samples").get<long>();
  p.section_trials = j.at("section_trials").get<int>();
  p.section_directions = j.at("section_directions").get<int>();
  p.record_timings = j.at("record_timings").get<bool>();
  const json& e = j.at("extraction");
  p.extraction.ell_samples = e.at("ell_samples").get<long>();
  p.extraction.ri_exhaustive = e.at("ri_exhaustive").get<int>();
  p.extraction.talagrand_exhaustive = e.at("talagrand_exhaustive").get<int>();
  p.extraction.final_exhaustive = e.at("final_exhaustive").get<int>();
  p.extraction.C_report = num(e.at("C_report"));
  p.extraction.norm_options.restarts = e.at("restarts").get<int>();
  p.extraction.norm_options.max_iterations = e.at("max_iterations").get<int>();
  p.extraction.norm_options.vertex_limit = e.at("vertex_limit").get<std::size_t>();
  return p;
}

json certificate_to_json(const ProjectionCertificate& c) {
  const PositionResult& pos = c.position;
  json timings = json::object();
  for (const auto& [k, v] : c.timings_ms) timings[k] = v;
  json seeds = {{"seed", c.params.seed}};
  for (const char* tag : {"dichotomy_position", "dichotomy_l1", "dichotomy_linf", "dichotomy_section", "dichotomy_norm"})
    seeds[tag] = derive_seed(c.params.seed, stream_tag(tag), 0);
  return {{"schema_version", kSchemaVersion},
          {"body_spec", c.body_spec},
          {"params", params_to_json(c.params)},
          {"branch", to_string(c.branch)},
          {"P", matrix_to_json(c.P)},
          {"P_position", matrix_to_json(c.P_position)},
          {"m", c.m},
          {"norm",
           {{"value", c.norm_P.value},
            {"stderr", 0.0},
            {"kind", to_string(c.norm_P.kind)},
            {"witness", vector_to_json(c.norm_P.witness)}}},
          {"norm_budget", c.norm_budget},
          {"iso_constant", c.iso_constant},
          {"range_basis", matrix_to_json(c.range_basis)},
          {"dual_system", matrix_to_json(c.dual_system)},
          {"position",
           {{"map", matrix_to_json(pos.map)},
            {"ell_k", ell_to_json(pos.ell_k)},
            {"ell_kpolar", ell_to_json(pos.ell_kpolar)},
            {"product", pos.product},
            {"product_stderr", pos.product_stderr},
            {"start_product", pos.start_product},
            {"target", pos.target},
            {"iterations", pos.iterations}}},
          {"trace", c.trace},
          {"failures", c.failures},
          {"passed", c.passed},
          {"seeds", seeds},
          {"timings_ms", timings}};
}

ProjectionCertificate certificate_from_json(const json& j) {
  try {
    if (!j.is_object()) throw InputError("certificate must be a JSON object");
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion)
      throw InputError("unsupported schema_version " + std::to_string(version) + " (expected " +
                       std::to_string(kSchemaVersion) + ")");
    ProjectionCertificate c;
    c.body_spec = j.at("body_spec");
    c.params = params_from_json(j.at("params"));
    c.branch = branch_from_string(j.at("branch").get<std::string>());
    c.P = matrix_from_json(j.at("P"));
    c.P_position = matrix_from_json(j.at("P_position"));
    c.m = j.at("m").get<int>();
    const json& nm = j.at("norm");
    c.norm_P.value = num(nm.at("value"));
    const std::string kind = nm.at("kind").get<std::string>();
    c.norm_P.kind = kind == to_string(EstimateKind::exact) ? EstimateKind::exact : EstimateKind::lower_witness;
    c.norm_P.witness = vector_from_json(nm.at("witness"));
    c.norm_budget = num(j.at("norm_budget"));
    c.iso_constant = num(j.at("iso_constant"));
    c.range_basis = matrix_from_json(j.at("range_basis"));
    c.dual_system = matrix_from_json(j.at("dual_system"));
    const json& pos = j.at("position");
    c.position.map = matrix_from_json(pos.at("map"));
    c.position.ell_k = ell_from_json(pos.at("ell_k"));
    c.position.ell_kpolar = ell_from_json(pos.at("ell_kpolar"));
    c.position.product = num(pos.at("product"));
    c.position.product_stderr = num(pos.at("product_stderr"));
    c.position.start_product = num(pos.at("start_product"));
    c.position.target = num(pos.at("target"));
    c.position.iterations = pos.at("iterations").get<int>();
    c.trace = j.at("trace");
    c.failures = j.at("failures").get<std::vector<std::string>>();
    c.passed = j.at("passed").get<bool>();
    for (const auto& [k, v] : j.at("timings_ms").items()) c.timings_ms[k] = num(v);
    if (c.P.rows() != c.P.cols()) throw InputError("P must be square");
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed certificate: ") + e.what());
  }
}

json verification_to_json(const VerificationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"claimed", c.claimed}, {"recomputed", c.recomputed}, {"pass", c.pass}});
  return {{"schema_version", kSchemaVersion}, {"checks", checks}, {"passed", r.passed}};
}

}  // namespace npp
