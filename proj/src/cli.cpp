#include "npp/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "npp/driver.hpp"
#include "npp/euclidean.hpp"
#include "npp/gaussian.hpp"
#include "npp/parallel.hpp"
#include "npp/position.hpp"

namespace npp {
namespace {

using nlohmann::json;

struct Common {
  std::vector<std::string> body;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* sub, Common& c, bool with_body) {
  if (with_body) sub->add_option("body", c.body, "shorthand (lq n=32 q=1, ball n=8) or a JSON file")->required();
  sub->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "cap on worker threads (NPP_THREADS)")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", c.out, "output path (default stdout)");
}

json body_echo(const Common& c) { return c.body; }

void emit(const std::string& text, const Common& c, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw InputError("cannot write " + c.out);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

double parse_q(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    double q = std::stod(s, &pos);
    if (pos != s.size()) throw InputError("bad value for q: " + s);
    return q;
  } catch (const std::logic_error&) {
    throw InputError("bad value for q: " + s);
  }
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw InputError("bad grid entry: " + item);
    } catch (const std::logic_error&) {
      throw InputError("bad grid entry: " + item);
    }
  }
  return v;
}

json ell_json(const EllEstimate& e) {
  return {{"value", e.value}, {"stderr", e.stderr}, {"samples", e.samples}, {"seed", e.seed}, {"mode", to_string(e.mode)}};
}

json position_json(const PositionResult& p) {
  return {{"map", matrix_to_json(p.map)},
          {"ell_k", ell_json(p.ell_k)},
          {"ell_kpolar", ell_json(p.ell_kpolar)},
          {"product", p.product},
          {"product_stderr", p.product_stderr},
          {"start_product", p.start_product},
          {"target", p.target},
          {"iterations", p.iterations},
          {"balanced", p.balanced}};
}

json section_json(const SectionReport& s) {
  json rows = json::array();
  for (const auto& t : s.trial_rows)
    rows.push_back({{"seed", t.seed}, {"m", t.m}, {"r", t.r}, {"R", t.R}, {"ratio", t.ratio}, {"pf_norm", t.pf_norm}});
  return {{"basis", matrix_to_json(s.F.basis())},
          {"r", s.r},
          {"R", s.R},
          {"ratio", s.ratio},
          {"pf_norm", s.pf_norm.value},
          {"bound", s.bound},
          {"alpha", s.alpha},
          {"beta", s.beta},
          {"trials", s.trials},
          {"chosen", s.chosen},
          {"fraction_good", s.fraction_good},
          {"ratio_cap", s.ratio_cap},
          {"C_desk", s.C_desk},
          {"c_desk", s.c_desk},
          {"trial_rows", rows}};
}

// Returns the exit code of the selected subcommand.
using Action = std::function<int()>;

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

GaugeBody load_body(const std::vector<std::string>& tokens) {
  if (tokens.size() == 1 && tokens[0].find('=') == std::string::npos && tokens[0] != "lq" && tokens[0] != "ball") {
    const json j = read_json_file(tokens[0]);
    try {
      return GaugeBody::from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(tokens[0] + ": malformed body: " + e.what());
    }
  }
  return parse_body_shorthand(tokens);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"normed-space projection finder"};
  app.require_subcommand(1);
  Action action;

  // find-projection
  Common fp;
  DichotomyParams fpp;
  std::string rule = "quarter-power", budget_mode = "log-squared";
  std::optional<double> a_override;
  bool timings = false;
  auto* find = app.add_subcommand("find-projection", "run the dichotomy and write a certificate");
  add_common(find, fp, true);
  find->add_option("--samples", fpp.position_samples, "samples per position evaluation")->capture_default_str();
  find->add_option("--budget", fpp.position_budget, "position optimizer iterations")->capture_default_str();
  find->add_option("--trials", fpp.section_trials, "Haar subspaces tried on the l2 branch")->capture_default_str();
  find->add_option("--c-desk", fpp.c_desk)->capture_default_str();
  find->add_option("--C-desk", fpp.C_desk)->capture_default_str();
  find->add_option("--C-prime-desk", fpp.C_prime_desk)->capture_default_str();
  find->add_option("--ratio-cap", fpp.l2_ratio_cap)->capture_default_str();
  find->add_option("--iso-cap", fpp.iso_cap)->capture_default_str();
  find->add_option("--a", a_override, "dichotomy threshold (default from --threshold-rule)");
  find->add_option("--threshold-rule", rule)->check(CLI::IsMember({"quarter-power", "exp-sqrt-log"}));
  find->add_option("--budget-mode", budget_mode)->check(CLI::IsMember({"log-squared", "tradeoff"}));
  find->add_flag("--timings", timings, "record stage timings (output is then run-dependent)");
  find->callback([&] {
    action = [&] {
      const GaugeBody body = load_body(fp.body);
      DichotomyParams p = fpp;
      p.n = body.dim();
      p.seed = fp.seed;
      p.rule = rule == "quarter-power" ? ThresholdRule::quarter_power : ThresholdRule::exp_sqrt_log;
      p.budget_mode = budget_mode == "log-squared" ? BudgetMode::log_squared : BudgetMode::tradeoff;
      p.record_timings = timings;
      p.k = 0;
      p.k_n_target = 0;
      p.a = a_override.value_or(0.0);
      const ProjectionCertificate cert = find_projection(body, p);
      json j = certificate_to_json(cert);
      j["config"] = {{"command", "find-projection"}, {"body", body_echo(fp)}, {"seed", fp.seed}};
      emit(dump(j), fp, out);
      return cert.passed ? kExitPass : kExitCertifiedFail;
    };
  });

  // verify
  Common vf;
  std::string cert_path;
  auto* verify = app.add_subcommand("verify", "recompute the claims of a certificate");
  add_common(verify, vf, true);
  verify->add_option("--cert", cert_path, "certificate JSON")->required();
  verify->callback([&] {
    action = [&] {
      const GaugeBody body = load_body(vf.body);
      const ProjectionCertificate cert = certificate_from_json(read_json_file(cert_path));
      const VerificationReport r = verify_certificate(body, cert, vf.seed);
      json j = verification_to_json(r);
      j["config"] = {{"command", "verify"}, {"body", body_echo(vf)}, {"cert", cert_path}, {"seed", vf.seed}};
      emit(dump(j), vf, out);
      return r.passed ? kExitPass : kExitCertifiedFail;
    };
  });

  // ell
  Common el;
  long ell_samples = 20000;
  auto* ell = app.add_subcommand("ell", "Monte Carlo estimate of l(K)");
  add_common(ell, el, true);
  ell->add_option("--samples", ell_samples)->capture_default_str()->check(CLI::PositiveNumber);
  ell->callback([&] {
    action = [&] {
      const GaugeBody body = load_body(el.body);
      json j = ell_json(ell_body(body, ell_samples, el.seed));
      j["schema_version"] = kSchemaVersion;
      j["config"] = {{"command", "ell"}, {"body", body_echo(el)}, {"samples", ell_samples}, {"seed", el.seed}};
      emit(dump(j), el, out);
      return kExitPass;
    };
  });

  // position
  Common ps;
  long pos_samples = 4000;
  int pos_budget = 60;
  auto* position = app.add_subcommand("position", "optimize l(uK) l((uK) polar)");
  add_common(position, ps, true);
  position->add_option("--samples", pos_samples)->capture_default_str()->check(CLI::PositiveNumber);
  position->add_option("--budget", pos_budget)->capture_default_str()->check(CLI::NonNegativeNumber);
  position->callback([&] {
    action = [&] {
      const GaugeBody body = load_body(ps.body);
      json j = position_json(optimize_position(body, pos_budget, pos_samples, ps.seed));
      j["schema_version"] = kSchemaVersion;
      j["config"] = {{"command", "position"},
                     {"body", body_echo(ps)},
                     {"samples", pos_samples},
                     {"budget", pos_budget},
                     {"seed", ps.seed}};
      emit(dump(j), ps, out);
      return kExitPass;
    };
  });

  // section
  Common sc;
  sc.format = "csv";
  int sec_m = 2, sec_trials = 20;
  SectionOptions sec_opts;
  auto* section = app.add_subcommand("section", "random Euclidean sections, one row per trial");
  add_common(section, sc, true);
  section->add_option("--m", sec_m)->capture_default_str()->check(CLI::PositiveNumber);
  section->add_option("--trials", sec_trials)->capture_default_str()->check(CLI::PositiveNumber);
  section->add_option("--ratio-cap", sec_opts.ratio_cap)->capture_default_str();
  section->add_option("--C-desk", sec_opts.C_desk)->capture_default_str();
  section->add_option("--c-desk", sec_opts.c_desk)->capture_default_str();
  section->add_option("--directions", sec_opts.directions)->capture_default_str()->check(CLI::PositiveNumber);
  section->add_option("--format", sc.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  section->callback([&] {
    action = [&] {
      const GaugeBody body = load_body(sc.body);
      if (sec_m > body.dim()) throw InputError("--m exceeds the dimension");
      const SectionReport rep = find_euclidean_complement(body, body, sec_m, sec_trials, sc.seed, sec_opts);
      const json config = {{"command", "section"},
                           {"body", body_echo(sc)},
                           {"m", sec_m},
                           {"trials", sec_trials},
                           {"ratio_cap", sec_opts.ratio_cap},
                           {"C_desk", sec_opts.C_desk},
                           {"c_desk", sec_opts.c_desk},
                           {"directions", sec_opts.directions},
                           {"seed", sc.seed}};
      if (sc.format == "json") {
        json j = section_json(rep);
        j["schema_version"] = kSchemaVersion;
        j["config"] = config;
        emit(dump(j), sc, out);
        return kExitPass;
      }
      std::string text = "# schema_version: " + std::to_string(kSchemaVersion) + "\n# config: " + config.dump() +
                         "\nseed,m,r,R,ratio,pf_norm\n";
      for (const auto& t : rep.trial_rows)
        text += std::to_string(t.seed) + "," + std::to_string(t.m) + "," + format_double(t.r) + "," +
                format_double(t.R) + "," + format_double(t.ratio) + "," + format_double(t.pf_norm) + "\n";
      emit(text, sc, out);
      return kExitPass;
    };
  });

  // bench
  auto* bench = app.add_subcommand("bench", "factorization-bound arithmetic");
  bench->require_subcommand(1);
  Common bg;
  std::string q_text;
  int g_k = 0, g_n = 1;
  double g_c = 1.0;
  auto* gamma = bench->add_subcommand("gamma", "lower bounds for gamma_q");
  add_common(gamma, bg, false);
  gamma->add_option("--q", q_text, "q >= 2 or inf")->required();
  gamma->add_option("--k", g_k)->required();
  gamma->add_option("--n", g_n)->capture_default_str();
  gamma->add_option("--c-desk", g_c)->capture_default_str();
  gamma->callback([&] {
    action = [&] {
      const GammaBounds g = gamma_bounds(parse_q(q_text), g_k, g_n, g_c);
      json j = {{"schema_version", kSchemaVersion},
                {"config", {{"command", "bench gamma"}, {"q", q_text}, {"k", g_k}, {"n", g_n}, {"c_desk", g_c}}},
                {"q", g.q},
                {"q_star", g.q_star},
                {"k", g.k},
                {"n", g.n},
                {"c", g.c},
                {"b1", g.b1},
                {"b2", g.b2},
                {"b3", g.b3},
                {"b4", g.b4}};
      if (std::isinf(g.q)) j["b4_window"] = {g.b4_window_lo, g.b4_window_hi};
      emit(dump(j), bg, out);
      return kExitPass;
    };
  });

  Common bn;
  std::string k_grid = "1e3,1e6,1e9", n_grid = "1e2,1e4,1e6,1e8";
  double n_c = 1.0;
  auto* near = bench->add_subcommand("near-opt", "k^{1/q} against log k, and the threshold check");
  add_common(near, bn, false);
  near->add_option("--k-grid", k_grid)->capture_default_str();
  near->add_option("--n-grid", n_grid)->capture_default_str();
  near->add_option("--c-desk", n_c)->capture_default_str();
  near->callback([&] {
    action = [&] {
      const NearOptTable t = near_optimality_table(parse_grid(k_grid), parse_grid(n_grid), n_c);
      json rows = json::array(), thr = json::array();
      for (const auto& r : t.rows)
        rows.push_back({{"k", r.k},
                        {"log_k", r.log_k},
                        {"q", r.q},
                        {"k_pow", r.k_pow},
                        {"rel_err", r.rel_err},
                        {"sqrt_q_bound", r.sqrt_q_bound}});
      for (const auto& r : t.thresholds)
        thr.push_back({{"n", r.n}, {"k", r.k}, {"q", r.q}, {"n_pow", r.n_pow}, {"k_quarter", r.k_quarter}, {"holds", r.holds}});
      json j = {{"schema_version", kSchemaVersion},
                {"config", {{"command", "bench near-opt"}, {"k_grid", k_grid}, {"n_grid", n_grid}, {"c_desk", n_c}}},
                {"rows", rows},
                {"thresholds", thr}};
      emit(dump(j), bn, out);
      return kExitPass;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  for (const Common* c : {&fp, &vf, &el, &ps, &sc, &bg, &bn})
    if (c->threads > 0) set_thread_count(c->threads);
  if (!action) {
    err << "error: no command\n";
    return kExitInputError;
  }
  try {
    return action();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace npp
