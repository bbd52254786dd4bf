#include "npp/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <functional>

#include "npp/parallel.hpp"
#include "npp/rng.hpp"

namespace npp {

std::string to_string(EstimateMode mode) { return mode == EstimateMode::exact ? "exact" : "monte-carlo"; }

Matrix gaussian_columns(int rows, long first, long count, std::uint64_t seed, std::uint64_t tag) {
  Matrix G(rows, count);
  for (long j = 0; j < count; ++j) {
    Stream s(seed, tag, static_cast<std::uint64_t>(first + j));
    for (int i = 0; i < rows; ++i) G(i, j) = s.normal();
  }
  return G;
}

namespace {

EllEstimate ell_of_map(const Matrix* S, const GaugeBody& to, int source_dim, long samples, std::uint64_t seed,
                       std::uint64_t tag) {
  if (samples < 100) throw InputError("at least 100 samples are required");
  std::vector<double> batch_sum(kBatches, 0.0);
  std::vector<long> batch_count(kBatches, 0);
  parallel_for(kBatches, [&](std::size_t b) {
    const long lo = samples * static_cast<long>(b) / kBatches, hi = samples * static_cast<long>(b + 1) / kBatches;
    // Sub-blocks bound memory for large sample counts.
    const long block = 4096;
    double sum = 0.0;
    for (long start = lo; start < hi; start += block) {
      const long count = std::min(block, hi - start);
      Matrix G = gaussian_columns(source_dim, start, count, seed, tag);
      Vector values;
      if (S)
        to.gauge_norm()->evaluate_columns((*S) * G, values, nullptr);
      else
        to.gauge_norm()->evaluate_columns(G, values, nullptr);
      for (long j = 0; j < count; ++j) sum += values(j) * values(j);
    }
    batch_sum[b] = sum;
    batch_count[b] = hi - lo;
  });
  double total = 0.0;
  for (double v : batch_sum) total += v;
  const double mean = total / static_cast<double>(samples);
  double var = 0.0;
  for (int b = 0; b < kBatches; ++b) {
    double mb = batch_sum[b] / static_cast<double>(batch_count[b]);
    var += (mb - mean) * (mb - mean);
  }
  var /= static_cast<double>(kBatches) * (kBatches - 1);
  EllEstimate e;
  e.value = std::sqrt(mean);
  e.stderr = e.value > 0 ? std::sqrt(var) / (2.0 * e.value) : 0.0;
  e.samples = samples;
  e.seed = seed;
  e.mode = EstimateMode::monte_carlo;
  return e;
}

}  // namespace

EllEstimate ell_body(const GaugeBody& body, long samples, std::uint64_t seed) {
  return ell_of_map(nullptr, body, body.dim(), samples, seed, stream_tag("ell"));
}

std::optional<EllEstimate> ell_body_exact(const GaugeBody& body) {
  const Matrix* L = body.gauge_norm()->ellipse_map();
  if (!L) return std::nullopt;
  EllEstimate e;
  e.value = L->norm();  // E|L g|^2 = |L|_F^2
  e.mode = EstimateMode::exact;
  return e;
}

EllEstimate ell_operator(const Matrix& S, const GaugeBody& to, long samples, std::uint64_t seed) {
  if (S.rows() != to.dim()) throw InputError("operator dimension mismatch");
  return ell_of_map(&S, to, static_cast<int>(S.cols()), samples, seed, stream_tag("ell_operator"));
}

// ---------------------------------------------------------- sign patterns

namespace {

// Evaluates |sum eps_i z_i| incrementally. When the norm is a simple function
// of a linear image, the image is updated instead of the vector.
class SignEvaluator {
 public:
  SignEvaluator(const Matrix& Z, const GaugeBody& body) : body_(body) {
    const Norm& N = *body.gauge_norm();
    if (auto lq = dynamic_cast<const LqNorm*>(&N)) {
      image_ = lq->map() * Z;
      q_ = lq->q();
      mode_ = Mode::lq;
    } else if (const Matrix* W = N.max_abs_map()) {
      image_ = W->transpose() * Z;
      q_ = std::numeric_limits<double>::infinity();
      mode_ = Mode::lq;
    } else {
      image_ = Z;
      mode_ = Mode::generic;
    }
  }

  Eigen::Index state_dim() const { return image_.rows(); }
  const Matrix& image() const { return image_; }

  double norm(const Vector& state) const {
    if (mode_ == Mode::generic) return body_.gauge(state);
    if (q_ == 1.0) return state.lpNorm<1>();
    if (q_ == 2.0) return state.norm();
    if (std::isinf(q_)) return state.lpNorm<Eigen::Infinity>();
    double mx = state.lpNorm<Eigen::Infinity>();
    if (mx == 0.0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < state.size(); ++i) s += std::pow(std::abs(state(i)) / mx, q_);
    return mx * std::pow(s, 1.0 / q_);
  }

 private:
  enum class Mode { lq, generic };
  const GaugeBody& body_;
  Matrix image_;
  double q_ = 2.0;
  Mode mode_;
};

struct ChunkStats {
  double sum = 0.0, sum_sq = 0.0, best = -1.0;
  std::uint64_t best_code = 0;
  bool exceeded = false;
};

std::vector<int> pattern_from_code(std::uint64_t gray, int s) {
  std::vector<int> p(s, 1);
  for (int i = 1; i < s; ++i) p[i] = (gray >> (i - 1)) & 1 ? -1 : 1;
  return p;
}

// Enumerates patterns with eps_1 = +1 in Gray-code order, chunked so the
// reduction order is fixed.
std::vector<ChunkStats> enumerate_patterns(const SignEvaluator& ev, int s, double stop_above) {
  const std::uint64_t total = std::uint64_t{1} << (s - 1);
  const std::uint64_t chunks = std::min<std::uint64_t>(total, 64);
  std::vector<ChunkStats> stats(chunks);
  // Lowest chunk index that found a violation; only higher chunks may abort,
  // so the reported witness does not depend on scheduling.
  std::atomic<std::uint64_t> first_violation{chunks};
  parallel_for(chunks, [&](std::size_t c) {
    if (first_violation.load() < c) return;
    const std::uint64_t lo = total * c / chunks, hi = total * (c + 1) / chunks;
    ChunkStats& st = stats[c];
    std::uint64_t gray = lo ^ (lo >> 1);
    Vector state = ev.image().col(0);
    for (int i = 1; i < s; ++i) {
      if ((gray >> (i - 1)) & 1)
        state -= ev.image().col(i);
      else
        state += ev.image().col(i);
    }
    for (std::uint64_t k = lo; k < hi; ++k) {
      if (k > lo) {
        std::uint64_t g = k ^ (k >> 1);
        std::uint64_t diff = g ^ gray;
        int bit = __builtin_ctzll(diff);
        // bit set means eps = -1 for index bit + 1
        if (g & diff)
          state -= 2.0 * ev.image().col(bit + 1);
        else
          state += 2.0 * ev.image().col(bit + 1);
        gray = g;
      }
      double v = ev.norm(state);
      st.sum += v;
      st.sum_sq += v * v;
      if (v > st.best) {
        st.best = v;
        st.best_code = gray;
      }
      if (v > stop_above) {
        st.exceeded = true;
        std::uint64_t cur = first_violation.load();
        while (c < cur && !first_violation.compare_exchange_weak(cur, c)) {
        }
        break;
      }
      if ((k & 255) == 0 && first_violation.load() < c) break;
    }
  });
  return stats;
}

}  // namespace

SignSup sign_sup(const Matrix& Z, const GaugeBody& norm_body, double stop_above) {
  const int s = static_cast<int>(Z.cols());
  SignSup out;
  if (s == 0) return out;
  if (s > 40) throw InputError("sign enumeration limited to 40 vectors");
  SignEvaluator ev(Z, norm_body);
  auto stats = enumerate_patterns(ev, s, stop_above);
  std::uint64_t code = 0;
  double best = -1.0;
  for (const auto& st : stats) {
    if (st.exceeded && !out.exceeded) {
      // The first chunk that found a violation supplies the witness.
      out.exceeded = true;
      best = st.best;
      code = st.best_code;
    } else if (!out.exceeded && st.best > best) {
      best = st.best;
      code = st.best_code;
    }
  }
  out.value = best;
  out.pattern = pattern_from_code(code, s);
  return out;
}

SignAverage sign_average(const Matrix& Z, const GaugeBody& norm_body, int limit, long samples, std::uint64_t seed) {
  if (Z.rows() != norm_body.dim()) throw InputError("dimension mismatch");
  const int s = static_cast<int>(Z.cols());
  SignAverage out;
  out.s = s;
  if (s == 0) return out;
  SignEvaluator ev(Z, norm_body);
  if (s <= limit) {
    auto stats = enumerate_patterns(ev, s, std::numeric_limits<double>::infinity());
    double sum = 0, sum_sq = 0, best = -1;
    std::uint64_t code = 0;
    for (const auto& st : stats) {
      sum += st.sum;
      sum_sq += st.sum_sq;
      if (st.best > best) {
        best = st.best;
        code = st.best_code;
      }
    }
    const double count = std::ldexp(1.0, s - 1);
    out.m1 = sum / count;
    out.second_moment = sum_sq / count;
    out.w = best;
    out.argmax = pattern_from_code(code, s);
    out.mode = SignMode::enumerated;
    return out;
  }
  // Sampled: Monte Carlo mean, best sample improved by single sign flips.
  std::vector<double> values(static_cast<std::size_t>(samples));
  std::vector<std::vector<int>> patterns(static_cast<std::size_t>(samples));
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    Stream st(seed, stream_tag("sign_average"), i);
    std::vector<int> p(s);
    Vector state = Vector::Zero(ev.state_dim());
    for (int k = 0; k < s; ++k) {
      p[k] = (st.next_u64() >> 63) ? -1 : 1;
      state += p[k] * ev.image().col(k);
    }
    values[i] = ev.norm(state);
    patterns[i] = std::move(p);
  });
  double sum = 0, sum_sq = 0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    sum_sq += values[i] * values[i];
    if (values[i] > values[best_i]) best_i = i;
  }
  out.m1 = sum / static_cast<double>(samples);
  out.second_moment = sum_sq / static_cast<double>(samples);
  std::vector<int> p = patterns[best_i];
  Vector state = Vector::Zero(ev.state_dim());
  for (int k = 0; k < s; ++k) state += p[k] * ev.image().col(k);
  double best = ev.norm(state);
  for (bool improved = true; improved;) {
    improved = false;
    for (int k = 0; k < s; ++k) {
      Vector trial = state - 2.0 * p[k] * ev.image().col(k);
      double v = ev.norm(trial);
      if (v > best * (1 + 1e-14)) {
        best = v;
        state = trial;
        p[k] = -p[k];
        improved = true;
      }
    }
  }
  if (p[0] < 0)
    for (int& e : p) e = -e;
  out.w = best;
  out.argmax = p;
  out.mode = SignMode::sampled;
  return out;
}

// ------------------------------------------------------------------- Haar

Subspace haar_subspace(int n, int m, std::uint64_t seed) {
  if (m < 1 || m > n) throw InputError("haar_subspace needs 1 <= m <= n");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Matrix G(n, m);
    Stream s(seed, stream_tag("haar"), attempt);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) G(i, j) = s.normal();
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Matrix Q = qr.householderQ() * Matrix::Identity(n, m);
    bool ok = true;
    for (int i = 0; i < m; ++i) {
      if (std::abs(R(i, i)) < 1e-10) ok = false;
      if (R(i, i) < 0) Q.col(i) = -Q.col(i);
    }
    if (ok) return Subspace::from_basis(Q);
  }
}

}  // namespace npp
