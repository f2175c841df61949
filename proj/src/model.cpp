#include "ghcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ghcm/errors.hpp"

namespace ghcm {

namespace {

constexpr int kGridPoints = 257;
constexpr double kGoldenTolerance = 1e-10;
// Values closer than this count as equal, so flat stretches keep the
// smallest t instead of whatever rounding noise prefers.
constexpr double kTieTolerance = 1e-14;

double mixture_phi(std::span<const Distribution> a, std::span<const Distribution> b,
                   std::span<const double> prior, double t) {
  double s = 0.0;
  for (std::size_t r = 0; r < prior.size(); ++r) s += prior[r] * phi_t(a[r], b[r], t);
  return s;
}

}  // namespace

void ModelSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidSpec, msg); };
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be positive");
  if (!(n > 1.0) || !std::isfinite(n)) fail("n must exceed 1");
  if (d < 1) fail("d must be a positive integer");
  const std::size_t kk = labels.size();
  if (kk < 2) fail("at least two communities are required");
  for (std::size_t i = 1; i < kk; ++i) {
    if (labels[i] <= labels[i - 1]) fail("labels must be strictly increasing");
  }
  if (prior.size() != kk) fail("prior length must equal the number of labels");
  double total = 0.0;
  for (double p : prior) {
    if (!(p > 0.0)) fail("prior entries must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) fail("prior must sum to 1");
  if (P.size() != kk) fail("P must be k x k");
  for (std::size_t i = 0; i < kk; ++i) {
    if (P[i].size() != kk) fail("P must be k x k");
    for (std::size_t j = 0; j < kk; ++j) P[i][j].validate();
  }
  const auto kind = P[0][0].kind;
  for (std::size_t i = 0; i < kk; ++i) {
    for (std::size_t j = 0; j < kk; ++j) {
      if (P[i][j].kind != kind) fail("all entries of P must share one family");
      const auto& a = P[i][j];
      const auto& b = P[j][i];
      if (a.p != b.p || a.mean != b.mean || a.variance != b.variance) fail("P must be symmetric");
    }
  }
}

double ModelSpec::side() const { return std::pow(n, 1.0 / d); }

double ModelSpec::log_n() const { return std::log(n); }

double ModelSpec::radius() const { return std::pow(std::log(n), 1.0 / d); }

int ModelSpec::index_of(int label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) {
    throw Error(ErrorCode::kInvalidSpec, "label " + std::to_string(label) + " not in Z");
  }
  return static_cast<int>(it - labels.begin());
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"lambda", s.lambda}, {"n", s.n},         {"d", s.d},
                     {"labels", s.labels}, {"prior", s.prior}, {"P", s.P}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.lambda = j.at("lambda").get<double>();
  s.n = j.at("n").get<double>();
  s.d = j.at("d").get<int>();
  s.labels = j.at("labels").get<std::vector<int>>();
  s.prior = j.at("prior").get<std::vector<double>>();
  s.P = j.at("P").get<Matrix>();
  s.validate();
}

ModelSpec symmetric_gsbm(double lambda, double n, int d, int k, double a, double b) {
  ModelSpec s;
  s.lambda = lambda;
  s.n = n;
  s.d = d;
  if (k == 2) {
    s.labels = {-1, 1};
  } else {
    s.labels.resize(static_cast<std::size_t>(k));
    std::iota(s.labels.begin(), s.labels.end(), 1);
  }
  s.prior.assign(static_cast<std::size_t>(k), 1.0 / k);
  s.P.assign(static_cast<std::size_t>(k), std::vector<Distribution>(static_cast<std::size_t>(k)));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      s.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          Distribution::bernoulli(i == j ? a : b);
    }
  }
  // Uniform 1/k may not sum to exactly 1 in floating point for every k.
  s.prior.back() = 1.0 - std::accumulate(s.prior.begin(), s.prior.end() - 1, 0.0);
  s.validate();
  return s;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

Relabeling Relabeling::identity(std::size_t k) {
  Relabeling r;
  r.perm.resize(k);
  std::iota(r.perm.begin(), r.perm.end(), 0);
  return r;
}

bool Relabeling::is_identity() const {
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] != static_cast<int>(i)) return false;
  }
  return true;
}

Relabeling Relabeling::compose(const Relabeling& inner) const {
  Relabeling out;
  out.perm.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out.perm[i] = (*this)(inner(static_cast<int>(i)));
  return out;
}

DivergenceResult ch_divergence(std::span<const Distribution> theta_i,
                               std::span<const Distribution> theta_j,
                               std::span<const double> prior) {
  if (theta_i.size() != prior.size() || theta_j.size() != prior.size()) {
    throw Error(ErrorCode::kDomainError, "divergence vectors must have length k");
  }

  // Coarse grid; keep the smallest t among equal minima.
  int best = 0;
  double best_val = mixture_phi(theta_i, theta_j, prior, 0.0);
  for (int g = 1; g < kGridPoints; ++g) {
    const double t = static_cast<double>(g) / (kGridPoints - 1);
    const double v = mixture_phi(theta_i, theta_j, prior, t);
    if (v < best_val - kTieTolerance) {
      best_val = v;
      best = g;
    }
  }

  // Golden-section on the bracketing cell pair.
  double lo = static_cast<double>(std::max(best - 1, 0)) / (kGridPoints - 1);
  double hi = static_cast<double>(std::min(best + 1, kGridPoints - 1)) / (kGridPoints - 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = mixture_phi(theta_i, theta_j, prior, x1);
  double f2 = mixture_phi(theta_i, theta_j, prior, x2);
  while (hi - lo > kGoldenTolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = mixture_phi(theta_i, theta_j, prior, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = mixture_phi(theta_i, theta_j, prior, x2);
    }
  }
  const double t_mid = 0.5 * (lo + hi);
  const double f_mid = mixture_phi(theta_i, theta_j, prior, t_mid);

  DivergenceResult out;
  if (f_mid < best_val - kTieTolerance) {
    out.argmin_t = t_mid;
    best_val = f_mid;
  } else {
    out.argmin_t = static_cast<double>(best) / (kGridPoints - 1);
  }
  out.value = std::clamp(1.0 - best_val, 0.0, 1.0);
  return out;
}

std::vector<PairDivergence> pairwise_divergences(const ModelSpec& spec) {
  std::vector<PairDivergence> out;
  const int kk = static_cast<int>(spec.k());
  for (int i = 0; i < kk; ++i) {
    for (int j = i + 1; j < kk; ++j) {
      out.push_back({i, j, ch_divergence(spec.P[static_cast<std::size_t>(i)],
                                         spec.P[static_cast<std::size_t>(j)], spec.prior)});
    }
  }
  return out;
}

double min_pairwise_divergence(const ModelSpec& spec) {
  double best = 1.0;
  for (const auto& pd : pairwise_divergences(spec)) best = std::min(best, pd.result.value);
  return best;
}

double threshold_margin(const ModelSpec& spec) {
  return spec.lambda * unit_ball_volume(spec.d) * min_pairwise_divergence(spec);
}

std::vector<Relabeling> enumerate_relabelings(const ModelSpec& spec) {
  const std::size_t kk = spec.k();
  if (kk > kMaxEnumerableCommunities) {
    throw Error(ErrorCode::kTooManyCommunities, "relabeling enumeration requires k <= 8");
  }
  std::vector<Relabeling> out;
  Relabeling w = Relabeling::identity(kk);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < kk && ok; ++i) {
      const auto wi = static_cast<std::size_t>(w.perm[i]);
      ok = std::abs(spec.prior[i] - spec.prior[wi]) <= kParamTolerance;
      for (std::size_t j = 0; j < kk && ok; ++j) {
        ok = approx_equal(spec.P[i][j], spec.P[wi][static_cast<std::size_t>(w.perm[j])]);
      }
    }
    if (ok) out.push_back(w);
  } while (std::next_permutation(w.perm.begin(), w.perm.end()));
  return out;
}

bool satisfies_distinctness(const ModelSpec& spec) {
  const std::size_t kk = spec.k();
  for (std::size_t i = 0; i < kk; ++i) {
    for (std::size_t r = 0; r < kk; ++r) {
      for (std::size_t s = r + 1; s < kk; ++s) {
        if (approx_equal(spec.P[i][r], spec.P[i][s])) return false;
      }
    }
  }
  return true;
}

bool satisfies_strong_distinctness(const ModelSpec& spec) {
  std::vector<Distribution> entries;
  const std::size_t kk = spec.k();
  for (std::size_t i = 0; i < kk; ++i) {
    for (std::size_t j = i; j < kk; ++j) entries.push_back(spec.P[i][j]);
  }
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = a + 1; b < entries.size(); ++b) {
      if (approx_equal(entries[a], entries[b])) return false;
    }
  }
  return true;
}

}  // namespace ghcm
