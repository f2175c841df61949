#include "ghcm/distribution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "ghcm/errors.hpp"

namespace ghcm {

namespace {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes and weights on [-1, 1] by Newton iteration on P_N.
GaussLegendre make_gauss_legendre(int order) {
  GaussLegendre gl;
  gl.nodes.resize(static_cast<std::size_t>(order));
  gl.weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[static_cast<std::size_t>(i)] = -x;
    gl.nodes[static_cast<std::size_t>(order - 1 - i)] = x;
    gl.weights[static_cast<std::size_t>(i)] = w;
    gl.weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
  return gl;
}

const GaussLegendre& quadrature_256() {
  static const GaussLegendre gl = make_gauss_legendre(256);
  return gl;
}

double gaussian_log_pdf(double mean, double variance, double y) {
  const double diff = y - mean;
  return -diff * diff / (2.0 * variance) - 0.5 * std::log(2.0 * std::numbers::pi * variance);
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kTooManyCommunities: return "TooManyCommunities";
    case ErrorCode::kDegenerateGrid: return "DegenerateGrid";
    case ErrorCode::kInfeasibleRegime: return "InfeasibleRegime";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kDistinctnessViolated: return "DistinctnessViolated";
    case ErrorCode::kMapBudgetExceeded: return "MapBudgetExceeded";
    case ErrorCode::kNotBernoulli: return "NotBernoulli";
    case ErrorCode::kMonotonicityViolated: return "MonotonicityViolated";
    case ErrorCode::kNotTwoCommunities: return "NotTwoCommunities";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Distribution Distribution::bernoulli(double p) {
  Distribution d;
  d.kind = Kind::kBernoulli;
  d.p = p;
  d.validate();
  return d;
}

Distribution Distribution::gaussian(double mean, double variance) {
  Distribution d;
  d.kind = Kind::kGaussian;
  d.mean = mean;
  d.variance = variance;
  d.validate();
  return d;
}

void Distribution::validate() const {
  if (is_bernoulli()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidSpec, "Bernoulli p must lie in [0,1]");
    }
  } else {
    if (!std::isfinite(mean)) throw Error(ErrorCode::kInvalidSpec, "Gaussian mean must be finite");
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw Error(ErrorCode::kInvalidSpec, "Gaussian variance must be positive");
    }
  }
}

bool approx_equal(const Distribution& a, const Distribution& b) {
  if (a.kind != b.kind) return false;
  if (a.is_bernoulli()) return std::abs(a.p - b.p) <= kParamTolerance;
  return std::abs(a.mean - b.mean) <= kParamTolerance &&
         std::abs(a.variance - b.variance) <= kParamTolerance;
}

double phi_t(const Distribution& p, const Distribution& q, double t) {
  if (p.kind != q.kind) throw Error(ErrorCode::kKindMismatch, "phi_t of different families");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::kDomainError, "t must lie in [0,1]");

  if (p.is_bernoulli()) {
    return std::pow(p.p, t) * std::pow(q.p, 1.0 - t) +
           std::pow(1.0 - p.p, t) * std::pow(1.0 - q.p, 1.0 - t);
  }

  if (t == 0.0 || t == 1.0) return 1.0;
  if (std::abs(p.variance - q.variance) <= kParamTolerance) {
    const double dm = p.mean - q.mean;
    return std::exp(-t * (1.0 - t) * dm * dm / (2.0 * p.variance));
  }

  // Unequal variances: integrate exp(t log p + (1-t) log q) numerically.
  const double center = 0.5 * (p.mean + q.mean);
  const double sigma = std::sqrt(std::max(p.variance, q.variance));
  const double half = 10.0 * sigma + 0.5 * std::abs(p.mean - q.mean);
  const auto& gl = quadrature_256();
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double x = center + half * gl.nodes[i];
    sum += gl.weights[i] * std::exp(t * gaussian_log_pdf(p.mean, p.variance, x) +
                                    (1.0 - t) * gaussian_log_pdf(q.mean, q.variance, x));
  }
  return sum * half;
}

double log_likelihood(const Distribution& dist, double y) {
  if (dist.is_bernoulli()) {
    const double p = std::clamp(dist.p, kProbClamp, 1.0 - kProbClamp);
    if (y == 1.0) return std::log(p);
    if (y == 0.0) return std::log1p(-p);
    throw Error(ErrorCode::kDomainError, "Bernoulli observation must be 0 or 1");
  }
  return gaussian_log_pdf(dist.mean, dist.variance, y);
}

void to_json(nlohmann::json& j, const Distribution& d) {
  if (d.is_bernoulli()) {
    j = nlohmann::json{{"kind", "bernoulli"}, {"p", d.p}};
  } else {
    j = nlohmann::json{{"kind", "gaussian"}, {"mean", d.mean}, {"variance", d.variance}};
  }
}

void from_json(const nlohmann::json& j, Distribution& d) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bernoulli") {
    d = Distribution::bernoulli(j.at("p").get<double>());
  } else if (kind == "gaussian") {
    d = Distribution::gaussian(j.at("mean").get<double>(), j.at("variance").get<double>());
  } else {
    throw Error(ErrorCode::kInvalidSpec, "unknown distribution kind '" + kind + "'");
  }
}

}  // namespace ghcm
