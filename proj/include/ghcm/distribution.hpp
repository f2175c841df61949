#pragma once

#include <json.hpp>

namespace ghcm {

// Observation law P_ij for a pair of communities.
struct Distribution {
  enum class Kind { kBernoulli, kGaussian };

  Kind kind = Kind::kBernoulli;
  double p = 0.5;         // Bernoulli success probability
  double mean = 0.0;      // Gaussian
  double variance = 1.0;  // Gaussian

  static Distribution bernoulli(double p);
  static Distribution gaussian(double mean, double variance);

  bool is_bernoulli() const { return kind == Kind::kBernoulli; }
  bool is_gaussian() const { return kind == Kind::kGaussian; }

  // Throws kInvalidSpec when parameters are out of range.
  void validate() const;
};

inline constexpr double kParamTolerance = 1e-12;
inline constexpr double kProbClamp = 1e-12;

// Same kind and parameters within kParamTolerance.
bool approx_equal(const Distribution& a, const Distribution& b);

// phi_t(p, q) = integral (or sum) of p^t q^(1-t).
double phi_t(const Distribution& p, const Distribution& q, double t);

// log density/mass of y. Bernoulli probabilities are clamped to
// [kProbClamp, 1 - kProbClamp] so the result is always finite.
double log_likelihood(const Distribution& dist, double y);

void to_json(nlohmann::json& j, const Distribution& d);
void from_json(const nlohmann::json& j, Distribution& d);

}  // namespace ghcm
