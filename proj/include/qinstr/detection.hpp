// Two sequential loss detections on one qutrit, and the fidelity-decay fit of
// the erasure channel.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "qinstr/noise.hpp"
#include "qinstr/optimize.hpp"
#include "qinstr/tomography.hpp"

namespace qinstr {

// Exact probabilities of (first flag, second flag, finally lost) when loss
// from |0> at angle phi precedes the first detection.
inline std::array<double, 8> repeated_detection_distribution(double phi, const NoiseParams& noise = {}) {
  const CoherentQnd first = coherent_noisy_qnd(phi, noise);
  const CoherentQnd second = coherent_noisy_qnd(0.0, noise);
  std::array<double, 8> p{};
  const Matrix rho = ketbra(3, 0, 0);
  for (int a1 = 0; a1 < 2; ++a1) {
    const Matrix r1 = first.conditional(a1, rho);
    for (int a2 = 0; a2 < 2; ++a2) {
      const Matrix r2 = second.conditional(a2, r1);
      const double lost = std::max(0.0, r2(2, 2).real());
      const double kept = std::max(0.0, r2(0, 0).real() + r2(1, 1).real());
      p[4 * a1 + 2 * a2 + 1] = lost;
      p[4 * a1 + 2 * a2] = kept;
    }
  }
  return p;
}

struct RepeatedDetectionStats {
  std::int64_t trials = 0;
  double positive = 0.0;        // both detections flag
  double false_positive = 0.0;  // a flag while the qutrit ends in the qubit subspace
  double false_negative = 0.0;  // a missed flag while the qutrit ends lost
};

inline RepeatedDetectionStats repeated_detection(double phi, const std::optional<NoiseParams>& noise,
                                                 std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("repeated_detection: trials must be >= 1");
  const auto p = repeated_detection_distribution(phi, noise.value_or(NoiseParams{}));
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(p.begin(), p.end());
  std::int64_t pos = 0, fp = 0, fn = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const int e = pick(rng);
    const bool a1 = e & 4, a2 = e & 2, lost = e & 1;
    if (a1 && a2) ++pos;
    if (!lost && (a1 || a2)) ++fp;
    if (lost && !(a1 && a2)) ++fn;
  }
  const double n = double(trials);
  return {trials, pos / n, fp / n, fn / n};
}

struct FidelityDecayFit {
  double p_e = 0.0;
  double p_spam = 0.0;
  double residual = 0.0;  // sum of squared fidelity residuals
};

// Least-squares fit of (p_e, p_spam) to observed Choi fidelities versus p_loss.
inline FidelityDecayFit fit_fidelity_decay(const std::vector<double>& p_loss, const std::vector<double>& fidelity,
                                           const ChoiOperator& ideal) {
  if (p_loss.size() != fidelity.size() || p_loss.empty())
    throw ArgumentError("fit_fidelity_decay: need matching, nonempty curves");
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  auto cost = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (size_t i = 0; i < p_loss.size(); ++i) {
      const double f = choi_fidelity(fidelity_decay_model(p_loss[i], clamp01(x[0]), clamp01(x[1]), ideal), ideal);
      s += (f - fidelity[i]) * (f - fidelity[i]);
    }
    return s;
  };
  SimplexOptions opt;
  opt.initial_step = 0.05;
  opt.size_tolerance = 1e-10;
  SimplexResult r = minimize_simplex(cost, {0.05, 0.05}, opt);
  if (!r.converged) throw NumericalError("fit_fidelity_decay: simplex did not converge");
  return {clamp01(r.x[0]), clamp01(r.x[1]), r.value};
}

}  // namespace qinstr
