// Error channels of the loss-detection unit, their Clifford approximation and
// the infidelity-minimizing parameter fit.
#pragma once

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qinstr/gates.hpp"
#include "qinstr/optimize.hpp"
#include "qinstr/tomography.hpp"

namespace qinstr {

struct NoiseParams {
  double alpha = 0.0;    // correlated overrotation angle
  double beta = 0.0;     // single overrotation angle
  double p_depol = 0.0;
  double p_deph = 0.0;

  double p_corr() const { return p_loss_from_angle(alpha); }
  double p_single() const { return p_loss_from_angle(beta); }

  static NoiseParams from_rates(double p_corr, double p_single, double p_depol = 0.0, double p_deph = 0.0) {
    return {angle_from_p_loss(p_corr), angle_from_p_loss(p_single), p_depol, p_deph};
  }

  void validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) throw ArgumentError("NoiseParams: non-finite angle");
    if (p_depol < 0.0 || p_depol > 1.0 || p_deph < 0.0 || p_deph > 1.0)
      throw ArgumentError("NoiseParams: probability outside [0, 1]");
  }

  bool is_zero() const { return alpha == 0.0 && beta == 0.0 && p_depol == 0.0 && p_deph == 0.0; }
};

// rho -> (1 - p) rho + p 1/d
inline Matrix depolarize(const Matrix& rho, double p) {
  if (p < 0.0 || p > 1.0) throw ArgumentError("depolarize: p outside [0, 1]");
  const Eigen::Index d = rho.rows();
  return (1.0 - p) * rho + p * rho.trace() * Matrix::Identity(d, d) / double(d);
}

// rho -> (1 - p) rho + p diag(rho)
inline Matrix dephase(const Matrix& rho, double p) {
  if (p < 0.0 || p > 1.0) throw ArgumentError("dephase: p outside [0, 1]");
  Matrix out = (1.0 - p) * rho;
  out.diagonal() = rho.diagonal();
  return out;
}

// Correlated XX overrotation; the loss level |2>_q is left untouched.
inline Operator corr_overrotation(double alpha) {
  const Matrix p2 = kron(Matrix::Identity(2, 2), qutrit_p2());
  Matrix m = std::cos(0.5 * alpha) * (Matrix::Identity(6, 6) - p2) +
             kI * std::sin(0.5 * alpha) * kron(pauli_x(), qutrit_x()) + p2;
  return Operator(ancilla_qutrit_shape(), m);
}

inline Matrix ancilla_overrotation(double beta) {
  return std::cos(0.5 * beta) * Matrix::Identity(2, 2) + kI * std::sin(0.5 * beta) * pauli_x();
}

inline Matrix qutrit_overrotation(double beta) {
  return std::cos(0.5 * beta) * qutrit_p01() + kI * std::sin(0.5 * beta) * qutrit_x() + qutrit_p2();
}

inline Operator single_overrotations(double beta) {
  return Operator(ancilla_qutrit_shape(), kron(ancilla_overrotation(beta), qutrit_overrotation(beta)));
}

// Where depolarizing/dephasing act relative to the coherent overrotations.
enum class IncoherentOrder { after_rotations, before_rotations };

// Detection unitary followed by the noise model, on ancilla (x) qutrit.
struct CoherentQnd {
  double phi = 0.0;
  NoiseParams params;
  IncoherentOrder order = IncoherentOrder::after_rotations;
  Matrix ideal;   // U(phi)
  Matrix noise;   // R(beta) U_corr(alpha)

  Matrix unitary() const { return noise * ideal; }

  Matrix apply_incoherent(const Matrix& rho) const {
    Matrix r = rho;
    if (params.p_depol > 0.0) r = depolarize(r, params.p_depol);
    if (params.p_deph > 0.0) r = dephase(r, params.p_deph);
    return r;
  }

  // Noise acting after the ideal unitary.
  Matrix apply_noise(const Matrix& rho) const {
    if (order == IncoherentOrder::after_rotations)
      return apply_incoherent(noise * rho * noise.adjoint());
    return noise * apply_incoherent(rho) * noise.adjoint();
  }

  Matrix apply(const Matrix& rho6) const {
    if (rho6.rows() != 6) throw ArgumentError("CoherentQnd::apply: expected a 6x6 state");
    return apply_noise(ideal * rho6 * ideal.adjoint());
  }

  // Qutrit map conditioned on ancilla outcome b (ancilla prepared in |0>).
  Matrix conditional(int b, const Matrix& rho_q) const {
    if (b != 0 && b != 1) throw ArgumentError("CoherentQnd::conditional: outcome must be 0 or 1");
    Matrix out = apply(kron(ketbra(2, 0, 0), rho_q));
    return out.block(3 * b, 3 * b, 3, 3);
  }

  ChoiOperator conditional_choi(int b) const {
    return choi_of_channel(3, 3, [&](const Matrix& r) { return conditional(b, r); });
  }

  ChoiOperator joint_choi() const {
    return choi_of_channel(6, 6, [&](const Matrix& r) { return apply(r); });
  }
};

inline CoherentQnd coherent_noisy_qnd(double phi, const NoiseParams& params,
                                      IncoherentOrder order = IncoherentOrder::after_rotations) {
  params.validate();
  CoherentQnd c;
  c.phi = phi;
  c.params = params;
  c.order = order;
  c.ideal = qnd_unitary(phi).matrix();
  c.noise = single_overrotations(params.beta).matrix() * corr_overrotation(params.alpha).matrix();
  return c;
}

// Second-order conditional Choi operators, basis |00>, |01>, ..., |22>.
inline std::pair<ChoiOperator, ChoiOperator> analytic_choi_second_order(double alpha, double beta) {
  if (std::abs(alpha) > 0.5 || std::abs(beta) > 0.5)
    throw ArgumentError("analytic_choi_second_order: angles beyond second-order validity");
  const double a = alpha, b = beta;
  const cplx i = kI;
  Matrix l0 = Matrix::Zero(9, 9), l1 = Matrix::Zero(9, 9);
  const int c01[2] = {0, 4};  // |00>, |11>
  const int flip[2] = {1, 3}; // |01>, |10>

  for (int r : c01) {
    for (int c : c01) {
      l0(r, c) = 1.0 - a * a / 4.0 - b * b / 2.0;
      l1(r, c) = b * b / 4.0;
    }
    for (int c : flip) {
      l0(r, c) = (-a / 4.0 - i / 2.0) * b;
      l0(c, r) = (-a / 4.0 + i / 2.0) * b;
      l1(r, c) = l1(c, r) = a * b / 4.0;
    }
    l0(r, 8) = i * b / 2.0;
    l0(8, r) = -i * b / 2.0;
    l1(r, 8) = (a / 4.0 - i / 2.0) * b;
    l1(8, r) = (a / 4.0 + i / 2.0) * b;
  }
  for (int r : flip) {
    for (int c : flip) {
      l0(r, c) = b * b / 4.0;
      l1(r, c) = a * a / 4.0;
    }
    l0(r, 8) = l0(8, r) = -b * b / 4.0;
    l1(r, 8) = b * b / 4.0 - i * a / 2.0;
    l1(8, r) = b * b / 4.0 + i * a / 2.0;
  }
  l0(8, 8) = b * b / 4.0;
  l1(8, 8) = 1.0 - b * b / 4.0;
  return {ChoiOperator(3, 3, l0), ChoiOperator(3, 3, l1)};
}

// ---- effective Clifford channel ----

enum class QndEvent {
  keep,             // present, no flag
  flip,             // present, X_q, no flag
  flip_flagged,     // present, X_a X_q: false positive from correlated rotation
  flagged,          // present, X_a: false positive from single rotation
  lost_flagged,     // lost, detected
  lost_unflagged,   // lost, missed
};

struct CliffordEventTable {
  // Present qubit: keep, flip, flip_flagged, flagged.
  std::array<double, 4> present{1.0, 0.0, 0.0, 0.0};
  // Lost qubit: lost_flagged, lost_unflagged.
  std::array<double, 2> lost{1.0, 0.0};

  double p_a() const { return present[0]; }
  double p_b() const { return present[1]; }
  double p_c() const { return present[2]; }
  double p_d() const { return present[3]; }
  double q_a() const { return lost[0]; }
  double q_b() const { return lost[1]; }
};

namespace detail {
template <size_t N>
std::array<double, N> clip_normalize(std::array<double, N> v) {
  double s = 0.0;
  for (double& x : v) {
    x = std::clamp(x, 0.0, 1.0);
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}
}  // namespace detail

inline CliffordEventTable clifford_event_table(double alpha, double beta) {
  const double a2 = alpha * alpha / 4.0, b2 = beta * beta / 4.0;
  CliffordEventTable t;
  t.present = detail::clip_normalize<4>({1.0 - a2 - 2.0 * b2, b2, a2, b2});
  t.lost = detail::clip_normalize<2>({1.0 - b2, b2});
  return t;
}

inline CliffordEventTable clifford_event_table(const NoiseParams& p) {
  return clifford_event_table(p.alpha, p.beta);
}

// Pauli-frame record of one code qutrit.
struct FrameQubit {
  bool lost = false;
  bool x = false;
  bool z = false;
};

struct CliffordQndOutcome {
  bool flagged = false;
  QndEvent event = QndEvent::keep;
  FrameQubit qubit;
};

template <class Rng>
CliffordQndOutcome sample_clifford_qnd(const FrameQubit& q, const CliffordEventTable& t, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  CliffordQndOutcome out{false, QndEvent::keep, q};
  if (q.lost) {
    out.flagged = r < t.lost[0];
    out.event = out.flagged ? QndEvent::lost_flagged : QndEvent::lost_unflagged;
    return out;
  }
  double c = t.present[0];
  if (r < c) return out;
  c += t.present[1];
  if (r < c) {
    out.event = QndEvent::flip;
    out.qubit.x = !out.qubit.x;
    return out;
  }
  c += t.present[2];
  if (r < c) {
    out.event = QndEvent::flip_flagged;
    out.qubit.x = !out.qubit.x;
    out.flagged = true;
    return out;
  }
  out.event = QndEvent::flagged;
  out.flagged = true;
  return out;
}

// ---- noisy Choi targets and fits ----

// Apply a channel to the output slot of a Choi operator.
inline ChoiOperator noisy_choi_target(const ChoiOperator& ideal, const ChannelFn& channel) {
  const int dout = ideal.out_dim;
  Matrix m(ideal.dim(), ideal.dim());
  for (int k = 0; k < ideal.in_dim; ++k)
    for (int l = 0; l < ideal.in_dim; ++l) {
      Matrix out = channel(ideal.matrix.block(k * dout, l * dout, dout, dout));
      if (out.rows() != dout) throw ArgumentError("noisy_choi_target: channel changes dimension");
      m.block(k * dout, l * dout, dout, dout) = out;
    }
  return ChoiOperator(ideal.in_dim, ideal.out_dim, std::move(m));
}

// Noise channel on ancilla (x) qutrit without the ideal unitary.
inline ChannelFn noise_channel(const NoiseParams& p, IncoherentOrder order = IncoherentOrder::after_rotations) {
  CoherentQnd c = coherent_noisy_qnd(0.0, p, order);
  return [c](const Matrix& rho) { return c.apply_noise(rho); };
}

inline ChoiOperator ideal_qnd_choi(double phi) {
  return choi_of_map({LinearMap(qnd_unitary(phi))});
}

enum class NoiseComponent { depol, deph, corr, single };

using NoiseModel = std::set<NoiseComponent>;

inline std::string component_name(NoiseComponent c) {
  switch (c) {
    case NoiseComponent::depol: return "depol";
    case NoiseComponent::deph: return "deph";
    case NoiseComponent::corr: return "corr";
    case NoiseComponent::single: return "single";
  }
  return "?";
}

inline NoiseComponent component_from_name(const std::string& s) {
  if (s == "depol") return NoiseComponent::depol;
  if (s == "deph") return NoiseComponent::deph;
  if (s == "corr") return NoiseComponent::corr;
  if (s == "single") return NoiseComponent::single;
  throw ArgumentError("unknown noise component '" + s + "'");
}

// Probability carried by a component, and the inverse.
inline double component_rate(const NoiseParams& p, NoiseComponent c) {
  switch (c) {
    case NoiseComponent::depol: return p.p_depol;
    case NoiseComponent::deph: return p.p_deph;
    case NoiseComponent::corr: return p.p_corr();
    case NoiseComponent::single: return p.p_single();
  }
  return 0.0;
}

inline void set_component_rate(NoiseParams& p, NoiseComponent c, double v) {
  switch (c) {
    case NoiseComponent::depol: p.p_depol = v; break;
    case NoiseComponent::deph: p.p_deph = v; break;
    case NoiseComponent::corr: p.alpha = angle_from_p_loss(v); break;
    case NoiseComponent::single: p.beta = angle_from_p_loss(v); break;
  }
}

// Fidelity to a fixed operator, caching the square root of the target.
class FidelityTo {
 public:
  explicit FidelityTo(const Matrix& target) {
    const double t = target.trace().real();
    if (!(t > 0.0)) throw ArgumentError("FidelityTo: zero-trace target");
    sqrt_target_ = sqrtm_psd(hermitian_part(target) / t);
  }
  double operator()(const Matrix& b) const {
    const double t = b.trace().real();
    if (!(t > 0.0)) throw ArgumentError("FidelityTo: zero-trace operand");
    Matrix m = sqrt_target_ * (hermitian_part(b) / t) * sqrt_target_;
    RealVector ev = eig_hermitian(hermitian_part(m)).values;
    double f = ev.cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(f * f, 0.0, 1.0);
  }

 private:
  Matrix sqrt_target_;
};

struct NoiseFit {
  NoiseModel model;
  NoiseParams params;
  double fidelity_ideal = 0.0;
  double fidelity_model = 0.0;
  int evaluations = 0;
};

class FitNonConvergence : public NumericalError {
 public:
  FitNonConvergence(const std::string& what, NoiseFit best) : NumericalError(what), best(std::move(best)) {}
  NoiseFit best;
};

inline constexpr double kMaxFitRate = 0.5;

// Maximize F(target, (1 (x) E_noise)(ideal)) over the active components; each
// rate is confined to [0, 0.5] through rate = 0.5 sin^2(u).
inline NoiseFit fit_noise_params(const ChoiOperator& target, const ChoiOperator& ideal, const NoiseModel& model,
                                 const NoiseParams& initial = {}, const SimplexOptions& opt = {}) {
  if (target.in_dim != ideal.in_dim || target.out_dim != ideal.out_dim)
    throw ArgumentError("fit_noise_params: target and ideal dimensions differ");
  const FidelityTo fid(target.matrix);
  const std::vector<NoiseComponent> active(model.begin(), model.end());

  auto params_of = [&](const std::vector<double>& u) {
    NoiseParams p;
    for (size_t k = 0; k < active.size(); ++k) {
      double s = std::sin(u[k]);
      set_component_rate(p, active[k], kMaxFitRate * s * s);
    }
    return p;
  };
  int evals = 0;
  auto infidelity = [&](const std::vector<double>& u) {
    ++evals;
    return 1.0 - fid(noisy_choi_target(ideal, noise_channel(params_of(u))).matrix);
  };

  std::vector<double> u0;
  for (NoiseComponent c : active) {
    double r = std::clamp(component_rate(initial, c), 0.0, kMaxFitRate);
    u0.push_back(std::asin(std::sqrt(r / kMaxFitRate)));
  }
  SimplexResult res = minimize_simplex(infidelity, u0, opt);

  NoiseFit fit{model, params_of(res.x), fid(ideal.matrix), 1.0 - res.value, evals};
  if (!res.converged) throw FitNonConvergence("fit_noise_params: simplex did not converge", fit);
  return fit;
}

// Fit several models on one target; each model starts from the best fit among
// the already-fitted models it contains, so enlarging a model never loses fidelity.
inline std::vector<NoiseFit> fit_noise_models(const ChoiOperator& target, const ChoiOperator& ideal,
                                              const std::vector<NoiseModel>& models,
                                              const SimplexOptions& opt = {}) {
  std::vector<size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return models[a].size() < models[b].size(); });
  std::vector<NoiseFit> out(models.size());
  std::vector<bool> done(models.size(), false);
  for (size_t idx : order) {
    NoiseParams start;
    double best = -1.0;
    for (size_t j = 0; j < models.size(); ++j) {
      if (!done[j]) continue;
      if (!std::includes(models[idx].begin(), models[idx].end(), models[j].begin(), models[j].end())) continue;
      if (out[j].fidelity_model > best) {
        best = out[j].fidelity_model;
        start = out[j].params;
      }
    }
    out[idx] = fit_noise_params(target, ideal, models[idx], start, opt);
    done[idx] = true;
  }
  return out;
}

}  // namespace qinstr
