// Seven-qubit color code: loss correctability, decoding and one Monte Carlo
// loss-correction cycle with faulty detection and faulty stabilizer readout.
//
// Qubits are numbered 0..6 here (1..7 in the usual drawing).  A "mask" has bit k
// set for qubit k.  State vectors order qubit 0 as the most significant factor.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qinstr/gates.hpp"
#include "qinstr/noise.hpp"
#include "qinstr/parallel.hpp"

namespace qinstr {

using QubitMask = std::uint8_t;

inline constexpr int kCodeQubits = 7;
inline constexpr QubitMask kAllQubits = 0x7F;

constexpr QubitMask mask_of(std::initializer_list<int> one_based) {
  QubitMask m = 0;
  for (int q : one_based) m |= QubitMask(1u << (q - 1));
  return m;
}

struct ColorCode {
  // Shared supports of S_x^(i) and S_z^(i).
  static constexpr std::array<QubitMask, 3> supports{mask_of({1, 2, 3, 4}), mask_of({2, 3, 5, 6}),
                                                     mask_of({3, 4, 6, 7})};
  // Weight-3 logical supports.
  static constexpr std::array<QubitMask, 7> lines{mask_of({1, 2, 5}), mask_of({1, 3, 6}), mask_of({1, 4, 7}),
                                                  mask_of({2, 3, 7}), mask_of({4, 3, 5}), mask_of({5, 6, 7}),
                                                  mask_of({2, 4, 6})};
  static constexpr QubitMask logical = kAllQubits;
};

inline int parity(unsigned v) { return std::popcount(v) & 1; }

// Three syndrome bits of an error pattern against the plaquette supports.
inline unsigned plaquette_syndrome(QubitMask err) {
  unsigned s = 0;
  for (int i = 0; i < 3; ++i) s |= unsigned(parity(err & ColorCode::supports[i])) << i;
  return s;
}

// Bits 0..2: S_x^(1..3) read -1; bits 3..5: S_z^(1..3) read -1.
using Syndrome = std::uint8_t;

inline Syndrome syndrome_of(QubitMask x_err, QubitMask z_err) {
  return Syndrome(plaquette_syndrome(z_err) | (plaquette_syndrome(x_err) << 3));
}

struct PauliCorrection {
  QubitMask x = 0;
  QubitMask z = 0;
  bool operator==(const PauliCorrection&) const = default;
};

inline bool contains_line(QubitMask r) {
  for (QubitMask l : ColorCode::lines)
    if ((r & l) == l) return true;
  return false;
}

// Combinatorial classification: a loss set is correctable iff it contains no
// weight-3 logical support.
inline bool loss_correctable(QubitMask lost) {
  if (lost & ~kAllQubits) throw ArgumentError("loss_correctable: qubit index outside 1..7");
  return !contains_line(lost);
}

inline bool loss_correctable(const std::vector<int>& one_based) {
  QubitMask m = 0;
  for (int q : one_based) {
    if (q < 1 || q > kCodeQubits) throw ArgumentError("loss_correctable: qubit index outside 1..7");
    m |= QubitMask(1u << (q - 1));
  }
  return loss_correctable(m);
}

// Erasure-aware minimum-weight table: for each replaced set R and 3-bit
// syndrome, the lowest (weight outside R, total weight, mask) pattern.
class ErasureDecoder {
 public:
  static const ErasureDecoder& instance() {
    static const ErasureDecoder d;
    return d;
  }
  QubitMask lookup(QubitMask replaced, unsigned syndrome3) const { return table_[replaced & kAllQubits][syndrome3 & 7]; }

 private:
  ErasureDecoder() {
    for (unsigned r = 0; r < 128; ++r)
      for (unsigned s = 0; s < 8; ++s) {
        unsigned best = 0;
        int bo = 99, bw = 99;
        for (unsigned c = 0; c < 128; ++c) {
          if (plaquette_syndrome(QubitMask(c)) != s) continue;
          int out = std::popcount(c & ~r), w = std::popcount(c);
          if (out < bo || (out == bo && w < bw)) {
            bo = out;
            bw = w;
            best = c;
          }
        }
        table_[r][s] = QubitMask(best);
      }
  }
  std::array<std::array<QubitMask, 8>, 128> table_{};
};

inline PauliCorrection decode_syndrome(Syndrome s, QubitMask replaced = 0) {
  const auto& d = ErasureDecoder::instance();
  return {d.lookup(replaced, (s >> 3) & 7), d.lookup(replaced, s & 7)};
}

// Probability that a single cycle with ideal components succeeds.
inline double analytic_success(double p) {
  if (p < 0.0 || p > 1.0) throw ArgumentError("analytic_success: p outside [0, 1]");
  return 1.0 - 7.0 * std::pow(p, 3) + 21.0 * std::pow(p, 5) - 21.0 * std::pow(p, 6) + 6.0 * std::pow(p, 7);
}

// P_0..P_4: success contributions from zero to four losses.
inline std::array<double, 5> analytic_success_terms(double p) {
  const double s = 1.0 - p;
  return {std::pow(s, 7), 7.0 * p * std::pow(s, 6), 21.0 * p * p * std::pow(s, 5),
          28.0 * std::pow(p, 3) * std::pow(s, 4), 7.0 * std::pow(p, 4) * std::pow(s, 3)};
}

// ---- code states ----

enum class LogicalBasis { zero, one, plus };

inline std::string basis_name(LogicalBasis b) {
  switch (b) {
    case LogicalBasis::zero: return "0";
    case LogicalBasis::one: return "1";
    case LogicalBasis::plus: return "plus";
  }
  return "?";
}

inline LogicalBasis basis_from_name(const std::string& s) {
  if (s == "0" || s == "zero") return LogicalBasis::zero;
  if (s == "1" || s == "one") return LogicalBasis::one;
  if (s == "plus" || s == "+") return LogicalBasis::plus;
  throw ArgumentError("unknown logical basis '" + s + "'");
}

// Index bits of a qubit mask in a 2^7 state vector.
inline unsigned index_bits(QubitMask m) {
  unsigned r = 0;
  for (int k = 0; k < kCodeQubits; ++k)
    if (m & (1u << k)) r |= 1u << (kCodeQubits - 1 - k);
  return r;
}

inline Vector encode_logical(LogicalBasis basis) {
  Vector zero = Vector::Zero(128);
  for (unsigned g = 0; g < 8; ++g) {
    QubitMask m = 0;
    for (int i = 0; i < 3; ++i)
      if (g & (1u << i)) m ^= ColorCode::supports[i];
    zero(index_bits(m)) = 1.0 / std::sqrt(8.0);
  }
  Vector one = Vector::Zero(128);
  for (unsigned i = 0; i < 128; ++i) one(i ^ 127u) = zero(i);
  switch (basis) {
    case LogicalBasis::zero: return zero;
    case LogicalBasis::one: return one;
    case LogicalBasis::plus: return (zero + one) / std::sqrt(2.0);
  }
  return zero;
}

// <psi| P |psi> for a Pauli with X part on x_mask and Z part on z_mask (no Y phase fix).
inline double pauli_expectation(const Vector& psi, QubitMask x_mask, QubitMask z_mask) {
  const unsigned xi = index_bits(x_mask), zi = index_bits(z_mask);
  cplx acc = 0.0;
  for (unsigned i = 0; i < 128; ++i) acc += std::conj(psi(i ^ xi)) * (parity(i & zi) ? -psi(i) : psi(i));
  return acc.real();
}

// Correctability from the reduced state of the lost qubits.
inline bool loss_correctable_partial_trace(QubitMask lost) {
  if (lost & ~kAllQubits) throw ArgumentError("loss_correctable_partial_trace: qubit index outside 1..7");
  if (lost == 0) return true;
  std::vector<int> keep;
  for (int k = 0; k < kCodeQubits; ++k)
    if (lost & (1u << k)) keep.push_back(k);
  const HilbertShape shape = HilbertShape::qubits(kCodeQubits);
  std::vector<Matrix> reduced;
  for (LogicalBasis b : {LogicalBasis::zero, LogicalBasis::one, LogicalBasis::plus}) {
    Vector v = encode_logical(b);
    reduced.push_back(partial_trace(Operator(shape, v * v.adjoint()), keep).matrix());
  }
  return max_abs(reduced[0] - reduced[1]) < 1e-9 && max_abs(reduced[0] - reduced[2]) < 1e-9;
}

// ---- Monte Carlo cycle ----

enum class QecMode { coherent, clifford };

inline std::string mode_name(QecMode m) { return m == QecMode::coherent ? "coherent" : "clifford"; }

inline QecMode mode_from_name(const std::string& s) {
  if (s == "coherent") return QecMode::coherent;
  if (s == "clifford" || s == "incoherent") return QecMode::clifford;
  throw ArgumentError("unknown QEC mode '" + s + "'");
}

// How loss is induced on the register before detection.  Coherent mode may
// rotate |0> into |2> (loss_rotation) or draw the same Bernoulli loss as the
// Clifford mode.
enum class LossModel { rotation, bernoulli };

inline std::string loss_model_name(LossModel m) { return m == LossModel::rotation ? "rotation" : "bernoulli"; }

inline LossModel loss_model_from_name(const std::string& s) {
  if (s == "rotation") return LossModel::rotation;
  if (s == "bernoulli") return LossModel::bernoulli;
  throw ArgumentError("unknown loss model '" + s + "'");
}

// How the logical operator is read after correction: "decoded" reads it after
// one further noiseless syndrome round and decoding (a transversal readout);
// "direct" takes the expectation on the corrected state as is.
enum class LogicalReadout { decoded, direct };

inline std::string readout_name(LogicalReadout r) { return r == LogicalReadout::decoded ? "decoded" : "direct"; }

inline LogicalReadout readout_from_name(const std::string& s) {
  if (s == "decoded") return LogicalReadout::decoded;
  if (s == "direct") return LogicalReadout::direct;
  throw ArgumentError("unknown logical readout '" + s + "'");
}

struct QecConfig {
  double p_loss = 0.0;
  LossModel loss = LossModel::rotation;  // coherent mode only
  NoiseParams noise;
  std::optional<double> q;  // stabilizer flip probability; defaults to p_corr
  std::int64_t trials = 1000;
  std::uint64_t seed = 1;
  QecMode mode = QecMode::clifford;
  LogicalBasis basis = LogicalBasis::zero;
  bool x_stabilizers_first = true;
  LogicalReadout readout = LogicalReadout::decoded;
  IncoherentOrder order = IncoherentOrder::after_rotations;
  bool record_trials = false;

  double stabilizer_flip() const { return q.value_or(noise.p_corr()); }

  void validate() const {
    noise.validate();
    if (p_loss < 0.0 || p_loss > 1.0) throw ArgumentError("QecConfig: p_loss outside [0, 1]");
    double qq = stabilizer_flip();
    if (qq < 0.0 || qq > 1.0) throw ArgumentError("QecConfig: q outside [0, 1]");
    if (trials < 1) throw ArgumentError("QecConfig: trials must be >= 1");
  }
};

struct CodeTrialOutcome {
  QubitMask induced = 0;   // qubits found lost
  QubitMask detected = 0;  // qubits flagged by the detector (and replaced)
  Syndrome syndrome = 0;   // recorded syndrome, read-out flips included
  PauliCorrection correction;
  bool undetected_loss = false;
  bool success = false;
};

struct QecResult {
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  double logical_error_rate = 0.0;
  double stderr_ = 0.0;
  std::vector<CodeTrialOutcome> outcomes;
};

namespace detail {

// Residual check after one perfect syndrome round and minimum-weight decoding.
inline bool residual_preserves_logical(QubitMask x_res, QubitMask z_res, LogicalBasis basis,
                                       LogicalReadout readout) {
  if (readout == LogicalReadout::direct) return !parity(basis == LogicalBasis::plus ? z_res : x_res);
  const auto& d = ErasureDecoder::instance();
  if (basis == LogicalBasis::plus) {
    QubitMask z = z_res ^ d.lookup(0, plaquette_syndrome(z_res));
    return !parity(z);
  }
  QubitMask x = x_res ^ d.lookup(0, plaquette_syndrome(x_res));
  return !parity(x);
}

template <class Rng>
CodeTrialOutcome clifford_trial(const QecConfig& cfg, const CliffordEventTable& table, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CodeTrialOutcome out;
  QubitMask lost = 0, x = 0, z = 0;
  for (int k = 0; k < kCodeQubits; ++k)
    if (cfg.p_loss > 0.0 && u(rng) < cfg.p_loss) lost |= QubitMask(1u << k);
  out.induced = lost;

  for (int k = 0; k < kCodeQubits; ++k) {
    const QubitMask bit = QubitMask(1u << k);
    FrameQubit fq{bool(lost & bit), bool(x & bit), bool(z & bit)};
    CliffordQndOutcome r = sample_clifford_qnd(fq, table, rng);
    if (r.qubit.x != fq.x) x ^= bit;
    if (r.flagged) out.detected |= bit;
  }
  // Replaced qubits carry no information: a uniformly random Pauli.
  std::uniform_int_distribution<int> coin(0, 1);
  for (int k = 0; k < kCodeQubits; ++k) {
    const QubitMask bit = QubitMask(1u << k);
    if (!(out.detected & bit)) continue;
    lost &= QubitMask(~bit);
    x = coin(rng) ? (x | bit) : (x & ~bit);
    z = coin(rng) ? (z | bit) : (z & ~bit);
  }
  if (lost) {
    out.undetected_loss = true;
    return out;
  }

  Syndrome s = syndrome_of(x, z);
  const double q = cfg.stabilizer_flip();
  if (q > 0.0)
    for (int b = 0; b < 6; ++b)
      if (u(rng) < q) s ^= Syndrome(1u << b);
  out.syndrome = s;
  out.correction = decode_syndrome(s, out.detected);
  out.success = !contains_line(out.detected) &&
                residual_preserves_logical(x ^ out.correction.x, z ^ out.correction.z, cfg.basis, cfg.readout);
  return out;
}

constexpr int kQutritDim = 2187;  // 3^7

inline int qutrit_stride(int k) {
  int s = 1;
  for (int i = k + 1; i < kCodeQubits; ++i) s *= 3;
  return s;
}

// In-place 3x3 operator on qutrit k.
inline void apply_qutrit(Vector& psi, int k, const Matrix& g) {
  const int s = qutrit_stride(k), block = 3 * s;
  for (int hi = 0; hi < kQutritDim; hi += block)
    for (int lo = 0; lo < s; ++lo) {
      const int i0 = hi + lo;
      const cplx a = psi(i0), b = psi(i0 + s), c = psi(i0 + 2 * s);
      psi(i0) = g(0, 0) * a + g(0, 1) * b + g(0, 2) * c;
      psi(i0 + s) = g(1, 0) * a + g(1, 1) * b + g(1, 2) * c;
      psi(i0 + 2 * s) = g(2, 0) * a + g(2, 1) * b + g(2, 2) * c;
    }
}

// Joint 6x6 operator on (ancilla, qutrit k) with the ancilla held as two branches.
inline void apply_joint(std::array<Vector, 2>& br, int k, const Matrix& m) {
  std::array<Vector, 2> out{Vector::Zero(kQutritDim), Vector::Zero(kQutritDim)};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Matrix blk = m.block(3 * a, 3 * b, 3, 3);
      if (blk.cwiseAbs().maxCoeff() == 0.0 || br[b].squaredNorm() == 0.0) continue;
      Vector t = br[b];
      apply_qutrit(t, k, blk);
      out[a] += t;
    }
  br = std::move(out);
}

inline Matrix weyl6(int a, int b) {
  Matrix m = Matrix::Zero(6, 6);
  for (int j = 0; j < 6; ++j) m((j + a) % 6, j) = std::polar(1.0, 2.0 * M_PI * b * j / 6.0);
  return m;
}

struct CoherentKernel {
  Vector after_loss;   // code state after the coherent loss rotations
  Matrix ideal, noise, combined;
  NoiseParams params;
  IncoherentOrder order;

  explicit CoherentKernel(const QecConfig& cfg) : params(cfg.noise), order(cfg.order) {
    Vector v = encode_logical(cfg.basis);
    after_loss = Vector::Zero(kQutritDim);
    for (unsigned i = 0; i < 128; ++i) {
      int idx = 0;
      for (int k = 0; k < kCodeQubits; ++k)
        idx += int((i >> (kCodeQubits - 1 - k)) & 1u) * qutrit_stride(k);
      after_loss(idx) = v(i);
    }
    if (cfg.loss == LossModel::rotation) {
      Matrix rl = loss_rotation(angle_from_p_loss(cfg.p_loss)).matrix();
      for (int k = 0; k < kCodeQubits; ++k) apply_qutrit(after_loss, k, rl);
    }
    CoherentQnd c = coherent_noisy_qnd(0.0, cfg.noise, cfg.order);
    ideal = c.ideal;
    noise = c.noise;
    combined = c.unitary();
  }

  bool incoherent() const { return params.p_depol > 0.0 || params.p_deph > 0.0; }

  template <class Rng>
  void incoherent_kick(std::array<Vector, 2>& br, int k, Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> six(0, 5);
    if (params.p_depol > 0.0 && u(rng) < params.p_depol) apply_joint(br, k, weyl6(six(rng), six(rng)));
    if (params.p_deph > 0.0 && u(rng) < params.p_deph) apply_joint(br, k, weyl6(0, six(rng)));
  }
};

inline int digit(int idx, int k) { return (idx / qutrit_stride(k)) % 3; }

template <class Rng>
int measure_level(Vector& psi, int k, Rng& rng) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int i = 0; i < kQutritDim; ++i) p[digit(i, k)] += std::norm(psi(i));
  std::uniform_real_distribution<double> u(0.0, p[0] + p[1] + p[2]);
  const double r = u(rng);
  const int level = r < p[0] ? 0 : (r < p[0] + p[1] ? 1 : 2);
  const int s = qutrit_stride(k);
  Vector out = Vector::Zero(kQutritDim);
  for (int i = 0; i < kQutritDim; ++i) {
    const int d = digit(i, k);
    if (d == level) out(i - d * s) = psi(i);  // reset to |0>
  }
  psi = out / std::sqrt(p[level]);
  return level;
}

// Loss of qutrit k: its state is discarded (a computational-basis measurement
// whose record is dropped) and it is left in |2>.
template <class Rng>
void lose_qutrit(Vector& psi, int k, Rng& rng) {
  measure_level(psi, k, rng);
  const int s = qutrit_stride(k);
  for (int i = 0; i < kQutritDim; ++i)
    if (digit(i, k) == 0) std::swap(psi(i), psi(i + 2 * s));
}

// Project the qutrit register onto a sampled pattern of qutrits in |2>.
template <class Rng>
QubitMask measure_leakage(Vector& psi, Rng& rng) {
  std::array<double, 128> p{};
  std::vector<QubitMask> pat(kQutritDim);
  for (int i = 0; i < kQutritDim; ++i) {
    QubitMask m = 0;
    for (int k = 0; k < kCodeQubits; ++k)
      if (digit(i, k) == 2) m |= QubitMask(1u << k);
    pat[i] = m;
    p[m] += std::norm(psi(i));
  }
  double total = 0.0;
  for (double v : p) total += v;
  std::uniform_real_distribution<double> u(0.0, total);
  double r = u(rng), c = 0.0;
  QubitMask chosen = 0;
  for (unsigned m = 0; m < 128; ++m) {
    c += p[m];
    if (r < c) {
      chosen = QubitMask(m);
      break;
    }
  }
  for (int i = 0; i < kQutritDim; ++i)
    if (pat[i] != chosen) psi(i) = 0.0;
  psi /= std::sqrt(p[chosen]);
  return chosen;
}

inline Vector to_qubit_register(const Vector& psi3) {
  Vector v(128);
  for (unsigned i = 0; i < 128; ++i) {
    int idx = 0;
    for (int k = 0; k < kCodeQubits; ++k) idx += int((i >> (kCodeQubits - 1 - k)) & 1u) * qutrit_stride(k);
    v(i) = psi3(idx);
  }
  return v;
}

inline void apply_x(Vector& psi, QubitMask m) {
  const unsigned xi = index_bits(m);
  if (!xi) return;
  Vector out(128);
  for (unsigned i = 0; i < 128; ++i) out(i ^ xi) = psi(i);
  psi = std::move(out);
}

inline void apply_z(Vector& psi, QubitMask m) {
  const unsigned zi = index_bits(m);
  for (unsigned i = 0; i < 128; ++i)
    if (parity(i & zi)) psi(i) = -psi(i);
}

// Projective measurement of one plaquette operator; returns true for outcome -1.
template <class Rng>
bool measure_stabilizer(Vector& psi, QubitMask support, bool x_type, Rng& rng) {
  Vector sp = psi;
  if (x_type) apply_x(sp, support);
  else apply_z(sp, support);
  const double ev = std::clamp(psi.dot(sp).real(), -1.0, 1.0);  // dot conjugates psi
  const double p_minus = 0.5 * (1.0 - ev);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool minus = u(rng) < p_minus;
  psi = minus ? Vector(0.5 * (psi - sp)) : Vector(0.5 * (psi + sp));
  psi /= psi.norm();
  return minus;
}

template <class Rng>
Syndrome measure_syndrome(Vector& psi, bool x_first, Rng& rng) {
  Syndrome s = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const bool x_type = (pass == 0) == x_first;
    for (int i = 0; i < 3; ++i)
      if (measure_stabilizer(psi, ColorCode::supports[i], x_type, rng)) s |= Syndrome(1u << (i + (x_type ? 0 : 3)));
  }
  return s;
}

inline double logical_expectation(const Vector& psi, LogicalBasis b) {
  if (b == LogicalBasis::plus) return pauli_expectation(psi, ColorCode::logical, 0);
  const double z = pauli_expectation(psi, 0, ColorCode::logical);
  return b == LogicalBasis::zero ? z : -z;
}

template <class Rng>
CodeTrialOutcome coherent_trial(const QecConfig& cfg, const CoherentKernel& ker, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CodeTrialOutcome out;
  Vector psi = ker.after_loss;
  if (cfg.loss == LossModel::bernoulli)
    for (int k = 0; k < kCodeQubits; ++k)
      if (cfg.p_loss > 0.0 && u(rng) < cfg.p_loss) lose_qutrit(psi, k, rng);

  for (int k = 0; k < kCodeQubits; ++k) {
    std::array<Vector, 2> br{psi, Vector::Zero(kQutritDim)};
    if (!ker.incoherent()) {
      apply_joint(br, k, ker.combined);
    } else if (ker.order == IncoherentOrder::after_rotations) {
      apply_joint(br, k, ker.combined);
      ker.incoherent_kick(br, k, rng);
    } else {
      apply_joint(br, k, ker.ideal);
      ker.incoherent_kick(br, k, rng);
      apply_joint(br, k, ker.noise);
    }
    const double p1 = br[1].squaredNorm(), p0 = br[0].squaredNorm();
    const bool flagged = u(rng) * (p0 + p1) < p1;
    psi = flagged ? Vector(br[1] / std::sqrt(p1)) : Vector(br[0] / std::sqrt(p0));
    if (flagged) {
      out.detected |= QubitMask(1u << k);
      if (measure_level(psi, k, rng) == 2) out.induced |= QubitMask(1u << k);
    }
  }

  const QubitMask leaked = measure_leakage(psi, rng);
  out.induced |= leaked;
  if (leaked) {
    out.undetected_loss = true;
    return out;
  }

  Vector reg = to_qubit_register(psi);
  Syndrome s = measure_syndrome(reg, cfg.x_stabilizers_first, rng);
  const double q = cfg.stabilizer_flip();
  if (q > 0.0)
    for (int b = 0; b < 6; ++b)
      if (u(rng) < q) s ^= Syndrome(1u << b);
  out.syndrome = s;
  out.correction = decode_syndrome(s, out.detected);
  apply_x(reg, out.correction.x);
  apply_z(reg, out.correction.z);

  if (cfg.readout == LogicalReadout::decoded) {
    const PauliCorrection fin = decode_syndrome(measure_syndrome(reg, true, rng), 0);
    apply_x(reg, fin.x);
    apply_z(reg, fin.z);
  }
  out.success = !contains_line(out.detected) && logical_expectation(reg, cfg.basis) > 1e-9;
  return out;
}

}  // namespace detail

inline QecResult run_qec_cycle(const QecConfig& cfg) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.trials);
  const std::size_t chunks = (n + kTrialChunk - 1) / kTrialChunk;
  std::vector<std::int64_t> fails(chunks, 0);
  std::vector<std::vector<CodeTrialOutcome>> recs(chunks);
  const CliffordEventTable table = clifford_event_table(cfg.noise);
  std::optional<detail::CoherentKernel> kernel;
  if (cfg.mode == QecMode::coherent) kernel.emplace(cfg);
  const std::uint64_t stream = cfg.mode == QecMode::coherent ? 0xC0 : 0xC1;

  parallel_for(chunks, [&](std::size_t c) {
    auto rng = stream_rng(cfg.seed, stream, c);
    const std::size_t begin = c * kTrialChunk, end = std::min(n, begin + kTrialChunk);
    for (std::size_t t = begin; t < end; ++t) {
      CodeTrialOutcome o = cfg.mode == QecMode::coherent ? detail::coherent_trial(cfg, *kernel, rng)
                                                         : detail::clifford_trial(cfg, table, rng);
      if (!o.success) ++fails[c];
      if (cfg.record_trials) recs[c].push_back(o);
    }
  });

  QecResult r;
  r.trials = cfg.trials;
  for (auto f : fails) r.failures += f;
  r.logical_error_rate = double(r.failures) / double(r.trials);
  r.stderr_ = std::sqrt(r.logical_error_rate * (1.0 - r.logical_error_rate) / double(r.trials));
  if (cfg.record_trials)
    for (auto& v : recs) r.outcomes.insert(r.outcomes.end(), v.begin(), v.end());
  return r;
}

struct BeneficialRegion {
  bool found = false;
  double lower = 0.0;
  double upper = 0.0;
};

// Widest interval of the grid where the logical error rate lies below p_loss;
// edges are placed by linear interpolation of (rate - p_loss).
inline BeneficialRegion beneficial_region(const std::vector<std::pair<double, double>>& curve) {
  for (size_t i = 1; i < curve.size(); ++i)
    if (!(curve[i].first > curve[i - 1].first))
      throw ArgumentError("beneficial_region: p_loss grid must be strictly increasing");
  auto g = [&](size_t i) { return curve[i].second - curve[i].first; };
  auto cross = [&](size_t i, size_t j) {
    const double a = g(i), b = g(j);
    return curve[i].first + (curve[j].first - curve[i].first) * a / (a - b);
  };
  BeneficialRegion best;
  size_t i = 0;
  while (i < curve.size()) {
    if (g(i) >= 0.0) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < curve.size() && g(j + 1) < 0.0) ++j;
    const double lo = i == 0 ? curve[0].first : cross(i - 1, i);
    const double hi = j + 1 == curve.size() ? curve[j].first : cross(j, j + 1);
    if (!best.found || hi - lo > best.upper - best.lower) best = {true, lo, hi};
    i = j + 1;
  }
  return best;
}

struct ModeComparisonPoint {
  double p_loss = 0.0;
  QecResult coherent;
  QecResult clifford;
  double relative_deviation = 0.0;  // (coh - inc) / coh
};

struct ModeComparison {
  std::vector<ModeComparisonPoint> points;
  double max_relative_deviation = 0.0;
};

inline ModeComparison compare_coherent_incoherent(const QecConfig& base, const std::vector<double>& p_loss_grid) {
  ModeComparison out;
  for (double p : p_loss_grid) {
    QecConfig c = base;
    c.p_loss = p;
    c.record_trials = false;
    ModeComparisonPoint pt;
    pt.p_loss = p;
    c.mode = QecMode::coherent;
    pt.coherent = run_qec_cycle(c);
    c.mode = QecMode::clifford;
    pt.clifford = run_qec_cycle(c);
    const double coh = pt.coherent.logical_error_rate;
    pt.relative_deviation = coh > 0.0 ? (coh - pt.clifford.logical_error_rate) / coh : 0.0;
    out.max_relative_deviation = std::max(out.max_relative_deviation, pt.relative_deviation);
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace qinstr
