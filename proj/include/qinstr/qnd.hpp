// The loss-detection instrument, the erasure construction and derived observables.
#pragma once

#include <array>
#include <cmath>

#include "qinstr/gates.hpp"
#include "qinstr/instrument.hpp"

namespace qinstr {

namespace branch {
inline constexpr int kNoLoss = 0;
inline constexpr int kLoss = 1;
inline constexpr int kLossStageTwo = 1;
inline constexpr int kLossStageOne = 2;
}  // namespace branch

// Restriction of a 3x3 qutrit operator to qubit inputs: a 3x2 map.
inline LinearMap from_qubit(const Matrix& m3) {
  return LinearMap(HilbertShape({3}), HilbertShape({2}), m3.leftCols(2));
}

inline Matrix no_loss_kraus(double phi, int pivot = 0) {
  const double c = std::cos(0.5 * phi);
  Matrix m = Matrix::Zero(3, 3);
  m(1 - pivot, 1 - pivot) = 1.0;
  m(pivot, pivot) = c;
  return m;
}

inline Matrix loss_kraus(double phi, int pivot = 0) {
  Matrix m = Matrix::Zero(3, 3);
  m(2, pivot) = std::sin(0.5 * phi);
  return m;
}

// No-loss map restricted to qubit output: |1><1| + cos(phi/2)|0><0|.
inline Matrix no_loss_qubit(double phi) { return no_loss_kraus(phi).topLeftCorner(2, 2); }

inline QuantumInstrument qnd_instrument(double phi) {
  std::vector<KrausBranch> b;
  b.push_back({branch::kNoLoss, {from_qubit(no_loss_kraus(phi))}});
  b.push_back({branch::kLoss, {from_qubit(loss_kraus(phi))}});
  return QuantumInstrument(HilbertShape({2}), HilbertShape({3}), std::move(b));
}

// Loss from |0> followed by loss from |1> with the same angle: the surviving
// branch is cos(phi/2) times the identity on the qubit subspace.
inline QuantumInstrument erasure_channel(double phi) {
  Matrix a0 = no_loss_kraus(phi, 0), a1 = loss_kraus(phi, 0);
  Matrix b0 = no_loss_kraus(phi, 1), b1 = loss_kraus(phi, 1);
  std::vector<KrausBranch> b;
  b.push_back({branch::kNoLoss, {from_qubit(b0 * a0)}});
  b.push_back({branch::kLossStageTwo, {from_qubit(b1 * a0)}});
  b.push_back({branch::kLossStageOne, {from_qubit(a1)}});
  return QuantumInstrument(HilbertShape({2}), HilbertShape({3}), std::move(b));
}

using Bloch = std::array<double, 3>;

inline Bloch bloch_of(const Matrix& rho2) {
  const double tr = rho2.trace().real();
  if (!(tr > 0.0)) throw ArgumentError("bloch_of: zero-trace state");
  Matrix r = rho2 / tr;
  return {(r * pauli_x()).trace().real(), (r * pauli_y()).trace().real(),
          (r * pauli_z()).trace().real()};
}

inline Bloch bloch_vector_no_loss(const Vector& psi, double phi) {
  if (psi.size() != 2) throw ArgumentError("bloch_vector_no_loss: expected a qubit state");
  if (std::abs(psi.norm() - 1.0) > 1e-9) throw ArgumentError("bloch_vector_no_loss: state not normalized");
  Vector out = no_loss_qubit(phi) * psi;
  if (out.norm() == 0.0) throw ArgumentError("bloch_vector_no_loss: no-loss branch has zero weight");
  return bloch_of(out * out.adjoint());
}

// P(|0...0>) / P(|1...1>) of the normalized no-loss state after detection on qubit 1
// of an n-qubit GHZ state.
inline double ghz_imbalance(int n_qubits, double phi) {
  if (n_qubits < 1) throw ArgumentError("ghz_imbalance: need at least one qubit");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Vector psi = Vector::Zero(dim);
  psi(0) = psi(dim - 1) = 1.0 / std::sqrt(2.0);
  Matrix op = no_loss_qubit(phi);
  for (int k = 1; k < n_qubits; ++k) op = kron(op, Matrix::Identity(2, 2));
  Vector out = op * psi;
  out /= out.norm();
  return std::norm(out(0)) / std::norm(out(dim - 1));
}

// Qubit view of a qutrit state when the loss level is read out as |1>.
inline Matrix trace_out_ancilla_to_qubit(const Matrix& rho3) {
  if (rho3.rows() != 3 || rho3.cols() != 3)
    throw ArgumentError("trace_out_ancilla_to_qubit: expected a 3x3 state");
  Matrix r = rho3.topLeftCorner(2, 2);
  r(1, 1) += rho3(2, 2);
  return r;
}

}  // namespace qinstr
