// Gates of the loss-detection circuit on ancilla qubit (a) x system qutrit (q).
// Joint index is 3*a + q.
#pragma once

#include <cmath>

#include "qinstr/operator.hpp"

namespace qinstr {

inline double p_loss_from_angle(double phi) {
  double s = std::sin(0.5 * phi);
  return s * s;
}

inline double angle_from_p_loss(double p) {
  if (p < 0.0 || p > 1.0) throw ArgumentError("angle_from_p_loss: p outside [0, 1]");
  return 2.0 * std::asin(std::sqrt(p));
}

inline const HilbertShape& ancilla_qutrit_shape() {
  static const HilbertShape s({2, 3});
  return s;
}

// Qubit-subspace operators embedded in a qutrit (zero on |2>).
inline Matrix qutrit_x() {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = m(1, 0) = 1.0;
  return m;
}

inline Matrix qutrit_z() {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

inline Matrix qutrit_p2() { return ketbra(3, 2, 2); }
inline Matrix qutrit_p01() { return Matrix::Identity(3, 3) - qutrit_p2(); }

// Rotation between |pivot> and |2>; pivot 0 gives the loss-from-|0> rotation.
inline Operator loss_rotation(double phi, int pivot = 0) {
  if (pivot != 0 && pivot != 1) throw ArgumentError("loss_rotation: pivot must be 0 or 1");
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  const int k = pivot, other = 1 - pivot;
  Matrix m = Matrix::Zero(3, 3);
  m(other, other) = 1.0;
  m(k, k) = c;
  m(2, 2) = c;
  m(k, 2) = s;
  m(2, k) = -s;
  return Operator(HilbertShape({3}), m);
}

inline Operator ms_gate(double theta) {
  const Matrix ia = Matrix::Identity(2, 2);
  const Matrix p2 = kron(ia, qutrit_p2());
  const Matrix xx = kron(pauli_x(), qutrit_x());
  Matrix m = std::cos(0.5 * theta) * (Matrix::Identity(6, 6) - p2) -
             kI * std::sin(0.5 * theta) * xx + p2;
  return Operator(ancilla_qutrit_shape(), m);
}

inline Matrix ancilla_flip() { return -kI * pauli_x(); }
inline Matrix qutrit_flip() { return qutrit_p2() - kI * qutrit_x(); }

inline Operator collective_flip() {
  return Operator(ancilla_qutrit_shape(), kron(ancilla_flip(), qutrit_flip()));
}

// Conditional blocks of the detection unitary: U = 1_a (x) U0 + X_a (x) U1.
inline Matrix qnd_block0(double phi) {
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  Matrix u = Matrix::Zero(3, 3);
  u(1, 1) = 1.0;
  u(0, 0) = c;
  u(0, 2) = s;
  return u;
}

inline Matrix qnd_block1(double phi) {
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  Matrix u = Matrix::Zero(3, 3);
  u(2, 0) = s;
  u(2, 2) = -c;
  return u;
}

inline Operator qnd_unitary(double phi) {
  Matrix m = kron(Matrix::Identity(2, 2), qnd_block0(phi)) + kron(pauli_x(), qnd_block1(phi));
  return Operator(ancilla_qutrit_shape(), m);
}

// The same unitary as the literal gate sequence; equals qnd_unitary up to a global phase.
inline Operator qnd_unitary_composed(double phi) {
  Operator rl = tensor(Operator::identity(HilbertShape({2})), loss_rotation(phi));
  return collective_flip() * ms_gate(M_PI) * rl;
}

}  // namespace qinstr
