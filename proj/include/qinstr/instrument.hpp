// Quantum instruments as labelled families of Kraus branches.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "qinstr/operator.hpp"

namespace qinstr {

struct KrausBranch {
  int label = 0;
  std::vector<LinearMap> operators;

  // Sum_k K^dag K of this branch.
  Matrix effect() const {
    if (operators.empty()) throw ArgumentError("KrausBranch: no operators");
    const int din = operators.front().in_shape().dim();
    Matrix e = Matrix::Zero(din, din);
    for (const auto& k : operators) e += k.matrix().adjoint() * k.matrix();
    return e;
  }
};

class QuantumInstrument {
 public:
  QuantumInstrument(HilbertShape in, HilbertShape out, std::vector<KrausBranch> branches)
      : in_(std::move(in)), out_(std::move(out)), branches_(std::move(branches)) {
    validate();
  }

  const HilbertShape& in_shape() const { return in_; }
  const HilbertShape& out_shape() const { return out_; }
  const std::vector<KrausBranch>& branches() const { return branches_; }

  const KrausBranch& branch(int label) const {
    for (const auto& b : branches_)
      if (b.label == label) return b;
    throw ArgumentError("QuantumInstrument: unknown branch label " + std::to_string(label));
  }

  // max |Sum_j Sum_k K^dag K - 1|
  double completeness_defect() const {
    Matrix total = Matrix::Zero(in_.dim(), in_.dim());
    for (const auto& b : branches_) total += b.effect();
    return max_abs(total - Matrix::Identity(in_.dim(), in_.dim()));
  }

 private:
  void validate() const {
    if (branches_.empty()) throw ArgumentError("QuantumInstrument: no branches");
    std::set<int> labels;
    for (const auto& b : branches_) {
      if (!labels.insert(b.label).second)
        throw ArgumentError("QuantumInstrument: duplicate branch label");
      if (b.operators.empty()) throw ArgumentError("QuantumInstrument: empty branch");
      for (const auto& k : b.operators)
        if (!(k.in_shape() == in_) || !(k.out_shape() == out_))
          throw ArgumentError("QuantumInstrument: Kraus shape mismatch");
      RealVector ev = eig_hermitian(b.effect()).values;
      if (ev.maxCoeff() > 1.0 + kTol.completeness)
        throw ArgumentError("QuantumInstrument: branch increases trace");
    }
    if (completeness_defect() > kTol.completeness)
      throw ArgumentError("QuantumInstrument: branches do not sum to a trace-preserving map");
  }

  HilbertShape in_, out_;
  std::vector<KrausBranch> branches_;
};

struct BranchOutput {
  int label;
  Matrix state;  // unnormalized output
  double probability;
};

inline Matrix apply_kraus(const std::vector<LinearMap>& ops, const Matrix& rho) {
  const LinearMap& first = ops.front();
  if (rho.rows() != first.in_shape().dim()) throw ArgumentError("apply_kraus: shape mismatch");
  const int dout = first.out_shape().dim();
  Matrix out = Matrix::Zero(dout, dout);
  for (const auto& k : ops) out += k.matrix() * rho * k.matrix().adjoint();
  return out;
}

inline std::vector<BranchOutput> apply_instrument(const QuantumInstrument& inst,
                                                  const DensityOperator& rho) {
  if (!(rho.shape() == inst.in_shape()))
    throw ArgumentError("apply_instrument: state shape does not match instrument input");
  std::vector<BranchOutput> out;
  out.reserve(inst.branches().size());
  for (const auto& b : inst.branches()) {
    Matrix s = apply_kraus(b.operators, rho.matrix());
    out.push_back({b.label, s, s.trace().real()});
  }
  return out;
}

}  // namespace qinstr
