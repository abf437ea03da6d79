// Dense complex operators on small qubit/qutrit composites.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qinstr {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

// Every numerical threshold used by the library lives here.
struct Tolerances {
  double hermitian = 1e-10;      // max |A - A^dag|, relative to max |A_ij|
  double eig_negative = 1e-10;   // smallest admissible eigenvalue of a state
  double trace = 1e-10;
  double hermitian_input = 1e-8; // eig_hermitian / psd_project precondition
  double completeness = 1e-9;
  double probability = 1e-9;
  double prob_imag = 1e-10;
  double choi_psd = 1e-8;
};

inline constexpr Tolerances kTol{};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HilbertShape {
 public:
  HilbertShape() : factors_{1} {}
  explicit HilbertShape(std::vector<int> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw ArgumentError("HilbertShape: empty factor list");
    for (int f : factors_) {
      if (f < 1) throw ArgumentError("HilbertShape: factor dimension must be >= 1");
    }
  }
  HilbertShape(std::initializer_list<int> factors)
      : HilbertShape(std::vector<int>(factors)) {}

  static HilbertShape qubits(int n) { return HilbertShape(std::vector<int>(n, 2)); }
  static HilbertShape qutrits(int n) { return HilbertShape(std::vector<int>(n, 3)); }

  int dim() const {
    return std::accumulate(factors_.begin(), factors_.end(), 1, std::multiplies<>());
  }
  int size() const { return static_cast<int>(factors_.size()); }
  int operator[](int i) const { return factors_.at(i); }
  const std::vector<int>& factors() const { return factors_; }

  HilbertShape concat(const HilbertShape& other) const {
    std::vector<int> f = factors_;
    f.insert(f.end(), other.factors_.begin(), other.factors_.end());
    return HilbertShape(std::move(f));
  }

  bool operator==(const HilbertShape&) const = default;

 private:
  std::vector<int> factors_;
};

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& m) {
  double scale = std::max(1.0, max_abs(m));
  return max_abs(m - m.adjoint()) / scale;
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Square operator with a factorized dimension.
class Operator {
 public:
  Operator() : shape_(), m_(Matrix::Zero(1, 1)) {}
  Operator(HilbertShape shape, Matrix m) : shape_(std::move(shape)), m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw ArgumentError("Operator: matrix not square");
    if (m_.rows() != shape_.dim()) throw ArgumentError("Operator: size does not match shape");
    if (!m_.allFinite()) throw ArgumentError("Operator: non-finite entry");
  }
  explicit Operator(const Matrix& m) : Operator(HilbertShape({static_cast<int>(m.rows())}), m) {}

  static Operator identity(const HilbertShape& s) {
    return Operator(s, Matrix::Identity(s.dim(), s.dim()));
  }
  static Operator zero(const HilbertShape& s) {
    return Operator(s, Matrix::Zero(s.dim(), s.dim()));
  }

  const HilbertShape& shape() const { return shape_; }
  const Matrix& matrix() const { return m_; }
  int dim() const { return shape_.dim(); }
  cplx operator()(int r, int c) const { return m_(r, c); }
  cplx trace() const { return m_.trace(); }
  Operator adjoint() const { return Operator(shape_, m_.adjoint()); }
  bool is_hermitian(double tol = kTol.hermitian) const { return hermiticity_defect(m_) <= tol; }

  Operator operator*(const Operator& o) const {
    check_same(o);
    return Operator(shape_, m_ * o.m_);
  }
  Operator operator+(const Operator& o) const {
    check_same(o);
    return Operator(shape_, m_ + o.m_);
  }
  Operator operator-(const Operator& o) const {
    check_same(o);
    return Operator(shape_, m_ - o.m_);
  }
  Operator operator*(cplx s) const { return Operator(shape_, m_ * s); }

 private:
  void check_same(const Operator& o) const {
    if (!(shape_ == o.shape_)) throw ArgumentError("Operator: shape mismatch");
  }
  HilbertShape shape_;
  Matrix m_;
};

inline Operator operator*(cplx s, const Operator& a) { return a * s; }

// Rectangular map between two spaces; used for Kraus operators such as the
// qubit -> qutrit embedding of the loss-detection instrument.
class LinearMap {
 public:
  LinearMap(HilbertShape out, HilbertShape in, Matrix m)
      : out_(std::move(out)), in_(std::move(in)), m_(std::move(m)) {
    if (m_.rows() != out_.dim() || m_.cols() != in_.dim())
      throw ArgumentError("LinearMap: size does not match shapes");
    if (!m_.allFinite()) throw ArgumentError("LinearMap: non-finite entry");
  }
  explicit LinearMap(const Operator& op) : LinearMap(op.shape(), op.shape(), op.matrix()) {}

  const HilbertShape& out_shape() const { return out_; }
  const HilbertShape& in_shape() const { return in_; }
  const Matrix& matrix() const { return m_; }

 private:
  HilbertShape out_, in_;
  Matrix m_;
};

class DensityOperator {
 public:
  explicit DensityOperator(Operator op) : op_(std::move(op)) { validate(); }
  DensityOperator(HilbertShape s, Matrix m) : DensityOperator(Operator(std::move(s), std::move(m))) {}

  static DensityOperator pure(const HilbertShape& s, const Vector& psi) {
    if (psi.size() != s.dim()) throw ArgumentError("DensityOperator::pure: size mismatch");
    return DensityOperator(s, psi * psi.adjoint());
  }

  const Operator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }
  const HilbertShape& shape() const { return op_.shape(); }
  int dim() const { return op_.dim(); }
  double trace() const { return op_.trace().real(); }

  DensityOperator normalized() const {
    return DensityOperator(op_.shape(), op_.matrix() / trace());
  }

 private:
  void validate() const;
  Operator op_;
};

class Effect {
 public:
  explicit Effect(Operator op) : op_(std::move(op)) { validate(); }
  Effect(HilbertShape s, Matrix m) : Effect(Operator(std::move(s), std::move(m))) {}

  static Effect projector(const HilbertShape& s, const Vector& v) {
    return Effect(s, v * v.adjoint());
  }

  const Operator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }
  const HilbertShape& shape() const { return op_.shape(); }

 private:
  void validate() const;
  Operator op_;
};

struct EigenSystem {
  RealVector values;  // ascending
  Matrix vectors;     // columns are orthonormal eigenvectors
};

inline EigenSystem eig_hermitian(const Matrix& a) {
  if (a.rows() != a.cols()) throw ArgumentError("eig_hermitian: matrix not square");
  if (hermiticity_defect(a) > kTol.hermitian_input)
    throw ArgumentError("eig_hermitian: input not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a));
  if (es.info() != Eigen::Success) throw NumericalError("eig_hermitian: no convergence");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline EigenSystem eig_hermitian(const Operator& a) { return eig_hermitian(a.matrix()); }

inline Matrix reassemble(const EigenSystem& es, const RealVector& values) {
  return es.vectors * values.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

inline void DensityOperator::validate() const {
  const Matrix& m = op_.matrix();
  if (hermiticity_defect(m) > kTol.hermitian)
    throw ArgumentError("DensityOperator: not Hermitian");
  cplx tr = m.trace();
  if (std::abs(tr.imag()) > kTol.trace) throw ArgumentError("DensityOperator: complex trace");
  if (!(tr.real() > 0.0) || tr.real() > 1.0 + kTol.trace)
    throw ArgumentError("DensityOperator: trace outside (0, 1]");
  if (eig_hermitian(m).values.minCoeff() < -kTol.eig_negative)
    throw ArgumentError("DensityOperator: negative eigenvalue");
}

inline void Effect::validate() const {
  const Matrix& m = op_.matrix();
  if (hermiticity_defect(m) > kTol.hermitian) throw ArgumentError("Effect: not Hermitian");
  RealVector ev = eig_hermitian(m).values;
  if (ev.minCoeff() < -kTol.eig_negative || ev.maxCoeff() > 1.0 + kTol.eig_negative)
    throw ArgumentError("Effect: eigenvalues outside [0, 1]");
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

inline Operator tensor(const Operator& a, const Operator& b) {
  return Operator(a.shape().concat(b.shape()), kron(a.matrix(), b.matrix()));
}

inline LinearMap tensor(const LinearMap& a, const LinearMap& b) {
  return LinearMap(a.out_shape().concat(b.out_shape()), a.in_shape().concat(b.in_shape()),
                   kron(a.matrix(), b.matrix()));
}

// Trace out every factor not listed in `keep`; kept factors retain their order.
inline Operator partial_trace(const Operator& a, std::vector<int> keep) {
  const HilbertShape& s = a.shape();
  const int n = s.size();
  if (keep.empty()) throw ArgumentError("partial_trace: empty keep set");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw ArgumentError("partial_trace: duplicate factor index");
  for (int k : keep)
    if (k < 0 || k >= n) throw ArgumentError("partial_trace: factor index out of range");

  std::vector<int> strides(n, 1);
  for (int i = n - 2; i >= 0; --i) strides[i] = strides[i + 1] * s[i + 1];
  std::vector<bool> kept(n, false);
  for (int k : keep) kept[k] = true;

  std::vector<int> kdims, tdims;
  for (int i = 0; i < n; ++i) (kept[i] ? kdims : tdims).push_back(s[i]);
  HilbertShape ks(kdims);
  const int dk = ks.dim();
  const int dt = tdims.empty() ? 1 : HilbertShape(tdims).dim();

  // Offsets into the full index for each kept / traced multi-index.
  auto offsets = [&](bool want_kept, int count) {
    std::vector<int> off(count, 0);
    for (int idx = 0; idx < count; ++idx) {
      int rem = idx, o = 0;
      for (int i = n - 1; i >= 0; --i) {
        if (kept[i] != want_kept) continue;
        o += (rem % s[i]) * strides[i];
        rem /= s[i];
      }
      off[idx] = o;
    }
    return off;
  };
  std::vector<int> ko = offsets(true, dk), to = offsets(false, dt);

  Matrix r = Matrix::Zero(dk, dk);
  const Matrix& m = a.matrix();
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      cplx acc = 0.0;
      for (int t = 0; t < dt; ++t) acc += m(ko[i] + to[t], ko[j] + to[t]);
      r(i, j) = acc;
    }
  return Operator(ks, std::move(r));
}

// Nearest PSD matrix in Frobenius norm.
inline Matrix psd_project(const Matrix& a) {
  if (hermiticity_defect(a) > kTol.hermitian_input)
    throw ArgumentError("psd_project: input not Hermitian");
  EigenSystem es = eig_hermitian(hermitian_part(a));
  return reassemble(es, es.values.cwiseMax(0.0));
}

inline Operator psd_project(const Operator& a) {
  return Operator(a.shape(), psd_project(a.matrix()));
}

// Euclidean projection of v onto {x >= 0, sum x = total}.
inline RealVector project_simplex(const RealVector& v, double total) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += u[k];
    double t = (cum - total) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

// Nearest PSD matrix with prescribed trace in Frobenius norm.
inline Matrix psd_trace_project(const Matrix& a, double trace) {
  EigenSystem es = eig_hermitian(hermitian_part(a));
  return reassemble(es, project_simplex(es.values, trace));
}

inline Matrix sqrtm_psd(const Matrix& a) {
  EigenSystem es = eig_hermitian(a);
  return reassemble(es, es.values.cwiseMax(0.0).cwiseSqrt());
}

// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of trace-normalized operators.
inline double fidelity(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("fidelity: dimension mismatch");
  double ta = a.trace().real(), tb = b.trace().real();
  if (!(ta > 0.0) || !(tb > 0.0)) throw ArgumentError("fidelity: zero-trace input");
  Matrix an = hermitian_part(a) / ta, bn = hermitian_part(b) / tb;
  Matrix sa = sqrtm_psd(an);
  RealVector ev = eig_hermitian(hermitian_part(sa * bn * sa)).values;
  double f = ev.cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(f * f, 0.0, 1.0);
}

inline double state_fidelity(const DensityOperator& a, const DensityOperator& b) {
  if (!(a.shape() == b.shape())) throw ArgumentError("state_fidelity: shape mismatch");
  return fidelity(a.matrix(), b.matrix());
}

// Align the global phase of b to a using the largest entry of a.
inline Matrix phase_aligned(const Matrix& a, const Matrix& b) {
  Eigen::Index r = 0, c = 0;
  a.cwiseAbs().maxCoeff(&r, &c);
  if (std::abs(b(r, c)) == 0.0) return b;
  cplx ph = a(r, c) / b(r, c);
  return b * (ph / std::abs(ph));
}

inline Matrix basis_ket(int dim, int k) {
  Matrix v = Matrix::Zero(dim, 1);
  v(k, 0) = 1.0;
  return v;
}

inline Matrix ketbra(int dim, int i, int j) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}
inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace qinstr
