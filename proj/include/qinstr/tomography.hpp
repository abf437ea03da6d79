// Process tomography of trace-non-increasing maps.
//
// Choi convention: Lambda = sum_{k,l} |k><l| (x) E(|k><l|), input factor first,
// joint index k * d_out + o.  Hermitian matrices are handled through real
// coordinates in an orthonormal Hermitian basis, so the design matrix is real.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "qinstr/instrument.hpp"
#include "qinstr/operator.hpp"

namespace qinstr {

struct ChoiOperator {
  int in_dim = 1;
  int out_dim = 1;
  Matrix matrix;

  ChoiOperator() : matrix(Matrix::Zero(1, 1)) {}
  ChoiOperator(int din, int dout, Matrix m) : in_dim(din), out_dim(dout), matrix(std::move(m)) {
    if (din < 1 || dout < 1) throw ArgumentError("ChoiOperator: bad dimensions");
    if (matrix.rows() != din * dout || matrix.cols() != din * dout)
      throw ArgumentError("ChoiOperator: matrix size does not match in_dim * out_dim");
  }

  int dim() const { return in_dim * out_dim; }
  double trace() const { return matrix.trace().real(); }
  bool is_psd(double tol = kTol.choi_psd) const {
    return eig_hermitian(hermitian_part(matrix)).values.minCoeff() >= -tol;
  }
  Matrix normalized() const { return matrix / trace(); }
};

inline double choi_fidelity(const ChoiOperator& a, const ChoiOperator& b) {
  if (a.in_dim != b.in_dim || a.out_dim != b.out_dim)
    throw ArgumentError("choi_fidelity: dimension mismatch");
  return fidelity(a.matrix, b.matrix);
}

using ChannelFn = std::function<Matrix(const Matrix&)>;

// Choi operator of an arbitrary linear map given as a function on matrices.
inline ChoiOperator choi_of_channel(int din, int dout, const ChannelFn& map) {
  Matrix lam = Matrix::Zero(din * dout, din * dout);
  for (int k = 0; k < din; ++k)
    for (int l = 0; l < din; ++l) {
      Matrix out = map(ketbra(din, k, l));
      if (out.rows() != dout || out.cols() != dout)
        throw ArgumentError("choi_of_channel: map output has wrong size");
      lam.block(k * dout, l * dout, dout, dout) = out;
    }
  return ChoiOperator(din, dout, std::move(lam));
}

inline ChoiOperator choi_of_map(const std::vector<LinearMap>& kraus) {
  if (kraus.empty()) throw ArgumentError("choi_of_map: no Kraus operators");
  const int din = kraus.front().in_shape().dim(), dout = kraus.front().out_shape().dim();
  Matrix lam = Matrix::Zero(din * dout, din * dout);
  for (const auto& k : kraus) {
    if (k.in_shape().dim() != din || k.out_shape().dim() != dout)
      throw ArgumentError("choi_of_map: Kraus operators differ in shape");
    // |K>> = sum_k |k> (x) K|k>
    Vector v(din * dout);
    for (int c = 0; c < din; ++c) v.segment(c * dout, dout) = k.matrix().col(c);
    lam += v * v.adjoint();
  }
  return ChoiOperator(din, dout, std::move(lam));
}

inline ChoiOperator choi_of_branch(const KrausBranch& b) { return choi_of_map(b.operators); }

// E(rho) = Tr_1[(rho^T (x) 1) Lambda]
inline Matrix apply_choi(const ChoiOperator& choi, const Matrix& rho) {
  if (rho.rows() != choi.in_dim || rho.cols() != choi.in_dim)
    throw ArgumentError("apply_choi: state dimension does not match Choi input");
  const int dout = choi.out_dim;
  Matrix out = Matrix::Zero(dout, dout);
  for (int l = 0; l < choi.in_dim; ++l)
    for (int k = 0; k < choi.in_dim; ++k)
      if (rho(l, k) != cplx(0.0)) out += rho(l, k) * choi.matrix.block(l * dout, k * dout, dout, dout);
  return out;
}

// ---- real coordinates of Hermitian matrices ----
//
// Basis element b = r * D + c: r == c -> E_rr; r < c -> (E_rc + E_cr)/sqrt2;
// r > c -> i(E_cr - E_rc)/sqrt2.

inline RealVector hermitian_to_real(const Matrix& m) {
  const Eigen::Index d = m.rows();
  RealVector x(d * d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) {
      if (r == c) x(r * d + c) = m(r, r).real();
      else if (r < c) x(r * d + c) = M_SQRT2 * 0.5 * (m(r, c) + m(c, r)).real();
      else x(r * d + c) = M_SQRT2 * 0.5 * (m(c, r) - m(r, c)).imag();
    }
  return x;
}

// Coefficients Tr[M B_b] of a Hermitian M (the row of the design matrix).
inline RealVector trace_coefficients(const Matrix& m) { return hermitian_to_real(m); }

inline Matrix real_to_hermitian(const RealVector& x, Eigen::Index d) {
  Matrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    m(r, r) = x(r * d + r);
    for (Eigen::Index c = r + 1; c < d; ++c) {
      cplx v = cplx(x(r * d + c), x(c * d + r)) / M_SQRT2;
      m(r, c) = v;
      m(c, r) = std::conj(v);
    }
  }
  return m;
}

// ---- experiment design ----

struct ExperimentRow {
  int prep;
  int setting;
  int effect;
};

class TomographyDesign {
 public:
  TomographyDesign(std::vector<DensityOperator> preps, std::vector<std::vector<Effect>> settings)
      : preps_(std::move(preps)), settings_(std::move(settings)) {
    if (preps_.empty() || settings_.empty()) throw ArgumentError("TomographyDesign: empty design");
    in_dim_ = preps_.front().dim();
    out_dim_ = settings_.front().front().matrix().rows();
    for (const auto& p : preps_)
      if (p.dim() != in_dim_) throw ArgumentError("TomographyDesign: preparations differ in dimension");
    int offset = 0;
    for (const auto& s : settings_) {
      if (s.empty()) throw ArgumentError("TomographyDesign: empty measurement setting");
      Matrix total = Matrix::Zero(out_dim_, out_dim_);
      for (const auto& e : s) {
        if (e.matrix().rows() != out_dim_) throw ArgumentError("TomographyDesign: effect dimension mismatch");
        total += e.matrix();
      }
      if (max_abs(total - Matrix::Identity(out_dim_, out_dim_)) > kTol.hermitian)
        throw ArgumentError("TomographyDesign: effects of a setting do not sum to identity");
      offsets_.push_back(offset);
      offset += static_cast<int>(s.size());
    }
    n_effects_ = offset;
    for (int i = 0; i < n_preps(); ++i)
      for (int s = 0; s < n_settings(); ++s)
        for (int e = 0; e < static_cast<int>(settings_[s].size()); ++e) rows_.push_back({i, s, e});
    build_matrix();
  }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int n_preps() const { return static_cast<int>(preps_.size()); }
  int n_settings() const { return static_cast<int>(settings_.size()); }
  int n_effects() const { return n_effects_; }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  int setting_size(int s) const { return static_cast<int>(settings_.at(s).size()); }
  int effect_column(int s, int e) const { return offsets_.at(s) + e; }
  int row_index(int prep, int setting, int effect) const {
    return prep * n_effects_ + offsets_.at(setting) + effect;
  }
  const std::vector<ExperimentRow>& rows() const { return rows_; }
  const std::vector<DensityOperator>& preparations() const { return preps_; }
  const std::vector<std::vector<Effect>>& settings() const { return settings_; }
  const RealMatrix& matrix() const { return *s_; }
  int rank() const { return rank_; }

 private:
  void build_matrix() {
    const int d = in_dim_ * out_dim_;
    auto s = std::make_shared<RealMatrix>(n_rows(), d * d);
    for (int r = 0; r < n_rows(); ++r) {
      const auto& row = rows_[r];
      Matrix m = kron(preps_[row.prep].matrix().transpose(), settings_[row.setting][row.effect].matrix());
      s->row(r) = trace_coefficients(m).transpose();
    }
    RealMatrix gram = s->transpose() * (*s);
    Eigen::ColPivHouseholderQR<RealMatrix> qr(gram);
    qr.setThreshold(1e-10);
    rank_ = static_cast<int>(qr.rank());
    if (rank_ < d * d) {
      Eigen::FullPivLU<RealMatrix> lu(gram);
      lu.setThreshold(1e-10);
      RealMatrix ker = lu.kernel();
      std::ostringstream os;
      os << "TomographyDesign: rank-deficient design (rank " << rank_ << " of " << d * d
         << "); null directions dominated by basis elements";
      for (Eigen::Index k = 0; k < std::min<Eigen::Index>(ker.cols(), 8); ++k) {
        Eigen::Index idx = 0;
        ker.col(k).cwiseAbs().maxCoeff(&idx);
        os << " (" << idx / d << "," << idx % d << ")";
      }
      throw ArgumentError(os.str());
    }
    s_ = std::move(s);
  }

  std::vector<DensityOperator> preps_;
  std::vector<std::vector<Effect>> settings_;
  std::vector<int> offsets_;
  std::vector<ExperimentRow> rows_;
  int in_dim_ = 0, out_dim_ = 0, n_effects_ = 0, rank_ = 0;
  std::shared_ptr<const RealMatrix> s_;
};

inline const RealMatrix& design_matrix(const TomographyDesign& d) { return d.matrix(); }

namespace design {

inline std::vector<Vector> qubit_prep_kets() {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<Vector> v(4, Vector::Zero(2));
  v[0](0) = 1.0;
  v[1](1) = 1.0;
  v[2] << r, r;
  v[3] << r, kI * r;
  return v;
}

// Eigenbases of X, Y, Z.
inline std::vector<std::vector<Vector>> qubit_setting_kets() {
  const double r = 1.0 / std::sqrt(2.0);
  Vector p(2), m(2), pi(2), mi(2), z0 = Vector::Zero(2), z1 = Vector::Zero(2);
  p << r, r;
  m << r, -r;
  pi << r, kI * r;
  mi << r, -kI * r;
  z0(0) = 1.0;
  z1(1) = 1.0;
  return {{p, m}, {pi, mi}, {z0, z1}};
}

inline std::vector<Vector> qutrit_prep_kets() {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<Vector> v;
  for (int k = 0; k < 3; ++k) {
    Vector e = Vector::Zero(3);
    e(k) = 1.0;
    v.push_back(e);
  }
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& pr : pairs)
    for (cplx ph : {cplx(1.0), kI}) {
      Vector e = Vector::Zero(3);
      e(pr[0]) = r;
      e(pr[1]) = ph * r;
      v.push_back(e);
    }
  return v;
}

// For each level pair, X- and Y-type bases of that pair completed by the third level.
inline std::vector<std::vector<Vector>> qutrit_setting_kets() {
  const double r = 1.0 / std::sqrt(2.0);
  const int pairs[3][3] = {{0, 1, 2}, {0, 2, 1}, {1, 2, 0}};
  std::vector<std::vector<Vector>> out;
  for (const auto& pr : pairs)
    for (cplx ph : {cplx(1.0), kI}) {
      Vector a = Vector::Zero(3), b = Vector::Zero(3), c = Vector::Zero(3);
      a(pr[0]) = r;
      a(pr[1]) = ph * r;
      b(pr[0]) = r;
      b(pr[1]) = -ph * r;
      c(pr[2]) = 1.0;
      out.push_back({a, b, c});
    }
  return out;
}

inline std::vector<DensityOperator> to_states(const std::vector<Vector>& kets) {
  std::vector<DensityOperator> out;
  for (const auto& k : kets)
    out.push_back(DensityOperator::pure(HilbertShape({static_cast<int>(k.size())}), k));
  return out;
}

inline std::vector<std::vector<Effect>> to_settings(const std::vector<std::vector<Vector>>& kets) {
  std::vector<std::vector<Effect>> out;
  for (const auto& s : kets) {
    std::vector<Effect> es;
    for (const auto& k : s) es.push_back(Effect::projector(HilbertShape({static_cast<int>(k.size())}), k));
    out.push_back(std::move(es));
  }
  return out;
}

template <class T>
std::vector<T> product_kets(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out;
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(kron(x, y));
  return out;
}

inline std::vector<std::vector<Vector>> product_settings(const std::vector<std::vector<Vector>>& a,
                                                         const std::vector<std::vector<Vector>>& b) {
  std::vector<std::vector<Vector>> out;
  for (const auto& sa : a)
    for (const auto& sb : b) {
      std::vector<Vector> s;
      for (const auto& x : sa)
        for (const auto& y : sb) s.push_back(kron(x, y));
      out.push_back(std::move(s));
    }
  return out;
}

enum class Space { qubit, qutrit, ancilla_qutrit };

inline std::vector<Vector> prep_kets(Space s) {
  switch (s) {
    case Space::qubit: return qubit_prep_kets();
    case Space::qutrit: return qutrit_prep_kets();
    case Space::ancilla_qutrit: return product_kets(qubit_prep_kets(), qutrit_prep_kets());
  }
  return {};
}

inline std::vector<std::vector<Vector>> setting_kets(Space s) {
  switch (s) {
    case Space::qubit: return qubit_setting_kets();
    case Space::qutrit: return qutrit_setting_kets();
    case Space::ancilla_qutrit: return product_settings(qubit_setting_kets(), qutrit_setting_kets());
  }
  return {};
}

// Preparations on `in`, measurements on `out`.
inline TomographyDesign make(Space in, Space out) {
  return TomographyDesign(to_states(prep_kets(in)), to_settings(setting_kets(out)));
}

}  // namespace design

// ---- probabilities and data ----

// p(i, j) = Tr[(rho_i^T (x) E_j) Lambda]; columns follow effect_column(setting, effect).
inline RealMatrix predict_probabilities(const ChoiOperator& choi, const TomographyDesign& d) {
  if (choi.in_dim != d.in_dim() || choi.out_dim != d.out_dim())
    throw ArgumentError("predict_probabilities: Choi and design dimensions differ");
  RealMatrix p(d.n_preps(), d.n_effects());
  for (int i = 0; i < d.n_preps(); ++i) {
    Matrix out = apply_choi(choi, d.preparations()[i].matrix());
    for (int s = 0; s < d.n_settings(); ++s)
      for (int e = 0; e < d.setting_size(s); ++e) {
        cplx v = (d.settings()[s][e].matrix() * out).trace();
        if (std::abs(v.imag()) > kTol.prob_imag * std::max(1.0, std::abs(v.real())))
          throw NumericalError("predict_probabilities: complex probability");
        p(i, d.effect_column(s, e)) = std::clamp(v.real(), 0.0, 1.0);
      }
  }
  return p;
}

struct MeasurementRecord {
  int prep_index = 0;
  int setting_index = 0;
  int effect_index = 0;
  std::int64_t shots = 0;
  std::int64_t count = 0;

  double frequency() const { return shots > 0 ? static_cast<double>(count) / shots : 0.0; }
};

// Multinomial draw per (preparation, setting); probability not assigned to any
// effect goes to an unrecorded discard outcome.
inline std::vector<MeasurementRecord> sample_counts(const TomographyDesign& d, const RealMatrix& p,
                                                    std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw ArgumentError("sample_counts: shots must be >= 1");
  if (p.rows() != d.n_preps() || p.cols() != d.n_effects())
    throw ArgumentError("sample_counts: probability table does not match design");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<MeasurementRecord> out;
  out.reserve(d.n_rows());
  for (int i = 0; i < d.n_preps(); ++i)
    for (int s = 0; s < d.n_settings(); ++s) {
      double total = 0.0;
      for (int e = 0; e < d.setting_size(s); ++e) {
        double v = p(i, d.effect_column(s, e));
        if (v < -kTol.probability) throw ArgumentError("sample_counts: negative probability");
        total += std::max(v, 0.0);
      }
      if (total > 1.0 + 1e-9) throw ArgumentError("sample_counts: setting probabilities exceed 1");
      std::int64_t left = shots;
      double mass = std::max(1.0, total);
      for (int e = 0; e < d.setting_size(s); ++e) {
        double v = std::max(p(i, d.effect_column(s, e)), 0.0);
        std::int64_t c = 0;
        if (left > 0 && v > 0.0) {
          double cond = std::clamp(v / mass, 0.0, 1.0);
          c = std::binomial_distribution<std::int64_t>(left, cond)(rng);
        }
        mass -= v;
        left -= c;
        out.push_back({i, s, e, shots, c});
      }
    }
  return out;
}

// Records whose frequencies equal p up to rounding at the given shot count.
inline std::vector<MeasurementRecord> exact_records(const TomographyDesign& d, const RealMatrix& p,
                                                    std::int64_t shots) {
  std::vector<MeasurementRecord> out;
  for (const auto& r : d.rows()) {
    double v = std::clamp(p(r.prep, d.effect_column(r.setting, r.effect)), 0.0, 1.0);
    out.push_back({r.prep, r.setting, r.effect, shots, std::llround(v * static_cast<double>(shots))});
  }
  return out;
}

struct Observations {
  RealVector f;        // frequency per design row
  RealVector shots;    // shots per design row
};

inline Observations collect(const TomographyDesign& d, const std::vector<MeasurementRecord>& recs) {
  Observations o{RealVector::Constant(d.n_rows(), std::nan("")), RealVector::Zero(d.n_rows())};
  for (const auto& r : recs) {
    if (r.prep_index < 0 || r.prep_index >= d.n_preps() || r.setting_index < 0 ||
        r.setting_index >= d.n_settings() || r.effect_index < 0 ||
        r.effect_index >= d.setting_size(r.setting_index))
      throw ArgumentError("collect: record index outside design");
    if (r.shots < 1 || r.count < 0 || r.count > r.shots)
      throw ArgumentError("collect: record needs 0 <= count <= shots and shots >= 1");
    int idx = d.row_index(r.prep_index, r.setting_index, r.effect_index);
    o.f(idx) = r.frequency();
    o.shots(idx) = static_cast<double>(r.shots);
  }
  if (!o.f.allFinite()) throw ArgumentError("collect: records do not cover every design row");
  return o;
}

// sqrt(N / (p (1 - p))) with p clamped to [1/(2N), 1 - 1/(2N)].
inline RealVector tomography_weights(const Observations& o) {
  RealVector w(o.f.size());
  for (Eigen::Index k = 0; k < o.f.size(); ++k) {
    const double n = o.shots(k), lo = 0.5 / n;
    const double p = std::clamp(o.f(k), lo, 1.0 - lo);
    w(k) = std::sqrt(n / (p * (1.0 - p)));
  }
  return w;
}

struct LinearInversion {
  ChoiOperator choi;
  double residual = 0.0;
  bool physical = true;  // false when the estimate has negative eigenvalues
};

inline LinearInversion linear_inversion(const TomographyDesign& d, const RealVector& f) {
  const RealMatrix& s = d.matrix();
  if (f.size() != s.rows()) throw ArgumentError("linear_inversion: frequency vector size mismatch");
  RealVector x = (s.transpose() * s).ldlt().solve(s.transpose() * f);
  const int dim = d.in_dim() * d.out_dim();
  ChoiOperator c(d.in_dim(), d.out_dim(), real_to_hermitian(x, dim));
  return {c, (s * x - f).norm(), c.is_psd()};
}

struct ReconstructionOptions {
  int max_iterations = 50000;
  double relative_tolerance = 1e-10;
  double psd_tolerance = 1e-9;
};

struct Reconstruction {
  ChoiOperator choi;
  int iterations = 0;
  double objective = 0.0;  // 0.5 * ||W (S x - f)||^2
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, ChoiOperator last, double residual)
      : NumericalError(what), last_iterate(std::move(last)), residual(residual) {}
  ChoiOperator last_iterate;
  double residual;
};

namespace detail {

inline double largest_eigenvalue(const RealMatrix& h) {
  if (h.rows() <= 256) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  RealVector v = RealVector::Ones(h.rows()).normalized();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    RealVector w = h * v;
    double nl = w.norm();
    if (nl == 0.0) return 0.0;
    v = w / nl;
    if (std::abs(nl - lam) <= 1e-10 * nl) {
      lam = nl;
      break;
    }
    lam = nl;
  }
  return lam;
}

}  // namespace detail

// Weighted least squares over the PSD cone, optionally restricted to Tr = in_dim.
// Accelerated projected gradient with monotone restart, warm-started at the
// projected unconstrained solution.
inline Reconstruction reconstruct(const TomographyDesign& d, const std::vector<MeasurementRecord>& recs,
                                  bool constrain_trace, const ReconstructionOptions& opt = {}) {
  const Observations obs = collect(d, recs);
  const RealVector w = tomography_weights(obs);
  const RealMatrix ws = w.asDiagonal() * d.matrix();
  const RealVector wf = w.cwiseProduct(obs.f);
  const RealMatrix h = ws.transpose() * ws;
  const RealVector g = ws.transpose() * wf;
  const double c0 = 0.5 * wf.squaredNorm();
  const int dim = d.in_dim() * d.out_dim();
  const double trace_target = d.in_dim();

  auto objective = [&](const RealVector& x) { return 0.5 * x.dot(h * x) - g.dot(x) + c0; };
  auto project = [&](const RealVector& x) {
    Matrix m = real_to_hermitian(x, dim);
    return hermitian_to_real(constrain_trace ? psd_trace_project(m, trace_target) : psd_project(m));
  };

  const double lip = 1.05 * detail::largest_eigenvalue(h);
  const double floor = 1e-14 * std::max(c0, 1e-300);
  RealVector x = project(h.ldlt().solve(g));
  RealVector y = x;
  double obj = objective(x), t = 1.0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    RealVector xn = project(y - (h * y - g) / lip);
    double on = objective(xn);
    if (on > obj && (y - x).squaredNorm() > 0.0) {
      y = x;  // restart momentum
      t = 1.0;
      continue;
    }
    double change = std::abs(obj - on);
    bool done = change <= opt.relative_tolerance * std::max(std::abs(on), floor) || change <= floor;
    double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = std::move(xn);
    obj = std::min(on, obj);
    t = tn;
    if (done) break;
  }
  ChoiOperator choi(d.in_dim(), d.out_dim(), real_to_hermitian(x, dim));
  const double min_ev = eig_hermitian(choi.matrix).values.minCoeff();
  if (it >= opt.max_iterations || min_ev < -opt.psd_tolerance)
    throw NonConvergence("reconstruct: no convergence within iteration budget", choi, std::sqrt(2.0 * obj));
  return {std::move(choi), it + 1, obj};
}

// Per-setting total variation distance, a discard outcome absorbing 1 - sum p.
inline double total_variation_distance(const TomographyDesign& d, const std::vector<MeasurementRecord>& recs,
                                       const RealMatrix& p) {
  const Observations o = collect(d, recs);
  double acc = 0.0;
  int groups = 0;
  for (int i = 0; i < d.n_preps(); ++i)
    for (int s = 0; s < d.n_settings(); ++s) {
      double tv = 0.0, fs = 0.0, ps = 0.0;
      for (int e = 0; e < d.setting_size(s); ++e) {
        double f = o.f(d.row_index(i, s, e)), q = p(i, d.effect_column(s, e));
        tv += std::abs(f - q);
        fs += f;
        ps += q;
      }
      tv += std::abs((1.0 - fs) - (1.0 - ps));
      acc += 0.5 * tv;
      ++groups;
    }
  return acc / groups;
}

// Same metric on two explicit distributions.
inline double total_variation_distance(const RealVector& f, const RealVector& p) {
  if (f.size() != p.size()) throw ArgumentError("total_variation_distance: size mismatch");
  return 0.5 * (f - p).cwiseAbs().sum();
}

// Ideal Choi mixed with white noise; weights follow the loss/error/SPAM
// decomposition, renormalized to the trace of the ideal.
inline ChoiOperator fidelity_decay_model(double p_loss, double p_e, double p_spam, const ChoiOperator& ideal) {
  for (double v : {p_loss, p_e, p_spam})
    if (v < 0.0 || v > 1.0) throw ArgumentError("fidelity_decay_model: parameter outside [0, 1]");
  const int n = ideal.dim();
  const double w_ideal = (1.0 - p_loss) * (1.0 - p_e) * (1.0 - p_spam);
  const double w_noise = p_loss * p_e * (1.0 - p_spam) + p_spam;
  const double total = w_ideal + w_noise;
  if (!(total > 0.0)) throw ArgumentError("fidelity_decay_model: all weights vanish");
  Matrix m = (w_ideal * ideal.normalized() + w_noise * Matrix::Identity(n, n) / double(n)) / total;
  return ChoiOperator(ideal.in_dim, ideal.out_dim, m * ideal.trace());
}

}  // namespace qinstr
