#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "qinstr/detection.hpp"
#include "qinstr/io.hpp"
#include "qinstr/qnd.hpp"
#include "qinstr/tomography.hpp"
#include "test_util.hpp"

using namespace qinstr;

namespace {

// Direct sum over Kraus operators, independent of the Choi machinery.
Matrix apply_kraus_oracle(const std::vector<LinearMap>& ks, const Matrix& rho) {
  Matrix out = Matrix::Zero(ks.front().out_shape().dim(), ks.front().out_shape().dim());
  for (const auto& k : ks) out += k.matrix() * rho * k.matrix().adjoint();
  return out;
}

ChoiOperator qubit_no_loss_choi(double phi) {
  return choi_of_map({LinearMap(HilbertShape{2}, HilbertShape{2}, no_loss_qubit(phi))});
}

}  // namespace

TEST(Choi, IdentityChannelIsUnnormalizedBellProjector) {
  ChoiOperator c = choi_of_map({LinearMap(Operator::identity(HilbertShape{2}))});
  Matrix bell = Matrix::Zero(4, 4);
  for (int a : {0, 3})
    for (int b : {0, 3}) bell(a, b) = 1.0;
  EXPECT_LT(max_abs(c.matrix - bell), 1e-15);
  EXPECT_NEAR(c.trace(), 2.0, 1e-15);
}

TEST(Choi, RoundTripThroughApplyChoi) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const int din = 2 + t % 2, dout = 2 + (t / 2) % 2;
    auto ks = testutil::random_cp_map(rng, din, dout, 1 + t % 3, 1.0);
    ChoiOperator c = choi_of_map(ks);
    EXPECT_TRUE(c.is_psd());
    Matrix rho = testutil::random_density(rng, din);
    EXPECT_LT(max_abs(apply_choi(c, rho) - apply_kraus_oracle(ks, rho)), 1e-12);
    ChoiOperator again = choi_of_channel(din, dout, [&](const Matrix& r) { return apply_choi(c, r); });
    EXPECT_LT(max_abs(again.matrix - c.matrix), 1e-12);
  }
}

TEST(Choi, TraceOfNoLossMapIsTwiceSurvival) {
  for (double phi : {0.0, 0.5, 1.5, M_PI}) {
    ChoiOperator c = qubit_no_loss_choi(phi);
    // Tr Lambda = Tr E(1); the |1> component always survives.
    EXPECT_NEAR(c.trace(), 1.0 + (1.0 - p_loss_from_angle(phi)), 1e-12);
  }
}

TEST(HermitianCoordinates, RoundTripAndInnerProduct) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 20; ++t) {
    Matrix a = testutil::random_hermitian(rng, 4), b = testutil::random_hermitian(rng, 4);
    RealVector x = hermitian_to_real(a), y = hermitian_to_real(b);
    EXPECT_LT(max_abs(real_to_hermitian(x, 4) - a), 1e-13);
    EXPECT_NEAR(x.dot(y), (a * b).trace().real(), 1e-10);
  }
}

TEST(Design, FullRankForStandardSpaces) {
  using design::Space;
  EXPECT_EQ(design::make(Space::qubit, Space::qubit).rank(), 16);
  EXPECT_EQ(design::make(Space::qubit, Space::qutrit).rank(), 36);
  EXPECT_EQ(design::make(Space::qubit, Space::ancilla_qutrit).rank(), 144);
}

TEST(Design, RejectsRankDeficientDesign) {
  auto preps = design::to_states({design::qubit_prep_kets()[0], design::qubit_prep_kets()[1]});
  auto settings = design::to_settings(design::qubit_setting_kets());
  EXPECT_THROW(TomographyDesign(preps, settings), ArgumentError);
}

TEST(Design, RejectsIncompleteSetting) {
  auto preps = design::to_states(design::qubit_prep_kets());
  std::vector<std::vector<Effect>> bad{{Effect::projector(HilbertShape{2}, design::qubit_setting_kets()[0][0])}};
  EXPECT_THROW(TomographyDesign(preps, bad), ArgumentError);
}

TEST(PredictProbabilities, InUnitIntervalAndSettingsSumToSurvival) {
  std::mt19937_64 rng(23);
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  for (int t = 0; t < 20; ++t) {
    auto ks = testutil::random_cp_map(rng, 2, 2, 2, 1.0);
    ChoiOperator c = choi_of_map(ks);
    RealMatrix p = predict_probabilities(c, d);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
    for (int i = 0; i < d.n_preps(); ++i) {
      const double survive = apply_kraus_oracle(ks, d.preparations()[i].matrix()).trace().real();
      for (int s = 0; s < d.n_settings(); ++s) {
        double sum = 0.0;
        for (int e = 0; e < d.setting_size(s); ++e) sum += p(i, d.effect_column(s, e));
        EXPECT_NEAR(sum, survive, 1e-12);
      }
    }
  }
}

TEST(TotalVariation, ExamplesOnExplicitDistributions) {
  RealVector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(total_variation_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(total_variation_distance(a, a), 0.0);
  b << 0.5, 0.5;
  EXPECT_DOUBLE_EQ(total_variation_distance(a, b), 0.5);
}

TEST(TotalVariation, ExactRecordsGiveZeroAndDiscardIsCounted) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  const RealMatrix p = predict_probabilities(qubit_no_loss_choi(M_PI / 2), d);
  EXPECT_NEAR(total_variation_distance(d, exact_records(d, p, 1 << 20), p), 0.0, 1e-6);
  // A model that discards everything differs by the full surviving weight.
  const RealMatrix zero = RealMatrix::Zero(p.rows(), p.cols());
  const double tv = total_variation_distance(d, exact_records(d, p, 1 << 20), zero);
  double expect = 0.0;
  for (int i = 0; i < d.n_preps(); ++i)
    for (int s = 0; s < d.n_settings(); ++s) {
      double sum = 0.0;
      for (int e = 0; e < d.setting_size(s); ++e) sum += p(i, d.effect_column(s, e));
      expect += sum;  // 0.5 * (sum + sum)
    }
  EXPECT_NEAR(tv, expect / (d.n_preps() * d.n_settings()), 1e-6);
}

TEST(Weights, FiniteForExtremeFrequencies) {
  Observations o{RealVector(3), RealVector::Constant(3, 200.0)};
  o.f << 0.0, 0.5, 1.0;
  RealVector w = tomography_weights(o);
  EXPECT_TRUE(w.allFinite());
  EXPECT_NEAR(w(1), std::sqrt(200.0 / 0.25), 1e-12);
  EXPECT_NEAR(w(0), w(2), 1e-12 * w(0));
}

TEST(SampleCounts, DeterministicPerSeedAndWithinShots) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  const RealMatrix p = predict_probabilities(qubit_no_loss_choi(1.0), d);
  auto a = sample_counts(d, p, 200, 99), b = sample_counts(d, p, 200, 99);
  ASSERT_EQ(a.size(), static_cast<size_t>(d.n_rows()));
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].count, b[k].count);
    EXPECT_LE(a[k].count, 200);
  }
  EXPECT_THROW(sample_counts(d, p, 0, 1), ArgumentError);
}

TEST(Reconstruct, UnconstrainedRecoversExactData) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  for (double phi : {0.3, M_PI / 2, 2.5}) {
    ChoiOperator truth = qubit_no_loss_choi(phi);
    RealMatrix p = predict_probabilities(truth, d);
    Reconstruction r = reconstruct(d, exact_records(d, p, 1LL << 30), false);
    EXPECT_LT(max_abs(r.choi.matrix - truth.matrix), 1e-4);
    EXPECT_GT(choi_fidelity(r.choi, truth), 1.0 - 1e-6);
  }
}

TEST(Reconstruct, TracePreservingTargetRecoveredByBothFits) {
  std::mt19937_64 rng(24);
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  auto ks = testutil::random_cp_map(rng, 2, 2, 2, 1.0);
  // Complete to trace preserving by rescaling the whole Kraus set.
  Matrix total = Matrix::Zero(2, 2);
  for (const auto& k : ks) total += k.matrix().adjoint() * k.matrix();
  EigenSystem es = eig_hermitian(total);
  Matrix inv = es.vectors * es.values.cwiseSqrt().cwiseInverse().asDiagonal() * es.vectors.adjoint();
  std::vector<LinearMap> tp;
  for (const auto& k : ks) tp.emplace_back(HilbertShape{2}, HilbertShape{2}, Matrix(k.matrix() * inv));
  ChoiOperator truth = choi_of_map(tp);
  RealMatrix p = predict_probabilities(truth, d);
  for (bool constrain : {false, true}) {
    Reconstruction r = reconstruct(d, exact_records(d, p, 1LL << 30), constrain);
    EXPECT_GT(choi_fidelity(r.choi, truth), 1.0 - 1e-6);
    EXPECT_TRUE(r.choi.is_psd());
  }
}

TEST(Reconstruct, UnconstrainedFitsLossyDataAtLeastAsWell) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  for (int k = 0; k < 5; ++k) {
    const double p_loss = 0.1 + 0.2 * k;
    RealMatrix p = predict_probabilities(qubit_no_loss_choi(angle_from_p_loss(p_loss)), d);
    auto recs = sample_counts(d, p, 200, 1000 + k);
    Reconstruction u = reconstruct(d, recs, false), c = reconstruct(d, recs, true);
    EXPECT_NEAR(c.choi.trace(), 2.0, 1e-6);
    EXPECT_LE(u.objective, c.objective + 1e-9);
    const double tvu = total_variation_distance(d, recs, predict_probabilities(u.choi, d));
    const double tvc = total_variation_distance(d, recs, predict_probabilities(c.choi, d));
    EXPECT_LE(tvu, tvc + 1e-3) << "p_loss=" << p_loss;
  }
}

TEST(Reconstruct, OutputIsPsdForNoisyData) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qutrit);
  ChoiOperator truth = choi_of_map(qnd_instrument(1.0).branch(branch::kNoLoss).operators);
  auto recs = sample_counts(d, predict_probabilities(truth, d), 200, 5);
  Reconstruction r = reconstruct(d, recs, false);
  EXPECT_GE(eig_hermitian(r.choi.matrix).values.minCoeff(), -1e-9);
  EXPECT_GT(choi_fidelity(r.choi, truth), 0.9);
}

TEST(Records, CsvRoundTrip) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  auto recs = sample_counts(d, predict_probabilities(qubit_no_loss_choi(0.8), d), 200, 3);
  std::stringstream ss;
  io::write_records(ss, recs);
  auto back = io::read_records(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (size_t k = 0; k < recs.size(); ++k) {
    EXPECT_EQ(back[k].prep_index, recs[k].prep_index);
    EXPECT_EQ(back[k].setting_index, recs[k].setting_index);
    EXPECT_EQ(back[k].effect_index, recs[k].effect_index);
    EXPECT_EQ(back[k].shots, recs[k].shots);
    EXPECT_EQ(back[k].count, recs[k].count);
  }
}

TEST(Records, CollectRejectsBadRecords) {
  const TomographyDesign d = design::make(design::Space::qubit, design::Space::qubit);
  auto recs = exact_records(d, predict_probabilities(qubit_no_loss_choi(0.8), d), 100);
  auto missing = recs;
  missing.pop_back();
  EXPECT_THROW(collect(d, missing), ArgumentError);
  auto bad = recs;
  bad[0].count = 101;
  EXPECT_THROW(collect(d, bad), ArgumentError);
}

TEST(OperatorJson, RoundTrip) {
  std::mt19937_64 rng(25);
  Operator a(HilbertShape{2, 3}, testutil::random_complex(rng, 6, 6));
  Operator b = io::operator_from_json(io::to_json(a));
  EXPECT_EQ(b.shape(), a.shape());
  EXPECT_EQ(max_abs(b.matrix() - a.matrix()), 0.0);
}

TEST(FidelityDecay, LimitingCases) {
  ChoiOperator ideal = choi_of_map({LinearMap(Operator::identity(HilbertShape{2}))});
  EXPECT_NEAR(choi_fidelity(fidelity_decay_model(0.3, 0.0, 0.0, ideal), ideal), 1.0, 1e-12);
  EXPECT_NEAR(choi_fidelity(fidelity_decay_model(0.0, 0.5, 0.0, ideal), ideal), 1.0, 1e-12);
  // Pure SPAM: white noise with weight p_spam, fidelity (1 - p) + p / 4 on a Bell target.
  const double p = 0.2;
  EXPECT_NEAR(choi_fidelity(fidelity_decay_model(0.0, 0.0, p, ideal), ideal), 1.0 - p + p / 4.0, 1e-10);
  EXPECT_NEAR(fidelity_decay_model(0.5, 0.1, 0.05, ideal).trace(), ideal.trace(), 1e-12);
  EXPECT_THROW(fidelity_decay_model(1.5, 0.0, 0.0, ideal), ArgumentError);
}

TEST(FidelityDecay, MonotoneInLoss) {
  ChoiOperator ideal = choi_of_map({LinearMap(Operator::identity(HilbertShape{2}))});
  double prev = 2.0;
  for (int k = 0; k <= 20; ++k) {
    double f = choi_fidelity(fidelity_decay_model(k / 20.0, 0.09, 0.03, ideal), ideal);
    EXPECT_LE(f, prev + 1e-12);
    prev = f;
  }
}

TEST(FidelityDecay, FitRecoversGeneratingParameters) {
  ChoiOperator ideal = choi_of_map({LinearMap(Operator::identity(HilbertShape{2}))});
  std::vector<double> pl, f;
  for (int k = 0; k <= 10; ++k) {
    pl.push_back(0.1 * k);
    f.push_back(choi_fidelity(fidelity_decay_model(pl.back(), 0.09, 0.03, ideal), ideal));
  }
  FidelityDecayFit fit = fit_fidelity_decay(pl, f, ideal);
  EXPECT_NEAR(fit.p_e, 0.09, 0.01);
  EXPECT_NEAR(fit.p_spam, 0.03, 0.01);
  EXPECT_LT(fit.residual, 1e-8);
}
