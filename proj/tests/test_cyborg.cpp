#include <gtest/gtest.h>

#include <random>

#include "gradcheck.hpp"
#include "salgrain/cam_classifier.hpp"
#include "salgrain/cyborg.hpp"
#include "salgrain/error.hpp"
#include "salgrain/synth_data.hpp"
#include "support.hpp"

using namespace salgrain;
using testing_support::random_tensor;

namespace {

double total_loss(const CamClassifier& m, const Tensor& image, std::size_t label, const SaliencyMap& sal,
                  const CyborgConfig& cfg) {
  const CamForward fwd = forward(m, image);
  return cyborg_loss(fwd.logits, label, cam(m, fwd.features(), label), sal, cfg);
}

}  // namespace

TEST(HumanLossTest, ZeroWhenNormalizedMapsAgree) {
  const SaliencyMap sal = gaussian_bump(8, 8, 3.0, 4.0, 2.0);
  const UnitMap target = saliency_target(sal, 8, 8);
  EXPECT_EQ(human_loss(target, sal), 0.0);
}

TEST(HumanLossTest, MaximalGap) {
  // A constant saliency normalizes to zeros, so use a map whose normalized form is all ones except one pixel.
  SaliencyMap sal(4, 4, 255);
  sal.at(0, 0) = 0;
  std::vector<double> cam_values(16, 0.0);
  cam_values[0] = 1.0;
  EXPECT_DOUBLE_EQ(human_loss(UnitMap(4, 4, cam_values), sal), 1.0);
  EXPECT_DOUBLE_EQ(human_loss_against(UnitMap(3, 3, 0.0), UnitMap(3, 3, 1.0)), 1.0);
}

TEST(HumanLossTest, MatchesElementwiseOracle) {
  std::mt19937_64 rng(3);
  const UnitMap c = to_unit(testing_support::random_map(rng, 6, 6));
  const SaliencyMap sal = testing_support::random_map(rng, 12, 12);
  const UnitMap t = minmax_normalize(resize_bilinear(to_unit(sal), 6, 6));
  double sum = 0.0;
  for (std::size_t i = 0; i < 36; ++i) sum += (c.values()[i] - t.values()[i]) * (c.values()[i] - t.values()[i]);
  EXPECT_NEAR(human_loss(c, sal), sum / 36.0, 1e-15);
  EXPECT_GE(human_loss(c, sal), 0.0);
}

TEST(CyborgLossTest, AffineInAlpha) {
  std::mt19937_64 rng(4);
  const CamClassifier m = make_cam_classifier({1, {4, 4}, 2}, 4);
  const Tensor image = random_tensor(rng, {1, 8, 8}, 0.0, 1.0);
  const SaliencyMap sal = gaussian_bump(8, 8, 2.0, 5.0, 2.0);
  const CamForward fwd = forward(m, image);
  const UnitMap c = cam(m, fwd.features(), 1);
  const double ce = cross_entropy(fwd.logits, 1);
  const double h = human_loss(c, sal);
  EXPECT_EQ(cyborg_loss(fwd.logits, 1, c, sal, {0.0}), ce);
  EXPECT_EQ(cyborg_loss(fwd.logits, 1, c, sal, {1.0}), h);
  for (double a : {0.25, 0.5, 0.75}) EXPECT_NEAR(cyborg_loss(fwd.logits, 1, c, sal, {a}), a * h + (1 - a) * ce, 1e-15);
}

TEST(CyborgLossTest, DirectCombination) {
  // 0.5 * 0.2 + 0.5 * 0.6 = 0.4
  EXPECT_DOUBLE_EQ(0.5 * 0.2 + (1.0 - 0.5) * 0.6, 0.4);
  const std::vector<double> logits{0.0, std::log(std::exp(0.6) - 1.0)};
  // CE of label 0 with these logits is ln(1 + e^{z1}) = 0.6.
  EXPECT_NEAR(cross_entropy(logits, 0), 0.6, 1e-12);
}

TEST(CyborgLossTest, AlphaOutOfRangeRejected) {
  try {
    validate(CyborgConfig{1.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
  }
}

TEST(CyborgGradientTest, AlphaZeroEqualsCrossEntropyBitwise) {
  std::mt19937_64 rng(5);
  const CamClassifier m = make_cam_classifier({}, 5);
  const Tensor image = random_tensor(rng, {1, 32, 32}, 0.0, 1.0);
  const SaliencyMap sal = gaussian_bump(32, 32, 10.0, 20.0, 3.0);
  const CamGradients a = cyborg_gradients(m, image, 1, sal, {0.0});
  CamGradients b = zeros_like(m);
  accumulate_cross_entropy_gradients(m, image, 1, b);
  for (std::size_t i = 0; i < parameters(a).size(); ++i) EXPECT_EQ(*parameters(a)[i], *parameters(b)[i]);
}

TEST(CyborgGradientTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (double alpha : {0.0, 0.5, 1.0}) {
    CamClassifier m = make_cam_classifier({1, {4, 6}, 2}, 6);
    const Tensor image = random_tensor(rng, {1, 10, 10}, 0.0, 1.0);
    const SaliencyMap sal = gaussian_bump(10, 10, 4.0, 6.0, 2.0);
    const CyborgConfig cfg{alpha};
    const CamGradients g = cyborg_gradients(m, image, 0, sal, cfg);
    const auto r = gradcheck::check(parameters(m), parameters(g), [&] { return total_loss(m, image, 0, sal, cfg); },
                                    20, 60);
    EXPECT_LE(r.max_relative_error, 1e-3) << "alpha " << alpha;
  }
}

TEST(CyborgGradientTest, ConstantCamGivesNoCamPathGradient) {
  CamClassifier m = make_cam_classifier({1, {3}, 2}, 7);
  m.head_weight.fill(0.0);
  std::mt19937_64 rng(7);
  const Tensor image = random_tensor(rng, {1, 6, 6}, 0.0, 1.0);
  const SaliencyMap sal = gaussian_bump(6, 6, 2.0, 2.0, 1.5);
  // With zero head weights the logits do not depend on the conv stack, and the
  // constant raw CAM blocks the saliency path, so only the head bias moves.
  const CamGradients g = cyborg_gradients(m, image, 1, sal, {1.0});
  for (const Tensor* t : parameters(g))
    for (double v : t->values()) EXPECT_EQ(v, 0.0);
}

TEST(CyborgGradientTest, MissingTargetFallsBackToCrossEntropy) {
  std::mt19937_64 rng(8);
  const CamClassifier m = make_cam_classifier({1, {4}, 2}, 8);
  const Tensor image = random_tensor(rng, {1, 6, 6}, 0.0, 1.0);
  CamGradients a = zeros_like(m), b = zeros_like(m);
  const auto la = accumulate_cyborg_gradients(m, image, 0, nullptr, {0.5}, a);
  const auto lb = accumulate_cross_entropy_gradients(m, image, 0, b);
  EXPECT_EQ(la.total, lb.total);
  for (std::size_t i = 0; i < parameters(a).size(); ++i) EXPECT_EQ(*parameters(a)[i], *parameters(b)[i]);
}

TEST(SaliencyTargetTest, ResizedAndNormalized) {
  const SaliencyMap sal = gaussian_bump(16, 16, 8.0, 8.0, 3.0);
  const UnitMap t = saliency_target(sal, 8, 8);
  EXPECT_EQ(t.width(), 8u);
  double lo = 1.0, hi = 0.0;
  for (double v : t.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
}
