#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "paratts/diffops.hpp"
#include "paratts/errors.hpp"
#include "paratts/losses.hpp"
#include "paratts/rng.hpp"

using namespace paratts;
using ag::Mat;

namespace {

LatentStats make_stats(const Mat& mean, const Mat& std) {
  return {mean, std, hier::LevelId::L1_Frame, StatsSource::posterior};
}

}  // namespace

TEST_CASE("gaussian kl closed form") {
  Mat z = Mat::Zero(3, 4), o = Mat::Ones(3, 4);
  CHECK(losses::gaussian_kl(make_stats(z, o), make_stats(z, o)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // N(1,1) vs N(0,1): 0.5 mu^2
  CHECK(losses::gaussian_kl(make_stats(o, o), make_stats(z, o)) ==
        doctest::Approx(0.5));
  // N(0,4) vs N(0,1): (4 - 1 - ln 4)/2
  CHECK(losses::gaussian_kl(make_stats(z, 2.0 * o), make_stats(z, o)) ==
        doctest::Approx(0.5 * (4.0 - 1.0 - std::log(4.0))));
}

TEST_CASE("gaussian kl vs monte carlo on random pairs") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    double uq = rng.normal(), up = rng.normal();
    double sq = 0.3 + std::abs(rng.normal()), sp = 0.3 + std::abs(rng.normal());
    Mat mq(1, 1), mp(1, 1), vq(1, 1), vp(1, 1);
    mq << uq;
    mp << up;
    vq << sq;
    vp << sp;
    double closed = losses::gaussian_kl(make_stats(mq, vq), make_stats(mp, vp));
    double mc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      double x = uq + sq * rng.normal();
      double lq = -0.5 * std::pow((x - uq) / sq, 2) - std::log(sq);
      double lp = -0.5 * std::pow((x - up) / sp, 2) - std::log(sp);
      mc += (lq - lp) / n;
    }
    CHECK(std::abs(closed - mc) < 0.015 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("gaussian kl is non-negative and errors on bad input") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Mat mq = Mat::NullaryExpr(2, 3, [&] { return rng.normal(); });
    Mat mp = Mat::NullaryExpr(2, 3, [&] { return rng.normal(); });
    Mat sq = Mat::NullaryExpr(2, 3, [&] { return 0.1 + std::abs(rng.normal()); });
    Mat sp = Mat::NullaryExpr(2, 3, [&] { return 0.1 + std::abs(rng.normal()); });
    CHECK(losses::gaussian_kl(make_stats(mq, sq), make_stats(mp, sp)) >= 0.0);
  }
  CHECK_THROWS_AS(
      losses::gaussian_kl(make_stats(Mat::Zero(2, 2), Mat::Ones(2, 2)),
                          make_stats(Mat::Zero(3, 2), Mat::Ones(3, 2))),
      ShapeError);
  CHECK_THROWS_AS(
      losses::gaussian_kl(make_stats(Mat::Zero(2, 2), Mat::Zero(2, 2)),
                          make_stats(Mat::Zero(2, 2), Mat::Ones(2, 2))),
      DomainError);
}

TEST_CASE("level combination weights") {
  losses::KlWeights w;
  CHECK(w.alpha[0] == 1.0);
  CHECK(w.alpha[1] == 0.25);
  CHECK(w.alpha[2] == 0.07);
  CHECK(w.alpha[3] == 0.01);
  CHECK(w.alpha[4] == 0.005);
  for (int i = 1; i < 5; ++i) CHECK(w.alpha[i] < w.alpha[i - 1]);

  CHECK(losses::combine_kl({1, 1, 1, 1, 1}, w) == doctest::Approx(1.335));
  CHECK(losses::combine_kl({1, 0, 0, 0, 0}, w) == 1.0);
  // linearity
  CHECK(losses::combine_kl({2, 4, 6, 8, 10}, w) ==
        doctest::Approx(2 * losses::combine_kl({1, 2, 3, 4, 5}, w)));
  CHECK_THROWS_AS(losses::combine_kl({-1, 0, 0, 0, 0}, w), DomainError);
}

TEST_CASE("least-squares adversarial pair") {
  std::vector<Mat> real{Mat::Ones(4, 1)}, fake{Mat::Zero(4, 1)};
  auto [lg, ld] = losses::adversarial_losses(real, fake);
  CHECK(lg == doctest::Approx(1.0));
  CHECK(ld == doctest::Approx(0.0));

  // r == f minimized at 1/2 with value 1/2
  std::vector<Mat> half{Mat::Constant(4, 1, 0.5)};
  CHECK(losses::adversarial_losses(half, half).second == doctest::Approx(0.5));

  Rng rng(1);
  std::vector<Mat> r2{Mat::NullaryExpr(5, 1, [&] { return rng.normal(); })};
  std::vector<Mat> f2{Mat::NullaryExpr(5, 1, [&] { return rng.normal(); })};
  CHECK(losses::adversarial_losses(r2, f2).first >= 0.0);
  std::vector<Mat> mismatched{Mat::Zero(2, 1), Mat::Zero(2, 1)};
  CHECK_THROWS_AS(losses::adversarial_losses(r2, mismatched), ShapeError);
}

TEST_CASE("mel and duration losses") {
  dsp::SpectrogramConfig cfg = dsp::SpectrogramConfig::preset("micro");
  Rng rng(11);
  std::vector<double> wave(400);
  for (auto& s : wave) s = 0.2 * rng.normal();
  CHECK(losses::mel_l1(wave, wave, cfg) == 0.0);

  // doubling amplitude shifts log-mel by ln 2 wherever above the floor
  std::vector<double> loud(wave.size());
  std::vector<double> strong(wave.size());
  for (size_t i = 0; i < wave.size(); ++i) {
    strong[i] = std::sin(0.4 * i) * 0.5;  // well above the mel floor
    loud[i] = 2.0 * strong[i];
  }
  double lm = losses::mel_l1(strong, loud, cfg);
  CHECK(lm > 0.0);
  CHECK(lm <= std::log(2.0) + 1e-9);

  CHECK(losses::duration_l2({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(losses::duration_l2({1.5, 2.5, 3.5}, {1.0, 2.0, 3.0}) ==
        doctest::Approx(0.25));
  CHECK_THROWS_AS(losses::duration_l2({1.0}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("stage formulas are exact") {
  losses::TotalLossParts p;
  p.l_s2 = 1.0;
  p.l_d = 1.0;
  p.l_kl = 1.0;
  CHECK(losses::total_loss(1, p, 1e-5) == doctest::Approx(7.50001).epsilon(1e-12));
  CHECK(losses::total_loss(2, p, 0.5) == doctest::Approx(2.5 + 5.0 + 0.5));

  losses::TotalLossParts q;
  q.l_g = 1.0;
  q.l_s1 = 1.0;
  q.l_m = 1.0;
  q.l_kl = 1.0;
  q.l_d = 1.0;
  CHECK(losses::total_loss(3, q, 1.0) == doctest::Approx(7.0).epsilon(1e-12));
  q.l_g.reset();
  CHECK_THROWS_AS(losses::total_loss(3, q, 1.0), ContractError);
  CHECK_THROWS_AS(losses::total_loss(4, p, 1.0), DomainError);

  CHECK(losses::kStage12CoeffS2 == 2.5);
  CHECK(losses::kStage12CoeffD == 5.0);
  CHECK(losses::kStage3CoeffG == 1.0);
  CHECK(losses::kStage3CoeffS1 == 1.5);
  CHECK(losses::kStage3CoeffM == 2.5);
  CHECK(losses::kStage3CoeffD == 1.0);
}

TEST_CASE("loss record round-trips through its line format") {
  losses::LossBreakdown b;
  b.step = 42;
  b.stage = 3;
  b.lambda_kl = 0.25;
  b.l_kl_per_level = {0.1, 0.2, 0.3, 0.4, 0.5};
  b.l_kl = 0.19;
  b.l_g = 1.5;
  b.l_disc = 0.75;
  b.l_s1 = 2.0;
  b.l_m = 0.5;
  b.l_d = 0.25;
  b.l_tot = 9.0;
  losses::LossBreakdown r = losses::LossBreakdown::from_json_line(b.to_json_line());
  CHECK(r.step == b.step);
  CHECK(r.stage == b.stage);
  CHECK(r.lambda_kl == b.lambda_kl);
  CHECK(r.l_kl_per_level == b.l_kl_per_level);
  CHECK(r.l_g == b.l_g);
  CHECK(!r.l_s2.has_value());
  CHECK(r.l_tot == b.l_tot);
  CHECK(r.to_json_line() == b.to_json_line());
}

TEST_CASE("graph-side losses agree with the plain implementations") {
  Rng rng(5);
  Mat mq = Mat::NullaryExpr(3, 4, [&] { return rng.normal(); });
  Mat mp = Mat::NullaryExpr(3, 4, [&] { return rng.normal(); });
  Mat sq = Mat::NullaryExpr(3, 4, [&] { return 0.2 + std::abs(rng.normal()); });
  Mat sp = Mat::NullaryExpr(3, 4, [&] { return 0.2 + std::abs(rng.normal()); });

  ag::Tape t;
  LatentStatsVar q{t.constant(mq), t.constant(sq), hier::LevelId::L1_Frame,
                   StatsSource::posterior};
  LatentStatsVar pr{t.constant(mp), t.constant(sp), hier::LevelId::L1_Frame,
                    StatsSource::prior};
  double graph_kl = t.val(diffops::gaussian_kl(q, pr))(0, 0);
  double plain_kl = losses::gaussian_kl(make_stats(mq, sq), make_stats(mp, sp));
  CHECK(graph_kl == doctest::Approx(plain_kl).epsilon(1e-12));

  // multi-resolution stft loss: graph vs plain on the same waves
  dsp::SpectrogramConfig cfg = dsp::SpectrogramConfig::preset("micro");
  std::vector<dsp::StftResolution> res{{64, 20, 40}, {32, 10, 20}};
  std::vector<double> x(300), y(300);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.5 * std::sin(0.21 * i);
    y[i] = 0.4 * std::sin(0.21 * i + 0.3);
  }
  Mat xm(300, 1), ym(300, 1);
  for (int i = 0; i < 300; ++i) {
    xm(i, 0) = x[i];
    ym(i, 0) = y[i];
  }
  double graph_s1 =
      t.val(diffops::multi_res_stft_loss(t.constant(xm), t.constant(ym), res))(
          0, 0);
  double plain_s1 = dsp::multi_res_stft_loss(x, y, res);
  CHECK(graph_s1 == doctest::Approx(plain_s1).epsilon(1e-6));

  double graph_lm =
      t.val(diffops::mel_l1(t.constant(ym), t.constant(xm), cfg))(0, 0);
  double plain_lm = losses::mel_l1(y, x, cfg);
  CHECK(graph_lm == doctest::Approx(plain_lm).epsilon(1e-6));
}
