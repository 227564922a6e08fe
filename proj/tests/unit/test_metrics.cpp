#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "radfuse/metrics.hpp"
#include "radfuse/rng.hpp"
#include "test_support.hpp"

using namespace radfuse;

TEST(Metrics, PerfectPrediction) {
  DepthImage gt(4, 4);
  for (std::size_t i = 0; i < gt.size(); ++i) gt.set(i, 1.0 + static_cast<double>(i));
  const MetricsReport m = compute_metrics(gt, gt, 80.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.imae, 0.0);
  EXPECT_EQ(m.delta1, 1.0);
  EXPECT_EQ(m.n_pixels, 16u);
  EXPECT_EQ(m.coverage, 1.0);
}

TEST(Metrics, UnitsOnSinglePixel) {
  DepthImage gt(1, 1), pred(1, 1);
  gt.set(0, 0, 10.0);
  pred.set(0, 0, 12.5);
  const MetricsReport m = compute_metrics(pred, gt, 80.0);
  EXPECT_DOUBLE_EQ(m.mae, 2500.0);
  EXPECT_DOUBLE_EQ(m.rmse, 2500.0);
  EXPECT_NEAR(m.imae, (0.1 - 0.08) * 1000.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.absrel, 0.25);
  EXPECT_DOUBLE_EQ(m.sqrel, 625.0);
  EXPECT_EQ(m.delta1, 0.0);  // ratio exactly 1.25 is not an inlier
}

TEST(Metrics, RangeCapShrinksEvaluationSet) {
  Rng rng(1);
  DepthImage gt(30, 20), pred(30, 20);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt.set(i, rng.uniform(1, 90));
    pred.set(i, gt.at(i) * rng.uniform(0.8, 1.3));
  }
  std::size_t prev = 0;
  for (double cap : {20.0, 50.0, 60.0, 70.0, 90.0}) {
    const auto m = compute_metrics(pred, gt, cap);
    EXPECT_GE(m.n_pixels, prev);
    prev = m.n_pixels;
  }
  EXPECT_EQ(prev, gt.size());
}

TEST(Metrics, MissingPredictionModes) {
  DepthImage gt(2, 1), pred(2, 1);
  gt.set(0, 0, 10.0);
  gt.set(1, 0, 20.0);
  pred.set(0, 0, 10.0);
  const auto ex = compute_metrics(pred, gt, 80.0, MissingPrediction::kExclude);
  EXPECT_EQ(ex.n_pixels, 1u);
  EXPECT_DOUBLE_EQ(ex.coverage, 0.5);
  EXPECT_EQ(ex.mae, 0.0);
  const auto pen = compute_metrics(pred, gt, 80.0, MissingPrediction::kPenalize);
  EXPECT_EQ(pen.n_pixels, 2u);
  EXPECT_DOUBLE_EQ(pen.coverage, 1.0);
  EXPECT_DOUBLE_EQ(pen.mae, 10000.0);
  EXPECT_DOUBLE_EQ(pen.absrel, 0.5);
  EXPECT_DOUBLE_EQ(pen.delta1, 0.5);
}

TEST(Metrics, EmptyIsUndefined) {
  DepthImage gt(2, 2), pred = DepthImage::filled(2, 2, 3.0);
  EXPECT_RADFUSE_ERROR(compute_metrics(pred, gt, 80.0), kUndefined);
  gt.set(0, 0, 90.0);
  EXPECT_RADFUSE_ERROR(compute_metrics(pred, gt, 80.0), kUndefined);
  EXPECT_RADFUSE_ERROR(compute_metrics(pred, DepthImage(3, 2), 80.0), kInput);
  EXPECT_RADFUSE_ERROR(compute_metrics(pred, pred, 0.0), kParameter);
}

TEST(Metrics, CsvColumns) {
  EXPECT_EQ(metrics_csv_header(), "range,iMAE,iRMSE,MAE,RMSE,AbsRel,SqRel,delta1,n_pixels,coverage");
  MetricsReport m;
  m.imae = 1;
  m.irmse = 2;
  m.mae = 3;
  m.rmse = 4;
  m.absrel = 0.5;
  m.sqrel = 6;
  m.delta1 = 0.75;
  m.n_pixels = 9;
  m.coverage = 1;
  EXPECT_EQ(metrics_csv_row("50", m), "50,1.000,2.000,3.000,4.000,0.500,6.000,0.750,9,1.0000");
}
