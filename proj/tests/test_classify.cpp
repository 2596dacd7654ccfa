#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tamperkit/classify.hpp"

using namespace tamperkit;

namespace {

FeatureTable one_metric(std::vector<double> values) {
    FeatureTable t;
    t.metrics = {"mae"};
    t.columns = {std::move(values)};
    return t;
}

Keypoints8 square_keypoints(double cx, double cy, double half) {
    Keypoints8 k;
    for (int i = 0; i < 8; ++i) {
        const double a = i * 0.785398;
        k.points[i] = {cx + half * std::cos(a), cy + half * std::sin(a)};
    }
    return k;
}

Keypoints8 displaced(Keypoints8 k, double d) {
    for (auto& p : k.points) p.x += d;
    return k;
}

}  // namespace

TEST(Stump, SeparableMidpoint) {
    const auto t = one_metric({0.1, 0.2, 0.8, 0.9});
    const bool labels[] = {false, false, true, true};
    const Stump s = train_stump(t, labels);
    EXPECT_DOUBLE_EQ(s.threshold, 0.5);
    EXPECT_EQ(s.polarity, Polarity::GreaterIsTampered);
    EXPECT_EQ(s.train_accuracy, 1.0);
}

TEST(Stump, ConstantFeatureGivesMajority) {
    const auto t = one_metric({0.3, 0.3, 0.3, 0.3, 0.3});
    const bool labels[] = {true, false, true, true, false};
    const Stump s = train_stump(t, labels);
    EXPECT_DOUBLE_EQ(s.train_accuracy, 0.6);
    EXPECT_TRUE(std::isinf(s.threshold));
}

TEST(Stump, SingleClassIsDegenerate) {
    const auto t = one_metric({0.1, 0.2});
    const bool labels[] = {true, true};
    try {
        train_stump(t, labels);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateTraining);
    }
    const bool one[] = {true};
    EXPECT_THROW(train_stump(one_metric({0.1}), one), Error);
}

TEST(Stump, MatchesExhaustiveGrid) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        FeatureTable t;
        t.metrics = {"mae", "ssim", "msssim", "cwssim", "hog"};
        std::vector<bool> labels(50);
        bool l[50];
        for (int i = 0; i < 50; ++i) l[i] = labels[i] = u(rng) < 0.5;
        if (std::count(labels.begin(), labels.end(), true) % 50 == 0) l[0] = labels[0] = !labels[0];
        for (int m = 0; m < 5; ++m) {
            std::vector<double> col(50);
            // Quantized values exercise ties; a label-correlated shift makes splits informative.
            for (int i = 0; i < 50; ++i) col[i] = std::round((u(rng) + (labels[i] ? 0.2 * m : 0.0)) * 20) / 20;
            t.columns.push_back(col);
        }
        const Stump s = train_stump(t, std::span<const bool>(l, 50));
        EXPECT_EQ(static_cast<std::size_t>(std::lround(s.train_accuracy * 50)), oracle::grid_best_correct(t, labels));
        // Self-consistency of predict on the training set.
        const auto m = std::find(t.metrics.begin(), t.metrics.end(), s.metric) - t.metrics.begin();
        std::size_t correct = 0;
        for (int i = 0; i < 50; ++i) correct += predict_value(s, t.columns[m][i]) == labels[i];
        EXPECT_EQ(correct, static_cast<std::size_t>(std::lround(s.train_accuracy * 50)));
        const double majority = std::max<double>(std::count(labels.begin(), labels.end(), true), 50 - std::count(labels.begin(), labels.end(), true)) / 50;
        EXPECT_GE(s.train_accuracy, majority);
    }
}

TEST(Stump, TieBreakPrefersLowerMetricThenThreshold) {
    FeatureTable t;
    t.metrics = {"mae", "ssim"};
    t.columns = {{0.1, 0.2, 0.8, 0.9}, {0.1, 0.2, 0.8, 0.9}};
    const bool labels[] = {false, false, true, true};
    EXPECT_EQ(train_stump(t, labels).metric, "mae");
    // 3/4 correct at 0.15 and 0.35 under less-is-tampered: the lower threshold wins.
    const auto u = one_metric({0.1, 0.2, 0.3, 0.4});
    const bool l2[] = {true, false, true, false};
    const Stump s = train_stump(u, l2);
    EXPECT_NEAR(s.threshold, 0.15, 1e-12);
    EXPECT_EQ(s.polarity, Polarity::LessIsTampered);
    EXPECT_DOUBLE_EQ(s.train_accuracy, 0.75);
}

TEST(Stump, MonotoneTransformInvariance) {
    // Re-deriving the threshold after an increasing transform reproduces every
    // decision except for points strictly inside the gap the threshold splits,
    // where the transformed midpoint may land on either side.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto f = [](double v) { return std::exp(3 * v) + v * v * v; };
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> train(40), test(40);
        bool labels[40];
        for (int i = 0; i < 40; ++i) {
            labels[i] = u(rng) < 0.5;
            train[i] = u(rng) + (labels[i] ? 0.4 : 0.0);
            test[i] = u(rng) + 0.2;
        }
        labels[0] = true;
        labels[1] = false;
        std::vector<double> train_t(40);
        for (int i = 0; i < 40; ++i) train_t[i] = f(train[i]);
        const Stump a = train_stump(one_metric(train), labels);
        const Stump b = train_stump(one_metric(train_t), labels);
        EXPECT_EQ(a.polarity, b.polarity);
        EXPECT_EQ(a.train_accuracy, b.train_accuracy);
        for (int i = 0; i < 40; ++i) EXPECT_EQ(predict_value(a, train[i]), predict_value(b, train_t[i]));
        double below = -1e300, above = 1e300;
        for (double v : train) {
            if (v < a.threshold) below = std::max(below, v);
            if (v > a.threshold) above = std::min(above, v);
        }
        for (double v : test) {
            if (v > below && v < above) continue;
            EXPECT_EQ(predict_value(a, v), predict_value(b, f(v)));
        }
    }
}

TEST(Predict, BoundaryAndMissingMetric) {
    Stump s{"ssim", 0.25, Polarity::GreaterIsTampered, "none", 1.0};
    EXPECT_FALSE(predict_value(s, 0.25));
    EXPECT_TRUE(predict_value(s, 0.25 + 1e-12));
    s.polarity = Polarity::LessIsTampered;
    EXPECT_FALSE(predict_value(s, 0.25));
    EXPECT_TRUE(predict_value(s, 0.2));
    SimilarityVector v{"p", "none", {make_score(Metric::MAE, 0.1)}};
    EXPECT_THROW(predict(s, v), Error);
    v.scores.push_back(make_score(Metric::SSIM, 0.9));  // dissimilarity 0.1
    EXPECT_TRUE(predict(s, v));
}

TEST(Aggregate, AnySide) {
    const bool none[] = {false, false, false};
    const bool one[] = {false, true, false};
    EXPECT_FALSE(aggregate_parcel(none));
    EXPECT_TRUE(aggregate_parcel(one));
    EXPECT_THROW(aggregate_parcel(std::span<const bool>{}), Error);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        std::vector<char> v(1 + rng() % 6);
        bool fold = false;
        for (auto& b : v) fold |= (b = rng() % 4 == 0);
        std::unique_ptr<bool[]> arr(new bool[v.size()]);
        for (std::size_t i = 0; i < v.size(); ++i) arr[i] = v[i];
        EXPECT_EQ(aggregate_parcel(std::span<const bool>(arr.get(), v.size())), fold);
    }
}

TEST(Evaluate, PerfectPredictions) {
    const bool labels[] = {true, false, true, false};
    const double scores[] = {0.9, 0.1, 0.8, 0.2};
    const auto r = evaluate_binary(labels, labels, scores);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.roc_auc, 1.0);
    EXPECT_EQ(r.counts.total(), 4u);
}

TEST(Evaluate, ConfusionFormulas) {
    const bool pred[] = {true, true, false, false, true};
    const bool labels[] = {true, false, true, false, true};
    const double scores[] = {1, 2, 3, 4, 5};
    const auto r = evaluate_binary(pred, labels, scores);
    EXPECT_EQ(r.counts.tp, 2u);
    EXPECT_EQ(r.counts.fp, 1u);
    EXPECT_EQ(r.counts.fn, 1u);
    EXPECT_EQ(r.counts.tn, 1u);
    EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
    const bool short_labels[] = {true};
    EXPECT_THROW(evaluate_binary(pred, short_labels, scores), Error);
}

TEST(Evaluate, AucMatchesPairwiseOracle) {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + rng() % 80;
        std::vector<double> s(n);
        std::vector<bool> lv(n);
        std::unique_ptr<bool[]> l(new bool[n]);
        for (int i = 0; i < n; ++i) {
            s[i] = std::round(u(rng) * 10) / 10;  // force ties
            l[i] = lv[i] = u(rng) < 0.4;
        }
        EXPECT_NEAR(roc_auc(s, std::span<const bool>(l.get(), n)), oracle::auc_pairs(s, lv), 1e-9);
    }
}

TEST(Evaluate, AucNullDistributionAndMonotoneInvariance) {
    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(1000), st(1000);
    std::unique_ptr<bool[]> l(new bool[1000]);
    for (int i = 0; i < 1000; ++i) {
        s[i] = u(rng);
        st[i] = std::log(s[i] + 0.01) * 5 + 2;
        l[i] = i % 2 == 0;
    }
    const double auc = roc_auc(s, std::span<const bool>(l.get(), 1000));
    EXPECT_NEAR(auc, 0.5, 0.05);
    EXPECT_NEAR(roc_auc(st, std::span<const bool>(l.get(), 1000)), auc, 1e-12);
}

TEST(Evaluate, PerTypeRecall) {
    const bool pred[] = {true, false, true, true, false};
    const bool labels[] = {true, true, true, false, false};
    const std::string types[] = {"label", "label", "tape", "", ""};
    const std::string diffs[] = {"easy", "easy", "hard", "", ""};
    const auto rows = per_type_recall(pred, labels, types, diffs);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].type, "label");
    EXPECT_DOUBLE_EQ(rows[0].recall, 0.5);
    EXPECT_EQ(rows[1].samples, 1u);
}

TEST(Oks, Examples) {
    const Keypoints8 gt = square_keypoints(100, 100, 30);
    EXPECT_DOUBLE_EQ(oks(gt, gt, 900.0), 1.0);
    OksParams single;
    single.kappa.fill(0.05);
    const double area = 2500.0;  // s = 50, s*kappa = 2.5
    EXPECT_NEAR(oks(displaced(gt, 2.5), gt, area, single), std::exp(-0.5), 1e-12);
    EXPECT_NEAR(std::exp(-0.5), 0.6065, 1e-4);
    EXPECT_THROW(oks(gt, gt, 0.0), Error);
    Keypoints8 none = gt;
    none.flags.fill(kUnlabeled);
    EXPECT_THROW(oks(gt, none, 100.0), Error);
}

TEST(Oks, DefaultKappas) {
    const OksParams p;
    for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(p.kappa[i], i == 5 ? 0.1 : 0.05);
    // Stricter than the human-pose constants for hips and wrists.
    EXPECT_LT(p.kappa[5], 0.107);
    EXPECT_LT(p.kappa[0], 0.062);
}

TEST(Oks, TranslationAndScaleInvariance) {
    const Keypoints8 gt = square_keypoints(50, 60, 20);
    Keypoints8 pred = gt;
    for (int i = 0; i < 8; ++i) pred.points[i] = pred.points[i] + Point2{0.3 * i, -0.2 * i};
    const double base = oks(pred, gt, 1600.0);
    Keypoints8 gt_t = gt, pred_t = pred, gt_s = gt, pred_s = pred;
    for (int i = 0; i < 8; ++i) {
        gt_t.points[i] = gt.points[i] + Point2{17, -4};
        pred_t.points[i] = pred.points[i] + Point2{17, -4};
        gt_s.points[i] = 3.0 * gt.points[i];
        pred_s.points[i] = 3.0 * pred.points[i];
    }
    EXPECT_NEAR(oks(pred_t, gt_t, 1600.0), base, 1e-12);
    EXPECT_NEAR(oks(pred_s, gt_s, 1600.0 * 9), base, 1e-12);
}

TEST(KeypointAp, PerfectAndEmpty) {
    std::vector<GroundTruthKeypoints> gts;
    std::vector<ScoredKeypoints> dets;
    for (int i = 0; i < 4; ++i) {
        const auto k = square_keypoints(100 + 200 * i, 100, 40);
        gts.push_back({"img" + std::to_string(i % 2), k, 6400});
        dets.push_back({"img" + std::to_string(i % 2), k, 0.5 + 0.1 * i});
    }
    const auto r = keypoint_ap(dets, gts);
    for (double ap : r.ap) EXPECT_DOUBLE_EQ(ap, 100.0);
    EXPECT_DOUBLE_EQ(r.mean, 100.0);
    EXPECT_EQ(keypoint_ap({}, gts).mean, 0.0);
    EXPECT_EQ(keypoint_ap(dets, {}).mean, 0.0);
}

TEST(KeypointAp, HandEnumeratedToyCase) {
    // Three far-apart ground truths A, B, C; with one kappa the OKS of an offset d is
    // exp(-d^2 / (2 s^2 k^2)), so offsets are chosen for OKS_B = 0.775, OKS_C = 0.625.
    OksParams p;
    p.kappa.fill(0.05);
    const double area = 1600.0;  // s*kappa = 2
    auto offset_for = [&](double o) { return 2.0 * std::sqrt(-2.0 * std::log(o)); };
    const auto a = square_keypoints(100, 100, 30);
    const auto b = square_keypoints(400, 100, 30);
    const auto c = square_keypoints(700, 100, 30);
    const std::vector<GroundTruthKeypoints> gts = {{"x", a, area}, {"x", b, area}, {"x", c, area}};
    const std::vector<ScoredKeypoints> dets = {
        {"x", a, 0.9},                            // TP on A
        {"x", displaced(b, offset_for(0.775)), 0.8},  // TP on B while threshold <= 0.775
        {"x", a, 0.7},                            // duplicate of A: always FP
        {"x", displaced(c, offset_for(0.625)), 0.6},  // TP on C while threshold <= 0.625
    };
    // Enumerated by hand from the greedy matching:
    //   t in {.50,.55,.60}: TP,TP,FP,TP -> P/R (1,1/3)(1,2/3)(2/3,2/3)(3/4,1) -> AP = 1/3+1/3+1/3*3/4
    //   t in {.65,.70,.75}: TP,TP,FP,FP -> AP = 2/3
    //   t in {.80..95}:      TP,FP,FP,FP -> AP = 1/3
    const double lo = 100.0 * (1.0 / 3 + 1.0 / 3 + 0.25), mid = 200.0 / 3, hi = 100.0 / 3;
    const std::array<double, 10> expect = {lo, lo, lo, mid, mid, mid, hi, hi, hi, hi};
    const auto r = keypoint_ap(dets, gts, p);
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(r.ap[i], expect[i], 1e-9) << "threshold " << kOksThresholds[i];
    EXPECT_NEAR(r.mean, (3 * lo + 3 * mid + 4 * hi) / 10, 1e-9);
}

TEST(Polarity, NamesRoundTrip) {
    for (auto p : {Polarity::GreaterIsTampered, Polarity::LessIsTampered}) EXPECT_EQ(parse_polarity(polarity_name(p)), p);
    EXPECT_THROW(parse_polarity("sideways"), Error);
}
