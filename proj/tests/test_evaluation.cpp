#include <doctest.h>

#include <algorithm>

#include "metrics_oracle.hpp"
#include "osids/error.hpp"
#include "osids/evaluation.hpp"
#include "osids/rng.hpp"

using namespace osids;
using testutil::brute_force_metrics;

namespace {

const std::vector<std::string> kKnown{"BENIGN", "DOS", "SCAN"};

ConfusionMatrix build(const std::vector<std::pair<std::string, std::string>>& pairs,
                      const std::vector<std::string>& known = kKnown) {
    std::vector<std::string> pred, truth;
    for (const auto& [p, t] : pairs) {
        pred.push_back(p);
        truth.push_back(t);
    }
    return confusion(pred, truth, known);
}

} // namespace

TEST_CASE("confusion matrix layout, collapsing and normalization") {
    const auto m = build({
        {"BENIGN", "BENIGN"},
        {kUnknownLabel, "BENIGN"},
        {"DOS", "DOS"},
        {"SCAN", "NOVEL_THING"}, // truth outside the known set collapses
    });
    REQUIRE(m.labels == std::vector<std::string>{"BENIGN", "DOS", "SCAN", kUnknownLabel});
    CHECK(m.total() == 4);
    // column 0 is truth BENIGN: one predicted benign, one predicted unknown
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(3, 0) == 1);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(2, 3) == 1); // the collapsed truth

    const auto norm = m.normalized();
    for (int t = 0; t < m.size(); ++t) {
        double col = 0.0;
        for (int p = 0; p < m.size(); ++p) col += norm[static_cast<std::size_t>(p) * m.size() + t];
        if (m.col_sum(t) > 0)
            CHECK(col == doctest::Approx(1.0));
        else
            CHECK(col == 0.0);
    }

    CHECK_THROWS_AS(build({{"NOT_A_CLASS", "BENIGN"}}), Error); // bad prediction
}

TEST_CASE("all-correct predictions give a diagonal matrix and perfect metrics") {
    const auto m = build({
        {"BENIGN", "BENIGN"},
        {"DOS", "DOS"},
        {"SCAN", "SCAN"},
        {kUnknownLabel, "NOVEL"},
    });
    for (int p = 0; p < m.size(); ++p)
        for (int t = 0; t < m.size(); ++t)
            CHECK(m.at(p, t) == (p == t ? 1 : 0));

    const BinaryMetrics b = binary_metrics(m);
    CHECK(*b.acc == 1.0);
    CHECK(*b.f1 == 1.0);
    CHECK(*b.fpr == 0.0);
    const MultiMetrics mm = multi_metrics(m);
    CHECK(*mm.r_unk == 1.0);
    CHECK(*mm.p_wht == 1.0);
    CHECK(*mm.r_wht == 1.0);
    CHECK(*mm.f1_wht == 1.0);
}

TEST_CASE("hand-computed binary metrics: 10 benign with 1 false positive, 10 attacks caught") {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int i = 0; i < 9; ++i) pairs.push_back({"BENIGN", "BENIGN"});
    pairs.push_back({"DOS", "BENIGN"}); // the false positive
    for (int i = 0; i < 10; ++i) pairs.push_back({"DOS", "DOS"});
    const BinaryMetrics b = binary_metrics(build(pairs));
    CHECK(*b.fpr == doctest::Approx(0.1));
    CHECK(*b.acc == doctest::Approx(19.0 / 20.0));
    CHECK(*b.f1 == doctest::Approx(20.0 / 21.0)); // precision 10/11, recall 1
}

TEST_CASE("empty denominators surface as undefined, never as zero") {
    SUBCASE("no benign flows: FPR undefined") {
        const BinaryMetrics b = binary_metrics(build({{"DOS", "DOS"}, {"SCAN", "SCAN"}}));
        CHECK_FALSE(b.fpr.has_value());
        CHECK(*b.acc == 1.0);
    }
    SUBCASE("no unknown truth: R_unk undefined") {
        const MultiMetrics mm = multi_metrics(build({{"DOS", "DOS"}}));
        CHECK_FALSE(mm.r_unk.has_value());
    }
    SUBCASE("no attacks predicted or present: F1 undefined") {
        const BinaryMetrics b = binary_metrics(build({{"BENIGN", "BENIGN"}}));
        CHECK_FALSE(b.f1.has_value());
        CHECK(*b.acc == 1.0);
    }
}

TEST_CASE("weighted precision follows the support-weighted average") {
    // supports (3, 1) with per-class precision (1.0, 0.5)
    const std::vector<std::string> known{"A", "B"};
    const auto m = build(
        {
            {"A", "A"},
            {"A", "A"},
            {"B", "A"}, // B's one mistake
            {"B", "B"},
        },
        known);
    const MultiMetrics mm = multi_metrics(m);
    CHECK(*mm.p_wht == doctest::Approx(0.875)); // (3*1.0 + 1*0.5)/4
    const double r = (3.0 * (2.0 / 3.0) + 1.0 * 1.0) / 4.0;
    CHECK(*mm.r_wht == doctest::Approx(r));
    CHECK(*mm.f1_wht ==
          doctest::Approx(2.0 * 0.875 * r / (0.875 + r)));

    SUBCASE("single populated class reduces to that class's precision") {
        const auto single = build({{"A", "A"}, {"A", "A"}, {"B", "A"}}, known);
        CHECK(*multi_metrics(single).p_wht == doctest::Approx(2.0 / 3.0 * 1.0));
    }
}

TEST_CASE("verdict order never changes a metric") {
    Rng rng(5);
    std::vector<std::pair<std::string, std::string>> pairs;
    const std::vector<std::string> space{"BENIGN", "DOS", "SCAN", kUnknownLabel, "NOVEL"};
    for (int i = 0; i < 200; ++i) {
        std::string pred = space[static_cast<std::size_t>(rng.uniform_int(0, 3))];
        std::string truth = space[static_cast<std::size_t>(rng.uniform_int(0, 4))];
        pairs.push_back({pred, truth});
    }
    const auto base_b = binary_metrics(build(pairs));
    const auto base_m = multi_metrics(build(pairs));
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(pairs);
        const auto b = binary_metrics(build(pairs));
        const auto mm = multi_metrics(build(pairs));
        CHECK(b.acc == base_b.acc);
        CHECK(b.f1 == base_b.f1);
        CHECK(b.fpr == base_b.fpr);
        CHECK(mm.r_unk == base_m.r_unk);
        CHECK(mm.p_wht == base_m.p_wht);
        CHECK(mm.r_wht == base_m.r_wht);
        CHECK(mm.f1_wht == base_m.f1_wht);
    }
}

TEST_CASE("metrics agree exactly with the brute-force counter on random data") {
    Rng rng(17);
    const std::vector<std::string> space{"BENIGN", "DOS",   "SCAN",
                                         kUnknownLabel, "NOVEL", "OTHER_NOVEL"};
    for (int set = 0; set < 50; ++set) {
        std::vector<std::pair<std::string, std::string>> pairs;
        const int n = rng.uniform_int(1, 300);
        for (int i = 0; i < n; ++i) {
            // predictions come only from the known set + UNKNOWN
            std::string pred = space[static_cast<std::size_t>(rng.uniform_int(0, 3))];
            std::string truth = space[static_cast<std::size_t>(rng.uniform_int(0, 5))];
            pairs.push_back({pred, truth});
        }
        const auto m = build(pairs);
        const BinaryMetrics b = binary_metrics(m);
        const MultiMetrics mm = multi_metrics(m);
        const auto oracle = brute_force_metrics(pairs, kKnown);
        CHECK(b.acc == oracle.acc);
        CHECK(b.f1 == oracle.f1);
        CHECK(b.fpr == oracle.fpr);
        CHECK(mm.r_unk == oracle.r_unk);
        CHECK(mm.p_wht == oracle.p_wht);
        CHECK(mm.r_wht == oracle.r_wht);
        CHECK(mm.f1_wht == oracle.f1_wht);

        // range sanity whenever defined
        for (const auto& v : {b.acc, b.f1, b.fpr, mm.r_unk, mm.p_wht, mm.r_wht, mm.f1_wht}) {
            if (v) {
                CHECK(*v >= 0.0);
                CHECK(*v <= 1.0);
            }
        }
    }
}
