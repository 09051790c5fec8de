#include <doctest.h>

#include <cmath>

#include "evt/losses.hpp"

using namespace evt;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
    return t;
}

Tensor basis(int d, int axis) {
    Tensor t = Tensor::zeros({d});
    t.mutable_data()[axis] = 1.0;
    return t;
}

Tensor column(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor::from_data({n, 1}, std::move(values));
}

}  // namespace

TEST_CASE("loss_cls hand values") {
    SUBCASE("uniform logits over 4 classes") {
        Tensor logits = Tensor::zeros({3, 4});
        const double loss = loss_cls(logits, {0, 2, 3}).value();
        CHECK(std::abs(loss - std::log(4.0)) <= 1e-12);
    }
    SUBCASE("near-certain prediction") {
        Tensor logits = Tensor::zeros({2, 4});
        logits.mutable_data()[1] = 30.0;   // token 0, class 1
        logits.mutable_data()[4 + 2] = 30.0;  // token 1, class 2
        CHECK(loss_cls(logits, {1, 2}).value() < 1e-9);
    }
    SUBCASE("single token with probability p") {
        const double p = 0.37;
        Tensor logits = Tensor::from_data({1, 2}, {std::log(p), std::log(1.0 - p)});
        CHECK(loss_cls(logits, {0}).value() == doctest::Approx(-std::log(p)).epsilon(1e-12));
    }
    SUBCASE("target out of range") {
        Tensor logits = Tensor::zeros({1, 4});
        CHECK_THROWS_AS(loss_cls(logits, {4}), LabelError);
        CHECK_THROWS_AS(loss_cls(logits, {-1}), LabelError);
    }
}

TEST_CASE("giou_1d hand values") {
    CHECK(giou_1d({0.0, 1.0}, {0.0, 1.0}) == 1.0);
    CHECK(giou_1d({0.0, 1.0}, {2.0, 3.0}) == doctest::Approx(-1.0 / 3).epsilon(1e-12));
    CHECK(giou_1d({0.0, 2.0}, {1.0, 3.0}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK_THROWS_AS(giou_1d({1.0, 1.0}, {0.0, 2.0}), ContractError);
}

TEST_CASE("giou_1d properties") {
    Rng rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const Span a{rng.uniform(-5.0, 5.0), 0.0};
        const Span b{rng.uniform(-5.0, 5.0), 0.0};
        Span aa{a.start_sec, a.start_sec + rng.uniform(0.1, 4.0)};
        Span bb{b.start_sec, b.start_sec + rng.uniform(0.1, 4.0)};

        const double g = giou_1d(aa, bb);
        CHECK(g == giou_1d(bb, aa));
        CHECK(g > -1.0);
        CHECK(g <= 1.0);

        const double inter = overlap_length(aa, bb);
        const double uni = span_length(aa) + span_length(bb) - inter;
        const double tiou = inter / uni;
        CHECK(g <= tiou + 1e-15);

        const double hull = std::max(aa.end_sec, bb.end_sec) - std::min(aa.start_sec, bb.start_sec);
        if (hull == uni) CHECK(g == tiou);
    }
}

TEST_CASE("loss_reg equals the scalar giou route") {
    Rng rng(40);
    for (int trial = 0; trial < 50; ++trial) {
        const int l = 5;
        Tensor offsets = random_tensor({l, 2}, rng, 0.2, 2.5);
        std::vector<double> centers;
        for (int i = 0; i < l; ++i) centers.push_back(3.0 * i + 1.0);
        Tensor center_col = column(std::vector<double>(centers));
        Tensor starts = sub(center_col, slice_cols(offsets, 0, 1));
        Tensor ends = add(center_col, slice_cols(offsets, 1, 1));

        std::vector<RegTarget> matched;
        for (int i = 0; i < l; ++i) {
            if (rng.uniform() < 0.3) continue;
            const double gs = centers[i] + rng.uniform(-1.5, 0.5);
            matched.push_back({i, {gs, gs + rng.uniform(0.4, 2.0)}});
        }
        if (matched.empty()) matched.push_back({0, {0.5, 1.5}});

        double expected = 0.0;
        for (const auto& m : matched)
            expected += 1.0 - giou_1d({starts.at(m.token, 0), ends.at(m.token, 0)}, m.gt);
        expected /= static_cast<double>(matched.size());

        CHECK(loss_reg(starts, ends, matched).value() ==
              doctest::Approx(expected).epsilon(1e-12));
    }

    CHECK(loss_reg(column({1.0}), column({2.0}), {}).value() == 0.0);
}

TEST_CASE("loss_sem hand values") {
    SUBCASE("positive similarity 1, one orthogonal negative, tau 1") {
        const int d = 4;
        Tensor tokens = Tensor::zeros({1, d});
        tokens.mutable_data()[0] = 1.0;  // e1
        const std::vector<Tensor> subs{basis(d, 0), basis(d, 1)};
        const double loss = loss_sem(tokens, subs, {0}, 1.0).value();
        const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
        CHECK(loss == doctest::Approx(expected).epsilon(1e-9));
        CHECK(expected == doctest::Approx(0.3132616875182229).epsilon(1e-12));
    }
    SUBCASE("all similarities equal gives ln K") {
        const int d = 4, k = 3;
        Tensor tokens = Tensor::zeros({2, d});
        tokens.mutable_data()[0] = 1.0;
        tokens.mutable_data()[d] = 1.0;
        // Every candidate orthogonal to every token: similarities all zero.
        const std::vector<Tensor> subs{basis(d, 1), basis(d, 2), basis(d, 3)};
        const double loss = loss_sem(tokens, subs, {0, 2}, 0.7).value();
        CHECK(loss == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-9));
    }
    SUBCASE("invariant to a constant shift of all similarities") {
        Rng rng(3);
        Tensor sims = random_tensor({4, 5}, rng);
        Tensor shifted = Tensor::zeros({4, 5});
        for (std::size_t i = 0; i < sims.size(); ++i)
            shifted.mutable_data()[i] = sims.data()[i] + 3.7;
        const std::vector<int> positives{1, 0, 4, 2};
        CHECK(info_nce_from_sims(sims, positives, 0.3).value() ==
              doctest::Approx(info_nce_from_sims(shifted, positives, 0.3).value())
                  .epsilon(1e-12));
    }
    SUBCASE("temperature must be positive") {
        Tensor tokens = Tensor::zeros({1, 3});
        const std::vector<Tensor> subs{basis(3, 0), basis(3, 1)};
        CHECK_THROWS_AS(loss_sem(tokens, subs, {0}, 0.0), ConfigError);
        CHECK_THROWS_AS(loss_sem(tokens, subs, {0}, -1.0), ConfigError);
    }
}

TEST_CASE("loss_sem is non-negative and decreases as the positive improves") {
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor sims = random_tensor({3, 4}, rng);
        const std::vector<int> positives{0, 1, 2};
        const double base = info_nce_from_sims(sims, positives, 0.5).value();
        CHECK(base >= 0.0);

        Tensor better = Tensor::from_data({3, 4},
                                          {sims.data().begin(), sims.data().end()});
        for (int i = 0; i < 3; ++i)
            better.mutable_data()[i * 4 + positives[i]] += 0.25;
        CHECK(info_nce_from_sims(better, positives, 0.5).value() < base);
    }
}

TEST_CASE("loss_cal hand values") {
    Tensor starts = column({3.0, 10.0});
    Tensor ends = column({5.0, 14.0});

    SUBCASE("predictions equal to anchors give zero") {
        const std::vector<CalMatch> matches{{0, {3.0, 5.0}}, {1, {10.0, 14.0}}};
        CHECK(loss_cal(starts, ends, matches).value() == 0.0);
    }
    SUBCASE("opposite deviations cancel in the literal form") {
        // predicted [3,5] vs anchor [2,6]: ds = +1, de = -1.
        const std::vector<CalMatch> matches{{0, {2.0, 6.0}}};
        CHECK(loss_cal(starts, ends, matches, false).value() == 0.0);
        // The split variant keeps both deviations: 1^2 + (-1)^2 = 2.
        CHECK(loss_cal(starts, ends, matches, true).value() == 2.0);
    }
    SUBCASE("aligned deviations square the sum") {
        // predicted [3,5] vs anchor [2,4]: ds = +1, de = +1 -> (1+1)^2 = 4.
        const std::vector<CalMatch> matches{{0, {2.0, 4.0}}};
        CHECK(loss_cal(starts, ends, matches, false).value() == 4.0);
    }
    SUBCASE("no matches means zero") {
        CHECK(loss_cal(starts, ends, {}).value() == 0.0);
    }
}

TEST_CASE("total_loss weighted sum") {
    LossWeights defaults;
    LossParts ones{Tensor::scalar(1.0), Tensor::scalar(1.0), Tensor::scalar(1.0),
                   Tensor::scalar(1.0)};
    CHECK(total_loss(ones, defaults).value() == doctest::Approx(2.7).epsilon(1e-12));

    LossWeights zero;
    zero.lambda_reg = zero.lambda_sem = zero.lambda_cal = 0.0;
    LossParts parts{Tensor::scalar(1.37), Tensor::scalar(5.0), Tensor::scalar(-2.0),
                    Tensor::scalar(9.0)};
    CHECK(total_loss(parts, zero).value() == 1.37);

    LossParts zeros{Tensor::scalar(0.0), Tensor::scalar(0.0), Tensor::scalar(0.0),
                    Tensor::scalar(0.0)};
    CHECK(total_loss(zeros, defaults).value() == 0.0);

    SUBCASE("NaN part is named") {
        LossParts bad{Tensor::scalar(1.0), Tensor::scalar(1.0),
                      Tensor::scalar(std::nan("")), Tensor::scalar(1.0)};
        CHECK_THROWS_WITH_AS(total_loss(bad, defaults), doctest::Contains("loss_sem"),
                             NumericError);
    }
    SUBCASE("random parts match the hand-computed sum to 1e-12") {
        Rng rng(71);
        for (int trial = 0; trial < 200; ++trial) {
            LossWeights w;
            w.lambda_reg = rng.uniform(0.0, 3.0);
            w.lambda_sem = rng.uniform(0.0, 3.0);
            w.lambda_cal = rng.uniform(0.0, 3.0);
            const double c = rng.uniform(-5.0, 5.0), r = rng.uniform(-5.0, 5.0),
                         s = rng.uniform(-5.0, 5.0), k = rng.uniform(-5.0, 5.0);
            LossParts parts2{Tensor::scalar(c), Tensor::scalar(r), Tensor::scalar(s),
                             Tensor::scalar(k)};
            const double expected = ((c + w.lambda_reg * r) + w.lambda_sem * s) +
                                    w.lambda_cal * k;
            CHECK(std::abs(total_loss(parts2, w).value() - expected) <= 1e-12);
        }
    }
}

TEST_CASE("decode thresholding and NMS") {
    SUBCASE("background-dominant tokens produce nothing") {
        HeadOutput head;
        head.class_logits = Tensor::zeros({3, 4});
        for (int i = 0; i < 3; ++i) head.class_logits.mutable_data()[i * 4] = 30.0;
        head.boundary_offsets = Tensor::full({3, 2}, 1.0);
        const auto out = decode(head, {{0.0, 2.0}, {2.0, 4.0}, {4.0, 6.0}}, 0.3, 0.5);
        CHECK(out.empty());
    }
    SUBCASE("NMS keeps the higher-scored of two identical intervals") {
        HeadOutput head;
        head.class_logits = Tensor::from_data(
            {2, 3}, {std::log(0.05), std::log(0.90), std::log(0.05),
                     std::log(0.10), std::log(0.80), std::log(0.10)});
        // Token centers 1 and 3; both decode to [0, 4].
        head.boundary_offsets = Tensor::from_data({2, 2}, {1.0, 3.0, 3.0, 1.0});
        const auto out = decode(head, {{0.0, 2.0}, {2.0, 4.0}}, 0.3, 0.5);
        REQUIRE(out.size() == 1);
        CHECK(out[0].instance.score == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(out[0].token == 0);
        CHECK(out[0].instance.start_sec == 0.0);
        CHECK(out[0].instance.end_sec == 4.0);
    }
    SUBCASE("overlap below the NMS threshold keeps both") {
        // Token intervals [0, 2] and [0.8, 3]: inter 1.2, union 3, tIoU 0.4.
        HeadOutput head;
        head.class_logits = Tensor::from_data(
            {2, 3}, {std::log(0.05), std::log(0.90), std::log(0.05),
                     std::log(0.10), std::log(0.80), std::log(0.10)});
        head.boundary_offsets = Tensor::from_data({2, 2}, {1.0, 1.0, 2.2, 0.0});
        const std::vector<Span> spans{{0.0, 2.0}, {2.0, 4.0}};

        const auto both = decode(head, spans, 0.3, 0.5);
        CHECK(both.size() == 2);

        // The same pair is suppressed once the NMS threshold drops to 0.4.
        const auto pruned = decode(head, spans, 0.3, 0.4);
        REQUIRE(pruned.size() == 1);
        CHECK(pruned[0].instance.score == doctest::Approx(0.9).epsilon(1e-12));
    }
}

TEST_CASE("decode output is clamped, ordered and valid") {
    Rng rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        const int l = 6, classes = 4;
        HeadOutput head;
        head.class_logits = random_tensor({l, classes}, rng, -3.0, 3.0);
        head.boundary_offsets = random_tensor({l, 2}, rng, 0.0, 6.0);
        std::vector<Span> spans;
        for (int i = 0; i < l; ++i) spans.push_back({i * 2.0, (i + 1) * 2.0});
        const double duration = spans.back().end_sec;

        const auto out = decode(head, spans, 0.2, 0.5);
        double prev_score = 1.0;
        for (const auto& d : out) {
            CHECK(d.instance.start_sec >= 0.0);
            CHECK(d.instance.end_sec <= duration);
            CHECK(d.instance.start_sec < d.instance.end_sec);
            CHECK(d.instance.score <= prev_score);
            CHECK(d.instance.class_id >= 1);
            prev_score = d.instance.score;
        }
    }
}

TEST_CASE("match_to_graph pairs by class and tIoU") {
    const Tensor e = Tensor::from_data({2}, {1.0, 0.0});
    EventGraph graph;
    graph.global_node_id = 0;
    graph.nodes = {{0, 2, {0.0, 20.0}, e},
                   {1, 2, {2.0, 6.0}, e},
                   {2, 1, {10.0, 14.0}, e}};
    graph.edges = {{1, 0, Relation::PartOf}, {2, 0, Relation::PartOf},
                   {1, 2, Relation::Before}};

    std::vector<DecodedInstance> preds;
    preds.push_back({{2, 2.2, 6.1, 0.9}, 3});    // matches node 1
    preds.push_back({{1, 10.5, 13.5, 0.8}, 7});  // matches node 2
    preds.push_back({{1, 0.0, 1.0, 0.7}, 1});    // wrong place, no match
    preds.push_back({{2, 2.0, 6.0, 0.6}, 4});    // node 1 already taken

    const auto matches = match_to_graph(preds, graph, 0.1);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].token == 3);
    CHECK(matches[0].anchor.start_sec == 2.0);
    CHECK(matches[1].token == 7);
    CHECK(matches[1].anchor.start_sec == 10.0);
}
