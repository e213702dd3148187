#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hcr/common.hpp"
#include "hcr/inference.hpp"
#include "hcr/model.hpp"

using namespace hcr;

namespace {

HcrModel random_model(std::uint32_t users, std::uint32_t items, std::uint64_t seed,
                      bool exposure = true, ModelMode mode = ModelMode::Hcr) {
    ModelConfig cfg;
    cfg.num_users = users;
    cfg.num_items = items;
    cfg.embed_dim = 6;
    cfg.exposure_enabled = exposure;
    cfg.mode = mode;
    HcrModel model(cfg, seed);
    for (double& x : model.params()) x *= 6.0;  // spread the head outputs
    return model;
}

}  // namespace

TEST_CASE("score: zero-parameter algebra, exposure off") {
    ModelConfig cfg;
    cfg.num_users = 2;
    cfg.num_items = 3;
    cfg.embed_dim = 4;
    cfg.exposure_enabled = false;
    HcrModel model(cfg, 1);
    std::fill(model.params().begin(), model.params().end(), 0.0);
    CHECK(score(model, 0, 0, ScoreVariant::HCR) == 0.25);
    CHECK(score(model, 0, 0, ScoreVariant::HCR_T) == 0.125);
    CHECK(score(model, 0, 0, ScoreVariant::HCR_S1) == 0.5);
    CHECK(score(model, 0, 0, ScoreVariant::HCR_S2) == 0.5);
}

TEST_CASE("score: HCR factors into S1 * S2 and recomputes from the heads") {
    const HcrModel model = random_model(4, 5, 2);
    for (UserId u = 0; u < 4; ++u) {
        for (ItemId i = 0; i < 5; ++i) {
            const double hcr = score(model, u, i, ScoreVariant::HCR);
            CHECK(std::abs(hcr - score(model, u, i, ScoreVariant::HCR_S1) *
                                     score(model, u, i, ScoreVariant::HCR_S2)) <= 1e-15);
            CHECK(std::abs(hcr - model.forward_click(u, i) * model.forward_h1(u, i)) <= 1e-12);
            CHECK(hcr > 0.0);
            CHECK(hcr < 1.0);
            // the trained-correlation variant carries an extra (0,1) factor
            CHECK(score(model, u, i, ScoreVariant::HCR_T) <= hcr);
        }
    }
}

TEST_CASE("score: variant/mode mismatches are rejected") {
    const HcrModel hcr_model = random_model(2, 3, 3);
    CHECK_THROWS_AS(score(hcr_model, 0, 0, ScoreVariant::CT), InvalidInput);
    const HcrModel ct_model = random_model(2, 3, 3, true, ModelMode::Ct);
    CHECK_THROWS_AS(score(ct_model, 0, 0, ScoreVariant::HCR), InvalidInput);
    CHECK(score(ct_model, 0, 0, ScoreVariant::CT) == ct_model.forward_h2(0, 0));
    CHECK_THROWS_AS(score(hcr_model, 0, 0, ScoreVariant::HCR_FULL), InvalidInput);
}

TEST_CASE("score_full: singleton universe") {
    const HcrModel model = random_model(3, 4, 4);
    const std::vector<ItemId> universe = {2};
    const std::vector<double> prior = {1.0};
    const double full = score_full(model, 1, 0, universe, prior);
    CHECK(std::abs(full - score(model, 1, 0, ScoreVariant::HCR) * model.forward_h2(1, 2)) <= 1e-15);
}

TEST_CASE("score_full: ratio to the HCR score is the user constant S_u") {
    const HcrModel model = random_model(3, 20, 5);
    std::vector<ItemId> universe(20);
    std::iota(universe.begin(), universe.end(), 0);
    const std::vector<double> prior(20, 1.0 / 20.0);
    for (UserId u = 0; u < 3; ++u) {
        const double ratio0 =
            score_full(model, u, 0, universe, prior) / score(model, u, 0, ScoreVariant::HCR);
        for (ItemId i = 1; i < 20; ++i) {
            const double ratio =
                score_full(model, u, i, universe, prior) / score(model, u, i, ScoreVariant::HCR);
            CHECK(std::abs(ratio - ratio0) <= 1e-12);
        }
    }
}

TEST_CASE("score_full: ranking matches the deconfounded score per user") {
    const HcrModel model = random_model(6, 50, 6);
    std::vector<ItemId> universe(50);
    std::iota(universe.begin(), universe.end(), 0);
    // skewed but positive prior
    std::vector<double> prior(50);
    double total = 0.0;
    for (std::size_t j = 0; j < prior.size(); ++j) {
        prior[j] = 1.0 + static_cast<double>(j % 7);
        total += prior[j];
    }
    for (double& p : prior) p /= total;

    for (UserId u = 0; u < 6; ++u) {
        std::vector<ItemId> by_full(50), by_score(50);
        std::iota(by_full.begin(), by_full.end(), 0);
        by_score = by_full;
        std::sort(by_full.begin(), by_full.end(), [&](ItemId a, ItemId b) {
            const double sa = score_full(model, u, a, universe, prior);
            const double sb = score_full(model, u, b, universe, prior);
            if (sa != sb) return sa > sb;
            return a < b;
        });
        std::sort(by_score.begin(), by_score.end(), [&](ItemId a, ItemId b) {
            const double sa = score(model, u, a, ScoreVariant::HCR);
            const double sb = score(model, u, b, ScoreVariant::HCR);
            if (sa != sb) return sa > sb;
            return a < b;
        });
        CHECK(by_full == by_score);
    }
}

TEST_CASE("score_full: input validation") {
    const HcrModel model = random_model(2, 3, 7);
    CHECK_THROWS_AS(score_full(model, 0, 0, {}, {}), InvalidInput);
    const std::vector<ItemId> universe = {0, 1};
    const std::vector<double> bad_prior = {0.9, 0.9};
    CHECK_THROWS_AS(score_full(model, 0, 0, universe, bad_prior), InvalidInput);
}

TEST_CASE("rank_all: distinct scores come back sorted descending") {
    const HcrModel model = random_model(2, 3, 8);
    const RankedList ranked = rank_all(model, 0, {}, ScoreVariant::HCR, 3);
    REQUIRE(ranked.items.size() == 3);
    CHECK(ranked.scores[0] >= ranked.scores[1]);
    CHECK(ranked.scores[1] >= ranked.scores[2]);
}

TEST_CASE("rank_all: ties break by ascending item index") {
    ModelConfig cfg;
    cfg.num_users = 1;
    cfg.num_items = 5;
    cfg.embed_dim = 4;
    HcrModel model(cfg, 1);
    std::fill(model.params().begin(), model.params().end(), 0.0);  // all scores equal
    const RankedList ranked = rank_all(model, 0, {}, ScoreVariant::HCR, 5);
    CHECK(ranked.items == std::vector<ItemId>{0, 1, 2, 3, 4});
}

TEST_CASE("rank_all: agrees with a full-sort reference") {
    const HcrModel model = random_model(4, 100, 9);
    const std::vector<ItemId> train_items = {3, 10, 55};
    for (UserId u = 0; u < 4; ++u) {
        const RankedList ranked = rank_all(model, u, train_items, ScoreVariant::HCR, 10);

        std::vector<std::pair<double, ItemId>> reference;
        for (ItemId i = 0; i < 100; ++i) {
            if (std::find(train_items.begin(), train_items.end(), i) != train_items.end()) continue;
            reference.emplace_back(score(model, u, i, ScoreVariant::HCR), i);
        }
        std::sort(reference.begin(), reference.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(ranked.items.size() == 10);
        for (std::size_t p = 0; p < 10; ++p) {
            CHECK(ranked.items[p] == reference[p].second);
            CHECK(ranked.scores[p] == reference[p].first);
        }
    }
}

TEST_CASE("rank_all: never emits train items, clamps K to the candidate count") {
    const HcrModel model = random_model(2, 6, 10);
    const std::vector<ItemId> train_items = {0, 1, 2, 3};
    const RankedList ranked = rank_all(model, 0, train_items, ScoreVariant::HCR, 50);
    CHECK(ranked.items.size() == 2);
    for (ItemId i : ranked.items) {
        CHECK(std::find(train_items.begin(), train_items.end(), i) == train_items.end());
    }

    const std::vector<ItemId> all_items = {0, 1, 2, 3, 4, 5};
    CHECK_THROWS_AS(rank_all(model, 0, all_items, ScoreVariant::HCR, 5), InvalidInput);
    CHECK_THROWS_AS(rank_all(model, 0, {}, ScoreVariant::HCR, 0), InvalidInput);
}

TEST_CASE("empirical_item_prior: smoothed click frequencies sum to one") {
    InteractionLog train;
    train.num_users = 2;
    train.num_items = 3;
    train.interactions.push_back(Interaction{0, 0, 0, true, false});
    train.interactions.push_back(Interaction{0, 0, 1, true, true});
    train.interactions.push_back(Interaction{1, 1, 2, false, false});
    const std::vector<double> prior = empirical_item_prior(train);
    REQUIRE(prior.size() == 3);
    CHECK(std::abs(prior[0] + prior[1] + prior[2] - 1.0) <= 1e-12);
    CHECK(prior[0] == Catch::Approx(3.0 / 5.0));  // 2 clicks + smoothing 1
    CHECK(prior[1] == Catch::Approx(1.0 / 5.0));  // unclicked row, smoothing only
    CHECK(prior[2] == Catch::Approx(1.0 / 5.0));
}
