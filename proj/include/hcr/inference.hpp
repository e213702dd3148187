#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hcr/common.hpp"
#include "hcr/model.hpp"

namespace hcr {

/// Ranking scorers. HCR is the deconfounded score f*h1 (the user-constant
/// h2 sum is dropped); HCR_FULL keeps the full front-door sum and exists to
/// verify that dropping it never changes a ranking. HCR_T/S1/S2 are the
/// inference ablations; CT is the single-task baseline's head.
enum class ScoreVariant : std::uint8_t { HCR, HCR_FULL, HCR_T, HCR_S1, HCR_S2, CT };

inline const char* variant_name(ScoreVariant v) {
    switch (v) {
        case ScoreVariant::HCR: return "HCR";
        case ScoreVariant::HCR_FULL: return "HCR_FULL";
        case ScoreVariant::HCR_T: return "HCR_T";
        case ScoreVariant::HCR_S1: return "HCR_S1";
        case ScoreVariant::HCR_S2: return "HCR_S2";
        case ScoreVariant::CT: return "CT";
    }
    return "?";
}

inline ScoreVariant parse_variant(const std::string& name) {
    if (name == "HCR") return ScoreVariant::HCR;
    if (name == "HCR_FULL") return ScoreVariant::HCR_FULL;
    if (name == "HCR_T") return ScoreVariant::HCR_T;
    if (name == "HCR_S1") return ScoreVariant::HCR_S1;
    if (name == "HCR_S2") return ScoreVariant::HCR_S2;
    if (name == "CT") return ScoreVariant::CT;
    throw InvalidInput("unknown score variant '" + name + "'");
}

inline void check_variant_mode(const HcrModel& model, ScoreVariant variant) {
    const bool ct_model = model.config().mode == ModelMode::Ct;
    const bool ct_variant = variant == ScoreVariant::CT;
    if (ct_model != ct_variant) {
        throw InvalidInput(std::string("variant ") + variant_name(variant) +
                           (ct_model ? " requires an HCR-trained checkpoint"
                                     : " requires a CT-trained checkpoint"));
    }
}

inline double score(const HcrModel& model, UserId u, ItemId i, ScoreVariant variant) {
    check_variant_mode(model, variant);
    switch (variant) {
        case ScoreVariant::HCR:
            return model.forward_click(u, i) * model.forward_h1(u, i);
        case ScoreVariant::HCR_T:
            return model.forward_click(u, i) * model.forward_h1(u, i) * model.forward_h2(u, i);
        case ScoreVariant::HCR_S1:
            return model.forward_click(u, i);
        case ScoreVariant::HCR_S2:
            return model.forward_h1(u, i);
        case ScoreVariant::CT:
            return model.forward_h2(u, i);
        case ScoreVariant::HCR_FULL:
            throw InvalidInput("HCR_FULL needs an item universe; use score_full");
    }
    throw InvalidInput("unknown variant");
}

/// Full front-door sum over the mediator (c, z): the c=0 branch contributes
/// nothing, the c=1 branch carries the user-constant item sum
/// S_u = sum_{i'} h2(u,i') P(i'). Reference scorer for the ranking-invariance
/// property; proportional to score(HCR) with factor S_u.
inline double score_full(const HcrModel& model, UserId u, ItemId i,
                         std::span<const ItemId> item_universe, std::span<const double> item_prior) {
    if (item_universe.empty()) throw InvalidInput("score_full: empty item universe");
    if (item_universe.size() != item_prior.size()) {
        throw InvalidInput("score_full: universe/prior size mismatch");
    }
    double prior_mass = 0.0;
    for (double p : item_prior) prior_mass += p;
    if (std::abs(prior_mass - 1.0) > 1e-9) throw InvalidInput("score_full: item prior must sum to 1");

    double s_u = 0.0;
    for (std::size_t k = 0; k < item_universe.size(); ++k) {
        s_u += model.forward_h2(u, item_universe[k]) * item_prior[k];
    }
    const double p_click = model.forward_click(u, i);
    // m = (c, z): f_m vanishes off z(u,i); summing the two click arms, the
    // c=0 arm has h = 0.
    const double arm_clicked = p_click * model.forward_h1(u, i) * s_u;
    const double arm_unclicked = (1.0 - p_click) * 0.0;
    return arm_clicked + arm_unclicked;
}

/// Top-K recommendation list for one user under the all-ranking protocol.
struct RankedList {
    UserId user = 0;
    std::vector<ItemId> items;
    std::vector<double> scores;
};

using Scorer = std::function<double(UserId, ItemId)>;

inline Scorer model_scorer(const HcrModel& model, ScoreVariant variant) {
    check_variant_mode(model, variant);
    return [&model, variant](UserId u, ItemId i) { return score(model, u, i, variant); };
}

/// All-ranking over an arbitrary scorer: every item outside the user's train
/// interactions is scored; top K returned, ties broken by ascending item
/// index. Generic so tests can plug in the ground-truth oracle as a scorer.
inline RankedList rank_with(const Scorer& scorer, std::uint32_t num_items, UserId u,
                            std::span<const ItemId> train_items, std::size_t k) {
    if (k == 0) throw InvalidInput("rank_with: K must be >= 1");
    std::vector<char> excluded(num_items, 0);
    for (ItemId i : train_items) {
        if (i < num_items) excluded[i] = 1;
    }
    std::vector<std::pair<double, ItemId>> scored;
    scored.reserve(num_items);
    for (ItemId i = 0; i < num_items; ++i) {
        if (!excluded[i]) scored.emplace_back(scorer(u, i), i);
    }
    if (scored.empty()) throw InvalidInput("rank_with: no candidate items");

    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const std::pair<double, ItemId>& a, const std::pair<double, ItemId>& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    RankedList out;
    out.user = u;
    out.items.reserve(take);
    out.scores.reserve(take);
    for (std::size_t p = 0; p < take; ++p) {
        out.items.push_back(scored[p].second);
        out.scores.push_back(scored[p].first);
    }
    return out;
}

inline RankedList rank_all(const HcrModel& model, UserId u, std::span<const ItemId> train_items,
                           ScoreVariant variant, std::size_t k) {
    return rank_with(model_scorer(model, variant), model.num_items(), u, train_items, k);
}

/// Smoothed empirical train click frequency; the default item prior for the
/// full-sum reference scorer.
inline std::vector<double> empirical_item_prior(const InteractionLog& train) {
    std::vector<double> counts(train.num_items, 1.0);  // +1 smoothing
    for (const Interaction& r : train.interactions) {
        if (r.click) counts[r.item] += 1.0;
    }
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (double& c : counts) c /= total;
    return counts;
}

}  // namespace hcr
