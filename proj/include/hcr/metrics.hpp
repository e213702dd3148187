#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "hcr/common.hpp"
#include "hcr/inference.hpp"
#include "hcr/interactions.hpp"
#include "hcr/model.hpp"
#include "hcr/simulator.hpp"

namespace hcr {

inline double recall_at_k(const RankedList& ranked, std::span<const ItemId> relevant, std::size_t k) {
    if (relevant.empty()) throw InvalidInput("recall_at_k: empty relevant set");
    std::unordered_set<ItemId> rel(relevant.begin(), relevant.end());
    const std::size_t limit = std::min(k, ranked.items.size());
    std::size_t hits = 0;
    for (std::size_t p = 0; p < limit; ++p) hits += rel.count(ranked.items[p]);
    return static_cast<double>(hits) / static_cast<double>(rel.size());
}

/// Binary-relevance NDCG with 1/log2(p+1) discount at 1-indexed position p.
inline double ndcg_at_k(const RankedList& ranked, std::span<const ItemId> relevant, std::size_t k) {
    if (relevant.empty()) throw InvalidInput("ndcg_at_k: empty relevant set");
    std::unordered_set<ItemId> rel(relevant.begin(), relevant.end());
    const std::size_t limit = std::min(k, ranked.items.size());
    double dcg = 0.0;
    for (std::size_t p = 0; p < limit; ++p) {
        if (rel.count(ranked.items[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
    const std::size_t ideal = std::min(limit, rel.size());
    double idcg = 0.0;
    for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

struct EvalRow {
    std::string metric;
    std::string variant;
    std::string split;  // "validation" | "test"
    std::string group;  // "all", "active", "chrono1", "ratio_high", ...
    std::size_t k = 0;  // 0 = not a top-K metric
    double value = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    void add(std::string metric, std::string variant, std::string split, std::string group,
             std::size_t k, double value) {
        rows.push_back(EvalRow{std::move(metric), std::move(variant), std::move(split),
                               std::move(group), k, value});
    }

    std::string to_text() const {
        std::ostringstream out;
        char buf[64];
        for (const EvalRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.value);
            out << r.split << '.' << r.group << '.' << r.metric;
            if (r.k > 0) out << '@' << r.k;
            out << " = " << buf << '\n';
        }
        return out.str();
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "metric,variant,split,group,k,value\n";
        char buf[64];
        for (const EvalRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.value);
            out << r.metric << ',' << r.variant << ',' << r.split << ',' << r.group << ',' << r.k
                << ',' << buf << '\n';
        }
        return out.str();
    }
};

namespace detail {

/// Mean over users with nonempty relevant sets; empty-relevant users are
/// excluded from the average, never counted as zero. Returns (mean, count).
struct MeanAccumulator {
    double sum = 0.0;
    std::size_t count = 0;
    void add(double x) { sum += x; ++count; }
    double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

}  // namespace detail

/// Recall@K / NDCG@K on validation and test under the all-ranking protocol.
inline void evaluate_ranking(EvalReport& report, const Scorer& scorer, std::uint32_t num_items,
                             const DatasetSplit& split, const std::string& variant_label,
                             std::span<const std::size_t> ks) {
    const std::uint32_t num_users = split.train.num_users;
    const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
    for (const char* split_name : {"validation", "test"}) {
        const auto& relevant_sets =
            std::string(split_name) == "validation" ? split.validation : split.test;
        std::vector<detail::MeanAccumulator> recall(ks.size()), ndcg(ks.size());
        bool any = false;
        for (UserId u = 0; u < num_users; ++u) {
            if (relevant_sets[u].empty()) continue;
            any = true;
            const RankedList ranked = rank_with(scorer, num_items, u, split.train_items[u], max_k);
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                recall[ki].add(recall_at_k(ranked, relevant_sets[u], ks[ki]));
                ndcg[ki].add(ndcg_at_k(ranked, relevant_sets[u], ks[ki]));
            }
        }
        if (!any) throw InvalidInput(std::string("evaluate: no evaluable users on ") + split_name);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            report.add("recall", variant_label, split_name, "all", ks[ki], recall[ki].mean());
            report.add("ndcg", variant_label, split_name, "all", ks[ki], ndcg[ki].mean());
        }
    }
}

inline EvalReport evaluate_split(const HcrModel& model, const DatasetSplit& split, ScoreVariant variant,
                                 std::span<const std::size_t> ks) {
    EvalReport report;
    evaluate_ranking(report, model_scorer(model, variant), model.num_items(), split,
                     variant_name(variant), ks);
    return report;
}

/// Mean validation NDCG@K; the early-stopping metric.
inline double mean_validation_ndcg(const Scorer& scorer, std::uint32_t num_items,
                                   const DatasetSplit& split, std::size_t k) {
    detail::MeanAccumulator acc;
    for (UserId u = 0; u < split.train.num_users; ++u) {
        if (split.validation[u].empty()) continue;
        const RankedList ranked = rank_with(scorer, num_items, u, split.train_items[u], k);
        acc.add(ndcg_at_k(ranked, split.validation[u], k));
    }
    return acc.mean();
}

struct GroupSpec {
    double active_fraction = 0.4;      // top users by train click count
    std::uint32_t chrono_subsets = 4;  // chronological test-like subsets
    // Item groups by train like/click ratio, high:low sized 1:2.

    void validate() const {
        if (!(active_fraction > 0.0 && active_fraction < 1.0)) {
            throw InvalidInput("GroupSpec: active_fraction must be in (0,1)");
        }
        if (chrono_subsets == 0) throw InvalidInput("GroupSpec: chrono_subsets must be >= 1");
    }
};

/// Users ordered by train click count (desc, index asc); top ceil(f*N) are
/// the active group.
inline std::vector<char> active_user_mask(const DatasetSplit& split, double active_fraction) {
    const std::uint32_t n = split.train.num_users;
    std::vector<std::size_t> clicks(n, 0);
    for (const Interaction& r : split.train.interactions) {
        if (r.click) ++clicks[r.user];
    }
    std::vector<UserId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&clicks](UserId a, UserId b) {
        if (clicks[a] != clicks[b]) return clicks[a] > clicks[b];
        return a < b;
    });
    const std::size_t n_active =
        static_cast<std::size_t>(std::ceil(active_fraction * static_cast<double>(n)));
    std::vector<char> mask(n, 0);
    for (std::size_t j = 0; j < n_active && j < order.size(); ++j) mask[order[j]] = 1;
    return mask;
}

/// Smoothed train like/click ratio per item: (likes+1)/(clicks+2), defined
/// for never-clicked items too.
inline std::vector<double> like_click_ratio(const InteractionLog& train) {
    std::vector<double> likes(train.num_items, 0.0), clicks(train.num_items, 0.0);
    for (const Interaction& r : train.interactions) {
        if (r.click) clicks[r.item] += 1.0;
        if (r.like) likes[r.item] += 1.0;
    }
    std::vector<double> ratio(train.num_items);
    for (ItemId i = 0; i < train.num_items; ++i) ratio[i] = (likes[i] + 1.0) / (clicks[i] + 2.0);
    return ratio;
}

/// Item mask for the high like/click-ratio group: top ceil(|I|/3) by ratio
/// (desc, index asc), giving the 1:2 high:low size split.
inline std::vector<char> high_ratio_item_mask(const InteractionLog& train) {
    const std::vector<double> ratio = like_click_ratio(train);
    std::vector<ItemId> order(train.num_items);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&ratio](ItemId a, ItemId b) {
        if (ratio[a] != ratio[b]) return ratio[a] > ratio[b];
        return a < b;
    });
    const std::size_t n_high = (static_cast<std::size_t>(train.num_items) + 2) / 3;
    std::vector<char> mask(train.num_items, 0);
    for (std::size_t j = 0; j < n_high; ++j) mask[order[j]] = 1;
    return mask;
}

/// The in-depth analyses: active/less-active user groups, chronological
/// subsets of test likes, and like/click-ratio item groups with normalized
/// recall. Empty groups produce no rows. All rows are on the test split.
inline void group_analysis(EvalReport& report, const Scorer& scorer, std::uint32_t num_items,
                           const DatasetSplit& split, const std::string& variant_label,
                           const GroupSpec& groups, std::span<const std::size_t> ks) {
    groups.validate();
    const std::uint32_t num_users = split.train.num_users;
    const std::size_t max_k = *std::max_element(ks.begin(), ks.end());

    std::vector<RankedList> ranked(num_users);
    std::vector<char> has_ranking(num_users, 0);
    for (UserId u = 0; u < num_users; ++u) {
        if (split.test[u].empty()) continue;
        ranked[u] = rank_with(scorer, num_items, u, split.train_items[u], max_k);
        has_ranking[u] = 1;
    }

    // (a) activity groups
    const std::vector<char> active = active_user_mask(split, groups.active_fraction);
    for (int g = 0; g < 2; ++g) {
        const std::string group_name = g == 0 ? "active" : "less_active";
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            detail::MeanAccumulator acc_r, acc_n;
            for (UserId u = 0; u < num_users; ++u) {
                if (!has_ranking[u] || (active[u] != 0) != (g == 0)) continue;
                acc_r.add(recall_at_k(ranked[u], split.test[u], ks[ki]));
                acc_n.add(ndcg_at_k(ranked[u], split.test[u], ks[ki]));
            }
            if (acc_r.count == 0) continue;  // empty group: absent, not zero
            report.add("recall", variant_label, "test", group_name, ks[ki], acc_r.mean());
            report.add("ndcg", variant_label, "test", group_name, ks[ki], acc_n.mean());
        }
    }

    // (b) chronological subsets of each user's test likes
    for (std::uint32_t s = 0; s < groups.chrono_subsets; ++s) {
        const std::string group_name = "chrono" + std::to_string(s + 1);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            detail::MeanAccumulator acc_r, acc_n;
            for (UserId u = 0; u < num_users; ++u) {
                if (!has_ranking[u]) continue;
                const auto& likes = split.test[u];  // chronological order
                const std::size_t n = likes.size();
                const std::size_t lo = s * n / groups.chrono_subsets;
                const std::size_t hi = (s + 1) * n / groups.chrono_subsets;
                if (lo >= hi) continue;
                const std::vector<ItemId> subset(likes.begin() + static_cast<std::ptrdiff_t>(lo),
                                                 likes.begin() + static_cast<std::ptrdiff_t>(hi));
                acc_r.add(recall_at_k(ranked[u], subset, ks[ki]));
                acc_n.add(ndcg_at_k(ranked[u], subset, ks[ki]));
            }
            if (acc_r.count == 0) continue;
            report.add("recall", variant_label, "test", group_name, ks[ki], acc_r.mean());
            report.add("ndcg", variant_label, "test", group_name, ks[ki], acc_n.mean());
        }
    }

    // (c) like/click-ratio item groups with normalized recall
    const std::vector<char> high = high_ratio_item_mask(split.train);
    for (int g = 0; g < 2; ++g) {
        const std::string group_name = g == 0 ? "ratio_high" : "ratio_low";
        const bool want_high = g == 0;
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            detail::MeanAccumulator acc_r, acc_norm;
            for (UserId u = 0; u < num_users; ++u) {
                if (!has_ranking[u]) continue;
                std::vector<ItemId> rel_in_group;
                for (ItemId i : split.test[u]) {
                    if ((high[i] != 0) == want_high) rel_in_group.push_back(i);
                }
                if (rel_in_group.empty()) continue;
                const double rec = recall_at_k(ranked[u], rel_in_group, ks[ki]);
                const std::size_t limit = std::min(ks[ki], ranked[u].items.size());
                std::size_t group_in_top = 0;
                for (std::size_t p = 0; p < limit; ++p) {
                    if ((high[ranked[u].items[p]] != 0) == want_high) ++group_in_top;
                }
                const double proportion =
                    static_cast<double>(group_in_top) / static_cast<double>(limit);
                acc_r.add(rec);
                acc_norm.add(proportion > 0.0 ? rec / proportion : 0.0);
            }
            if (acc_r.count == 0) continue;
            report.add("recall", variant_label, "test", group_name, ks[ki], acc_r.mean());
            report.add("normalized_recall", variant_label, "test", group_name, ks[ki],
                       acc_norm.mean());
        }
    }
}

/// Fractional (average-tie) ranks, 1-based.
inline std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos + 1;
        while (end < n && values[order[end]] == values[order[pos]]) ++end;
        const double mean_rank = (static_cast<double>(pos) + static_cast<double>(end - 1)) / 2.0 + 1.0;
        for (std::size_t j = pos; j < end; ++j) ranks[order[j]] = mean_rank;
        pos = end;
    }
    return ranks;
}

/// Spearman rank correlation with average-rank tie handling. Returns 0 when
/// either side has zero rank variance.
inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidInput("spearman: need >= 2 paired values");
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        ma += ra[j];
        mb += rb[j];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double da = ra[j] - ma, db = rb[j] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

/// Mean per-user Spearman correlation between a scorer and the world's exact
/// interventional like probabilities over the given candidate sets.
inline double causal_fidelity(const Scorer& scorer, const Scorer& truth,
                              const std::vector<std::vector<ItemId>>& candidates) {
    detail::MeanAccumulator acc;
    for (UserId u = 0; u < candidates.size(); ++u) {
        const auto& cand = candidates[u];
        if (cand.empty()) continue;
        if (cand.size() < 3) throw InvalidInput("causal_fidelity: candidate set smaller than 3");
        std::vector<double> s(cand.size()), t(cand.size());
        for (std::size_t j = 0; j < cand.size(); ++j) {
            s[j] = scorer(u, cand[j]);
            t[j] = truth(u, cand[j]);
        }
        acc.add(spearman(s, t));
    }
    if (acc.count == 0) throw InvalidInput("causal_fidelity: no users with candidates");
    return acc.mean();
}

inline double causal_fidelity(const HcrModel& model, const SyntheticWorld& world, ScoreVariant variant,
                              const std::vector<std::vector<ItemId>>& candidates) {
    return causal_fidelity(model_scorer(model, variant),
                           [&world](UserId u, ItemId i) { return world.true_interventional(u, i); },
                           candidates);
}

/// Per-user candidates under the all-ranking protocol: every item absent
/// from the user's train interactions.
inline std::vector<std::vector<ItemId>> allrank_candidates(const DatasetSplit& split,
                                                           std::uint32_t num_items) {
    std::vector<std::vector<ItemId>> out(split.train.num_users);
    for (UserId u = 0; u < split.train.num_users; ++u) {
        std::vector<char> excluded(num_items, 0);
        for (ItemId i : split.train_items[u]) excluded[i] = 1;
        for (ItemId i = 0; i < num_items; ++i) {
            if (!excluded[i]) out[u].push_back(i);
        }
    }
    return out;
}

}  // namespace hcr
