#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hcr/common.hpp"
#include "hcr/inference.hpp"
#include "hcr/interactions.hpp"
#include "hcr/metrics.hpp"
#include "hcr/model.hpp"

namespace hcr {

struct TrainConfig {
    double beta = 1.0;            // multi-task weight, tuned over {1,2,3,5}
    double learning_rate = 0.015;
    double l2 = 1e-3;             // tuned over {1e-4,1e-3,1e-2}
    std::uint32_t batch_size = 1024;
    std::uint32_t max_epochs = 120;
    std::uint32_t patience = 10;  // early stop on validation NDCG
    std::uint32_t eval_k = 50;
    std::uint64_t seed = 1;
    ModelMode mode = ModelMode::Hcr;
    bool share_embeddings = true;
    bool exposure_enabled = true;
    std::uint32_t embed_dim = 6;
    double negative_sampling_ratio = 0.0;  // >0: synthesize non-clicks for the click task
    // Epochs trained with the like term off (beta = 0) before the joint
    // objective starts, so the shared embeddings are click-anchored before
    // the like heads begin routing signal through them.
    std::uint32_t beta_warmup_epochs = 6;

    void validate() const {
        if (beta < 0.0) throw InvalidInput("TrainConfig: beta must be >= 0");
        if (learning_rate <= 0.0) throw InvalidInput("TrainConfig: learning_rate must be > 0");
        if (l2 < 0.0) throw InvalidInput("TrainConfig: l2 must be >= 0");
        if (batch_size == 0) throw InvalidInput("TrainConfig: batch_size must be > 0");
        if (patience == 0) throw InvalidInput("TrainConfig: patience must be >= 1");
        if (eval_k == 0) throw InvalidInput("TrainConfig: eval_k must be >= 1");
        if (embed_dim == 0) throw InvalidInput("TrainConfig: embed_dim must be > 0");
        if (negative_sampling_ratio < 0.0) {
            throw InvalidInput("TrainConfig: negative_sampling_ratio must be >= 0");
        }
    }
};

struct EpochStats {
    std::uint32_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double validation_metric = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> per_epoch;
    std::size_t best_epoch = SIZE_MAX;  // index into per_epoch; SIZE_MAX when empty
};

inline std::string format_history_line(const EpochStats& s, std::uint32_t eval_k) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "epoch=%u loss=%.6f valid_ndcg@%u=%.6f", s.epoch, s.train_loss,
                  eval_k, s.validation_metric);
    return buf;
}

struct EpochBatches {
    std::vector<std::vector<Interaction>> click_batches;  // partition all train records
    std::vector<std::vector<Interaction>> like_batches;   // partition the clicked subset
};

/// Deterministic function of (seed, epoch): shuffles the click pool and the
/// clicked-subset pool independently and chunks them into batches. With
/// negative_sampling_ratio > 0, round(ratio * #clicked) synthetic non-click
/// records are appended to the click pool before shuffling (for ingested
/// logs that lack explicit non-clicks).
inline EpochBatches make_batches(const InteractionLog& train, std::uint32_t batch_size,
                                 std::uint64_t seed, std::uint32_t epoch,
                                 double negative_sampling_ratio = 0.0) {
    if (train.interactions.empty()) throw InvalidInput("make_batches: empty train log");
    if (batch_size == 0) throw InvalidInput("make_batches: batch_size must be > 0");

    std::vector<Interaction> clicked;
    for (const Interaction& r : train.interactions) {
        if (r.click) clicked.push_back(r);
    }
    if (clicked.empty()) throw InvalidInput("make_batches: no clicked records for the like task");

    std::vector<Interaction> click_pool = train.interactions;
    Rng rng(mix_seed(mix_seed(seed, 21), epoch));
    if (negative_sampling_ratio > 0.0) {
        const auto n_neg = static_cast<std::size_t>(
            std::llround(negative_sampling_ratio * static_cast<double>(clicked.size())));
        for (std::size_t j = 0; j < n_neg; ++j) {
            Interaction neg;
            neg.user = clicked[j % clicked.size()].user;
            neg.item = static_cast<ItemId>(rng.uniform_int(train.num_items));
            neg.click = false;
            neg.like = false;
            click_pool.push_back(neg);
        }
    }
    rng.shuffle(click_pool);
    rng.shuffle(clicked);

    auto chunk = [batch_size](const std::vector<Interaction>& pool) {
        std::vector<std::vector<Interaction>> batches;
        for (std::size_t start = 0; start < pool.size(); start += batch_size) {
            const std::size_t end = std::min(pool.size(), start + batch_size);
            batches.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(start),
                                 pool.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return batches;
    };
    return EpochBatches{chunk(click_pool), chunk(clicked)};
}

/// Adam with the canonical moment coefficients and decoupled L2 weight decay
/// (the decay step is taken outside the moment normalization; feeding l2*w
/// through the adaptive scaling would blow tiny decay gradients up to full
/// learning-rate steps on coordinates with sparse data gradients and zero
/// out the embedding tables between touches). The multi-task data loss
/// itself stays free of the penalty, so gradient checks see exactly the
/// two-term objective.
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n_params, double learning_rate, double l2)
        : lr_(learning_rate), l2_(l2), m_(n_params, 0.0), v_(n_params, 0.0) {}

    /// Updates only the parameter indices inside `active` ranges.
    void step(std::vector<double>& params, const GradientBuffer& grads,
              std::span<const std::pair<std::size_t, std::size_t>> active) {
        ++t_;
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
        for (const auto& [off, len] : active) {
            for (std::size_t j = off; j < off + len; ++j) {
                const double g = grads[j];
                m_[j] = 0.9 * m_[j] + 0.1 * g;
                v_[j] = 0.999 * v_[j] + 0.001 * g * g;
                const double mhat = m_[j] / bc1;
                const double vhat = v_[j] / bc2;
                params[j] -= lr_ * (mhat / (std::sqrt(vhat) + 1e-8) + l2_ * params[j]);
            }
        }
    }

private:
    double lr_, l2_;
    std::uint64_t t_ = 0;
    std::vector<double> m_, v_;
};

/// Parameter ranges a given mode actually optimizes: everything the loss can
/// reach for the multi-task model, only the h2 head for clean training.
inline std::vector<std::pair<std::size_t, std::size_t>> active_ranges(const HcrModel& model) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    if (model.config().mode == ModelMode::Ct) {
        for (Tensor t : {Tensor::H2User, Tensor::H2Item, Tensor::H2Bias}) {
            ranges.push_back(model.tensor_range(t));
        }
        return ranges;
    }
    for (Tensor t : model.tensors()) {
        if (!model.config().exposure_enabled &&
            (t == Tensor::ExposureWeight || t == Tensor::ItemExposure)) {
            continue;
        }
        ranges.push_back(model.tensor_range(t));
    }
    return ranges;
}

/// Multi-task training per the alternating-batch procedure with early
/// stopping on validation NDCG@eval_k. One epoch is a full pass over the
/// click batches, pairing like batches cyclically when counts differ.
/// Returns the checkpoint of the best epoch. Deterministic given cfg.seed.
inline std::pair<HcrModel, TrainHistory> train(HcrModel model, const DatasetSplit& split,
                                               const TrainConfig& cfg) {
    cfg.validate();
    if (model.num_users() != split.train.num_users || model.num_items() != split.train.num_items) {
        throw InvalidInput("train: model dimensions do not match the dataset");
    }
    if (model.config().mode != cfg.mode) throw InvalidInput("train: model/config mode mismatch");

    TrainHistory history;
    if (cfg.max_epochs == 0) return {std::move(model), history};

    const bool ct = cfg.mode == ModelMode::Ct;
    AdamOptimizer opt(model.param_count(), cfg.learning_rate, cfg.l2);
    const auto ranges = active_ranges(model);
    const ScoreVariant valid_variant = ct ? ScoreVariant::CT : ScoreVariant::HCR;
    // Warmup epochs optimize a different (click-only) objective; checkpoint
    // selection and the patience window start once the joint objective does.
    const std::uint32_t warmup = ct ? 0 : std::min(cfg.beta_warmup_epochs, cfg.max_epochs - 1);

    std::vector<double> best_params;
    double best_metric = -std::numeric_limits<double>::infinity();
    std::uint32_t epochs_since_best = 0;
    GradientBuffer grads = model.zero_gradients();

    for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const EpochBatches batches =
            make_batches(split.train, cfg.batch_size, cfg.seed, epoch, cfg.negative_sampling_ratio);
        double loss_sum = 0.0;
        std::size_t n_steps = 0;
        const std::size_t n_outer = ct ? batches.like_batches.size() : batches.click_batches.size();
        for (std::size_t b = 0; b < n_outer; ++b) {
            std::fill(grads.begin(), grads.end(), 0.0);
            double loss = 0.0;
            if (ct) {
                loss = accumulate_ct_loss_gradients(model, batches.like_batches[b], grads);
            } else {
                const auto& like = batches.like_batches[b % batches.like_batches.size()];
                loss = accumulate_loss_gradients(model, batches.click_batches[b], like,
                                                 epoch <= warmup ? 0.0 : cfg.beta, grads);
            }
            if (!std::isfinite(loss)) {
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch));
            }
            opt.step(model.params(), grads, ranges);
            loss_sum += loss;
            ++n_steps;
        }

        const double metric = mean_validation_ndcg(model_scorer(model, valid_variant),
                                                   model.num_items(), split, cfg.eval_k);
        history.per_epoch.push_back(
            EpochStats{epoch, loss_sum / static_cast<double>(n_steps), metric});
        if (epoch <= warmup) continue;
        if (metric > best_metric) {
            best_metric = metric;
            best_params = model.params();
            history.best_epoch = history.per_epoch.size() - 1;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.patience) {
            break;
        }
    }

    model.params() = best_params;
    return {std::move(model), history};
}

/// Clean-training baseline: single-task like BCE over clicked records on the
/// h2 head; beta and the click task are unused.
inline std::pair<HcrModel, TrainHistory> train_ct(HcrModel model, const DatasetSplit& split,
                                                  const TrainConfig& cfg) {
    if (cfg.mode != ModelMode::Ct) throw InvalidInput("train_ct: config mode must be CT");
    return train(std::move(model), split, cfg);
}

/// Fresh model wired for a config; init is a pure function of (dims, seed).
inline HcrModel make_model(std::uint32_t num_users, std::uint32_t num_items, const TrainConfig& cfg) {
    ModelConfig mc;
    mc.num_users = num_users;
    mc.num_items = num_items;
    mc.embed_dim = cfg.embed_dim;
    mc.share_embeddings = cfg.share_embeddings;
    mc.exposure_enabled = cfg.exposure_enabled;
    mc.mode = cfg.mode;
    return HcrModel(mc, cfg.seed);
}

}  // namespace hcr
