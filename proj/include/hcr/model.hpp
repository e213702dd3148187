#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcr/common.hpp"
#include "hcr/interactions.hpp"

namespace hcr {

enum class ModelMode : std::uint8_t { Hcr = 0, Ct = 1 };

struct ModelConfig {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::uint32_t embed_dim = 16;
    bool share_embeddings = true;  // false = the no-sharing ablation
    bool exposure_enabled = true;
    ModelMode mode = ModelMode::Hcr;
};

/// Parameter tensors in checkpoint order. The trailing pair exists only when
/// embeddings are not shared (the like task then owns its own z tables).
enum class Tensor : std::uint8_t {
    UserBase,
    ItemBase,
    ClickWeight,
    ClickBias,
    H1Weight,
    H1Bias,
    H2User,
    H2Item,
    H2Bias,
    ExposureWeight,
    ItemExposure,
    H1UserBase,
    H1ItemBase,
};

using GradientBuffer = std::vector<double>;

/// Decomposed multi-task scorer.
///
///   click head   f(u,i) = sigma(<w_f, z(u,i)> + b_f) * sigma(w_e * e_i)
///   like head 1  h1(u,i) = sigma(<w_1[u], z1(u,i)> + b_1)
///   like head 2  h2(u,i) = sigma(<p_u, q_i> + b_2)
///
/// z(u,i) is the elementwise product of the base embedding rows. h1 reads the
/// same base tables when sharing is on (so the click task anchors them) and a
/// private copy otherwise; its mixing weight w_1 is per-user, since how a
/// user's trait vector translates into post-click approval is itself a user
/// trait, distinct from what makes them click. h2 always owns its tables: it
/// has to absorb the item-side confounded correlation on its own, which is
/// why it never touches z. The exposure factor (w_e, e_i learned) is the
/// multiplicative click-side term for exposure-driven items; optional.
class HcrModel {
public:
    HcrModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        if (cfg.num_users == 0 || cfg.num_items == 0 || cfg.embed_dim == 0) {
            throw InvalidInput("HcrModel: dimensions must be positive");
        }
        build_layout();
        params_.assign(total_, 0.0);
        init_params(seed);
    }

    const ModelConfig& config() const { return cfg_; }
    std::uint32_t num_users() const { return cfg_.num_users; }
    std::uint32_t num_items() const { return cfg_.num_items; }
    std::uint32_t embed_dim() const { return cfg_.embed_dim; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t param_count() const { return total_; }

    GradientBuffer zero_gradients() const { return GradientBuffer(total_, 0.0); }

    std::vector<Tensor> tensors() const {
        std::vector<Tensor> list = {Tensor::UserBase,  Tensor::ItemBase, Tensor::ClickWeight,
                                    Tensor::ClickBias, Tensor::H1Weight, Tensor::H1Bias,
                                    Tensor::H2User,    Tensor::H2Item,   Tensor::H2Bias,
                                    Tensor::ExposureWeight, Tensor::ItemExposure};
        if (!cfg_.share_embeddings) {
            list.push_back(Tensor::H1UserBase);
            list.push_back(Tensor::H1ItemBase);
        }
        return list;
    }

    /// [offset, length) of a tensor inside the flat parameter vector.
    std::pair<std::size_t, std::size_t> tensor_range(Tensor t) const {
        const std::size_t d = cfg_.embed_dim;
        const std::size_t ud = static_cast<std::size_t>(cfg_.num_users) * d;
        const std::size_t id = static_cast<std::size_t>(cfg_.num_items) * d;
        switch (t) {
            case Tensor::UserBase: return {off_user_base_, ud};
            case Tensor::ItemBase: return {off_item_base_, id};
            case Tensor::ClickWeight: return {off_click_w_, d};
            case Tensor::ClickBias: return {off_click_b_, 1};
            case Tensor::H1Weight: return {off_h1_w_, ud};  // per-user rows
            case Tensor::H1Bias: return {off_h1_b_, 1};
            case Tensor::H2User: return {off_h2_user_, ud};
            case Tensor::H2Item: return {off_h2_item_, id};
            case Tensor::H2Bias: return {off_h2_b_, 1};
            case Tensor::ExposureWeight: return {off_expo_w_, 1};
            case Tensor::ItemExposure: return {off_item_expo_, cfg_.num_items};
            case Tensor::H1UserBase:
                if (cfg_.share_embeddings) throw InvalidInput("H1UserBase absent when sharing");
                return {off_h1_user_, ud};
            case Tensor::H1ItemBase:
                if (cfg_.share_embeddings) throw InvalidInput("H1ItemBase absent when sharing");
                return {off_h1_item_, id};
        }
        throw InvalidInput("unknown tensor");
    }

    std::span<double> tensor_span(Tensor t) {
        auto [off, len] = tensor_range(t);
        return {params_.data() + off, len};
    }
    std::span<const double> tensor_span(Tensor t) const {
        auto [off, len] = tensor_range(t);
        return {params_.data() + off, len};
    }

    std::span<const double> user_base_row(UserId u) const {
        return {params_.data() + off_user_base_ + static_cast<std::size_t>(u) * cfg_.embed_dim,
                cfg_.embed_dim};
    }
    std::span<const double> item_base_row(ItemId i) const {
        return {params_.data() + off_item_base_ + static_cast<std::size_t>(i) * cfg_.embed_dim,
                cfg_.embed_dim};
    }
    std::span<const double> h1_user_row(UserId u) const {
        const std::size_t off = cfg_.share_embeddings ? off_user_base_ : off_h1_user_;
        return {params_.data() + off + static_cast<std::size_t>(u) * cfg_.embed_dim, cfg_.embed_dim};
    }
    std::span<const double> h1_item_row(ItemId i) const {
        const std::size_t off = cfg_.share_embeddings ? off_item_base_ : off_h1_item_;
        return {params_.data() + off + static_cast<std::size_t>(i) * cfg_.embed_dim, cfg_.embed_dim};
    }
    std::span<const double> h2_user_row(UserId u) const {
        return {params_.data() + off_h2_user_ + static_cast<std::size_t>(u) * cfg_.embed_dim,
                cfg_.embed_dim};
    }
    std::span<const double> h2_item_row(ItemId i) const {
        return {params_.data() + off_h2_item_ + static_cast<std::size_t>(i) * cfg_.embed_dim,
                cfg_.embed_dim};
    }

    /// z(u,i): elementwise product of the base embedding rows.
    std::vector<double> integrate_features(UserId u, ItemId i) const {
        check_ids(u, i);
        auto ub = user_base_row(u);
        auto ib = item_base_row(i);
        std::vector<double> z(cfg_.embed_dim);
        for (std::uint32_t k = 0; k < cfg_.embed_dim; ++k) z[k] = ub[k] * ib[k];
        return z;
    }

    /// Estimate of P(c=1 | u, i, z(u,i)), with the exposure factor folded in
    /// multiplicatively when enabled.
    double forward_click(UserId u, ItemId i) const {
        check_ids(u, i);
        return sigmoid(click_logit(u, i)) * exposure_factor(i);
    }

    double forward_h1(UserId u, ItemId i) const {
        check_ids(u, i);
        return sigmoid(h1_logit(u, i));
    }

    double forward_h2(UserId u, ItemId i) const {
        check_ids(u, i);
        return sigmoid(h2_logit(u, i));
    }

    /// Estimate of P(l=1 | u, i, m): zero without a click, h1*h2 with one.
    double forward_h(UserId u, ItemId i, bool clicked) const {
        if (!clicked) return 0.0;
        return forward_h1(u, i) * forward_h2(u, i);
    }

    double click_logit(UserId u, ItemId i) const {
        auto ub = user_base_row(u);
        auto ib = item_base_row(i);
        const double* w = params_.data() + off_click_w_;
        double acc = params_[off_click_b_];
        for (std::uint32_t k = 0; k < cfg_.embed_dim; ++k) acc += w[k] * ub[k] * ib[k];
        return acc;
    }
    double h1_logit(UserId u, ItemId i) const {
        auto ub = h1_user_row(u);
        auto ib = h1_item_row(i);
        const double* w = params_.data() + off_h1_w_ + static_cast<std::size_t>(u) * cfg_.embed_dim;
        double acc = params_[off_h1_b_];
        for (std::uint32_t k = 0; k < cfg_.embed_dim; ++k) acc += w[k] * ub[k] * ib[k];
        return acc;
    }
    double h2_logit(UserId u, ItemId i) const {
        return dot(h2_user_row(u), h2_item_row(i)) + params_[off_h2_b_];
    }
    double exposure_factor(ItemId i) const {
        if (!cfg_.exposure_enabled) return 1.0;
        return sigmoid(params_[off_expo_w_] * params_[off_item_expo_ + i]);
    }

    void save(std::ostream& out) const;
    static HcrModel load(std::istream& in);

private:
    void check_ids(UserId u, ItemId i) const {
        if (u >= cfg_.num_users || i >= cfg_.num_items) {
            throw InvalidInput("HcrModel: user/item id out of range");
        }
    }

    void build_layout() {
        const std::size_t d = cfg_.embed_dim;
        const std::size_t ud = static_cast<std::size_t>(cfg_.num_users) * d;
        const std::size_t id = static_cast<std::size_t>(cfg_.num_items) * d;
        std::size_t off = 0;
        off_user_base_ = off; off += ud;
        off_item_base_ = off; off += id;
        off_click_w_ = off; off += d;
        off_click_b_ = off; off += 1;
        off_h1_w_ = off; off += ud;
        off_h1_b_ = off; off += 1;
        off_h2_user_ = off; off += ud;
        off_h2_item_ = off; off += id;
        off_h2_b_ = off; off += 1;
        off_expo_w_ = off; off += 1;
        off_item_expo_ = off; off += cfg_.num_items;
        if (!cfg_.share_embeddings) {
            off_h1_user_ = off; off += ud;
            off_h1_item_ = off; off += id;
        } else {
            off_h1_user_ = off_h1_item_ = 0;
        }
        total_ = off;
    }

    /// Embedding tables ~ N(0, (0.1/sqrt(embed_dim))^2), biases 0. Two groups
    /// start at exactly 1 instead:
    ///  - the global mixing weights (w_f, w_1, w_e): their logits multiply
    ///    two or three small factors, and a near-zero mixing weight would
    ///    give those heads a systematic slow start against the plain
    ///    dot-product head;
    ///  - the h2 user table: h2 is then born as a per-item propensity head,
    ///    so the item-level like lift (where the hidden confounder lives)
    ///    flows into h2 from the first step, while user-specific structure
    ///    has to take the h1 path through the shared features. The user rows
    ///    differentiate later only where gradients demand it.
    void init_params(std::uint64_t seed) {
        Rng rng(mix_seed(seed, 11));
        const double scale = 0.1 / std::sqrt(static_cast<double>(cfg_.embed_dim));
        for (Tensor t : tensors()) {
            auto span = tensor_span(t);
            switch (t) {
                case Tensor::ClickBias:
                case Tensor::H1Bias:
                case Tensor::H2Bias:
                    span[0] = 0.0;
                    break;
                case Tensor::ClickWeight:
                case Tensor::H1Weight:
                case Tensor::ExposureWeight:
                    for (double& x : span) x = 1.0;
                    break;
                case Tensor::H2User:
                    // Item-propensity start only matters for the decomposed
                    // model; clean training uses this head standalone and
                    // gets an ordinary init.
                    for (double& x : span) x = cfg_.mode == ModelMode::Hcr ? 1.0 : scale * rng.normal();
                    break;
                case Tensor::ItemExposure:
                    for (double& x : span) x = 0.1 * rng.normal();
                    break;
                default:
                    for (double& x : span) x = scale * rng.normal();
                    break;
            }
        }
    }

    ModelConfig cfg_;
    std::vector<double> params_;
    std::size_t off_user_base_ = 0, off_item_base_ = 0, off_click_w_ = 0, off_click_b_ = 0;
    std::size_t off_h1_w_ = 0, off_h1_b_ = 0, off_h2_user_ = 0, off_h2_item_ = 0, off_h2_b_ = 0;
    std::size_t off_expo_w_ = 0, off_item_expo_ = 0, off_h1_user_ = 0, off_h1_item_ = 0;
    std::size_t total_ = 0;
};

namespace detail {

inline void write_u32_le(std::ostream& out, std::uint32_t x) {
    const std::array<char, 4> b = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff),
                                   static_cast<char>((x >> 16) & 0xff),
                                   static_cast<char>((x >> 24) & 0xff)};
    out.write(b.data(), 4);
}

inline std::uint32_t read_u32_le(std::istream& in) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw InvalidInput("checkpoint: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f64_le(std::ostream& out, double x) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    std::array<char, 8> b{};
    for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<char>((bits >> (8 * k)) & 0xff);
    out.write(b.data(), 8);
}

inline double read_f64_le(std::istream& in) {
    std::array<unsigned char, 8> b{};
    in.read(reinterpret_cast<char*>(b.data()), 8);
    if (!in) throw InvalidInput("checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(k)]) << (8 * k);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Checkpoint format: magic "HCR1"; u32 LE num_users, num_items, embed_dim,
/// flags (bit0 share_embeddings, bit1 exposure_enabled, bit2 CT mode); then
/// every parameter tensor as f64 LE in checkpoint order.
inline void HcrModel::save(std::ostream& out) const {
    out.write("HCR1", 4);
    detail::write_u32_le(out, cfg_.num_users);
    detail::write_u32_le(out, cfg_.num_items);
    detail::write_u32_le(out, cfg_.embed_dim);
    std::uint32_t flags = 0;
    if (cfg_.share_embeddings) flags |= 1u;
    if (cfg_.exposure_enabled) flags |= 2u;
    if (cfg_.mode == ModelMode::Ct) flags |= 4u;
    detail::write_u32_le(out, flags);
    for (double x : params_) detail::write_f64_le(out, x);
}

inline HcrModel HcrModel::load(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || std::string(magic.data(), 4) != "HCR1") {
        throw InvalidInput("checkpoint: bad magic, expected HCR1");
    }
    ModelConfig cfg;
    cfg.num_users = detail::read_u32_le(in);
    cfg.num_items = detail::read_u32_le(in);
    cfg.embed_dim = detail::read_u32_le(in);
    const std::uint32_t flags = detail::read_u32_le(in);
    cfg.share_embeddings = (flags & 1u) != 0;
    cfg.exposure_enabled = (flags & 2u) != 0;
    cfg.mode = (flags & 4u) != 0 ? ModelMode::Ct : ModelMode::Hcr;
    if (cfg.num_users == 0 || cfg.num_items == 0 || cfg.embed_dim == 0 ||
        cfg.num_users > (1u << 24) || cfg.num_items > (1u << 24) || cfg.embed_dim > (1u << 16)) {
        throw InvalidInput("checkpoint: implausible dimensions");
    }
    HcrModel model(cfg, 0);
    for (double& x : model.params_) x = detail::read_f64_le(in);
    in.peek();
    if (!in.eof()) throw InvalidInput("checkpoint: trailing bytes");
    return model;
}

/// Binary cross-entropy with probability clamping; the clamped region is
/// flat, so its derivative is reported as zero.
struct BceTerm {
    double loss;
    double dloss_dp;
};

inline BceTerm bce_term(double p, bool label) {
    constexpr double kEps = 1e-7;
    const bool clamped = p < kEps || p > 1.0 - kEps;
    const double ph = p < kEps ? kEps : (p > 1.0 - kEps ? 1.0 - kEps : p);
    const double loss = label ? -std::log(ph) : -std::log(1.0 - ph);
    const double y = label ? 1.0 : 0.0;
    const double grad = clamped ? 0.0 : (ph - y) / (ph * (1.0 - ph));
    return {loss, grad};
}

/// Multi-task loss over a click batch and a like batch (clicked records):
///
///   mean BCE(f(u,i), c)  +  beta * mean BCE(h1(u,i) * h2(u,i), l)
///
/// Returns the loss and accumulates exact analytic partials into `grads`
/// (which must be zero-initialized or hold partial sums to extend).
inline double accumulate_loss_gradients(const HcrModel& model,
                                        std::span<const Interaction> click_batch,
                                        std::span<const Interaction> like_batch, double beta,
                                        GradientBuffer& grads) {
    if (click_batch.empty()) throw InvalidInput("loss_gradients: empty click batch");
    if (like_batch.empty()) throw InvalidInput("loss_gradients: empty like batch");
    if (grads.size() != model.param_count()) throw InvalidInput("loss_gradients: gradient shape mismatch");

    const auto& cfg = model.config();
    const std::uint32_t d = cfg.embed_dim;
    const auto& p = model.params();
    double* g = grads.data();

    const auto [ub_off, ub_len] = model.tensor_range(Tensor::UserBase);
    const auto [ib_off, ib_len] = model.tensor_range(Tensor::ItemBase);
    const auto [cw_off, cw_len] = model.tensor_range(Tensor::ClickWeight);
    const auto [cb_off, cb_len] = model.tensor_range(Tensor::ClickBias);
    const auto [h1w_off, h1w_len] = model.tensor_range(Tensor::H1Weight);
    const auto [h1b_off, h1b_len] = model.tensor_range(Tensor::H1Bias);
    const auto [h2u_off, h2u_len] = model.tensor_range(Tensor::H2User);
    const auto [h2i_off, h2i_len] = model.tensor_range(Tensor::H2Item);
    const auto [h2b_off, h2b_len] = model.tensor_range(Tensor::H2Bias);
    const auto [ew_off, ew_len] = model.tensor_range(Tensor::ExposureWeight);
    const auto [ie_off, ie_len] = model.tensor_range(Tensor::ItemExposure);
    const std::size_t h1u_off = cfg.share_embeddings ? ub_off : model.tensor_range(Tensor::H1UserBase).first;
    const std::size_t h1i_off = cfg.share_embeddings ? ib_off : model.tensor_range(Tensor::H1ItemBase).first;

    double loss = 0.0;
    const double click_w = 1.0 / static_cast<double>(click_batch.size());
    for (const Interaction& r : click_batch) {
        const double* ub = p.data() + ub_off + static_cast<std::size_t>(r.user) * d;
        const double* ib = p.data() + ib_off + static_cast<std::size_t>(r.item) * d;
        const double* w = p.data() + cw_off;
        double logit = p[cb_off];
        for (std::uint32_t k = 0; k < d; ++k) logit += w[k] * ub[k] * ib[k];
        const double s = sigmoid(logit);
        double expo = 1.0, expo_logit = 0.0;
        if (cfg.exposure_enabled) {
            expo_logit = p[ew_off] * p[ie_off + r.item];
            expo = sigmoid(expo_logit);
        }
        const auto [l, dl_dp] = bce_term(s * expo, r.click);
        loss += click_w * l;

        const double da = click_w * dl_dp * s * (1.0 - s) * expo;
        g[cb_off] += da;
        double* g_ub = g + ub_off + static_cast<std::size_t>(r.user) * d;
        double* g_ib = g + ib_off + static_cast<std::size_t>(r.item) * d;
        double* g_w = g + cw_off;
        for (std::uint32_t k = 0; k < d; ++k) {
            g_w[k] += da * ub[k] * ib[k];
            g_ub[k] += da * w[k] * ib[k];
            g_ib[k] += da * w[k] * ub[k];
        }
        if (cfg.exposure_enabled) {
            const double dg_ = click_w * dl_dp * s * expo * (1.0 - expo);
            g[ew_off] += dg_ * p[ie_off + r.item];
            g[ie_off + r.item] += dg_ * p[ew_off];
        }
    }

    const double like_w = beta / static_cast<double>(like_batch.size());
    for (const Interaction& r : like_batch) {
        const double* ub = p.data() + h1u_off + static_cast<std::size_t>(r.user) * d;
        const double* ib = p.data() + h1i_off + static_cast<std::size_t>(r.item) * d;
        const double* w = p.data() + h1w_off + static_cast<std::size_t>(r.user) * d;
        double logit1 = p[h1b_off];
        for (std::uint32_t k = 0; k < d; ++k) logit1 += w[k] * ub[k] * ib[k];
        const double h1 = sigmoid(logit1);

        const double* pu = p.data() + h2u_off + static_cast<std::size_t>(r.user) * d;
        const double* qi = p.data() + h2i_off + static_cast<std::size_t>(r.item) * d;
        double logit2 = p[h2b_off];
        for (std::uint32_t k = 0; k < d; ++k) logit2 += pu[k] * qi[k];
        const double h2 = sigmoid(logit2);

        const auto [l, dl_dq] = bce_term(h1 * h2, r.like);
        loss += like_w * l;

        const double db = like_w * dl_dq * h1 * (1.0 - h1) * h2;
        const double dt = like_w * dl_dq * h1 * h2 * (1.0 - h2);
        g[h1b_off] += db;
        g[h2b_off] += dt;
        double* g_ub = g + h1u_off + static_cast<std::size_t>(r.user) * d;
        double* g_ib = g + h1i_off + static_cast<std::size_t>(r.item) * d;
        double* g_w = g + h1w_off + static_cast<std::size_t>(r.user) * d;
        double* g_pu = g + h2u_off + static_cast<std::size_t>(r.user) * d;
        double* g_qi = g + h2i_off + static_cast<std::size_t>(r.item) * d;
        for (std::uint32_t k = 0; k < d; ++k) {
            g_w[k] += db * ub[k] * ib[k];
            g_ub[k] += db * w[k] * ib[k];
            g_ib[k] += db * w[k] * ub[k];
            g_pu[k] += dt * qi[k];
            g_qi[k] += dt * pu[k];
        }
    }

    (void)ub_len; (void)ib_len; (void)cw_len; (void)cb_len; (void)h1w_len; (void)h1b_len;
    (void)h2u_len; (void)h2i_len; (void)h2b_len; (void)ew_len; (void)ie_len;
    return loss;
}

inline std::pair<double, GradientBuffer> loss_gradients(const HcrModel& model,
                                                        std::span<const Interaction> click_batch,
                                                        std::span<const Interaction> like_batch,
                                                        double beta) {
    GradientBuffer grads = model.zero_gradients();
    const double loss = accumulate_loss_gradients(model, click_batch, like_batch, beta, grads);
    return {loss, std::move(grads)};
}

/// Loss only, same computation path as loss_gradients (used by the
/// finite-difference checks).
inline double loss_value(const HcrModel& model, std::span<const Interaction> click_batch,
                         std::span<const Interaction> like_batch, double beta) {
    if (click_batch.empty()) throw InvalidInput("loss_value: empty click batch");
    if (like_batch.empty()) throw InvalidInput("loss_value: empty like batch");
    double loss = 0.0;
    const double click_w = 1.0 / static_cast<double>(click_batch.size());
    for (const Interaction& r : click_batch) {
        loss += click_w * bce_term(model.forward_click(r.user, r.item), r.click).loss;
    }
    const double like_w = beta / static_cast<double>(like_batch.size());
    for (const Interaction& r : like_batch) {
        loss += like_w * bce_term(model.forward_h1(r.user, r.item) * model.forward_h2(r.user, r.item),
                                  r.like).loss;
    }
    return loss;
}

/// Single-task objective for the clean-training baseline: BCE of the h2 head
/// against like labels over clicked records. Only h2 tensors receive grads.
inline double accumulate_ct_loss_gradients(const HcrModel& model,
                                           std::span<const Interaction> like_batch,
                                           GradientBuffer& grads) {
    if (like_batch.empty()) throw InvalidInput("ct loss: empty like batch");
    if (grads.size() != model.param_count()) throw InvalidInput("ct loss: gradient shape mismatch");
    const std::uint32_t d = model.embed_dim();
    const auto& p = model.params();
    double* g = grads.data();
    const auto [h2u_off, h2u_len] = model.tensor_range(Tensor::H2User);
    const auto [h2i_off, h2i_len] = model.tensor_range(Tensor::H2Item);
    const auto [h2b_off, h2b_len] = model.tensor_range(Tensor::H2Bias);
    (void)h2u_len; (void)h2i_len; (void)h2b_len;

    double loss = 0.0;
    const double w = 1.0 / static_cast<double>(like_batch.size());
    for (const Interaction& r : like_batch) {
        const double* pu = p.data() + h2u_off + static_cast<std::size_t>(r.user) * d;
        const double* qi = p.data() + h2i_off + static_cast<std::size_t>(r.item) * d;
        double logit = p[h2b_off];
        for (std::uint32_t k = 0; k < d; ++k) logit += pu[k] * qi[k];
        const double s = sigmoid(logit);
        const auto [l, dl_dp] = bce_term(s, r.like);
        loss += w * l;
        const double dt = w * dl_dp * s * (1.0 - s);
        g[h2b_off] += dt;
        double* g_pu = g + h2u_off + static_cast<std::size_t>(r.user) * d;
        double* g_qi = g + h2i_off + static_cast<std::size_t>(r.item) * d;
        for (std::uint32_t k = 0; k < d; ++k) {
            g_pu[k] += dt * qi[k];
            g_qi[k] += dt * pu[k];
        }
    }
    return loss;
}

}  // namespace hcr
