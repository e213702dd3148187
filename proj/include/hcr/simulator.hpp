#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hcr/common.hpp"
#include "hcr/interactions.hpp"

namespace hcr {

/// Structural parameters of the synthetic world. The generative process:
///
///   v_i  ~ categorical(confounder_prior)                      (hidden confounder)
///   x_i  = base_i + gamma_item * contrast(v_i) * dir + noise  (item features)
///   click  ~ Bernoulli( sigma(<p_u, x_i> + exposure_strength * e_i + click_bias) )
///   like | click=1 ~ Bernoulli( sigma(<q_u, x_i> + gamma_like * contrast(v_i) + like_bias) )
///   like | click=0 = 0
///
/// p_u and q_u are independent per-user preference vectors: what draws a
/// click (cover, presentation) and what earns a like (satisfaction) are
/// distinct traits that meet in the same item features. The confounder
/// reaches clicks only through the item features, and reaches likes both
/// through the features and through the direct gamma_like term -- the latter
/// is the spurious path a deconfounded ranker has to drop.
struct WorldSpec {
    std::uint32_t num_users = 200;
    std::uint32_t num_items = 300;
    std::uint32_t embed_dim = 2;
    std::uint32_t confounder_cardinality = 2;
    std::vector<double> confounder_prior = {0.5, 0.5};
    double gamma_item = 2.0;       // confounder -> item features
    double gamma_like = 2.0;       // confounder -> like logit (the hidden bias)
    double click_bias = 1.5;
    double like_bias = -0.5;
    double exposure_strength = 0.25;
    double noise_scale = 0.1;
    std::uint32_t impressions_per_user = 150;

    void validate() const {
        if (num_users == 0 || num_items == 0 || embed_dim == 0) {
            throw InvalidInput("WorldSpec: dimensions must be positive");
        }
        if (confounder_cardinality < 2) {
            throw InvalidInput("WorldSpec: confounder_cardinality must be >= 2");
        }
        if (confounder_prior.size() != confounder_cardinality) {
            throw InvalidInput("WorldSpec: confounder_prior size mismatch");
        }
        double total = 0.0;
        for (double p : confounder_prior) {
            if (p < 0.0) throw InvalidInput("WorldSpec: confounder_prior entries must be >= 0");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw InvalidInput("WorldSpec: confounder_prior must sum to 1");
        }
        if (exposure_strength < 0.0 || noise_scale < 0.0) {
            throw InvalidInput("WorldSpec: exposure_strength and noise_scale must be >= 0");
        }
        if (impressions_per_user == 0 || impressions_per_user > num_items) {
            throw InvalidInput("WorldSpec: impressions_per_user must be in [1, num_items]");
        }
    }
};

/// Centered equally spaced contrast over the confounder categories:
/// {-1,+1} for two categories, linspace(-1,1) otherwise; mean effect is zero
/// under a uniform prior.
inline double confounder_contrast(std::uint32_t v, std::uint32_t cardinality) {
    return -1.0 + 2.0 * static_cast<double>(v) / static_cast<double>(cardinality - 1);
}

class SyntheticWorld {
public:
    /// Deterministic for fixed (spec, seed). Preference/feature entries are
    /// i.i.d. N(0,1)/sqrt(embed_dim). Each random quantity draws from its own
    /// sub-stream, so e.g. a different prior changes v_i but not the noise.
    SyntheticWorld(WorldSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
        spec_.validate();
        const auto d = spec_.embed_dim;
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));

        Rng pref_rng(mix_seed(seed, 1));
        user_preference_.resize(static_cast<std::size_t>(spec_.num_users) * d);
        for (double& x : user_preference_) x = pref_rng.normal() * scale;

        Rng like_pref_rng(mix_seed(seed, 8));
        user_like_preference_.resize(static_cast<std::size_t>(spec_.num_users) * d);
        for (double& x : user_like_preference_) x = like_pref_rng.normal() * scale;

        Rng base_rng(mix_seed(seed, 2));
        std::vector<double> base(static_cast<std::size_t>(spec_.num_items) * d);
        for (double& x : base) x = base_rng.normal() * scale;

        Rng conf_rng(mix_seed(seed, 3));
        item_confounder_.resize(spec_.num_items);
        for (auto& v : item_confounder_) {
            v = static_cast<std::uint32_t>(conf_rng.categorical(spec_.confounder_prior));
        }

        Rng dir_rng(mix_seed(seed, 4));
        confounder_direction_.resize(d);
        double norm = 0.0;
        for (double& x : confounder_direction_) {
            x = dir_rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : confounder_direction_) x /= norm;

        Rng noise_rng(mix_seed(seed, 5));
        item_feature_ = base;
        for (ItemId i = 0; i < spec_.num_items; ++i) {
            const double c = confounder_contrast(item_confounder_[i], spec_.confounder_cardinality);
            for (std::uint32_t k = 0; k < d; ++k) {
                item_feature_[static_cast<std::size_t>(i) * d + k] +=
                    spec_.gamma_item * c * confounder_direction_[k] +
                    spec_.noise_scale * noise_rng.normal() * scale;
            }
        }

        Rng expo_rng(mix_seed(seed, 6));
        item_exposure_.resize(spec_.num_items);
        for (double& x : item_exposure_) x = expo_rng.normal();
    }

    const WorldSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }

    std::uint32_t item_confounder(ItemId i) const { return item_confounder_[i]; }
    double item_exposure(ItemId i) const { return item_exposure_[i]; }

    std::span<const double> user_preference(UserId u) const {
        return {user_preference_.data() + static_cast<std::size_t>(u) * spec_.embed_dim, spec_.embed_dim};
    }
    std::span<const double> user_like_preference(UserId u) const {
        return {user_like_preference_.data() + static_cast<std::size_t>(u) * spec_.embed_dim,
                spec_.embed_dim};
    }
    std::span<const double> item_feature(ItemId i) const {
        return {item_feature_.data() + static_cast<std::size_t>(i) * spec_.embed_dim, spec_.embed_dim};
    }

    /// Structural click probability; the confounder enters only through the
    /// realized item features, so this is also the post-intervention click rate.
    double click_probability(UserId u, ItemId i) const {
        return sigmoid(dot(user_preference(u), item_feature(i)) +
                       spec_.exposure_strength * item_exposure_[i] + spec_.click_bias);
    }

    /// Like logit without the confounder term.
    double like_logit_base(UserId u, ItemId i) const {
        return dot(user_like_preference(u), item_feature(i)) + spec_.like_bias;
    }

    /// P(L=1 | u, do(i)): do(i) fixes the realized item features and severs
    /// V -> I, so the direct confounder effect is averaged over the prior.
    /// Exact, no sampling.
    double true_interventional(UserId u, ItemId i) const {
        check_ids(u, i);
        const double p_click = click_probability(u, i);
        const double base = like_logit_base(u, i);
        double like = 0.0;
        for (std::uint32_t v = 0; v < spec_.confounder_cardinality; ++v) {
            like += spec_.confounder_prior[v] *
                    sigmoid(base + spec_.gamma_like * confounder_contrast(v, spec_.confounder_cardinality));
        }
        return p_click * like;
    }

    /// P(L=1 | u, i) under the item's realized confounder category: what a
    /// purely correlational model converges to.
    double observational_like_rate(UserId u, ItemId i) const {
        check_ids(u, i);
        const double c = confounder_contrast(item_confounder_[i], spec_.confounder_cardinality);
        return click_probability(u, i) * sigmoid(like_logit_base(u, i) + spec_.gamma_like * c);
    }

private:
    void check_ids(UserId u, ItemId i) const {
        if (u >= spec_.num_users || i >= spec_.num_items) {
            throw InvalidInput("SyntheticWorld: user/item id out of range");
        }
    }

    WorldSpec spec_;
    std::uint64_t seed_ = 0;
    std::vector<double> user_preference_;       // [num_users][embed_dim], click side
    std::vector<double> user_like_preference_;  // [num_users][embed_dim], like side
    std::vector<double> item_feature_;          // [num_items][embed_dim]
    std::vector<std::uint32_t> item_confounder_;
    std::vector<double> item_exposure_;
    std::vector<double> confounder_direction_;
};

inline SyntheticWorld build_world(const WorldSpec& spec, std::uint64_t seed) {
    return SyntheticWorld(spec, seed);
}

/// Exact interventional like probabilities for causal-fidelity evaluation.
struct GroundTruth {
    std::function<double(UserId, ItemId)> do_like_probability;
};

inline GroundTruth ground_truth(const SyntheticWorld& world) {
    return GroundTruth{[&world](UserId u, ItemId i) { return world.true_interventional(u, i); }};
}

/// Samples the observational log. Per user, impressions_per_user distinct
/// items are drawn uniformly; click and like bits follow the structural
/// equations. Records are emitted round-robin across users (user-major draws,
/// interleaved timestamps) so a chronological prefix covers every user.
inline InteractionLog simulate_log(const SyntheticWorld& world, std::uint64_t seed) {
    const WorldSpec& spec = world.spec();
    Rng rng(mix_seed(seed, 7));

    const std::uint32_t rounds = spec.impressions_per_user;
    std::vector<Interaction> slots(static_cast<std::size_t>(rounds) * spec.num_users);
    for (UserId u = 0; u < spec.num_users; ++u) {
        const auto items = rng.sample_without_replacement(spec.num_items, rounds);
        for (std::uint32_t t = 0; t < rounds; ++t) {
            const ItemId i = items[t];
            // Both uniforms are always drawn so the stream position never
            // depends on the click outcome.
            const double u_click = rng.uniform();
            const double u_like = rng.uniform();
            const bool clicked = u_click < world.click_probability(u, i);
            const double c =
                confounder_contrast(world.item_confounder(i), spec.confounder_cardinality);
            const double p_like = sigmoid(world.like_logit_base(u, i) + spec.gamma_like * c);
            const bool liked = clicked && u_like < p_like;

            Interaction rec;
            rec.user = u;
            rec.item = i;
            rec.timestamp = static_cast<std::int64_t>(t) * spec.num_users + u;
            rec.click = clicked;
            rec.like = liked;
            slots[static_cast<std::size_t>(t) * spec.num_users + u] = rec;
        }
    }

    InteractionLog log;
    log.num_users = spec.num_users;
    log.num_items = spec.num_items;
    log.interactions = std::move(slots);  // slot order == timestamp order
    return log;
}

}  // namespace hcr
