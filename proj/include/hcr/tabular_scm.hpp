#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hcr/common.hpp"

namespace hcr {

/// Fully enumerable discrete structural model
///
///   P(u,v,i,m,l) = P(u) P(v) P(i|v) P(m|u,i) P(l|u,m,v)
///
/// i.e. the confounded graph with the mediator intercepting every I -> L
/// path. P(m|u,i) not depending on v and P(l|u,m,v) not depending on i are
/// exactly the structural assumptions the front-door formula needs, so the
/// identity checks below hold for every valid instance.
///
/// Positivity of p_i_given_v and p_m_given_ui is required: the observational
/// conditionals in the front-door estimate are undefined otherwise.
struct TabularScm {
    std::size_t n_users = 0, n_items = 0, n_confounders = 0, n_mediators = 0;

    std::vector<double> p_u;           // [u]
    std::vector<double> p_v;           // [v]
    std::vector<double> p_i_given_v;   // [v][i]
    std::vector<double> p_m_given_ui;  // [u][i][m]
    std::vector<double> p_l_given_umv; // [u][m][v], probability of l=1

    double i_given_v(std::size_t v, std::size_t i) const { return p_i_given_v[v * n_items + i]; }
    double m_given_ui(std::size_t u, std::size_t i, std::size_t m) const {
        return p_m_given_ui[(u * n_items + i) * n_mediators + m];
    }
    double l_given_umv(std::size_t u, std::size_t m, std::size_t v) const {
        return p_l_given_umv[(u * n_mediators + m) * n_confounders + v];
    }

    void validate(double tol = 1e-12) const {
        auto check_dist = [tol](const double* p, std::size_t n, const char* what) {
            double total = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (p[k] < 0.0) throw InvalidInput(std::string(what) + ": negative probability");
                total += p[k];
            }
            if (std::abs(total - 1.0) > tol) {
                throw InvalidInput(std::string(what) + ": row does not sum to 1");
            }
        };
        if (p_u.size() != n_users || p_v.size() != n_confounders ||
            p_i_given_v.size() != n_confounders * n_items ||
            p_m_given_ui.size() != n_users * n_items * n_mediators ||
            p_l_given_umv.size() != n_users * n_mediators * n_confounders) {
            throw InvalidInput("TabularScm: table shape mismatch");
        }
        check_dist(p_u.data(), n_users, "p_u");
        check_dist(p_v.data(), n_confounders, "p_v");
        for (std::size_t v = 0; v < n_confounders; ++v) {
            check_dist(&p_i_given_v[v * n_items], n_items, "p_i_given_v");
        }
        for (std::size_t u = 0; u < n_users; ++u) {
            for (std::size_t i = 0; i < n_items; ++i) {
                check_dist(&p_m_given_ui[(u * n_items + i) * n_mediators], n_mediators, "p_m_given_ui");
            }
        }
        for (double p : p_i_given_v) {
            if (p <= 0.0) throw InvalidInput("TabularScm: p_i_given_v must be strictly positive");
        }
        for (double p : p_m_given_ui) {
            if (p <= 0.0) throw InvalidInput("TabularScm: p_m_given_ui must be strictly positive");
        }
        for (double p : p_l_given_umv) {
            if (p < 0.0 || p > 1.0) throw InvalidInput("TabularScm: p_l_given_umv out of [0,1]");
        }
    }
};

/// Enumerated observational joint over (u,v,i,m,l).
struct JointTable {
    std::size_t n_users = 0, n_items = 0, n_confounders = 0, n_mediators = 0;
    std::vector<double> table;  // [u][v][i][m][l]

    double& at(std::size_t u, std::size_t v, std::size_t i, std::size_t m, std::size_t l) {
        return table[(((u * n_confounders + v) * n_items + i) * n_mediators + m) * 2 + l];
    }
    double at(std::size_t u, std::size_t v, std::size_t i, std::size_t m, std::size_t l) const {
        return table[(((u * n_confounders + v) * n_items + i) * n_mediators + m) * 2 + l];
    }

    double total_mass() const {
        double total = 0.0;
        for (double p : table) total += p;
        return total;
    }
};

inline JointTable enumerate_joint(const TabularScm& scm) {
    scm.validate();
    JointTable joint;
    joint.n_users = scm.n_users;
    joint.n_items = scm.n_items;
    joint.n_confounders = scm.n_confounders;
    joint.n_mediators = scm.n_mediators;
    joint.table.assign(scm.n_users * scm.n_confounders * scm.n_items * scm.n_mediators * 2, 0.0);
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        for (std::size_t v = 0; v < scm.n_confounders; ++v) {
            for (std::size_t i = 0; i < scm.n_items; ++i) {
                for (std::size_t m = 0; m < scm.n_mediators; ++m) {
                    const double base =
                        scm.p_u[u] * scm.p_v[v] * scm.i_given_v(v, i) * scm.m_given_ui(u, i, m);
                    const double p_like = scm.l_given_umv(u, m, v);
                    joint.at(u, v, i, m, 1) = base * p_like;
                    joint.at(u, v, i, m, 0) = base * (1.0 - p_like);
                }
            }
        }
    }
    return joint;
}

/// Interventional ground truth by truncated factorization: deleting P(i|v)
/// and fixing I=i gives  sum_v P(v) sum_m P(m|u,i) P(l=1|u,m,v).
inline double do_probability(const TabularScm& scm, std::size_t u, std::size_t i) {
    double total = 0.0;
    for (std::size_t v = 0; v < scm.n_confounders; ++v) {
        double inner = 0.0;
        for (std::size_t m = 0; m < scm.n_mediators; ++m) {
            inner += scm.m_given_ui(u, i, m) * scm.l_given_umv(u, m, v);
        }
        total += scm.p_v[v] * inner;
    }
    return total;
}

/// Observational quantities needed by the front-door formula, all derived
/// from the enumerated joint. No access to p_v or p_l_given_umv.
struct ObservationalView {
    const TabularScm* scm;
    JointTable joint;

    /// P(i) = sum over everything else.
    double item_marginal(std::size_t i) const {
        double total = 0.0;
        for (std::size_t u = 0; u < joint.n_users; ++u) {
            for (std::size_t v = 0; v < joint.n_confounders; ++v) {
                for (std::size_t m = 0; m < joint.n_mediators; ++m) {
                    total += joint.at(u, v, i, m, 0) + joint.at(u, v, i, m, 1);
                }
            }
        }
        return total;
    }

    /// P(l=1 | u, i, m) from the joint; throws if the conditioning event has
    /// zero mass (positivity violated).
    double like_given_uim(std::size_t u, std::size_t i, std::size_t m) const {
        double num = 0.0, den = 0.0;
        for (std::size_t v = 0; v < joint.n_confounders; ++v) {
            num += joint.at(u, v, i, m, 1);
            den += joint.at(u, v, i, m, 0) + joint.at(u, v, i, m, 1);
        }
        if (den <= 0.0) throw InvalidInput("front-door: zero-mass conditional P(l|u,i,m)");
        return num / den;
    }

    /// P(m | u, i) from the joint (should equal p_m_given_ui by the collider
    /// argument; the identity suite asserts it).
    double mediator_given_ui(std::size_t u, std::size_t i, std::size_t m) const {
        double num = 0.0, den = 0.0;
        for (std::size_t v = 0; v < joint.n_confounders; ++v) {
            num += joint.at(u, v, i, m, 0) + joint.at(u, v, i, m, 1);
            for (std::size_t mm = 0; mm < joint.n_mediators; ++mm) {
                den += joint.at(u, v, i, mm, 0) + joint.at(u, v, i, mm, 1);
            }
        }
        if (den <= 0.0) throw InvalidInput("front-door: zero-mass conditional P(m|u,i)");
        return num / den;
    }
};

inline ObservationalView observational_view(const TabularScm& scm) {
    return ObservationalView{&scm, enumerate_joint(scm)};
}

/// Front-door adjustment with explicit item weights in place of P(i');
/// passing anything but the joint marginal breaks the identity, which is
/// what the oracle-check fault injection exploits.
inline double frontdoor_estimate_weighted(const ObservationalView& view, std::size_t u, std::size_t i,
                                          std::span<const double> item_weights) {
    const TabularScm& scm = *view.scm;
    if (item_weights.size() != scm.n_items) {
        throw InvalidInput("frontdoor_estimate: item weight size mismatch");
    }
    double total = 0.0;
    for (std::size_t m = 0; m < scm.n_mediators; ++m) {
        double adjusted = 0.0;
        for (std::size_t j = 0; j < scm.n_items; ++j) {
            adjusted += view.like_given_uim(u, j, m) * item_weights[j];
        }
        total += scm.m_given_ui(u, i, m) * adjusted;
    }
    return total;
}

/// Front-door adjustment, purely from observational data:
///
///   sum_m P(m|u,i) sum_{i'} P(l=1|u,i',m) P(i')
///
/// P(m|u,i) is read off the mediator table (licensed by the collider
/// property, asserted separately); P(l|u,i',m) and P(i') come from the
/// enumerated joint. Must reproduce do_probability exactly on every positive
/// TabularScm.
inline double frontdoor_estimate(const ObservationalView& view, std::size_t u, std::size_t i) {
    const TabularScm& scm = *view.scm;
    std::vector<double> item_prior(scm.n_items);
    for (std::size_t j = 0; j < scm.n_items; ++j) item_prior[j] = view.item_marginal(j);
    return frontdoor_estimate_weighted(view, u, i, item_prior);
}

inline double frontdoor_estimate(const TabularScm& scm, std::size_t u, std::size_t i) {
    return frontdoor_estimate(observational_view(scm), u, i);
}

/// Both sides of the backdoor-adjustment step for the mediator effect
/// P(l=1|u,do(m)): structural left side sum_v P(v) P(l|u,m,v), observational
/// right side sum_i P(l=1|u,i,m) P(i). Returned as a pair for assertion.
inline std::pair<double, double> backdoor_mediator_effect(const ObservationalView& view, std::size_t u,
                                                          std::size_t m) {
    const TabularScm& scm = *view.scm;
    double left = 0.0;
    for (std::size_t v = 0; v < scm.n_confounders; ++v) {
        left += scm.p_v[v] * scm.l_given_umv(u, m, v);
    }
    double right = 0.0;
    for (std::size_t i = 0; i < scm.n_items; ++i) {
        right += view.like_given_uim(u, i, m) * view.item_marginal(i);
    }
    return {left, right};
}

inline std::pair<double, double> backdoor_mediator_effect(const TabularScm& scm, std::size_t u,
                                                          std::size_t m) {
    return backdoor_mediator_effect(observational_view(scm), u, m);
}

/// Naive conditional P(l=1|u,i) from the joint; differs from do_probability
/// whenever the confounder actually moves both items and likes.
inline double naive_conditional(const ObservationalView& view, std::size_t u, std::size_t i) {
    double num = 0.0, den = 0.0;
    for (std::size_t v = 0; v < view.joint.n_confounders; ++v) {
        for (std::size_t m = 0; m < view.joint.n_mediators; ++m) {
            num += view.joint.at(u, v, i, m, 1);
            den += view.joint.at(u, v, i, m, 0) + view.joint.at(u, v, i, m, 1);
        }
    }
    if (den <= 0.0) throw InvalidInput("naive_conditional: zero-mass event");
    return num / den;
}

/// Random strictly positive SCM: rows are normalized i.i.d. positive draws,
/// entries clamped to >= 1e-3 (then renormalized) to keep every conditional
/// in the front-door formula well-defined. Dimensions are capped small;
/// the identities are dimension-independent and enumeration stays trivial.
inline TabularScm random_scm(std::size_t n_users, std::size_t n_items, std::size_t n_confounders,
                             std::size_t n_mediators, std::uint64_t seed) {
    if (n_users > 8 || n_items > 8 || n_mediators > 8 || n_confounders > 4) {
        throw InvalidInput("random_scm: dimensions exceed enumeration caps");
    }
    if (n_users == 0 || n_items == 0 || n_confounders == 0 || n_mediators == 0) {
        throw InvalidInput("random_scm: dimensions must be positive");
    }
    Rng rng(seed);
    auto random_row = [&rng](double* p, std::size_t n) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            p[k] = 0.05 + rng.uniform();  // bounded away from zero before clamping
            total += p[k];
        }
        for (std::size_t k = 0; k < n; ++k) p[k] /= total;
        // Clamp-and-renormalize keeps strict positivity even for skewed draws.
        total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (p[k] < 1e-3) p[k] = 1e-3;
            total += p[k];
        }
        for (std::size_t k = 0; k < n; ++k) p[k] /= total;
    };

    TabularScm scm;
    scm.n_users = n_users;
    scm.n_items = n_items;
    scm.n_confounders = n_confounders;
    scm.n_mediators = n_mediators;
    scm.p_u.resize(n_users);
    random_row(scm.p_u.data(), n_users);
    scm.p_v.resize(n_confounders);
    random_row(scm.p_v.data(), n_confounders);
    scm.p_i_given_v.resize(n_confounders * n_items);
    for (std::size_t v = 0; v < n_confounders; ++v) random_row(&scm.p_i_given_v[v * n_items], n_items);
    scm.p_m_given_ui.resize(n_users * n_items * n_mediators);
    for (std::size_t u = 0; u < n_users; ++u) {
        for (std::size_t i = 0; i < n_items; ++i) {
            random_row(&scm.p_m_given_ui[(u * n_items + i) * n_mediators], n_mediators);
        }
    }
    scm.p_l_given_umv.resize(n_users * n_mediators * n_confounders);
    for (double& p : scm.p_l_given_umv) p = 0.02 + 0.96 * rng.uniform();
    scm.validate();
    return scm;
}

}  // namespace hcr
