#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hcr/common.hpp"
#include "hcr/tabular_scm.hpp"

using namespace hcr;

namespace {

// The worked example: P(m=1|i=1)=0.9, uniform V prior, like table
// (m,v) -> {(1,1):0.9, (1,0):0.5, (0,1):0.2, (0,0):0.1}; the interventional
// like probability at i=1 enumerates to 0.645 by hand.
TabularScm worked_example() {
    TabularScm scm;
    scm.n_users = 2;
    scm.n_items = 2;
    scm.n_confounders = 2;
    scm.n_mediators = 2;
    scm.p_u = {0.5, 0.5};
    scm.p_v = {0.5, 0.5};
    scm.p_i_given_v = {0.6, 0.4,   // v=0
                       0.3, 0.7};  // v=1
    scm.p_m_given_ui.assign(scm.n_users * scm.n_items * scm.n_mediators, 0.0);
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        scm.p_m_given_ui[(u * scm.n_items + 0) * 2 + 0] = 0.5;
        scm.p_m_given_ui[(u * scm.n_items + 0) * 2 + 1] = 0.5;
        scm.p_m_given_ui[(u * scm.n_items + 1) * 2 + 0] = 0.1;
        scm.p_m_given_ui[(u * scm.n_items + 1) * 2 + 1] = 0.9;
    }
    scm.p_l_given_umv.assign(scm.n_users * scm.n_mediators * scm.n_confounders, 0.0);
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        scm.p_l_given_umv[(u * 2 + 0) * 2 + 0] = 0.1;  // m=0,v=0
        scm.p_l_given_umv[(u * 2 + 0) * 2 + 1] = 0.2;  // m=0,v=1
        scm.p_l_given_umv[(u * 2 + 1) * 2 + 0] = 0.5;  // m=1,v=0
        scm.p_l_given_umv[(u * 2 + 1) * 2 + 1] = 0.9;  // m=1,v=1
    }
    scm.validate();
    return scm;
}

}  // namespace

TEST_CASE("enumerate_joint: uniform tables give a uniform base measure") {
    TabularScm scm;
    scm.n_users = 2;
    scm.n_items = 2;
    scm.n_confounders = 2;
    scm.n_mediators = 2;
    scm.p_u = {0.5, 0.5};
    scm.p_v = {0.5, 0.5};
    scm.p_i_given_v = {0.5, 0.5, 0.5, 0.5};
    scm.p_m_given_ui.assign(8, 0.5);
    scm.p_l_given_umv.assign(8, 0.3);
    const JointTable joint = enumerate_joint(scm);
    const double base = 1.0 / 16.0;
    for (std::size_t u = 0; u < 2; ++u) {
        for (std::size_t v = 0; v < 2; ++v) {
            for (std::size_t i = 0; i < 2; ++i) {
                for (std::size_t m = 0; m < 2; ++m) {
                    CHECK(joint.at(u, v, i, m, 1) == Catch::Approx(base * 0.3).epsilon(1e-14));
                    CHECK(joint.at(u, v, i, m, 0) == Catch::Approx(base * 0.7).epsilon(1e-14));
                }
            }
        }
    }
}

TEST_CASE("enumerate_joint: total mass is 1") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TabularScm scm = random_scm(3, 4, 2, 3, seed);
        const JointTable joint = enumerate_joint(scm);
        CHECK(std::abs(joint.total_mass() - 1.0) <= 1e-10);
    }
}

TEST_CASE("enumerate_joint: item marginal matches the direct mixture") {
    const TabularScm scm = random_scm(3, 4, 2, 3, 42);
    const ObservationalView view = observational_view(scm);
    for (std::size_t i = 0; i < scm.n_items; ++i) {
        double direct = 0.0;
        for (std::size_t v = 0; v < scm.n_confounders; ++v) {
            direct += scm.p_v[v] * scm.i_given_v(v, i);
        }
        CHECK(std::abs(view.item_marginal(i) - direct) <= 1e-12);
    }
}

TEST_CASE("do_probability: constant outcome table collapses to that constant") {
    TabularScm scm = random_scm(3, 4, 2, 3, 7);
    for (double& p : scm.p_l_given_umv) p = 0.37;
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        for (std::size_t i = 0; i < scm.n_items; ++i) {
            CHECK(do_probability(scm, u, i) == Catch::Approx(0.37).margin(1e-14));
        }
    }
}

TEST_CASE("do_probability: reproduces the hand-enumerated 0.645") {
    const TabularScm scm = worked_example();
    CHECK(std::abs(do_probability(scm, 0, 1) - 0.645) <= 1e-12);
    CHECK(std::abs(do_probability(scm, 1, 1) - 0.645) <= 1e-12);
}

TEST_CASE("do_probability: agrees with truncated-factorization Monte Carlo") {
    const TabularScm scm = random_scm(3, 4, 2, 3, 99);
    const std::size_t u = 1, i = 2;
    const double exact = do_probability(scm, u, i);

    Rng rng(123);
    const std::size_t n = 1000000;
    std::size_t likes = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t v = rng.categorical(scm.p_v);
        const std::size_t m = rng.categorical(
            std::span<const double>(&scm.p_m_given_ui[(u * scm.n_items + i) * scm.n_mediators],
                                    scm.n_mediators));
        likes += rng.uniform() < scm.l_given_umv(u, m, v) ? 1 : 0;
    }
    const double estimate = static_cast<double>(likes) / static_cast<double>(n);
    const double se = std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(n));
    CHECK(std::abs(estimate - exact) <= 3.0 * se);
}

TEST_CASE("frontdoor_estimate: equals the naive conditional when V is inert") {
    TabularScm scm = random_scm(3, 4, 2, 3, 5);
    // Make the like table v-independent: no confounding left to remove.
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        for (std::size_t m = 0; m < scm.n_mediators; ++m) {
            const double p = scm.l_given_umv(u, m, 0);
            for (std::size_t v = 0; v < scm.n_confounders; ++v) {
                scm.p_l_given_umv[(u * scm.n_mediators + m) * scm.n_confounders + v] = p;
            }
        }
    }
    const ObservationalView view = observational_view(scm);
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        for (std::size_t i = 0; i < scm.n_items; ++i) {
            CHECK(std::abs(frontdoor_estimate(view, u, i) - naive_conditional(view, u, i)) <= 1e-12);
        }
    }
}

TEST_CASE("frontdoor_estimate: reproduces the hand-enumerated do probability") {
    const TabularScm scm = worked_example();
    const ObservationalView view = observational_view(scm);
    CHECK(std::abs(frontdoor_estimate(view, 0, 1) - 0.645) <= 1e-12);
}

TEST_CASE("frontdoor identity sweep over 100 random positive SCMs") {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const TabularScm scm = random_scm(4, 5, 3, 4, seed);
        const ObservationalView view = observational_view(scm);
        for (std::size_t u = 0; u < scm.n_users; ++u) {
            for (std::size_t i = 0; i < scm.n_items; ++i) {
                worst = std::max(worst, std::abs(frontdoor_estimate(view, u, i) -
                                                 do_probability(scm, u, i)));
            }
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("backdoor_mediator_effect: v-independent table gives the table value") {
    TabularScm scm = random_scm(2, 3, 2, 2, 11);
    for (std::size_t u = 0; u < scm.n_users; ++u) {
        for (std::size_t m = 0; m < scm.n_mediators; ++m) {
            for (std::size_t v = 0; v < scm.n_confounders; ++v) {
                scm.p_l_given_umv[(u * scm.n_mediators + m) * scm.n_confounders + v] =
                    0.1 + 0.2 * static_cast<double>(m);
            }
        }
    }
    const auto [left, right] = backdoor_mediator_effect(scm, 0, 1);
    CHECK(left == Catch::Approx(0.3).margin(1e-12));
    CHECK(right == Catch::Approx(0.3).margin(1e-10));
}

TEST_CASE("backdoor_mediator_effect: hand-enumerated 0.70 and identity sweep") {
    const TabularScm scm = worked_example();
    const auto [left, right] = backdoor_mediator_effect(scm, 0, 1);
    CHECK(std::abs(left - 0.70) <= 1e-12);
    CHECK(std::abs(right - 0.70) <= 1e-10);

    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const TabularScm rand = random_scm(3, 4, 2, 3, seed);
        const ObservationalView view = observational_view(rand);
        for (std::size_t u = 0; u < rand.n_users; ++u) {
            for (std::size_t m = 0; m < rand.n_mediators; ++m) {
                const auto [l, r] = backdoor_mediator_effect(view, u, m);
                worst = std::max(worst, std::abs(l - r));
            }
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("collider property: joint-derived P(m|u,i) equals the table") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const TabularScm scm = random_scm(3, 4, 3, 3, seed);
        const ObservationalView view = observational_view(scm);
        for (std::size_t u = 0; u < scm.n_users; ++u) {
            for (std::size_t i = 0; i < scm.n_items; ++i) {
                for (std::size_t m = 0; m < scm.n_mediators; ++m) {
                    CHECK(std::abs(view.mediator_given_ui(u, i, m) - scm.m_given_ui(u, i, m)) <=
                          1e-12);
                }
            }
        }
    }
}

TEST_CASE("confounding witness: naive conditional is biased when V moves both paths") {
    TabularScm scm;
    scm.n_users = 1;
    scm.n_items = 2;
    scm.n_confounders = 2;
    scm.n_mediators = 2;
    scm.p_u = {1.0};
    scm.p_v = {0.5, 0.5};
    scm.p_i_given_v = {0.95, 0.05,   // v=0 almost always item 0
                       0.05, 0.95};  // v=1 almost always item 1
    scm.p_m_given_ui.assign(4, 0.5);
    // Strong direct effect of V on likes, same for both mediators.
    scm.p_l_given_umv = {0.05, 0.95, 0.05, 0.95};
    scm.validate();

    const ObservationalView view = observational_view(scm);
    const double naive0 = naive_conditional(view, 0, 0);
    const double do0 = do_probability(scm, 0, 0);
    CHECK(std::abs(do0 - 0.5) <= 1e-12);  // prior-averaged
    CHECK(std::abs(naive0 - do0) > 0.3);  // observational estimate is far off
}

TEST_CASE("TabularScm validation rejects broken inputs") {
    TabularScm scm = worked_example();
    scm.p_i_given_v[0] = 0.0;  // positivity violated
    scm.p_i_given_v[1] = 1.0;
    CHECK_THROWS_AS(scm.validate(), InvalidInput);

    TabularScm bad_sum = worked_example();
    bad_sum.p_v = {0.6, 0.6};
    CHECK_THROWS_AS(bad_sum.validate(), InvalidInput);

    CHECK_THROWS_AS(random_scm(9, 5, 3, 4, 1), InvalidInput);  // over the cap
}
