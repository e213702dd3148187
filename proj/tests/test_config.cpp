#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "hcr/common.hpp"
#include "hcr/config.hpp"

using namespace hcr;

TEST_CASE("config: sections, comments, trimming") {
    const ConfigFile cfg = ConfigFile::parse(std::string(
        "# experiment file\n"
        "[world]\n"
        "num_users = 200   # inline comment\n"
        "confounder_prior = 0.5, 0.5\n"
        "\n"
        "[train.hcr]\n"
        "beta = 2.5\n"
        "share_embeddings = true\n"
        "mode = HCR\n"));
    CHECK(cfg.has_section("world"));
    CHECK(cfg.get_u32("world", "num_users", 0) == 200);
    CHECK(cfg.get_double_list("world", "confounder_prior", {}) ==
          std::vector<double>{0.5, 0.5});
    CHECK(cfg.get_double("train.hcr", "beta", 0.0) == 2.5);
    CHECK(cfg.get_bool("train.hcr", "share_embeddings", false));
    CHECK(cfg.get("train.hcr", "mode") == "HCR");
    CHECK(cfg.get_or("train.hcr", "missing", "fallback") == "fallback");
    CHECK(cfg.get_u32("world", "absent", 42) == 42);
}

TEST_CASE("config: malformed input is reported with line numbers") {
    CHECK_THROWS_WITH(ConfigFile::parse(std::string("[world\nnum_users = 1\n")),
                      Catch::Matchers::ContainsSubstring("line 1"));
    CHECK_THROWS_WITH(ConfigFile::parse(std::string("[world]\njust a dangling token\n")),
                      Catch::Matchers::ContainsSubstring("line 2"));
    const ConfigFile cfg = ConfigFile::parse(std::string("[a]\nx = banana\n"));
    CHECK_THROWS_AS(cfg.get_double("a", "x", 0.0), InvalidInput);
    CHECK_THROWS_AS(cfg.get_u64("a", "x", 0), InvalidInput);
    CHECK_THROWS_AS(cfg.get_bool("a", "x", false), InvalidInput);
    CHECK_THROWS_AS(cfg.get("a", "missing"), InvalidInput);
}

TEST_CASE("config: list splitting handles spaces and trailing commas") {
    CHECK(ConfigFile::split_list("1, 2,3 ,") == std::vector<std::string>{"1", "2", "3"});
    const ConfigFile cfg = ConfigFile::parse(std::string("[e]\nseeds = 7,8 , 9\n"));
    CHECK(cfg.get_u64_list("e", "seeds", {}) == std::vector<std::uint64_t>{7, 8, 9});
}
