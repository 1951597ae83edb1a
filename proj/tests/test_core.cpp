#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "vge/core.hpp"

using namespace vge;

TEST_CASE("rng: identical (seed, stream) reproduces identical draws") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: fork is deterministic and label-sensitive") {
    RngStream s(123);
    RngStream c1 = s.fork("env");
    RngStream c2 = s.fork("env");
    for (int i = 0; i < 100; ++i) CHECK(c1.next_u64() == c2.next_u64());

    RngStream a = s.fork("a");
    RngStream b = s.fork("b");
    int same = 0;
    for (int i = 0; i < 1000; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("rng: indexed forks are distinct") {
    RngStream s(9);
    std::set<std::uint64_t> first_draws;
    for (std::uint64_t i = 0; i < 1000; ++i) first_draws.insert(s.fork("ep", i).next_u64());
    CHECK(first_draws.size() == 1000);
}

TEST_CASE("rng: uniform01 in range, normal has sane moments") {
    RngStream s(5);
    double sum = 0, sum2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("clamp_action: examples and idempotence") {
    ActionBounds b;
    b.low = {-0.05f, -0.05f, -0.05f};
    b.high = {0.05f, 0.05f, 0.05f};

    CHECK(clamp_action({0.9f, -0.9f, 0.0f}, b) == Action{0.05f, -0.05f, 0.0f});
    CHECK(clamp_action({0.01f, 0.02f, 0.0f}, b) == Action{0.01f, 0.02f, 0.0f});

    RngStream rng(77);
    for (int i = 0; i < 1000; ++i) {
        Action a = {real(rng.uniform(-2, 2)), real(rng.uniform(-2, 2)), real(rng.uniform(-2, 2))};
        const Action once = clamp_action(a, b);
        CHECK(clamp_action(once, b) == once);
        for (std::size_t k = 0; k < once.size(); ++k) {
            CHECK(once[k] >= b.low[k]);
            CHECK(once[k] <= b.high[k]);
        }
    }

    CHECK_THROWS_AS(clamp_action({0.0f, 0.0f}, b), std::invalid_argument);
}

TEST_CASE("bounds validation rejects inverted ranges") {
    ActionBounds b;
    b.low = {0.1f};
    b.high = {0.0f};
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

TEST_CASE("episode invariants enforced") {
    Episode e;
    e.task = {0, "t", "tablesim"};
    e.observations = {{0.0f, 0.0f}, {0.1f, 0.0f}};
    e.actions = {{0.1f}};
    CHECK_NOTHROW(e.validate());

    Episode bad = e;
    bad.observations.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = e;
    bad.actions.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = e;
    bad.observations[0][0] = std::nanf("");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("episode files round-trip losslessly") {
    RngStream rng(3);
    std::vector<Episode> eps;
    for (int k = 0; k < 5; ++k) {
        Episode e;
        e.task = {k, "task-" + std::to_string(k), "tablesim"};
        e.success = k % 2 == 0;
        e.source = EpisodeSource(k % 3);
        const int t = 1 + int(rng.uniform_int(20));
        for (int i = 0; i <= t; ++i)
            e.observations.push_back({real(rng.normal()), real(rng.normal()), real(rng.normal())});
        for (int i = 0; i < t; ++i) e.actions.push_back({real(rng.normal()), real(rng.normal())});
        eps.push_back(std::move(e));
    }
    const std::string path = "test_roundtrip.vge";
    write_episodes(path, eps);
    const std::vector<Episode> back = read_episodes(path);
    REQUIRE(back.size() == eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        CHECK(episode_hash(back[i]) == episode_hash(eps[i]));
        CHECK(back[i].task.description == eps[i].task.description);
        CHECK(back[i].success == eps[i].success);
        CHECK(back[i].source == eps[i].source);
    }
    std::remove(path.c_str());
}

TEST_CASE("crc32 matches the standard test vector") {
    // "123456789" -> 0xCBF43926 (IEEE 802.3)
    CHECK(crc32("123456789", 9) == 0xCBF43926u);
}
