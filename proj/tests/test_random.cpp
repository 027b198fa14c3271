#include "coxscreen/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace coxscreen;

static_assert(std::uniform_random_bit_generator<Philox4x32>);

TEST_CASE("Philox4x32-10 known-answer vectors")
{
    using B = Philox4x32::Block;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::encrypt(B{0, 0, 0, 0}, K{0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::encrypt(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::encrypt(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("generator output is the encrypted counter sequence")
{
    Philox4x32 rng(0x0000000200000001ull, 7, 3);
    for (std::uint32_t block = 0; block < 3; ++block) {
        const auto expected = Philox4x32::encrypt({block, 0, 7, 3}, {1, 2});
        for (int k = 0; k < 4; ++k) CHECK(rng() == expected[k]);
    }
}

TEST_CASE("substreams are distinct and reproducible")
{
    std::set<std::vector<std::uint32_t>> seen;
    for (std::uint64_t seed : {0ull, 1ull, 1ull << 32}) {
        for (std::uint32_t rep : {0u, 1u, 2u}) {
            for (auto purpose : {StreamPurpose::covariates, StreamPurpose::event_times, StreamPurpose::censor_times,
                                 StreamPurpose::sample_split}) {
                auto a = make_stream(seed, rep, purpose);
                auto b = make_stream(seed, rep, purpose);
                std::vector<std::uint32_t> va, vb;
                for (int k = 0; k < 8; ++k) {
                    va.push_back(a());
                    vb.push_back(b());
                }
                CHECK(va == vb);
                CHECK(seen.insert(va).second);
            }
        }
    }
}

TEST_CASE("bounded integers are unbiased")
{
    auto rng = make_stream(42, 0, StreamPurpose::noise_pick);
    CHECK(uniform_below(rng, 0) == 0);
    CHECK(uniform_below(rng, 1) == 0);
    std::vector<int> counts(6, 0);
    const int draws = 60000;
    for (int k = 0; k < draws; ++k) ++counts[uniform_below(rng, 6)];
    double chi2 = 0;
    for (int c : counts) chi2 += (c - draws / 6.0) * (c - draws / 6.0) / (draws / 6.0);
    CHECK(chi2 < 20.5);   // 0.999 quantile of chi-square with 5 degrees of freedom
}

TEST_CASE("permutations")
{
    auto rng = make_stream(3, 1, StreamPurpose::sample_split);
    const auto perm = random_permutation(rng, 100);
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
    CHECK(random_permutation(rng, 0).empty());
    CHECK(random_permutation(rng, 1) == std::vector<int>{0});

    // every arrangement of three items appears with frequency 1/6
    std::vector<int> counts(6, 0);
    for (int k = 0; k < 30000; ++k) {
        const auto p = random_permutation(rng, 3);
        ++counts[p[0] * 2 + (p[1] > p[2] ? 1 : 0)];
    }
    for (int c : counts) CHECK(std::abs(c - 5000) < 300);
}

TEST_CASE("standard distributions accept the generator")
{
    auto rng = make_stream(9, 0, StreamPurpose::covariates);
    std::normal_distribution<double> normal;
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double z = normal(rng);
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.04);
}
