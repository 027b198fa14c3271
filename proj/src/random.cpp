#include "coxscreen/random.hpp"

#include <numeric>

namespace coxscreen {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

} // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint32_t stream, std::uint32_t purpose)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    , counter_{0, 0, stream, purpose}
{}

Philox4x32::Block Philox4x32::encrypt(Block ctr, Key key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

Philox4x32::result_type Philox4x32::operator()()
{
    if (used_ == 4) {
        buffer_ = encrypt(counter_, key_);
        if (++counter_[0] == 0) ++counter_[1];
        used_ = 0;
    }
    return buffer_[used_++];
}

Philox4x32 make_stream(std::uint64_t seed, std::uint32_t rep, StreamPurpose purpose)
{
    return Philox4x32(seed, rep, static_cast<std::uint32_t>(purpose));
}

std::uint32_t uniform_below(Philox4x32& rng, std::uint32_t bound)
{
    if (bound <= 1) return 0;
    const std::uint32_t limit = std::numeric_limits<std::uint32_t>::max() -
                                std::numeric_limits<std::uint32_t>::max() % bound;
    std::uint32_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

std::vector<int> random_permutation(Philox4x32& rng, int n)
{
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(uniform_below(rng, static_cast<std::uint32_t>(i + 1)));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

} // namespace coxscreen
