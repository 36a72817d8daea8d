#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace sparsemix {

using Support = std::vector<Eigen::Index>;

/// C(n, k), saturating at UINT64_MAX.
constexpr std::uint64_t binomial(std::uint64_t n, std::uint64_t k)
{
    if (k > n)
        return 0;
    if (k > n - k)
        k = n - k;
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // result * (n - k + i) / i stays integral at every step
        const std::uint64_t factor = n - k + i;
        if (result > kMax / factor)
            return kMax;
        result = result * factor / i;
    }
    return result;
}

/// First combination of size k: {0, 1, ..., k-1}.
inline Support first_combination(Eigen::Index k)
{
    Support s(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i)
        s[static_cast<std::size_t>(i)] = i;
    return s;
}

/// Advance to the lexicographically next k-subset of {0..n-1}; false at the end.
inline bool next_combination(Support& s, Eigen::Index n)
{
    const auto k = static_cast<Eigen::Index>(s.size());
    Eigen::Index i = k - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == n - k + i)
        --i;
    if (i < 0)
        return false;
    ++s[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < k; ++j)
        s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
    return true;
}

}  // namespace sparsemix
