#pragma once

// Straight-line re-implementation of the four post-processing steps, written
// without looking at the library's top-2 helper. Used as an oracle only.

#include "blendfuse/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace reference {

struct Outcome {
    int primary;
    int secondary; // -1 for single
    int salience;  // 100, 70 or 50

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

inline Outcome discretize(const std::array<double, 6>& p, double alpha, double beta, std::optional<int> neutral,
                          bool renormalize = false)
{
    // Step 1: keep the two largest entries, lower index first among equals.
    std::array<int, 6> order;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
    std::array<double, 6> masked{};
    masked[order[0]] = p[order[0]];
    masked[order[1]] = p[order[1]];

    // Step 2: zero kept entries below alpha.
    for (double& v : masked)
        if (v < alpha)
            v = 0.0;
    std::vector<int> survivors;
    for (int i : {order[0], order[1]})
        if (masked[i] > 0.0)
            survivors.push_back(i);

    if (survivors.empty())
        return {order[0], -1, 100};
    if (survivors.size() == 1)
        return {survivors[0], -1, 100};

    // Step 3: neutral next to another emotion is dropped.
    if (neutral) {
        if (survivors[0] == *neutral)
            return {survivors[1], -1, 100};
        if (survivors[1] == *neutral)
            return {survivors[0], -1, 100};
    }

    // Step 4: salience split.
    const int a = survivors[0], b = survivors[1];
    double diff = std::abs(masked[a] - masked[b]);
    if (renormalize)
        diff /= masked[a] + masked[b];
    if (diff <= beta)
        return {std::min(a, b), std::max(a, b), 50};
    return masked[a] >= masked[b] ? Outcome{a, b, 70} : Outcome{b, a, 70};
}

inline Outcome from_blend(const blendfuse::Blend& b)
{
    return {static_cast<int>(b.primary), b.secondary ? static_cast<int>(*b.secondary) : -1, b.salience_primary};
}

} // namespace reference
