#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hss/errors.hpp"

namespace hss {

// C(n, k) with overflow guard; saturates at a large sentinel.
inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long double acc = 1.0L;
    for (int i = 1; i <= k; ++i) acc = acc * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (acc > 9e17L) return 900000000000000000LL;
    return static_cast<std::int64_t>(acc + 0.5L);
}

// Visits every k-subset of {0,..,n-1} in lexicographic order.
// Throws budget_error when C(n,k) exceeds `budget`.
template <class Fn>
void for_each_combination(int n, int k, std::int64_t budget, Fn&& fn) {
    if (k < 0 || k > n) throw validation_error("for_each_combination: k out of range");
    if (binomial(n, k) > budget) throw budget_error("for_each_combination: enumeration exceeds budget");
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(static_cast<const std::vector<int>&>(idx));
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Visits every vector in {-1,+1}^m as sign vectors, in lexicographic order of
// the underlying bit mask (bit i set => sigma_i = -1).
template <class Fn>
void for_each_sign_vector(int m, std::int64_t budget, Fn&& fn) {
    if (m < 0 || m >= 63) throw validation_error("for_each_sign_vector: m out of range");
    const std::int64_t total = std::int64_t{1} << m;
    if (total > budget) throw budget_error("for_each_sign_vector: enumeration exceeds budget");
    std::vector<double> sigma(static_cast<std::size_t>(m));
    for (std::int64_t mask = 0; mask < total; ++mask) {
        for (int i = 0; i < m; ++i) sigma[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? -1.0 : 1.0;
        fn(static_cast<const std::vector<double>&>(sigma));
    }
}

}  // namespace hss
