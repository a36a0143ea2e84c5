#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scot/discrete.hpp"
#include "scot/errors.hpp"

namespace scot {

namespace detail {

inline std::pair<std::vector<double>, std::vector<double>> sorted_scalar(
    const discrete_distribution& d) {
    if (d.dim() != 1) throw dimension_mismatch("wasserstein_1d: expects scalar atoms");
    std::vector<double> v(d.size()), w(d.weights);
    for (std::size_t k = 0; k < d.size(); ++k) v[k] = d.atoms[k][0];
    dedupe_sorted(v, w);
    return {std::move(v), std::move(w)};
}

}  // namespace detail

/// W_p^p between two scalar distributions via the monotone (quantile)
/// coupling: walk both sorted supports, pairing mass in quantile order.
inline double wasserstein_1d_pow(const discrete_distribution& a,
                                 const discrete_distribution& b, double p) {
    auto [va, wa] = detail::sorted_scalar(a);
    auto [vb, wb] = detail::sorted_scalar(b);
    std::size_t i = 0, j = 0;
    double ra = wa[0], rb = wb[0];
    double acc = 0.0;
    while (true) {
        const double m = std::min(ra, rb);
        acc += m * std::pow(std::abs(va[i] - vb[j]), p);
        ra -= m;
        rb -= m;
        if (ra <= 0.0) {
            if (++i >= va.size()) break;
            ra = wa[i];
        }
        if (rb <= 0.0) {
            if (++j >= vb.size()) break;
            rb = wb[j];
        }
    }
    return acc;
}

inline double wasserstein_1d(const discrete_distribution& a, const discrete_distribution& b,
                             double p) {
    return std::pow(wasserstein_1d_pow(a, b, p), 1.0 / p);
}

/// W_p between product measures given by per-coordinate scalar marginals:
/// the p-th powers of the coordinate distances add up.
inline double factored_wasserstein(const std::vector<discrete_distribution>& a,
                                   const std::vector<discrete_distribution>& b, double p) {
    if (a.size() != b.size())
        throw coordinate_count_mismatch("factored_wasserstein: " + std::to_string(a.size()) +
                                        " vs " + std::to_string(b.size()) + " coordinates");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += wasserstein_1d_pow(a[i], b[i], p);
    return std::pow(acc, 1.0 / p);
}

}  // namespace scot
