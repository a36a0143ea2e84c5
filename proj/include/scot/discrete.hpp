#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "scot/errors.hpp"

namespace scot {

/// Weighted finite point set. Weights are kept normalized to total mass 1
/// by the constructors in this library; `validate` checks the invariant.
struct discrete_distribution {
    std::vector<std::vector<double>> atoms;
    std::vector<double> weights;

    std::size_t size() const { return atoms.size(); }
    std::size_t dim() const { return atoms.empty() ? 0 : atoms.front().size(); }

    void validate(double tol = 1e-12) const {
        if (atoms.size() != weights.size())
            throw error("discrete_distribution: atom/weight count mismatch");
        const std::size_t d = dim();
        double total = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (atoms[k].size() != d)
                throw dimension_mismatch("discrete_distribution: ragged atom at " +
                                         std::to_string(k));
            if (weights[k] < 0.0)
                throw error("discrete_distribution: negative weight at " + std::to_string(k));
            total += weights[k];
        }
        if (std::abs(total - 1.0) > tol)
            throw error("discrete_distribution: weights sum to " + std::to_string(total));
    }

    /// Single-point mass at x.
    static discrete_distribution dirac(std::vector<double> x) {
        discrete_distribution d;
        d.atoms.push_back(std::move(x));
        d.weights.push_back(1.0);
        return d;
    }

    /// Uniform weights over the given points.
    static discrete_distribution uniform(std::vector<std::vector<double>> pts) {
        discrete_distribution d;
        d.weights.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
        d.atoms = std::move(pts);
        return d;
    }
};

/// Ground cost: per-coordinate absolute differences aggregated with exponent p,
///   c(u,v) = (sum_i |u_i - v_i|^p)^(1/p),  p >= 1.
struct cost_spec {
    double p = 2.0;

    void validate() const {
        if (!(p >= 1.0)) throw error("cost_spec: p must be >= 1");
    }

    /// c(u,v)^p, the quantity transport objectives integrate.
    double pow_p(const std::vector<double>& u, const std::vector<double>& v) const {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i] - v[i]), p);
        return s;
    }

    double operator()(const std::vector<double>& u, const std::vector<double>& v) const {
        return std::pow(pow_p(u, v), 1.0 / p);
    }
};

/// Matrix of c(a_k, b_r)^p, row-major (size() of a rows, of b columns).
inline std::vector<double> cost_matrix(const discrete_distribution& a,
                                       const discrete_distribution& b,
                                       const cost_spec& cost) {
    if (a.dim() != b.dim())
        throw dimension_mismatch("cost_matrix: dim " + std::to_string(a.dim()) + " vs " +
                                 std::to_string(b.dim()));
    cost.validate();
    std::vector<double> c(a.size() * b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t r = 0; r < b.size(); ++r)
            c[k * b.size() + r] = cost.pow_p(a.atoms[k], b.atoms[r]);
    return c;
}

inline double mean_cost(const std::vector<double>& c) {
    if (c.empty()) return 0.0;
    return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

/// Collapses duplicate values into one atom with summed weight; result is
/// sorted ascending. Input weights need not be normalized.
inline void dedupe_sorted(std::vector<double>& values, std::vector<double>& weights) {
    const std::size_t m = values.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> v, w;
    v.reserve(m);
    w.reserve(m);
    for (std::size_t j : idx) {
        if (!v.empty() && values[j] == v.back()) {
            w.back() += weights[j];
        } else {
            v.push_back(values[j]);
            w.push_back(weights[j]);
        }
    }
    values = std::move(v);
    weights = std::move(w);
}

/// 1-D weighted empirical distribution of one coordinate, duplicates merged.
inline discrete_distribution scalar_marginal(const std::vector<std::vector<double>>& rows,
                                             const std::vector<double>& weights,
                                             std::size_t coord) {
    std::vector<double> v(rows.size()), w(weights);
    for (std::size_t k = 0; k < rows.size(); ++k) v[k] = rows[k][coord];
    dedupe_sorted(v, w);
    discrete_distribution d;
    d.atoms.reserve(v.size());
    for (double x : v) d.atoms.push_back({x});
    d.weights = std::move(w);
    return d;
}

}  // namespace scot
