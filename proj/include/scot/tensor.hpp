#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "scot/errors.hpp"

namespace scot {

/// Nonnegative mass tensor with declared axis marginals. Two layouts share
/// this struct: a plain coupling matrix (2 axes) and the exogenous grid
/// layout with 2n axes, where axis k holds the distinct values of source
/// coordinate k for k < n and of target coordinate k-n otherwise.
struct transport_plan {
    std::vector<std::size_t> shape;
    std::vector<double> mass;  // row-major
    std::vector<std::vector<double>> axis_values;       // support per axis (may be empty)
    std::vector<std::vector<double>> marginal_targets;  // declared marginal per axis

    std::size_t axes() const { return shape.size(); }
    std::size_t pairs() const { return shape.size() / 2; }

    double total_mass() const {
        return std::accumulate(mass.begin(), mass.end(), 0.0);
    }
};

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t t = 1;
    for (std::size_t s : shape) t *= s;
    return t;
}

inline std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> st(shape.size(), 1);
    for (std::size_t k = shape.size(); k-- > 1;) st[k - 1] = st[k] * shape[k];
    return st;
}

/// Advances a multi-index in row-major order; returns false after the last.
inline bool next_index(std::vector<std::size_t>& idx, const std::vector<std::size_t>& shape) {
    for (std::size_t k = shape.size(); k-- > 0;) {
        if (++idx[k] < shape[k]) return true;
        idx[k] = 0;
    }
    return false;
}

/// Sums the tensor over all axes except `axis`.
inline std::vector<double> axis_marginal(const std::vector<double>& mass,
                                         const std::vector<std::size_t>& shape,
                                         std::size_t axis) {
    if (axis >= shape.size()) throw axis_out_of_range("axis_marginal: axis out of range");
    const auto strides = row_major_strides(shape);
    std::vector<double> out(shape[axis], 0.0);
    const std::size_t total = shape_size(shape);
    const std::size_t stride = strides[axis], size = shape[axis];
    for (std::size_t flat = 0; flat < total; ++flat)
        out[(flat / stride) % size] += mass[flat];
    return out;
}

/// Coordinate-pair marginal of a 2n-axis grid plan: sums over every axis
/// except (i, i+n). Returned row-major, shape[i] rows by shape[i+n] columns.
inline std::vector<double> pair_marginal(const transport_plan& plan, std::size_t i) {
    const std::size_t n = plan.pairs();
    if (plan.shape.size() % 2 != 0)
        throw error("pair_marginal: grid layout needs an even axis count");
    if (i >= n)
        throw axis_out_of_range("pair_marginal: coordinate " + std::to_string(i) +
                                " out of range for n=" + std::to_string(n));
    const auto strides = row_major_strides(plan.shape);
    const std::size_t rs = strides[i], cs = strides[i + n];
    const std::size_t rn = plan.shape[i], cn = plan.shape[i + n];
    std::vector<double> out(rn * cn, 0.0);
    const std::size_t total = shape_size(plan.shape);
    for (std::size_t flat = 0; flat < total; ++flat)
        out[((flat / rs) % rn) * cn + (flat / cs) % cn] += plan.mass[flat];
    return out;
}

inline double negentropy(const std::vector<double>& mass) {
    double h = 0.0;
    for (double m : mass)
        if (m > 0.0) h += m * std::log(m);  // 0 log 0 = 0
    return h;
}

struct entropy_report_t {
    double joint = 0.0;                 // sum m log m over the full tensor
    std::vector<double> pair;           // same, per coordinate-pair marginal
    double kl_to_product = 0.0;         // joint - sum(pair), >= 0 up to roundoff
};

/// Entropy decomposition of a grid plan. The divergence of the plan from the
/// product of its coordinate-pair marginals equals the joint negentropy minus
/// the pair negentropies, which is the form the solver consumes.
inline entropy_report_t entropy_report(const transport_plan& plan) {
    entropy_report_t rep;
    rep.joint = negentropy(plan.mass);
    const std::size_t n = plan.pairs();
    rep.pair.resize(n);
    double sum_pair = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rep.pair[i] = negentropy(pair_marginal(plan, i));
        sum_pair += rep.pair[i];
    }
    rep.kl_to_product = rep.joint - sum_pair;
    return rep;
}

}  // namespace scot
