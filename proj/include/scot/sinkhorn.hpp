#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "scot/discrete.hpp"
#include "scot/errors.hpp"
#include "scot/tensor.hpp"

namespace scot {

struct sinkhorn_options {
    double eps = 1e-1;            // entropic regularization, > 0
    double tol = 1e-8;            // max over axes of L1 marginal error
    std::size_t max_iter = 10000; // full sweeps over all axes
};

/// Non-convergence is reported, not thrown: callers in outer loops can
/// often proceed with the residual they got.
struct sinkhorn_result {
    transport_plan plan;
    double objective = 0.0;   // <cost, plan>
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<std::vector<double>> log_potentials;  // per axis, for warm starts
};

/// Entropic multi-marginal scaling in the log domain. Fits
///   plan = exp(-cost/eps) * prod_i phi_i(x_i)
/// to the prescribed single-axis marginals by cycling potential updates
///   phi_i(x_i) = P_i(x_i) / sum_{others} exp(-cost/eps) prod_{j != i} phi_j.
inline sinkhorn_result sinkhorn_multimarginal(
    const std::vector<double>& cost, const std::vector<std::size_t>& shape,
    const std::vector<std::vector<double>>& marginals, const sinkhorn_options& opts,
    const std::vector<std::vector<double>>* warm_start = nullptr) {
    const std::size_t m = shape.size();
    if (marginals.size() != m)
        throw dimension_mismatch("sinkhorn_multimarginal: need one marginal per axis");
    for (std::size_t a = 0; a < m; ++a)
        if (marginals[a].size() != shape[a])
            throw dimension_mismatch("sinkhorn_multimarginal: marginal size mismatch on axis " +
                                     std::to_string(a));
    if (!(opts.eps > 0.0)) throw error("sinkhorn_multimarginal: eps must be > 0");
    const std::size_t total = shape_size(shape);
    if (cost.size() != total)
        throw dimension_mismatch("sinkhorn_multimarginal: cost tensor size mismatch");

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    std::vector<std::vector<double>> log_phi(m);
    for (std::size_t a = 0; a < m; ++a) log_phi[a].assign(shape[a], 0.0);
    const bool warm = warm_start && warm_start->size() == m;
    if (warm) log_phi = *warm_start;

    std::vector<std::vector<double>> log_target(m);
    for (std::size_t a = 0; a < m; ++a) {
        log_target[a].resize(shape[a]);
        for (std::size_t k = 0; k < shape[a]; ++k)
            log_target[a][k] = marginals[a][k] > 0.0 ? std::log(marginals[a][k]) : neg_inf;
    }

    // regularization scaling: cold starts walk a geometric eps schedule down
    // to the target, carrying the duals, which avoids the small-eps stall
    double hi = cost.empty() ? 0.0 : cost[0], lo = hi;
    for (double v : cost) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    std::vector<double> stages;
    if (!warm)
        for (double e = (hi - lo) / 4.0; e > opts.eps; e /= 4.0) stages.push_back(e);
    stages.push_back(opts.eps);

    std::vector<double> log_kernel(total);
    std::vector<std::size_t> idx(m);
    std::vector<double> run_max, run_sum;

    // log-plan entry at the current potentials
    auto log_entry = [&](std::size_t flat, const std::vector<std::size_t>& ix) {
        double v = log_kernel[flat];
        for (std::size_t j = 0; j < m; ++j) v += log_phi[j][ix[j]];
        return v;
    };

    sinkhorn_result res;
    std::size_t total_sweeps = 0;
    for (std::size_t stage = 0; stage < stages.size(); ++stage) {
        const double es = stages[stage];
        const bool final_stage = stage + 1 == stages.size();
        for (std::size_t f = 0; f < total; ++f) log_kernel[f] = -cost[f] / es;
        const double stage_tol = final_stage ? opts.tol : std::max(opts.tol, 1e-4);
        const std::size_t stage_cap =
            final_stage ? opts.max_iter : std::min<std::size_t>(200, opts.max_iter);

        double window_best = std::numeric_limits<double>::infinity();
        for (std::size_t sweep = 0; sweep < stage_cap; ++sweep) {
            ++total_sweeps;
            for (std::size_t a = 0; a < m; ++a) {
                run_max.assign(shape[a], neg_inf);
                run_sum.assign(shape[a], 0.0);
                std::fill(idx.begin(), idx.end(), 0);
                std::size_t flat = 0;
                do {
                    double v = log_kernel[flat];
                    for (std::size_t j = 0; j < m; ++j)
                        if (j != a) v += log_phi[j][idx[j]];
                    const std::size_t k = idx[a];
                    if (v <= run_max[k]) {
                        run_sum[k] += std::exp(v - run_max[k]);
                    } else {
                        run_sum[k] = run_sum[k] * std::exp(run_max[k] - v) + 1.0;
                        run_max[k] = v;
                    }
                    ++flat;
                } while (next_index(idx, shape));
                for (std::size_t k = 0; k < shape[a]; ++k) {
                    if (log_target[a][k] == neg_inf) {
                        log_phi[a][k] = neg_inf;
                    } else {
                        log_phi[a][k] = log_target[a][k] - (run_max[k] + std::log(run_sum[k]));
                    }
                }
            }

            // residual pass: all axis marginals of the current plan at once
            std::vector<std::vector<double>> marg(m);
            for (std::size_t a = 0; a < m; ++a) marg[a].assign(shape[a], 0.0);
            std::fill(idx.begin(), idx.end(), 0);
            std::size_t flat = 0;
            do {
                const double w = std::exp(log_entry(flat, idx));
                for (std::size_t a = 0; a < m; ++a) marg[a][idx[a]] += w;
                ++flat;
            } while (next_index(idx, shape));
            double worst = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                double l1 = 0.0;
                for (std::size_t k = 0; k < shape[a]; ++k)
                    l1 += std::abs(marg[a][k] - marginals[a][k]);
                worst = std::max(worst, l1);
            }
            res.residual = worst;
            if (worst <= stage_tol) {
                res.converged = final_stage;
                break;
            }
            // bail out once the residual stops making headway (sublinear tail)
            if (sweep % 512 == 511) {
                if (worst > 0.9 * window_best) break;
                window_best = std::min(window_best, worst);
            }
        }
        if (!final_stage) {
            const double ratio = es / stages[stage + 1];
            for (auto& phi : log_phi)
                for (double& v : phi)
                    if (v != neg_inf) v *= ratio;
        }
    }
    res.iterations = total_sweeps;
    // rebuild the final-stage kernel state for the exported plan
    for (std::size_t f = 0; f < total; ++f) log_kernel[f] = -cost[f] / opts.eps;

    res.plan.shape = shape;
    res.plan.mass.resize(total);
    res.plan.marginal_targets = marginals;
    std::fill(idx.begin(), idx.end(), 0);
    std::size_t flat = 0;
    do {
        const double w = std::exp(log_entry(flat, idx));
        res.plan.mass[flat] = w;
        res.objective += w * cost[flat];
        ++flat;
    } while (next_index(idx, shape));
    res.log_potentials = std::move(log_phi);
    return res;
}

/// Two-marginal entropic transport; a thin specialization of the
/// multi-marginal engine, so the two agree exactly.
inline sinkhorn_result sinkhorn(const discrete_distribution& a, const discrete_distribution& b,
                                const cost_spec& cost, double eps, double tol = 1e-8,
                                std::size_t max_iter = 10000) {
    const auto c = cost_matrix(a, b, cost);
    sinkhorn_options opts;
    opts.eps = eps;
    opts.tol = tol;
    opts.max_iter = max_iter;
    return sinkhorn_multimarginal(c, {a.size(), b.size()}, {a.weights, b.weights}, opts);
}

}  // namespace scot
