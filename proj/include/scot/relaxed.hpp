#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "scot/discrete.hpp"
#include "scot/errors.hpp"
#include "scot/exact_ot.hpp"
#include "scot/scm.hpp"
#include "scot/sinkhorn.hpp"
#include "scot/tensor.hpp"
#include "scot/wasserstein1d.hpp"

namespace scot {

/// Which solver runs the convex subproblem of each outer iteration. Both
/// minimize the same objective over the same per-axis constraints; with the
/// coordinate-separable ground cost the tensor subproblem decomposes into
/// independent per-coordinate couplings, which `factored` exploits. Results
/// agree to solver tolerance; `factored` is much faster on long outer runs.
enum class inner_solver { multimarginal, factored };

struct relaxed_solve_config {
    double eps = 1e-1;          // regularization strength, >= 0
    double p = 2.0;             // cost aggregation exponent
    double outer_tol = 1e-6;    // relative objective change between outer iterations
    std::size_t outer_max = 50;
    double inner_tol = 1e-8;    // marginal residual for the scaling solver
    std::size_t inner_max = 10000;
    double log_floor = 1e-300;  // smallest argument fed to log in gradients
    std::size_t grid_cap = default_grid_cap;
    inner_solver inner = inner_solver::multimarginal;

    void validate() const {
        if (eps < 0.0) throw error("relaxed_solve_config: eps must be >= 0");
        if (!(p >= 1.0)) throw error("relaxed_solve_config: p must be >= 1");
        if (!(outer_tol > 0.0) || !(inner_tol > 0.0) || !(log_floor > 0.0))
            throw error("relaxed_solve_config: tolerances must be positive");
        if (outer_max < 1 || inner_max < 1)
            throw error("relaxed_solve_config: iteration caps must be >= 1");
    }
};

struct relaxed_solve_result {
    transport_plan plan;            // exogenous grid layout, 2n axes
    double transport_term = 0.0;    // <cost, plan>
    double kl_term = 0.0;           // divergence from the pair-marginal product
    double objective = 0.0;         // transport + eps * kl
    double distance = 0.0;          // objective^(1/p)
    std::vector<double> trace;      // objective per outer iteration (nonincreasing)
    bool converged = false;
    std::size_t outer_iters = 0;
    std::size_t inner_iters_total = 0;
    double inner_residual = 0.0;
    std::string warning;
};

/// Projection of a grid plan onto the product of its coordinate-pair
/// marginals: output entry = prod_i m_i(u_i, v_i). Idempotent; fixes exactly
/// the plans that already factor.
inline transport_plan pi_otimes(const transport_plan& plan) {
    const std::size_t n = plan.pairs();
    if (plan.shape.size() % 2 != 0)
        throw error("pi_otimes: grid layout needs an even axis count");
    std::vector<std::vector<double>> marg(n);
    for (std::size_t i = 0; i < n; ++i) marg[i] = pair_marginal(plan, i);

    transport_plan out;
    out.shape = plan.shape;
    out.axis_values = plan.axis_values;
    out.marginal_targets = plan.marginal_targets;
    out.mass.resize(plan.mass.size());
    std::vector<std::size_t> idx(plan.shape.size(), 0);
    std::size_t flat = 0;
    do {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            w *= marg[i][idx[i] * plan.shape[i + n] + idx[i + n]];
        out.mass[flat++] = w;
    } while (next_index(idx, plan.shape));
    return out;
}

struct relaxed_objective_t {
    double transport = 0.0;
    double kl = 0.0;
    double objective = 0.0;
};

/// Objective of the relaxed problem at a given plan: transport cost plus
/// eps times the divergence from the plan's own pair-marginal product.
inline relaxed_objective_t relaxed_objective(const transport_plan& plan,
                                             const std::vector<double>& cost_tensor,
                                             double eps, double /*p*/ = 2.0) {
    if (cost_tensor.size() != plan.mass.size())
        throw dimension_mismatch("relaxed_objective: cost tensor size mismatch");
    relaxed_objective_t out;
    for (std::size_t f = 0; f < plan.mass.size(); ++f)
        out.transport += plan.mass[f] * cost_tensor[f];
    out.kl = entropy_report(plan).kl_to_product;
    out.objective = out.transport + eps * out.kl;
    return out;
}

/// Gradient of the concave part's negation, i.e. of the sum of pair-marginal
/// negentropies: entry = sum_i (1 + log m_i(u_i, v_i)), logs floored.
inline std::vector<double> dc_gradient(const transport_plan& plan, double log_floor = 1e-300) {
    const std::size_t n = plan.pairs();
    if (plan.shape.size() % 2 != 0)
        throw error("dc_gradient: grid layout needs an even axis count");
    std::vector<std::vector<double>> logm(n);
    for (std::size_t i = 0; i < n; ++i) {
        logm[i] = pair_marginal(plan, i);
        for (double& v : logm[i]) v = std::log(std::max(v, log_floor));
    }
    std::vector<double> g(plan.mass.size());
    std::vector<std::size_t> idx(plan.shape.size(), 0);
    std::size_t flat = 0;
    do {
        double s = static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            s += logm[i][idx[i] * plan.shape[i + n] + idx[i + n]];
        g[flat++] = s;
    } while (next_index(idx, plan.shape));
    return g;
}

namespace detail {

/// Marginal data of one relaxed instance in exogenous coordinates.
struct exo_instance {
    std::vector<discrete_distribution> p, q;   // per-coordinate marginals
    std::vector<std::size_t> shape;            // (|p_1|..|p_n|, |q_1|..|q_n|)
    std::vector<std::vector<double>> axis_values;
    std::vector<std::vector<double>> axis_weights;
};

inline exo_instance build_instance(const sample_matrix& source, const sample_matrix& target,
                                   const scm_model& model, std::size_t grid_cap) {
    const sample_matrix us =
        source.space == sample_space::feature ? push_to_exogenous(model, source) : source;
    const sample_matrix vs =
        target.space == sample_space::feature ? push_to_exogenous(model, target) : target;
    if (us.dim() != model.size() || vs.dim() != model.size())
        throw dimension_mismatch("solve_relaxed: sample width must match the model");

    exo_instance inst;
    inst.p = exogenous_marginals(us);
    inst.q = exogenous_marginals(vs);
    const std::size_t n = model.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const auto& d = i < n ? inst.p[i] : inst.q[i - n];
        if (total > grid_cap / d.size())
            throw grid_too_large("solve_relaxed: plan grid exceeds cap of " +
                                 std::to_string(grid_cap));
        total *= d.size();
        inst.shape.push_back(d.size());
        std::vector<double> vals(d.size());
        for (std::size_t k = 0; k < d.size(); ++k) vals[k] = d.atoms[k][0];
        inst.axis_values.push_back(std::move(vals));
        inst.axis_weights.push_back(d.weights);
    }
    return inst;
}

inline std::vector<double> build_cost_tensor(const exo_instance& inst, double p) {
    const std::size_t n = inst.shape.size() / 2;
    // pairwise 1-D cost tables |u - v|^p
    std::vector<std::vector<double>> table(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& uv = inst.axis_values[i];
        const auto& vv = inst.axis_values[i + n];
        table[i].resize(uv.size() * vv.size());
        for (std::size_t k = 0; k < uv.size(); ++k)
            for (std::size_t r = 0; r < vv.size(); ++r)
                table[i][k * vv.size() + r] = std::pow(std::abs(uv[k] - vv[r]), p);
    }
    std::vector<double> c(shape_size(inst.shape));
    std::vector<std::size_t> idx(inst.shape.size(), 0);
    std::size_t flat = 0;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += table[i][idx[i] * inst.shape[i + n] + idx[i + n]];
        c[flat++] = s;
    } while (next_index(idx, inst.shape));
    return c;
}

inline transport_plan product_plan(const exo_instance& inst) {
    transport_plan plan;
    plan.shape = inst.shape;
    plan.axis_values = inst.axis_values;
    plan.marginal_targets = inst.axis_weights;
    plan.mass.resize(shape_size(inst.shape));
    std::vector<std::size_t> idx(inst.shape.size(), 0);
    std::size_t flat = 0;
    do {
        double w = 1.0;
        for (std::size_t a = 0; a < inst.shape.size(); ++a) w *= inst.axis_weights[a][idx[a]];
        plan.mass[flat++] = w;
    } while (next_index(idx, plan.shape));
    return plan;
}

// Per-pair state of the factored inner solver: the plan is maintained in the
// log domain as a product of per-coordinate couplings, never materialized
// until the end.
struct pair_state {
    std::vector<std::vector<double>> log_plan;  // row-major |p_i| x |q_i|
    std::vector<std::vector<double>> plan;      // exp of the above
    std::vector<std::vector<double>> costs;     // |u - v|^p tables
};

inline transport_plan materialize(const exo_instance& inst, const pair_state& st) {
    const std::size_t n = inst.shape.size() / 2;
    transport_plan plan;
    plan.shape = inst.shape;
    plan.axis_values = inst.axis_values;
    plan.marginal_targets = inst.axis_weights;
    plan.mass.resize(shape_size(inst.shape));
    std::vector<std::size_t> idx(inst.shape.size(), 0);
    std::size_t flat = 0;
    do {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            w *= st.plan[i][idx[i] * inst.shape[i + n] + idx[i + n]];
        plan.mass[flat++] = w;
    } while (next_index(idx, plan.shape));
    return plan;
}

/// Dense log-domain scaling on one coupling matrix: adjusts alpha, beta so
/// that exp(cost_exponent + alpha_k + beta_r) matches row sums a and column
/// sums b, where cost_exponent = tilt - cost/eps. Small eps is handled by
/// regularization scaling: solve a geometric eps schedule down to the target,
/// carrying the dual variables across stages. Columns are matched exactly by
/// the final update; the reported residual is the row-sum L1 error.
/// Returns the total sweep count.
inline std::size_t log_sinkhorn_pair(const std::vector<double>& cost,
                                     const std::vector<double>& tilt, std::size_t K,
                                     std::size_t L, double eps, const std::vector<double>& a,
                                     const std::vector<double>& log_a,
                                     const std::vector<double>& log_b, double tol,
                                     std::size_t max_iter, std::vector<double>& alpha,
                                     std::vector<double>& beta, std::vector<double>& base,
                                     double& residual, bool& converged, bool anneal = true) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    double hi = cost.empty() ? 0.0 : cost[0], lo = hi;
    for (double v : cost) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    const double osc = hi - lo;

    std::vector<double> stages;
    if (anneal)
        for (double e = osc / 4.0; e > eps; e /= 4.0) stages.push_back(e);
    stages.push_back(eps);

    base.resize(K * L);
    std::size_t sweeps = 0;
    converged = false;
    residual = 0.0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const double es = stages[s];
        const bool final_stage = s + 1 == stages.size();
        for (std::size_t f = 0; f < K * L; ++f) base[f] = tilt[f] - cost[f] / es;
        const double stage_tol = final_stage ? tol : std::max(tol, 1e-4);
        const std::size_t stage_cap = final_stage ? max_iter : std::min<std::size_t>(200, max_iter);

        double window_best = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < stage_cap; ++it) {
            ++sweeps;
            for (std::size_t k = 0; k < K; ++k) {
                double run_max = neg_inf, run_sum = 0.0;
                const double* row = base.data() + k * L;
                for (std::size_t r = 0; r < L; ++r) {
                    const double v = row[r] + beta[r];
                    if (v <= run_max) {
                        run_sum += std::exp(v - run_max);
                    } else {
                        run_sum = run_sum * std::exp(run_max - v) + 1.0;
                        run_max = v;
                    }
                }
                alpha[k] = log_a[k] == neg_inf ? neg_inf
                                               : log_a[k] - (run_max + std::log(run_sum));
            }
            for (std::size_t r = 0; r < L; ++r) {
                double run_max = neg_inf, run_sum = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    const double v = base[k * L + r] + alpha[k];
                    if (v <= run_max) {
                        run_sum += std::exp(v - run_max);
                    } else {
                        run_sum = run_sum * std::exp(run_max - v) + 1.0;
                        run_max = v;
                    }
                }
                beta[r] = log_b[r] == neg_inf ? neg_inf
                                              : log_b[r] - (run_max + std::log(run_sum));
            }
            // row residual (columns are exact after the beta update)
            double l1 = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                double sum = 0.0;
                const double* row = base.data() + k * L;
                for (std::size_t r = 0; r < L; ++r)
                    sum += std::exp(row[r] + alpha[k] + beta[r]);
                l1 += std::abs(sum - a[k]);
            }
            residual = l1;
            if (l1 <= stage_tol) {
                converged = final_stage;
                break;
            }
            // sublinear-tail guard: bail out of a stage that has stopped
            // making headway (alternating scaling can decay like 1/t once
            // the plan support disconnects)
            if (it % 512 == 511) {
                if (l1 > 0.9 * window_best) break;
                window_best = std::min(window_best, l1);
            }
        }
        if (!final_stage) {
            // carry the duals: alpha is in exponent units, duals are eps*alpha
            const double ratio = es / stages[s + 1];
            for (double& v : alpha)
                if (v != neg_inf) v *= ratio;
            for (double& v : beta)
                if (v != neg_inf) v *= ratio;
        }
    }
    return sweeps;
}

}  // namespace detail

/// Exact structural Wasserstein under the product-reconstruction convention:
/// both samples are pushed to exogenous coordinates and the distance is the
/// p-norm aggregate of the per-coordinate 1-D distances.
inline double structural_wasserstein_exact(const sample_matrix& source,
                                           const sample_matrix& target, const scm_model& model,
                                           const cost_spec& cost) {
    const sample_matrix us =
        source.space == sample_space::feature ? push_to_exogenous(model, source) : source;
    const sample_matrix vs =
        target.space == sample_space::feature ? push_to_exogenous(model, target) : target;
    return factored_wasserstein(exogenous_marginals(us), exogenous_marginals(vs), cost.p);
}

/// Relaxed structural-causal transport between two feature-space samples.
///
/// Pipeline: push both samples through g^{-1}, build per-coordinate marginal
/// targets and the cost tensor over the observed-value grid, then alternate
/// a linearization of the pair-entropy sum with an entropic scaling solve of
///   argmin <C - eps*G, plan> + eps * H(plan)
/// under the 2n single-axis marginal constraints, until the relative
/// objective change drops below outer_tol. The objective trace is
/// nonincreasing up to solver tolerance.
inline relaxed_solve_result solve_relaxed(const sample_matrix& source,
                                          const sample_matrix& target, const scm_model& model,
                                          const cost_spec& cost,
                                          const relaxed_solve_config& cfg) {
    cfg.validate();
    cost.validate();
    const auto inst = detail::build_instance(source, target, model, cfg.grid_cap);
    const std::size_t n = inst.shape.size() / 2;

    relaxed_solve_result res;

    if (cfg.eps == 0.0) {
        // no regularization: this is plain transport between the expanded
        // product measures, routed to the LP oracle when it fits
        const auto pa = product_of_marginals(inst.p, cfg.grid_cap);
        const auto pb = product_of_marginals(inst.q, cfg.grid_cap);
        if (pa.size() <= exact_ot_atom_cap && pb.size() <= exact_ot_atom_cap) {
            const auto ot = exact_ot(pa, pb, cost);
            res.plan.shape = inst.shape;
            res.plan.axis_values = inst.axis_values;
            res.plan.marginal_targets = inst.axis_weights;
            res.plan.mass = ot.plan;  // same row-major enumeration as the grid
            res.transport_term = ot.objective;
            res.kl_term = entropy_report(res.plan).kl_to_product;
            res.objective = ot.objective;
            res.distance = ot.distance;
            res.trace = {res.objective};
            res.converged = true;
            return res;
        }
        relaxed_solve_config fallback = cfg;
        fallback.eps = 1e-9;
        auto out = solve_relaxed(source, target, model, cost, fallback);
        out.warning = "eps=0 exceeds the LP oracle cap; solved with eps=1e-9 instead";
        return out;
    }

    const auto cost_tensor = detail::build_cost_tensor(inst, cost.p);
    const double floor_log = cfg.log_floor;

    auto finish = [&](transport_plan plan, bool outer_converged, bool inner_ok) {
        res.plan = std::move(plan);
        const auto obj = relaxed_objective(res.plan, cost_tensor, cfg.eps);
        res.transport_term = obj.transport;
        res.kl_term = obj.kl;
        res.objective = obj.objective;
        res.distance = std::pow(std::max(0.0, obj.objective), 1.0 / cost.p);
        res.converged = outer_converged && inner_ok;
    };

    if (cfg.inner == inner_solver::multimarginal) {
        std::vector<std::vector<double>> marginals = inst.axis_weights;
        transport_plan plan = detail::product_plan(inst);
        res.trace.push_back(relaxed_objective(plan, cost_tensor, cfg.eps).objective);

        sinkhorn_options inner;
        inner.eps = cfg.eps;
        inner.tol = cfg.inner_tol;
        inner.max_iter = cfg.inner_max;

        bool outer_converged = false;
        std::vector<std::vector<double>> warm;
        std::vector<double> modified(cost_tensor.size());
        for (std::size_t t = 0; t < cfg.outer_max; ++t) {
            const auto grad = dc_gradient(plan, floor_log);
            for (std::size_t f = 0; f < modified.size(); ++f)
                modified[f] = cost_tensor[f] - cfg.eps * grad[f];
            auto sk = sinkhorn_multimarginal(modified, inst.shape, marginals, inner,
                                             warm.empty() ? nullptr : &warm);
            res.inner_iters_total += sk.iterations;
            res.inner_residual = sk.residual;
            warm = std::move(sk.log_potentials);
            plan.mass = std::move(sk.plan.mass);
            plan.shape = inst.shape;

            const double obj = relaxed_objective(plan, cost_tensor, cfg.eps).objective;
            res.trace.push_back(obj);
            ++res.outer_iters;
            const double prev = res.trace[res.trace.size() - 2];
            if (std::abs(prev - obj) <= cfg.outer_tol * std::max(1e-30, std::abs(prev))) {
                outer_converged = true;
                break;
            }
        }
        plan.axis_values = inst.axis_values;
        plan.marginal_targets = inst.axis_weights;
        // the flag reflects the returned plan: its feasibility residual and
        // the outer stopping rule (early inner misses are transient)
        finish(std::move(plan), outer_converged, res.inner_residual <= cfg.inner_tol);
        return res;
    }

    // factored inner: the separable cost makes the tensor subproblem decompose
    // into one 2-marginal entropic solve per coordinate, so the plan is kept
    // in product form and each subproblem runs on a dense matrix
    const double log_floor_v = std::log(floor_log);
    detail::pair_state st;
    st.log_plan.resize(n);
    st.plan.resize(n);
    st.costs.resize(n);
    std::vector<std::vector<double>> log_w(2 * n);
    for (std::size_t a = 0; a < 2 * n; ++a) {
        log_w[a].resize(inst.shape[a]);
        for (std::size_t k = 0; k < inst.shape[a]; ++k)
            log_w[a][k] = inst.axis_weights[a][k] > 0.0
                              ? std::log(inst.axis_weights[a][k])
                              : -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t K = inst.shape[i], L = inst.shape[i + n];
        const auto& uv = inst.axis_values[i];
        const auto& vv = inst.axis_values[i + n];
        st.costs[i].resize(K * L);
        st.log_plan[i].resize(K * L);
        st.plan[i].resize(K * L);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t r = 0; r < L; ++r) {
                st.costs[i][k * L + r] = std::pow(std::abs(uv[k] - vv[r]), cost.p);
                st.log_plan[i][k * L + r] = log_w[i][k] + log_w[i + n][r];
                st.plan[i][k * L + r] = inst.axis_weights[i][k] * inst.axis_weights[i + n][r];
            }
        }
    }

    auto pair_objective = [&]() {
        // a product-of-pairs plan has zero divergence from its projection,
        // so the objective is the transport term alone
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t f = 0; f < st.plan[i].size(); ++f)
                s += st.plan[i][f] * st.costs[i][f];
        return s;
    };

    res.trace.push_back(pair_objective());

    bool outer_converged = false;
    std::vector<std::vector<double>> alpha(n), beta(n);
    for (std::size_t i = 0; i < n; ++i) {
        alpha[i].assign(inst.shape[i], 0.0);
        beta[i].assign(inst.shape[i + n], 0.0);
    }
    std::vector<double> base, tilt;
    for (std::size_t t = 0; t < cfg.outer_max; ++t) {
        double worst_residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t K = inst.shape[i], L = inst.shape[i + n];
            tilt.resize(K * L);
            // kernel exponent of the linearized subproblem:
            // -(C - eps (1 + log plan)) / eps = (1 + log plan) - C / eps
            for (std::size_t f = 0; f < K * L; ++f)
                tilt[f] = 1.0 + std::max(st.log_plan[i][f], log_floor_v);
            // warm-start the duals: every outer iteration re-tilts by -C/eps,
            // so the previous duals remain near-optimal; resetting them makes
            // the scaling crawl once the plan support sharpens
            double residual = 0.0;
            bool conv = false;
            res.inner_iters_total += detail::log_sinkhorn_pair(
                st.costs[i], tilt, K, L, cfg.eps, inst.axis_weights[i], log_w[i],
                log_w[i + n], cfg.inner_tol, cfg.inner_max, alpha[i], beta[i], base,
                residual, conv, /*anneal=*/t == 0);
            worst_residual = std::max(worst_residual, residual);
            (void)conv;
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t r = 0; r < L; ++r) {
                    const double lp = base[k * L + r] + alpha[i][k] + beta[i][r];
                    st.log_plan[i][k * L + r] = lp;
                    st.plan[i][k * L + r] = std::exp(lp);
                }
        }
        res.inner_residual = worst_residual;
        res.trace.push_back(pair_objective());
        ++res.outer_iters;
        const double prev = res.trace[res.trace.size() - 2];
        const double cur = res.trace.back();
        if (std::abs(prev - cur) <= cfg.outer_tol * std::max(1e-30, std::abs(prev))) {
            outer_converged = true;
            break;
        }
    }
    finish(detail::materialize(inst, st), outer_converged,
           res.inner_residual <= cfg.inner_tol);
    return res;
}

struct epsilon_sweep_row {
    double eps = 0.0;
    double distance = 0.0;
    double transport_term = 0.0;
    double kl_term = 0.0;
    bool converged = false;
    std::size_t outer_iters = 0;
};

/// One relaxed solve per regularization value (ascending list).
inline std::vector<epsilon_sweep_row> epsilon_sweep(const sample_matrix& source,
                                                    const sample_matrix& target,
                                                    const scm_model& model,
                                                    const cost_spec& cost,
                                                    const std::vector<double>& eps_list,
                                                    const relaxed_solve_config& base_cfg) {
    if (eps_list.empty()) throw error("epsilon_sweep: eps list is empty");
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (eps_list[k] < eps_list[k - 1]) throw error("epsilon_sweep: eps list must ascend");
    std::vector<epsilon_sweep_row> rows;
    rows.reserve(eps_list.size());
    for (double eps : eps_list) {
        relaxed_solve_config cfg = base_cfg;
        cfg.eps = eps;
        const auto r = solve_relaxed(source, target, model, cost, cfg);
        rows.push_back({eps, r.distance, r.transport_term, r.kl_term, r.converged,
                        r.outer_iters});
    }
    return rows;
}

}  // namespace scot
