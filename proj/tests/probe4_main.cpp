// scratch probe: residual trace inside one stalled pair subproblem
#include <cmath>
#include <cstdio>
#include <vector>

#include "scot/relaxed.hpp"

using namespace scot;

static scm_model demo_model(double alpha = 0.5) {
    dag_spec d;
    d.node_count = 2;
    d.parent_sets = {{}, {0}};
    return scm_model::make(d,
                           {structural_equation::zero(), structural_equation::linear({alpha})},
                           {noise_spec::truncated_gaussian(0, 1, -4.5, 4.5),
                            noise_spec::truncated_gaussian(0, 1, -4.5, 4.5)});
}

int main() {
    auto m = demo_model();
    const auto a = sample(m, 6, 31);
    const auto b = sample(m, 6, 32);
    const auto inst = detail::build_instance(a, b, m, 1000000);
    const auto pa = product_of_marginals(inst.p);
    const auto pb = product_of_marginals(inst.q);
    const double cbar = mean_cost(cost_matrix(pa, pb, cost_spec{2.0}));
    const double eps = 1e-3 * cbar;

    // reproduce outer-0 then outer-1 for pair 1
    const std::size_t i = 1, K = inst.shape[1], L = inst.shape[3];
    std::vector<double> lw_a(K), lw_b(L);
    for (std::size_t k = 0; k < K; ++k) lw_a[k] = std::log(inst.axis_weights[1][k]);
    for (std::size_t r = 0; r < L; ++r) lw_b[r] = std::log(inst.axis_weights[3][r]);
    std::vector<double> costm(K * L), logpi(K * L);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t r = 0; r < L; ++r) {
            costm[k * L + r] =
                std::pow(std::abs(inst.axis_values[i][k] - inst.axis_values[i + 2][r]), 2.0);
            logpi[k * L + r] = lw_a[k] + lw_b[r];
        }

    std::vector<double> alpha(K, 0.0), beta(L, 0.0), base;
    for (int outer = 0; outer < 2; ++outer) {
        std::vector<double> tilt(K * L);
        for (std::size_t f = 0; f < K * L; ++f)
            tilt[f] = 1.0 + std::max(logpi[f], std::log(1e-300));
        std::fill(alpha.begin(), alpha.end(), 0.0);
        std::fill(beta.begin(), beta.end(), 0.0);
        double residual;
        bool conv;
        if (outer == 0) {
            detail::log_sinkhorn_pair(costm, tilt, K, L, eps, inst.axis_weights[1], lw_a, lw_b,
                                      1e-10, 100000, alpha, beta, base, residual, conv);
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t r = 0; r < L; ++r)
                    logpi[k * L + r] = base[k * L + r] + alpha[k] + beta[r];
            std::printf("outer0 residual=%.3e conv=%d\n", residual, int(conv));
            std::printf("logpi range: ");
            double mn = 1e300, mx = -1e300;
            for (double v : logpi) {
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            std::printf("[%.1f, %.1f]\n", mn, mx);
            continue;
        }
        // manual final-stage sweeps with residual printout
        base.resize(K * L);
        for (std::size_t f = 0; f < K * L; ++f) base[f] = tilt[f] - costm[f] / eps;
        for (int sweep = 0; sweep < 2000; ++sweep) {
            for (std::size_t k = 0; k < K; ++k) {
                double rm = -1e300, rs = 0;
                for (std::size_t r = 0; r < L; ++r) {
                    const double v = base[k * L + r] + beta[r];
                    if (v <= rm) rs += std::exp(v - rm);
                    else { rs = rs * std::exp(rm - v) + 1.0; rm = v; }
                }
                alpha[k] = lw_a[k] - (rm + std::log(rs));
            }
            for (std::size_t r = 0; r < L; ++r) {
                double rm = -1e300, rs = 0;
                for (std::size_t k = 0; k < K; ++k) {
                    const double v = base[k * L + r] + alpha[k];
                    if (v <= rm) rs += std::exp(v - rm);
                    else { rs = rs * std::exp(rm - v) + 1.0; rm = v; }
                }
                beta[r] = lw_b[r] - (rm + std::log(rs));
            }
            double l1 = 0;
            for (std::size_t k = 0; k < K; ++k) {
                double s = 0;
                for (std::size_t r = 0; r < L; ++r) s += std::exp(base[k * L + r] + alpha[k] + beta[r]);
                l1 += std::abs(s - inst.axis_weights[1][k]);
            }
            if (sweep < 12 || sweep % 200 == 0)
                std::printf("sweep=%4d residual=%.6e  alpha0=%.6f beta0=%.6f\n", sweep, l1,
                            alpha[0], beta[0]);
        }
    }
    return 0;
}
