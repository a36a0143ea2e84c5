#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "scot/discrete.hpp"
#include "scot/errors.hpp"

namespace scot {

inline constexpr std::size_t exact_ot_atom_cap = 64;

struct transport_lp_result {
    double objective = 0.0;              // sum of plan * cost
    std::vector<double> plan;            // row-major n x m
    double feasibility_residual = 0.0;   // max L1 marginal error
    std::size_t pivots = 0;
};

namespace detail {

// Primal transportation simplex on the dense bipartite problem
//   min <c, x>  s.t.  row sums = a, col sums = b, x >= 0.
// Basis is a spanning tree of n+m-1 cells; entering variable by most
// negative reduced cost, falling back to first-index order when a long
// degenerate streak suggests stalling.
class transport_simplex {
public:
    transport_simplex(const std::vector<double>& c, std::vector<double> a,
                      std::vector<double> b)
        : c_(c), a_(std::move(a)), b_(std::move(b)), n_(a_.size()), m_(b_.size()) {}

    transport_lp_result solve() {
        northwest_corner();
        double scale = 1.0;
        for (double v : c_) scale = std::max(scale, std::abs(v));
        const double tol = 1e-13 * scale;
        const std::size_t pivot_cap = 200 * (n_ + m_) * (n_ + m_) + 10000;

        std::size_t pivots = 0;
        std::size_t degenerate_streak = 0;
        while (true) {
            compute_duals();
            const auto [ei, ej] = entering(tol, degenerate_streak > n_ * m_ + 16);
            if (ei == npos) break;
            if (++pivots > pivot_cap)
                throw error("transport_simplex: pivot cap exceeded");
            if (!pivot(ei, ej)) ++degenerate_streak;
            else degenerate_streak = 0;
        }

        transport_lp_result res;
        res.pivots = pivots;
        res.plan.assign(n_ * m_, 0.0);
        for (std::size_t t = 0; t < basis_i_.size(); ++t)
            res.plan[basis_i_[t] * m_ + basis_j_[t]] = std::max(0.0, basis_flow_[t]);
        for (std::size_t t = 0; t < basis_i_.size(); ++t)
            res.objective += std::max(0.0, basis_flow_[t]) * c_[basis_i_[t] * m_ + basis_j_[t]];
        res.feasibility_residual = residual(res.plan);
        return res;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    void northwest_corner() {
        std::size_t i = 0, j = 0;
        double arem = a_[0], brem = b_[0];
        while (true) {
            const double t = std::min(arem, brem);
            basis_i_.push_back(i);
            basis_j_.push_back(j);
            basis_flow_.push_back(t);
            arem -= t;
            brem -= t;
            if (i == n_ - 1 && j == m_ - 1) break;
            // advance one index per step so the basis has exactly n+m-1 cells
            if (arem <= brem && i < n_ - 1) {
                ++i;
                arem = a_[i];
            } else {
                ++j;
                brem = b_[j];
            }
        }
    }

    void compute_duals() {
        u_.assign(n_, 0.0);
        v_.assign(m_, 0.0);
        // adjacency of the basis tree
        row_adj_.assign(n_, {});
        col_adj_.assign(m_, {});
        for (std::size_t t = 0; t < basis_i_.size(); ++t) {
            row_adj_[basis_i_[t]].push_back(t);
            col_adj_[basis_j_[t]].push_back(t);
        }
        std::vector<char> row_done(n_, 0), col_done(m_, 0);
        std::vector<std::size_t> stack;
        row_done[0] = 1;
        stack.push_back(0);  // encoded: rows are [0,n), cols are [n, n+m)
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (node < n_) {
                for (std::size_t t : row_adj_[node]) {
                    const std::size_t j = basis_j_[t];
                    if (!col_done[j]) {
                        col_done[j] = 1;
                        v_[j] = c_[node * m_ + j] - u_[node];
                        stack.push_back(n_ + j);
                    }
                }
            } else {
                const std::size_t j = node - n_;
                for (std::size_t t : col_adj_[j]) {
                    const std::size_t i = basis_i_[t];
                    if (!row_done[i]) {
                        row_done[i] = 1;
                        u_[i] = c_[i * m_ + j] - v_[j];
                        stack.push_back(i);
                    }
                }
            }
        }
    }

    std::pair<std::size_t, std::size_t> entering(double tol, bool first_index) const {
        std::size_t bi = npos, bj = npos;
        double best = -tol;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < m_; ++j) {
                const double rc = c_[i * m_ + j] - u_[i] - v_[j];
                if (rc < best) {
                    best = rc;
                    bi = i;
                    bj = j;
                    if (first_index) return {bi, bj};
                }
            }
        }
        return {bi, bj};
    }

    // Inserts (ei, ej) into the basis, sends flow around the unique tree
    // cycle, drops the blocking minus-edge. Returns false on degenerate step.
    bool pivot(std::size_t ei, std::size_t ej) {
        // path from row ei to col ej through the basis tree
        std::vector<std::size_t> parent_edge(n_ + m_, npos);
        std::vector<char> seen(n_ + m_, 0);
        std::vector<std::size_t> queue{ei};
        seen[ei] = 1;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const std::size_t node = queue[q];
            if (node == n_ + ej) break;
            const auto& adj = node < n_ ? row_adj_[node] : col_adj_[node - n_];
            for (std::size_t t : adj) {
                const std::size_t other = node < n_ ? n_ + basis_j_[t] : basis_i_[t];
                if (!seen[other]) {
                    seen[other] = 1;
                    parent_edge[other] = t;
                    queue.push_back(other);
                }
            }
        }

        // walk back col ej -> row ei; edges alternate minus, plus, minus, ...
        std::vector<std::size_t> minus_edges, plus_edges;
        std::size_t node = n_ + ej;
        bool minus = true;
        while (node != ei) {
            const std::size_t t = parent_edge[node];
            (minus ? minus_edges : plus_edges).push_back(t);
            node = node < n_ ? n_ + basis_j_[t] : basis_i_[t];
            minus = !minus;
        }

        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = npos;
        for (std::size_t t : minus_edges) {
            if (basis_flow_[t] < theta ||
                (basis_flow_[t] == theta && (leave == npos || t < leave))) {
                theta = basis_flow_[t];
                leave = t;
            }
        }

        for (std::size_t t : plus_edges) basis_flow_[t] += theta;
        for (std::size_t t : minus_edges) basis_flow_[t] -= theta;
        basis_i_[leave] = ei;
        basis_j_[leave] = ej;
        basis_flow_[leave] = theta;
        rebuild_adjacency();
        return theta > 0.0;
    }

    void rebuild_adjacency() {
        row_adj_.assign(n_, {});
        col_adj_.assign(m_, {});
        for (std::size_t t = 0; t < basis_i_.size(); ++t) {
            row_adj_[basis_i_[t]].push_back(t);
            col_adj_[basis_j_[t]].push_back(t);
        }
    }

    double residual(const std::vector<double>& plan) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m_; ++j) s += plan[i * m_ + j];
            worst = std::max(worst, std::abs(s - a_[i]));
        }
        for (std::size_t j = 0; j < m_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += plan[i * m_ + j];
            worst = std::max(worst, std::abs(s - b_[j]));
        }
        return worst;
    }

    const std::vector<double>& c_;
    std::vector<double> a_, b_;
    std::size_t n_, m_;
    std::vector<std::size_t> basis_i_, basis_j_;
    std::vector<double> basis_flow_;
    std::vector<double> u_, v_;
    std::vector<std::vector<std::size_t>> row_adj_, col_adj_;
};

}  // namespace detail

/// Exact solve of the dense transportation LP. Marginals must each sum to 1.
inline transport_lp_result transport_lp(const std::vector<double>& cost_pq,
                                        const std::vector<double>& a,
                                        const std::vector<double>& b) {
    if (cost_pq.size() != a.size() * b.size())
        throw dimension_mismatch("transport_lp: cost size mismatch");
    detail::transport_simplex s(cost_pq, a, b);
    return s.solve();
}

struct exact_ot_result {
    double distance = 0.0;       // ( min <c^p, plan> )^(1/p)
    double objective = 0.0;      // min <c^p, plan>
    std::vector<double> plan;    // row-major, a-atoms by b-atoms
    double feasibility_residual = 0.0;
};

/// Small-instance exact Wasserstein oracle (transportation simplex).
inline exact_ot_result exact_ot(const discrete_distribution& a, const discrete_distribution& b,
                                const cost_spec& cost) {
    if (a.size() > exact_ot_atom_cap || b.size() > exact_ot_atom_cap)
        throw instance_too_large("exact_ot: instance " + std::to_string(a.size()) + "x" +
                                 std::to_string(b.size()) + " exceeds oracle cap of " +
                                 std::to_string(exact_ot_atom_cap));
    const auto c = cost_matrix(a, b, cost);
    auto lp = transport_lp(c, a.weights, b.weights);
    exact_ot_result res;
    res.objective = lp.objective;
    res.distance = std::pow(std::max(0.0, lp.objective), 1.0 / cost.p);
    res.plan = std::move(lp.plan);
    res.feasibility_residual = lp.feasibility_residual;
    return res;
}

}  // namespace scot
