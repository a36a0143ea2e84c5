#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scot/dag.hpp"
#include "scot/discrete.hpp"
#include "scot/errors.hpp"
#include "scot/rng.hpp"

namespace scot {

inline constexpr std::size_t default_grid_cap = 1000000;

/// One node's structural equation f_i over its parents' values.
/// Either affine in the parents or a tabulated map with multilinear
/// interpolation on a declared grid box; queries outside the box are errors.
struct structural_equation {
    enum class kind_t { linear, tabulated };

    kind_t kind = kind_t::linear;

    // linear: one coefficient per parent (in parent-set order) plus intercept
    std::vector<double> coeffs;
    double intercept = 0.0;

    // tabulated: per-parent ascending grid axes and row-major values over the
    // grid product; the domain box is [axis.front(), axis.back()] per parent
    std::vector<std::vector<double>> grid_axes;
    std::vector<double> grid_values;

    static structural_equation zero() { return {}; }

    static structural_equation linear(std::vector<double> c, double b = 0.0) {
        structural_equation e;
        e.kind = kind_t::linear;
        e.coeffs = std::move(c);
        e.intercept = b;
        return e;
    }

    static structural_equation tabulated(std::vector<std::vector<double>> axes,
                                         std::vector<double> values) {
        structural_equation e;
        e.kind = kind_t::tabulated;
        e.grid_axes = std::move(axes);
        e.grid_values = std::move(values);
        std::size_t expect = 1;
        for (const auto& ax : e.grid_axes) {
            if (ax.size() < 2) throw error("structural_equation: grid axis needs >= 2 points");
            for (std::size_t j = 1; j < ax.size(); ++j)
                if (!(ax[j] > ax[j - 1]))
                    throw error("structural_equation: grid axis not strictly ascending");
            expect *= ax.size();
        }
        if (e.grid_values.size() != expect)
            throw error("structural_equation: grid values size mismatch");
        return e;
    }

    double eval(std::span<const double> parent_values) const {
        if (kind == kind_t::linear) {
            if (parent_values.size() != coeffs.size())
                throw error("structural_equation: expected " + std::to_string(coeffs.size()) +
                            " parent values, got " + std::to_string(parent_values.size()));
            double y = intercept;
            for (std::size_t j = 0; j < coeffs.size(); ++j) y += coeffs[j] * parent_values[j];
            return y;
        }
        return interpolate(parent_values);
    }

private:
    double interpolate(std::span<const double> x) const {
        const std::size_t m = grid_axes.size();
        if (x.size() != m)
            throw error("structural_equation: expected " + std::to_string(m) +
                        " parent values, got " + std::to_string(x.size()));
        // per-axis cell index and barycentric fraction
        std::vector<std::size_t> cell(m);
        std::vector<double> frac(m);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& ax = grid_axes[i];
            if (x[i] < ax.front() || x[i] > ax.back())
                throw domain_violation("structural_equation: value " + std::to_string(x[i]) +
                                       " outside declared box [" + std::to_string(ax.front()) +
                                       ", " + std::to_string(ax.back()) + "] on axis " +
                                       std::to_string(i));
            std::size_t j = 1;
            while (j + 1 < ax.size() && ax[j] < x[i]) ++j;
            cell[i] = j - 1;
            frac[i] = (x[i] - ax[j - 1]) / (ax[j] - ax[j - 1]);
        }
        // multilinear blend over the 2^m cell corners
        double y = 0.0;
        for (std::size_t corner = 0; corner < (std::size_t{1} << m); ++corner) {
            double w = 1.0;
            std::size_t flat = 0;
            for (std::size_t i = 0; i < m; ++i) {
                const bool hi = (corner >> i) & 1u;
                w *= hi ? frac[i] : 1.0 - frac[i];
                flat = flat * grid_axes[i].size() + cell[i] + (hi ? 1 : 0);
            }
            y += w * grid_values[flat];
        }
        return y;
    }
};

/// Bounded-support exogenous noise for one node.
struct noise_spec {
    enum class kind_t { uniform, truncated_gaussian, empirical };

    kind_t kind = kind_t::uniform;
    double a = 0.0, b = 0.0;                    // uniform(a,b)
    double mean = 0.0, sd = 1.0;                // truncated_gaussian
    double lo = 0.0, hi = 0.0;
    std::vector<double> points;                 // empirical

    static noise_spec uniform(double a, double b) {
        if (b < a) throw error("noise_spec: uniform with b < a");
        noise_spec s;
        s.kind = kind_t::uniform;
        s.a = a;
        s.b = b;
        return s;
    }

    static noise_spec truncated_gaussian(double mean, double sd, double lo, double hi) {
        if (hi < lo) throw error("noise_spec: truncation with hi < lo");
        if (sd < 0.0) throw error("noise_spec: negative sd");
        noise_spec s;
        s.kind = kind_t::truncated_gaussian;
        s.mean = mean;
        s.sd = sd;
        s.lo = lo;
        s.hi = hi;
        return s;
    }

    static noise_spec empirical(std::vector<double> pts) {
        if (pts.empty()) throw error("noise_spec: empirical needs at least one point");
        noise_spec s;
        s.kind = kind_t::empirical;
        s.points = std::move(pts);
        return s;
    }

    std::pair<double, double> support() const {
        switch (kind) {
            case kind_t::uniform: return {a, b};
            case kind_t::truncated_gaussian: return {lo, hi};
            case kind_t::empirical: {
                double mn = points.front(), mx = points.front();
                for (double x : points) {
                    mn = std::min(mn, x);
                    mx = std::max(mx, x);
                }
                return {mn, mx};
            }
        }
        return {0.0, 0.0};
    }

    double draw(rng& gen) const {
        switch (kind) {
            case kind_t::uniform:
                return a == b ? a : gen.uniform(a, b);
            case kind_t::truncated_gaussian: {
                if (sd == 0.0) return std::min(hi, std::max(lo, mean));
                for (int tries = 0; tries < 10000; ++tries) {
                    const double x = gen.normal(mean, sd);
                    if (x >= lo && x <= hi) return x;
                }
                throw error("noise_spec: truncation interval carries negligible mass");
            }
            case kind_t::empirical:
                return points[gen.index(points.size())];
        }
        return 0.0;
    }

    /// K equal-weight representative points (midpoint quantiles), sorted.
    std::vector<double> quantile_grid(std::size_t k) const {
        std::vector<double> g(k);
        for (std::size_t j = 0; j < k; ++j) {
            const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(k);
            g[j] = quantile(q);
        }
        return g;
    }

    double quantile(double q) const {
        switch (kind) {
            case kind_t::uniform:
                return a + (b - a) * q;
            case kind_t::truncated_gaussian: {
                if (sd == 0.0) return std::min(hi, std::max(lo, mean));
                const double ca = normal_cdf((lo - mean) / sd);
                const double cb = normal_cdf((hi - mean) / sd);
                const double target = ca + q * (cb - ca);
                // bisection on the standard normal cdf
                double zl = (lo - mean) / sd, zh = (hi - mean) / sd;
                for (int it = 0; it < 200; ++it) {
                    const double zm = 0.5 * (zl + zh);
                    (normal_cdf(zm) < target ? zl : zh) = zm;
                }
                return mean + sd * 0.5 * (zl + zh);
            }
            case kind_t::empirical: {
                std::vector<double> sorted = points;
                std::sort(sorted.begin(), sorted.end());
                auto j = static_cast<std::size_t>(q * static_cast<double>(sorted.size()));
                return sorted[std::min(j, sorted.size() - 1)];
            }
        }
        return 0.0;
    }

    static double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
};

/// Additive-noise structural causal model: X_i = f_i(X_Pa(i)) + U_i with
/// mutually independent bounded noises and scalar exogenous components.
/// The reduced form g: u -> x is a bijection evaluated by forward
/// substitution in topological order; its inverse is u_i = x_i - f_i(x_Pa(i)).
struct scm_model {
    dag_spec dag;
    std::vector<structural_equation> equations;
    std::vector<noise_spec> noise;
    std::vector<std::size_t> topo_order;

    std::size_t size() const { return dag.node_count; }

    static scm_model make(dag_spec d, std::vector<structural_equation> eqs,
                          std::vector<noise_spec> ns) {
        if (eqs.size() != d.node_count || ns.size() != d.node_count)
            throw error("scm_model: need one equation and one noise spec per node");
        for (std::size_t i = 0; i < d.node_count; ++i)
            if (eqs[i].kind == structural_equation::kind_t::linear &&
                eqs[i].coeffs.size() != d.parent_sets[i].size())
                throw error("scm_model: node " + std::to_string(i) + " has " +
                            std::to_string(eqs[i].coeffs.size()) + " coefficients for " +
                            std::to_string(d.parent_sets[i].size()) + " parents");
        scm_model m;
        m.topo_order = validate_dag(d);
        m.dag = std::move(d);
        m.equations = std::move(eqs);
        m.noise = std::move(ns);
        return m;
    }

    /// Independent-noise model U_i ~ uniform(a,b) on a chain-free graph.
    static scm_model independent(std::size_t n, double a, double b) {
        dag_spec d;
        d.node_count = n;
        d.parent_sets.assign(n, {});
        std::vector<structural_equation> eqs(n);
        std::vector<noise_spec> ns(n, noise_spec::uniform(a, b));
        return make(std::move(d), std::move(eqs), std::move(ns));
    }
};

enum class sample_space { feature, exogenous };

/// N weighted observation vectors, tagged with the space they live in.
struct sample_matrix {
    std::vector<std::vector<double>> rows;
    sample_space space = sample_space::feature;
    std::vector<double> weights;

    std::size_t size() const { return rows.size(); }
    std::size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }

    static sample_matrix of(std::vector<std::vector<double>> r, sample_space sp) {
        sample_matrix s;
        s.weights.assign(r.size(), 1.0 / static_cast<double>(r.size()));
        s.rows = std::move(r);
        s.space = sp;
        return s;
    }
};

namespace detail {
inline std::vector<double> gather_parents(const std::vector<double>& x,
                                          const std::vector<std::size_t>& parents) {
    std::vector<double> v(parents.size());
    for (std::size_t j = 0; j < parents.size(); ++j) v[j] = x[parents[j]];
    return v;
}
}  // namespace detail

/// x = g(u): forward substitution in topological order.
inline std::vector<double> reduced_form_forward(const scm_model& m,
                                                const std::vector<double>& u) {
    if (u.size() != m.size()) throw dimension_mismatch("reduced_form_forward: bad length");
    std::vector<double> x(m.size());
    for (std::size_t i : m.topo_order) {
        const auto pv = detail::gather_parents(x, m.dag.parent_sets[i]);
        x[i] = m.equations[i].eval(pv) + u[i];
    }
    return x;
}

/// u = g^{-1}(x): u_i = x_i - f_i(x_Pa(i)), no ordering needed.
inline std::vector<double> reduced_form_inverse(const scm_model& m,
                                                const std::vector<double>& x) {
    if (x.size() != m.size()) throw dimension_mismatch("reduced_form_inverse: bad length");
    std::vector<double> u(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto pv = detail::gather_parents(x, m.dag.parent_sets[i]);
        u[i] = x[i] - m.equations[i].eval(pv);
    }
    return u;
}

/// N i.i.d. feature-space draws; deterministic for a fixed seed.
inline sample_matrix sample(const scm_model& m, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw error("sample: need at least one draw");
    rng gen(seed);
    std::vector<std::vector<double>> rows;
    rows.reserve(n_samples);
    std::vector<double> u(m.size());
    for (std::size_t k = 0; k < n_samples; ++k) {
        for (std::size_t i = 0; i < m.size(); ++i) u[i] = m.noise[i].draw(gen);
        rows.push_back(reduced_form_forward(m, u));
    }
    return sample_matrix::of(std::move(rows), sample_space::feature);
}

inline sample_matrix push_to_exogenous(const scm_model& m, const sample_matrix& s) {
    if (s.space != sample_space::feature)
        throw error("push_to_exogenous: sample already exogenous");
    sample_matrix out = s;
    out.space = sample_space::exogenous;
    for (auto& row : out.rows) row = reduced_form_inverse(m, row);
    return out;
}

inline sample_matrix push_to_feature(const scm_model& m, const sample_matrix& s) {
    if (s.space != sample_space::exogenous)
        throw error("push_to_feature: sample already in feature space");
    sample_matrix out = s;
    out.space = sample_space::feature;
    for (auto& row : out.rows) row = reduced_form_forward(m, row);
    return out;
}

/// Per-coordinate empirical marginals of an exogenous sample, duplicates
/// merged with summed weights.
inline std::vector<discrete_distribution> exogenous_marginals(const sample_matrix& s) {
    if (s.space != sample_space::exogenous)
        throw error("exogenous_marginals: expects an exogenous sample");
    std::vector<discrete_distribution> out;
    out.reserve(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i)
        out.push_back(scalar_marginal(s.rows, s.weights, i));
    return out;
}

/// Product measure of the per-coordinate empirical marginals: one atom per
/// combination of observed coordinate values, weight = product of marginal
/// weights. Atom count is prod_i N_i and is capped.
inline discrete_distribution product_of_marginals(const std::vector<discrete_distribution>& marg,
                                                  std::size_t cap = default_grid_cap) {
    std::size_t total = 1;
    for (const auto& mi : marg) {
        if (mi.size() == 0 || total > cap / mi.size())
            throw grid_too_large("product grid exceeds cap of " + std::to_string(cap) +
                                 " atoms");
        total *= mi.size();
    }
    const std::size_t n = marg.size();
    discrete_distribution out;
    out.atoms.reserve(total);
    out.weights.reserve(total);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::vector<double> atom(n);
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            atom[i] = marg[i].atoms[idx[i]][0];
            w *= marg[i].weights[idx[i]];
        }
        out.atoms.push_back(std::move(atom));
        out.weights.push_back(w);
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < marg[i].size()) break;
            idx[i] = 0;
        }
    }
    return out;
}

inline discrete_distribution product_empirical(const scm_model&, const sample_matrix& s,
                                               std::size_t cap = default_grid_cap) {
    return product_of_marginals(exogenous_marginals(s), cap);
}

}  // namespace scot
