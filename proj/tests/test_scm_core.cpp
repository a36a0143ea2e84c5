#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scot/scm.hpp"

using namespace scot;

namespace {

scm_model two_node_model(double alpha, noise_spec na, noise_spec ne) {
    dag_spec d;
    d.node_count = 2;
    d.parent_sets = {{}, {0}};
    return scm_model::make(d, {structural_equation::zero(),
                               structural_equation::linear({alpha})},
                           {std::move(na), std::move(ne)});
}

scm_model random_linear_model(rng& gen, std::size_t n) {
    dag_spec d;
    d.node_count = n;
    d.parent_sets.resize(n);
    std::vector<structural_equation> eqs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (gen.unit() < 0.5) d.parent_sets[i].push_back(j);
        std::vector<double> coeffs(d.parent_sets[i].size());
        for (double& c : coeffs) c = gen.uniform(-1.0, 1.0);
        eqs.push_back(structural_equation::linear(std::move(coeffs), gen.uniform(-0.5, 0.5)));
    }
    std::vector<noise_spec> ns(n, noise_spec::uniform(-1.0, 1.0));
    return scm_model::make(std::move(d), std::move(eqs), std::move(ns));
}

}  // namespace

TEST_CASE("validate_dag orders chains and free graphs") {
    dag_spec chain{3, {{}, {0}, {1}}};
    CHECK(validate_dag(chain) == std::vector<std::size_t>{0, 1, 2});

    dag_spec free{3, {{}, {}, {}}};
    CHECK(validate_dag(free) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("validate_dag reports a cycle") {
    dag_spec bad{2, {{1}, {0}}};
    CHECK_THROWS_AS(validate_dag(bad), cycle_detected);
    try {
        validate_dag(bad);
    } catch (const cycle_detected& e) {
        CHECK(std::string(e.what()).find("->") != std::string::npos);
    }
}

TEST_CASE("validate_dag rejects bad parent indices") {
    CHECK_THROWS_AS(validate_dag(dag_spec{2, {{}, {5}}}), error);
    CHECK_THROWS_AS(validate_dag(dag_spec{2, {{0}, {}}}), error);
}

TEST_CASE("reduced form forward substitutes in causal order") {
    auto m = two_node_model(0.5, noise_spec::uniform(-1, 1), noise_spec::uniform(-1, 1));
    const auto x = reduced_form_forward(m, {1.0, 1.0});
    CHECK(x[0] == Catch::Approx(1.0));
    CHECK(x[1] == Catch::Approx(1.5));

    auto id = scm_model::independent(3, -1.0, 1.0);
    const auto y = reduced_form_forward(id, {0.3, -0.2, 0.9});
    CHECK(y == std::vector<double>{0.3, -0.2, 0.9});

    dag_spec chain{3, {{}, {0}, {1}}};
    auto c = scm_model::make(chain,
                             {structural_equation::zero(), structural_equation::linear({1.0}),
                              structural_equation::linear({1.0})},
                             std::vector<noise_spec>(3, noise_spec::uniform(-1, 1)));
    const auto z = reduced_form_forward(c, {1.0, 1.0, 1.0});
    CHECK(z[0] == Catch::Approx(1.0));
    CHECK(z[1] == Catch::Approx(2.0));
    CHECK(z[2] == Catch::Approx(3.0));
}

TEST_CASE("reduced form inverse undoes forward") {
    auto m = two_node_model(0.5, noise_spec::uniform(-1, 1), noise_spec::uniform(-1, 1));
    const auto u = reduced_form_inverse(m, {1.0, 1.5});
    CHECK(u[0] == Catch::Approx(1.0));
    CHECK(u[1] == Catch::Approx(1.0));

    rng gen(2024);
    for (int rep = 0; rep < 20; ++rep) {
        auto model = random_linear_model(gen, 4);
        std::vector<double> x(4);
        for (double& v : x) v = gen.uniform(-2.0, 2.0);
        const auto back = reduced_form_forward(model, reduced_form_inverse(model, x));
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(std::abs(back[i] - x[i]) < 1e-10);
    }
}

TEST_CASE("bijection holds on 1000 seeded points") {
    rng gen(7);
    auto model = random_linear_model(gen, 5);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> u(5);
        for (double& v : u) v = gen.uniform(-3.0, 3.0);
        const auto x = reduced_form_forward(model, u);
        const auto u2 = reduced_form_inverse(model, x);
        for (std::size_t i = 0; i < 5; ++i) REQUIRE(std::abs(u2[i] - u[i]) < 1e-10);
    }
}

TEST_CASE("x - f(x) has unit-lower-triangular Jacobian in causal order") {
    rng gen(11);
    auto model = random_linear_model(gen, 4);
    const auto order = model.topo_order;
    std::vector<std::size_t> rank(4);
    for (std::size_t k = 0; k < 4; ++k) rank[order[k]] = k;

    const double h = 1e-5;
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> x(4);
        for (double& v : x) v = gen.uniform(-2.0, 2.0);
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                auto xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                const double jac =
                    (reduced_form_inverse(model, xp)[i] - reduced_form_inverse(model, xm)[i]) /
                    (2 * h);
                if (i == j) {
                    CHECK(std::abs(jac - 1.0) < 1e-6);
                } else if (rank[i] < rank[j]) {
                    CHECK(std::abs(jac) < 1e-6);  // no mass above the diagonal
                }
            }
        }
    }
}

TEST_CASE("sampling is deterministic and respects degenerate noise") {
    auto id = scm_model::independent(2, 0.0, 0.0);
    const auto s = sample(id, 1, 7);
    REQUIRE(s.size() == 1);
    CHECK(s.rows[0] == std::vector<double>{0.0, 0.0});
    CHECK(s.weights[0] == Catch::Approx(1.0));

    auto m = two_node_model(0.5, noise_spec::uniform(-1, 1), noise_spec::uniform(-1, 1));
    const auto s1 = sample(m, 200, 99);
    const auto s2 = sample(m, 200, 99);
    REQUIRE(s1.rows == s2.rows);  // bit-identical
    const auto s3 = sample(m, 200, 100);
    CHECK(s1.rows != s3.rows);
}

TEST_CASE("sample correlation matches the linear-model moments") {
    auto m = two_node_model(0.5, noise_spec::uniform(-1, 1), noise_spec::uniform(-1, 1));
    const auto s = sample(m, 10000, 12345);
    double ma = 0, me = 0;
    for (const auto& r : s.rows) {
        ma += r[0];
        me += r[1];
    }
    ma /= 10000;
    me /= 10000;
    double va = 0, ve = 0, cov = 0;
    for (const auto& r : s.rows) {
        va += (r[0] - ma) * (r[0] - ma);
        ve += (r[1] - me) * (r[1] - me);
        cov += (r[0] - ma) * (r[1] - me);
    }
    const double corr = cov / std::sqrt(va * ve);
    CHECK(corr == Catch::Approx(0.5 / std::sqrt(1.25)).margin(0.02));
}

TEST_CASE("push to exogenous and back round-trips") {
    auto id = scm_model::independent(2, -1.0, 1.0);
    auto s = sample(id, 5, 3);
    const auto e = push_to_exogenous(id, s);
    CHECK(e.space == sample_space::exogenous);
    CHECK(e.rows == s.rows);  // f == 0 keeps values

    auto m = two_node_model(0.5, noise_spec::uniform(-1, 1), noise_spec::uniform(-1, 1));
    sample_matrix one = sample_matrix::of({{1.0, 1.5}}, sample_space::feature);
    const auto eu = push_to_exogenous(m, one);
    CHECK(eu.rows[0][0] == Catch::Approx(1.0));
    CHECK(eu.rows[0][1] == Catch::Approx(1.0));

    auto s2 = sample(m, 50, 17);
    const auto back = push_to_feature(m, push_to_exogenous(m, s2));
    for (std::size_t k = 0; k < s2.size(); ++k)
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(std::abs(back.rows[k][i] - s2.rows[k][i]) < 1e-10);
}

TEST_CASE("product_empirical expands the coordinate grid") {
    auto id = scm_model::independent(2, -1.0, 1.0);
    sample_matrix s = sample_matrix::of({{0.0, 0.0}, {1.0, 1.0}}, sample_space::exogenous);
    const auto prod = product_empirical(id, s);
    REQUIRE(prod.size() == 4);
    for (double w : prod.weights) CHECK(w == Catch::Approx(0.25));

    auto id1 = scm_model::independent(1, -1.0, 1.0);
    sample_matrix s1 =
        sample_matrix::of({{0.2}, {0.4}, {0.2}}, sample_space::exogenous);
    const auto p1 = product_empirical(id1, s1);
    REQUIRE(p1.size() == 2);  // duplicate value merged
    CHECK(p1.atoms[0][0] == Catch::Approx(0.2));
    CHECK(p1.weights[0] == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("product_empirical marginals match the inputs") {
    rng gen(5);
    auto id = scm_model::independent(3, -1.0, 1.0);
    auto s = push_to_exogenous(id, sample(id, 12, 21));
    const auto marg = exogenous_marginals(s);
    const auto prod = product_of_marginals(marg);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto back = scalar_marginal(prod.atoms, prod.weights, i);
        REQUIRE(back.size() == marg[i].size());
        for (std::size_t k = 0; k < back.size(); ++k) {
            CHECK(back.atoms[k][0] == Catch::Approx(marg[i].atoms[k][0]));
            CHECK(std::abs(back.weights[k] - marg[i].weights[k]) < 1e-12);
        }
    }
}

TEST_CASE("product_empirical enforces the grid cap") {
    auto id = scm_model::independent(2, -1.0, 1.0);
    auto s = push_to_exogenous(id, sample(id, 40, 2));
    CHECK_THROWS_AS(product_empirical(id, s, 100), grid_too_large);
}

TEST_CASE("tabulated equations interpolate and police their box") {
    // table of f(a) = 2a on [-1, 1]
    auto eq = structural_equation::tabulated({{-1.0, 0.0, 1.0}}, {-2.0, 0.0, 2.0});
    dag_spec d{2, {{}, {0}}};
    auto m = scm_model::make(d, {structural_equation::zero(), eq},
                             {noise_spec::uniform(-0.5, 0.5), noise_spec::uniform(-0.5, 0.5)});
    const auto x = reduced_form_forward(m, {0.25, 0.0});
    CHECK(x[1] == Catch::Approx(0.5));
    CHECK_THROWS_AS(reduced_form_forward(m, {2.0, 0.0}), domain_violation);
}

TEST_CASE("noise quantile grids have matched moments") {
    auto g = noise_spec::truncated_gaussian(0.0, 1.0, -4.5, 4.5).quantile_grid(200);
    double mean = 0, var = 0;
    for (double v : g) mean += v;
    mean /= 200;
    for (double v : g) var += (v - mean) * (v - mean);
    var /= 200;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == Catch::Approx(1.0).margin(0.02));
}
