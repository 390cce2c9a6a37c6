#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "media/media.hpp"

#include <cmath>

using namespace homlab;

TEST_CASE("constant media: identity and diagonal cases") {
    Grid g = Grid::torus(2, 8, 1.0);
    CoefficientField a = constant_medium(g, Eigen::Matrix2d::Identity());
    CHECK(a.lambda == doctest::Approx(1.0));
    CHECK(a.symmetric);
    Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
    D(0, 0) = 0.25;
    D(1, 1) = 1.0;
    CoefficientField ad = constant_medium(g, D);
    CHECK(ad.lambda == doctest::Approx(0.25));
}

TEST_CASE("second ellipticity branch rejects too-large coefficients") {
    Grid g = Grid::torus(2, 8, 1.0);
    // xi.a xi = 1.5 |xi|^2 < |a xi|^2 = 2.25 |xi|^2
    CHECK_THROWS_AS(constant_medium(g, 1.5 * Eigen::Matrix2d::Identity()), MediaError);
    try {
        constant_medium(g, 1.5 * Eigen::Matrix2d::Identity());
    } catch (const MediaError& e) {
        CHECK(std::string(e.what()).find("xi") != std::string::npos);
    }
}

TEST_CASE("skew part drops from the quadratic form") {
    Grid g = Grid::torus(2, 8, 1.0);
    Eigen::Matrix2d A;
    A << 0.5, 0.3, -0.3, 0.5;
    CoefficientField a = constant_medium(g, A);
    CHECK_FALSE(a.symmetric);
    CHECK(a.lambda == doctest::Approx(0.5)); // quadratic form sees 0.5 I only
    Eigen::Vector2d xi(1.0, 0.0);
    CHECK(xi.dot(A * xi) >= (A * xi).squaredNorm() - 1e-12);
}

TEST_CASE("periodic checkerboard: contrast 1 is the constant medium") {
    Grid g = Grid::torus(2, 16, 1.0);
    CoefficientField a = periodic_checkerboard(g, 1.0, 2);
    for (int l = 0; l < 2; ++l)
        for (double v : a.diag[static_cast<std::size_t>(l)]) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("periodic checkerboard rejects misaligned cells") {
    Grid g = Grid::torus(2, 16, 1.0);
    CHECK_THROWS_AS(periodic_checkerboard(g, 4.0, 3), MediaError);
}

TEST_CASE("random checkerboard is reproducible and seed-sensitive") {
    Grid g = Grid::torus(2, 32, 1.0);
    CoefficientField a1 = random_checkerboard(g, 7, 0.25, 1.0, 1.0 / 8);
    CoefficientField a2 = random_checkerboard(g, 7, 0.25, 1.0, 1.0 / 8);
    CoefficientField a3 = random_checkerboard(g, 8, 0.25, 1.0, 1.0 / 8);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < a1.diag[0].size(); ++i) {
        same = same && a1.diag[0][i] == a2.diag[0][i];
        differ = differ || a1.diag[0][i] != a3.diag[0][i];
    }
    CHECK(same);
    CHECK(differ);
    CHECK(a1.rng_algorithm == "splitmix64");
}

TEST_CASE("random checkerboard cell frequencies sit within 3 sigma of 1/2") {
    Grid g = Grid::torus(2, 64, 1.0);
    const double cell = 1.0 / 16;
    CoefficientField a = random_checkerboard(g, 7, 0.25, 1.0, cell);
    int hi = 0, total = 0;
    for (int ci = 0; ci < 16; ++ci)
        for (int cj = 0; cj < 16; ++cj) {
            std::array<int, 3> node{ci * 4 + 1, cj * 4 + 1, 0};
            const double d0 = a.diag[0][g.index(node)];
            ++total;
            if (d0 > 0.5) ++hi;
        }
    const double p = static_cast<double>(hi) / total;
    const double sigma = std::sqrt(0.25 / total);
    CHECK(std::abs(p - 0.5) <= 3.0 * sigma);
}

TEST_CASE("masked re-randomization only touches cells outside rho") {
    Grid g = Grid::torus(2, 64, 1.0, -0.5);
    const double cell = 1.0 / 16;
    CoefficientField inside_only = random_checkerboard_masked(g, 3, 9, 0.2, 0.25, 1.0, cell);
    CoefficientField base = random_checkerboard(g, 3, 0.25, 1.0, cell);
    CoefficientField same = random_checkerboard_masked(g, 3, 3, 0.2, 0.25, 1.0, cell);
    bool identical = true;
    for (std::size_t i = 0; i < base.diag[0].size(); ++i) identical = identical && same.diag[0][i] == base.diag[0][i];
    CHECK(identical);
    for (std::size_t i = 0; i < base.diag[0].size(); ++i) {
        const auto c = g.coords(i);
        auto x = g.position(c);
        x[0] += 0.5 * g.h;
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        if (r < 0.2 - cell) CHECK(inside_only.diag[0][i] == base.diag[0][i]);
    }
}

TEST_CASE("skew perturbation: zero amplitude, transpose algebra, lambda") {
    Grid g = Grid::torus(2, 32, 1.0);
    CoefficientField base = smooth_isotropic(g, 0.6, 0.2, 1.0);
    CoefficientField a0 = skew_perturbation(base, 0.0, "default");
    for (std::size_t i = 0; i < base.diag[0].size(); ++i) CHECK(a0.diag[0][i] == base.diag[0][i]);
    CHECK(a0.offd.at(0, 1)[5] == 0.0);

    CoefficientField ap = skew_perturbation(base, 0.15, "default");
    CHECK_FALSE(ap.symmetric);
    CHECK(ap.lambda == doctest::Approx(base.lambda).epsilon(1e-10));
    CoefficientField at = transpose_medium(ap);
    CoefficientField am = skew_perturbation(base, -0.15, "default");
    for (std::size_t i = 0; i < at.offd.at(0, 1).size(); ++i) {
        CHECK(at.offd.at(0, 1)[i] == doctest::Approx(am.offd.at(0, 1)[i]).epsilon(1e-13));
        CHECK(at.offd.at(1, 0)[i] == doctest::Approx(am.offd.at(1, 0)[i]).epsilon(1e-13));
    }
}

TEST_CASE("transpose is an involution and preserves the audit") {
    Grid g = Grid::torus(2, 16, 1.0);
    CoefficientField base = smooth_isotropic(g, 0.6, 0.2, 1.0);
    CoefficientField a = skew_perturbation(base, 0.1, "default");
    CoefficientField att = transpose_medium(transpose_medium(a));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (std::size_t idx = 0; idx < a.offd.at(i, j).size(); ++idx)
                CHECK(att.offd.at(i, j)[idx] == a.offd.at(i, j)[idx]);
    CHECK(transpose_medium(a).lambda == doctest::Approx(a.lambda));
    CoefficientField bt = transpose_medium(base);
    for (std::size_t i = 0; i < base.diag[0].size(); ++i) CHECK(bt.diag[0][i] == base.diag[0][i]);
}

TEST_CASE("audit covers both branches exactly") {
    Eigen::Matrix3d A = 0.8 * Eigen::Matrix3d::Identity();
    auto rep = audit_matrix(A, 64);
    CHECK(rep.pass);
    CHECK(rep.lambda == doctest::Approx(0.8));
    CHECK(rep.worst_second_branch >= 0.8 * (1 - 0.8) - 1e-12);
}

TEST_CASE("splitmix64 is the documented reference stream") {
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
    CHECK(splitmix64(1) == 0x910A2DEC89025CC1ULL);
}
