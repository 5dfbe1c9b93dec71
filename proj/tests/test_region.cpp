#include "doctest.h"

#include "mtdc/region.hpp"
#include "support/oracles.hpp"

#include <random>

using namespace mtdc;

namespace {

/// Hand-built constraint set over one axis.
ConstraintSet single_constraint(double a, double h, double delta, double k_star) {
    ConstraintSet cs;
    SlopeConstraint c;
    c.mode = 0;
    c.a = Vec::Constant(1, a);
    c.h = Mat::Constant(1, 1, h);
    c.delta = delta;
    cs.constraints.push_back(c);
    cs.k_star = Vec::Constant(1, k_star);
    return cs;
}

} // namespace

TEST_CASE("linear constraint bound") {
    // delta = 1, a = 0.5, H = 0, k = 10 -> k_sup = 12
    ConstraintSet cs = single_constraint(0.5, 0.0, 1.0, 10.0);
    SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
    CHECK(r.bounded);
    CHECK(r.k_sup == doctest::Approx(12.0));
    CHECK(r.binding_mode == 0);
}

TEST_CASE("pure quadratic constraint keeps the 1/2 factor") {
    // delta = 1, a = 0, H = 0.5: 1/4 dk^2 < 1 -> dk < 2
    ConstraintSet cs = single_constraint(0.0, 0.5, 1.0, 7.0);
    SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
    CHECK(r.k_sup == doctest::Approx(9.0));
}

TEST_CASE("the minimum across constraints binds") {
    ConstraintSet cs = single_constraint(0.5, 0.0, 1.0, 0.0); // bound 2
    SlopeConstraint c2;
    c2.mode = 7;
    c2.a = Vec::Constant(1, 0.2);
    c2.h = Mat::Zero(1, 1);
    c2.delta = 1.0; // bound 5
    cs.constraints.push_back(c2);
    SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
    CHECK(r.k_sup == doctest::Approx(2.0));
    CHECK(r.binding_mode == 0);
}

TEST_CASE("sign cases of the scalar quadratic") {
    SUBCASE("downward parabola, no real roots: unbounded") {
        ConstraintSet cs = single_constraint(0.1, -2.0, 1.0, 0.0);
        SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
        CHECK(!r.bounded);
        CHECK(r.binding_mode == -1);
        CHECK(r.k_sup > 1e3);
    }
    SUBCASE("downward parabola with a positive violation interval") {
        // q(x) = -0.5 x^2 + 1.1 x - 0.5 > 0 on (0.508..., 1.69...): the lower
        // root binds. Constraint form: a x + h/2 x^2 < delta.
        ConstraintSet cs = single_constraint(1.1, -1.0, 0.5, 0.0);
        SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
        CHECK(r.bounded);
        double lo = (1.1 - std::sqrt(1.1 * 1.1 - 4.0 * 0.5 * 0.5)) / (2.0 * 0.5);
        CHECK(r.k_sup == doctest::Approx(lo));
    }
    SUBCASE("downward parabola whose violation lies behind us: unbounded") {
        // feasible at 0 and for all x >= 0
        ConstraintSet cs = single_constraint(-3.0, -0.5, 0.5, 0.0);
        SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
        CHECK(!r.bounded);
    }
    SUBCASE("linear with negative slope: unbounded") {
        ConstraintSet cs = single_constraint(-0.5, 0.0, 1.0, 0.0);
        SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
        CHECK(!r.bounded);
    }
}

TEST_CASE("infeasible expansion point is reported") {
    ConstraintSet cs = single_constraint(0.5, 0.0, -1.0, 0.0); // delta < 0
    CHECK_THROWS_AS(estimate_supremum(cs, 0, Vec::Zero(1)), InfeasibleExpansionError);
}

TEST_CASE("binding constraint holds with equality at the supremum") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ConstraintSet cs;
        cs.k_star = Vec::Zero(2);
        for (int c = 0; c < 4; ++c) {
            SlopeConstraint sc;
            sc.mode = c;
            sc.a = Vec::NullaryExpr(2, [&]() { return u(rng); });
            sc.h = Mat::Zero(2, 2);
            sc.h(0, 0) = u(rng) - 0.5;
            sc.h(1, 1) = u(rng) - 0.5;
            sc.h(0, 1) = sc.h(1, 0) = 0.2 * (u(rng) - 0.5);
            sc.delta = u(rng) * 3.0;
            cs.constraints.push_back(sc);
        }
        Vec dev = Vec::Zero(2);
        SupremumResult r = estimate_supremum(cs, 0, dev);
        if (!r.bounded) continue;
        for (const SlopeConstraint& c : cs.constraints) {
            if (c.mode != r.binding_mode) continue;
            Vec dk = dev;
            dk(0) += r.max_deviation;
            CHECK(std::abs(constraint_value(c, dk) - c.delta) <=
                  1e-9 * std::max(1.0, std::abs(c.delta)));
        }
    }
}

TEST_CASE("adding a constraint never increases the supremum") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ConstraintSet cs;
        cs.k_star = Vec::Zero(1);
        SlopeConstraint c;
        c.mode = 0;
        c.a = Vec::Constant(1, u(rng));
        c.h = Mat::Constant(1, 1, u(rng) - 0.4);
        c.delta = u(rng) * 2;
        cs.constraints.push_back(c);
        SupremumOptions opts;
        SupremumResult r1 = estimate_supremum(cs, 0, Vec::Zero(1), opts);
        SlopeConstraint extra = c;
        extra.mode = 1;
        extra.a = Vec::Constant(1, u(rng));
        extra.delta = u(rng) * 2;
        cs.constraints.push_back(extra);
        SupremumResult r2 = estimate_supremum(cs, 0, Vec::Zero(1), opts);
        CHECK(r2.k_sup <= r1.k_sup + 1e-12);
    }
}

TEST_CASE("constraints deduplicate conjugate pairs") {
    oracle::PlantedFamily fam = oracle::make_planted();
    Vec k(2);
    k << 1.0, 0.5;
    EigenSolution sol = eig_full(fam.a_of(k));
    std::vector<Mat> ms{fam.da(k, 0), fam.da(k, 1)};
    std::vector<Mat> hs{fam.d2a(k, 0, 0), fam.d2a(k, 0, 1), fam.d2a(k, 1, 0), fam.d2a(k, 1, 1)};
    SensitivityBundle b = sensitivity_bundle(sol, ms, &hs);
    ConstraintSet cs = build_constraints(b, sol, k);
    // 3 conjugate pairs + 2 real modes -> 5 constraints out of 8 eigenvalues
    CHECK(cs.constraints.size() == 5);
    CHECK(cs.excluded.empty());
}

TEST_CASE("single real mode bundle gives the documented constraint") {
    Mat a(1, 1);
    a << -1.0;
    Mat m(1, 1);
    m << 0.5;
    EigenSolution sol = eig_full(a);
    SensitivityBundle b = sensitivity_bundle(sol, {m});
    ConstraintSet cs = build_constraints(b, sol, Vec::Zero(1));
    REQUIRE(cs.constraints.size() == 1);
    CHECK(cs.constraints[0].a(0) == doctest::Approx(0.5));
    CHECK(cs.constraints[0].delta == doctest::Approx(1.0));
    SupremumResult r = estimate_supremum(cs, 0, Vec::Zero(1));
    CHECK(r.k_sup == doctest::Approx(2.0)); // 0.5 dk < 1
}

TEST_CASE("planted family: estimate, loci and cross-validation are exact") {
    oracle::PlantedFamily fam = oracle::make_planted();
    Vec ka(2), kb(2);
    ka << 1.0, 0.5;
    kb << 2.5, -0.5;

    auto constraints_at = [&](const Vec& k) {
        EigenSolution sol = eig_full(fam.a_of(k));
        std::vector<Mat> ms{fam.da(k, 0), fam.da(k, 1)};
        std::vector<Mat> hs{fam.d2a(k, 0, 0), fam.d2a(k, 0, 1), fam.d2a(k, 1, 0),
                            fam.d2a(k, 1, 1)};
        SensitivityBundle b = sensitivity_bundle(sol, ms, &hs);
        return build_constraints(b, sol, k);
    };

    ConstraintSet cs_a = constraints_at(ka);
    ConstraintSet cs_b = constraints_at(kb);

    double truth = ka(0) + oracle::planted_crossing(fam, ka, 0);
    SupremumResult self_a = estimate_supremum(cs_a, 0, Vec::Zero(2));
    CHECK(self_a.k_sup == doctest::Approx(truth).epsilon(1e-6));

    // cross-validation from the other expansion point is identical on an
    // exactly quadratic spectrum
    SupremumResult cross = estimate_supremum(cs_b, 0, Vec(ka - kb));
    CHECK(cross.k_sup == doctest::Approx(self_a.k_sup).epsilon(1e-8));

    // zero deviations reduce cross-validation to self-validation exactly
    auto self_again = cross_validate(cs_a, ka);
    CHECK(self_again[0].k_sup == self_a.k_sup);

    // brute-force loci bisection on the same family
    LociOptions lo;
    lo.k_tol = 1e-7;
    lo.f_tol = 1e-12;
    lo.samples = 40;
    LociResult loci = loci_supremum(
        [&](double kx) {
            Vec k = ka;
            k(0) = kx;
            return fam.a_of(k);
        },
        ka(0), ka(0) + 3.0 * oracle::planted_crossing(fam, ka, 0), lo);
    CHECK(loci.k_sup == doctest::Approx(truth).epsilon(1e-6));
}

TEST_CASE("loci reports a missing sign change") {
    Mat stable = Mat::Zero(2, 2);
    stable.diagonal() << -1, -2;
    CHECK_THROWS_AS(
        loci_supremum([&](double) { return stable; }, 0.0, 10.0, LociOptions{}),
        ConvergenceError);
}

TEST_CASE("loci flags multiple crossings and returns the smallest") {
    // max Re crosses upward near k = 1 and again near k = 3
    auto build = [](double k) {
        Mat a = Mat::Zero(2, 2);
        double re = -std::sin(k * 3.14159265358979);
        a.diagonal() << re - 1e-3, -5.0;
        return a;
    };
    LociOptions lo;
    lo.samples = 63;
    LociResult r = loci_supremum(build, 0.5, 3.6, lo);
    CHECK(r.multiple_crossings);
    CHECK(r.k_sup == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("region scans classify the expansion cell stable and match planted truth") {
    oracle::PlantedFamily fam = oracle::make_planted();
    Vec k(2);
    k << 1.0, 0.5;
    EigenSolution sol = eig_full(fam.a_of(k));
    std::vector<Mat> ms{fam.da(k, 0), fam.da(k, 1)};
    std::vector<Mat> hs{fam.d2a(k, 0, 0), fam.d2a(k, 0, 1), fam.d2a(k, 1, 0), fam.d2a(k, 1, 1)};
    SensitivityBundle b = sensitivity_bundle(sol, ms, &hs);
    ConstraintSet cs = build_constraints(b, sol, k);

    const int res = 21;
    double lo0 = 0.0, hi0 = 14.0, lo1 = -3.0, hi1 = 3.0;
    RegionGrid taylor =
        scan_region_taylor(cs, 0, 1, Vec::Zero(2), lo0, hi0, lo1, hi1, res);
    RegionGrid loci = scan_region_loci(
        [&](double k0, double k1) {
            Vec kk(2);
            kk << k0, k1;
            return fam.a_of(kk);
        },
        0, 1, lo0, hi0, lo1, hi1, res);

    // the expansion point cell is stable
    int ci = static_cast<int>(std::lround((k(0) - lo0) / (hi0 - lo0) * (res - 1)));
    int cj = static_cast<int>(std::lround((k(1) - lo1) / (hi1 - lo1) * (res - 1)));
    CHECK(taylor.stable(ci, cj) == 1);

    // exact quadratics: the Taylor classification equals the brute force one
    int agree = 0;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j)
            if (taylor.stable(i, j) == loci.stable(i, j)) ++agree;
    CHECK(agree == res * res);

    // degenerate 1x1 grid equals a single point classification
    RegionGrid one = scan_region_taylor(cs, 0, 1, Vec::Zero(2), k(0), k(0), k(1), k(1), 1);
    CHECK(one.stable(0, 0) == 1);
}
