#include "trapspec/errors.hpp"
#include "trapspec/inverse.hpp"
#include "trapspec/io.hpp"
#include "trapspec/properties.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

using namespace trapspec;
using doctest::Approx;

namespace {

const double kDeg = kPi / 180.0;

void checkSame(const Trapezoid& got, const Trapezoid& want, double tol) {
    CHECK(std::abs(got.B() - want.B()) <= tol * want.B());
    CHECK(std::abs(got.h() - want.h()) <= tol * want.B());
    CHECK(std::abs(got.alpha() - want.alpha()) <= tol);
    CHECK(std::abs(got.beta() - want.beta()) <= tol);
}

double sAt(const Trapezoid& t) { return (t.perimeter() - 2 * t.area() / t.h()) / t.h(); }

}  // namespace

TEST_CASE("rectangle from the first eigenvalue and the area") {
    const auto sq = reconstructRectangle(2 * kPi * kPi, 1.0);
    CHECK(sq.a == Approx(1.0).epsilon(1e-12));
    CHECK(sq.c == Approx(1.0).epsilon(1e-12));
    const auto r = reconstructRectangle(1.25 * kPi * kPi, 2.0);
    CHECK(r.a == Approx(1.0).epsilon(1e-12));
    CHECK(r.c == Approx(2.0).epsilon(1e-12));
    CHECK(r.asTrapezoid().isRectangle());
    CHECK_THROWS_AS(reconstructRectangle(kPi * kPi, 1.0), NoSolution);
}

TEST_CASE("solveFromH on the equilateral-sided trapezoid") {
    const double h = std::sqrt(3.0) / 2;
    const auto sol = solveFromH(3 * std::sqrt(3.0) / 4, 5.0, 9 / (kPi * kPi), h);
    const auto want = Trapezoid::make(2.0, h, kPi / 3, kPi / 3);
    checkSame(sol.trapezoid, want, 1e-10);
    CHECK(sol.trapezoid.b() == Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(sol.nonUnique());
}

TEST_CASE("solveFromH rejects rectangle data") {
    CHECK_THROWS_AS(solveFromH(2.0, 6.0, kRectangleQ, 1.0), NoSolution);
    CHECK_THROWS_AS(solveFromH(2.0, 6.0, 0.5 * kRectangleQ, 1.0), NoSolution);
}

TEST_CASE("solveFromLFHalpha") {
    const auto sol = solveFromLFHalpha(5.0, 9 / (kPi * kPi), 3.0, std::sqrt(3.0));
    checkSame(sol.trapezoid, Trapezoid::make(2.0, std::sqrt(3.0) / 2, kPi / 3, kPi / 3), 1e-10);

    // Degenerate Fagnano orbit: lF = 2 hAlpha puts alpha at pi/2.
    const auto t = Trapezoid::make(2.0, 0.8, kHalfPi, 1.0);
    const auto c = orbitCatalog(t);
    const auto deg = solveFromLFHalpha(t.perimeter(), angleInvariant(t).q, c.fagnano->length, c.twoHAlpha.length / 2);
    CHECK(deg.trapezoid.alpha() == Approx(kHalfPi).epsilon(1e-12));
    checkSame(deg.trapezoid, t, 1e-8);

    CHECK_THROWS_AS(solveFromLFHalpha(5.0, 9 / (kPi * kPi), 3.6, std::sqrt(3.0)), NoSolution);
    CHECK_THROWS_AS(solveFromLFHalpha(5.0, 9 / (kPi * kPi), 3.0, std::sqrt(3.0), 1.0), InconsistentInvariants);
}

TEST_CASE("random round trips") {
    std::mt19937_64 rng(17);
    int checked = 0, lf = 0;
    while (checked < 100) {
        const auto t = randomTrapezoid(rng);
        const double q = angleInvariant(t).q;
        if ((q - kRectangleQ) / kRectangleQ <= 2e-3) continue;  // treated as a rectangle upstream
        ++checked;
        const auto sol = solveFromH(t.area(), t.perimeter(), q, t.h());
        checkSame(sol.trapezoid, t, 1e-8);
        CHECK(sol.residual < 1e-10);
        CHECK(std::abs(sAt(sol.trapezoid) - sAt(t)) <= 1e-12 * sAt(t));
        const auto c = orbitCatalog(t);
        if (c.fagnano && c.fagnano->existsInside) {
            ++lf;
            const auto s2 = solveFromLFHalpha(t.perimeter(), q, c.fagnano->length, c.twoHAlpha.length / 2, t.area());
            checkSame(s2.trapezoid, t, 1e-8);
        }
    }
    CHECK(lf > 0);
}

TEST_CASE("case (2) is infeasible for isosceles data") {
    for (double a : {50.0, 60.0, 70.0, 80.0}) {
        const auto t = Trapezoid::make(2.0, 1.0, a * kDeg, a * kDeg);
        const auto c = orbitCatalog(t);
        CHECK_THROWS_AS(solveCaseTwo(angleInvariant(t).q, c.fagnano->length, c.twoHAlpha.length / 2), NoSolution);
    }
}

TEST_CASE("canonical form of a moved trapezoid") {
    const auto t = Trapezoid::make(2.0, 1.0, 75 * kDeg, 60 * kDeg);
    Eigen::Matrix2d R;
    R << std::cos(2.0), -std::sin(2.0), std::sin(2.0), std::cos(2.0);
    checkSame(canonicalTrapezoid(t.polygon().transformed(R, Vec2(-4.0, 7.0))), t, 1e-12);
    // Mirror image: the roles of the two base angles swap back.
    const auto poly = t.polygon();
    std::vector<Vec2> mirrored;
    for (const auto& v : poly.vertices()) mirrored.emplace_back(-v.x(), v.y());
    checkSame(canonicalTrapezoid(Polygon::fromVertices(mirrored)), t, 1e-12);
    CHECK_THROWS_AS(canonicalTrapezoid(Polygon::fromVertices({{0, 0}, {2, 0}, {2.5, 1}, {0.2, 1.3}})), DomainError);
}

TEST_CASE("consistency check") {
    const auto t = Trapezoid::make(2.0, 1.0, 75 * kDeg, 60 * kDeg);
    const auto u = Trapezoid::make(2.0, 1.0, 80 * kDeg, 60 * kDeg);
    const auto r = checkIsospectralConsistency(t, u);
    CHECK((r.verdict == ConsistencyVerdict::DistinctInvariants));
    CHECK_FALSE(r.separatingInvariant.empty());

    const auto poly = t.polygon();
    std::vector<Vec2> mirrored;
    for (const auto& v : poly.vertices()) mirrored.emplace_back(3.0 - v.x(), v.y() + 1.0);
    const auto same = checkIsospectralConsistency(t.polygon(), Polygon::fromVertices(mirrored));
    CHECK((same.verdict == ConsistencyVerdict::Congruent));

    // Same area and perimeter, different angles: q tells them apart.
    const auto v = Trapezoid::make(2.0, 1.0, 70 * kDeg, 70 * kDeg);
    const auto w = checkIsospectralConsistency(t, v);
    CHECK((w.verdict == ConsistencyVerdict::DistinctInvariants));
}

TEST_CASE("square spectrum reconstructs the square") {
    const auto s = exactRectangleSpectrum(1.0, 1.0, 2000, BoundaryCondition::Dirichlet);
    const auto rep = scanAndReconstruct(s);
    CHECK(rep.isRectangle);
    REQUIRE(rep.rectangle);
    CHECK(rep.rectangle->a == Approx(1.0).epsilon(1e-3));
    CHECK(rep.rectangle->c == Approx(1.0).epsilon(1e-3));
    CHECK(rep.status() == "reconstructed");
    CHECK_NOTHROW(requireUnique(rep));
}

TEST_CASE("Neumann spectrum of a 1 x 2 rectangle") {
    const auto s = exactRectangleSpectrum(1.0, 2.0, 2000, BoundaryCondition::Neumann);
    const auto rep = scanAndReconstruct(s);
    REQUIRE(rep.rectangle);
    CHECK(rep.rectangle->a == Approx(1.0).epsilon(1e-3));
    CHECK(rep.rectangle->c == Approx(2.0).epsilon(1e-3));
}

TEST_CASE("reference trapezoid from its FEM spectrum") {
    const auto file = readSpectrumFile(std::string(TRAPSPEC_TEST_DATA) + "/reference_fem3.json");
    const auto truth = Trapezoid::make(2.0, 1.0, 75 * kDeg, 60 * kDeg);
    const auto rep = scanAndReconstruct(file.spectrum);
    CHECK_FALSE(rep.isRectangle);
    CHECK(rep.invariants.area == Approx(truth.area()).epsilon(0.02));
    CHECK(rep.invariants.perimeter == Approx(truth.perimeter()).epsilon(0.04));
    CHECK(rep.invariants.qEstimate == Approx(angleInvariant(truth).q).epsilon(0.05));
    REQUIRE(rep.trapezoid);
    CHECK(rep.status() == "reconstructed");
    const auto& got = *rep.trapezoid;
    CHECK(got.B() == Approx(2.0).epsilon(0.02));
    CHECK(got.h() == Approx(1.0).epsilon(0.02));
    CHECK(std::abs(got.alpha() - truth.alpha()) < 2 * kDeg);
    CHECK(std::abs(got.beta() - truth.beta()) < 2 * kDeg);

    const auto again = scanAndReconstruct(file.spectrum);
    REQUIRE(again.trapezoid);
    CHECK(again.trapezoid->alpha() == got.alpha());
}

TEST_CASE("too few eigenvalues") {
    const auto s = exactRectangleSpectrum(1.0, 1.0, 100, BoundaryCondition::Dirichlet);
    CHECK_THROWS_AS(scanAndReconstruct(s), PreconditionError);
}
