#include "trapspec/billiards.hpp"
#include "trapspec/errors.hpp"
#include "trapspec/properties.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace trapspec;
using doctest::Approx;

namespace {

Polygon unitSquare() { return Trapezoid::make(1.0, 1.0, kHalfPi, kHalfPi).polygon(); }

const ClosedGeodesic* findBand(const LengthSpectrum& ls, double length) {
    const int i = ls.find(length);
    if (i < 0) return nullptr;
    for (auto k : ls.entries[static_cast<std::size_t>(i)].orbits)
        if (ls.orbits[k].kind == OrbitKind::Band) return &ls.orbits[k];
    return nullptr;
}

}  // namespace

TEST_CASE("reflection words") {
    const auto sq = unitSquare();
    // Base then top: translation by (0, 2) with orientation preserved.
    const auto g = composeWord(sq, {kBase, kTop});
    CHECK(g.parity == 1);
    CHECK((g.apply(Vec2(0.3, 0.4)) - Vec2(0.3, 2.4)).norm() < 1e-14);
    const auto r = composeWord(sq, {kLeftLeg});
    CHECK(r.parity == -1);
    CHECK((r.apply(Vec2(0.3, 0.4)) - Vec2(-0.3, 0.4)).norm() < 1e-14);
    const auto id = r.after(r);
    CHECK((id.linear - Eigen::Matrix2d::Identity()).norm() < 1e-14);
    CHECK_THROWS_AS(composeWord(sq, {}), PreconditionError);
    CHECK_THROWS_AS(composeWord(sq, {1, 1}), PreconditionError);
    CHECK_THROWS_AS(composeWord(sq, {7}), PreconditionError);
}

TEST_CASE("unit square length spectrum") {
    const double lmax = 10.0;
    const auto ls = lengthSpectrum(unitSquare(), lmax);
    CHECK(ls.complete);
    std::set<long long> expected;
    for (int p = 0; p <= 5; ++p)
        for (int q = 0; q <= 5; ++q)
            if (p + q > 0 && 2.0 * std::hypot(p, q) <= lmax + 1e-9)
                expected.insert(std::llround(2e9 * std::hypot(p, q)));
    std::set<long long> found;
    for (double l : ls.lengths()) found.insert(std::llround(1e9 * l));
    CHECK(found == expected);
    for (const auto& o : ls.orbits) CHECK_FALSE(o.diffractive);
}

TEST_CASE("Fagnano orbit of the isosceles trapezoid") {
    const auto t = Trapezoid::make(2.0, 1.2, kPi / 3.0, kPi / 3.0);
    const auto en = enumerateOrbits(t.polygon(), 3.5, 12);
    const ClosedGeodesic* fag = nullptr;
    for (const auto& o : en.orbits)
        if (std::abs(o.length - 3.0) < 1e-9 && o.period() == 3) fag = &o;
    REQUIRE(fag);
    CHECK((fag->kind == OrbitKind::Isolated));
    const auto pm = poincareMap(t.polygon(), *fag);
    CHECK(pm.detIminusP == Approx(4.0).epsilon(1e-4 / 4));
    CHECK(pm.detP == Approx(1.0).epsilon(1e-6));
    // det(I - P^2) = 2 - tr(P^2) and tr(P^2) = tr(P)^2 - 2 det P.
    const auto twice = poincareMap(t.polygon(), *fag, 2);
    const double tr = pm.P.trace();
    CHECK(twice.detIminusP == Approx(2.0 - (tr * tr - 2.0)).epsilon(1e-4));
    CHECK(orbitPath(t.polygon(), *fag).size() == 4);
}

TEST_CASE("2h band") {
    const auto t = Trapezoid::make(2.0, 0.5, 1.2, 0.9);
    const auto ls = lengthSpectrum(t, 1.2);
    const auto* o = findBand(ls, 1.0);
    REQUIRE(o);
    CHECK((o->kind == OrbitKind::Band));
    CHECK(o->period() == 2);
    CHECK(o->sweptArea == Approx(2.0 * 0.5 * t.b()).epsilon(1e-9));
    const auto pm = poincareMap(t.polygon(), *o);
    CHECK(std::abs(pm.detIminusP) < 1e-6);
    CHECK(pm.detP == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("conical chains along the top side") {
    const auto t = Trapezoid::make(2.0, 1.2, kPi / 3.0, 1.0);
    const double twoB = 2.0 * t.b();
    const auto ds = findGeneralizedDiagonals(t.polygon(), 2.2 * twoB);
    bool twoBFound = false, fourBFound = false;
    for (const auto& c : ds.closedChains) {
        if (std::abs(c.length - twoB) < 1e-9) twoBFound = c.conical;
        if (std::abs(c.length - 2.0 * twoB) < 1e-9) fourBFound = true;
    }
    CHECK(twoBFound);
    CHECK(fourBFound);
}

TEST_CASE("2h_alpha orbit through the diffractive corner") {
    const auto t = Trapezoid::make(2.0, 1.2, 1.3, 1.0);
    const auto c = orbitCatalog(t);
    REQUIRE(c.twoHAlpha.existsInside);
    CHECK((c.twoHAlpha.classification == HAlphaClass::Diffractive));
    const auto ls = lengthSpectrum(t, c.twoHAlpha.length + 0.1);
    const int i = ls.find(c.twoHAlpha.length);
    REQUIRE(i >= 0);
    bool conical = false;
    for (auto k : ls.entries[static_cast<std::size_t>(i)].orbits) conical = conical || ls.orbits[k].conical;
    CHECK(conical);
}

TEST_CASE("no diffractive orbits in the square") {
    const auto ds = findGeneralizedDiagonals(unitSquare(), 6.0);
    for (const auto& c : ds.closedChains) CHECK_FALSE(c.diffractive);
    CHECK_FALSE(isDiffractiveAngle(kHalfPi));
    CHECK_FALSE(isDiffractiveAngle(kPi / 5.0));
    CHECK(isDiffractiveAngle(1.0));
}

TEST_CASE("shortest orbit") {
    const auto wide = Trapezoid::make(2.0, 0.3, 1.2, 1.0);
    const auto a = shortestOrbit(wide, 2.0);
    CHECK(a.length == Approx(0.6).epsilon(1e-12));
    CHECK(a.label == "2h");
    const auto narrow = Trapezoid::make(2.0, 1.2, kPi / 3.0, kPi / 3.0);
    const auto b = shortestOrbit(narrow, 3.0);
    CHECK(b.length == Approx(2.0 * narrow.b()).epsilon(1e-12));
    CHECK(b.length == Approx(1.2287).epsilon(1e-4));
    CHECK(b.label == "2b");
}

TEST_CASE("random trapezoids: parity rule and catalog agreement") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 25; ++i) {
        const auto t = randomTrapezoid(rng);
        const auto c = orbitCatalog(t);
        const double lmax = std::max({c.twoH, c.twoHAlpha.length, 2 * t.b()}) + 0.05;
        const auto ls = lengthSpectrum(t, lmax);
        const auto lengths = ls.lengths();
        CHECK(std::is_sorted(lengths.begin(), lengths.end()));
        for (std::size_t k = 1; k < lengths.size(); ++k) CHECK(lengths[k] > lengths[k - 1]);
        for (const auto& o : ls.orbits) {
            if (o.conical) continue;
            if (o.oddPeriod() && !o.multiple()) CHECK((o.kind == OrbitKind::Isolated));
            if (o.kind == OrbitKind::Band) CHECK_FALSE(o.oddPeriod());
        }
        CHECK(ls.find(c.twoH) >= 0);
        CHECK(ls.find(2 * t.b()) >= 0);
        if (c.twoHAlpha.existsInside) CHECK(ls.find(c.twoHAlpha.length) >= 0);
        if (c.fagnano && c.fagnano->existsInside && c.fagnano->length <= lmax) CHECK(ls.find(c.fagnano->length) >= 0);
        const auto s = shortestOrbit(t, lmax);
        CHECK(s.length == Approx(std::min(c.twoH, 2 * t.b())).epsilon(1e-12));
    }
}

TEST_CASE("enumeration is deterministic") {
    const auto p = Trapezoid::make(2.0, 0.9, 1.2, 0.8).polygon();
    const auto a = enumerateOrbits(p, 5.0, 10);
    const auto b = enumerateOrbits(p, 5.0, 10);
    REQUIRE(a.orbits.size() == b.orbits.size());
    for (std::size_t i = 0; i < a.orbits.size(); ++i) {
        CHECK(a.orbits[i].word == b.orbits[i].word);
        CHECK(a.orbits[i].length == b.orbits[i].length);
    }
}
