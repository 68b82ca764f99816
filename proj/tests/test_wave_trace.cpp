#include "trapspec/errors.hpp"
#include "trapspec/io.hpp"
#include "trapspec/wave_trace.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace trapspec;
using doctest::Approx;

namespace {

const Spectrum& square5000() {
    static const Spectrum s = exactRectangleSpectrum(1.0, 1.0, 5000, BoundaryCondition::Dirichlet);
    return s;
}

Spectrum fixture(const std::string& name) {
    return readSpectrumFile(std::string(TRAPSPEC_TEST_DATA) + "/" + name).spectrum;
}

SingularityCandidate withOrder(double a, double lo, double hi) {
    SingularityCandidate c;
    OrderEstimate e;
    e.order = a;
    e.ciLow = lo;
    e.ciHigh = hi;
    c.order = e;
    return c;
}

}  // namespace

TEST_CASE("single eigenvalue probe") {
    Spectrum s;
    s.eigenvalues = {49.0};
    const double sigma = 0.2;
    CHECK(std::abs(probeValue(s, 1.7, sigma, 7.0)) == Approx(sigma * std::sqrt(2 * kPi)).epsilon(1e-14));
    CHECK(std::abs(probeValue(s, 1.7, sigma, 8.0)) ==
          Approx(sigma * std::sqrt(2 * kPi) * std::exp(-sigma * sigma / 2)).epsilon(1e-14));
    s.eigenvalues = {-1.0};
    CHECK_THROWS_AS(probeValue(s, 1.0, sigma, 1.0), PreconditionError);
}

TEST_CASE("unit square peaks") {
    const auto& s = square5000();
    const double sigma = 0.1;
    const double kRef = defaultKRef(s, sigma);
    const auto peaks = scanPeaks(s, {1.5, 3.5}, sigma, kRef);
    bool at2 = false, atDiag = false;
    for (const auto& p : peaks) {
        at2 = at2 || std::abs(p.t0 - 2.0) < 0.05;
        atDiag = atDiag || std::abs(p.t0 - 2.0 * std::sqrt(2.0)) < 0.05;
    }
    CHECK(at2);
    CHECK(atDiag);

    auto matched = peaks;
    const auto ls = lengthSpectrum(Trapezoid::make(1.0, 1.0, kHalfPi, kHalfPi), 3.5 + 2 * sigma);
    matchCandidates(matched, ls, 2 * sigma);
    for (const auto& p : matched) CHECK_FALSE(p.unmatched);
}

TEST_CASE("band order on the unit square") {
    const auto& s = square5000();
    const double sigma = 0.1;
    const auto w = defaultOrderWindow(s, sigma);
    const auto e = estimateOrder(s, 2.0, sigma, w);
    CHECK(e.order >= 0.2);
    CHECK(e.order <= 0.8);
    CHECK(e.ciLow <= e.order);
    CHECK(e.order <= e.ciHigh);
    CHECK((classifyOrder(e) == OrderClass::Band));

    for (double off : {1.3, 1.6, 2.45, 3.2}) {
        const auto o = orderSlope(s, off, sigma, w);
        CHECK_FALSE(o.aboveNoiseFloor);
        CHECK(std::abs(probeValue(s, off, sigma, 40.0)) * 10.0 <= std::abs(probeValue(s, 2.0, sigma, 40.0)));
    }
    CHECK_THROWS_AS(estimateOrder(s, 1.3, sigma, w), NoiseFloor);
    CHECK_THROWS_AS(estimateOrder(s, 2.0, sigma, {1.0, w.second}), PreconditionError);
}

TEST_CASE("probe is linear in the spectrum") {
    const auto a = exactRectangleSpectrum(1.0, 1.3, 400, BoundaryCondition::Dirichlet);
    const auto b = exactRectangleSpectrum(0.7, 1.0, 300, BoundaryCondition::Dirichlet);
    const auto ab = mergeSpectra(a, b);
    for (double k : {3.0, 17.5, 40.0}) {
        const auto sum = probeValue(a, 2.2, 0.1, k) + probeValue(b, 2.2, 0.1, k);
        const auto joint = probeValue(ab, 2.2, 0.1, k);
        CHECK(std::abs(joint - sum) <= 1e-13 * (1.0 + std::abs(sum)));
    }
}

TEST_CASE("probes are bit-identical across runs and workers") {
    const auto& s = square5000();
    const std::vector<double> ks = {10.0, 20.0, 30.0, 40.0, 50.0};
    const auto one = probe(s, 2.0, 0.1, ks, {}, 1);
    const auto three = probe(s, 2.0, 0.1, ks, {}, 3);
    REQUIRE(one.kSamples.size() == three.kSamples.size());
    for (std::size_t i = 0; i < ks.size(); ++i) CHECK(one.kSamples[i].value == three.kSamples[i].value);
    const auto scanA = scanProbe(s, {1.8, 2.2}, 0.1, 30.0, 0.0, 1);
    const auto scanB = scanProbe(s, {1.8, 2.2}, 0.1, 30.0, 0.0, 2);
    CHECK(scanA.value == scanB.value);
}

TEST_CASE("overlap flag") {
    const auto& s = square5000();
    const auto p = probe(s, 2.0, 0.1, {20.0}, {2.0, 2.2});
    CHECK(p.windowOverlap);
    const auto q = probe(s, 2.0, 0.1, {20.0}, {2.0, 2.9});
    CHECK_FALSE(q.windowOverlap);
}

TEST_CASE("empty spectrum has no peaks") {
    Spectrum empty;
    CHECK(scanPeaks(empty, {0.5, 3.0}, 0.1, 10.0).empty());
}

TEST_CASE("order classes") {
    CHECK((classifyCandidate(withOrder(0.5, 0.4, 0.6)) == OrderClass::Band));
    CHECK((classifyCandidate(withOrder(0.0, -0.1, 0.1)) == OrderClass::Isolated));
    CHECK((classifyCandidate(withOrder(-0.5, -0.6, -0.4)) == OrderClass::Diffractive));
    CHECK((classifyCandidate(withOrder(0.3, 0.1, 0.5)) == OrderClass::Ambiguous));
    CHECK(OrderTable::twoMBOrder(2) == -1.0);
}

TEST_CASE("default sigma") {
    const auto ls = lengthSpectrum(Trapezoid::make(1.0, 1.0, kHalfPi, kHalfPi), 4.0);
    const double s = defaultSigma(ls, {1.5, 3.5});
    CHECK(s > 0.0);
    CHECK(s <= 0.15);
}

TEST_CASE("reference trapezoid FEM spectrum: first significant peak at min(2h, 2b)") {
    const auto s = fixture("reference_fem3.json");
    const double sigma = 0.1;
    const auto w = defaultOrderWindow(s, sigma);
    const auto peaks = scanPeaks(s, {4 * sigma, 3.0}, sigma, defaultKRef(s, sigma));
    const SingularityCandidate* first = nullptr;
    for (const auto& p : peaks) {
        if (orderSlope(s, p.t0, sigma, w).aboveNoiseFloor) {
            first = &p;
            break;
        }
    }
    REQUIRE(first);
    CHECK(std::abs(first->t0 - 2.0) < 0.1);
    for (const auto* p = peaks.data(); p != first; ++p) CHECK(p->amplitude < 0.01 * first->amplitude);
}

TEST_CASE("Fagnano trapezoid FEM spectrum: peaks at 2h, lF and 2h_alpha") {
    const auto s = fixture("fagnano_fem3.json");
    const double sigma = 0.1;
    const auto peaks = scanPeaks(s, {4 * sigma, 3.7}, sigma, defaultKRef(s, sigma));
    for (double t : {2.4, 3.0, 2.0 * std::sqrt(3.0)}) {
        bool found = false;
        for (const auto& p : peaks) found = found || std::abs(p.t0 - t) < 2 * sigma;
        CHECK(found);
    }
}

// Desk-scale FEM spectra do not reproduce these two orders; see the README.
TEST_CASE("isolated Fagnano orbit has order near 0" * doctest::may_fail()) {
    const auto s = fixture("fagnano_fem3.json");
    const double sigma = 0.1;
    const auto e = estimateOrder(s, 3.0, sigma, defaultOrderWindow(s, sigma));
    CHECK(e.order >= -0.3);
    CHECK(e.order <= 0.3);
}

TEST_CASE("2b singularity has order at most -0.2" * doctest::may_fail()) {
    const auto s = fixture("reference_fem3.json");
    const double sigma = 0.07;
    const auto e = estimateOrder(s, 2.0 * Trapezoid::make(2.0, 1.0, 75 * kPi / 180, kPi / 3).b(), sigma,
                                 defaultOrderWindow(s, sigma));
    CHECK(e.order <= -0.2);
}
