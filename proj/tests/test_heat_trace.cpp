#include "trapspec/errors.hpp"
#include "trapspec/heat_trace.hpp"

#include <doctest.h>

#include <cmath>

using namespace trapspec;
using doctest::Approx;

namespace {

Spectrum single(double lambda) {
    Spectrum s;
    s.eigenvalues = {lambda};
    s.accuracy = {0.0};
    return s;
}

}  // namespace

TEST_CASE("partial heat trace") {
    CHECK(heatTracePartial(single(1.0), 1.0).value == Approx(std::exp(-1.0)).epsilon(1e-15));
    const auto s = exactRectangleSpectrum(1.0, 1.0, 500, BoundaryCondition::Dirichlet);
    double prev = heatTracePartial(s, 1e-3).value;
    for (double t = 2e-3; t < 0.1; t *= 1.5) {
        const double z = heatTracePartial(s, t).value;
        CHECK(z < prev);
        prev = z;
    }
    CHECK(heatTracePartial(s, 1e-4).truncationWarning);
    CHECK_FALSE(heatTracePartial(s, 0.05).truncationWarning);
}

TEST_CASE("unit square Dirichlet invariants") {
    const auto s = exactRectangleSpectrum(1.0, 1.0, 2000, BoundaryCondition::Dirichlet);
    const auto inv = fitInvariants(s);
    CHECK(inv.area == Approx(1.0).epsilon(0.01));
    CHECK(inv.perimeter == Approx(4.0).epsilon(0.02));
    CHECK(inv.cornerConstant == Approx(0.25).epsilon(0.10));
    CHECK(inv.qEstimate == Approx(8.0 / (kPi * kPi)).epsilon(0.05));
    CHECK(inv.residual < inv.twoTermResidual);
}

TEST_CASE("unit square Neumann invariants") {
    const auto s = exactRectangleSpectrum(1.0, 1.0, 2000, BoundaryCondition::Neumann);
    const auto inv = fitInvariants(s);
    CHECK(inv.area == Approx(1.0).epsilon(0.01));
    CHECK(inv.perimeter == Approx(4.0).epsilon(0.02));
    CHECK(inv.cornerConstant == Approx(0.25).epsilon(0.10));
}

TEST_CASE("rectangle 1 x 2") {
    const auto s = exactRectangleSpectrum(1.0, 2.0, 2000, BoundaryCondition::Dirichlet);
    const auto inv = fitInvariants(s);
    CHECK(inv.area == Approx(2.0).epsilon(0.01));
    CHECK(inv.perimeter == Approx(6.0).epsilon(0.02));
}

TEST_CASE("fit is deterministic") {
    const auto s = exactRectangleSpectrum(1.0, 1.5, 1200, BoundaryCondition::Dirichlet);
    const auto a = fitInvariants(s);
    const auto b = fitInvariants(s);
    CHECK(a.area == b.area);
    CHECK(a.perimeter == b.perimeter);
    CHECK(a.cornerConstant == b.cornerConstant);
}

TEST_CASE("window handling") {
    const auto s = exactRectangleSpectrum(1.0, 1.0, 2000, BoundaryCondition::Dirichlet);
    const auto w = defaultHeatWindow(s);
    CHECK(w.first < w.second);
    CHECK(w.first >= 1e-4);
    CHECK(w.second <= 0.1);

    HeatFitOptions narrow;
    narrow.window = std::make_pair(1e-5, 1.1e-5);
    const auto inv = fitInvariants(s, narrow);
    CHECK(inv.windowAdjusted);
    CHECK(inv.tWindow.second / inv.tWindow.first >= narrow.minWindowRatio * (1 - 1e-12));

    CHECK_THROWS_AS(fitInvariants(exactRectangleSpectrum(1.0, 1.0, 3, BoundaryCondition::Dirichlet)), Error);
}
