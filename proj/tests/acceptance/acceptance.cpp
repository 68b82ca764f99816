// Acceptance run: one PASS/FAIL line per criterion.

#include "trapspec/billiards.hpp"
#include "trapspec/eigensolver.hpp"
#include "trapspec/errors.hpp"
#include "trapspec/heat_trace.hpp"
#include "trapspec/inverse.hpp"
#include "trapspec/properties.hpp"
#include "trapspec/wave_trace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace trapspec;

namespace {

const double kDeg = kPi / 180.0;

int workerCount() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// ------------------------------------------------------------------ 1

void geometryInvariants(Outcome& o) {
    std::mt19937_64 rng(1001);
    int fagnano = 0, rectangles = 0, heights = 0;
    double worstQ = 0.0, worstCorner = 0.0;
    std::uniform_real_distribution<double> u(0.5, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const bool rect = i % 10 == 9;
        const auto t = rect ? Trapezoid::make(u(rng), u(rng), kHalfPi, kHalfPi) : randomTrapezoid(rng);
        const double q = angleInvariant(t).q;
        if (rect) {
            ++rectangles;
            worstQ = std::max(worstQ, std::abs(q - kRectangleQ));
            o.require(std::abs(q - kRectangleQ) <= 1e-12, "q = 8/pi^2 for a rectangle");
        } else {
            o.require(q - kRectangleQ > 1e-12, "q > 8/pi^2 off rectangles");
        }
        const double corner = std::abs(heatCornerSum(t.polygon()) - (kPi * kPi / 24.0 * q - 1.0 / 12.0));
        worstCorner = std::max(worstCorner, corner);
        o.require(corner <= 1e-12, "corner-sum identity");
        const auto c = orbitCatalog(t);
        if (c.fagnano && c.fagnano->existsInside) {
            ++fagnano;
            o.require(c.twoHAlpha.length < 2.0 * c.fagnano->length, "2h_alpha < 2 lF");
        }
    }
    for (double alpha : {kPi / 3.0, kPi / 4.0}) {
        std::uniform_real_distribution<double> f(0.05, 0.95);
        for (int i = 0; i < 500; ++i) {
            const double beta = alpha * f(rng);
            const double B = 1.0 + 2.0 * f(rng);
            const double hMax = B / (1.0 / std::tan(alpha) + 1.0 / std::tan(beta));
            const auto c = orbitCatalog(Trapezoid::make(B, hMax * f(rng), alpha, beta));
            ++heights;
            o.require(c.twoH < c.twoHAlpha.length, "2h < 2h_alpha");
        }
    }
    o.detail << "1000 samples (" << rectangles << " rectangles, " << fagnano << " with Fagnano), " << heights
             << " height checks; max |q - 8/pi^2| on rectangles " << fmt(worstQ) << ", max corner-sum error "
             << fmt(worstCorner);
}

// ------------------------------------------------------------------ 2

void eigensolverOracle(Outcome& o) {
    const auto square = Trapezoid::make(1.0, 1.0, kHalfPi, kHalfPi).polygon();
    double worstErr = 0.0, minOrder = 1e9, maxOrder = -1e9;
    for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
        const auto fem = computeSpectrumLevels(square, bc, 20, 0.05, 3);
        const auto exact = exactRectangleSpectrum(1.0, 1.0, 20, bc);
        for (std::size_t i = 0; i < 20; ++i) {
            const double want = exact.eigenvalues[i];
            const double err = want > 0.0 ? rel(fem.spectrum.eigenvalues[i], want) : std::abs(fem.spectrum.eigenvalues[i]);
            worstErr = std::max(worstErr, err);
        }
        const auto orders = observedConvergenceOrder(fem);
        for (std::size_t i = bc == BoundaryCondition::Neumann ? 1 : 0; i < 10; ++i) {
            minOrder = std::min(minOrder, orders[i]);
            maxOrder = std::max(maxOrder, orders[i]);
        }
    }
    o.require(worstErr <= 5e-3, "first 20 eigenvalues within 0.5%");
    o.require(minOrder >= 1.7 && maxOrder <= 2.3, "convergence order in [1.7, 2.3]");
    const auto tri = Polygon::fromVertices({{0, 0}, {1, 0}, {0, 1}});
    const double l1 = computeSpectrum(tri, BoundaryCondition::Dirichlet, 1, 0.05, 3).eigenvalues[0];
    const double triErr = rel(l1, 5 * kPi * kPi);
    o.require(triErr <= 5e-3, "triangle lambda1 within 0.5%");
    o.detail << "square D+N max rel error " << fmt(worstErr) << ", orders [" << fmt(minOrder) << ", " << fmt(maxOrder)
             << "], triangle lambda1 rel error " << fmt(triErr);
}

// ------------------------------------------------------------------ 3

void heatTraceFit(Outcome& o) {
    const auto sq = fitInvariants(exactRectangleSpectrum(1.0, 1.0, 2000, BoundaryCondition::Dirichlet));
    o.require(rel(sq.area, 1.0) <= 0.01, "square area");
    o.require(rel(sq.perimeter, 4.0) <= 0.02, "square perimeter");
    o.require(rel(sq.cornerConstant, 0.25) <= 0.10, "square K");
    o.detail << "square A=" << fmt(sq.area, 6) << " L=" << fmt(sq.perimeter, 6) << " K=" << fmt(sq.cornerConstant, 5);

    const std::vector<Trapezoid> refs{
        Trapezoid::make(2.0, 1.0, 75 * kDeg, 60 * kDeg), Trapezoid::make(2.0, 1.2, 60 * kDeg, 60 * kDeg),
        Trapezoid::make(2.0, 0.9, 80 * kDeg, 50 * kDeg), Trapezoid::make(1.8, 1.0, 85 * kDeg, 70 * kDeg),
        Trapezoid::make(2.2, 0.8, 70 * kDeg, 45 * kDeg)};
    double wa = 0.0, wl = 0.0, wq = 0.0;
    for (const auto& t : refs) {
        const auto s = computeSpectrum(t.polygon(), BoundaryCondition::Dirichlet, 1500, 0.05, 2);
        const auto inv = fitInvariants(s);
        wa = std::max(wa, rel(inv.area, t.area()));
        wl = std::max(wl, rel(inv.perimeter, t.perimeter()));
        wq = std::max(wq, rel(inv.qEstimate, angleInvariant(t).q));
    }
    o.require(wa <= 0.02, "trapezoid area within 2%");
    o.require(wl <= 0.04, "trapezoid perimeter within 4%");
    o.require(wq <= 0.05, "trapezoid q within 5%");
    o.detail << "; 5 FEM trapezoids max rel error A " << fmt(wa) << ", L " << fmt(wl) << ", q " << fmt(wq);
}

// ------------------------------------------------------------------ 4

void billiardsSuite(Outcome& o) {
    const auto square = Trapezoid::make(1.0, 1.0, kHalfPi, kHalfPi).polygon();
    const auto ls = lengthSpectrum(square, 10.0);
    std::vector<double> brute;
    for (int p = 0; p <= 5; ++p)
        for (int q = 0; q <= 5; ++q) {
            const double l = 2.0 * std::hypot(p, q);
            if (p + q > 0 && l <= 10.0 + 1e-12) brute.push_back(l);
        }
    std::sort(brute.begin(), brute.end());
    brute.erase(std::unique(brute.begin(), brute.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                brute.end());
    const auto got = ls.lengths();
    bool same = got.size() == brute.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) same = std::abs(got[i] - brute[i]) <= 1e-9;
    o.require(same && ls.complete, "square length spectrum");

    const auto fag = Trapezoid::make(2.0, 1.2, kPi / 3, kPi / 3);
    double det = 0.0;
    bool isolated = false;
    for (const auto& g : enumerateOrbits(fag.polygon(), 3.2, 8).orbits) {
        if (std::abs(g.length - 3.0) < 1e-9 && g.period() == 3 && !g.multiple()) {
            isolated = g.kind == OrbitKind::Isolated;
            det = poincareMap(fag.polygon(), g).detIminusP;
        }
    }
    o.require(isolated && std::abs(det - 4.0) <= 1e-4, "Fagnano det(I - P) = 4");

    std::mt19937_64 rng(404);
    int shortestOk = 0;
    for (int i = 0; i < 50; ++i) {
        const auto t = randomTrapezoid(rng);
        const double want = std::min(2 * t.h(), 2 * t.b());
        if (std::abs(shortestOrbit(t, want * 1.01).length - want) <= 1e-9 * want) ++shortestOk;
    }
    o.require(shortestOk == 50, "shortest orbit = min(2h, 2b)");

    const auto gutkin = runPropertySuite("gutkin", 200, 405, workerCount());
    const auto catalog = runPropertySuite("catalog", 200, 406, workerCount());
    o.require(gutkin.passed(), "Gutkin parity");
    o.require(catalog.passed(), "catalog/enumerator agreement");
    o.detail << "square: " << got.size() << " lengths <= 10 vs " << brute.size() << " brute force; Fagnano det(I-P)="
             << fmt(det, 8) << "; shortest " << shortestOk << "/50; Gutkin " << gutkin.trials << " samples, "
             << gutkin.failures << " failures; catalog " << catalog.trials << " samples, worst " << fmt(catalog.worst);
}

// ------------------------------------------------------------------ 5

void waveTraceSuite(Outcome& o) {
    const auto s = exactRectangleSpectrum(1.0, 1.0, 5000, BoundaryCondition::Dirichlet);
    const double sigma = 0.1;
    const double kRef = defaultKRef(s, sigma);
    auto peaks = scanPeaks(s, {0.5, 6.0}, sigma, kRef, {5.0, 0.0, workerCount()});
    double d2 = 1e9, dDiag = 1e9;
    for (const auto& p : peaks) {
        d2 = std::min(d2, std::abs(p.t0 - 2.0));
        dDiag = std::min(dDiag, std::abs(p.t0 - 2.0 * std::sqrt(2.0)));
    }
    o.require(d2 <= 0.05 && dDiag <= 0.05, "peaks at 2 and 2 sqrt 2");

    const auto e = estimateOrder(s, 2.0, sigma, defaultOrderWindow(s, sigma));
    o.require(e.order >= 0.2 && e.order <= 0.8, "order at t = 2 in [0.2, 0.8]");

    const auto a = exactRectangleSpectrum(1.0, 1.3, 2000, BoundaryCondition::Dirichlet);
    const auto b = exactRectangleSpectrum(0.8, 1.0, 2000, BoundaryCondition::Dirichlet);
    const auto ab = mergeSpectra(a, b);
    double lin = 0.0;
    for (double t0 : {1.0, 2.6, 4.1})
        for (double k : {5.0, 30.0, 60.0}) {
            const auto sum = probeValue(a, t0, sigma, k) + probeValue(b, t0, sigma, k);
            lin = std::max(lin, std::abs(probeValue(ab, t0, sigma, k) - sum) / (1.0 + std::abs(sum)));
        }
    o.require(lin <= 1e-13, "probe linearity");

    matchCandidates(peaks, lengthSpectrum(Trapezoid::make(1.0, 1.0, kHalfPi, kHalfPi), 6.0 + 2 * sigma), 2 * sigma);
    int unmatched = 0;
    for (const auto& p : peaks) unmatched += p.unmatched ? 1 : 0;
    o.require(unmatched == 0 && !peaks.empty(), "all peaks matched to orbit lengths");
    o.detail << peaks.size() << " peaks in [0.5, 6], " << unmatched << " unmatched; |t-2|=" << fmt(d2) << " |t-2sqrt2|="
             << fmt(dDiag) << "; order at 2: " << fmt(e.order) << " CI [" << fmt(e.ciLow) << ", " << fmt(e.ciHigh)
             << "]; linearity error " << fmt(lin);
}

// ------------------------------------------------------------------ 6

void inverseRoundTrips(Outcome& o) {
    std::mt19937_64 rng(606);
    int done = 0, lfDone = 0, skipped = 0;
    double worst = 0.0;
    auto err = [](const Trapezoid& a, const Trapezoid& b) {
        return std::max({std::abs(a.B() - b.B()) / b.B(), std::abs(a.h() - b.h()) / b.B(), std::abs(a.alpha() - b.alpha()),
                         std::abs(a.beta() - b.beta())});
    };
    while (done < 100) {
        const auto t = randomTrapezoid(rng);
        const double q = angleInvariant(t).q;
        if ((q - kRectangleQ) / kRectangleQ <= 2e-3) {
            ++skipped;
            continue;
        }
        ++done;
        worst = std::max(worst, err(solveFromH(t.area(), t.perimeter(), q, t.h()).trapezoid, t));
        const auto c = orbitCatalog(t);
        if (c.fagnano && c.fagnano->existsInside) {
            ++lfDone;
            worst = std::max(worst, err(solveFromLFHalpha(t.perimeter(), q, c.fagnano->length,
                                                          c.twoHAlpha.length / 2, t.area()).trapezoid, t));
        }
    }
    o.require(worst <= 1e-8, "round trips to 1e-8");
    const auto case2 = runPropertySuite("case2", 200, 607, workerCount());
    o.require(case2.passed(), "case (2) infeasibility");
    o.detail << "100 round trips (" << lfDone << " also via lF/2h_alpha, " << skipped
             << " near-rectangles redrawn), worst error " << fmt(worst) << "; case (2): " << case2.trials
             << " instances, " << case2.failures << " failures";

    const auto truth = Trapezoid::make(2.0, 1.0, 75 * kDeg, 60 * kDeg);
    const auto spec = computeSpectrum(truth.polygon(), BoundaryCondition::Dirichlet, 1500, 0.05, 3);
    ReconstructionConfig cfg;
    cfg.workers = workerCount();
    const auto rep = scanAndReconstruct(spec, cfg);
    const double ea = rel(rep.invariants.area, truth.area());
    const double el = rel(rep.invariants.perimeter, truth.perimeter());
    const double eq = rel(rep.invariants.qEstimate, angleInvariant(truth).q);
    o.require(ea <= cfg.areaTolerance && el <= cfg.perimeterTolerance && eq <= cfg.qTolerance,
              "(A, L, q) within fit tolerance");

    std::vector<Trapezoid> emitted;
    if (rep.trapezoid) {
        emitted.push_back(*rep.trapezoid);
    } else {
        for (const auto& b : rep.branches)
            if (b.survives && b.trapezoid) emitted.push_back(*b.trapezoid);
    }
    o.require(!emitted.empty(), "a trapezoid is emitted");

    // Every significant peak against the emitted trapezoid's own length spectrum.
    const double tol = cfg.matchSigmas * rep.sigma;
    bool catalogMatches = false, truthAmongSurvivors = false;
    for (const auto& t : emitted) {
        const auto lengths = lengthSpectrum(t, rep.tRange.second + tol).lengths();
        bool all = true;
        for (const auto& c : rep.candidates) {
            if (!c.candidate.order) continue;
            const auto it = std::lower_bound(lengths.begin(), lengths.end(), c.candidate.t0 - tol);
            all = all && it != lengths.end() && *it <= c.candidate.t0 + tol;
        }
        const auto cat = orbitCatalog(t);
        auto observed = [&](double l) {
            for (const auto& c : rep.candidates)
                if (c.candidate.order && std::abs(c.candidate.t0 - l) <= tol) return true;
            return false;
        };
        all = all && observed(std::min(cat.twoH, cat.twoB));
        if (cat.fagnano && cat.fagnano->existsInside) all = all && observed(cat.fagnano->length);
        catalogMatches = catalogMatches || all;
        truthAmongSurvivors = truthAmongSurvivors || (rel(t.B(), truth.B()) < 0.05 && rel(t.h(), truth.h()) < 0.05 &&
                                                      std::abs(t.alpha() - truth.alpha()) < 3 * kDeg &&
                                                      std::abs(t.beta() - truth.beta()) < 3 * kDeg);
    }
    o.require(catalogMatches, "catalog matches observed peaks within 2 sigma");
    if (rep.ambiguous) o.require(truthAmongSurvivors, "true trapezoid among survivors");
    o.detail << "; end-to-end: status " << rep.status() << ", A/L/q rel errors " << fmt(ea) << "/" << fmt(el) << "/"
             << fmt(eq);
    if (rep.trapezoid)
        o.detail << ", branch " << toString(*rep.branch) << " -> (B=" << fmt(rep.trapezoid->B()) << ", h="
                 << fmt(rep.trapezoid->h()) << ", alpha=" << fmt(rep.trapezoid->alpha() / kDeg) << "deg, beta="
                 << fmt(rep.trapezoid->beta() / kDeg) << "deg)";
}

// ------------------------------------------------------------------ 7

void consistencyStress(Outcome& o) {
    std::mt19937_64 rng(707);
    int distinct = 0, potential = 0, congruent = 0;
    for (int i = 0; i < 500; ++i) {
        const auto a = randomTrapezoid(rng);
        const auto b = randomTrapezoid(rng);
        const auto r = checkIsospectralConsistency(a, b);
        switch (r.verdict) {
            case ConsistencyVerdict::DistinctInvariants: ++distinct; break;
            case ConsistencyVerdict::PotentiallyIsospectral: ++potential; break;
            case ConsistencyVerdict::Congruent: ++congruent; break;
        }
    }
    o.require(distinct == 500, "every pair separated");
    o.require(potential == 0, "no potentially isospectral pairs");
    o.detail << "500 pairs: " << distinct << " separated, " << potential << " potentially isospectral, " << congruent
             << " congruent";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"geometry invariants", geometryInvariants}, {"eigensolver oracle", eigensolverOracle},
        {"heat-trace fit", heatTraceFit},            {"billiards", billiardsSuite},
        {"wave trace", waveTraceSuite},              {"inverse round trips", inverseRoundTrips},
        {"isospectral stress", consistencyStress}};
    const std::vector<double> budgets{5, 120, 300, 600, 180, 900, 60};  // seconds

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > budgets[i]) {
            o.pass = false;
            o.detail << " [over the " << budgets[i] << " s budget]";
        }
        failed += o.pass ? 0 : 1;
        std::cout << "CRITERION " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << " ("
                  << fmt(secs, 3) << " s): " << o.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
