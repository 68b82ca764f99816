#include "trapspec/inverse.hpp"

#include "trapspec/billiards.hpp"
#include "trapspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace trapspec {

namespace {

constexpr double kEps = 2.220446049250313e-16;

double cscOf(double x) { return 1.0 / std::sin(x); }

// Root of a continuous f on [a, b] with f(a) f(b) <= 0: bisection down to a
// tiny bracket, then one secant step inside it.
double bracketedRoot(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    while (b - a > 1e-14 * std::max(1.0, std::abs(b))) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    const double s = a - fa * (b - a) / (fb - fa);
    return std::isfinite(s) && s >= a && s <= b ? s : 0.5 * (a + b);
}

Trapezoid makeOrNoSolution(double B, double h, double alpha, double beta, const char* what) {
    try {
        return Trapezoid::make(B, h, alpha, std::min(beta, alpha));
    } catch (const DomainError& e) {
        throw NoSolution(std::string(what) + ": " + e.what());
    }
}

double relDiff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

// ---------------------------------------------------------------- rectangle

Trapezoid Rectangle::asTrapezoid() const { return Trapezoid::make(c, a, kHalfPi, kHalfPi); }

Rectangle reconstructRectangle(double lambda1, double area) {
    if (!(lambda1 > 0.0) || !(area > 0.0)) throw PreconditionError("rectangle reconstruction needs lambda1 > 0 and area > 0");
    // With x = a^2: x^2 - mu A^2 x + A^2 = 0, mu = lambda1 / pi^2.
    const double mu = lambda1 / (kPi * kPi);
    const double floor = 2.0 * kPi * kPi / area;
    if (lambda1 < floor * (1.0 - 1e-9)) {
        std::ostringstream msg;
        msg << "lambda1 = " << lambda1 << " is below 2 pi^2 / area = " << floor;
        throw NoSolution(msg.str());
    }
    const double A2 = area * area;
    const double disc = std::sqrt(std::max(mu * mu * A2 * A2 - 4.0 * A2, 0.0));
    // Smaller root via the product of the roots (A^2) to avoid cancellation.
    const double big = 0.5 * (mu * A2 + disc);
    Rectangle r;
    r.a = std::sqrt(A2 / big);
    r.c = area / r.a;
    if (r.a > r.c) std::swap(r.a, r.c);
    return r;
}

// ---------------------------------------------------------------- exact inversions

InverseSolution solveFromH(double A, double L, double q, double h) {
    if (!(h > 0.0) || !(A > 0.0) || !(L > 0.0)) throw PreconditionError("solveFromH needs A, L, h > 0");
    const double S = (L - 2.0 * A / h) / h;
    if (!(S > 2.0 * (1.0 + 1e-12))) {
        std::ostringstream msg;
        msg << "csc(alpha) + csc(beta) = " << S << " <= 2: no non-rectangular trapezoid";
        throw NoSolution(msg.str());
    }
    if (!(q > kRectangleQ * (1.0 + 1e-14))) throw NoSolution("q <= 8/pi^2: rectangle");

    const double aMin = angleFInverse(0.5 * q);  // isosceles end, beta = alpha
    auto betaOf = [&](double a) { return std::min(angleFInverse(std::max(q - angleF(a), 4.0 / (kPi * kPi))), a); };
    auto r = [&](double a) { return cscOf(a) + cscOf(betaOf(a)) - S; };

    // r is flat at both ends (the Jacobian degenerates for isosceles and
    // right-angled trapezoids), so zeros there are accepted directly.
    const double endTol = 64.0 * kEps * S;
    std::vector<double> roots;
    const int grid = 400;
    std::vector<double> xs(grid + 1), rs(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        xs[static_cast<std::size_t>(i)] = aMin + (kHalfPi - aMin) * i / grid;
        rs[static_cast<std::size_t>(i)] = r(xs[static_cast<std::size_t>(i)]);
    }
    xs[grid] = kHalfPi;
    if (std::abs(rs[0]) <= endTol) roots.push_back(aMin);
    for (int i = 0; i < grid; ++i) {
        const double r0 = rs[static_cast<std::size_t>(i)], r1 = rs[static_cast<std::size_t>(i + 1)];
        if (r0 == 0.0 || (r0 < 0.0) != (r1 < 0.0)) roots.push_back(bracketedRoot(r, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i + 1)]));
    }
    if (std::abs(rs[grid]) <= endTol) roots.push_back(kHalfPi);
    std::sort(roots.begin(), roots.end());
    // Near a flat end the bracket may add a spurious neighbour of the end root.
    std::vector<double> distinct;
    for (double x : roots)
        if (distinct.empty() || x - distinct.back() > 1e-6) distinct.push_back(x);
    if (distinct.size() >= 2 && std::abs(rs[grid]) <= endTol && kHalfPi - distinct[distinct.size() - 2] <= 1e-6)
        distinct.erase(distinct.end() - 2);
    if (distinct.empty()) throw NoSolution("no angle pair satisfies csc(alpha) + csc(beta) = S with the given q");

    std::vector<Trapezoid> sols;
    std::string lastError;
    for (double a : distinct) {
        const double b = betaOf(a);
        const double B = 0.5 * (2.0 * A / h + h * (1.0 / std::tan(a) + 1.0 / std::tan(b)));
        try {
            sols.push_back(makeOrNoSolution(B, h, a, b, "solveFromH"));
        } catch (const NoSolution& e) {
            lastError = e.what();
        }
    }
    if (sols.empty()) throw NoSolution(lastError);
    InverseSolution out{sols.front(), {sols.begin() + 1, sols.end()}, std::abs(r(sols.front().alpha())) / S};
    return out;
}

InverseSolution solveFromLFHalpha(double L, double q, double lF, double hAlpha, std::optional<double> area,
                                  double areaTolerance) {
    if (!(L > 0.0 && lF > 0.0 && hAlpha > 0.0)) throw PreconditionError("solveFromLFHalpha needs L, lF, hAlpha > 0");
    const double s = lF / (2.0 * hAlpha);
    if (s > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "lF = " << lF << " exceeds 2 hAlpha = " << 2.0 * hAlpha;
        throw NoSolution(msg.str());
    }
    const double alpha = std::asin(std::min(s, 1.0));
    const double target = q - angleF(alpha);
    if (target < angleF(alpha) * (1.0 - 1e-12)) throw NoSolution("q - F(alpha) < F(alpha): beta would exceed alpha");
    if (target < 4.0 / (kPi * kPi) * (1.0 - 1e-12)) throw NoSolution("q - F(alpha) below F(pi/2)");
    const double beta = std::min(angleFInverse(std::max(target, 4.0 / (kPi * kPi))), alpha);
    const double B = hAlpha / std::sin(beta);
    const double h = (L - 2.0 * B) / (std::tan(0.5 * alpha) + std::tan(0.5 * beta));
    if (!(h > 0.0)) throw NoSolution("perimeter too small for the base implied by hAlpha");
    InverseSolution out{makeOrNoSolution(B, h, alpha, beta, "solveFromLFHalpha"), {}, 0.0};
    out.residual = relDiff(out.trapezoid.perimeter(), L);
    if (area && relDiff(out.trapezoid.area(), *area) > areaTolerance) {
        std::ostringstream msg;
        msg << "recomputed area " << out.trapezoid.area() << " disagrees with " << *area;
        throw InconsistentInvariants(msg.str());
    }
    return out;
}

Trapezoid solveCaseTwo(double q, double lF, double h, double margin) {
    if (!(lF > 0.0 && h > 0.0)) throw PreconditionError("solveCaseTwo needs lF, h > 0");
    if (!(q >= kRectangleQ)) throw NoSolution("q below 8/pi^2");
    // h < hAlpha = B sin(beta) with lF = 2 B sin(alpha) sin(beta) is
    // sin(alpha) < lF / (2h); beta <= alpha is F(alpha) <= q / 2.
    const double aMin = angleFInverse(0.5 * q);
    const double aMax = std::asin(std::min(1.0, lF / (2.0 * h) * (1.0 - margin)));
    if (!(aMax > aMin)) {
        std::ostringstream msg;
        msg << "need alpha < " << aMax << " for 2h to precede 2h_alpha, but beta <= alpha forces alpha >= " << aMin;
        throw NoSolution(msg.str());
    }
    for (int i = 1; i < 64; ++i) {
        const double a = aMin + (aMax - aMin) * i / 64.0;
        const double b = std::min(angleFInverse(q - angleF(a)), a);
        const double B = lF / (2.0 * std::sin(a) * std::sin(b));
        try {
            return Trapezoid::make(B, h, a, b);
        } catch (const DomainError&) {
        }
    }
    throw NoSolution("angle range admits no trapezoid with a positive top side");
}

// ---------------------------------------------------------------- congruence

Trapezoid canonicalTrapezoid(const Polygon& p, double tol) {
    if (p.size() != 4) throw DomainError("a trapezoid has four vertices");
    auto dir = [&](std::size_t i) { return (p.vertex(i + 1) - p.vertex(i)).normalized(); };
    auto parallel = [&](std::size_t i) {
        const Vec2 u = dir(i), v = dir(i + 2);
        return std::abs(u.x() * v.y() - u.y() * v.x()) <= tol;
    };
    const bool p0 = parallel(0), p1 = parallel(1);
    if (!p0 && !p1) throw DomainError("quadrilateral has no pair of parallel sides");
    const auto angles = p.interiorAngles();
    std::size_t base;
    if (p0 && p1) {
        // Rectangle (a non-rectangular parallelogram has an obtuse base angle).
        base = p.edgeLength(0) >= p.edgeLength(1) ? 0 : 1;
    } else {
        const std::size_t e = p0 ? 0 : 1;
        base = p.edgeLength(e) >= p.edgeLength(e + 2) ? e : e + 2;
    }
    const double B = p.edgeLength(base);
    const Vec2 a = p.vertex(base), t = dir(base);
    const Vec2 far = p.vertex(base + 2);
    const double h = std::abs(t.x() * (far.y() - a.y()) - t.y() * (far.x() - a.x()));
    double a1 = angles[base], a2 = angles[(base + 1) % 4];
    if (a1 < a2) std::swap(a1, a2);
    if (a1 > kHalfPi + tol) throw DomainError("trapezoid has an obtuse base angle");
    return Trapezoid::make(B, h, std::min(a1, kHalfPi), std::min(a2, kHalfPi));
}

std::string toString(ConsistencyVerdict v) {
    switch (v) {
        case ConsistencyVerdict::Congruent: return "congruent";
        case ConsistencyVerdict::DistinctInvariants: return "distinct-invariants";
        case ConsistencyVerdict::PotentiallyIsospectral: return "potentially-isospectral";
    }
    return "?";
}

namespace {

// Rectangles: base is the longer side.
Trapezoid normalForm(const Trapezoid& t) {
    if (t.isRectangle() && t.h() > t.B()) return Trapezoid::make(t.h(), t.B(), kHalfPi, kHalfPi);
    return t;
}

}  // namespace

ConsistencyReport checkIsospectralConsistency(const Trapezoid& t1in, const Trapezoid& t2in, double tol) {
    const Trapezoid t1 = normalForm(t1in), t2 = normalForm(t2in);
    const auto c1 = orbitCatalog(t1), c2 = orbitCatalog(t2);
    struct Item {
        const char* name;
        double v1, v2;
    };
    const bool f1 = c1.fagnano && c1.fagnano->existsInside, f2 = c2.fagnano && c2.fagnano->existsInside;
    std::vector<Item> items{
        {"A", t1.area(), t2.area()},
        {"L", t1.perimeter(), t2.perimeter()},
        {"q", angleInvariant(t1).q, angleInvariant(t2).q},
        {"min(2h,2b)", std::min(c1.twoH, c1.twoB), std::min(c2.twoH, c2.twoB)},
        {"lF.exists", f1 ? 1.0 : 0.0, f2 ? 1.0 : 0.0},
    };
    if (f1 && f2) items.push_back({"lF", c1.fagnano->length, c2.fagnano->length});
    items.push_back({"2hAlpha", c1.twoHAlpha.length, c2.twoHAlpha.length});

    ConsistencyReport rep;
    for (const auto& it : items) {
        if (relDiff(it.v1, it.v2) > tol) {
            rep.verdict = ConsistencyVerdict::DistinctInvariants;
            rep.separatingInvariant = it.name;
            rep.value1 = it.v1;
            rep.value2 = it.v2;
            return rep;
        }
    }
    const bool same = relDiff(t1.B(), t2.B()) <= tol && relDiff(t1.h(), t2.h()) <= tol &&
                      std::abs(t1.alpha() - t2.alpha()) <= tol && std::abs(t1.beta() - t2.beta()) <= tol;
    rep.verdict = same ? ConsistencyVerdict::Congruent : ConsistencyVerdict::PotentiallyIsospectral;
    return rep;
}

ConsistencyReport checkIsospectralConsistency(const Polygon& p1, const Polygon& p2, double tol) {
    return checkIsospectralConsistency(canonicalTrapezoid(p1), canonicalTrapezoid(p2), tol);
}

// ---------------------------------------------------------------- reconstruction

std::string toString(ReconstructionBranch b) {
    switch (b) {
        case ReconstructionBranch::Rectangle: return "Rectangle";
        case ReconstructionBranch::FirstOrderHalfIs2h: return "FirstOrderHalfIs2h";
        case ReconstructionBranch::LFThen2hAlpha: return "LFThen2hAlpha";
        case ReconstructionBranch::LFThen2h: return "LFThen2h";
        case ReconstructionBranch::AlphaRightAngle: return "AlphaRightAngle";
    }
    return "?";
}

namespace {

// Interpretations an order class allows at a given stage of the scan.
enum class Reading { TwoH, LF, TwoHAlpha, Skip };

std::vector<OrderClass> spannedClasses(const OrderEstimate& e, const OrderTable& t) {
    std::vector<OrderClass> out;
    auto add = [&](OrderClass c) {
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    };
    auto cls = [&](double a) {
        if (a > t.bandThreshold) return OrderClass::Band;
        if (a < t.diffractiveThreshold) return OrderClass::Diffractive;
        return OrderClass::Isolated;
    };
    add(cls(e.order));
    add(cls(e.ciLow));
    add(cls(e.ciHigh));
    if (cls(e.ciLow) == OrderClass::Diffractive && cls(e.ciHigh) == OrderClass::Band) add(OrderClass::Isolated);
    return out;
}

struct Significant {
    SingularityCandidate c;
    std::vector<OrderClass> classes;
};

struct Path {
    ReconstructionBranch branch;
    std::optional<double> lF, twoH, twoHAlpha;
    std::vector<double> evidence;
    std::string interpretation;
};

std::vector<Path> enumeratePaths(const std::vector<Significant>& sig, double tEnd, int cap, std::vector<std::string>& notes) {
    std::vector<Path> out;
    Path cur;
    std::function<void(std::size_t, std::optional<double>)> walk = [&](std::size_t i, std::optional<double> lF) {
        if (static_cast<int>(out.size()) >= cap) return;
        if (!lF) {
            if (i >= sig.size()) {
                notes.push_back("scan path ended before a 2h or lF singularity: " + (cur.interpretation.empty() ? std::string("(none)") : cur.interpretation));
                return;
            }
            const auto& s = sig[i];
            const std::string at = std::to_string(s.c.t0);
            for (OrderClass c : s.classes) {
                const auto saved = cur;
                if (c == OrderClass::Band) {
                    cur.branch = ReconstructionBranch::FirstOrderHalfIs2h;
                    cur.twoH = s.c.t0;
                    cur.evidence.push_back(s.c.t0);
                    cur.interpretation += "2h@" + at;
                    out.push_back(cur);
                } else if (c == OrderClass::Isolated) {
                    cur.lF = s.c.t0;
                    cur.evidence.push_back(s.c.t0);
                    cur.interpretation += "lF@" + at + " ";
                    walk(i + 1, s.c.t0);
                } else {
                    cur.interpretation += "skip2mb@" + at + " ";
                    walk(i + 1, std::nullopt);
                }
                cur = saved;
            }
            return;
        }
        // After lF: look in (lF, 2 lF).
        if (i >= sig.size() || sig[i].c.t0 >= 2.0 * *lF) {
            if (tEnd < 2.0 * *lF) notes.push_back("scan ends before 2 lF; right-angle branch is unverified");
            const auto saved = cur;
            cur.branch = ReconstructionBranch::AlphaRightAngle;
            cur.interpretation += "none-in-(lF,2lF)";
            out.push_back(cur);
            cur = saved;
            return;
        }
        const auto& s = sig[i];
        if (s.c.t0 <= *lF * (1.0 + 1e-9)) {
            walk(i + 1, lF);
            return;
        }
        const std::string at = std::to_string(s.c.t0);
        for (OrderClass c : s.classes) {
            const auto saved = cur;
            if (c == OrderClass::Band) {
                cur.branch = ReconstructionBranch::LFThen2h;
                cur.twoH = s.c.t0;
                cur.evidence.push_back(s.c.t0);
                cur.interpretation += "2h@" + at;
                out.push_back(cur);
            } else if (c == OrderClass::Diffractive && s.c.order->order >= -0.75) {
                cur.branch = ReconstructionBranch::LFThen2hAlpha;
                cur.twoHAlpha = s.c.t0;
                cur.evidence.push_back(s.c.t0);
                cur.interpretation += "2hAlpha@" + at;
                out.push_back(cur);
            } else {
                cur.interpretation += (c == OrderClass::Isolated ? "skipIsolated@" : "skip2mb@") + at + " ";
                walk(i + 1, lF);
            }
            cur = saved;
        }
    };
    walk(0, std::nullopt);
    return out;
}

// Noisy (A, L, q, h) barely constrain alpha: csc a + csc b is nearly flat
// along the q-curve. Alpha is therefore chosen by least squares on the miss
// in S (scaled by its uncertainty for h known to sigma / 2) plus the distance
// of the Fagnano length to the nearest observed peak in units of sigma.
Trapezoid fitFromHAndPeaks(double A, double L, double q, double h, double sigma, const std::vector<double>& peaks) {
    if (!(q > kRectangleQ)) throw NoSolution("q <= 8/pi^2: rectangle");
    const double S = (L - 2.0 * A / h) / h;
    const double dS = std::max(std::abs(-L / (h * h) + 4.0 * A / (h * h * h)) * 0.5 * sigma, 1e-3 * S);
    const double aMin = angleFInverse(0.5 * q);
    auto betaOf = [&](double a) { return std::min(angleFInverse(std::max(q - angleF(a), 4.0 / (kPi * kPi))), a); };
    auto score = [&](double a) {
        const double b = betaOf(a);
        const double m = (cscOf(a) + cscOf(b) - S) / dS;
        double d = 3.0;
        const double B = 0.5 * (2.0 * A / h + h * (1.0 / std::tan(a) + 1.0 / std::tan(b)));
        const double lF = 2.0 * B * std::sin(a) * std::sin(b);
        for (double t : peaks) d = std::min(d, std::abs(t - lF) / sigma);
        return m * m + d * d;
    };
    const int grid = 400;
    auto at = [&](int i) { return aMin + (kHalfPi - aMin) * i / grid; };
    int best = 0;
    for (int i = 1; i <= grid; ++i)
        if (score(at(i)) < score(at(best))) best = i;
    double lo = at(std::max(best - 1, 0)), hi = at(std::min(best + 1, grid));
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        if (score(x1) < score(x2)) hi = x2;
        else lo = x1;
    }
    const double a = 0.5 * (lo + hi), b = betaOf(a);
    const double B = 0.5 * (2.0 * A / h + h * (1.0 / std::tan(a) + 1.0 / std::tan(b)));
    return makeOrNoSolution(B, h, a, b, "fitFromHAndPeaks");
}

std::vector<Trapezoid> solvePath(const Path& p, double A, double L, double q, double sigma, const std::vector<double>& peaks) {
    switch (p.branch) {
        case ReconstructionBranch::FirstOrderHalfIs2h:
        case ReconstructionBranch::LFThen2h:
            return {fitFromHAndPeaks(A, L, q, 0.5 * *p.twoH, sigma, peaks)};
        case ReconstructionBranch::LFThen2hAlpha:
            return {solveFromLFHalpha(L, q, *p.lF, 0.5 * *p.twoHAlpha).trapezoid};
        case ReconstructionBranch::AlphaRightAngle: {
            // alpha = pi/2; beta from q; (1 + csc b) h^2 - L h + 2A = 0.
            const double beta = angleFInverse(q - 4.0 / (kPi * kPi));
            const double c = 1.0 + cscOf(beta);
            const double disc = L * L - 8.0 * A * c;
            if (disc < 0.0) throw NoSolution("right-angle branch: area and perimeter admit no height");
            std::vector<Trapezoid> all;
            for (double sign : {-1.0, 1.0}) {
                const double h = (L + sign * std::sqrt(disc)) / (2.0 * c);
                const double B = 0.5 * (2.0 * A / h + h / std::tan(beta));
                try {
                    all.push_back(Trapezoid::make(B, h, kHalfPi, beta));
                } catch (const DomainError&) {
                }
            }
            if (all.empty()) throw NoSolution("right-angle branch: no admissible height");
            return all;
        }
        case ReconstructionBranch::Rectangle: break;
    }
    throw NoSolution("unhandled branch");
}

bool sameTrapezoid(const Trapezoid& a, const Trapezoid& b, double tol) {
    return relDiff(a.B(), b.B()) <= tol && relDiff(a.h(), b.h()) <= tol && std::abs(a.alpha() - b.alpha()) <= tol &&
           std::abs(a.beta() - b.beta()) <= tol;
}

}  // namespace

std::string ReconstructionReport::status() const {
    if (trapezoid) return "reconstructed";
    return ambiguous ? "ambiguous" : "no-survivor";
}

void requireUnique(const ReconstructionReport& r) {
    if (r.trapezoid) return;
    std::size_t n = 0;
    for (const auto& b : r.branches) n += b.survives;
    if (r.ambiguous) throw AmbiguousClassification(std::to_string(n) + " surviving branches; see the report");
    throw NoSolution("no reconstruction branch survived cross-validation");
}

ReconstructionReport scanAndReconstruct(const Spectrum& s, const ReconstructionConfig& cfg) {
    if (s.count() < cfg.minEigenvalues) {
        std::ostringstream msg;
        msg << "reconstruction needs at least " << cfg.minEigenvalues << " eigenvalues, got " << s.count();
        throw PreconditionError(msg.str());
    }
    ReconstructionReport rep;
    rep.invariants = fitInvariants(s, cfg.heat);
    const double A = rep.invariants.area, L = rep.invariants.perimeter, q = rep.invariants.qEstimate;
    const double lmax = s.largest();
    for (double l : s.eigenvalues)
        if (l > 1e-9 * std::max(1.0, lmax)) {
            rep.lambda1 = l;
            break;
        }

    if (std::abs(q - kRectangleQ) <= cfg.rectangleTolerance * kRectangleQ) {
        rep.isRectangle = true;
        rep.branch = ReconstructionBranch::Rectangle;
        if (s.boundaryCondition == BoundaryCondition::Dirichlet) {
            // A rectangle has area >= 2 pi^2 / lambda1; a fitted area slightly
            // below that bound is read as a square.
            double area = A;
            const double squareArea = 2.0 * kPi * kPi / rep.lambda1;
            if (area < squareArea && area >= squareArea * (1.0 - cfg.areaTolerance)) {
                std::ostringstream note;
                note << "fitted area below 2 pi^2 / lambda1 by " << 1.0 - area / squareArea << " (relative); taken as a square";
                rep.notes.push_back(note.str());
                area = squareArea;
            }
            rep.rectangle = reconstructRectangle(rep.lambda1, area);
        } else {
            // Lowest positive Neumann mode is pi^2 / c^2 on the longer side.
            Rectangle r;
            r.c = kPi / std::sqrt(rep.lambda1);
            r.a = A / r.c;
            if (r.a > r.c) std::swap(r.a, r.c);
            rep.rectangle = r;
        }
        rep.trapezoid = rep.rectangle->asTrapezoid();
        BranchResult br;
        br.branch = ReconstructionBranch::Rectangle;
        br.trapezoid = rep.trapezoid;
        br.areaResidual = relDiff(rep.trapezoid->area(), A);
        br.perimeterResidual = relDiff(rep.trapezoid->perimeter(), L);
        br.qResidual = relDiff(kRectangleQ, q);
        br.survives = br.perimeterResidual <= cfg.perimeterTolerance && br.areaResidual <= cfg.areaTolerance;
        rep.branches.push_back(br);
        if (!br.survives) {
            std::ostringstream msg;
            msg << "rectangle from lambda1 and area has perimeter " << rep.trapezoid->perimeter() << ", fit gives " << L;
            throw InvariantMismatch(msg.str());
        }
        return rep;
    }

    rep.sigma = cfg.sigma;
    rep.threshold = cfg.threshold;
    rep.kRef = defaultKRef(s, cfg.sigma);
    const auto kWindow = defaultOrderWindow(s, cfg.sigma);
    rep.tRange = {cfg.tStart > 0.0 ? cfg.tStart : 4.0 * cfg.sigma, cfg.tEnd > 0.0 ? cfg.tEnd : 2.0 * L};
    ScanOptions so;
    so.threshold = cfg.threshold;
    so.workers = cfg.workers;
    auto peaks = scanPeaks(s, rep.tRange, cfg.sigma, rep.kRef, so);

    const auto& table = OrderTable::standard();
    std::vector<Significant> sig;
    for (auto& c : peaks) {
        ConsideredCandidate cc;
        try {
            c.order = estimateOrder(s, c.t0, cfg.sigma, kWindow, cfg.orderSamples);
            cc.orderClass = classifyOrder(*c.order, table);
            sig.push_back({c, spannedClasses(*c.order, table)});
        } catch (const NoiseFloor& e) {
            cc.note = std::string("noise floor: ") + e.what();
        }
        cc.candidate = c;
        rep.candidates.push_back(cc);
    }

    std::vector<double> allPeaks;
    for (const auto& c : peaks) allPeaks.push_back(c.t0);
    const auto paths = enumeratePaths(sig, rep.tRange.second, cfg.maxBranches, rep.notes);
    const double tol = cfg.matchSigmas * cfg.sigma;
    const double firstPeak = sig.empty() ? 0.0 : sig.front().c.t0;
    for (const auto& p : paths) {
        std::vector<Trapezoid> sols;
        BranchResult proto;
        proto.branch = p.branch;
        proto.evidence = p.evidence;
        proto.interpretation = p.interpretation;
        try {
            sols = solvePath(p, A, L, q, cfg.sigma, allPeaks);
        } catch (const Error& e) {
            proto.failure = e.kind() + ": " + e.what();
            rep.branches.push_back(proto);
            continue;
        }
        for (const auto& t : sols) {
            BranchResult br = proto;
            br.nonUnique = sols.size() > 1;
            br.trapezoid = t;
            br.areaResidual = relDiff(t.area(), A);
            br.perimeterResidual = relDiff(t.perimeter(), L);
            br.qResidual = relDiff(angleInvariant(t).q, q);
            LengthSpectrumOptions lo;
            const auto ls = lengthSpectrum(t, rep.tRange.second + tol, lo);
            for (const auto& g : sig) {
                bool hit = false;
                for (const auto& e : ls.entries)
                    if (std::abs(e.length - g.c.t0) <= tol) {
                        hit = true;
                        break;
                    }
                if (!hit) ++br.unmatchedPeaks;
            }
            const auto cat = orbitCatalog(t);
            auto observed = [&](double len) {
                for (const auto& g : sig)
                    if (std::abs(g.c.t0 - len) <= tol) return true;
                return false;
            };
            if (cat.twoH <= rep.tRange.second && cat.twoH >= rep.tRange.first && !observed(cat.twoH)) br.missingCatalog.push_back("2h");
            if (cat.fagnano && cat.fagnano->existsInside && cat.fagnano->length <= rep.tRange.second &&
                !observed(cat.fagnano->length))
                br.missingCatalog.push_back("lF");
            br.shortestMatches = sig.empty() || firstPeak >= std::min(cat.twoH, cat.twoB) - tol;
            br.survives = br.areaResidual <= cfg.areaTolerance && br.perimeterResidual <= cfg.perimeterTolerance &&
                          br.qResidual <= cfg.qTolerance && br.unmatchedPeaks == 0 && br.missingCatalog.empty() &&
                          br.shortestMatches;
            rep.branches.push_back(br);
        }
    }

    std::vector<const BranchResult*> survivors;
    for (const auto& br : rep.branches)
        if (br.survives) {
            bool dup = false;
            for (const auto* o : survivors) dup = dup || sameTrapezoid(*o->trapezoid, *br.trapezoid, 1e-6);
            if (!dup) survivors.push_back(&br);
        }
    std::size_t classAmbiguities = 0;
    for (const auto& g : sig) classAmbiguities += g.classes.size() > 1;
    if (classAmbiguities > 0) {
        rep.notes.push_back(std::to_string(classAmbiguities) + " candidate(s) with ambiguous order class; all readings were followed");
    }
    if (survivors.empty()) {
        rep.notes.push_back("no branch survived cross-validation");
        return rep;
    }
    if (survivors.size() > 1) {
        rep.ambiguous = true;
        rep.notes.push_back(std::to_string(survivors.size()) + " distinct trapezoids survive cross-validation");
        return rep;
    }
    const BranchResult& win = *survivors.front();
    rep.trapezoid = win.trapezoid;
    rep.branch = win.branch;
    for (const auto& g : sig)
        if (std::find(win.evidence.begin(), win.evidence.end(), g.c.t0) != win.evidence.end()) rep.evidence.push_back(g.c);
    for (const auto& p : paths)
        if (p.interpretation == win.interpretation) {
            if (p.twoH) rep.h = 0.5 * *p.twoH;
            rep.lF = p.lF;
            if (p.twoHAlpha) rep.hAlpha = 0.5 * *p.twoHAlpha;
            break;
        }
    return rep;
}

}  // namespace trapspec
