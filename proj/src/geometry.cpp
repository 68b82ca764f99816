#include "trapspec/geometry.hpp"

#include "trapspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trapspec {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double cot(double x) { return std::cos(x) / std::sin(x); }

}  // namespace

double angleF(double x) { return 1.0 / (x * (kPi - x)); }

double angleFInverse(double value) {
    // x (pi - x) = 1/value, smaller root lies in (0, pi/2].
    const double c = 1.0 / value;
    const double disc = kPi * kPi / 4.0 - c;
    if (disc < -1e-14) {
        throw DomainError("angleFInverse: value below F(pi/2) = 4/pi^2");
    }
    const double root = std::sqrt(std::max(disc, 0.0));
    // kPi/2 - root loses precision for small x; use c / (kPi/2 + root).
    return c / (kHalfPi + root);
}

// ---------------------------------------------------------------- Polygon

Polygon Polygon::fromVertices(std::vector<Vec2> v) {
    if (v.size() < 3) {
        throw DomainError("polygon needs at least three vertices");
    }
    double twiceArea = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        twiceArea += cross(v[i], v[(i + 1) % v.size()]);
    }
    if (twiceArea < 0.0) {
        std::reverse(v.begin(), v.end());
        twiceArea = -twiceArea;
    }
    double scale = 0.0;
    for (const auto& p : v) scale = std::max(scale, p.norm());
    scale = std::max(scale, 1.0);
    if (twiceArea <= 1e-14 * scale * scale) {
        throw DomainError("polygon is degenerate (zero area)");
    }
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = v[(i + 1) % n] - v[i];
        const Vec2 e1 = v[(i + 2) % n] - v[(i + 1) % n];
        if (e0.norm() <= 1e-14 * scale) {
            throw DomainError("polygon has repeated vertices");
        }
        if (cross(e0, e1) <= 1e-14 * e0.norm() * e1.norm()) {
            throw DomainError("polygon is not strictly convex");
        }
    }
    // Total turning of a convex outline is exactly one revolution.
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = v[(i + 1) % n] - v[i];
        const Vec2 e1 = v[(i + 2) % n] - v[(i + 1) % n];
        turning += std::atan2(cross(e0, e1), e0.dot(e1));
    }
    if (std::abs(turning - 2.0 * kPi) > 1e-9) {
        throw DomainError("polygon outline is not simple");
    }
    return Polygon(std::move(v));
}

std::vector<double> Polygon::interiorAngles() const {
    const std::size_t n = size();
    std::vector<double> angles(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 toPrev = vertex(i + n - 1) - vertex(i);
        const Vec2 toNext = vertex(i + 1) - vertex(i);
        angles[i] = std::atan2(std::abs(cross(toNext, toPrev)), toNext.dot(toPrev));
    }
    return angles;
}

double Polygon::area() const {
    double twice = 0.0;
    for (std::size_t i = 0; i < size(); ++i) twice += cross(vertex(i), vertex(i + 1));
    return 0.5 * twice;
}

double Polygon::perimeter() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += edgeLength(i);
    return sum;
}

double Polygon::diameter() const {
    double d = 0.0;
    for (const auto& p : vertices_)
        for (const auto& q : vertices_) d = std::max(d, (p - q).norm());
    return d;
}

Vec2 Polygon::centroid() const {
    Vec2 c = Vec2::Zero();
    for (const auto& p : vertices_) c += p;
    return c / static_cast<double>(size());
}

double Polygon::shortestEdge() const {
    double s = edgeLength(0);
    for (std::size_t i = 1; i < size(); ++i) s = std::min(s, edgeLength(i));
    return s;
}

Polygon Polygon::transformed(const Eigen::Matrix2d& rotation, const Vec2& translation) const {
    std::vector<Vec2> out;
    out.reserve(size());
    for (const auto& p : vertices_) out.push_back(rotation * p + translation);
    return Polygon(std::move(out));
}

double heatCornerSum(const Polygon& polygon) {
    double sum = 0.0;
    for (double theta : polygon.interiorAngles()) {
        sum += (kPi * kPi - theta * theta) / (24.0 * kPi * theta);
    }
    return sum;
}

// -------------------------------------------------------------- Trapezoid

Trapezoid Trapezoid::make(double B, double h, double alpha, double beta) {
    std::ostringstream msg;
    if (!(std::isfinite(B) && std::isfinite(h) && std::isfinite(alpha) && std::isfinite(beta))) {
        throw DomainError("trapezoid parameters must be finite");
    }
    if (B <= 0.0 || h <= 0.0) {
        throw DomainError("trapezoid requires B > 0 and h > 0");
    }
    // Allow alpha = pi/2 computed as M_PI/2 in any rounding mode.
    if (!(beta > 0.0 && beta <= alpha && alpha <= kHalfPi + 1e-15)) {
        msg << "trapezoid requires 0 < beta <= alpha <= pi/2 (got alpha=" << alpha << ", beta=" << beta
            << ")";
        throw DomainError(msg.str());
    }
    Trapezoid t(B, h, std::min(alpha, kHalfPi), std::min(beta, kHalfPi));
    const double b = t.b();
    if (!(b > 0.0)) {
        msg << "trapezoid degenerates: top side b = " << b << " <= 0";
        throw DomainError(msg.str());
    }
    if (b > B * (1.0 + 1e-15)) {
        throw DomainError("trapezoid top side exceeds its base");
    }
    return t;
}

double Trapezoid::b() const { return B_ - h_ * (cot(alpha_) + cot(beta_)); }
double Trapezoid::legLeft() const { return h_ / std::sin(alpha_); }
double Trapezoid::legRight() const { return h_ / std::sin(beta_); }
double Trapezoid::area() const { return 0.5 * h_ * (B_ + b()); }
double Trapezoid::perimeter() const {
    return B_ + b() + h_ * (1.0 / std::sin(alpha_) + 1.0 / std::sin(beta_));
}

bool Trapezoid::isRectangle(double tol) const { return angleInvariant(*this).isRectangle(tol); }
bool Trapezoid::isIsosceles(double tol) const { return std::abs(alpha_ - beta_) <= tol; }

Polygon Trapezoid::polygon() const {
    std::vector<Vec2> v{
        Vec2(0.0, 0.0),
        Vec2(B_, 0.0),
        Vec2(B_ - h_ * cot(beta_), h_),
        Vec2(h_ * cot(alpha_), h_),
    };
    return Polygon::fromVertices(std::move(v));
}

AngleInvariant angleInvariant(const Trapezoid& t) { return {angleF(t.alpha()) + angleF(t.beta())}; }

ExtendedTriangle extendedTriangle(const Trapezoid& t) {
    ExtendedTriangle e;
    e.apexAngle = kPi - t.alpha() - t.beta();
    e.hAlpha = t.B() * std::sin(t.beta());
    e.hBeta = t.B() * std::sin(t.alpha());
    e.acute = e.apexAngle <= kHalfPi + 1e-15;
    return e;
}

// ------------------------------------------------------ rational detection

std::optional<std::pair<long, long>> rationalApproximation(double x, long maxDenominator, double tol) {
    if (!std::isfinite(x) || maxDenominator < 1) return std::nullopt;
    // Any p/q within tol < 1/(2 q^2) of x is a convergent, so walking the
    // convergents finds the smallest admissible denominator.
    long pPrev = 1, qPrev = 0, p = static_cast<long>(std::floor(x)), q = 1;
    double rest = x - std::floor(x);
    while (q <= maxDenominator) {
        if (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) <= tol) {
            return std::make_pair(p, q);
        }
        if (rest < 1e-15) break;
        const double inv = 1.0 / rest;
        const long digit = static_cast<long>(std::floor(inv));
        rest = inv - std::floor(inv);
        const long pNext = digit * p + pPrev, qNext = digit * q + qPrev;
        pPrev = p, qPrev = q, p = pNext, q = qNext;
    }
    return std::nullopt;
}

std::optional<int> piOverN(double angle, double tol, int maxN) {
    if (angle <= 0.0) return std::nullopt;
    const double n = kPi / angle;
    const long rounded = std::lround(n);
    if (rounded < 2 || rounded > maxN) return std::nullopt;
    if (std::abs(angle - kPi / static_cast<double>(rounded)) <= tol) return static_cast<int>(rounded);
    return std::nullopt;
}

std::string toString(HAlphaClass c) {
    switch (c) {
        case HAlphaClass::Diffractive: return "diffractive";
        case HAlphaClass::NonDiffractive: return "non-diffractive";
        case HAlphaClass::BandMember: return "band-member";
    }
    return "unknown";
}

// ---------------------------------------------------------------- catalog

OrbitCatalog orbitCatalog(const Trapezoid& t, const CatalogOptions& options) {
    OrbitCatalog c;
    const double B = t.B(), h = t.h(), a = t.alpha(), be = t.beta(), b = t.b();

    c.twoH = 2.0 * h;
    c.twoHSweptArea = 2.0 * h * b;
    c.twoB = 2.0 * b;
    for (int m = 2; 2.0 * m * b <= options.lmax * (1.0 + 1e-12); ++m) c.twoMB.push_back(2.0 * m * b);

    // Foot of the altitude from the alpha vertex sits at this height on the right leg;
    // both the orthic triangle and 2h_alpha stay inside T iff it is at most h.
    const double footHeight = B * std::sin(be) * std::cos(be);
    const bool footInside = h >= footHeight * (1.0 - 1e-12);
    const double sumAngles = a + be;

    if (sumAngles > kHalfPi + options.angleTolerance) {
        FagnanoEntry f;
        f.length = 2.0 * B * std::sin(a) * std::sin(be);
        f.existsInside = footInside;
        f.degenerate = std::abs(a - kHalfPi) <= options.angleTolerance;
        f.diffractive = footInside && !f.degenerate && std::abs(h - footHeight) <= 1e-12 * std::max(h, 1.0);
        if (f.degenerate) f.length = 2.0 * B * std::sin(be);
        c.fagnano = f;
    }

    c.twoHAlpha.length = 2.0 * B * std::sin(be);
    c.twoHAlpha.existsInside = sumAngles > kHalfPi + options.angleTolerance && footInside;
    if (std::abs(a - be) <= options.angleTolerance) {
        c.twoHAlpha.classification = HAlphaClass::BandMember;
    } else if (auto n = piOverN(a, options.angleTolerance); n && *n <= 4) {
        c.twoHAlpha.classification = HAlphaClass::NonDiffractive;
    } else {
        c.twoHAlpha.classification = HAlphaClass::Diffractive;
    }

    // m alpha = n beta <= pi/2, gcd(m, n) = 1; alpha/beta = n/m with m bounded.
    if (auto frac = rationalApproximation(a / be, options.cmnDenominatorBound, options.cmnTolerance)) {
        const long n = frac->first, m = frac->second;
        if (n >= m && m >= 1 && static_cast<double>(m) * a <= kHalfPi + options.angleTolerance) {
            c.cmnFamilies.push_back({m, n});
        }
    }
    return c;
}

}  // namespace trapspec
