#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trapspec {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

// Lower bound of the angle invariant; attained exactly by rectangles.
inline constexpr double kRectangleQ = 8.0 / (std::numbers::pi * std::numbers::pi);

// Default |q - 8/pi^2| threshold for exact-geometry rectangle tests.
inline constexpr double kExactRectangleTol = 1e-9;

/// F(x) = 1 / (x (pi - x)); strictly decreasing on (0, pi/2].
double angleF(double x);

/// Inverse of angleF restricted to (0, pi/2]. Requires value >= 4/pi^2.
double angleFInverse(double value);

/// Convex polygon with counterclockwise vertices.
class Polygon {
public:
    Polygon() = default;

    /// Validates simplicity and convexity. Clockwise input is reversed.
    /// Throws DomainError for fewer than three vertices, repeated vertices,
    /// or a non-convex outline.
    static Polygon fromVertices(std::vector<Vec2> vertices);

    std::size_t size() const { return vertices_.size(); }
    const std::vector<Vec2>& vertices() const { return vertices_; }
    const Vec2& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

    // Edge i runs from vertex i to vertex i+1.
    std::pair<Vec2, Vec2> edge(std::size_t i) const { return {vertex(i), vertex(i + 1)}; }
    double edgeLength(std::size_t i) const { return (vertex(i + 1) - vertex(i)).norm(); }

    std::vector<double> interiorAngles() const;
    double area() const;
    double perimeter() const;
    double diameter() const;
    Vec2 centroid() const;
    double shortestEdge() const;

    /// Applies x -> R x + t with R a rotation (orientation is preserved).
    Polygon transformed(const Eigen::Matrix2d& rotation, const Vec2& translation) const;

private:
    explicit Polygon(std::vector<Vec2> v) : vertices_(std::move(v)) {}
    std::vector<Vec2> vertices_;
};

/// Sum over corners of (pi^2 - theta^2) / (24 pi theta).
double heatCornerSum(const Polygon& polygon);

struct ExtendedTriangle {
    double apexAngle = 0.0;  // gamma = pi - alpha - beta
    double hAlpha = 0.0;     // altitude from the alpha vertex, B sin(beta)
    double hBeta = 0.0;      // altitude from the beta vertex, B sin(alpha)
    bool acute = false;      // gamma <= pi/2
};

/// Non-obtuse trapezoid in the canonical (B, h, alpha, beta) parameterization.
/// Every other quantity is derived on demand.
class Trapezoid {
public:
    /// Throws DomainError unless B, h > 0, 0 < beta <= alpha <= pi/2 and the
    /// derived top side satisfies 0 < b <= B.
    static Trapezoid make(double B, double h, double alpha, double beta);

    double B() const { return B_; }
    double h() const { return h_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    double b() const;
    double legLeft() const;   // h / sin(alpha)
    double legRight() const;  // h / sin(beta)
    double area() const;
    double perimeter() const;

    bool isRectangle(double tol = kExactRectangleTol) const;
    bool isIsosceles(double tol = 1e-12) const;

    /// Vertices (0,0) [alpha], (B,0) [beta], top-right, top-left.
    /// Edge 0 is the base, 1 the right leg, 2 the top side, 3 the left leg.
    Polygon polygon() const;

private:
    Trapezoid(double B, double h, double alpha, double beta)
        : B_(B), h_(h), alpha_(alpha), beta_(beta) {}
    double B_, h_, alpha_, beta_;
};

/// Edge indices of Trapezoid::polygon().
enum TrapezoidEdge : int { kBase = 0, kRightLeg = 1, kTop = 2, kLeftLeg = 3 };

struct AngleInvariant {
    double q = 0.0;
    bool isRectangle(double tol = kExactRectangleTol) const { return std::abs(q - kRectangleQ) < tol; }
};

AngleInvariant angleInvariant(const Trapezoid& t);
ExtendedTriangle extendedTriangle(const Trapezoid& t);
inline Polygon vertices(const Trapezoid& t) { return t.polygon(); }

/// First continued-fraction convergent p/q of x with q <= maxDenominator and
/// |x - p/q| <= tol.
std::optional<std::pair<long, long>> rationalApproximation(double x, long maxDenominator, double tol);

/// True when angle equals pi/N for some integer N >= 2 (within tol).
std::optional<int> piOverN(double angle, double tol = 1e-9, int maxN = 64);

enum class HAlphaClass { Diffractive, NonDiffractive, BandMember };
std::string toString(HAlphaClass c);

struct FagnanoEntry {
    double length = 0.0;       // 2 B sin(alpha) sin(beta)
    bool existsInside = false;
    bool diffractive = false;  // grazes the top-right vertex
    bool degenerate = false;   // alpha = pi/2: collapses onto the 2h_alpha orbit
};

struct HAlphaEntry {
    double length = 0.0;  // 2 B sin(beta)
    bool existsInside = false;
    HAlphaClass classification = HAlphaClass::Diffractive;
};

struct CmnFamily {
    long m = 0;
    long n = 0;
};

struct CatalogOptions {
    double lmax = 0.0;               // bound for the 2mb multiples; 0 keeps only m = 1
    long cmnDenominatorBound = 20;
    double cmnTolerance = 1e-9;
    double angleTolerance = 1e-9;
};

struct OrbitCatalog {
    double twoH = 0.0;
    double twoHSweptArea = 0.0;  // 2 h b
    double twoB = 0.0;
    std::vector<double> twoMB;   // 2mb for m >= 2 up to lmax
    std::optional<FagnanoEntry> fagnano;
    HAlphaEntry twoHAlpha;
    std::vector<CmnFamily> cmnFamilies;
};

OrbitCatalog orbitCatalog(const Trapezoid& t, const CatalogOptions& options = {});

}  // namespace trapspec
