#pragma once

#include "trapspec/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace trapspec {

/// Plane isometry x -> linear * x + translation.
struct UnfoldingIsometry {
    Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
    Vec2 translation = Vec2::Zero();
    int parity = 1;  // +1 orientation preserving, -1 reversing

    static UnfoldingIsometry reflection(const Vec2& a, const Vec2& b);  // across the line through a, b
    Vec2 apply(const Vec2& x) const { return linear * x + translation; }
    Vec2 applyLinear(const Vec2& v) const { return linear * v; }
    /// (*this)(rhs(x)).
    UnfoldingIsometry after(const UnfoldingIsometry& rhs) const;
    UnfoldingIsometry inverse() const;
};

/// Reflections across the lines of the listed edges, applied in order
/// (the first edge acts first). Throws PreconditionError for an empty word,
/// repeated consecutive edges, or out-of-range indices.
UnfoldingIsometry composeWord(const Polygon& polygon, const std::vector<int>& word);

enum class OrbitKind { Band, Isolated, Conical };
std::string toString(OrbitKind k);

struct ClosedGeodesic {
    std::vector<int> word;  // edges hit, in order, starting on startEdge
    double length = 0.0;
    OrbitKind kind = OrbitKind::Band;

    // Band data.
    Vec2 translation = Vec2::Zero();
    double corridorWidth = 0.0;
    double sweptArea = 0.0;

    // Isolated data: the glide axis.
    Vec2 axisPoint = Vec2::Zero();
    Vec2 axisDirection = Vec2::Zero();

    bool conical = false;
    bool diffractive = false;
    bool onBoundary = false;
    bool traced = true;          // false for loops at untraced pi/N corners
    std::vector<int> vertices;   // conical chains: vertices met, in order
    std::vector<Vec2> path;      // conical chains: closed folded polyline

    int multiplicity = 1;        // traversals of the primitive orbit or family
    double primitiveLength = 0.0;
    bool multiple() const { return multiplicity > 1; }

    int startEdge = -1;
    Vec2 basepoint = Vec2::Zero();  // on startEdge (conical: the first vertex)
    Vec2 direction = Vec2::Zero();  // unit, pointing into the polygon

    int period() const { return static_cast<int>(word.size()); }
    bool oddPeriod() const { return word.size() % 2 == 1; }
};

struct EnumerationOptions {
    int periodCap = 24;
    std::int64_t nodeBudget = 20'000'000;
    double vertexTolerance = 1e-9;  // relative to the diameter
};

struct OrbitEnumeration {
    std::vector<ClosedGeodesic> orbits;  // sorted by (length, word)
    bool complete = true;                // false when the node budget ran out
    std::int64_t nodes = 0;
};

/// Non-conical periodic orbits of length <= lmax with at most periodMax
/// reflections, found by depth-first search over reflection words while
/// keeping the set of unfolded lines that cross every edge so far.
/// Primitive orbits and their multiples are both reported.
OrbitEnumeration enumerateOrbits(const Polygon& polygon, double lmax, int periodMax = 24,
                                 const EnumerationOptions& options = {});

/// Straight vertex-to-vertex segment of the unfolding, folded back into the
/// polygon.
struct GeneralizedDiagonal {
    int from = -1;
    int to = -1;
    double length = 0.0;
    Vec2 departure = Vec2::Zero();  // unit direction leaving `from`
    Vec2 arrival = Vec2::Zero();    // unit direction of travel on reaching `to`
    std::vector<int> reflections;   // edges bounced off in between
    bool onBoundary = false;
};

struct DiagonalOptions {
    int chainCap = 4;  // diagonals per closed chain
    std::int64_t nodeBudget = 5'000'000;
    double vertexTolerance = 1e-9;
};

struct DiagonalSearch {
    std::vector<GeneralizedDiagonal> diagonals;
    std::vector<ClosedGeodesic> closedChains;  // conical closed geodesics, with multiples
    bool complete = true;
};

/// Generalized diagonals of length <= lmax and the closed conical geodesics
/// built from them. Chains continue through diffractive vertices in any
/// direction and through right-angle corners by reversal; single loops at
/// other pi/N corners are reported untraced.
DiagonalSearch findGeneralizedDiagonals(const Polygon& polygon, double lmax, const DiagonalOptions& options = {});

/// True if the corner angle is not pi/N.
bool isDiffractiveAngle(double angle, double tol = 1e-9);

struct PoincareData {
    Eigen::Matrix2d P = Eigen::Matrix2d::Identity();  // d(s, theta) after one period
    double detIminusP = 0.0;
    double detP = 1.0;
};

/// Linearized first-return billiard map along a non-conical orbit, in
/// (arclength on the start edge, angle from the edge tangent) coordinates, by
/// central differences. `repetitions` traverses the orbit that many times.
/// Throws PreconditionError for conical orbits, DerivativeInstability when
/// one-sided estimates disagree by more than 1e-3.
PoincareData poincareMap(const Polygon& polygon, const ClosedGeodesic& orbit, int repetitions = 1);

/// Closed polyline of the orbit inside the polygon (first point repeated at
/// the end). Non-conical orbits are traced from their basepoint.
std::vector<Vec2> orbitPath(const Polygon& polygon, const ClosedGeodesic& orbit);

struct LengthSpectrumEntry {
    double length = 0.0;
    std::vector<std::size_t> orbits;  // indices into LengthSpectrum::orbits
};

struct LengthSpectrum {
    std::vector<LengthSpectrumEntry> entries;  // ascending
    std::vector<ClosedGeodesic> orbits;
    double mergeTolerance = 1e-9;  // relative
    bool complete = true;

    std::vector<double> lengths() const;
    /// Entry index whose length matches within the merge tolerance, or -1.
    int find(double length) const;
};

struct LengthSpectrumOptions {
    int periodMax = 24;
    EnumerationOptions enumeration;
    DiagonalOptions diagonals;
    double mergeTolerance = 1e-9;
};

LengthSpectrum lengthSpectrum(const Polygon& polygon, double lmax, const LengthSpectrumOptions& options = {});
LengthSpectrum lengthSpectrum(const Trapezoid& t, double lmax, const LengthSpectrumOptions& options = {});

/// Catalog labels ("2h", "2b", "2mb", "lF", "2hAlpha") whose length matches.
std::vector<std::string> catalogLabels(const OrbitCatalog& catalog, double length, double relTol = 1e-9);

struct ShortestOrbit {
    double length = 0.0;
    std::string label;  // catalog label, or "other"
};

/// Shortest closed geodesic of the trapezoid. Requires lcap >= min(2h, 2b).
ShortestOrbit shortestOrbit(const Trapezoid& t, double lcap, const LengthSpectrumOptions& options = {});

}  // namespace trapspec
