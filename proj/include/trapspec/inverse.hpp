#pragma once

#include "trapspec/geometry.hpp"
#include "trapspec/heat_trace.hpp"
#include "trapspec/spectrum.hpp"
#include "trapspec/wave_trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trapspec {

struct Rectangle {
    double a = 0.0;  // shorter side
    double c = 0.0;
    /// As a trapezoid: base c, height a, right angles.
    Trapezoid asTrapezoid() const;
};

/// Sides a <= c with pi^2 (1/a^2 + 1/c^2) = lambda1 and a c = area.
/// Throws NoSolution when lambda1 < 2 pi^2 / area (1e-9 relative slack).
Rectangle reconstructRectangle(double lambda1, double area);

struct InverseSolution {
    Trapezoid trapezoid;
    std::vector<Trapezoid> alternatives;  // further roots, if any
    double residual = 0.0;                // |csc a + csc b - S| / S, or the analogous check
    bool nonUnique() const { return !alternatives.empty(); }
};

/// Trapezoid with the given area, perimeter, angle invariant and height.
/// Solves csc a + csc b = S := (L - 2A/h)/h and F(a) + F(b) = q on
/// 0 < b <= a <= pi/2 by bisection and secant steps on a, with b = b(a)
/// from the monotone branch of F. Throws NoSolution when S <= 2, q is below
/// 8/pi^2, or no root exists.
InverseSolution solveFromH(double A, double L, double q, double h);

/// Trapezoid from perimeter, angle invariant, Fagnano length and the 2h_alpha
/// half-length: sin a = lF / (2 hAlpha), b from q, B = hAlpha / sin b,
/// h = (L - 2B) / (tan(a/2) + tan(b/2)). When `area` is given the recomputed
/// area must agree to `areaTolerance` (relative) or InconsistentInvariants is
/// thrown. Throws NoSolution when a step leaves the admissible range.
InverseSolution solveFromLFHalpha(double L, double q, double lF, double hAlpha, std::optional<double> area = std::nullopt,
                                  double areaTolerance = 1e-6);

/// Case (2) of the uniqueness argument: a trapezoid with angle invariant q,
/// Fagnano length lF and height h whose 2h singularity precedes its own
/// 2h_alpha (h < hAlpha by a relative margin). Returns one such trapezoid or
/// throws NoSolution; with lF, q taken from an isosceles trapezoid and h its
/// hAlpha, no solution exists.
Trapezoid solveCaseTwo(double q, double lF, double h, double margin = 1e-9);

/// Canonical (B, h, alpha, beta) form of a convex quadrilateral with a pair
/// of parallel sides, the longer one as base. Throws DomainError otherwise or
/// when a base angle is obtuse.
Trapezoid canonicalTrapezoid(const Polygon& p, double tol = 1e-9);

enum class ConsistencyVerdict { Congruent, DistinctInvariants, PotentiallyIsospectral };
std::string toString(ConsistencyVerdict v);

struct ConsistencyReport {
    ConsistencyVerdict verdict = ConsistencyVerdict::Congruent;
    std::string separatingInvariant;  // first invariant that differs
    double value1 = 0.0, value2 = 0.0;
};

/// Compares (A, L, q, min(2h, 2b), lF with its existence flag, 2h_alpha) at
/// relative tolerance `tol`, then the canonical parameters.
ConsistencyReport checkIsospectralConsistency(const Trapezoid& t1, const Trapezoid& t2, double tol = 1e-9);
ConsistencyReport checkIsospectralConsistency(const Polygon& p1, const Polygon& p2, double tol = 1e-9);

enum class ReconstructionBranch { Rectangle, FirstOrderHalfIs2h, LFThen2hAlpha, LFThen2h, AlphaRightAngle };
std::string toString(ReconstructionBranch b);

struct ReconstructionConfig {
    std::size_t minEigenvalues = 800;
    double rectangleTolerance = 2e-3;  // |q - 8/pi^2| / (8/pi^2)
    double sigma = 0.1;
    double threshold = 5.0;            // significance: amplitude / off-peak median
    double tStart = 0.0;               // default 4 sigma
    double tEnd = 0.0;                 // default 2 L (every 2 lF lies below)
    double matchSigmas = 2.0;          // peak matching tolerance in units of sigma
    double areaTolerance = 0.02;       // fit tolerances for the cross-check
    double perimeterTolerance = 0.04;
    double qTolerance = 0.05;
    int orderSamples = 32;
    int maxBranches = 64;
    HeatFitOptions heat;
    int workers = 1;
};

struct ConsideredCandidate {
    SingularityCandidate candidate;
    OrderClass orderClass = OrderClass::Ambiguous;
    std::string note;  // noise floor, skipped as 2mb, ...
};

struct BranchResult {
    ReconstructionBranch branch = ReconstructionBranch::FirstOrderHalfIs2h;
    std::optional<Trapezoid> trapezoid;
    std::vector<double> evidence;  // t values used, in order
    std::string interpretation;    // e.g. "2h@2.01"
    // Cross-validation against the data.
    double areaResidual = 0.0;     // relative
    double perimeterResidual = 0.0;
    double qResidual = 0.0;
    int unmatchedPeaks = 0;        // observed peaks with no enumerated length within tolerance
    std::vector<std::string> missingCatalog;  // strong catalog orbits with no observed peak
    bool shortestMatches = true;   // first significant peak equals min(2h, 2b)
    bool nonUnique = false;
    bool survives = false;
    std::string failure;           // set when the branch produced no trapezoid
};

struct ReconstructionReport {
    bool isRectangle = false;
    std::optional<Rectangle> rectangle;
    std::optional<Trapezoid> trapezoid;  // unset when ambiguity survives cross-validation
    std::optional<ReconstructionBranch> branch;
    bool ambiguous = false;
    HeatInvariants invariants;
    double lambda1 = 0.0;
    std::optional<double> h, lF, hAlpha;
    std::vector<ConsideredCandidate> candidates;
    std::vector<SingularityCandidate> evidence;
    std::vector<BranchResult> branches;
    double sigma = 0.0, kRef = 0.0, threshold = 0.0;
    std::pair<double, double> tRange{0.0, 0.0};
    std::vector<std::string> notes;

    /// "reconstructed", "ambiguous" (several trapezoids survive) or
    /// "no-survivor".
    std::string status() const;
};

/// Heat-trace fit, rectangle test, then the wave-trace scan that identifies
/// 2h, or lF followed by 2h_alpha or 2h, or the right-angle case. Ambiguous
/// order classes fork the scan; every resulting trapezoid is cross-validated
/// against the fitted invariants and the observed peaks. Along a 2h branch
/// the angles come from a least-squares fit over the q-curve (see
/// fitFromHAndPeaks in the implementation). Throws PreconditionError for
/// short spectra and InvariantMismatch when a rectangle contradicts the
/// perimeter; ambiguity and the absence of survivors are reported, not thrown.
ReconstructionReport scanAndReconstruct(const Spectrum& s, const ReconstructionConfig& config = {});

/// Throws AmbiguousClassification or NoSolution unless the report holds a
/// unique trapezoid.
void requireUnique(const ReconstructionReport& report);

}  // namespace trapspec
