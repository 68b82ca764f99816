#pragma once

#include "trapspec/mesh.hpp"
#include "trapspec/spectrum.hpp"

#include <cstdint>
#include <vector>

namespace trapspec {

struct LanczosOptions {
    double tolerance = 1e-8;    // backward error accepted for an eigenpair
    int sliceSize = 48;         // eigenvalues targeted per shift
    int maxRestarts = 8;        // fresh start vectors per slice before giving up
    std::uint64_t seed = 0x5eedULL;
};

struct GeneralizedEigenResult {
    std::vector<double> values;
    std::vector<double> residuals;  // normwise backward error per returned pair
    int factorizations = 0;
    int iterations = 0;
};

/// Lowest `count` eigenvalues of K x = lambda M x (K symmetric positive
/// semidefinite, M symmetric positive definite) by spectrum slicing:
/// shift-invert Lanczos with full reorthogonalization and locking at each
/// shift, with every slice verified by Sylvester inertia of LDL^T(K - s M).
/// `lowerShift` must lie strictly below the smallest eigenvalue.
/// Throws ConvergenceError when a slice cannot be completed.
GeneralizedEigenResult lowestGeneralizedEigenvalues(const SparseMatrix& K, const SparseMatrix& M,
                                                    int count, double lowerShift,
                                                    const LanczosOptions& options = {});

/// Number of eigenvalues of K x = lambda M x below `shift` (inertia count).
int countEigenvaluesBelow(const SparseMatrix& K, const SparseMatrix& M, double shift);

struct SpectrumOptions {
    std::size_t maxEigenvalues = 5000;
    double maxAngleDegrees = 150.0;
    double minElementsPerEdge = 8.0;
    LanczosOptions lanczos;
};

struct RefinementLevel {
    double meshSize = 0.0;
    std::size_t nodes = 0;
    std::size_t dofs = 0;
    std::vector<double> eigenvalues;
};

struct FemSpectrum {
    Spectrum spectrum;                   // extrapolated values
    std::vector<RefinementLevel> levels; // coarse to fine, raw Galerkin values
};

/// Galerkin eigenvalues on `refineLevels` nested uniform refinements of a mesh
/// of size `meshSize`, combined by Richardson extrapolation assuming O(h^2)
/// convergence. The accuracy of each eigenvalue is the change between the
/// last two extrapolants (or the last correction when only two levels exist).
FemSpectrum computeSpectrumLevels(const Polygon& polygon, BoundaryCondition bc, std::size_t count,
                                  double meshSize, int refineLevels, const SpectrumOptions& options = {});

Spectrum computeSpectrum(const Polygon& polygon, BoundaryCondition bc, std::size_t count, double meshSize,
                         int refineLevels, const SpectrumOptions& options = {});

/// Per-eigenvalue observed order log2((l0 - l1) / (l1 - l2)) from the last
/// three levels; NaN where the differences do not share a sign.
std::vector<double> observedConvergenceOrder(const FemSpectrum& result);

}  // namespace trapspec
