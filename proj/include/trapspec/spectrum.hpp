#pragma once

#include "trapspec/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trapspec {

enum class BoundaryCondition { Dirichlet, Neumann };

std::string toString(BoundaryCondition bc);
BoundaryCondition boundaryConditionFromString(const std::string& s);

/// Ascending Laplace eigenvalues with per-eigenvalue relative accuracy.
struct Spectrum {
    std::vector<double> eigenvalues;
    BoundaryCondition boundaryCondition = BoundaryCondition::Dirichlet;
    std::vector<double> accuracy;  // estimated relative error, same length as eigenvalues
    std::optional<Polygon> sourceDomain;

    std::size_t count() const { return eigenvalues.size(); }
    bool empty() const { return eigenvalues.empty(); }
    double largest() const { return eigenvalues.empty() ? 0.0 : eigenvalues.back(); }
    double maxAccuracy() const;

    /// Leading `n` eigenvalues (and accuracies) as a new spectrum.
    Spectrum truncated(std::size_t n) const;
};

/// Merges two spectra with the same boundary condition, keeping every value.
Spectrum mergeSpectra(const Spectrum& a, const Spectrum& b);

/// Lowest `count` eigenvalues of the a x c rectangle, with multiplicity.
/// Dirichlet modes use m, n >= 1; Neumann modes m, n >= 0.
Spectrum exactRectangleSpectrum(double a, double c, std::size_t count, BoundaryCondition bc);

}  // namespace trapspec
