#include "trapspec/spectrum.hpp"

#include "trapspec/errors.hpp"

#include <algorithm>
#include <cmath>

namespace trapspec {

std::string toString(BoundaryCondition bc) { return bc == BoundaryCondition::Dirichlet ? "D" : "N"; }

BoundaryCondition boundaryConditionFromString(const std::string& s) {
    if (s == "D" || s == "d" || s == "dirichlet" || s == "Dirichlet") return BoundaryCondition::Dirichlet;
    if (s == "N" || s == "n" || s == "neumann" || s == "Neumann") return BoundaryCondition::Neumann;
    throw FormatError("unknown boundary condition '" + s + "'");
}

double Spectrum::maxAccuracy() const {
    double m = 0.0;
    for (double a : accuracy) m = std::max(m, a);
    return m;
}

Spectrum Spectrum::truncated(std::size_t n) const {
    Spectrum s = *this;
    n = std::min(n, eigenvalues.size());
    s.eigenvalues.resize(n);
    s.accuracy.resize(std::min(n, accuracy.size()));
    return s;
}

Spectrum mergeSpectra(const Spectrum& a, const Spectrum& b) {
    if (a.boundaryCondition != b.boundaryCondition) {
        throw PreconditionError("cannot merge spectra with different boundary conditions");
    }
    Spectrum out;
    out.boundaryCondition = a.boundaryCondition;
    std::vector<std::pair<double, double>> all;
    for (std::size_t i = 0; i < a.count(); ++i)
        all.emplace_back(a.eigenvalues[i], i < a.accuracy.size() ? a.accuracy[i] : 0.0);
    for (std::size_t i = 0; i < b.count(); ++i)
        all.emplace_back(b.eigenvalues[i], i < b.accuracy.size() ? b.accuracy[i] : 0.0);
    std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [v, acc] : all) {
        out.eigenvalues.push_back(v);
        out.accuracy.push_back(acc);
    }
    return out;
}

Spectrum exactRectangleSpectrum(double a, double c, std::size_t count, BoundaryCondition bc) {
    if (!(a > 0.0 && c > 0.0)) throw DomainError("rectangle sides must be positive");
    Spectrum s;
    s.boundaryCondition = bc;
    s.sourceDomain = Polygon::fromVertices({Vec2(0, 0), Vec2(a, 0), Vec2(a, c), Vec2(0, c)});
    if (count == 0) return s;

    const int first = bc == BoundaryCondition::Dirichlet ? 1 : 0;
    const double area = a * c;
    // Weyl guess for the cutoff, enlarged until enough modes fall below it.
    double cutoff = 4.0 * kPi * static_cast<double>(count) / area * 1.5 + 4.0 * kPi * kPi / std::min(a * a, c * c);
    std::vector<double> values;
    for (;;) {
        values.clear();
        const int mMax = static_cast<int>(std::floor(a * std::sqrt(cutoff) / kPi)) + 1;
        for (int m = first; m <= mMax; ++m) {
            const double xm = kPi * kPi * m * m / (a * a);
            if (xm > cutoff) break;
            const double restN = std::sqrt((cutoff - xm) / (kPi * kPi)) * c;
            const int nMax = static_cast<int>(std::floor(restN));
            for (int n = first; n <= nMax; ++n) {
                values.push_back(xm + kPi * kPi * n * n / (c * c));
            }
        }
        if (values.size() >= count) break;
        cutoff *= 2.0;
    }
    std::sort(values.begin(), values.end());
    values.resize(count);
    s.eigenvalues = std::move(values);
    s.accuracy.assign(count, 0.0);
    return s;
}

}  // namespace trapspec
