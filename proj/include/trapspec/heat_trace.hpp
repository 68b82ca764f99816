#pragma once

#include "trapspec/spectrum.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trapspec {

struct HeatTraceValue {
    double value = 0.0;
    double tailBound = 0.0;          // Weyl estimate of the omitted terms
    bool truncationWarning = false;  // tail above 1e-6 of the value
};

/// Truncated heat trace sum_k exp(-t lambda_k) over the given eigenvalues.
HeatTraceValue heatTracePartial(const Spectrum& spectrum, double t);

/// Weyl-law bound on sum_{k>N} exp(-t lambda_k), using the area implied by
/// the last eigenvalue with a 50% safety margin.
double heatTraceTailBound(const Spectrum& spectrum, double t);

struct HeatFitOptions {
    std::optional<std::pair<double, double>> window;  // default derived from the spectrum
    int gridSize = 40;
    double tailTolerance = 1e-8;      // relative tail allowed at t_min
    double accuracyTolerance = 1e-2;  // absolute heat-trace error allowed from eigenvalue accuracy
    double minWindowRatio = 4.0;      // t_max / t_min after adjustment
    double maxCondition = 1e12;
};

struct HeatInvariants {
    double area = 0.0;
    double perimeter = 0.0;
    double cornerConstant = 0.0;  // K
    double qEstimate = 0.0;       // (24K + 2) / pi^2
    double residual = 0.0;        // weighted RMS of the three-term fit
    double twoTermResidual = 0.0; // same with K omitted
    double conditionNumber = 0.0;
    std::vector<double> fitResiduals;  // Z(t_i) - model(t_i) on the grid
    std::pair<double, double> tWindow{0.0, 0.0};
    std::pair<double, double> requestedWindow{0.0, 0.0};
    bool windowAdjusted = false;
    std::vector<std::string> notes;
};

/// Default window [max(10/lambda_N, 1e-4), 40/lambda_N] clipped to [1e-4, 1e-1].
std::pair<double, double> defaultHeatWindow(const Spectrum& spectrum);

/// Weighted least-squares fit of A/(4 pi t) -+ L/(8 sqrt(pi t)) + K (minus for
/// Dirichlet) on a geometric t-grid with weights proportional to t. The window
/// is raised until the truncation tail and the propagated eigenvalue accuracy
/// are negligible at t_min, and widened to at least `minWindowRatio`.
/// Throws IllConditionedFit, WindowTooNarrow, PreconditionError.
HeatInvariants fitInvariants(const Spectrum& spectrum, const HeatFitOptions& options = {});

}  // namespace trapspec
