#include "trapspec/heat_trace.hpp"

#include "trapspec/errors.hpp"
#include "trapspec/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trapspec {

namespace {

constexpr double kWindowFloor = 1e-4;
constexpr double kWindowCeiling = 1e-1;

void requireSpectrum(const Spectrum& s) {
    if (s.empty()) throw PreconditionError("spectrum is empty");
}

double firstPositive(const Spectrum& s) {
    for (double l : s.eigenvalues)
        if (l > 1e-9 * std::max(1.0, s.largest())) return l;
    return s.largest();
}

// Heat-trace error implied by the per-eigenvalue accuracy estimates.
double accuracyError(const Spectrum& s, double t) {
    double e = 0.0;
    for (std::size_t k = s.count(); k-- > 0;) {
        const double acc = k < s.accuracy.size() ? s.accuracy[k] : 0.0;
        e += t * std::abs(s.eigenvalues[k]) * acc * std::exp(-t * s.eigenvalues[k]);
    }
    return e;
}

struct LinearFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd residuals;
    double weightedRms = 0.0;
    double condition = 0.0;
};

LinearFit weightedFit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    Eigen::MatrixXd A = w.asDiagonal() * X;
    const Eigen::VectorXd rhs = w.cwiseProduct(y);
    // Equilibrate columns so the condition number reflects the window, not units.
    Eigen::VectorXd colScale(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        colScale[j] = A.col(j).norm();
        A.col(j) /= colScale[j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    LinearFit fit;
    fit.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    fit.coef = svd.solve(rhs).cwiseQuotient(colScale);
    fit.residuals = y - X * fit.coef;
    fit.weightedRms = std::sqrt(w.cwiseProduct(fit.residuals).squaredNorm() / static_cast<double>(y.size()));
    return fit;
}

}  // namespace

double heatTraceTailBound(const Spectrum& spectrum, double t) {
    requireSpectrum(spectrum);
    const double lN = spectrum.largest();
    if (!(lN > 0.0)) return 0.0;
    const double n = static_cast<double>(spectrum.count());
    // N(lambda) ~ (n / lN) lambda beyond the last eigenvalue.
    return 1.5 * (n / lN) * std::exp(-t * lN) / t;
}

HeatTraceValue heatTracePartial(const Spectrum& spectrum, double t) {
    if (!(t > 0.0)) throw PreconditionError("heat trace needs t > 0");
    requireSpectrum(spectrum);
    HeatTraceValue v;
    // Smallest terms first.
    for (std::size_t k = spectrum.count(); k-- > 0;) v.value += std::exp(-t * spectrum.eigenvalues[k]);
    v.tailBound = heatTraceTailBound(spectrum, t);
    v.truncationWarning = v.tailBound > 1e-6 * v.value;
    return v;
}

std::pair<double, double> defaultHeatWindow(const Spectrum& spectrum) {
    requireSpectrum(spectrum);
    const double lN = spectrum.largest();
    if (!(lN > 0.0)) return {kWindowFloor, kWindowCeiling};
    double lo = std::clamp(std::max(10.0 / lN, kWindowFloor), kWindowFloor, kWindowCeiling);
    double hi = std::clamp(40.0 / lN, kWindowFloor, kWindowCeiling);
    return {lo, hi};
}

HeatInvariants fitInvariants(const Spectrum& spectrum, const HeatFitOptions& options) {
    requireSpectrum(spectrum);
    if (options.gridSize < 20) throw PreconditionError("heat fit needs a grid of at least 20 points");

    HeatInvariants out;
    const auto requested = options.window.value_or(defaultHeatWindow(spectrum));
    if (!(requested.first > 0.0 && requested.second > requested.first)) {
        throw WindowTooNarrow("heat window must satisfy 0 < t_min < t_max");
    }
    out.requestedWindow = requested;
    double tMin = requested.first, tMax = requested.second;

    // The exponentially small remainder grows once t approaches 1/lambda_1.
    const double ceiling = std::min(kWindowCeiling, 1.0 / firstPositive(spectrum));

    auto tailOk = [&](double t) {
        const double z = heatTracePartial(spectrum, t).value;
        return heatTraceTailBound(spectrum, t) <= options.tailTolerance * z &&
               accuracyError(spectrum, t) <= options.accuracyTolerance;
    };
    while (!tailOk(tMin) && tMin < ceiling) tMin *= 1.02;
    if (tMin != requested.first) {
        std::ostringstream note;
        note << "t_min raised from " << requested.first << " to " << tMin << " (truncation tail / accuracy)";
        out.notes.push_back(note.str());
    }
    if (tMax < options.minWindowRatio * tMin) {
        tMax = std::min(options.minWindowRatio * tMin, std::max(ceiling, requested.second));
        std::ostringstream note;
        note << "t_max set to " << tMax;
        out.notes.push_back(note.str());
    }
    if (!(tMax > 1.5 * tMin) || !tailOk(tMin)) {
        std::ostringstream msg;
        msg << "no usable heat window: [" << tMin << ", " << tMax << "]";
        throw WindowTooNarrow(msg.str());
    }
    out.tWindow = {tMin, tMax};
    out.windowAdjusted = out.tWindow != requested;

    const int n = options.gridSize;
    const double sign = spectrum.boundaryCondition == BoundaryCondition::Dirichlet ? -1.0 : 1.0;
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n), w(n);
    for (int i = 0; i < n; ++i) {
        const double t = tMin * std::pow(tMax / tMin, static_cast<double>(i) / (n - 1));
        X(i, 0) = 1.0 / (4.0 * kPi * t);
        X(i, 1) = sign / (8.0 * std::sqrt(kPi * t));
        X(i, 2) = 1.0;
        y[i] = heatTracePartial(spectrum, t).value;
        w[i] = t;
    }
    const LinearFit three = weightedFit(X, y, w);
    if (three.condition > options.maxCondition) {
        std::ostringstream msg;
        msg << "heat fit design matrix condition number " << three.condition << " exceeds " << options.maxCondition;
        throw IllConditionedFit(msg.str());
    }
    const LinearFit two = weightedFit(X.leftCols(2), y, w);

    out.area = three.coef[0];
    out.perimeter = three.coef[1];
    out.cornerConstant = three.coef[2];
    out.qEstimate = (24.0 * out.cornerConstant + 2.0) / (kPi * kPi);
    out.residual = three.weightedRms;
    out.twoTermResidual = two.weightedRms;
    out.conditionNumber = three.condition;
    out.fitResiduals.assign(three.residuals.data(), three.residuals.data() + three.residuals.size());
    return out;
}

}  // namespace trapspec
