#include "trapspec/eigensolver.hpp"

#include "trapspec/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <functional>
#include <numeric>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace trapspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Eigen::MatrixXd;
using Eigen::VectorXd;

// LDL^T of K - shift M sharing one symbolic analysis across shifts.
class ShiftedFactorization {
public:
    ShiftedFactorization(const SparseMatrix& K, const SparseMatrix& M) : K_(K), M_(M) {
        SparseMatrix pattern = K_ - M_;
        ldlt_.analyzePattern(pattern);
    }

    // Returns false if the factorization hit a zero pivot.
    bool factor(double shift) {
        shift_ = shift;
        SparseMatrix a = K_ - shift * M_;
        ldlt_.factorize(a);
        if (ldlt_.info() != Eigen::Success) return false;
        const VectorXd& d = ldlt_.vectorD();
        negatives_ = 0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (!(std::isfinite(d[i]))) return false;
            if (d[i] < 0.0) ++negatives_;
        }
        return true;
    }

    // Factor at `shift`, nudging it away from an exact eigenvalue if needed.
    void factorRobust(double shift, double scale) {
        double s = shift;
        for (int attempt = 0; attempt < 6; ++attempt) {
            if (factor(s)) return;
            s += (attempt + 1) * 1e-9 * std::max(std::abs(shift), scale);
        }
        throw ConvergenceError("LDL^T factorization failed near shift " + std::to_string(shift));
    }

    double shift() const { return shift_; }
    int negatives() const { return negatives_; }
    VectorXd solve(const VectorXd& rhs) const { return ldlt_.solve(rhs); }

private:
    const SparseMatrix& K_;
    const SparseMatrix& M_;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    double shift_ = 0.0;
    int negatives_ = 0;
};

struct RitzValue {
    double lambda = 0.0;
    bool converged = false;
    Eigen::Index index = 0;  // column of the tridiagonal eigenvector matrix
};

struct LanczosRun {
    MatrixXd V;
    MatrixXd S;
    std::vector<RitzValue> ritz;  // ascending lambda
    int size = 0;
    bool exhausted = false;

    VectorXd vector(const RitzValue& r) const { return V.leftCols(size) * S.col(r.index).head(size); }
};

using StopRule = std::function<bool(const std::vector<RitzValue>&)>;

// Shift-invert Lanczos in the M-inner product, kept M-orthogonal to the
// columns of X (MX = M X). Runs until `stop` accepts the Ritz values, the
// basis is full, or an invariant subspace is found.
LanczosRun lanczos(const ShiftedFactorization& op, const SparseMatrix& M, const MatrixXd& X, const MatrixXd& MX,
                   int maxBasis, double ritzTol, std::mt19937_64& rng, const StopRule& stop) {
    const Eigen::Index n = M.rows();
    const double shift = op.shift();
    LanczosRun run;
    run.V.resize(n, maxBasis + 1);

    auto orthogonalize = [&](VectorXd& w, int cols) {
        VectorXd mw = M * w;
        double before = std::sqrt(std::max(w.dot(mw), 0.0));
        for (int pass = 0; pass < 2; ++pass) {
            if (cols > 0) {
                const VectorXd c = run.V.leftCols(cols).transpose() * mw;
                w.noalias() -= run.V.leftCols(cols) * c;
            }
            if (X.cols() > 0) {
                const VectorXd d = MX.transpose() * w;
                w.noalias() -= X * d;
            }
            mw = M * w;
            const double after = std::sqrt(std::max(w.dot(mw), 0.0));
            if (after > 0.7 * before) return std::pair{after, mw};
            before = after;
        }
        return std::pair{std::sqrt(std::max(w.dot(mw), 0.0)), mw};
    };

    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = uni(rng);
    auto [nrm, mw0] = orthogonalize(w, 0);
    if (!(nrm > 0.0)) {
        run.exhausted = true;
        return run;
    }
    run.V.col(0) = w / nrm;
    VectorXd mv = mw0 / nrm;

    std::vector<double> alpha, beta;
    Eigen::SelfAdjointEigenSolver<MatrixXd> tri;
    auto analyse = [&](int size, double offBeta) {
        VectorXd d = Eigen::Map<const VectorXd>(alpha.data(), size);
        VectorXd e = size > 1 ? VectorXd(Eigen::Map<const VectorXd>(beta.data(), size - 1)) : VectorXd(0);
        tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        run.ritz.clear();
        for (Eigen::Index i = 0; i < size; ++i) {
            const double theta = tri.eigenvalues()[i];
            if (theta == 0.0) continue;
            RitzValue r;
            r.lambda = shift + 1.0 / theta;
            r.converged = std::abs(offBeta * tri.eigenvectors()(size - 1, i)) <= ritzTol * std::abs(theta);
            r.index = i;
            run.ritz.push_back(r);
        }
        std::sort(run.ritz.begin(), run.ritz.end(),
                  [](const RitzValue& a, const RitzValue& b) { return a.lambda < b.lambda; });
    };

    double lastBeta = 0.0;
    bool analysed = false;
    for (int m = 0; m < maxBasis; ++m) {
        w = op.solve(mv);
        const double a = mv.dot(w);
        w -= a * run.V.col(m);
        if (m > 0) w -= beta[m - 1] * run.V.col(m - 1);
        auto [b, mw] = orthogonalize(w, m + 1);
        alpha.push_back(a);
        lastBeta = b;
        const int size = m + 1;
        const double scale = std::abs(a) + (beta.empty() ? 0.0 : beta.back());
        const bool invariant = !(b > 1e-13 * std::max(scale, std::numeric_limits<double>::min()));
        if (invariant || size == maxBasis || (size >= 8 && size % 8 == 0)) {
            analyse(size, invariant ? 0.0 : b);
            analysed = true;
            if (invariant) {
                run.exhausted = true;
                break;
            }
            if (stop(run.ritz)) break;
            analysed = size == maxBasis;
        }
        beta.push_back(b);
        run.V.col(m + 1) = w / b;
        mv = mw / b;
    }
    run.size = static_cast<int>(alpha.size());
    if (!analysed) analyse(run.size, lastBeta);
    run.S = tri.eigenvectors();
    return run;
}

double normOne(const SparseMatrix& A) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < A.outerSize(); ++j) {
        double col = 0.0;
        for (SparseMatrix::InnerIterator it(A, j); it; ++it) col += std::abs(it.value());
        best = std::max(best, col);
    }
    return best;
}

// Normwise backward error of an approximate eigenpair.
double backwardError(const SparseMatrix& K, const SparseMatrix& M, double normK, double normM, const VectorXd& x,
                     double lambda) {
    const VectorXd r = K * x - lambda * (M * x);
    return r.norm() / std::max((normK + std::abs(lambda) * normM) * x.norm(), std::numeric_limits<double>::min());
}

GeneralizedEigenResult denseLowest(const SparseMatrix& K, const SparseMatrix& M, int count) {
    const MatrixXd kd(K), md(M);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(kd, md);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense generalized eigensolver failed");
    GeneralizedEigenResult r;
    for (int i = 0; i < count; ++i) {
        r.values.push_back(es.eigenvalues()[i]);
        r.residuals.push_back(0.0);
    }
    return r;
}

struct FoundPair {
    double lambda;
    VectorXd x;
};

}  // namespace

int countEigenvaluesBelow(const SparseMatrix& K, const SparseMatrix& M, double shift) {
    ShiftedFactorization f(K, M);
    f.factorRobust(shift, 1.0);
    return f.negatives();
}

// Each slice [lo, cut) is solved around a shift placed inside it. Inertia at
// the shift gives the exact count in [lo, shift); inertia at the cut gives the
// count above. Missing eigenvalues (multiplicities) are recovered by fresh
// runs deflated against what the slice already found.
GeneralizedEigenResult lowestGeneralizedEigenvalues(const SparseMatrix& K, const SparseMatrix& M, int count,
                                                    double lowerShift, const LanczosOptions& options) {
    const int n = static_cast<int>(K.rows());
    if (count <= 0) return {};
    if (count > n) {
        throw PreconditionError("requested " + std::to_string(count) + " eigenvalues from a system of size " +
                                std::to_string(n));
    }
    if (n <= 400) return denseLowest(K, M, count);

    std::mt19937_64 rng(options.seed);
    const double ritzTol = std::min(1e-10, options.tolerance * 1e-2);
    ShiftedFactorization op(K, M);
    GeneralizedEigenResult result;

    op.factorRobust(lowerShift, std::max(std::abs(lowerShift), 1.0));
    ++result.factorizations;
    if (op.negatives() != 0) throw PreconditionError("lower shift is not below the spectrum");

    double lo = lowerShift;
    int countLo = 0;
    double density = 0.0;
    double scale = std::abs(lowerShift);
    const double normK = normOne(K), normM = normOne(M);

    auto accept = [&](std::vector<FoundPair>& found, double cut) {
        std::sort(found.begin(), found.end(),
                  [](const FoundPair& a, const FoundPair& b) { return a.lambda < b.lambda; });
        for (const auto& f : found) {
            if (f.lambda < lo || f.lambda >= cut) continue;
            if (scale == 0.0) scale = std::abs(f.lambda);
            const double res = backwardError(K, M, normK, normM, f.x, f.lambda);
            if (res > options.tolerance) {
                std::ostringstream msg;
                msg << "eigenpair " << f.lambda << " has backward error " << res;
                throw ConvergenceError(msg.str());
            }
            result.values.push_back(f.lambda);
            result.residuals.push_back(res);
        }
    };

    while (static_cast<int>(result.values.size()) < count) {
        const int remaining = count - static_cast<int>(result.values.size());
        const int target = std::min(options.sliceSize, remaining + 4);
        const bool first = density == 0.0;
        double shift = first ? lowerShift : lo + 0.5 * target / density;
        if (!first) {
            op.factorRobust(shift, std::max(scale, 1.0));
            ++result.factorizations;
            shift = op.shift();
        }
        const int belowShift = op.negatives() - countLo;
        const int needAbove = first ? target : (belowShift >= remaining ? 0 : std::max(2, target - belowShift));
        const int maxBasis = std::max(1, std::min(n - 1, 2 * target + 40));

        std::vector<FoundPair> found;
        auto harvest = [&](const LanczosRun& run, double upper) {
            for (const auto& r : run.ritz)
                if (r.converged && r.lambda >= lo && r.lambda < upper) found.push_back({r.lambda, run.vector(r)});
        };
        auto countIn = [&](const std::vector<RitzValue>& ritz, double a, double b) {
            int c = 0;
            for (const auto& r : ritz)
                if (r.converged && r.lambda >= a && r.lambda < b) ++c;
            return c;
        };
        // Length of the run of converged Ritz values starting at the shift.
        auto runAbove = [&](const std::vector<RitzValue>& ritz, double& top) {
            int c = 0;
            top = shift;
            for (const auto& r : ritz) {
                if (r.lambda < shift) continue;
                if (!r.converged) break;
                ++c;
                top = r.lambda;
            }
            return c;
        };

        MatrixXd X(n, 0), MX(n, 0);
        double top = shift;
        {
            const StopRule stop = [&](const std::vector<RitzValue>& ritz) {
                double t;
                return countIn(ritz, lo, shift) >= belowShift && runAbove(ritz, t) >= needAbove;
            };
            LanczosRun run = lanczos(op, M, X, MX, maxBasis, ritzTol, rng, stop);
            result.iterations += run.size;
            const int above = runAbove(run.ritz, top);
            harvest(run, above > 0 ? std::nextafter(top, kInf) : shift);
        }

        // Cut inside the widest relative gap among the last few values above the shift.
        std::vector<double> above;
        for (const auto& f : found)
            if (f.lambda >= shift) above.push_back(f.lambda);
        std::sort(above.begin(), above.end());
        double cut = shift;
        int countCut = op.negatives();
        if (above.size() >= 2) {
            const int p = static_cast<int>(above.size());
            int best = p - 1;
            double bestGap = -1.0;
            for (int k = std::max(1, p - 6); k < p; ++k) {
                const double gap = (above[k] - above[k - 1]) / std::max(std::abs(above[k]), scale);
                if (gap > bestGap) {
                    bestGap = gap;
                    best = k;
                }
            }
            if (bestGap > 1e-9) cut = 0.5 * (above[best - 1] + above[best]);
        }
        if (cut != shift) {
            op.factorRobust(cut, std::max(scale, 1.0));
            ++result.factorizations;
            cut = op.shift();
            countCut = op.negatives();
        }
        const int expected = countCut - countLo;

        for (int restarts = 0;; ++restarts) {
            int have = 0;
            for (const auto& f : found)
                if (f.lambda >= lo && f.lambda < cut) ++have;
            if (have == expected) break;
            if (have > expected) {
                std::ostringstream msg;
                msg << "slice [" << lo << ", " << cut << ") holds " << expected << " eigenvalues by inertia but "
                    << have << " converged";
                throw ConvergenceError(msg.str());
            }
            if (restarts >= options.maxRestarts) {
                std::ostringstream msg;
                msg << "slice [" << lo << ", " << cut << ") still misses " << expected - have << " eigenvalues after "
                    << options.maxRestarts << " restarts";
                throw ConvergenceError(msg.str());
            }
            // Deflate everything found so far and search again around the same slice.
            if (op.shift() != shift) {
                op.factorRobust(shift, std::max(scale, 1.0));
                ++result.factorizations;
            }
            X.resize(n, static_cast<Eigen::Index>(found.size()));
            for (std::size_t i = 0; i < found.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = found[i].x;
            MX = M * X;
            const int missing = expected - have;
            const StopRule stop = [&](const std::vector<RitzValue>& ritz) {
                return countIn(ritz, lo, cut) >= missing;
            };
            const int basis = std::max(1, std::min(n - 1 - static_cast<int>(X.cols()), 2 * missing + 40));
            LanczosRun run = lanczos(op, M, X, MX, basis, ritzTol, rng, stop);
            result.iterations += run.size;
            harvest(run, cut);
        }

        const std::size_t before = result.values.size();
        accept(found, cut);
        const int added = static_cast<int>(result.values.size() - before);
        if (added > 0 && cut > lo) density = added / (cut - lo);
        if (added == 0 && density == 0.0) density = 1.0 / std::max(scale, 1.0);
        lo = cut;
        countLo = countCut;
        if (op.shift() != cut) {
            op.factorRobust(cut, std::max(scale, 1.0));
            ++result.factorizations;
        }
    }
    std::vector<std::size_t> order(result.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return result.values[a] < result.values[b]; });
    GeneralizedEigenResult sorted;
    sorted.factorizations = result.factorizations;
    sorted.iterations = result.iterations;
    for (int i = 0; i < count; ++i) {
        sorted.values.push_back(result.values[order[i]]);
        sorted.residuals.push_back(result.residuals[order[i]]);
    }
    return sorted;
}

// ------------------------------------------------------------ FEM spectrum

FemSpectrum computeSpectrumLevels(const Polygon& polygon, BoundaryCondition bc, std::size_t count,
                                  double meshSize, int refineLevels, const SpectrumOptions& options) {
    if (count == 0) throw PreconditionError("eigenvalue count must be positive");
    if (count > options.maxEigenvalues) {
        throw PreconditionError("eigenvalue count " + std::to_string(count) + " exceeds cap " +
                                std::to_string(options.maxEigenvalues));
    }
    if (refineLevels < 2) throw PreconditionError("Richardson extrapolation needs at least two levels");
    if (!(meshSize > 0.0) || meshSize * options.minElementsPerEdge > polygon.shortestEdge() * (1.0 + 1e-12)) {
        throw PreconditionError("mesh size must resolve the shortest edge by at least " +
                                std::to_string(options.minElementsPerEdge) + " elements");
    }

    FemSpectrum out;
    Mesh mesh = meshPolygon(polygon, meshSize, options.maxAngleDegrees);
    for (int level = 0; level < refineLevels; ++level) {
        if (level > 0) mesh = refineUniform(mesh);
        const FemSystem sys = assembleP1(mesh, bc);
        const double lowerShift = bc == BoundaryCondition::Dirichlet ? 0.0 : -1.0;
        auto solved = lowestGeneralizedEigenvalues(sys.stiffness, sys.mass, static_cast<int>(count), lowerShift,
                                                   options.lanczos);
        RefinementLevel lv;
        lv.meshSize = mesh.size;
        lv.nodes = mesh.nodeCount();
        lv.dofs = static_cast<std::size_t>(sys.stiffness.rows());
        lv.eigenvalues = std::move(solved.values);
        out.levels.push_back(std::move(lv));
    }

    Spectrum& s = out.spectrum;
    s.boundaryCondition = bc;
    s.sourceDomain = polygon;
    s.eigenvalues.resize(count);
    s.accuracy.resize(count);
    const auto& fine = out.levels[refineLevels - 1].eigenvalues;
    const auto& mid = out.levels[refineLevels - 2].eigenvalues;
    for (std::size_t k = 0; k < count; ++k) {
        const double extrap = (4.0 * fine[k] - mid[k]) / 3.0;
        double previous = mid[k];
        if (refineLevels >= 3) {
            const auto& coarse = out.levels[refineLevels - 3].eigenvalues;
            previous = (4.0 * mid[k] - coarse[k]) / 3.0;
        }
        s.eigenvalues[k] = extrap;
        const double denom = std::max(std::abs(extrap), std::abs(fine[k]));
        s.accuracy[k] = denom > 0.0 ? std::abs(extrap - previous) / denom : std::abs(extrap - previous);
    }
    if (bc == BoundaryCondition::Neumann) {
        // The constant mode is exactly zero at every level; keep it so.
        for (std::size_t k = 0; k < count; ++k) {
            if (std::abs(s.eigenvalues[k]) < 1e-9 * std::max(1.0, s.eigenvalues.back())) s.eigenvalues[k] = 0.0;
        }
    }
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    return out;
}

Spectrum computeSpectrum(const Polygon& polygon, BoundaryCondition bc, std::size_t count, double meshSize,
                         int refineLevels, const SpectrumOptions& options) {
    return computeSpectrumLevels(polygon, bc, count, meshSize, refineLevels, options).spectrum;
}

std::vector<double> observedConvergenceOrder(const FemSpectrum& result) {
    std::vector<double> orders;
    const std::size_t L = result.levels.size();
    if (L < 3) return orders;
    const auto& l0 = result.levels[L - 3].eigenvalues;
    const auto& l1 = result.levels[L - 2].eigenvalues;
    const auto& l2 = result.levels[L - 1].eigenvalues;
    for (std::size_t k = 0; k < l2.size(); ++k) {
        const double d0 = l0[k] - l1[k], d1 = l1[k] - l2[k];
        orders.push_back(d0 * d1 > 0.0 ? std::log2(d0 / d1) : std::numeric_limits<double>::quiet_NaN());
    }
    return orders;
}

}  // namespace trapspec
