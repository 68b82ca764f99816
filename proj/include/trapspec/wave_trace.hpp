#pragma once

#include "trapspec/billiards.hpp"
#include "trapspec/spectrum.hpp"

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trapspec {

struct ProbeSample {
    double k = 0.0;
    std::complex<double> value;
};

struct SingularityProbe {
    double t0 = 0.0;
    double sigma = 0.0;
    std::vector<ProbeSample> kSamples;
    bool windowOverlap = false;  // another known length within 3 sigma of t0
    std::vector<double> overlapping;
};

/// I(k) = sigma sqrt(2 pi) sum_j exp(i (sqrt(l_j) - k) t0) exp(-sigma^2 (sqrt(l_j) - k)^2 / 2),
/// the wave trace paired with a Gaussian window of width sigma centred at t0.
/// Negative eigenvalues are rejected; zero modes contribute at sqrt(l) = 0.
/// `knownLengths` only feeds the overlap flag.
SingularityProbe probe(const Spectrum& s, double t0, double sigma, const std::vector<double>& kList,
                       const std::vector<double>& knownLengths = {}, int workers = 1);

/// Single value of I(k) for a fixed t0.
std::complex<double> probeValue(const Spectrum& s, double t0, double sigma, double k);

/// |I(kRef)| over a t grid, as exported by the wavetrace command.
struct ProbeScan {
    double kRef = 0.0;
    double sigma = 0.0;
    std::vector<double> t;
    std::vector<std::complex<double>> value;
};
ProbeScan scanProbe(const Spectrum& s, std::pair<double, double> tRange, double sigma, double kRef, double step = 0.0,
                    int workers = 1);

struct OrderEstimate {
    double order = 0.0;
    double standardError = 0.0;
    double ciLow = 0.0;   // 95% interval on the slope
    double ciHigh = 0.0;
    bool clamped = false;  // slope outside [-3, 1.5] and clamped to it
    std::pair<double, double> kWindow{0.0, 0.0};
    double peakToFloor = 0.0;  // median over k of |I(k, t0)| / off-peak median
    bool aboveNoiseFloor = true;
};

struct SingularityCandidate {
    double t0 = 0.0;
    double amplitude = 0.0;        // |I(kRef)| at the refined peak
    double kRef = 0.0;
    double relativeHeight = 0.0;   // amplitude / median over the scan
    std::optional<OrderEstimate> order;
    std::optional<std::string> matchedOrbit;  // catalog label or orbit kind
    std::optional<double> matchedLength;
    bool unmatched = false;        // no length within tolerance: investigate
};

struct ScanOptions {
    double threshold = 5.0;  // peaks must exceed threshold * median |I(kRef)|
    double step = 0.0;       // default sigma / 4
    int workers = 1;
};

/// Refined local maxima of t -> |I(kRef)| over tRange that exceed threshold
/// times the off-peak median, taken over tRange widened by 10 sigma on each
/// side. Requires a positive range and step <= sigma / 4.
std::vector<SingularityCandidate> scanPeaks(const Spectrum& s, std::pair<double, double> tRange, double sigma,
                                            double kRef, const ScanOptions& options = {});

/// Default order-estimation band: [0.1, 0.8] sqrt(l_N), pulled in by 2.5/sigma
/// at both ends so the Gaussian stays inside the computed spectrum.
std::pair<double, double> defaultOrderWindow(const Spectrum& s, double sigma);

/// Default reference wavenumber: the centre of the default order window.
double defaultKRef(const Spectrum& s, double sigma);

/// Least-squares slope of log |I(k)| against log k near t0. For each k the
/// amplitude is the maximum of |I(k, t)| over |t - t0| <= ridgeHalfWidth *
/// sigma, which follows a peak that drifts with k when the eigenvalues carry
/// a k-dependent discretization error; 0 evaluates at t0 exactly. Throws
/// PreconditionError when kWindow leaves [0.1, 0.8] sqrt(l_N), NoiseFloor when
/// |I| stays below 10x the off-peak median throughout.
OrderEstimate estimateOrder(const Spectrum& s, double t0, double sigma, std::pair<double, double> kWindow,
                            int samples = 32, double ridgeHalfWidth = 0.5);

/// The same fit without the noise-floor check (aboveNoiseFloor reports it).
/// The off-peak reference is the median of |I(k)| at t0 +- 4..12 sigma.
OrderEstimate orderSlope(const Spectrum& s, double t0, double sigma, std::pair<double, double> kWindow,
                         int samples = 32, double ridgeHalfWidth = 0.5);

/// Matches candidates to the nearest length within `tolerance`; labels come
/// from `labelOf` when given, else from the orbit kinds at that length.
void matchCandidates(std::vector<SingularityCandidate>& candidates, const LengthSpectrum& lengths, double tolerance,
                     const OrbitCatalog* catalog = nullptr);

/// sigma = min(0.15, gap / 4), gap being the smallest spacing between
/// distinct lengths that touch tRange (tRange widened by 0.15 on each side).
double defaultSigma(const LengthSpectrum& lengths, std::pair<double, double> tRange);

enum class OrderClass { Band, Isolated, Diffractive, Ambiguous };
std::string toString(OrderClass c);

struct OrderTableEntry {
    std::string orbit;      // catalog label
    std::string condition;
    double order = 0.0;
    bool upperBound = false;  // order is "at most" this value
};

struct OrderTable {
    std::vector<OrderTableEntry> entries;
    double bandThreshold = 0.25;         // a > this: band
    double diffractiveThreshold = -0.25; // a < this: diffractive

    static const OrderTable& standard();
    /// Expected order of the 2mb singularity (an upper bound).
    static double twoMBOrder(int m) { return -0.5 * m; }
};

/// Class of an order estimate. The point estimate decides, unless its 95%
/// interval reaches across a threshold, in which case the answer is Ambiguous.
OrderClass classifyCandidate(const SingularityCandidate& c, const OrderTable& table = OrderTable::standard());
OrderClass classifyOrder(const OrderEstimate& e, const OrderTable& table = OrderTable::standard());

}  // namespace trapspec
