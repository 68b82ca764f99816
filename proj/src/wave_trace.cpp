#include "trapspec/wave_trace.hpp"

#include "trapspec/errors.hpp"
#include "trapspec/geometry.hpp"
#include "trapspec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trapspec {

namespace {

// exp(-x^2/2) below 1e-31 for |x| > 12.
constexpr double kGaussCut = 12.0;

std::vector<double> sqrtSpectrum(const Spectrum& s) {
    std::vector<double> r;
    r.reserve(s.count());
    for (double l : s.eigenvalues) {
        if (l < 0.0) {
            if (l > -1e-9 * std::max(1.0, s.largest())) {
                r.push_back(0.0);
                continue;
            }
            throw PreconditionError("wave trace needs non-negative eigenvalues");
        }
        r.push_back(std::sqrt(l));
    }
    return r;
}

std::complex<double> pairing(const std::vector<double>& roots, double t0, double sigma, double k) {
    const auto lo = std::lower_bound(roots.begin(), roots.end(), k - kGaussCut / sigma);
    const auto hi = std::upper_bound(lo, roots.end(), k + kGaussCut / sigma);
    std::complex<double> sum = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const double d = *it - k;
        sum += std::polar(std::exp(-0.5 * sigma * sigma * d * d), d * t0);
    }
    return sigma * std::sqrt(2.0 * kPi) * sum;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

// Median of |I| away from the peaks. Maxima are peeled highest first: one
// whose +-radius neighbourhood, once masked, leaves a median it beats by the
// threshold stays masked. Peeling stops at the first maximum that fails or
// when fewer than a fifth of the grid would remain.
double offPeakMedian(const std::vector<double>& t, const std::vector<double>& mag, std::vector<std::size_t> maxima,
                     double threshold, double radius) {
    std::vector<char> masked(mag.size(), 0);
    std::sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
    double med = median(mag);
    for (std::size_t m : maxima) {
        if (masked[m]) continue;
        auto trial = masked;
        for (std::size_t i = 0; i < mag.size(); ++i)
            if (std::abs(t[i] - t[m]) <= radius) trial[i] = 1;
        std::vector<double> rest;
        for (std::size_t i = 0; i < mag.size(); ++i)
            if (!trial[i]) rest.push_back(mag[i]);
        if (5 * rest.size() < mag.size()) break;
        const double trialMed = median(rest);
        if (!(mag[m] > threshold * trialMed)) break;
        masked.swap(trial);
        med = trialMed;
    }
    return med;
}

// Maximum of a unimodal f on [a, b] by golden-section search.
template <class F>
double goldenMax(F f, double a, double b, double& fmax) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-10 * std::max(1.0, b)) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    fmax = f(x);
    return x;
}

// max |I(k, t)| for |t - t0| <= half: coarse grid, then golden section
// around the best grid point.
double ridgeMax(const std::vector<double>& roots, double t0, double sigma, double k, double half) {
    constexpr int n = 8;
    auto f = [&](double t) { return std::abs(pairing(roots, t, sigma, k)); };
    int best = 0;
    double fbest = -1.0;
    for (int i = 0; i <= n; ++i) {
        const double v = f(t0 - half + 2.0 * half * i / n);
        if (v > fbest) {
            fbest = v;
            best = i;
        }
    }
    const double step = 2.0 * half / n;
    const double lo = t0 - half + step * std::max(best - 1, 0), hi = t0 - half + step * std::min(best + 1, n);
    double fm = 0.0;
    goldenMax(f, lo, hi, fm);
    return std::max(fm, fbest);
}

void requireSigma(double sigma) {
    if (!(sigma > 0.0)) throw PreconditionError("sigma must be positive");
}

}  // namespace

std::complex<double> probeValue(const Spectrum& s, double t0, double sigma, double k) {
    requireSigma(sigma);
    return pairing(sqrtSpectrum(s), t0, sigma, k);
}

SingularityProbe probe(const Spectrum& s, double t0, double sigma, const std::vector<double>& kList,
                       const std::vector<double>& knownLengths, int workers) {
    requireSigma(sigma);
    if (!(t0 > 0.0)) throw PreconditionError("t0 must be positive");
    const auto roots = sqrtSpectrum(s);
    SingularityProbe p;
    p.t0 = t0;
    p.sigma = sigma;
    p.kSamples.resize(kList.size());
    parallelFor(kList.size(), workers, [&](std::size_t i) { p.kSamples[i] = {kList[i], pairing(roots, t0, sigma, kList[i])}; });
    for (double l : knownLengths) {
        if (std::abs(l - t0) > 1e-9 * t0 && std::abs(l - t0) < 3.0 * sigma) {
            p.windowOverlap = true;
            p.overlapping.push_back(l);
        }
    }
    return p;
}

ProbeScan scanProbe(const Spectrum& s, std::pair<double, double> tRange, double sigma, double kRef, double step,
                    int workers) {
    requireSigma(sigma);
    if (!(tRange.first > 0.0 && tRange.second > tRange.first)) throw PreconditionError("tRange must be positive and increasing");
    if (step <= 0.0) step = sigma / 4.0;
    const auto roots = sqrtSpectrum(s);
    ProbeScan out;
    out.kRef = kRef;
    out.sigma = sigma;
    const auto n = static_cast<std::size_t>(std::floor((tRange.second - tRange.first) / step + 1e-9)) + 1;
    out.t.resize(n);
    out.value.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.t[i] = tRange.first + static_cast<double>(i) * step;
    parallelFor(n, workers, [&](std::size_t i) { out.value[i] = pairing(roots, out.t[i], sigma, kRef); });
    return out;
}

std::vector<SingularityCandidate> scanPeaks(const Spectrum& s, std::pair<double, double> tRange, double sigma,
                                            double kRef, const ScanOptions& options) {
    requireSigma(sigma);
    const double step = options.step > 0.0 ? options.step : sigma / 4.0;
    if (step > sigma / 4.0 * (1.0 + 1e-12)) throw PreconditionError("scan step must not exceed sigma / 4");
    if (!(tRange.first > 0.0 && tRange.second > tRange.first)) throw PreconditionError("tRange must be positive and increasing");
    if (s.empty()) return {};

    // Off-peak median over tRange widened by 10 sigma on each side.
    const std::pair<double, double> wide{std::max(step, tRange.first - 10.0 * sigma), tRange.second + 10.0 * sigma};
    const auto scan = scanProbe(s, wide, sigma, kRef, step, options.workers);
    const auto roots = sqrtSpectrum(s);
    std::vector<double> mag(scan.value.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(scan.value[i]);
    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < mag.size(); ++i)
        if (mag[i] >= mag[i - 1] && mag[i] > mag[i + 1]) maxima.push_back(i);
    const double med = offPeakMedian(scan.t, mag, maxima, options.threshold, 3.0 * sigma);

    std::vector<SingularityCandidate> out;
    for (std::size_t i : maxima) {
        if (scan.t[i] < tRange.first - step || scan.t[i] > tRange.second + step) continue;
        if (!(mag[i] > options.threshold * med)) continue;
        auto f = [&](double t) { return std::abs(pairing(roots, t, sigma, kRef)); };
        double amp = 0.0;
        const double t0 = goldenMax(f, scan.t[i - 1], scan.t[i + 1], amp);
        SingularityCandidate cand;
        cand.t0 = t0;
        cand.amplitude = amp;
        cand.kRef = kRef;
        cand.relativeHeight = med > 0.0 ? cand.amplitude / med : std::numeric_limits<double>::infinity();
        out.push_back(cand);
    }
    return out;
}

std::pair<double, double> defaultOrderWindow(const Spectrum& s, double sigma) {
    requireSigma(sigma);
    if (s.empty()) throw PreconditionError("spectrum is empty");
    const double kN = std::sqrt(std::max(s.largest(), 0.0));
    const double lo = std::max(0.1 * kN, 2.5 / sigma);
    const double hi = std::min(0.8 * kN, kN - 2.5 / sigma);
    if (!(hi > 1.5 * lo)) {
        std::ostringstream msg;
        msg << "spectrum up to k = " << kN << " is too short for sigma = " << sigma;
        throw PreconditionError(msg.str());
    }
    return {lo, hi};
}

double defaultKRef(const Spectrum& s, double sigma) {
    const auto w = defaultOrderWindow(s, sigma);
    return 0.5 * (w.first + w.second);
}

OrderEstimate orderSlope(const Spectrum& s, double t0, double sigma, std::pair<double, double> kWindow, int samples,
                         double ridgeHalfWidth) {
    requireSigma(sigma);
    if (!(t0 > 0.0)) throw PreconditionError("t0 must be positive");
    if (s.empty()) throw PreconditionError("spectrum is empty");
    if (samples < 8) throw PreconditionError("order estimate needs at least 8 samples");
    const double kN = std::sqrt(std::max(s.largest(), 0.0));
    const double slack = 1e-9 * kN;
    if (!(kWindow.first >= 0.1 * kN - slack && kWindow.second <= 0.8 * kN + slack && kWindow.second > kWindow.first)) {
        std::ostringstream msg;
        msg << "kWindow [" << kWindow.first << ", " << kWindow.second << "] must lie in [0.1, 0.8] sqrt(lambda_N) = ["
            << 0.1 * kN << ", " << 0.8 * kN << "]";
        throw PreconditionError(msg.str());
    }
    const auto roots = sqrtSpectrum(s);

    std::vector<double> offsets;
    for (double m = 4.0; m <= 12.0; m += 1.0)
        for (double sign : {-1.0, 1.0})
            if (t0 + sign * m * sigma > 3.0 * sigma) offsets.push_back(t0 + sign * m * sigma);

    std::vector<double> x(static_cast<std::size_t>(samples)), y(x.size()), ratio;
    bool aboveFloor = false;
    for (int i = 0; i < samples; ++i) {
        const double k = kWindow.first * std::pow(kWindow.second / kWindow.first, static_cast<double>(i) / (samples - 1));
        const double amp = ridgeHalfWidth > 0.0 ? ridgeMax(roots, t0, sigma, k, ridgeHalfWidth * sigma)
                                                : std::abs(pairing(roots, t0, sigma, k));
        std::vector<double> off;
        for (double t : offsets) off.push_back(std::abs(pairing(roots, t, sigma, k)));
        const double floor = median(off);
        if (amp >= 10.0 * floor) aboveFloor = true;
        if (floor > 0.0) ratio.push_back(amp / floor);
        x[static_cast<std::size_t>(i)] = std::log(k);
        y[static_cast<std::size_t>(i)] = std::log(std::max(amp, std::numeric_limits<double>::min()));
    }

    const double n = samples;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < samples; ++i) {
        mx += x[static_cast<std::size_t>(i)] / n;
        my += y[static_cast<std::size_t>(i)] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < samples; ++i) {
        sxx += (x[static_cast<std::size_t>(i)] - mx) * (x[static_cast<std::size_t>(i)] - mx);
        sxy += (x[static_cast<std::size_t>(i)] - mx) * (y[static_cast<std::size_t>(i)] - my);
    }
    const double slope = sxy / sxx;
    double ssr = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = y[static_cast<std::size_t>(i)] - my - slope * (x[static_cast<std::size_t>(i)] - mx);
        ssr += r * r;
    }
    OrderEstimate e;
    e.standardError = std::sqrt(ssr / (n - 2.0) / sxx);
    e.order = std::clamp(slope, -3.0, 1.5);
    e.clamped = e.order != slope;
    e.ciLow = slope - 2.0 * e.standardError;
    e.ciHigh = slope + 2.0 * e.standardError;
    e.kWindow = kWindow;
    e.peakToFloor = ratio.empty() ? std::numeric_limits<double>::infinity() : median(ratio);
    e.aboveNoiseFloor = aboveFloor;
    return e;
}

OrderEstimate estimateOrder(const Spectrum& s, double t0, double sigma, std::pair<double, double> kWindow, int samples,
                            double ridgeHalfWidth) {
    OrderEstimate e = orderSlope(s, t0, sigma, kWindow, samples, ridgeHalfWidth);
    if (!e.aboveNoiseFloor) {
        std::ostringstream msg;
        msg << "|I| at t0 = " << t0 << " stays below 10x the off-peak median over k in [" << kWindow.first << ", "
            << kWindow.second << "]";
        throw NoiseFloor(msg.str());
    }
    return e;
}

void matchCandidates(std::vector<SingularityCandidate>& candidates, const LengthSpectrum& lengths, double tolerance,
                     const OrbitCatalog* catalog) {
    for (auto& c : candidates) {
        const LengthSpectrumEntry* best = nullptr;
        for (const auto& e : lengths.entries)
            if (std::abs(e.length - c.t0) <= tolerance && (!best || std::abs(e.length - c.t0) < std::abs(best->length - c.t0)))
                best = &e;
        c.unmatched = best == nullptr;
        c.matchedOrbit.reset();
        c.matchedLength.reset();
        if (!best) continue;
        c.matchedLength = best->length;
        if (catalog) {
            const auto labels = catalogLabels(*catalog, best->length);
            if (!labels.empty()) {
                c.matchedOrbit = labels.front();
                continue;
            }
        }
        // Strongest kind present at that length.
        std::string label = "conical";
        for (std::size_t k : best->orbits) {
            const auto& g = lengths.orbits[k];
            if (g.kind == OrbitKind::Band) label = "band";
            else if (g.kind == OrbitKind::Isolated && label != "band") label = "isolated";
        }
        c.matchedOrbit = label;
    }
}

double defaultSigma(const LengthSpectrum& lengths, std::pair<double, double> tRange) {
    const double margin = 0.15;
    std::vector<double> inside;
    for (const auto& e : lengths.entries)
        if (e.length >= tRange.first - margin && e.length <= tRange.second + margin) inside.push_back(e.length);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < inside.size(); ++i) gap = std::min(gap, inside[i] - inside[i - 1]);
    return std::min(0.15, gap / 4.0);
}

std::string toString(OrderClass c) {
    switch (c) {
        case OrderClass::Band: return "band";
        case OrderClass::Isolated: return "isolated";
        case OrderClass::Diffractive: return "diffractive";
        case OrderClass::Ambiguous: return "ambiguous";
    }
    return "?";
}

const OrderTable& OrderTable::standard() {
    static const OrderTable table{{
        {"2h", "band", 0.5, false},
        {"Cmn", "C_{1,1} band", 0.5, false},
        {"2b", "m = 1", -0.5, true},
        {"2mb", "m >= 2", -1.0, true},
        {"lF", "isolated, odd period", 0.0, false},
        {"2hAlpha", "diffractive alpha", -0.5, false},
        {"2hAlpha", "alpha = pi/2", 0.0, false},
        {"2hAlpha", "isosceles, band member", 0.5, false},
    }};
    return table;
}

namespace {

OrderClass pointClass(double a, const OrderTable& t) {
    if (a > t.bandThreshold) return OrderClass::Band;
    if (a < t.diffractiveThreshold) return OrderClass::Diffractive;
    return OrderClass::Isolated;
}

}  // namespace

OrderClass classifyOrder(const OrderEstimate& e, const OrderTable& table) {
    const OrderClass c = pointClass(e.order, table);
    if (pointClass(e.ciLow, table) != c || pointClass(e.ciHigh, table) != c) return OrderClass::Ambiguous;
    return c;
}

OrderClass classifyCandidate(const SingularityCandidate& c, const OrderTable& table) {
    if (!c.order) throw PreconditionError("candidate has no order estimate");
    return classifyOrder(*c.order, table);
}

}  // namespace trapspec
