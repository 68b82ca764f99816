#include "trapspec/billiards.hpp"

#include "trapspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace trapspec {

namespace {

constexpr double kSlopeCap = 1e3;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double pointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

bool segmentsCross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return d1 * d2 <= 0.0 && d3 * d4 <= 0.0;
}

double segmentDistance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    if (segmentsCross(a, b, c, d)) return 0.0;
    return std::min({pointSegmentDistance(a, c, d), pointSegmentDistance(b, c, d), pointSegmentDistance(c, a, b),
                     pointSegmentDistance(d, a, b)});
}

// Convex region of lines y = m x + c, stored as a polygon in the (m, c) plane.
using LineRegion = std::vector<Vec2>;

// Keeps the part where a m + b c + d >= 0.
LineRegion clip(const LineRegion& poly, double a, double b, double d) {
    LineRegion out;
    const std::size_t n = poly.size();
    out.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& P = poly[i];
        const Vec2& Q = poly[(i + 1) % n];
        const double fp = a * P.x() + b * P.y() + d;
        const double fq = a * Q.x() + b * Q.y() + d;
        if (fp >= 0.0) out.push_back(P);
        if ((fp >= 0.0) != (fq >= 0.0)) out.push_back(P + fp / (fp - fq) * (Q - P));
    }
    return out;
}

double regionArea(const LineRegion& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) s += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * std::abs(s);
}

// Intercepts of the lines in the region with the given slope.
bool interceptRange(const LineRegion& poly, double m, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& P = poly[i];
        const Vec2& Q = poly[(i + 1) % poly.size()];
        if ((P.x() - m) * (Q.x() - m) > 0.0) continue;
        if (P.x() == Q.x()) {
            lo = std::min({lo, P.y(), Q.y()});
            hi = std::max({hi, P.y(), Q.y()});
        } else {
            const double c = P.y() + (m - P.x()) / (Q.x() - P.x()) * (Q.y() - P.y());
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    return lo <= hi;
}

std::size_t primitivePeriod(const std::vector<int>& w) {
    const std::size_t k = w.size();
    for (std::size_t p = 1; p <= k; ++p) {
        if (k % p) continue;
        bool ok = true;
        for (std::size_t i = p; i < k && ok; ++i) ok = w[i] == w[i - p];
        if (ok) return p;
    }
    return k;
}

// Lexicographically least rotation of the word or of its reversal.
std::vector<int> canonicalCycle(const std::vector<int>& w) {
    std::vector<int> best = w;
    auto consider = [&](const std::vector<int>& v) {
        for (std::size_t r = 0; r < v.size(); ++r) {
            std::vector<int> rot(v.begin() + static_cast<long>(r), v.end());
            rot.insert(rot.end(), v.begin(), v.begin() + static_cast<long>(r));
            if (rot < best) best = rot;
        }
    };
    consider(w);
    consider(std::vector<int>(w.rbegin(), w.rend()));
    return best;
}

// Keeps one orbit per (cyclic word class, length bucket).
class Deduplicator {
public:
    explicit Deduplicator(double relTol) : tol_(relTol) {}
    bool insert(const std::vector<int>& key, double length) {
        auto& lengths = seen_[key];
        for (double l : lengths)
            if (std::abs(l - length) <= tol_ * std::max(l, length)) return false;
        lengths.push_back(length);
        return true;
    }

private:
    double tol_;
    std::map<std::vector<int>, std::vector<double>> seen_;
};

void sortOrbits(std::vector<ClosedGeodesic>& orbits) {
    std::stable_sort(orbits.begin(), orbits.end(), [](const ClosedGeodesic& a, const ClosedGeodesic& b) {
        if (a.length != b.length) return a.length < b.length;
        if (a.word != b.word) return a.word < b.word;
        return a.vertices < b.vertices;
    });
}

// Folded polyline of a diagonal: reflect off the listed edges in turn, then
// run straight to the target vertex.
std::vector<Vec2> traceDiagonal(const Polygon& P, const GeneralizedDiagonal& dg) {
    std::vector<Vec2> pts{P.vertex(static_cast<std::size_t>(dg.from))};
    Vec2 d = dg.departure;
    for (int e : dg.reflections) {
        const auto [a, b] = P.edge(static_cast<std::size_t>(e));
        const Vec2 f = b - a;
        const double den = cross(d, f);
        const Vec2 x = pts.back();
        const double lambda = std::abs(den) < 1e-300 ? 0.0 : cross(a - x, f) / den;
        pts.push_back(x + lambda * d);
        const Vec2 t = f.normalized();
        const Vec2 nrm(-t.y(), t.x());
        d = d - 2.0 * d.dot(nrm) * nrm;
    }
    pts.push_back(P.vertex(static_cast<std::size_t>(dg.to)));
    return pts;
}

}  // namespace

// ------------------------------------------------------------ isometries

UnfoldingIsometry UnfoldingIsometry::reflection(const Vec2& a, const Vec2& b) {
    const Vec2 u = (b - a).normalized();
    UnfoldingIsometry r;
    r.linear << 2 * u.x() * u.x() - 1, 2 * u.x() * u.y(), 2 * u.x() * u.y(), 2 * u.y() * u.y() - 1;
    r.translation = a - r.linear * a;
    r.parity = -1;
    return r;
}

UnfoldingIsometry UnfoldingIsometry::after(const UnfoldingIsometry& rhs) const {
    UnfoldingIsometry out;
    out.linear = linear * rhs.linear;
    out.translation = linear * rhs.translation + translation;
    out.parity = parity * rhs.parity;
    return out;
}

UnfoldingIsometry UnfoldingIsometry::inverse() const {
    UnfoldingIsometry out;
    out.linear = linear.transpose();
    out.translation = -(out.linear * translation);
    out.parity = parity;
    return out;
}

UnfoldingIsometry composeWord(const Polygon& polygon, const std::vector<int>& word) {
    if (word.empty()) throw PreconditionError("reflection word is empty");
    const int n = static_cast<int>(polygon.size());
    UnfoldingIsometry s;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (word[i] < 0 || word[i] >= n) throw PreconditionError("edge index out of range in reflection word");
        if (i > 0 && word[i] == word[i - 1]) throw PreconditionError("reflection word repeats an edge consecutively");
        const auto [a, b] = polygon.edge(static_cast<std::size_t>(word[i]));
        s = UnfoldingIsometry::reflection(a, b).after(s);
    }
    return s;
}

std::string toString(OrbitKind k) {
    switch (k) {
        case OrbitKind::Band: return "band";
        case OrbitKind::Isolated: return "isolated";
        case OrbitKind::Conical: return "conical";
    }
    return "unknown";
}

bool isDiffractiveAngle(double angle, double tol) { return !piOverN(angle, tol).has_value(); }

// ------------------------------------------------------------ periodic orbits

OrbitEnumeration enumerateOrbits(const Polygon& polygon, double lmax, int periodMax, const EnumerationOptions& options) {
    if (!(lmax > 0.0)) throw PreconditionError("lmax must be positive");
    if (periodMax < 2 || periodMax > options.periodCap) {
        throw PreconditionError("periodMax must lie in [2, " + std::to_string(options.periodCap) + "]");
    }
    const int n = static_cast<int>(polygon.size());
    const double diam = polygon.diameter();
    const double tolWidth = options.vertexTolerance * diam;
    const double areaTol = 1e-22 * diam;

    OrbitEnumeration out;
    Deduplicator dedupe(1e-9);

    for (int e0 = 0; e0 < n; ++e0) {
        // Frame with the start edge on x = 0 and the polygon in x > 0.
        const auto [a0, b0] = polygon.edge(static_cast<std::size_t>(e0));
        const Vec2 d = (b0 - a0).normalized();
        const Vec2 inward(-d.y(), d.x());
        Eigen::Matrix2d R;
        R << inward.x(), inward.y(), -inward.y(), inward.x();
        std::vector<Vec2> fv(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) fv[static_cast<std::size_t>(i)] = R * (polygon.vertex(static_cast<std::size_t>(i)) - a0);
        std::vector<UnfoldingIsometry> mirror(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            mirror[static_cast<std::size_t>(i)] =
                UnfoldingIsometry::reflection(fv[static_cast<std::size_t>(i)], fv[static_cast<std::size_t>((i + 1) % n)]);
        const Vec2 s0a = fv[static_cast<std::size_t>(e0)], s0b = fv[static_cast<std::size_t>((e0 + 1) % n)];
        const double yLo = std::min(s0a.y(), s0b.y()), yHi = std::max(s0a.y(), s0b.y());
        auto toWorldPoint = [&](const Vec2& p) -> Vec2 { return R.transpose() * p + a0; };
        auto toWorldDir = [&](const Vec2& v) -> Vec2 { return R.transpose() * v; };

        std::vector<int> word;  // reflections after leaving e0
        std::function<void(const UnfoldingIsometry&, const LineRegion&, int)> dfs;

        auto closeWord = [&](const UnfoldingIsometry& S, const LineRegion& region) {
            std::vector<int> bounce{e0};
            bounce.insert(bounce.end(), word.begin(), word.end() - 1);
            const std::size_t k = bounce.size();
            const std::size_t p = primitivePeriod(bounce);
            const std::size_t r = k / p;
            ClosedGeodesic g;
            g.word = bounce;
            g.startEdge = e0;
            if (S.parity > 0) {
                if ((S.linear - Eigen::Matrix2d::Identity()).norm() > 1e-9) return;
                const Vec2 tau = S.translation;
                if (!(tau.x() > 0.0)) return;
                const double m = tau.y() / tau.x();
                if (std::abs(m) >= kSlopeCap) return;
                double lo, hi;
                if (!interceptRange(region, m, lo, hi)) return;
                const double width = (hi - lo) / std::sqrt(1.0 + m * m);
                if (!(width > tolWidth)) return;
                g.kind = OrbitKind::Band;
                g.length = tau.norm();
                if (g.length > lmax) return;
                g.translation = toWorldDir(tau);
                g.corridorWidth = width;
                g.sweptArea = width * g.length;
                g.basepoint = toWorldPoint(Vec2(0.0, 0.5 * (lo + hi)));
                g.direction = toWorldDir(tau.normalized());
                g.multiplicity = static_cast<int>(p % 2 == 0 ? r : r / 2);
            } else {
                // Glide reflection: the invariant axis is the orbit.
                const double phi = 0.5 * std::atan2(S.linear(1, 0), S.linear(0, 0));
                Vec2 u(std::cos(phi), std::sin(phi));
                if (u.x() < 0.0) u = -u;
                if (!(u.x() > 0.0)) return;
                const Vec2 t = S.translation;
                const double glide = u.dot(t);
                if (!(glide > tolWidth)) return;
                const Vec2 p0 = 0.5 * (t - glide * u);
                const double m = u.y() / u.x();
                if (std::abs(m) >= kSlopeCap) return;
                const double c = p0.y() - m * p0.x();
                double lo, hi;
                if (!interceptRange(region, m, lo, hi)) return;
                const double margin = std::min(c - lo, hi - c) / std::sqrt(1.0 + m * m);
                if (!(margin > tolWidth)) return;
                g.kind = OrbitKind::Isolated;
                g.length = glide;
                if (g.length > lmax) return;
                g.axisPoint = toWorldPoint(Vec2(0.0, c));
                g.axisDirection = toWorldDir(u);
                g.basepoint = g.axisPoint;
                g.direction = g.axisDirection;
                g.multiplicity = static_cast<int>(r);
            }
            g.primitiveLength = g.length / g.multiplicity;
            if (!dedupe.insert(canonicalCycle(g.word), g.length)) return;
            out.orbits.push_back(std::move(g));
        };

        dfs = [&](const UnfoldingIsometry& S, const LineRegion& region, int entered) {
            for (int e = e0; e < n; ++e) {
                if (e == entered) continue;
                if (++out.nodes > options.nodeBudget) {
                    out.complete = false;
                    return;
                }
                Vec2 p = S.apply(fv[static_cast<std::size_t>(e)]);
                Vec2 q = S.apply(fv[static_cast<std::size_t>((e + 1) % n)]);
                if (S.parity < 0) std::swap(p, q);
                if (segmentDistance(s0a, s0b, p, q) > lmax) continue;
                // p below the line, q above it.
                LineRegion next = clip(region, p.x(), 1.0, -p.y());
                if (next.size() < 3) continue;
                next = clip(next, -q.x(), -1.0, q.y());
                if (next.size() < 3 || regionArea(next) <= areaTol) continue;
                const UnfoldingIsometry S2 = S.after(mirror[static_cast<std::size_t>(e)]);
                word.push_back(e);
                if (e == e0) closeWord(S2, next);
                if (static_cast<int>(word.size()) < periodMax) dfs(S2, next, e);
                word.pop_back();
                if (!out.complete) return;
            }
        };

        const LineRegion start{Vec2(-kSlopeCap, yLo), Vec2(kSlopeCap, yLo), Vec2(kSlopeCap, yHi), Vec2(-kSlopeCap, yHi)};
        dfs(UnfoldingIsometry{}, start, e0);
        if (!out.complete) break;
    }
    sortOrbits(out.orbits);
    return out;
}

// ------------------------------------------------------------ conical orbits

DiagonalSearch findGeneralizedDiagonals(const Polygon& polygon, double lmax, const DiagonalOptions& options) {
    if (!(lmax > 0.0)) throw PreconditionError("lmax must be positive");
    const int n = static_cast<int>(polygon.size());
    const double diam = polygon.diameter();
    const double tolDist = options.vertexTolerance * diam;
    const auto angles = polygon.interiorAngles();
    std::vector<char> diffractive(static_cast<std::size_t>(n)), rightAngle(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto N = piOverN(angles[static_cast<std::size_t>(i)]);
        diffractive[static_cast<std::size_t>(i)] = !N.has_value();
        rightAngle[static_cast<std::size_t>(i)] = N.has_value() && *N == 2;
    }
    std::vector<UnfoldingIsometry> mirror(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = polygon.edge(static_cast<std::size_t>(i));
        mirror[static_cast<std::size_t>(i)] = UnfoldingIsometry::reflection(a, b);
    }

    DiagonalSearch out;
    std::int64_t nodes = 0;

    for (int i = 0; i < n; ++i) {
        const Vec2 v = polygon.vertex(static_cast<std::size_t>(i));
        const int next = (i + 1) % n, prev = (i + n - 1) % n;
        const Vec2 t1 = (polygon.vertex(static_cast<std::size_t>(next)) - v).normalized();
        const Vec2 t2 = (polygon.vertex(static_cast<std::size_t>(prev)) - v).normalized();
        const Vec2 bis = (t1 + t2).normalized();
        auto angleOf = [&](const Vec2& w) { return std::atan2(cross(bis, w - v), bis.dot(w - v)); };

        for (int j : {next, prev}) {
            GeneralizedDiagonal g;
            g.from = i;
            g.to = j;
            g.length = polygon.edgeLength(static_cast<std::size_t>(j == next ? i : prev));
            g.departure = j == next ? t1 : t2;
            g.arrival = g.departure;
            g.onBoundary = true;
            if (g.length <= lmax) out.diagonals.push_back(g);
        }

        std::vector<int> reflections;
        std::vector<std::pair<Vec2, Vec2>> crossed;  // unfolded images of the reflecting edges
        // The ray v -> w must cross every reflecting edge, in order, before w.
        auto reachable = [&](const Vec2& w) {
            const Vec2 d = w - v;
            double prevS = 0.0;
            for (const auto& [a, b] : crossed) {
                const Vec2 ab = b - a;
                const double den = cross(d, ab);
                if (std::abs(den) < 1e-300) return false;
                const double s = cross(a - v, ab) / den;
                const double u = cross(a - v, d) / den;
                const double slack = tolDist / ab.norm();
                if (u < -slack || u > 1.0 + slack) return false;
                if (s <= prevS || s >= 1.0) return false;
                prevS = s;
            }
            return true;
        };
        std::function<void(const UnfoldingIsometry&, int, double, double)> walk;
        walk = [&](const UnfoldingIsometry& S, int entry, double lo, double hi) {
            if (++nodes > options.nodeBudget) {
                out.complete = false;
                return;
            }
            auto excluded = [&](int j) {
                if (entry < 0) return j == i || j == next || j == prev;
                return j == entry || j == (entry + 1) % n;
            };
            for (int j = 0; j < n; ++j) {
                if (excluded(j)) continue;
                const Vec2 w = S.apply(polygon.vertex(static_cast<std::size_t>(j)));
                const double dist = (w - v).norm();
                if (dist > lmax || dist <= tolDist) continue;
                const double phi = angleOf(w);
                const double tolPhi = tolDist / dist;
                if (phi <= lo + tolPhi || phi >= hi - tolPhi) continue;
                if (!reachable(w)) continue;
                GeneralizedDiagonal g;
                g.from = i;
                g.to = j;
                g.length = dist;
                g.departure = (w - v) / dist;
                g.arrival = S.linear.transpose() * g.departure;
                g.reflections = reflections;
                out.diagonals.push_back(std::move(g));
            }
            for (int e = 0; e < n; ++e) {
                if (entry < 0 ? (e == i || e == prev) : e == entry) continue;
                const Vec2 A = S.apply(polygon.vertex(static_cast<std::size_t>(e)));
                const Vec2 B = S.apply(polygon.vertex(static_cast<std::size_t>((e + 1) % n)));
                const double pa = angleOf(A), pb = angleOf(B);
                const double lo2 = std::max(lo, std::min(pa, pb)), hi2 = std::min(hi, std::max(pa, pb));
                if (!(hi2 - lo2 > 1e-15)) continue;
                if (pointSegmentDistance(v, A, B) > lmax) continue;
                reflections.push_back(e);
                crossed.emplace_back(A, B);
                walk(S.after(mirror[static_cast<std::size_t>(e)]), e, lo2, hi2);
                crossed.pop_back();
                reflections.pop_back();
                if (!out.complete) return;
            }
        };
        const double half = 0.5 * angles[static_cast<std::size_t>(i)];
        walk(UnfoldingIsometry{}, -1, -half, half);
        if (!out.complete) break;
    }

    // Closed chains.
    const std::size_t D = out.diagonals.size();
    std::vector<std::vector<std::size_t>> from(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < D; ++k) from[static_cast<std::size_t>(out.diagonals[k].from)].push_back(k);
    for (auto& list : from)
        std::sort(list.begin(), list.end(),
                  [&](std::size_t a, std::size_t b) { return out.diagonals[a].length < out.diagonals[b].length; });
    const double angTol = 1e-7;
    auto junction = [&](int w, const Vec2& arrival, const Vec2& departure) {
        if (diffractive[static_cast<std::size_t>(w)]) return true;
        if (rightAngle[static_cast<std::size_t>(w)]) return (arrival + departure).norm() < angTol;
        return false;
    };

    Deduplicator dedupe(1e-9);
    std::vector<ClosedGeodesic> primitives;
    auto record = [&](const std::vector<std::size_t>& chain, double total, bool traced) {
        std::vector<int> ids(chain.begin(), chain.end());
        if (primitivePeriod(ids) != ids.size()) return;
        ClosedGeodesic g;
        g.kind = OrbitKind::Conical;
        g.conical = true;
        g.traced = traced;
        g.length = total;
        g.primitiveLength = total;
        g.onBoundary = true;
        for (std::size_t k : chain) {
            const auto& dg = out.diagonals[k];
            const auto leg = traceDiagonal(polygon, dg);
            g.path.insert(g.path.end(), leg.begin(), leg.end() - 1);
            g.vertices.push_back(dg.from);
            g.word.insert(g.word.end(), dg.reflections.begin(), dg.reflections.end());
            g.onBoundary = g.onBoundary && dg.onBoundary;
            g.diffractive = g.diffractive || diffractive[static_cast<std::size_t>(dg.from)];
        }
        const auto& first = out.diagonals[chain.front()];
        g.basepoint = polygon.vertex(static_cast<std::size_t>(first.from));
        g.direction = first.departure;
        g.path.push_back(g.basepoint);
        if (!dedupe.insert(canonicalCycle(g.vertices), total)) return;
        primitives.push_back(std::move(g));
    };

    std::vector<std::size_t> chain;
    std::function<void(double)> extend = [&](double total) {
        if (++nodes > options.nodeBudget) {
            out.complete = false;
            return;
        }
        const auto& first = out.diagonals[chain.front()];
        const auto& last = out.diagonals[chain.back()];
        if (last.to == first.from && junction(last.to, last.arrival, first.departure)) record(chain, total, true);
        if (static_cast<int>(chain.size()) >= options.chainCap) return;
        for (std::size_t k : from[static_cast<std::size_t>(last.to)]) {
            const auto& dg = out.diagonals[k];
            if (total + dg.length > lmax + tolDist) break;
            if (k < chain.front()) continue;
            if (!junction(last.to, last.arrival, dg.departure)) continue;
            chain.push_back(k);
            extend(total + dg.length);
            chain.pop_back();
            if (!out.complete) return;
        }
    };
    for (std::size_t k = 0; k < D && out.complete; ++k) {
        const auto& dg = out.diagonals[k];
        const auto v = static_cast<std::size_t>(dg.from);
        if (dg.to == dg.from && !diffractive[v] && !rightAngle[v]) record({k}, dg.length, false);
        chain.assign(1, k);
        extend(dg.length);
    }

    for (const auto& g : primitives) {
        out.closedChains.push_back(g);
        for (int m = 2; m * g.length <= lmax * (1.0 + 1e-12); ++m) {
            ClosedGeodesic r = g;
            r.multiplicity = m;
            r.length = m * g.length;
            for (int c = 1; c < m; ++c) {
                r.path.insert(r.path.end(), g.path.begin() + 1, g.path.end());
                r.vertices.insert(r.vertices.end(), g.vertices.begin(), g.vertices.end());
                r.word.insert(r.word.end(), g.word.begin(), g.word.end());
            }
            out.closedChains.push_back(std::move(r));
        }
    }
    sortOrbits(out.closedChains);
    return out;
}

// ------------------------------------------------------------ Poincare map

namespace {

struct BoundaryState {
    int edge = 0;
    double s = 0.0;      // arclength from the edge's first vertex
    double theta = 0.0;  // angle from the edge tangent, in (0, pi)
};

BoundaryState billiardStep(const Polygon& P, const BoundaryState& st) {
    const int n = static_cast<int>(P.size());
    const auto [a, b] = P.edge(static_cast<std::size_t>(st.edge));
    const Vec2 t = (b - a).normalized();
    const Vec2 nin(-t.y(), t.x());
    const Vec2 x = a + st.s * t;
    const Vec2 d = std::cos(st.theta) * t + std::sin(st.theta) * nin;
    double best = std::numeric_limits<double>::infinity();
    int hit = -1;
    for (int j = 0; j < n; ++j) {
        if (j == st.edge) continue;
        const auto [c, e] = P.edge(static_cast<std::size_t>(j));
        const Vec2 f = e - c;
        const double den = cross(d, f);
        if (std::abs(den) < 1e-300) continue;
        const double lambda = cross(c - x, f) / den;
        const double mu = cross(c - x, d) / den;
        if (lambda > 0.0 && mu >= -1e-9 && mu <= 1.0 + 1e-9 && lambda < best) {
            best = lambda;
            hit = j;
        }
    }
    if (hit < 0) throw DerivativeInstability("billiard ray left the polygon");
    const auto [c, e] = P.edge(static_cast<std::size_t>(hit));
    const Vec2 tj = (e - c).normalized();
    const Vec2 nj(-tj.y(), tj.x());
    const Vec2 y = x + best * d;
    const Vec2 r = d - 2.0 * d.dot(nj) * nj;
    BoundaryState out;
    out.edge = hit;
    out.s = (y - c).dot(tj);
    out.theta = std::atan2(r.dot(nj), r.dot(tj));
    return out;
}

}  // namespace

PoincareData poincareMap(const Polygon& polygon, const ClosedGeodesic& orbit, int repetitions) {
    if (orbit.conical || orbit.kind == OrbitKind::Conical) {
        throw PreconditionError("Poincare map is defined only for non-conical orbits");
    }
    if (orbit.startEdge < 0 || orbit.word.empty() || repetitions < 1) {
        throw PreconditionError("orbit has no start edge or word");
    }
    const auto [a, b] = polygon.edge(static_cast<std::size_t>(orbit.startEdge));
    const Vec2 t = (b - a).normalized();
    const Vec2 nin(-t.y(), t.x());
    BoundaryState x0;
    x0.edge = orbit.startEdge;
    x0.s = (orbit.basepoint - a).dot(t);
    x0.theta = std::atan2(orbit.direction.dot(nin), orbit.direction.dot(t));
    const int steps = orbit.period() * repetitions;

    auto flow = [&](double s, double theta) {
        BoundaryState st{x0.edge, s, theta};
        for (int k = 0; k < steps; ++k) st = billiardStep(polygon, st);
        if (st.edge != x0.edge) throw DerivativeInstability("perturbed orbit changed its reflection sequence");
        return Vec2(st.s, st.theta);
    };
    const Vec2 base = flow(x0.s, x0.theta);
    const double hs = 1e-6 * polygon.diameter(), ht = 1e-6;
    const Vec2 sp = flow(x0.s + hs, x0.theta), sm = flow(x0.s - hs, x0.theta);
    const Vec2 tp = flow(x0.s, x0.theta + ht), tm = flow(x0.s, x0.theta - ht);

    PoincareData out;
    out.P.col(0) = (sp - sm) / (2.0 * hs);
    out.P.col(1) = (tp - tm) / (2.0 * ht);
    Eigen::Matrix2d forward, backward;
    forward.col(0) = (sp - base) / hs;
    forward.col(1) = (tp - base) / ht;
    backward.col(0) = (base - sm) / hs;
    backward.col(1) = (base - tm) / ht;
    const double spread = (forward - backward).cwiseAbs().maxCoeff();
    if (spread > 1e-3 * std::max(1.0, out.P.cwiseAbs().maxCoeff())) {
        std::ostringstream msg;
        msg << "one-sided difference quotients disagree by " << spread;
        throw DerivativeInstability(msg.str());
    }
    out.detP = out.P.determinant();
    out.detIminusP = (Eigen::Matrix2d::Identity() - out.P).determinant();
    return out;
}

std::vector<Vec2> orbitPath(const Polygon& polygon, const ClosedGeodesic& orbit) {
    if (orbit.conical) return orbit.path;
    const auto [a, b] = polygon.edge(static_cast<std::size_t>(orbit.startEdge));
    const Vec2 t = (b - a).normalized();
    const Vec2 nin(-t.y(), t.x());
    BoundaryState st{orbit.startEdge, (orbit.basepoint - a).dot(t),
                     std::atan2(orbit.direction.dot(nin), orbit.direction.dot(t))};
    std::vector<Vec2> pts{orbit.basepoint};
    for (int k = 0; k < orbit.period(); ++k) {
        st = billiardStep(polygon, st);
        const auto [c, e] = polygon.edge(static_cast<std::size_t>(st.edge));
        pts.push_back(c + st.s * (e - c).normalized());
    }
    return pts;
}

// ------------------------------------------------------------ length spectrum

std::vector<double> LengthSpectrum::lengths() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.length);
    return out;
}

int LengthSpectrum::find(double length) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), length * (1.0 - mergeTolerance),
                               [](const LengthSpectrumEntry& e, double l) { return e.length < l; });
    for (; it != entries.end() && it->length <= length * (1.0 + mergeTolerance); ++it)
        if (std::abs(it->length - length) <= mergeTolerance * std::max(length, it->length))
            return static_cast<int>(it - entries.begin());
    return -1;
}

LengthSpectrum lengthSpectrum(const Polygon& polygon, double lmax, const LengthSpectrumOptions& options) {
    LengthSpectrum out;
    out.mergeTolerance = options.mergeTolerance;
    auto periodic = enumerateOrbits(polygon, lmax, options.periodMax, options.enumeration);
    auto conical = findGeneralizedDiagonals(polygon, lmax, options.diagonals);
    out.complete = periodic.complete && conical.complete;
    out.orbits = std::move(periodic.orbits);
    out.orbits.insert(out.orbits.end(), conical.closedChains.begin(), conical.closedChains.end());
    sortOrbits(out.orbits);
    for (std::size_t k = 0; k < out.orbits.size(); ++k) {
        const double l = out.orbits[k].length;
        if (!out.entries.empty() && l - out.entries.back().length <= options.mergeTolerance * l) {
            out.entries.back().orbits.push_back(k);
        } else {
            out.entries.push_back({l, {k}});
        }
    }
    return out;
}

LengthSpectrum lengthSpectrum(const Trapezoid& t, double lmax, const LengthSpectrumOptions& options) {
    return lengthSpectrum(t.polygon(), lmax, options);
}

std::vector<std::string> catalogLabels(const OrbitCatalog& c, double length, double relTol) {
    std::vector<std::string> out;
    auto near = [&](double x) { return std::abs(x - length) <= relTol * std::max(x, length); };
    if (near(c.twoH)) out.push_back("2h");
    if (near(c.twoB)) out.push_back("2b");
    for (double l : c.twoMB)
        if (near(l)) out.push_back("2mb");
    if (c.fagnano && c.fagnano->existsInside && near(c.fagnano->length)) out.push_back("lF");
    if (c.twoHAlpha.existsInside && near(c.twoHAlpha.length)) out.push_back("2hAlpha");
    return out;
}

ShortestOrbit shortestOrbit(const Trapezoid& t, double lcap, const LengthSpectrumOptions& options) {
    const double floor = std::min(2.0 * t.h(), 2.0 * t.b());
    if (lcap < floor * (1.0 - 1e-12)) throw PreconditionError("lcap must be at least min(2h, 2b)");
    const auto spec = lengthSpectrum(t, std::max(lcap, floor * (1.0 + 1e-9)), options);
    if (spec.entries.empty()) throw BudgetExceeded("no closed geodesic found below lcap");
    ShortestOrbit out;
    out.length = spec.entries.front().length;
    const auto labels = catalogLabels(orbitCatalog(t), out.length);
    out.label = labels.empty() ? "other" : labels.front();
    return out;
}

}  // namespace trapspec
