#include "trapspec/io.hpp"

#include "trapspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace trapspec {

Domain Domain::fromTrapezoid(const Trapezoid& t) { return Domain{t.polygon(), t}; }
Domain Domain::fromPolygon(const Polygon& p) { return Domain{p, std::nullopt}; }

Json toJson(const Trapezoid& t) { return Json{{"B", t.B()}, {"h", t.h()}, {"alpha", t.alpha()}, {"beta", t.beta()}}; }

Trapezoid trapezoidFromJson(const Json& j) {
    try {
        return Trapezoid::make(j.at("B").get<double>(), j.at("h").get<double>(), j.at("alpha").get<double>(),
                               j.at("beta").get<double>());
    } catch (const Json::exception& e) {
        throw FormatError(std::string("trapezoid JSON needs numeric B, h, alpha, beta: ") + e.what());
    }
}

Json toJson(const Domain& d) {
    if (d.trapezoid) return toJson(*d.trapezoid);
    Json v = Json::array();
    for (const auto& p : d.polygon.vertices()) v.push_back({p.x(), p.y()});
    return Json{{"vertices", v}};
}

Domain domainFromJson(const Json& j) {
    if (!j.is_object()) throw FormatError("domain JSON must be an object");
    if (j.contains("vertices")) {
        std::vector<Vec2> pts;
        try {
            for (const auto& p : j.at("vertices")) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        } catch (const Json::exception& e) {
            throw FormatError(std::string("vertices must be [[x, y], ...]: ") + e.what());
        }
        return Domain::fromPolygon(Polygon::fromVertices(std::move(pts)));
    }
    return Domain::fromTrapezoid(trapezoidFromJson(j));
}

Domain readDomainFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    try {
        return domainFromJson(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

Json toJson(const OrbitCatalog& c) {
    Json out = Json::array();
    out.push_back({{"label", "2h"}, {"length", c.twoH}, {"kind", "band"}, {"sweptArea", c.twoHSweptArea}});
    out.push_back({{"label", "2b"}, {"length", c.twoB}, {"kind", "conical"}});
    for (std::size_t i = 0; i < c.twoMB.size(); ++i)
        out.push_back({{"label", "2mb"}, {"m", i + 2}, {"length", c.twoMB[i]}, {"kind", "conical"}});
    if (c.fagnano) {
        out.push_back({{"label", "lF"},
                       {"length", c.fagnano->length},
                       {"existsInside", c.fagnano->existsInside},
                       {"diffractive", c.fagnano->diffractive},
                       {"degenerate", c.fagnano->degenerate}});
    }
    out.push_back({{"label", "2hAlpha"},
                   {"length", c.twoHAlpha.length},
                   {"existsInside", c.twoHAlpha.existsInside},
                   {"classification", toString(c.twoHAlpha.classification)}});
    for (const auto& f : c.cmnFamilies) out.push_back({{"label", "Cmn"}, {"m", f.m}, {"n", f.n}});
    return out;
}

namespace {

Json polygonOrNull(const Spectrum& s) {
    if (!s.sourceDomain) return nullptr;
    return toJson(Domain::fromPolygon(*s.sourceDomain));
}

}  // namespace

void writeSpectrumCsv(std::ostream& os, const Spectrum& s, const Json& domain, const Json& config) {
    const Json dom = domain.is_null() ? polygonOrNull(s) : domain;
    os << "# bc=" << toString(s.boundaryCondition) << " domain=" << dom.dump() << " accuracy=" << std::setprecision(6)
       << s.maxAccuracy() << '\n';
    if (!config.is_null()) os << "# config=" << config.dump() << '\n';
    os << std::setprecision(17);
    for (double l : s.eigenvalues) os << l << '\n';
}

void writeSpectrumJson(std::ostream& os, const Spectrum& s, const Json& domain, const Json& config) {
    Json j;
    j["bc"] = toString(s.boundaryCondition);
    j["domain"] = domain.is_null() ? polygonOrNull(s) : domain;
    if (!config.is_null()) j["config"] = config;
    j["eigenvalues"] = s.eigenvalues;
    j["accuracy"] = s.accuracy;
    os << j.dump(1) << '\n';
}

namespace {

void attachDomain(SpectrumFile& f) {
    if (f.domain.is_null()) return;
    try {
        f.spectrum.sourceDomain = domainFromJson(f.domain).polygon;
    } catch (const Error&) {
        // An unreadable domain tag does not invalidate the eigenvalues.
    }
}

SpectrumFile readCsv(std::istream& is) {
    SpectrumFile f;
    std::string line;
    bool header = false;
    double acc = 0.0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (header) continue;
            const auto bcPos = line.find("bc=");
            const auto domPos = line.find(" domain=");
            const auto accPos = line.rfind(" accuracy=");
            if (bcPos == std::string::npos || domPos == std::string::npos || accPos == std::string::npos || accPos < domPos) {
                throw FormatError("spectrum CSV header must read '# bc=<D|N> domain=<json> accuracy=<...>'");
            }
            f.spectrum.boundaryCondition = boundaryConditionFromString(line.substr(bcPos + 3, domPos - bcPos - 3));
            try {
                f.domain = Json::parse(line.substr(domPos + 8, accPos - domPos - 8));
                acc = std::stod(line.substr(accPos + 10));
            } catch (const std::exception& e) {
                throw FormatError(std::string("bad spectrum header: ") + e.what());
            }
            header = true;
            continue;
        }
        if (!header) throw FormatError("spectrum CSV is missing its header line");
        std::istringstream ls(line);
        double v = 0.0;
        if (!(ls >> v)) throw FormatError("not a number: '" + line + "'");
        f.spectrum.eigenvalues.push_back(v);
    }
    if (!header) throw FormatError("spectrum CSV is missing its header line");
    f.spectrum.accuracy.assign(f.spectrum.count(), acc);
    return f;
}

SpectrumFile readJson(std::istream& is) {
    SpectrumFile f;
    try {
        const Json j = Json::parse(is);
        f.spectrum.boundaryCondition = boundaryConditionFromString(j.at("bc").get<std::string>());
        f.spectrum.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        if (j.contains("accuracy")) f.spectrum.accuracy = j.at("accuracy").get<std::vector<double>>();
        if (j.contains("domain")) f.domain = j.at("domain");
    } catch (const Json::exception& e) {
        throw FormatError(std::string("bad spectrum JSON: ") + e.what());
    }
    if (f.spectrum.accuracy.size() != f.spectrum.count()) f.spectrum.accuracy.assign(f.spectrum.count(), 0.0);
    return f;
}

}  // namespace

SpectrumFile readSpectrum(std::istream& is) {
    is >> std::ws;
    SpectrumFile f = is.peek() == '{' ? readJson(is) : readCsv(is);
    if (!std::is_sorted(f.spectrum.eigenvalues.begin(), f.spectrum.eigenvalues.end())) {
        throw FormatError("eigenvalues must be ascending");
    }
    attachDomain(f);
    return f;
}

SpectrumFile readSpectrumFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return readSpectrum(in);
}

Json toJson(const HeatInvariants& inv) {
    Json j{{"area", inv.area},
           {"perimeter", inv.perimeter},
           {"K", inv.cornerConstant},
           {"q", inv.qEstimate},
           {"residual", inv.residual},
           {"tWindow", {inv.tWindow.first, inv.tWindow.second}}};
    j["twoTermResidual"] = inv.twoTermResidual;
    j["conditionNumber"] = inv.conditionNumber;
    j["requestedWindow"] = {inv.requestedWindow.first, inv.requestedWindow.second};
    j["notes"] = inv.notes;
    return j;
}

Json toJson(const ClosedGeodesic& g) {
    Json j;
    j["word"] = g.word;
    j["length"] = g.length;
    j["kind"] = toString(g.kind);
    j["flags"] = {{"conical", g.conical},
                  {"diffractive", g.diffractive},
                  {"onBoundary", g.onBoundary},
                  {"traced", g.traced},
                  {"oddPeriod", g.oddPeriod()},
                  {"multiple", g.multiple()}};
    j["multiplicity"] = g.multiplicity;
    if (g.kind == OrbitKind::Band) {
        j["corridorWidth"] = g.corridorWidth;
        j["sweptArea"] = g.sweptArea;
    }
    if (g.conical) j["vertices"] = g.vertices;
    return j;
}

Json toJson(const LengthSpectrum& ls) {
    Json entries = Json::array();
    for (const auto& e : ls.entries) {
        Json kinds = Json::array();
        for (std::size_t k : e.orbits) kinds.push_back(toString(ls.orbits[k].kind));
        entries.push_back({{"length", e.length}, {"orbits", e.orbits}, {"kinds", kinds}});
    }
    Json orbits = Json::array();
    for (const auto& g : ls.orbits) orbits.push_back(toJson(g));
    return Json{{"complete", ls.complete}, {"entries", entries}, {"orbits", orbits}};
}

Json toJson(const OrderEstimate& e) {
    return Json{{"order", e.order},
                {"standardError", e.standardError},
                {"ci95", {e.ciLow, e.ciHigh}},
                {"clamped", e.clamped},
                {"kWindow", {e.kWindow.first, e.kWindow.second}},
                {"peakToFloor", e.peakToFloor},
                {"aboveNoiseFloor", e.aboveNoiseFloor}};
}

Json toJson(const SingularityCandidate& c) {
    Json j{{"t0", c.t0}, {"amplitude", c.amplitude}, {"kRef", c.kRef}, {"relativeHeight", c.relativeHeight}};
    j["order"] = c.order ? toJson(*c.order) : Json(nullptr);
    if (c.order) j["class"] = toString(classifyOrder(*c.order));
    j["matchedOrbit"] = c.matchedOrbit ? Json(*c.matchedOrbit) : Json(nullptr);
    j["matchedLength"] = c.matchedLength ? Json(*c.matchedLength) : Json(nullptr);
    j["unmatched"] = c.unmatched;
    return j;
}

void writeProbeCsv(std::ostream& os, const ProbeScan& scan, const Json& config) {
    os << std::setprecision(17) << "# sigma=" << scan.sigma << " kRef=" << scan.kRef << '\n';
    if (!config.is_null()) os << "# config=" << config.dump() << '\n';
    os << "t,abs,arg\n";
    for (std::size_t i = 0; i < scan.t.size(); ++i)
        os << scan.t[i] << ',' << std::abs(scan.value[i]) << ',' << std::arg(scan.value[i]) << '\n';
}

Json toJson(const Rectangle& r) { return Json{{"a", r.a}, {"c", r.c}}; }

Json toJson(const BranchResult& b) {
    Json j{{"branch", toString(b.branch)}, {"interpretation", b.interpretation}, {"evidence", b.evidence}};
    j["trapezoid"] = b.trapezoid ? toJson(*b.trapezoid) : Json(nullptr);
    j["residuals"] = {{"area", b.areaResidual}, {"perimeter", b.perimeterResidual}, {"q", b.qResidual}};
    j["unmatchedPeaks"] = b.unmatchedPeaks;
    j["missingCatalog"] = b.missingCatalog;
    j["shortestMatches"] = b.shortestMatches;
    j["nonUnique"] = b.nonUnique;
    j["survives"] = b.survives;
    if (!b.failure.empty()) j["failure"] = b.failure;
    return j;
}

Json toJson(const ReconstructionReport& r) {
    Json j;
    j["status"] = r.status();
    j["branch"] = r.branch ? Json(toString(*r.branch)) : Json(nullptr);
    j["isRectangle"] = r.isRectangle;
    j["rectangle"] = r.rectangle ? toJson(*r.rectangle) : Json(nullptr);
    j["trapezoid"] = r.trapezoid ? toJson(*r.trapezoid) : Json(nullptr);
    j["ambiguous"] = r.ambiguous;
    j["invariants"] = toJson(r.invariants);
    j["lambda1"] = r.lambda1;
    Json used;
    if (r.h) used["h"] = *r.h;
    if (r.lF) used["lF"] = *r.lF;
    if (r.hAlpha) used["hAlpha"] = *r.hAlpha;
    j["used"] = used.is_null() ? Json::object() : used;
    Json ev = Json::array();
    for (const auto& c : r.evidence) ev.push_back(toJson(c));
    j["evidence"] = ev;
    Json cands = Json::array();
    for (const auto& c : r.candidates) {
        Json cj = toJson(c.candidate);
        if (!c.note.empty()) cj["note"] = c.note;
        cands.push_back(cj);
    }
    j["candidates"] = cands;
    Json br = Json::array();
    for (const auto& b : r.branches) br.push_back(toJson(b));
    j["branches"] = br;
    j["scan"] = {{"sigma", r.sigma}, {"kRef", r.kRef}, {"threshold", r.threshold}, {"tRange", {r.tRange.first, r.tRange.second}}};
    j["notes"] = r.notes;
    return j;
}

Json toJson(const ConsistencyReport& r) {
    Json j{{"verdict", toString(r.verdict)}};
    if (r.verdict == ConsistencyVerdict::DistinctInvariants)
        j["separating"] = {{"invariant", r.separatingInvariant}, {"value1", r.value1}, {"value2", r.value2}};
    return j;
}

std::string orbitsSvg(const Polygon& polygon, const std::vector<ClosedGeodesic>& orbits, double pixels) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin, xmax = -xmin, ymax = -xmin;
    for (const auto& v : polygon.vertices()) {
        xmin = std::min(xmin, v.x());
        xmax = std::max(xmax, v.x());
        ymin = std::min(ymin, v.y());
        ymax = std::max(ymax, v.y());
    }
    const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin);
    const double scale = pixels / (std::max(xmax - xmin, ymax - ymin) + 2.0 * pad);
    const double width = (xmax - xmin + 2.0 * pad) * scale, height = (ymax - ymin + 2.0 * pad) * scale;
    auto px = [&](const Vec2& p) {
        std::ostringstream s;
        s << std::setprecision(6) << (p.x() - xmin + pad) * scale << ',' << (ymax + pad - p.y()) * scale;
        return s.str();
    };
    static const char* colors[] = {"#c0392b", "#2471a3", "#229954", "#b7950b", "#7d3c98", "#ca6f1e"};

    std::ostringstream os;
    os << std::setprecision(6) << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\">\n<polygon fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (const auto& v : polygon.vertices()) os << px(v) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        const auto pts = orbitPath(polygon, orbits[i]);
        os << "<polyline fill=\"none\" stroke=\"" << colors[i % 6] << "\" stroke-width=\"1\" points=\"";
        for (const auto& p : pts) os << px(p) << ' ';
        os << "\"><title>" << toString(orbits[i].kind) << " length " << orbits[i].length << "</title></polyline>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace trapspec
