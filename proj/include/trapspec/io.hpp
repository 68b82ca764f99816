#pragma once

#include "trapspec/billiards.hpp"
#include "trapspec/geometry.hpp"
#include "trapspec/heat_trace.hpp"
#include "trapspec/inverse.hpp"
#include "trapspec/spectrum.hpp"
#include "trapspec/wave_trace.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace trapspec {

using Json = nlohmann::ordered_json;

/// A domain as read from JSON: either trapezoid parameters
/// {"B","h","alpha","beta"} (radians) or {"vertices": [[x, y], ...]}.
struct Domain {
    Polygon polygon;
    std::optional<Trapezoid> trapezoid;

    static Domain fromTrapezoid(const Trapezoid& t);
    static Domain fromPolygon(const Polygon& p);
};

Json toJson(const Trapezoid& t);
Trapezoid trapezoidFromJson(const Json& j);
Json toJson(const Domain& d);
Domain domainFromJson(const Json& j);
Domain readDomainFile(const std::string& path);

Json toJson(const OrbitCatalog& c);

/// Spectrum file. CSV: header `# bc=<D|N> domain=<json> accuracy=<max relative>`,
/// optional further `#` lines, then one eigenvalue per line (17 significant
/// digits). The JSON variant also keeps per-eigenvalue accuracies.
void writeSpectrumCsv(std::ostream& os, const Spectrum& s, const Json& domain, const Json& config = Json());
void writeSpectrumJson(std::ostream& os, const Spectrum& s, const Json& domain, const Json& config = Json());

struct SpectrumFile {
    Spectrum spectrum;
    Json domain;  // null when absent
};

/// Reads either variant (detected from the first non-blank character).
/// Throws FormatError.
SpectrumFile readSpectrum(std::istream& is);
SpectrumFile readSpectrumFile(const std::string& path);

Json toJson(const HeatInvariants& inv);

/// One orbit as a JSON object: word, length, kind, flags.
Json toJson(const ClosedGeodesic& g);
Json toJson(const LengthSpectrum& ls);

Json toJson(const OrderEstimate& e);
Json toJson(const SingularityCandidate& c);

/// Probe scan as CSV: `# sigma=.. kRef=..`, optional `# config=<json>`, then
/// columns t, |I|, arg I.
void writeProbeCsv(std::ostream& os, const ProbeScan& scan, const Json& config = Json());

Json toJson(const Rectangle& r);
Json toJson(const BranchResult& b);
Json toJson(const ReconstructionReport& r);
Json toJson(const ConsistencyReport& r);

/// SVG drawing of the polygon with the given orbits traced inside.
std::string orbitsSvg(const Polygon& polygon, const std::vector<ClosedGeodesic>& orbits, double pixels = 480.0);

}  // namespace trapspec
