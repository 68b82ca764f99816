// trapspec command-line front end.

#include "trapspec/billiards.hpp"
#include "trapspec/eigensolver.hpp"
#include "trapspec/errors.hpp"
#include "trapspec/heat_trace.hpp"
#include "trapspec/inverse.hpp"
#include "trapspec/io.hpp"
#include "trapspec/properties.hpp"
#include "trapspec/wave_trace.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace trapspec;

namespace {

struct Global {
    std::string format;
    std::string output;
    std::uint64_t seed = 7;
    int workers = 1;
};

// Failures that are the caller's fault but only visible after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw FormatError("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void emitJson(const Global& g, const Json& j) {
    Output out(g.output);
    out.stream() << j.dump(1) << '\n';
}

std::string formatOr(const Global& g, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const std::string f = g.format.empty() ? fallback : g.format;
    for (const char* a : allowed)
        if (f == a) return f;
    throw UsageError("--format " + f + " is not available for this command");
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
    std::string domain;
    std::size_t count = 1500;
    double meshSize = 0.05;
    int levels = 2;
    std::string bc = "D";
    bool exact = false;
    int sliceSize = 96;
};

int runSpectrum(const Global& g, const SpectrumArgs& a) {
    const auto fmt = formatOr(g, "csv", {"csv", "json"});
    const Domain d = readDomainFile(a.domain);
    const auto bc = boundaryConditionFromString(a.bc);
    Json config{{"command", "spectrum"}, {"count", a.count}, {"bc", a.bc}};
    Spectrum s;
    if (a.exact) {
        if (!d.trapezoid || !d.trapezoid->isRectangle())
            throw UsageError("--exact needs a rectangular domain given as trapezoid parameters");
        config["method"] = "exact-rectangle";
        s = exactRectangleSpectrum(d.trapezoid->h(), d.trapezoid->B(), a.count, bc);
    } else {
        SpectrumOptions o;
        o.lanczos.sliceSize = a.sliceSize;
        o.lanczos.seed = g.seed;
        config["method"] = "fem-p1-richardson";
        config["meshSize"] = a.meshSize;
        config["levels"] = a.levels;
        config["sliceSize"] = a.sliceSize;
        config["seed"] = g.seed;
        s = computeSpectrum(d.polygon, bc, a.count, a.meshSize, a.levels, o);
    }
    Output out(g.output);
    if (fmt == "csv")
        writeSpectrumCsv(out.stream(), s, toJson(d), config);
    else
        writeSpectrumJson(out.stream(), s, toJson(d), config);
    return 0;
}

// ---------------------------------------------------------------- invariants

struct InvariantArgs {
    std::string spectrum;
    double tmin = 0.0, tmax = 0.0;
};

int runInvariants(const Global& g, const InvariantArgs& a) {
    formatOr(g, "json", {"json"});
    const auto f = readSpectrumFile(a.spectrum);
    HeatFitOptions o;
    if (a.tmin > 0.0 || a.tmax > 0.0) {
        if (!(a.tmin > 0.0 && a.tmax > a.tmin)) throw UsageError("--tmin and --tmax must satisfy 0 < tmin < tmax");
        o.window = std::make_pair(a.tmin, a.tmax);
    }
    Json j = toJson(fitInvariants(f.spectrum, o));
    j["config"] = {{"command", "invariants"}, {"input", a.spectrum}, {"tmin", a.tmin}, {"tmax", a.tmax}};
    emitJson(g, j);
    return 0;
}

// ---------------------------------------------------------------- orbits

struct OrbitArgs {
    std::string domain;
    double lmax = 6.0;
    int periodMax = 24;
    double pixels = 480.0;
};

int runOrbits(const Global& g, const OrbitArgs& a) {
    const auto fmt = formatOr(g, "json", {"json", "csv", "svg"});
    if (!(a.lmax > 0.0)) throw UsageError("--lmax must be positive");
    const Domain d = readDomainFile(a.domain);
    LengthSpectrumOptions o;
    o.periodMax = a.periodMax;
    const auto ls = d.trapezoid ? lengthSpectrum(*d.trapezoid, a.lmax, o) : lengthSpectrum(d.polygon, a.lmax, o);
    std::optional<OrbitCatalog> cat;
    if (d.trapezoid) {
        CatalogOptions co;
        co.lmax = a.lmax;
        cat = orbitCatalog(*d.trapezoid, co);
    }
    Output out(g.output);
    auto& os = out.stream();
    if (fmt == "svg") {
        os << orbitsSvg(d.polygon, ls.orbits, a.pixels);
        return 0;
    }
    if (fmt == "csv") {
        os << "# config=" << Json{{"command", "orbits"}, {"lmax", a.lmax}, {"periodMax", a.periodMax}}.dump() << '\n';
        os << "length,kind,period,multiplicity,labels,word\n" << std::setprecision(17);
    } else {
        os << Json{{"config", {{"command", "orbits"}, {"lmax", a.lmax}, {"periodMax", a.periodMax}}}, {"complete", ls.complete}}.dump()
           << '\n';
    }
    for (const auto& orbit : ls.orbits) {
        std::vector<std::string> labels;
        if (cat) labels = catalogLabels(*cat, orbit.length);
        if (fmt == "csv") {
            std::string lab, word;
            for (const auto& l : labels) lab += (lab.empty() ? "" : ";") + l;
            for (int e : orbit.word) word += std::to_string(e);
            os << orbit.length << ',' << toString(orbit.kind) << ',' << orbit.period() << ',' << orbit.multiplicity << ','
               << lab << ',' << word << '\n';
        } else {
            Json j = toJson(orbit);
            j["labels"] = labels;
            os << j.dump() << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------- wavetrace

struct WaveArgs {
    std::string spectrum;
    double tmin = 0.0, tmax = 0.0;
    double sigma = 0.0;
    double kRef = 0.0;
    double threshold = 5.0;
    std::string probe;
    bool orders = true;
};

int runWavetrace(const Global& g, const WaveArgs& a) {
    formatOr(g, "json", {"json"});
    if (!(a.tmax > a.tmin && a.tmin >= 0.0)) throw UsageError("need 0 <= --tmin < --tmax");
    const auto f = readSpectrumFile(a.spectrum);
    std::optional<Domain> dom;
    if (!f.domain.is_null()) dom = domainFromJson(f.domain);
    std::optional<LengthSpectrum> ls;
    std::optional<OrbitCatalog> cat;
    if (dom) {
        ls = dom->trapezoid ? lengthSpectrum(*dom->trapezoid, a.tmax + 0.5) : lengthSpectrum(dom->polygon, a.tmax + 0.5);
        if (dom->trapezoid) {
            CatalogOptions co;
            co.lmax = a.tmax + 0.5;
            cat = orbitCatalog(*dom->trapezoid, co);
        }
    }
    const double sigma = a.sigma > 0.0 ? a.sigma : (ls ? defaultSigma(*ls, {a.tmin, a.tmax}) : 0.1);
    const double kRef = a.kRef > 0.0 ? a.kRef : defaultKRef(f.spectrum, sigma);
    const double tStart = std::max(a.tmin, 4.0 * sigma);

    Json config{{"command", "wavetrace"}, {"input", a.spectrum}, {"tRange", {tStart, a.tmax}}, {"sigma", sigma},
                {"kRef", kRef},           {"threshold", a.threshold}};
    if (!a.probe.empty()) {
        const auto scan = scanProbe(f.spectrum, {tStart, a.tmax}, sigma, kRef, 0.0, g.workers);
        Output probe(a.probe);
        writeProbeCsv(probe.stream(), scan, config);
    }
    ScanOptions so;
    so.threshold = a.threshold;
    so.workers = g.workers;
    auto cands = scanPeaks(f.spectrum, {tStart, a.tmax}, sigma, kRef, so);
    Json notes = Json::array();
    if (a.orders) {
        const auto w = defaultOrderWindow(f.spectrum, sigma);
        for (auto& c : cands) {
            try {
                c.order = estimateOrder(f.spectrum, c.t0, sigma, w);
            } catch (const NoiseFloor& e) {
                notes.push_back("t0=" + std::to_string(c.t0) + ": " + e.what());
            }
        }
    }
    if (ls) matchCandidates(cands, *ls, 2.0 * sigma, cat ? &*cat : nullptr);
    Json arr = Json::array();
    for (const auto& c : cands) arr.push_back(toJson(c));
    emitJson(g, Json{{"config", config}, {"candidates", arr}, {"notes", notes}});
    return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string spectrum;
    ReconstructionConfig config;
};

int runReconstruct(const Global& g, ReconstructArgs a) {
    formatOr(g, "json", {"json"});
    const auto f = readSpectrumFile(a.spectrum);
    a.config.workers = g.workers;
    const auto rep = scanAndReconstruct(f.spectrum, a.config);
    Json j = toJson(rep);
    const auto& c = a.config;
    j["config"] = {{"command", "reconstruct"},     {"input", a.spectrum},
                   {"minEigenvalues", c.minEigenvalues}, {"rectangleTolerance", c.rectangleTolerance},
                   {"sigma", c.sigma},             {"threshold", c.threshold},
                   {"tStart", c.tStart},           {"tEnd", c.tEnd},
                   {"matchSigmas", c.matchSigmas}, {"areaTolerance", c.areaTolerance},
                   {"perimeterTolerance", c.perimeterTolerance}, {"qTolerance", c.qTolerance},
                   {"orderSamples", c.orderSamples}};
    emitJson(g, j);
    requireUnique(rep);
    return 0;
}

// ---------------------------------------------------------------- compare

int runCompare(const Global& g, const std::string& p1, const std::string& p2, double tol) {
    formatOr(g, "json", {"json"});
    const Domain d1 = readDomainFile(p1), d2 = readDomainFile(p2);
    const Trapezoid t1 = d1.trapezoid ? *d1.trapezoid : canonicalTrapezoid(d1.polygon);
    const Trapezoid t2 = d2.trapezoid ? *d2.trapezoid : canonicalTrapezoid(d2.polygon);
    Json j = toJson(checkIsospectralConsistency(t1, t2, tol));
    j["trapezoids"] = {toJson(t1), toJson(t2)};
    j["config"] = {{"command", "compare"}, {"inputs", {p1, p2}}, {"tolerance", tol}};
    emitJson(g, j);
    return 0;
}

// ---------------------------------------------------------------- props

int runProps(const Global& g, const std::string& suite, int n) {
    formatOr(g, "json", {"json"});
    const auto r = runPropertySuite(suite, n, g.seed, g.workers);
    Json j{{"suite", r.suite},   {"passed", r.passed()}, {"trials", r.trials}, {"failures", r.failures},
           {"skipped", r.skipped}, {"worst", r.worst},   {"worstSample", r.worstLabel}, {"messages", r.messages}};
    j["config"] = {{"command", "props"}, {"suite", suite}, {"n", n}, {"seed", g.seed}};
    emitJson(g, j);
    return r.passed() ? 0 : 1;
}

void printError(const std::string& kind, const std::string& message) {
    std::cerr << Json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laplace spectra, billiard orbits and spectral reconstruction of non-obtuse trapezoids"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--format", g.format, "Output format (json, csv, svg where supported)")
        ->check(CLI::IsMember({"json", "csv", "svg"}));
    app.add_option("-o,--output", g.output, "Output file (default stdout)");
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    SpectrumArgs sa;
    auto* spec = app.add_subcommand("spectrum", "Domain JSON to spectrum file");
    spec->add_option("domain", sa.domain, "Domain JSON")->required()->check(CLI::ExistingFile);
    spec->add_option("-n,--count", sa.count, "Number of eigenvalues")->capture_default_str();
    spec->add_option("--mesh-size", sa.meshSize, "Coarsest mesh size")->check(CLI::PositiveNumber)->capture_default_str();
    spec->add_option("--levels", sa.levels, "Refinement levels (>= 2)")->check(CLI::Range(2, 4))->capture_default_str();
    spec->add_option("--bc", sa.bc, "Boundary condition")->check(CLI::IsMember({"D", "N"}))->capture_default_str();
    spec->add_flag("--exact", sa.exact, "Closed form (rectangles only)");
    spec->add_option("--slice-size", sa.sliceSize, "Eigenvalues per shift")->check(CLI::PositiveNumber)->capture_default_str();

    InvariantArgs ia;
    auto* inv = app.add_subcommand("invariants", "Heat-trace invariants of a spectrum");
    inv->add_option("spectrum", ia.spectrum, "Spectrum file")->required()->check(CLI::ExistingFile);
    inv->add_option("--tmin", ia.tmin, "Fit window start");
    inv->add_option("--tmax", ia.tmax, "Fit window end");

    OrbitArgs oa;
    auto* orb = app.add_subcommand("orbits", "Length spectrum of a domain");
    orb->add_option("domain", oa.domain, "Domain JSON")->required()->check(CLI::ExistingFile);
    orb->add_option("--lmax", oa.lmax, "Maximal length")->capture_default_str();
    orb->add_option("--period-max", oa.periodMax, "Maximal period")->check(CLI::Range(1, 64))->capture_default_str();
    orb->add_option("--pixels", oa.pixels, "SVG size")->capture_default_str();

    WaveArgs wa;
    auto* wav = app.add_subcommand("wavetrace", "Wave-trace probe and singularity candidates");
    wav->add_option("spectrum", wa.spectrum, "Spectrum file")->required()->check(CLI::ExistingFile);
    wav->add_option("--tmin", wa.tmin, "Scan start")->capture_default_str();
    wav->add_option("--tmax", wa.tmax, "Scan end")->required();
    wav->add_option("--sigma", wa.sigma, "Window width (default from the length spectrum, else 0.1)");
    wav->add_option("--kref", wa.kRef, "Reference wavenumber (default: centre of the order window)");
    wav->add_option("--threshold", wa.threshold, "Significance threshold")->capture_default_str();
    wav->add_option("--probe", wa.probe, "Write the probe scan as CSV");
    wav->add_flag("!--no-orders", wa.orders, "Skip order estimation");

    ReconstructArgs ra;
    auto* rec = app.add_subcommand("reconstruct", "Reconstruct the domain from its spectrum");
    rec->add_option("spectrum", ra.spectrum, "Spectrum file")->required()->check(CLI::ExistingFile);
    rec->add_option("--sigma", ra.config.sigma, "Window width")->check(CLI::PositiveNumber)->capture_default_str();
    rec->add_option("--threshold", ra.config.threshold, "Significance threshold")->capture_default_str();
    rec->add_option("--tmax", ra.config.tEnd, "Scan end (default 2L)");
    rec->add_option("--min-eigenvalues", ra.config.minEigenvalues, "Required spectrum length")->capture_default_str();
    rec->add_option("--rectangle-tolerance", ra.config.rectangleTolerance, "Relative q tolerance")->capture_default_str();

    std::string c1, c2;
    double ctol = 1e-9;
    auto* cmp = app.add_subcommand("compare", "Invariant comparison of two trapezoids");
    cmp->add_option("first", c1, "Domain JSON")->required()->check(CLI::ExistingFile);
    cmp->add_option("second", c2, "Domain JSON")->required()->check(CLI::ExistingFile);
    cmp->add_option("--tol", ctol, "Relative tolerance")->capture_default_str();

    std::string suite;
    int nSamples = 100;
    auto* props = app.add_subcommand("props", "Run a property suite");
    props->add_option("suite", suite, "Suite name")->required()->check(CLI::IsMember(propertySuites()));
    props->add_option("--n", nSamples, "Samples")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*spec) return runSpectrum(g, sa);
        if (*inv) return runInvariants(g, ia);
        if (*orb) return runOrbits(g, oa);
        if (*wav) return runWavetrace(g, wa);
        if (*rec) return runReconstruct(g, ra);
        if (*cmp) return runCompare(g, c1, c2, ctol);
        if (*props) return runProps(g, suite, nSamples);
    } catch (const UsageError& e) {
        printError("UsageError", e.what());
        return 2;
    } catch (const Error& e) {
        printError(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        printError("InternalError", e.what());
        return 1;
    }
    return 2;
}
