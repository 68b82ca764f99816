#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("trapspec_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args) {
    const auto out = scratch() / "stdout", err = scratch() / "stderr";
    const std::string cmd = std::string(TRAPSPEC_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path writeFile(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("spectrum and invariants of the exact square") {
    const auto dom = writeFile("sq.json", R"({"B": 1, "h": 1, "alpha": 1.5707963267948966, "beta": 1.5707963267948966})");
    const auto spec = scratch() / "sq.csv";
    auto r = run("spectrum " + dom.string() + " --exact -n 2000 -o " + spec.string());
    REQUIRE(r.code == 0);
    CHECK(slurp(spec).rfind("# bc=D", 0) == 0);

    r = run("invariants " + spec.string());
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(std::abs(j["area"].get<double>() - 1.0) < 0.01);

    r = run("reconstruct " + spec.string());
    REQUIRE(r.code == 0);
    const auto rep = Json::parse(r.out);
    CHECK(rep["status"] == "reconstructed");
    CHECK(rep["isRectangle"] == true);
}

TEST_CASE("orbits output formats") {
    const auto dom = writeFile("fag.json", R"({"B": 2, "h": 1.2, "alpha": 1.0471975511965976, "beta": 1.0471975511965976})");
    auto r = run("orbits " + dom.string() + " --lmax 3.1");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("lF") != std::string::npos);
    r = run("--format svg orbits " + dom.string() + " --lmax 3.1");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("<svg") != std::string::npos);
    r = run("--format csv orbits " + dom.string() + " --lmax 3.1");
    REQUIRE(r.code == 0);
}

TEST_CASE("wavetrace on the exact square") {
    const auto dom = writeFile("sq2.json", R"({"B": 1, "h": 1, "alpha": 1.5707963267948966, "beta": 1.5707963267948966})");
    const auto spec = scratch() / "sq2.csv";
    REQUIRE(run("spectrum " + dom.string() + " --exact -n 3000 -o " + spec.string()).code == 0);
    const auto probe = scratch() / "probe.csv";
    const auto r = run("wavetrace " + spec.string() + " --tmin 1.5 --tmax 3.0 --probe " + probe.string());
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    bool at2 = false;
    for (const auto& c : j["candidates"]) at2 = at2 || std::abs(c["t0"].get<double>() - 2.0) < 0.05;
    CHECK(at2);
    CHECK(slurp(probe).find("t,abs,arg") != std::string::npos);
}

TEST_CASE("compare and props") {
    const auto a = writeFile("a.json", R"({"B": 2, "h": 1, "alpha": 1.3089969389957472, "beta": 1.0471975511965976})");
    const auto b = writeFile("b.json", R"({"B": 2, "h": 1, "alpha": 1.3962634015954636, "beta": 1.0471975511965976})");
    auto r = run("compare " + a.string() + " " + b.string());
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["verdict"] != "congruent");
    r = run("props angle --n 50");
    CHECK(r.code == 0);
}

TEST_CASE("errors and exit codes") {
    CHECK(run("props nosuchsuite").code == 2);
    CHECK(run("frobnicate").code == 2);
    const auto bad = writeFile("bad.json", R"({"B": 1, "h": 5, "alpha": 1.0, "beta": 1.0})");
    auto r = run("orbits " + bad.string());
    CHECK(r.code == 1);
    CHECK(Json::parse(r.err)["error"] == "DomainError");
    const auto junk = writeFile("junk.csv", "# bc=D\n1\nnot-a-number\n");
    r = run("invariants " + junk.string());
    CHECK(r.code == 1);
    CHECK(Json::parse(r.err)["error"] == "FormatError");
}
