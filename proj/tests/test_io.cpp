#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "domlip/fenchel_nielsen.hpp"
#include "domlip/representation.hpp"

using namespace domlip;
namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* p = std::getenv("DOMLIP_CLI");
    REQUIRE(p != nullptr);
    return p;
}

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string out_file = "cli_capture.txt";
    const int status = std::system((cli() + " " + args + " > " + out_file + " 2>&1").c_str());
    std::ifstream is(out_file);
    std::stringstream ss;
    ss << is.rdbuf();
    fs::remove(out_file);
    return {WEXITSTATUS(status), ss.str()};
}

struct Fixture {
    fs::path dir;
    Fixture() : dir(fs::temp_directory_path() / "domlip_io_test") {
        fs::create_directories(dir);
        save_rep((dir / "j.rep").string(),
                 fn_to_holonomy(FNCoords({2.0, 2.2, 2.4}, {0.3, -0.2, 0.5})));
        save_rep((dir / "trivial.rep").string(), SurfaceRep::trivial(2));
        SurfaceRep ax(SurfaceGroup(2));
        ax.images = {Moebius::axial(0.2), Moebius::axial(-0.1), Moebius::axial(0.15),
                     Moebius::axial(0.05)};
        save_rep((dir / "axis.rep").string(), ax);
        std::ofstream bad(dir / "bad.rep");
        bad << "rep-format 1\ngenus 2\n1 0 0 oops\n";
    }
    ~Fixture() { fs::remove_all(dir); }
    std::string p(const char* name) const { return (dir / name).string(); }
};

const Fixture& fx() {
    static Fixture f;
    return f;
}

} // namespace

TEST_CASE("rep-info reports the representation invariants") {
    const RunResult r = run("--out " + fx().dir.string() + " rep-info " + fx().p("j.rep"));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"euler_class\": 2") != std::string::npos);
    CHECK(r.output.find("Hyperbolic") != std::string::npos);
    CHECK(r.output.find("\"reducible\": false") != std::string::npos);

    const RunResult t = run("--out " + fx().dir.string() + " rep-info " + fx().p("trivial.rep"));
    CHECK(t.exit_code == 0);
    CHECK(t.output.find("\"euler_class\": 0") != std::string::npos);
    CHECK(t.output.find("Identity") != std::string::npos);

    const RunResult a = run("--out " + fx().dir.string() + " rep-info " + fx().p("axis.rep"));
    CHECK(a.exit_code == 0);
    CHECK(a.output.find("\"reducible\": true") != std::string::npos);
}

TEST_CASE("malformed files produce a parse error exit") {
    const RunResult r = run("--out " + fx().dir.string() + " rep-info " + fx().p("bad.rep"));
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("parse error") != std::string::npos);
}

TEST_CASE("domination exit codes are a stable contract") {
    const std::string base = "--out " + fx().dir.string() + " dominate ";
    const std::string flags = " --radius 3 --edge 0.4";
    CHECK(run(base + fx().p("j.rep") + " " + fx().p("trivial.rep") + flags).exit_code == 0);
    CHECK(run(base + fx().p("j.rep") + " " + fx().p("j.rep") + flags).exit_code == 1);
    CHECK(run(base + fx().p("j.rep") + " " + fx().p("axis.rep") + flags).exit_code == 0);
    // Non-Fuchsian domain is rejected.
    CHECK(run(base + fx().p("trivial.rep") + " " + fx().p("j.rep") + flags).exit_code == 3);
}

TEST_CASE("verification suites pass and are deterministic") {
    const std::string out = "--out " + fx().dir.string() + " ";
    const RunResult b1 = run(out + "verify busemann --seed 11");
    const RunResult b2 = run(out + "verify busemann --seed 11");
    CHECK(b1.exit_code == 0);
    CHECK(b1.output == b2.output);
    CHECK(b1.output.find("\"pass\": true") != std::string::npos);

    CHECK(run(out + "verify angles --seed 3").exit_code == 0);
}

TEST_CASE("harmonic command writes its artifacts") {
    const fs::path out = fx().dir / "harmonic_out";
    const RunResult r = run("--out " + out.string() + " harmonic " + fx().p("j.rep") + " " +
                            fx().p("axis.rep") + " --edge 0.4");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "domain.mesh"));
    CHECK(fs::exists(out / "map.txt"));
    CHECK(fs::exists(out / "harmonic.json"));
}

TEST_CASE("psi command round trips the trivial target") {
    const fs::path out = fx().dir / "psi_out";
    const RunResult r = run("--out " + out.string() + " psi --forward --fn 2,2.2,2.4,0.3,-0.2,0.5 " +
                            fx().p("trivial.rep") + " --edge 0.45");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "psi.json"));
    CHECK(r.output.find("\"direction\": \"forward\"") != std::string::npos);
}
