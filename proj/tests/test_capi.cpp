#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "sggp.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::path("capi_scratch") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void put_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kUnitsFile = R"(
units = mass,length,time
range = -2..2
var F = 1,1,-2
var K = 1,0,-2
var C = 1,0,-1
var t = 0,0,1
target = 0,1,0
ops = add,mul,div,exp
constants = 1,2,0.5
)";

} // namespace

TEST_CASE("version and error strings") {
    CHECK(std::strcmp(sggp_version(), "0.1.0") == 0);
    CHECK(sggp_last_error() != nullptr);
}

TEST_CASE("grammar lifecycle through the C API") {
    sggp_grammar* g = nullptr;
    REQUIRE(sggp_grammar_parse_text("<s> ::= a | b <s> ;", &g) == SGGP_OK);
    REQUIRE(g != nullptr);

    int nts = 0, derivs = 0;
    long long bytes = 0;
    CHECK(sggp_grammar_stats(g, &nts, &derivs, &bytes) == SGGP_OK);
    CHECK(nts == 1);
    CHECK(derivs == 2);
    CHECK(bytes > 0);

    char* text = nullptr;
    REQUIRE(sggp_grammar_render(g, &text) == SGGP_OK);
    REQUIRE(text != nullptr);
    sggp_grammar* again = nullptr;
    REQUIRE(sggp_grammar_parse_text(text, &again) == SGGP_OK);
    char* text2 = nullptr;
    REQUIRE(sggp_grammar_render(again, &text2) == SGGP_OK);
    CHECK(std::strcmp(text, text2) == 0);
    sggp_string_free(text);
    sggp_string_free(text2);
    sggp_grammar_free(again);

    fs::path dir = scratch("grammar");
    CHECK(sggp_grammar_write_file(g, (dir / "g.bnf").string().c_str()) == SGGP_OK);
    sggp_grammar* from_file = nullptr;
    CHECK(sggp_grammar_parse_file((dir / "g.bnf").string().c_str(), &from_file) == SGGP_OK);
    sggp_grammar_free(from_file);
    sggp_grammar_free(g);
}

TEST_CASE("error codes and messages") {
    sggp_grammar* g = nullptr;
    CHECK(sggp_grammar_parse_text(nullptr, &g) == SGGP_ERR_INVALID);
    CHECK(sggp_grammar_parse_text("<s> ::= <undeclared> ;", &g) == SGGP_ERR_PARSE);
    CHECK(std::string(sggp_last_error()).find("undeclared") != std::string::npos);
    CHECK(sggp_grammar_parse_file("missing/file.bnf", &g) == SGGP_ERR_IO);

    double v = 0;
    CHECK(sggp_kelvin_voigt(1, 0, 1, 1, &v) == SGGP_ERR_INVALID);
    CHECK(sggp_kelvin_voigt(1, 1, 1, 1, nullptr) == SGGP_ERR_INVALID);

    fs::path dir = scratch("errors");
    put_file(dir / "bad_units.txt", "units = a\nrange = 0..0\ntarget = 0\nwat = 1\n");
    CHECK(sggp_grammar_generate((dir / "bad_units.txt").string().c_str(), &g, nullptr) ==
          SGGP_ERR_PARSE);

    // infeasible unit system: no variables at all
    put_file(dir / "no_vars.txt", "units = a\nrange = 0..0\ntarget = 0\n");
    CHECK(sggp_grammar_generate((dir / "no_vars.txt").string().c_str(), &g, nullptr) ==
          SGGP_ERR_INVALID);
}

TEST_CASE("dimensional grammar generation through the C API") {
    fs::path dir = scratch("gen");
    put_file(dir / "units.txt", kUnitsFile);
    sggp_grammar* g = nullptr;
    int before_prune = 0;
    REQUIRE(sggp_grammar_generate((dir / "units.txt").string().c_str(), &g, &before_prune) ==
            SGGP_OK);
    CHECK(before_prune == 125);
    int nts = 0, derivs = 0;
    CHECK(sggp_grammar_stats(g, &nts, &derivs, nullptr) == SGGP_OK);
    CHECK(nts > 1);
    CHECK(derivs > nts);
    sggp_grammar_free(g);
}

TEST_CASE("kelvin-voigt closed form through the C API") {
    double v = -1;
    REQUIRE(sggp_kelvin_voigt(1, 1, 1, 1, &v) == SGGP_OK);
    CHECK(std::fabs(v - (1.0 - std::exp(-1.0))) < 1e-15);
}

TEST_CASE("campaign and reports through the C API") {
    fs::path dir = scratch("campaign");
    put_file(dir / "grammar.bnf",
             "<s> ::= <e> ;\n<e> ::= add <e> <e> | div <e> <e> | F | K | t ;\n");
    put_file(dir / "problem.cfg", "train_materials = 3\ntest_materials = 2\ntime_points = 4\n");
    put_file(dir / "params.cfg", "population = 15\ngenerations = 20\nd_max = 6\n");
    std::string out_dir = (dir / "out").string();

    CHECK(sggp_run_campaign("no-such-algo", (dir / "grammar.bnf").string().c_str(), nullptr,
                            nullptr, nullptr, 1, 1, out_dir.c_str(), 1) == SGGP_ERR_INVALID);
    CHECK(sggp_run_campaign("sggp-scalar", nullptr, nullptr, nullptr, nullptr, 1, 1,
                            out_dir.c_str(), 1) == SGGP_ERR_INVALID);

    REQUIRE(sggp_run_campaign("sggp-scalar", (dir / "grammar.bnf").string().c_str(), nullptr,
                              (dir / "problem.cfg").string().c_str(),
                              (dir / "params.cfg").string().c_str(), 2, 7, out_dir.c_str(),
                              2) == SGGP_OK);
    CHECK(fs::exists(fs::path(out_dir) / "run_001.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "manifest.json"));

    char* bloat = nullptr;
    REQUIRE(sggp_report_bloat(out_dir.c_str(), 2.0, &bloat) == SGGP_OK);
    REQUIRE(bloat != nullptr);
    std::string bloat_text = bloat;
    sggp_string_free(bloat);
    CHECK(bloat_text.find("run_000.csv") != std::string::npos);
    CHECK(bloat_text.find("run_001.csv") != std::string::npos);
    CHECK(bloat_text.find("_extended") == std::string::npos);

    char* gen = nullptr;
    REQUIRE(sggp_report_generalization(out_dir.c_str(), &gen) == SGGP_OK);
    REQUIRE(gen != nullptr);
    std::string gen_text = gen;
    sggp_string_free(gen);
    CHECK(gen_text.find("best_000.txt") != std::string::npos);
    CHECK(slurp(fs::path(out_dir) / "generalization.csv") == gen_text);
    CHECK(fs::exists(fs::path(out_dir) / "curve_run000_mat0.csv"));

    CHECK(sggp_report_bloat("missing/dir", 2.0, &bloat) != SGGP_OK);
    CHECK(sggp_report_generalization("missing/dir", &gen) != SGGP_OK);
}
