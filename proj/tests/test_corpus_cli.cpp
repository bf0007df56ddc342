#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bpvar/cli.hpp"
#include "bpvar/corpus.hpp"

#include "helpers.hpp"

using namespace bpvar;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const corpus::ManifestRow& find_row(const corpus::Manifest& man, const std::string& case_name,
                                    const std::string& approach, const std::string& variant) {
    for (const auto& row : man.rows)
        if (row.case_name == case_name && row.approach == approach && row.variant == variant)
            return row;
    FAIL("no manifest row for " + case_name + "/" + approach + "/" + variant);
    throw std::logic_error("unreachable");
}

fs::path write_temp(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "bpvar_cli_tests";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_CASE("the manifest inventories the full case-study matrix") {
    const corpus::Manifest man = corpus::load_manifest();

    CHECK(man.rows.size() == 55);

    std::map<std::string, int> by_approach;
    for (const auto& row : man.rows) by_approach[row.approach]++;
    CHECK(by_approach.at("provop") == 14);
    CHECK(by_approach.at("cepc") == 14);
    CHECK(by_approach.at("worklet") == 14);
    CHECK(by_approach.at("pesoa") == 13);

    for (const auto& row : man.rows) {
        INFO(row.case_name << "/" << row.approach << "/" << row.variant);
        CHECK(fs::exists(man.root / row.file));
        if (row.mode != "skip") {
            CHECK_FALSE(row.golden.empty());
            CHECK(fs::exists(man.root / row.golden));
        }
    }
}

TEST_CASE("representative rows replay against their goldens") {
    const corpus::Manifest man = corpus::load_manifest();

    SECTION("option derivation compared by isomorphism") {
        const auto r = corpus::run_row(man, find_row(man, "vehicle", "provop", "V0"));
        INFO(r.detail);
        CHECK(r.pass);
        CHECK(r.detail == "isomorphic");
    }
    SECTION("configuration compared without attributes") {
        const auto r = corpus::run_row(man, find_row(man, "vehicle", "cepc", "V0"));
        INFO(r.detail);
        CHECK(r.pass);
    }
    SECTION("late binding compared by trace sets") {
        const auto r = corpus::run_row(man, find_row(man, "vehicle", "worklet", "V0"));
        INFO(r.detail);
        CHECK(r.pass);
        CHECK(r.detail == "3 traces match");
    }
    SECTION("run-time options leave the build-time model untouched") {
        const auto r = corpus::run_row(man, find_row(man, "ebusiness", "provop", "V5"));
        INFO(r.detail);
        CHECK(r.pass);
        CHECK(r.detail.find("deferred replay reaches golden") != std::string::npos);
    }
    SECTION("documented gaps count as skips, not failures") {
        const auto r = corpus::run_row(man, find_row(man, "ebusiness", "cepc", "V5"));
        CHECK(r.pass);
        CHECK(r.detail.rfind("skipped: ", 0) == 0);
    }
}

TEST_CASE("every approach pair agrees on every covered variant") {
    const corpus::Manifest man = corpus::load_manifest();
    const corpus::CrossCheck cross = corpus::cross_check(man);

    for (const auto& p : cross.pairs) {
        INFO(p.case_name << "/" << p.variant << ": " << p.approach_a << " ~ " << p.approach_b
                         << " " << p.detail);
        CHECK(p.equal);
    }
    CHECK(cross.all_equal());
    CHECK(cross.pairs.size() == 79);

    REQUIRE(cross.skipped.size() == 1);
    CHECK(cross.skipped[0].case_name == "ebusiness");
    CHECK(cross.skipped[0].variant == "V5");
    CHECK(cross.skipped[0].approach == "cepc");
    CHECK_FALSE(cross.skipped[0].note.empty());
}

TEST_CASE("the corpus root can be pinned through the environment") {
    const fs::path empty_dir = fs::temp_directory_path() / "bpvar_no_manifest";
    fs::create_directories(empty_dir);

    setenv("BPVAR_CORPUS", empty_dir.string().c_str(), 1);
    CHECK_THROWS_MATCHES(corpus::load_manifest(), ImportError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("has no manifest.json")));

    const fs::path real = fs::absolute("corpus");
    setenv("BPVAR_CORPUS", real.string().c_str(), 1);
    CHECK(corpus::load_manifest().rows.size() == 55);

    unsetenv("BPVAR_CORPUS");
    fs::remove_all(empty_dir);
}

TEST_CASE("cli: check validates documents and reports positions") {
    SECTION("clean corpus documents pass") {
        const auto r = run_cli({"check", "corpus/vehicle/provop.vardl"});
        CHECK(r.code == 0);
        CHECK(r.out == "ok corpus/vehicle/provop.vardl\n");
        CHECK(r.err.empty());
    }
    SECTION("structural violations are listed per process") {
        const fs::path bad = write_temp("orphan.vardl", R"(// vardl
process bad {
  start s;
  task Stray;
  end e;
  s -> e;
}
)");
        const auto r = run_cli({"check", bad.string()});
        CHECK(r.code == 1);
        CHECK(r.out.find("orphan") != std::string::npos);
    }
    SECTION("syntax errors carry file, line, and column") {
        const fs::path bad = write_temp("typo.vardl", "// vardl\nprocess p {\n  start s\n}\n");
        const auto r = run_cli({"check", bad.string()});
        CHECK(r.code == 1);
        CHECK(r.err.find(":4:1: error: ") != std::string::npos);
    }
    SECTION("unreadable files are data errors, not usage errors") {
        const auto r = run_cli({"check", "no/such/file.vardl"});
        CHECK(r.code == 1);
        CHECK(r.err.find("error: ") != std::string::npos);
    }
}

TEST_CASE("cli: derive applies options by context or by explicit list") {
    SECTION("context-driven derivation narrates its decisions") {
        const auto r = run_cli({"derive", "--base", "corpus/ebusiness/provop.vardl", "--context",
                                "v4", "--process", "ebusiness_shop"});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("// vardl", 0) == 0);
        CHECK(r.out.find("process ebusiness_shop") != std::string::npos);
        CHECK(r.err.find("applied Option3") != std::string::npos);
        CHECK(r.err.find("applied Option5") != std::string::npos);
    }
    SECTION("an explicit option list is applied in the given order") {
        const auto ok = run_cli({"derive", "--base", "corpus/ebusiness/provop.vardl", "--process",
                                 "ebusiness_shop", "--option", "Option3", "--option", "Option5"});
        CHECK(ok.code == 0);

        const auto bad = run_cli({"derive", "--base", "corpus/ebusiness/provop.vardl", "--process",
                                  "ebusiness_shop", "--option", "Option5", "--option", "Option3"});
        CHECK(bad.code == 1);
        CHECK(bad.err.find("bpvar: error: ") != std::string::npos);
        CHECK(bad.err.find("needs label") != std::string::npos);
    }
    SECTION("unknown option names are rejected") {
        const auto r = run_cli({"derive", "--base", "corpus/ebusiness/provop.vardl", "--option",
                                "Option99"});
        CHECK(r.code == 1);
        CHECK(r.err.find("no option named 'Option99'") != std::string::npos);
    }
    SECTION("deriving without instructions is an error") {
        const auto r = run_cli({"derive", "--base", "corpus/ebusiness/provop.vardl"});
        CHECK(r.code == 1);
        CHECK(r.err.find("--context or at least one --option") != std::string::npos);
    }
}

TEST_CASE("cli: configure-cepc applies decision sets") {
    SECTION("a valid configuration prints the configured model") {
        const auto r = run_cli({"configure-cepc", "--model", "corpus/vehicle/cepc.vardl",
                                "--config", "v0"});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("// vardl", 0) == 0);
    }
    SECTION("unknown configurations are rejected") {
        const auto r = run_cli({"configure-cepc", "--model", "corpus/vehicle/cepc.vardl",
                                "--config", "v99"});
        CHECK(r.code == 1);
        CHECK(r.err.find("no configuration named 'v99'") != std::string::npos);
    }
}

TEST_CASE("cli: simulate executes late-binding models") {
    SECTION("a seeded run prints the event log") {
        const auto r = run_cli({"simulate", "--parent", "corpus/healthcare/worklet.vardl",
                                "--case", "case_v1", "--seed", "7"});
        CHECK(r.code == 0);
        CHECK(r.out.find("task-started") != std::string::npos);
        CHECK(r.out.find("task-completed") != std::string::npos);
        CHECK(r.out.find("worklet-selected") != std::string::npos);
    }
    SECTION("the same seed reproduces the same log") {
        const auto a = run_cli({"simulate", "--parent", "corpus/healthcare/worklet.vardl",
                                "--case", "case_v0", "--seed", "11"});
        const auto b = run_cli({"simulate", "--parent", "corpus/healthcare/worklet.vardl",
                                "--case", "case_v0", "--seed", "11"});
        CHECK(a.out == b.out);
    }
    SECTION("exhaustive mode enumerates the trace language") {
        const auto r = run_cli({"simulate", "--parent", "corpus/healthcare/worklet.vardl",
                                "--case", "case_v1", "--exhaustive", "--format",
                                "structured-export"});
        CHECK(r.code == 0);
        const nlohmann::json j = nlohmann::json::parse(r.out);
        CHECK(j.at("format") == "bpvar-traces");
        CHECK(j.at("truncated") == false);
        CHECK(j.at("traces").size() == 4);
    }
}

TEST_CASE("cli: resolve-pesoa resolves feature selections") {
    SECTION("a valid selection prints the resolved model and its notes") {
        const auto r = run_cli({"resolve-pesoa", "--model", "corpus/vehicle/pesoa.vardl",
                                "--select", "vehicle,maintenance_service"});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("// vardl", 0) == 0);
        CHECK_FALSE(r.err.empty());
    }
    SECTION("unknown features are rejected by the diagram") {
        const auto r = run_cli({"resolve-pesoa", "--model", "corpus/vehicle/pesoa.vardl",
                                "--select", "vehicle,ghost_feature"});
        CHECK(r.code == 1);
        CHECK(r.err.find("does not exist") != std::string::npos);
    }
}

TEST_CASE("cli: dot and diff render and compare processes") {
    SECTION("dot renders graphviz") {
        const auto r = run_cli({"dot", "--model", "corpus/vehicle/golden/vehicle_v0.vardl"});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("digraph ", 0) == 0);
        CHECK(r.out.find("rankdir=LR;") != std::string::npos);
    }
    SECTION("-o writes to a file instead of stdout") {
        const fs::path out_path = fs::temp_directory_path() / "bpvar_cli_tests" / "v0.dot";
        fs::create_directories(out_path.parent_path());
        const auto r = run_cli({"dot", "--model", "corpus/vehicle/golden/vehicle_v0.vardl", "-o",
                                out_path.string()});
        CHECK(r.code == 0);
        CHECK(r.out.empty());
        std::ifstream in(out_path);
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str().rfind("digraph ", 0) == 0);
    }
    SECTION("diff of identical models exits zero") {
        const auto r = run_cli({"diff", "--old", "corpus/vehicle/golden/vehicle_v0.vardl",
                                "--new", "corpus/vehicle/golden/vehicle_v0.vardl"});
        CHECK(r.code == 0);
        CHECK(r.out == "models are identical\n");
    }
    SECTION("diff of different models lists the changes and exits one") {
        const auto r = run_cli({"diff", "--old", "corpus/vehicle/golden/vehicle_v0.vardl",
                                "--new", "corpus/vehicle/golden/vehicle_v1.vardl"});
        CHECK(r.code == 1);
        CHECK_FALSE(r.out.empty());
    }
}

TEST_CASE("cli: corpus produces a machine-readable report") {
    const auto r = run_cli({"corpus", "--root", "corpus", "--json"});
    CHECK(r.code == 0);

    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("format") == "bpvar-corpus-report");
    CHECK(j.at("version") == 1);
    CHECK(j.at("pass") == true);
    CHECK(j.at("rows").size() == 55);
    CHECK(j.at("cross_check").size() == 79);
    CHECK(j.at("skipped").size() == 1);
    for (const auto& row : j.at("rows")) {
        INFO(row.dump());
        CHECK(row.at("pass") == true);
    }
    for (const auto& p : j.at("cross_check")) {
        INFO(p.dump());
        CHECK(p.at("equal") == true);
    }
}

TEST_CASE("cli: usage errors exit with code two") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"derive"}).code == 2);                       // missing --base
    CHECK(run_cli({"dot", "--model"}).code == 2);               // flag without value
    CHECK(run_cli({"corpus", "--format", "yaml"}).code == 2);   // unknown flag for verb

    const auto help = run_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("bpvar") != std::string::npos);
}
