#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"

using namespace has;
using has::test::default_catalog;
using has::test::sample;
using has::test::fixture_path;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code;
    std::string out;
};

// Run the installed binary; stderr is merged unless byte-exact output matters.
RunResult run(const std::string& args, bool merge_stderr = true) {
    std::string cmd = std::string(HAS_CLI) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    int status = pclose(p);
    return {WEXITSTATUS(status), out};
}

struct TempDir {
    fs::path path;
    TempDir()
        : path(fs::temp_directory_path() /
               ("has-cli-" + std::to_string(std::random_device{}()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const io::json& j) { io::write_file(path, io::dump(j)); }

}  // namespace

TEST_CASE("validate accepts the fixtures and rejects broken input") {
    for (const char* f : {"sample.json", "cell2.json", "catalog.json", "bom.json"}) {
        auto r = run("validate " + fixture_path(f));
        CHECK_MESSAGE(r.exit_code == 0, f, ": ", r.out);
        if (std::string(f) != "bom.json")
            CHECK(r.out.find("conformant") != std::string::npos);
    }

    TempDir t;
    auto broken = sample();
    broken.connectors.push_back({"bad", {{"P1", "P1.l1"}}, {}});
    write(t.file("broken.json"), psm::to_json(broken));
    auto r = run("validate " + t.file("broken.json"));
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("CONNECTOR_ARITY") != std::string::npos);
}

TEST_CASE("gen-pi output matches the library byte for byte") {
    TempDir t;
    auto r = run("gen-pi --psm " + fixture_path("sample.json") + " --catalog " +
                 fixture_path("catalog.json") + " -o " + t.file("pi.json"));
    REQUIRE_MESSAGE(r.exit_code == 0, r.out);
    auto expected = io::dump(apm::to_json(xform::generate_pi_apm(sample(), {}, default_catalog())));
    CHECK(io::read_file(t.file("pi.json")) == expected);

    auto v = run("validate " + t.file("pi.json") + " --psm " + fixture_path("sample.json") +
                 " --catalog " + fixture_path("catalog.json"));
    CHECK_MESSAGE(v.exit_code == 0, v.out);
}

TEST_CASE("import-bom writes a conformant model and warns without liaisons") {
    TempDir t;
    auto r = run("import-bom --bom " + fixture_path("bom.json") + " --liaisons " +
                 fixture_path("bom_liaisons.json") + " -o " + t.file("psm.json") +
                 " --id demo --product-name demo-product");
    REQUIRE_MESSAGE(r.exit_code == 0, r.out);
    auto m = psm::parse(io::parse_text(io::read_file(t.file("psm.json")), "psm"));
    CHECK(m.id == "demo");
    CHECK(psm::validate_psm(m).conformant());

    auto warned = run("import-bom --bom " + fixture_path("bom.json") + " -o " + t.file("w.json"));
    CHECK(warned.exit_code == 0);
    CHECK(warned.out.find("LIAISONS_MISSING") != std::string::npos);
}

TEST_CASE("enumerate prints sequences and exact counts") {
    TempDir t;
    auto diamond = test::make_flat_apm(
        {"a", "b", "c", "d"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}}, {});
    write(t.file("diamond.json"), apm::to_json(diamond));

    auto count = run("enumerate --apm " + t.file("diamond.json") + " --level proc-root --count-only");
    CHECK(count.exit_code == 0);
    CHECK(count.out == "2\n");

    auto full = run("enumerate --apm " + t.file("diamond.json") + " --level proc-root");
    CHECK(full.out == "a b c d\na c b d\ncount 2\n");

    auto limited = run("enumerate --apm " + t.file("diamond.json") + " --level proc-root --limit 1");
    CHECK(limited.out == "a b c d\ncount 1 (truncated)\n");

    std::vector<std::string> many;
    for (int i = 0; i < 17; ++i) many.push_back("n" + std::to_string(i + 10));
    write(t.file("big.json"), apm::to_json(test::make_flat_apm(many, {}, {})));
    auto capped = run("enumerate --apm " + t.file("big.json") + " --level proc-root --count-only");
    CHECK(capped.exit_code == 2);
    CHECK(capped.out.find("LEVEL_TOO_LARGE") != std::string::npos);
}

TEST_CASE("lower writes the scheduled model and reports the makespan") {
    TempDir t;
    write(t.file("pi.json"), apm::to_json(xform::generate_pi_apm(sample(), {}, default_catalog())));
    auto r = run("lower --apm " + t.file("pi.json") + " --platform " + fixture_path("cell2.json") +
                 " --catalog " + fixture_path("catalog.json") + " -o " + t.file("ps.json"));
    REQUIRE_MESSAGE(r.exit_code == 0, r.out);

    auto expected = lower::lower_apm(xform::generate_pi_apm(sample(), {}, default_catalog()),
                                     test::cell2(), default_catalog(), {});
    CHECK(r.out == "makespan " + expected.platform_binding->schedule.makespan.str() + "\n");
    CHECK(io::read_file(t.file("ps.json")) == io::dump(apm::to_json(expected)));

    auto bad = run("lower --apm " + t.file("pi.json") + " --platform " + fixture_path("cell2.json") +
                   " --catalog " + fixture_path("catalog.json") + " --policy wat -o " +
                   t.file("x.json"));
    CHECK(bad.exit_code == 4);
}

TEST_CASE("simulate emits the library report") {
    TempDir t;
    auto ps = lower::lower_apm(xform::generate_pi_apm(sample(), {}, default_catalog()),
                               test::cell2(), default_catalog(), {});
    write(t.file("ps.json"), apm::to_json(ps));

    auto r = run("simulate --apm-ps " + t.file("ps.json") + " --platform " +
                     fixture_path("cell2.json") + " --quantity 2 --report " + t.file("rep.json"),
                 false);
    REQUIRE_MESSAGE(r.exit_code == 0, r.out);
    auto expected = io::dump(sim::report_to_json(
        sim::simulate(ps, test::cell2(), {2, Duration{}})));
    CHECK(r.out == expected);
    CHECK(io::read_file(t.file("rep.json")) == expected);

    auto table = run("simulate --apm-ps " + t.file("ps.json") + " --platform " +
                     fixture_path("cell2.json") + " --table");
    CHECK(table.out.find("total makespan") != std::string::npos);

    // a PI-APM cannot be simulated
    write(t.file("pi.json"), apm::to_json(xform::generate_pi_apm(sample(), {}, default_catalog())));
    auto pi = run("simulate --apm-ps " + t.file("pi.json") + " --platform " +
                  fixture_path("cell2.json"));
    CHECK(pi.exit_code == 2);
}

TEST_CASE("compare ranks reports by makespan") {
    TempDir t;
    auto ps = lower::lower_apm(xform::generate_pi_apm(sample(), {}, default_catalog()),
                               test::cell2(), default_catalog(), {});
    write(t.file("ps.json"), apm::to_json(ps));
    run("simulate --apm-ps " + t.file("ps.json") + " --platform " + fixture_path("cell2.json") +
        " --report " + t.file("q1.json"));
    run("simulate --apm-ps " + t.file("ps.json") + " --platform " + fixture_path("cell2.json") +
        " --quantity 3 --report " + t.file("q3.json"));
    auto r = run("compare " + t.file("q3.json") + " " + t.file("q1.json"));
    REQUIRE_MESSAGE(r.exit_code == 0, r.out);
    auto first_line = r.out.substr(0, r.out.find('\n'));
    CHECK(first_line.find("q1.json") != std::string::npos);  // the faster scenario leads
}

TEST_CASE("repo store, resolve and list round-trip") {
    TempDir t;
    std::string repo_flag = "--repo " + t.file("repo") + " ";
    auto stored = run(repo_flag + "repo store " + fixture_path("sample.json"));
    REQUIRE_MESSAGE(stored.exit_code == 0, stored.out);
    CHECK(stored.out == "has://main/psm/sample@1\n");

    auto resolved = run(repo_flag + "repo resolve has://main/psm/sample@1", false);
    CHECK(resolved.out == io::read_file(fixture_path("sample.json")));

    auto listed = run(repo_flag + "repo list");
    CHECK(listed.out.find("has://main/psm/sample@1  sha256:") != std::string::npos);

    auto missing = run(repo_flag + "repo resolve has://main/psm/ghost@1");
    CHECK(missing.exit_code == 3);
}

TEST_CASE("job add and run against a seeded repository") {
    TempDir t;
    std::string repo_flag = "--repo " + t.file("repo") + " ";
    run(repo_flag + "repo store " + fixture_path("sample.json"));
    run(repo_flag + "repo store " + fixture_path("catalog.json") + " --name default");
    write(t.file("pi.json"), apm::to_json(xform::generate_pi_apm(sample(), {}, default_catalog())));
    run(repo_flag + "repo store " + t.file("pi.json") + " --name sample");
    run(repo_flag + "repo store " + fixture_path("cell2.json"));

    auto added = run(repo_flag + "job add " + fixture_path("job_sample.json") + " --name sample");
    REQUIRE_MESSAGE(added.exit_code == 0, added.out);
    CHECK(added.out == "has://main/job/sample@1\n");

    auto ran = run(repo_flag + "job run --job has://main/job/sample@1 " +
                   "--platform has://main/aspm/cell2@1");
    REQUIRE_MESSAGE(ran.exit_code == 0, ran.out);
    CHECK(ran.out == "has://main/apm-ps/sample@1\nhas://main/sim-report/sample@1\n");

    auto again = run(repo_flag + "job run --job has://main/job/sample@1 " +
                     "--platform has://main/aspm/cell2@1");
    CHECK(again.out == "has://main/apm-ps/sample@2\nhas://main/sim-report/sample@2\n");
}

TEST_CASE("deploy emits a self-contained bundle") {
    TempDir t;
    auto ps = lower::lower_apm(xform::generate_pi_apm(sample(), {}, default_catalog()),
                               test::cell2(), default_catalog(), {});
    write(t.file("ps.json"), apm::to_json(ps));
    auto r = run("deploy --apm-ps " + t.file("ps.json") + " --platform " +
                 fixture_path("cell2.json") + " --catalog " + fixture_path("catalog.json") +
                 " -o " + t.file("bundle"));
    REQUIRE_MESSAGE(r.exit_code == 0, r.out);
    CHECK(fs::exists(t.path / "bundle" / "apm-ps.json"));
    CHECK(fs::exists(t.path / "bundle" / "platform.json"));
    auto subset = apm::parse_catalog(
        io::parse_text(io::read_file(t.file("bundle/catalog.json")), "catalog"));
    std::set<std::string> ids;
    for (const auto& e : subset.entries) ids.insert(e.id);
    CHECK(ids == std::set<std::string>{"pick", "place", "insert"});

    // a PI-APM is refused
    write(t.file("pi.json"), apm::to_json(xform::generate_pi_apm(sample(), {}, default_catalog())));
    auto bad = run("deploy --apm-ps " + t.file("pi.json") + " --platform " +
                   fixture_path("cell2.json") + " --catalog " + fixture_path("catalog.json") +
                   " -o " + t.file("bundle2"));
    CHECK(bad.exit_code == 1);
}

TEST_CASE("exit codes distinguish failure families") {
    CHECK(run("validate /no/such/file.json").exit_code == 3);
    CHECK(run("").exit_code == 4);                 // a subcommand is required
    CHECK(run("frobnicate").exit_code == 4);       // unknown subcommand
}
