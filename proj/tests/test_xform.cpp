#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

using namespace has;
using has::test::default_catalog;
using has::test::sample;
using has::test::load_fixture;

namespace {

xform::BillOfMaterials fixture_bom() { return xform::parse_bom(load_fixture("bom.json")); }

apm::AssemblyProcessModel flat(const std::vector<std::string>& acts,
                               const std::vector<std::pair<std::string, std::string>>& edges) {
    return test::make_flat_apm(acts, edges, {});
}

}  // namespace

TEST_CASE("bom import builds the tree and expands quantities") {
    auto liaisons = xform::parse_liaisons(load_fixture("bom_liaisons.json"));
    auto res = xform::import_bom(fixture_bom(), liaisons);
    CHECK(res.warnings.conformant());
    CHECK_FALSE(res.warnings.has_rule("LIAISONS_MISSING"));

    auto levels = psm::decomposition_levels(res.model);
    CHECK(levels.count("frame"));
    CHECK(levels.count("panel"));
    CHECK(levels.count("bolt-1"));  // quantity 2 expands with suffixes
    CHECK(levels.count("bolt-2"));
    CHECK(levels.count("bolt") == 0);
    CHECK(psm::validate_psm(res.model).conformant());
}

TEST_CASE("bom import without liaisons warns LIAISONS_MISSING") {
    auto res = xform::import_bom(fixture_bom(), std::nullopt);
    CHECK(res.warnings.has_rule("LIAISONS_MISSING"));
    CHECK(res.model.connectors.empty());
}

TEST_CASE("cyclic parent references are BOM_CYCLE") {
    xform::BillOfMaterials b;
    b.lines = {{"a", "b", 1, ""}, {"b", "a", 1, ""}};
    try {
        xform::import_bom(b, std::nullopt);
        FAIL("expected BOM_CYCLE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BomCycle);
    }
}

TEST_CASE("quantity above one on an internal line is rejected") {
    xform::BillOfMaterials b;
    b.lines = {{"box", "", 2, ""}, {"lid", "box", 1, ""}, {"base", "box", 1, ""}};
    CHECK_THROWS_AS(xform::import_bom(b, std::nullopt), Error);
}

TEST_CASE("duplicate and dangling bom lines are rejected") {
    xform::BillOfMaterials dup;
    dup.lines = {{"a", "", 1, ""}, {"a", "", 1, ""}};
    CHECK_THROWS_AS(xform::import_bom(dup, std::nullopt), Error);
    xform::BillOfMaterials dangling;
    dangling.lines = {{"a", "ghost", 1, ""}};
    CHECK_THROWS_AS(xform::import_bom(dangling, std::nullopt), Error);
}

TEST_CASE("generated process tree mirrors the product tree") {
    auto m = xform::generate_pi_apm(sample(), {}, default_catalog());
    // root level: one child process for K, one activity per top-level connector
    CHECK(m.root.child_processes.size() == 1);
    CHECK(m.root.activities.size() == 3);
    CHECK(m.root.child_processes[0].id == "proc-K");
    CHECK(m.root.child_processes[0].activities.size() == 1);
    CHECK(m.root.child_processes[0].activities[0].id == "act-CK");
    CHECK(m.root.child_processes[0].dcl == 1);
    CHECK(m.root.kind == apm::ProcessKind::CompositeChild);
    CHECK(m.root.child_processes[0].kind == apm::ProcessKind::PrimitiveChilds);

    // the sub-assembly completes before the joints that touch it
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto& e : m.root.precedence) edges.insert({e.before, e.after});
    CHECK(edges.count({"proc-K", "act-C2"}));
    CHECK(edges.count({"proc-K", "act-C3"}));
    CHECK_FALSE(edges.count({"proc-K", "act-C1"}));
}

TEST_CASE("generated activities follow the feed/join template") {
    auto m = xform::generate_pi_apm(sample(), {}, default_catalog());
    const auto& act = m.root.activities[0];  // act-C1, P1-P2
    REQUIRE(act.operations.size() == 3);     // two feeds + one join
    CHECK(act.operations[0].id == "act-C1.feed-P1");
    CHECK(act.operations[1].id == "act-C1.feed-P2");
    CHECK(act.operations[2].id == "act-C1.join");
    REQUIRE(act.operations[2].actions.size() == 1);
    const auto& join = act.operations[2].actions[0];
    CHECK(join.action == "insert");
    CHECK(join.bindings.at("liaison_a") == "P1.l1");
    // each feed is ordered before the join
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto& e : act.precedence) edges.insert({e.before, e.after});
    CHECK(edges.count({"act-C1.feed-P1", "act-C1.join"}));
    CHECK(edges.count({"act-C1.feed-P2", "act-C1.join"}));
}

TEST_CASE("smallest product: one connector, one activity, no child process") {
    io::json j = {{"kind", "psm"},
                  {"id", "mini"},
                  {"product_name", "mini"},
                  {"parts",
                   {{{"id", "a"}, {"liaisons", {{{"id", "a.l"}}}}},
                    {{"id", "b"}, {"liaisons", {{{"id", "b.l"}}}}}}},
                  {"connectors",
                   {{{"id", "c"},
                     {"endpoints",
                      {{{"part", "a"}, {"liaison", "a.l"}}, {{"part", "b"}, {"liaison", "b.l"}}}}}}},
                  {"variants", io::json::array()}};
    auto m = xform::generate_pi_apm(psm::parse(j), {}, default_catalog());
    CHECK(m.root.child_processes.empty());
    REQUIRE(m.root.activities.size() == 1);
    CHECK(m.root.activities[0].id == "act-c");
    CHECK(apm::validate_apm(m, psm::parse(j), default_catalog()).conformant());
}

TEST_CASE("unresolved variant annotations block generation") {
    auto m = psm::parse(load_fixture("variants.json"));
    try {
        xform::generate_pi_apm(m, {}, default_catalog());
        FAIL("expected UNRESOLVED_VARIANT");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnresolvedVariant);
    }
    // after resolution it goes through
    auto resolved = psm::resolve_variant(m, "basic");
    CHECK_NOTHROW(xform::generate_pi_apm(resolved, {}, default_catalog()));
}

TEST_CASE("extra constraints are merged and restrict the sequences") {
    xform::ConstraintSet cs;
    cs.edges = {{"act-C1", "act-C2", "fixture access"}};
    auto free_m = xform::generate_pi_apm(sample(), {}, default_catalog());
    auto tied_m = xform::generate_pi_apm(sample(), cs, default_catalog());
    CHECK(xform::count_sequences(tied_m, "proc-root") <
          xform::count_sequences(free_m, "proc-root"));
}

TEST_CASE("contradictory constraints are CONSTRAINT_CYCLE") {
    xform::ConstraintSet cs;
    cs.edges = {{"act-C1", "act-C2", ""}, {"act-C2", "act-C1", ""}};
    try {
        xform::generate_pi_apm(sample(), cs, default_catalog());
        FAIL("expected CONSTRAINT_CYCLE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConstraintCycle);
    }
}

TEST_CASE("constraints must pair members of one level") {
    xform::ConstraintSet cs;
    cs.edges = {{"act-C1", "act-CK", ""}};  // different levels
    CHECK_THROWS_AS(xform::generate_pi_apm(sample(), cs, default_catalog()), Error);
}

TEST_CASE("enumeration of three unordered members") {
    auto m = flat({"a", "b", "c"}, {});
    auto e = xform::enumerate_sequences(m, "proc-root", 100);
    CHECK(e.count == 6);
    CHECK_FALSE(e.truncated);
    CHECK(e.sequences == test::brute_force_linear_extensions({"a", "b", "c"}, {}));
    CHECK(e.sequences.front() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("a chain admits exactly one sequence") {
    auto m = flat({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}});
    auto e = xform::enumerate_sequences(m, "proc-root", 100);
    REQUIRE(e.count == 1);
    CHECK(e.sequences[0] == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("diamond admits two sequences") {
    std::vector<std::pair<std::string, std::string>> edges{
        {"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}};
    auto m = flat({"a", "b", "c", "d"}, edges);
    auto e = xform::enumerate_sequences(m, "proc-root", 100);
    CHECK(e.count == 2);
    CHECK(e.sequences == test::brute_force_linear_extensions({"a", "b", "c", "d"}, edges));
    CHECK(xform::count_sequences(m, "proc-root") == 2);
}

TEST_CASE("limit truncates the enumeration") {
    auto m = flat({"a", "b", "c"}, {});
    auto e = xform::enumerate_sequences(m, "proc-root", 2);
    CHECK(e.truncated);
    CHECK(e.count == 2);
    CHECK(e.sequences.size() == 2);
    // and the prefix matches the untruncated enumeration
    auto full = xform::enumerate_sequences(m, "proc-root", 100);
    CHECK(std::equal(e.sequences.begin(), e.sequences.end(), full.sequences.begin()));
}

TEST_CASE("counting matches enumeration") {
    CHECK(xform::count_sequences(flat({"a", "b", "c", "d"}, {}), "proc-root") == 24);
    // two independent chains of three
    auto m = flat({"a1", "a2", "a3", "b1", "b2", "b3"},
                  {{"a1", "a2"}, {"a2", "a3"}, {"b1", "b2"}, {"b2", "b3"}});
    CHECK(xform::count_sequences(m, "proc-root") == 20);  // C(6,3)
    CHECK(xform::enumerate_sequences(m, "proc-root", 1000).count == 20);
}

TEST_CASE("counting caps at sixteen members") {
    std::vector<std::string> many;
    for (int i = 0; i < 17; ++i) many.push_back("n" + std::to_string(i + 10));
    auto m = flat(many, {});
    try {
        xform::count_sequences(m, "proc-root");
        FAIL("expected LEVEL_TOO_LARGE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LevelTooLarge);
    }
    // enumeration with a limit still works
    auto e = xform::enumerate_sequences(m, "proc-root", 3);
    CHECK(e.truncated);
    CHECK(e.sequences.size() == 3);
}

TEST_CASE("random levels: enumeration equals the permutation filter") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<std::string> acts;
        std::uniform_int_distribution<int> n_pick(2, 6);
        int n = n_pick(rng);
        for (int i = 0; i < n; ++i) acts.push_back("a" + std::to_string(i));
        auto edges = test::random_dag(acts, 0.4, rng);
        auto m = flat(acts, edges);
        auto e = xform::enumerate_sequences(m, "proc-root", 100000);
        auto oracle = test::brute_force_linear_extensions(acts, edges);
        CHECK(e.sequences == oracle);
        CHECK(xform::count_sequences(m, "proc-root") ==
              static_cast<std::int64_t>(oracle.size()));
    }
}

TEST_CASE("enumeration of an unknown level id") {
    CHECK_THROWS_AS(xform::enumerate_sequences(flat({"a"}, {}), "proc-ghost", 10), Error);
}

TEST_CASE("sample root enumeration honours the sub-assembly edges") {
    auto m = xform::generate_pi_apm(sample(), {}, default_catalog());
    auto e = xform::enumerate_sequences(m, "proc-root", 1000);
    auto oracle = test::brute_force_linear_extensions(
        {"proc-K", "act-C1", "act-C2", "act-C3"},
        {{"proc-K", "act-C2"}, {"proc-K", "act-C3"}});
    CHECK(e.sequences == oracle);
    // the inner level is a single member
    auto inner = xform::enumerate_sequences(m, "proc-K", 10);
    REQUIRE(inner.count == 1);
    CHECK(inner.sequences[0] == std::vector<std::string>{"act-CK"});
}
