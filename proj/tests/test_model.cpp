#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace bpvar;

TEST_CASE("nodes are found by id, tasks and events by label") {
    const ProcessModel m = testutil::model_from(R"(// vardl
process p {
  start s;
  task A "Greet customer" role clerk;
  event E "Order received";
  gateway g xor;
  task B1;
  task B2;
  gateway j xor;
  end e;
  s -> A;
  A -> E;
  E -> g;
  g -> B1;
  g -> B2;
  B1 -> j;
  B2 -> j;
  j -> e;
}
)",
                                               "p");

    REQUIRE(m.find_node("A") != nullptr);
    CHECK(m.find_node("A")->label == "Greet customer");
    CHECK(m.find_node("A")->role == "clerk");
    CHECK(m.find_node("missing") == nullptr);

    REQUIRE(m.find_by_label("Order received") != nullptr);
    CHECK(m.find_by_label("Order received")->kind == NodeKind::event);
    // Gateways are anonymous routing elements: never addressable by label.
    CHECK(m.find_by_label("g") == nullptr);

    CHECK(m.predecessors("j") == std::vector<std::string>{"B1", "B2"});
    CHECK(m.successors("g") == std::vector<std::string>{"B1", "B2"});
    CHECK(m.has_edge("A", "E"));
    CHECK_FALSE(m.has_edge("E", "A"));
}

TEST_CASE("fresh ids never collide with existing nodes") {
    const ProcessModel m = testutil::chain({"X"});
    CHECK(m.fresh_id("new") == "new");
    CHECK(m.fresh_id("t0") == "t0_2");

    ProcessModel two = m;
    two.nodes.push_back({"t0_2", NodeKind::task, {}, "Y", "", {}});
    CHECK(two.fresh_id("t0") == "t0_3");
}

TEST_CASE("a well-formed model validates cleanly") {
    const ProcessModel m = testutil::model_from(R"(// vardl
process ok {
  start s;
  task A;
  gateway split and;
  task B1;
  task B2;
  gateway join and;
  end e;
  s -> A;
  A -> split;
  split -> B1;
  split -> B2;
  B1 -> join;
  B2 -> join;
  join -> e;
}
)",
                                                "ok");
    const ValidationReport report = validate_structure(m);
    CHECK(report.ok());
    CHECK(report.to_string().empty());
}

namespace {

ProcessModel tiny_valid() { return testutil::chain({"A", "B"}); }

bool has_violation(const ValidationReport& r, const std::string& rule) {
    for (const auto& v : r.violations)
        if (v.rule == rule) return true;
    return false;
}

} // namespace

TEST_CASE("every structural invariant is enforced") {
    SECTION("duplicate node ids") {
        ProcessModel m = tiny_valid();
        m.nodes.push_back({"t0", NodeKind::task, {}, "dup", "", {}});
        CHECK(has_violation(validate_structure(m), "duplicate-node-id"));
    }
    SECTION("dangling edge endpoints") {
        ProcessModel m = tiny_valid();
        m.edges.push_back({"t0", "ghost", ""});
        const auto report = validate_structure(m);
        CHECK(has_violation(report, "dangling-target"));
    }
    SECTION("self loops") {
        ProcessModel m = tiny_valid();
        m.edges.push_back({"t0", "t0", ""});
        CHECK(has_violation(validate_structure(m), "self-loop"));
    }
    SECTION("start and end counts") {
        ProcessModel m = tiny_valid();
        m.nodes.push_back({"s2", NodeKind::start, {}, "", "", {}});
        m.edges.push_back({"s2", "t1", ""});
        CHECK(has_violation(validate_structure(m), "start-count"));

        ProcessModel noend = tiny_valid();
        noend.nodes.erase(noend.nodes.end() - 1);
        noend.edges.erase(noend.edges.end() - 1);
        CHECK(has_violation(validate_structure(noend), "end-count"));
    }
    SECTION("nodes off every start-to-end path are orphans") {
        ProcessModel m = tiny_valid();
        m.nodes.push_back({"island", NodeKind::task, {}, "island", "", {}});
        CHECK(has_violation(validate_structure(m), "orphan"));
    }
    SECTION("gateways must branch or merge and carry a kind") {
        ProcessModel m = tiny_valid();
        // A gateway spliced into a straight line neither branches nor merges.
        m.nodes.push_back({"g", NodeKind::gateway, GatewayKind::xor_, "", "", {}});
        m.edges.erase(m.edges.begin() + 1); // t0 -> t1
        m.edges.push_back({"t0", "g", ""});
        m.edges.push_back({"g", "t1", ""});
        CHECK(has_violation(validate_structure(m), "gateway-fan"));

        ProcessModel k = tiny_valid();
        k.nodes[1].gateway = GatewayKind::and_; // a task carrying a gateway kind
        CHECK(has_violation(validate_structure(k), "gateway-kind"));
    }
    SECTION("tasks take at most one incoming and one outgoing edge") {
        ProcessModel m = tiny_valid();
        m.edges.push_back({"s", "t1", ""});
        CHECK(has_violation(validate_structure(m), "task-fan-in"));

        ProcessModel o = tiny_valid();
        o.edges.push_back({"t0", "e", ""});
        CHECK(has_violation(validate_structure(o), "task-fan-out"));
    }
}

TEST_CASE("violations come out sorted and described") {
    ProcessModel m = testutil::chain({"A"});
    m.edges.push_back({"zz", "t0", ""});
    m.edges.push_back({"aa", "t0", ""});
    const ValidationReport report = validate_structure(m);
    REQUIRE(report.violations.size() >= 2);
    CHECK(std::is_sorted(report.violations.begin(), report.violations.end()));
    CHECK(report.to_string().find("dangling-target") != std::string::npos);
}

TEST_CASE("cycle detection distinguishes loops from reconvergence") {
    ProcessModel loop = testutil::chain({"A", "B"});
    loop.edges.push_back({"t1", "t0", ""});
    CHECK(has_cycle(loop));

    // Reconvergent (diamond) flow is not a cycle.
    const ProcessModel diamond = testutil::model_from(R"(// vardl
process d {
  start s;
  gateway g xor;
  task A;
  task B;
  gateway j xor;
  end e;
  s -> g;
  g -> A;
  g -> B;
  A -> j;
  B -> j;
  j -> e;
}
)",
                                                      "d");
    CHECK_FALSE(has_cycle(diamond));
}

TEST_CASE("models compare by value") {
    const ProcessModel a = testutil::chain({"A", "B"});
    ProcessModel b = a;
    CHECK(a == b);
    b.nodes[1].attrs["k"] = "v";
    CHECK_FALSE(a == b);
}
