#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace bpvar;

namespace {

const char* kParallelPair = R"(// vardl
process p {
  start s;
  task Head;
  gateway f and;
  task A;
  task B;
  gateway j and;
  task Tail;
  end e;
  s -> Head;
  Head -> f;
  f -> A;
  f -> B;
  A -> j;
  B -> j;
  j -> Tail;
  Tail -> e;
}
)";

ProcessModel fragment_of(const std::string& process_body, const std::string& name) {
    return testutil::model_from(process_body, name);
}

} // namespace

TEST_CASE("attributes are set by task label") {
    ProcessModel m = testutil::chain({"A", "B"});
    set_attribute(m, "B", "priority", "high");
    CHECK(m.find_by_label("B")->attrs.at("priority") == "high");

    set_attribute(m, "B", "priority", "low"); // overwrite
    CHECK(m.find_by_label("B")->attrs.at("priority") == "low");

    CHECK_THROWS_AS(set_attribute(m, "missing", "k", "v"), TargetNotFound);

    ProcessModel dup = testutil::chain({"A", "A"});
    CHECK_THROWS_AS(set_attribute(dup, "A", "k", "v"), AmbiguousLabels);
}

TEST_CASE("deleting a serial task reconnects around it and keeps the incoming guard") {
    ProcessModel m = testutil::model_from(R"(// vardl
process p {
  start s;
  gateway g xor;
  task A;
  task B;
  gateway j xor;
  end e;
  s -> g;
  g -> A "lane = \"a\"";
  g -> B "lane = \"b\"";
  A -> j;
  B -> j;
  j -> e;
}
)",
                                          "p");
    delete_node_with_reconnection(m, "A");
    REQUIRE(m.find_node("A") == nullptr);
    // The branch guard survives on the reconnection edge.
    bool found = false;
    for (const auto& e : m.edges)
        if (e.from == "g" && e.to == "j" && e.guard == "lane = \"a\"") found = true;
    CHECK(found);
    CHECK(validate_structure(m).ok());
}

TEST_CASE("emptying one branch of a parallel pair collapses the gateways") {
    ProcessModel m = fragment_of(kParallelPair, "p");
    delete_node_with_reconnection(m, "B");
    // The empty branch disappears, both gateways become pass-throughs and
    // dissolve: Head -> A -> Tail.
    CHECK(validate_structure(m).ok());
    CHECK(m.has_edge(m.find_by_label("Head")->id, m.find_by_label("A")->id));
    CHECK(m.has_edge(m.find_by_label("A")->id, m.find_by_label("Tail")->id));
    for (const auto& n : m.nodes) CHECK(n.kind != NodeKind::gateway);
}

TEST_CASE("an exclusive skip branch is kept by default and pruned on request") {
    const char* src = R"(// vardl
process p {
  start s;
  task Head;
  gateway g xor;
  task A;
  gateway j xor;
  task Tail;
  end e;
  s -> Head;
  Head -> g;
  g -> A;
  g -> j;
  A -> j;
  j -> Tail;
  Tail -> e;
}
)";
    SECTION("default keeps the structure honest about the empty branch") {
        ProcessModel m = fragment_of(src, "p");
        delete_node_with_reconnection(m, "A");
        // Deleting A adds g -> j, which already exists; the pair dissolves.
        CHECK(validate_structure(m).ok());
        CHECK(m.has_edge(m.find_by_label("Head")->id, m.find_by_label("Tail")->id));
    }
    SECTION("prune_all removes freshly emptied same-kind branches") {
        ProcessModel m = fragment_of(src, "p");
        delete_node_with_reconnection(m, "A", EmptyBranchPolicy::prune_all);
        CHECK(validate_structure(m).ok());
        CHECK(m.has_edge(m.find_by_label("Head")->id, m.find_by_label("Tail")->id));
        for (const auto& n : m.nodes) CHECK(n.kind != NodeKind::gateway);
    }
}

TEST_CASE("deleting every branch never disconnects the model") {
    ProcessModel m = testutil::model_from(R"(// vardl
process p {
  start s;
  task Head;
  gateway g or;
  task A;
  task B;
  gateway j or;
  task Tail;
  end e;
  s -> Head;
  Head -> g;
  g -> A;
  g -> B;
  A -> j;
  B -> j;
  j -> Tail;
  Tail -> e;
}
)",
                                          "p");
    delete_node_with_reconnection(m, "A", EmptyBranchPolicy::prune_all);
    delete_node_with_reconnection(m, "B", EmptyBranchPolicy::prune_all);
    // Even with aggressive pruning, some connection from Head to Tail must
    // survive; once trivial gateways are gone the chain is direct.
    dissolve_trivial_gateways(m);
    CHECK(validate_structure(m).ok());
    CHECK(m.has_edge(m.find_by_label("Head")->id, m.find_by_label("Tail")->id));
    CHECK(m.nodes.size() == 4); // start, Head, Tail, end
}

TEST_CASE("pass-through gateways dissolve to a fixed point") {
    ProcessModel m = testutil::chain({"A", "B"});
    // Splice two chained pass-through gateways between A and B.
    m.nodes.push_back({"g1", NodeKind::gateway, GatewayKind::xor_, "", "", {}});
    m.nodes.push_back({"g2", NodeKind::gateway, GatewayKind::and_, "", "", {}});
    for (auto& e : m.edges)
        if (e.from == "t0" && e.to == "t1") e.to = "g1";
    m.edges.push_back({"g1", "g2", ""});
    m.edges.push_back({"g2", "t1", ""});

    dissolve_trivial_gateways(m);
    CHECK(m.has_edge("t0", "t1"));
    CHECK(m.nodes.size() == 4);
    dissolve_trivial_gateways(m); // idempotent
    CHECK(m.nodes.size() == 4);
}

TEST_CASE("fragments splice onto a direct edge between the anchors") {
    ProcessModel m = testutil::chain({"A", "B"});
    const ProcessModel frag = fragment_of(R"(// vardl
process f {
  start s;
  task X;
  task Y;
  end e;
  s -> X;
  X -> Y;
  Y -> e;
}
)",
                                          "f");
    insert_between(m, frag, "A", "B");
    CHECK(validate_structure(m).ok());
    CHECK(enumerate_traces(m).traces == std::set<Trace>{{"A", "X", "Y", "B"}});
}

TEST_CASE("insertion between distant anchors targets the unique path's last edge") {
    ProcessModel m = testutil::chain({"A", "B", "C"});
    const ProcessModel frag = fragment_of(R"(// vardl
process f {
  start s;
  task X;
  end e;
  s -> X;
  X -> e;
}
)",
                                          "f");
    insert_between(m, frag, "A", "C");
    // X lands directly before C, not directly after A.
    CHECK(enumerate_traces(m).traces == std::set<Trace>{{"A", "B", "X", "C"}});
}

TEST_CASE("ambiguous or impossible insertion points are rejected") {
    ProcessModel diamond = testutil::model_from(R"(// vardl
process p {
  start s;
  task Head;
  gateway g xor;
  task A;
  task B;
  gateway j xor;
  task Tail;
  end e;
  s -> Head;
  Head -> g;
  g -> A;
  g -> B;
  A -> j;
  B -> j;
  j -> Tail;
  Tail -> e;
}
)",
                                                "p");
    const ProcessModel frag = fragment_of(R"(// vardl
process f {
  start s;
  task X;
  end e;
  s -> X;
  X -> e;
}
)",
                                          "f");
    // Two simple paths Head..Tail -> ambiguous.
    CHECK_THROWS_AS(insert_between(diamond, frag, "Head", "Tail"), IllegalSplice);
    // No path B..A.
    CHECK_THROWS_AS(insert_between(diamond, frag, "B", "A"), IllegalSplice);
    // Identical anchors.
    CHECK_THROWS_AS(insert_between(diamond, frag, "Head", "Head"), IllegalSplice);
}

TEST_CASE("fragment shape is checked before splicing") {
    ProcessModel m = testutil::chain({"A", "B"});
    const ProcessModel multi = fragment_of(R"(// vardl
process f {
  start s;
  gateway g and;
  task X;
  task Y;
  gateway j and;
  end e;
  s -> g;
  g -> X;
  g -> Y;
  X -> j;
  Y -> j;
  j -> e;
}
)",
                                           "f");
    // A gateway entry is fine: single successor of start, single predecessor
    // of end.
    ProcessModel ok = m;
    insert_between(ok, multi, "A", "B");
    CHECK(validate_structure(ok).ok());

    ProcessModel twoentry = multi;
    // Remove the split so start feeds two nodes directly.
    twoentry.edges.clear();
    twoentry.nodes.erase(
        std::remove_if(twoentry.nodes.begin(), twoentry.nodes.end(),
                       [](const Node& n) { return n.kind == NodeKind::gateway; }),
        twoentry.nodes.end());
    twoentry.edges.push_back({"s", "X", ""});
    twoentry.edges.push_back({"s", "Y", ""});
    twoentry.edges.push_back({"X", "e", ""});
    twoentry.edges.push_back({"Y", "e", ""});
    CHECK_THROWS_AS(insert_between(m, twoentry, "A", "B"), IllegalSplice);

    // A bare start -> end fragment inserts nothing.
    ProcessModel empty;
    empty.id = "empty";
    empty.nodes.push_back({"s", NodeKind::start, {}, "", "", {}});
    empty.nodes.push_back({"e", NodeKind::end, {}, "", "", {}});
    empty.edges.push_back({"s", "e", ""});
    ProcessModel same = m;
    insert_between(same, empty, "A", "B");
    CHECK(same == m);
}

TEST_CASE("repeated splicing stays sound while the edge list grows") {
    // Regression guard: the splice point is captured before fragment nodes and
    // edges are appended, so vector growth cannot invalidate it.
    ProcessModel m = testutil::chain({"A", "B"});
    for (int i = 0; i < 12; ++i) {
        const ProcessModel frag = fragment_of(R"(// vardl
process f {
  start s;
  task P;
  task Q;
  end e;
  s -> P;
  P -> Q;
  Q -> e;
}
)",
                                              "f");
        insert_between(m, frag, "A", "B");
        REQUIRE(validate_structure(m).ok());
    }
    CHECK(m.nodes.size() == 2 + 2 + 12 * 2);
}

TEST_CASE("a task can be replaced in place by a fragment") {
    ProcessModel m = testutil::chain({"A", "B", "C"});
    const ProcessModel frag = fragment_of(R"(// vardl
process f {
  start s;
  task X;
  task Y;
  end e;
  s -> X;
  X -> Y;
  Y -> e;
}
)",
                                          "f");
    replace_node_with_fragment(m, m.find_by_label("B")->id, frag);
    CHECK(enumerate_traces(m).traces == std::set<Trace>{{"A", "X", "Y", "C"}});

    // An empty fragment replacement removes the node entirely.
    ProcessModel gone = testutil::chain({"A", "B", "C"});
    ProcessModel empty;
    empty.id = "empty";
    empty.nodes.push_back({"s", NodeKind::start, {}, "", "", {}});
    empty.nodes.push_back({"e", NodeKind::end, {}, "", "", {}});
    empty.edges.push_back({"s", "e", ""});
    replace_node_with_fragment(gone, gone.find_by_label("B")->id, empty);
    CHECK(enumerate_traces(gone).traces == std::set<Trace>{{"A", "C"}});

    // Gateways cannot be replaced.
    ProcessModel gw = fragment_of(kParallelPair, "p");
    CHECK_THROWS_AS(replace_node_with_fragment(gw, "f", frag), IllegalSplice);
}

TEST_CASE("single task fragments carry label, attributes and role") {
    const ProcessModel frag =
        single_task_fragment("Check stock", {{"sla", "fast"}}, "warehouse");
    ProcessModel m = testutil::chain({"A", "B"});
    insert_between(m, frag, "A", "B");
    const Node* inserted = m.find_by_label("Check stock");
    REQUIRE(inserted != nullptr);
    CHECK(inserted->attrs.at("sla") == "fast");
    CHECK(inserted->role == "warehouse");
}
