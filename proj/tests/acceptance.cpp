// Acceptance gate for the variability engine. Runs seven end-to-end checks
// against the bundled case-study corpus and prints exactly one PASS/FAIL line
// per criterion. Exit status is zero only when every criterion holds.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bpvar/cepc.hpp"
#include "bpvar/corpus.hpp"
#include "bpvar/diff.hpp"
#include "bpvar/pesoa.hpp"
#include "bpvar/provop.hpp"
#include "bpvar/traces.hpp"
#include "bpvar/vardl/parser.hpp"
#include "bpvar/vardl/serializer.hpp"
#include "bpvar/worklet.hpp"

using namespace bpvar;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& why) {
    if (!cond) throw CheckFailure(why);
}

std::string fmt_seconds(double s) {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << s << "s";
    return os.str();
}

vardl::Document load_corpus_doc(const corpus::Manifest& man, const std::string& rel) {
    return vardl::load_file((man.root / rel).string());
}

const corpus::ManifestRow& row_of(const corpus::Manifest& man, const std::string& c,
                                  const std::string& a, const std::string& v) {
    for (const auto& row : man.rows)
        if (row.case_name == c && row.approach == a && row.variant == v) return row;
    throw CheckFailure("manifest misses row " + c + "/" + a + "/" + v);
}

// --- criterion 1: the full derivation matrix matches its goldens -----------

std::string criterion_matrix(const corpus::Manifest& man) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = corpus::run_all(man);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    require(results.size() == 55, "expected 55 manifest rows, saw " +
                                      std::to_string(results.size()));
    for (const auto& [row, res] : results)
        require(res.pass, row->case_name + "/" + row->approach + "/" + row->variant + ": " +
                              res.detail);
    require(secs < 10.0, "matrix run took " + fmt_seconds(secs) + ", budget is 10s");
    return "all 55 derivations match their goldens in " + fmt_seconds(secs);
}

// --- criterion 2: the four mechanisms agree on trace languages --------------

std::string criterion_cross(const corpus::Manifest& man) {
    const corpus::CrossCheck cross = corpus::cross_check(man);
    require(cross.pairs.size() == 79,
            "expected 79 approach pairs, saw " + std::to_string(cross.pairs.size()));
    for (const auto& p : cross.pairs)
        require(p.equal, p.case_name + "/" + p.variant + ": " + p.approach_a + " vs " +
                             p.approach_b + ": " + p.detail);
    require(cross.skipped.size() == 1, "expected exactly one documented skip, saw " +
                                           std::to_string(cross.skipped.size()));
    require(cross.skipped[0].case_name == "ebusiness" && cross.skipped[0].approach == "cepc" &&
                cross.skipped[0].variant == "V5",
            "unexpected skip entry " + cross.skipped[0].case_name + "/" +
                cross.skipped[0].variant + "/" + cross.skipped[0].approach);

    const corpus::Derived base =
        corpus::derive_row(man, row_of(man, "healthcare", "provop", "V0"));
    require(base.traces.size() == 12, "treatment base language has " +
                                          std::to_string(base.traces.size()) +
                                          " traces, expected 12");
    return "79 approach pairs trace-equivalent, 1 documented skip, base treatment has 12 traces";
}

// --- criterion 3: option application is identity-safe, atomic, ordered ------

std::string criterion_options(const corpus::Manifest& man) {
    const std::vector<std::pair<std::string, std::string>> bases = {
        {"vehicle/provop.vardl", "vehicle_repair"},
        {"healthcare/provop.vardl", "healthcare_treatment"},
        {"ebusiness/provop.vardl", "ebusiness_shop"},
    };

    // Deriving with no options changes nothing.
    for (const auto& [file, name] : bases) {
        const vardl::Document doc = load_corpus_doc(man, file);
        const ProcessModel& base = doc.linked.processes.at(name);
        require(derive_variant(base, {}) == base,
                name + ": empty derivation must reproduce the base");
    }

    // A failing operation aborts the whole option without partial effects.
    {
        const vardl::Document doc = load_corpus_doc(man, "ebusiness/provop.vardl");
        const ProcessModel base = doc.linked.processes.at("ebusiness_shop");
        Option tamper;
        tamper.name = "Tamper";
        ChangeOperation ok;
        ok.kind = OpKind::modify;
        ok.target = "Checkout";
        ok.attr = "sla";
        ok.value = "gold";
        ChangeOperation broken;
        broken.kind = OpKind::insert;
        broken.fragment = single_task_fragment("Wedge", {}, "");
        broken.after = "Ghost step";
        broken.before = "Checkout";
        tamper.ops = {ok, broken};

        bool threw = false;
        try {
            (void)apply_option(base, tamper);
        } catch (const AnchorNotFound& e) {
            threw = true;
            const std::string msg = e.what();
            require(msg.find("option 'Tamper' operation 2") != std::string::npos,
                    "failure must name the failing operation, got: " + msg);
        }
        require(threw, "an option with a broken anchor must throw");
        require(base == doc.linked.processes.at("ebusiness_shop"),
                "the input model must stay untouched after a failed option");
    }

    // Order sensitivity: the credit-card option needs the personalized cart.
    {
        const vardl::Document doc = load_corpus_doc(man, "ebusiness/provop.vardl");
        const ProcessModel& base = doc.linked.processes.at("ebusiness_shop");
        const Option& o3 = *doc.linked.find_option("Option3");
        const Option& o5 = *doc.linked.find_option("Option5");

        const ProcessModel forward = derive_variant(base, {o3, o5});
        const DerivationResult via_ctx =
            derive_variant(base, doc.linked.options, doc.linked.contexts.at("v4"));
        const IsoResult iso = find_isomorphism(forward, via_ctx.model);
        require(iso.isomorphic, "explicit [Option3, Option5] must equal the v4 derivation: " +
                                    iso.reason);

        bool conflicted = false;
        try {
            (void)derive_variant(base, {o5, o3});
        } catch (const OrderConflict&) {
            conflicted = true;
        }
        require(conflicted, "[Option5, Option3] must raise an ordering conflict");
    }

    // Randomized edits keep every intermediate model structurally sound.
    std::mt19937 rng(2026);
    int applied = 0, attempts = 0;
    const int target = 1000, per_base = target / 3;
    for (std::size_t b = 0; b < bases.size(); ++b) {
        const vardl::Document doc = load_corpus_doc(man, bases[b].first);
        ProcessModel m = doc.linked.processes.at(bases[b].second);
        const int goal = (b + 1 == bases.size()) ? target - applied : per_base;
        int done = 0;
        while (done < goal) {
            require(++attempts <= 8000, "random edits stalled: " + std::to_string(applied) +
                                            " of 1000 applied after 8000 attempts");
            std::vector<std::string> labels;
            for (const auto& n : m.nodes)
                if (n.kind == NodeKind::task && !n.label.empty()) labels.push_back(n.label);
            require(!labels.empty(), "fuzzed model ran out of tasks");
            auto pick = [&] { return labels[rng() % labels.size()]; };

            ChangeOperation op;
            const int roll = static_cast<int>(rng() % 10);
            if (roll < 4) {
                op.kind = OpKind::modify;
                op.target = pick();
                op.attr = "k" + std::to_string(rng() % 4);
                op.value = "v" + std::to_string(rng() % 4);
            } else if (roll < 7) {
                op.kind = OpKind::insert;
                op.fragment = single_task_fragment("Step " + std::to_string(attempts), {}, "");
                op.after = pick();
                op.before = pick();
            } else if (roll < 9) {
                op.kind = OpKind::move;
                op.target = pick();
                op.after = pick();
                op.before = pick();
            } else {
                op.kind = OpKind::del;
                op.target = pick();
                if (labels.size() < 4) continue; // keep the model from collapsing
            }
            try {
                ProcessModel next = apply_operation(m, op);
                const ValidationReport rep = validate_structure(next);
                require(rep.ok(), "edit " + std::to_string(applied + 1) +
                                      " produced a structurally invalid model: " +
                                      (rep.violations.empty() ? std::string("?")
                                                              : rep.violations[0].rule));
                m = std::move(next);
                ++done;
                ++applied;
            } catch (const Error&) {
                // rejected edits must leave no trace; the next loop retries
            }
        }
    }
    require(applied == target, "expected 1000 applied edits, saw " + std::to_string(applied));
    return "identity, atomicity, ordering, and 1000 randomized edits hold on all three bases";
}

// --- criterion 4: configuration spaces enumerate and partition exactly ------

struct CepcFixture {
    std::string file;
    std::string name;
    std::size_t space;
    std::size_t valid;
    std::function<bool(const Configuration&)> allowed;
};

std::string criterion_configurations(const corpus::Manifest& man) {
    auto fc = [](const Configuration& c, const std::string& label) {
        return c.functions.at(label);
    };
    const auto on = FunctionChoice::on;
    const auto opt = FunctionChoice::opt;

    const std::vector<CepcFixture> fixtures = {
        {"vehicle/cepc.vardl", "vehicle_cepc", 9, 6,
         [&](const Configuration& c) { return fc(c, "Final check") != opt; }},
        {"healthcare/cepc.vardl", "healthcare_cepc", 27, 16,
         [&](const Configuration& c) {
             const bool puncture_needs_decided_mrt =
                 fc(c, "Puncture") != on || fc(c, "MRT") != opt;
             return puncture_needs_decided_mrt && fc(c, "Inform patients") != opt;
         }},
        {"ebusiness/cepc.vardl", "ebusiness_cepc", 19683, 120,
         [&](const Configuration& c) {
             const std::vector<std::string> all = {
                 "Show pictures",     "Show reviews",        "Personalize shopping cart",
                 "Anonymize shopping cart", "Save shopping cart", "Pay by credit card",
                 "Offer invoice payment",   "Give10%Purchase"};
             for (const auto& f : all)
                 if (fc(c, f) == opt) return false;
             const bool pers = fc(c, "Personalize shopping cart") == on;
             const bool anon = fc(c, "Anonymize shopping cart") == on;
             const bool give = fc(c, "Give10%Purchase") == on;
             const bool card = fc(c, "Pay by credit card") == on;
             const bool invoice = fc(c, "Offer invoice payment") == on;
             const bool pics = fc(c, "Show pictures") == on;
             const bool reviews = fc(c, "Show reviews") == on;
             if (pers && anon) return false;
             if (give && !pers) return false;
             if (invoice && !(card && pers)) return false;
             if (pics != reviews) return false;
             return true;
         }},
    };

    std::ostringstream summary;
    for (const auto& fix : fixtures) {
        const vardl::Document doc = load_corpus_doc(man, fix.file);
        const CepcModel& cm = doc.linked.cepc_models.at(fix.name);
        require(cm.configurable_functions.size() <= 8,
                fix.name + " has more than 8 configurable functions");

        const std::vector<Configuration> space = enumerate_configurations(cm);
        require(space.size() == fix.space,
                fix.name + ": expected a space of " + std::to_string(fix.space) + ", saw " +
                    std::to_string(space.size()));

        std::size_t valid = 0;
        for (const Configuration& c : space) {
            const bool expected = fix.allowed(c);
            const bool reported = validate_configuration(cm, c).valid();
            require(reported == expected,
                    fix.name + ": validator disagrees with the reference predicate");
            bool applied_ok = true;
            try {
                const ProcessModel v = apply_configuration(cm, c);
                require(validate_structure(v).ok(),
                        fix.name + ": a configured model violates structural rules");
            } catch (const InvalidConfiguration&) {
                applied_ok = false;
            }
            require(applied_ok == expected,
                    fix.name + ": apply must succeed exactly on the valid set");
            if (expected) ++valid;
        }
        require(valid == fix.valid, fix.name + ": expected " + std::to_string(fix.valid) +
                                        " valid configurations, saw " + std::to_string(valid));
        require(valid <= 256, fix.name + ": valid set exceeds the documented bound");
        if (summary.tellp() > 0) summary << ", ";
        summary << fix.name << " " << valid << "/" << space.size();
    }
    return "valid configuration sets partition exactly: " + summary.str();
}

// --- criterion 5: rule trees stay consistent and select locally -------------

std::string criterion_rule_trees(const corpus::Manifest& man) {
    // Every shipped tree replays its cornerstones cleanly.
    int trees = 0;
    for (const std::string file :
         {"vehicle/worklet.vardl", "healthcare/worklet.vardl", "ebusiness/worklet.vardl"}) {
        const vardl::Document doc = load_corpus_doc(man, file);
        for (const auto& [pname, wm] : doc.linked.worklet_models) {
            for (const auto& [task, tree] : wm.trees) {
                const auto problems = replay_cornerstones(tree);
                if (!problems.empty())
                    throw CheckFailure(file + ": tree for '" + task +
                                       "' fails replay: " + problems[0]);
                ++trees;
            }
        }
    }
    require(trees > 0, "no rule trees found in the corpus");

    // Building a tree rule by rule keeps the replay clean after every step.
    const std::set<std::string> names = {"W0", "W1", "W2", "W3"};
    RdrTree tree;
    tree.task = "triage";
    RdrNode root;
    root.name = "root";
    root.conclusion = "W0";
    tree.nodes.push_back(root);

    const std::vector<std::string> vars = {"a", "b", "c"};
    const std::vector<std::string> values = {"", "yes", "no"}; // "" = left unset
    std::vector<CaseData> grid;
    for (const auto& va : values)
        for (const auto& vb : values)
            for (const auto& vc : values) {
                CaseData d;
                if (!va.empty()) d["a"] = va;
                if (!vb.empty()) d["b"] = vb;
                if (!vc.empty()) d["c"] = vc;
                grid.push_back(std::move(d));
            }
    require(grid.size() == 27, "case grid must cover 27 assignments");

    struct Step {
        CaseData cornerstone;
        std::string condition;
        std::string conclusion;
    };
    const std::vector<Step> steps = {
        {{{"a", "yes"}}, "a = \"yes\"", "W1"},
        {{{"a", "yes"}, {"b", "yes"}}, "b = \"yes\"", "W2"},
        {{{"a", "no"}}, "a = \"no\"", "W3"},
    };
    for (const Step& s : steps) {
        std::vector<std::string> before;
        before.reserve(grid.size());
        for (const auto& d : grid) before.push_back(select_worklet(tree, d).conclusion);

        add_rule(tree, s.cornerstone, s.condition, s.conclusion, names);
        require(replay_cornerstones(tree).empty(),
                "replay must stay clean after adding the rule for " + s.conclusion);

        require(select_worklet(tree, s.cornerstone).conclusion == s.conclusion,
                "the cornerstone case must adopt the new conclusion " + s.conclusion);
        const RuleExpr cond = parse_rule(s.condition);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const std::string after = select_worklet(tree, grid[i]).conclusion;
            if (after == before[i]) continue;
            require(after == s.conclusion,
                    "a new rule may only move cases to its own conclusion");
            require(eval_rule(cond, grid[i]).value,
                    "a case changed conclusion although the new condition is false on it");
        }
    }

    // A pacemaker keeps every execution away from the scanner.
    const vardl::Document doc = load_corpus_doc(man, "healthcare/worklet.vardl");
    const WorkletModel& wm = doc.linked.worklet_models.at("healthcare_worklet");
    const CaseData pacemaker = {{"Pacemaker", "yes"}};

    const TraceSet all = execute_exhaustive(wm, pacemaker);
    require(!all.truncated && !all.traces.empty(), "exhaustive execution must terminate");
    for (const Trace& t : all.traces)
        for (const std::string& step : t)
            require(step.find("MRT") == std::string::npos,
                    "exhaustive trace reaches the scanner despite the pacemaker");
    for (std::uint32_t seed = 0; seed < 50; ++seed) {
        const CaseLog log = execute_case(wm, pacemaker, seed);
        for (const std::string& step : log.trace)
            require(step.find("MRT") == std::string::npos,
                    "seed " + std::to_string(seed) + " reaches the scanner despite the pacemaker");
    }
    return "cornerstone replays stay clean, refinements are local, pacemaker cases avoid the "
           "scanner";
}

// --- criterion 6: feature selections mirror option derivations --------------

std::string criterion_features(const corpus::Manifest& man) {
    const vardl::Document pes = load_corpus_doc(man, "ebusiness/pesoa.vardl");
    const StereotypedModel& sm = pes.linked.stereotyped.at("ebusiness_pesoa");

    const vardl::Document pro = load_corpus_doc(man, "ebusiness/provop.vardl");
    const ProcessModel& base = pro.linked.processes.at("ebusiness_shop");
    const std::vector<std::pair<std::string, std::string>> feature_to_option = {
        {"rich_product_info", "Option1"}, {"persistent_cart", "Option2"},
        {"personalized", "Option3"},      {"purchase_bonus", "Option4"},
        {"invoice_payment", "Option5"},   {"anonymous", "Option6"},
    };

    const std::vector<FeatureSelection> selections = enumerate_selections(sm.features);
    require(selections.size() == 24, "expected 24 valid selections, saw " +
                                         std::to_string(selections.size()));

    for (const FeatureSelection& sel : selections) {
        const ResolveResult r = resolve(sm, sel);
        const bool pers = r.model.find_by_label("Personalize shopping cart") != nullptr;
        const bool anon = r.model.find_by_label("Anonymize shopping cart") != nullptr;
        require(!(pers && anon), "a resolved shop offers both cart types at once");

        std::vector<Option> mapped;
        for (const auto& [feature, option] : feature_to_option)
            if (sel.count(feature)) mapped.push_back(*pro.linked.find_option(option));
        const ProcessModel derived = derive_variant(base, mapped);
        require(trace_equivalent(r.model, derived),
                "a feature selection and its option list disagree on the trace language");
    }
    return "all 24 selections resolve, exclude mixed carts, and mirror their option lists";
}

// --- criterion 7: the language round-trips and reports exact positions ------

std::string criterion_language(const corpus::Manifest& man) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(man.root))
        if (entry.is_regular_file() && entry.path().extension() == ".vardl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    require(files.size() == 26,
            "expected 26 corpus documents, saw " + std::to_string(files.size()));

    for (const fs::path& p : files) {
        std::ifstream in(p);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();

        const vardl::Document d1 = vardl::parse_document(text, p.filename().string());
        const std::string s1 = vardl::serialize(d1);
        const vardl::Document d2 = vardl::parse_document(s1, p.filename().string());
        require(d2 == d1, p.filename().string() + " does not survive a serialize round trip");
        require(vardl::serialize(d2) == s1,
                p.filename().string() + " serialization is not a fixed point");

        // Dropping a statement terminator must be reported on the exact line
        // of the token the parser then chokes on.
        const std::size_t pos = text.rfind(";\n");
        require(pos != std::string::npos, p.filename().string() + " has no terminator to drop");
        std::string broken = text;
        broken.erase(pos, 1);
        std::size_t next = pos;
        while (next < broken.size() &&
               std::isspace(static_cast<unsigned char>(broken[next])))
            ++next;
        require(next < broken.size(), p.filename().string() + ": nothing follows the typo");
        const int expected_line =
            1 + static_cast<int>(std::count(broken.begin(), broken.begin() + next, '\n'));

        bool threw = false;
        try {
            (void)vardl::parse_document(broken, p.filename().string());
        } catch (const SyntaxError& e) {
            threw = true;
            require(e.span().line == expected_line,
                    p.filename().string() + ": typo reported on line " +
                        std::to_string(e.span().line) + ", expected line " +
                        std::to_string(expected_line));
        }
        require(threw, p.filename().string() + ": the injected typo must fail to parse");
    }
    return "all 26 documents round-trip and report injected typos on the exact line";
}

} // namespace

int main() {
    const struct {
        int n;
        const char* name;
        std::function<std::string(const corpus::Manifest&)> run;
    } criteria[] = {
        {1, "corpus matrix", criterion_matrix},
        {2, "cross-approach equivalence", criterion_cross},
        {3, "option semantics", criterion_options},
        {4, "configuration spaces", criterion_configurations},
        {5, "rule-tree refinement", criterion_rule_trees},
        {6, "feature resolution", criterion_features},
        {7, "language round-trip", criterion_language},
    };

    corpus::Manifest man;
    try {
        man = corpus::load_manifest();
    } catch (const std::exception& e) {
        std::cout << "FAIL criterion 1: cannot load the corpus manifest: " << e.what() << "\n";
        return 1;
    }

    bool all_ok = true;
    for (const auto& c : criteria) {
        try {
            const std::string summary = c.run(man);
            std::cout << "PASS criterion " << c.n << ": " << summary << "\n";
        } catch (const std::exception& e) {
            all_ok = false;
            std::cout << "FAIL criterion " << c.n << ": " << e.what() << "\n";
        }
    }
    return all_ok ? 0 : 1;
}
