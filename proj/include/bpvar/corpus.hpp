#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bpvar/cepc.hpp"
#include "bpvar/errors.hpp"
#include "bpvar/isomorphism.hpp"
#include "bpvar/pesoa.hpp"
#include "bpvar/provop.hpp"
#include "bpvar/traces.hpp"
#include "bpvar/vardl/parser.hpp"
#include "bpvar/worklet.hpp"

namespace bpvar::corpus {

struct ManifestRow {
    std::string case_name;
    std::string approach; // provop | cepc | worklet | pesoa
    std::string variant;
    std::string file;   // approach document, relative to the corpus root
    std::string golden; // golden variant document, relative to the corpus root
    std::string mode;   // iso | iso-noattrs | trace | runtime-note | skip
    std::string note;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> selection; // feature selection, where applicable
};

struct Manifest {
    std::filesystem::path root;
    std::vector<ManifestRow> rows;
};

/// BPVAR_CORPUS overrides; otherwise walk up from the working directory until
/// a corpus/manifest.json appears.
inline std::filesystem::path corpus_root() {
    if (const char* env = std::getenv("BPVAR_CORPUS")) {
        std::filesystem::path p = env;
        if (!std::filesystem::exists(p / "manifest.json"))
            throw ImportError("BPVAR_CORPUS=" + p.string() + " has no manifest.json");
        return p;
    }
    std::filesystem::path p = std::filesystem::current_path();
    for (int depth = 0; depth < 8; ++depth) {
        if (std::filesystem::exists(p / "corpus" / "manifest.json")) return p / "corpus";
        if (p.parent_path() == p) break;
        p = p.parent_path();
    }
    throw ImportError("cannot locate corpus/manifest.json from " +
                      std::filesystem::current_path().string() + "; set BPVAR_CORPUS");
}

inline Manifest load_manifest(const std::filesystem::path& root) {
    std::ifstream in(root / "manifest.json");
    if (!in) throw ImportError("cannot open " + (root / "manifest.json").string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ImportError("manifest.json is not valid JSON: " + std::string(e.what()));
    }
    Manifest man;
    man.root = root;
    for (const auto& jr : j.at("rows")) {
        ManifestRow row;
        row.case_name = jr.at("case").get<std::string>();
        row.approach = jr.at("approach").get<std::string>();
        row.variant = jr.at("variant").get<std::string>();
        row.file = jr.value("file", "");
        row.golden = jr.value("golden", "");
        row.mode = jr.at("mode").get<std::string>();
        row.note = jr.value("note", "");
        if (jr.contains("inputs"))
            for (const auto& [k, v] : jr.at("inputs").items()) {
                if (v.is_array()) {
                    for (const auto& s : v) row.selection.push_back(s.get<std::string>());
                } else {
                    row.inputs[k] = v.get<std::string>();
                }
            }
        man.rows.push_back(std::move(row));
    }
    return man;
}

inline Manifest load_manifest() { return load_manifest(corpus_root()); }

// ---------------------------------------------------------------------------

struct Derived {
    std::optional<ProcessModel> model;        // absent for late-binding rows
    std::optional<ProcessModel> design_model; // build-time result before deferred replay
    std::set<Trace> traces;
    std::vector<std::string> notes;
};

namespace detail {

inline const std::string& input(const ManifestRow& row, const std::string& key) {
    auto it = row.inputs.find(key);
    if (it == row.inputs.end())
        throw ImportError("manifest row " + row.case_name + "/" + row.approach + "/" +
                          row.variant + " lacks input '" + key + "'");
    return it->second;
}

inline ProcessModel first_process(const vardl::Document& doc) {
    for (const auto& decl : doc.decls)
        if (const auto* p = std::get_if<vardl::ProcessDecl>(&decl)) return p->model;
    throw ImportError("document " + doc.filename + " declares no process");
}

} // namespace detail

/// Runs one manifest row's approach and returns the derived model and its
/// bounded trace set (late-binding rows yield traces only).
inline Derived derive_row(const Manifest& man, const ManifestRow& row) {
    Derived out;
    if (row.mode == "skip") return out;

    const vardl::Document doc = vardl::load_file((man.root / row.file).string());
    const auto& linked = doc.linked;

    if (row.approach == "provop") {
        const ProcessModel& base = linked.processes.at(detail::input(row, "base"));
        const Context& ctx = linked.contexts.at(detail::input(row, "context"));
        DerivationResult r = derive_variant(base, linked.options, ctx);
        for (const auto& name : r.applied) out.notes.push_back("applied " + name);
        for (const auto& name : r.deferred) out.notes.push_back("deferred " + name);
        for (const auto& wmsg : r.warnings) out.notes.push_back("warning: " + wmsg);
        if (row.mode == "runtime-note") {
            out.design_model = r.model;
            ProcessModel runtime = r.model;
            for (const auto& name : r.deferred) {
                const Option* opt = linked.find_option(name);
                if (!opt) throw UnknownTarget("deferred option '" + name + "' is not declared");
                runtime = apply_option(runtime, *opt);
                out.notes.push_back("replayed " + name + " at run time");
            }
            out.model = std::move(runtime);
        } else {
            out.model = std::move(r.model);
        }
    } else if (row.approach == "cepc") {
        const CepcModel& cm = linked.cepc_models.at(detail::input(row, "cepc"));
        const auto& named = linked.configs.at(detail::input(row, "config"));
        if (named.cepc != cm.name)
            throw InvalidConfiguration("configuration '" + detail::input(row, "config") +
                                       "' targets '" + named.cepc + "', not '" + cm.name + "'");
        out.model = apply_configuration(cm, named.config);
    } else if (row.approach == "worklet") {
        const WorkletModel& wm = linked.worklet_models.at(detail::input(row, "parent"));
        const CaseData& data = linked.contexts.at(detail::input(row, "case"));
        TraceSet ts = execute_exhaustive(wm, data);
        if (ts.truncated)
            throw InvalidResult("late-binding trace enumeration for " + row.case_name + "/" +
                                row.variant + " hit the exploration cap");
        out.traces = std::move(ts.traces);
        return out;
    } else if (row.approach == "pesoa") {
        const StereotypedModel& sm = linked.stereotyped.at(detail::input(row, "model"));
        FeatureSelection sel(row.selection.begin(), row.selection.end());
        ResolveResult r = resolve(sm, sel);
        out.notes = r.notes;
        out.model = std::move(r.model);
    } else {
        throw ImportError("unknown approach '" + row.approach + "' in manifest");
    }

    TraceSet ts = enumerate_traces(*out.model);
    if (ts.truncated)
        throw InvalidResult("trace enumeration for " + row.case_name + "/" + row.approach + "/" +
                            row.variant + " hit the exploration cap");
    out.traces = std::move(ts.traces);
    return out;
}

inline ProcessModel load_golden(const Manifest& man, const ManifestRow& row) {
    return detail::first_process(vardl::load_file((man.root / row.golden).string()));
}

// ---------------------------------------------------------------------------

struct RowResult {
    bool pass = false;
    std::string detail;
};

/// Checks one manifest row against its golden model.
inline RowResult run_row(const Manifest& man, const ManifestRow& row) {
    try {
        if (row.mode == "skip") return {true, "skipped: " + row.note};

        Derived d = derive_row(man, row);
        const ProcessModel golden = load_golden(man, row);

        if (row.mode == "iso" || row.mode == "iso-noattrs") {
            IsoOptions opt;
            opt.compare_attributes = row.mode == "iso";
            if (!isomorphic(*d.model, golden, opt))
                return {false, "derived model is not isomorphic to the golden variant"};
            return {true, "isomorphic"};
        }
        if (row.mode == "runtime-note") {
            // Build time leaves deferred options untouched; replaying them must
            // reach the golden variant.
            const vardl::Document doc = vardl::load_file((man.root / row.file).string());
            const ProcessModel& base =
                doc.linked.processes.at(detail::input(row, "base"));
            if (!isomorphic(*d.design_model, base))
                return {false, "build-time result deviates from the base model"};
            if (!isomorphic(*d.model, golden))
                return {false, "replaying deferred options did not reach the golden variant"};
            std::string detail = "build-time result equals base; deferred replay reaches golden";
            for (const auto& n : d.notes)
                if (n.rfind("deferred ", 0) == 0 || n.rfind("replayed ", 0) == 0)
                    detail += "; " + n;
            return {true, detail};
        }
        if (row.mode == "trace") {
            TraceSet g = enumerate_traces(golden);
            if (g.truncated) return {false, "golden trace enumeration hit the exploration cap"};
            if (d.traces != g.traces) {
                std::string detail = "trace sets differ: derived has " +
                                     std::to_string(d.traces.size()) + ", golden has " +
                                     std::to_string(g.traces.size());
                return {false, detail};
            }
            return {true, std::to_string(d.traces.size()) + " traces match"};
        }
        return {false, "unknown mode '" + row.mode + "'"};
    } catch (const std::exception& e) {
        return {false, std::string("error: ") + e.what()};
    }
}

inline std::vector<std::pair<const ManifestRow*, RowResult>> run_all(const Manifest& man) {
    std::vector<std::pair<const ManifestRow*, RowResult>> out;
    for (const auto& row : man.rows) out.emplace_back(&row, run_row(man, row));
    return out;
}

// ---------------------------------------------------------------------------

struct PairResult {
    std::string case_name;
    std::string variant;
    std::string approach_a;
    std::string approach_b;
    bool equal = false;
    std::string detail;
};

struct SkippedPair {
    std::string case_name;
    std::string variant;
    std::string approach;
    std::string note;
};

struct CrossCheck {
    std::vector<PairResult> pairs;
    std::vector<SkippedPair> skipped;

    bool all_equal() const {
        for (const auto& p : pairs)
            if (!p.equal) return false;
        return !pairs.empty();
    }
};

/// Compares the bounded trace sets of every pair of approaches that cover the
/// same (case, variant). Rows marked skip become documented skips instead.
inline CrossCheck cross_check(const Manifest& man) {
    static const std::vector<std::string> approach_order = {"provop", "cepc", "worklet", "pesoa"};

    std::map<std::pair<std::string, std::string>, std::vector<const ManifestRow*>> groups;
    for (const auto& row : man.rows) groups[{row.case_name, row.variant}].push_back(&row);

    CrossCheck out;
    for (const auto& [key, rows] : groups) {
        std::map<std::string, std::set<Trace>> traces_by_approach;
        for (const ManifestRow* row : rows) {
            if (row->mode == "skip") {
                out.skipped.push_back({key.first, key.second, row->approach, row->note});
                continue;
            }
            try {
                traces_by_approach[row->approach] = derive_row(man, *row).traces;
            } catch (const std::exception& e) {
                out.pairs.push_back({key.first, key.second, row->approach, "derivation", false,
                                     std::string("error: ") + e.what()});
            }
        }
        std::vector<std::string> present;
        for (const auto& a : approach_order)
            if (traces_by_approach.count(a)) present.push_back(a);
        for (std::size_t i = 0; i < present.size(); ++i) {
            for (std::size_t k = i + 1; k < present.size(); ++k) {
                const auto& ta = traces_by_approach.at(present[i]);
                const auto& tb = traces_by_approach.at(present[k]);
                PairResult pr{key.first, key.second, present[i], present[k], ta == tb, ""};
                if (!pr.equal)
                    pr.detail = present[i] + " yields " + std::to_string(ta.size()) +
                                " traces, " + present[k] + " yields " + std::to_string(tb.size());
                out.pairs.push_back(std::move(pr));
            }
        }
    }
    return out;
}

} // namespace bpvar::corpus
