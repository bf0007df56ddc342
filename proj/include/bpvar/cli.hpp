#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpvar/cepc.hpp"
#include "bpvar/corpus.hpp"
#include "bpvar/diff.hpp"
#include "bpvar/errors.hpp"
#include "bpvar/pesoa.hpp"
#include "bpvar/provop.hpp"
#include "bpvar/traces.hpp"
#include "bpvar/vardl/dot.hpp"
#include "bpvar/vardl/export.hpp"
#include "bpvar/vardl/parser.hpp"
#include "bpvar/vardl/serializer.hpp"
#include "bpvar/worklet.hpp"

namespace bpvar::cli {

namespace detail {

inline std::string diagnose(const Error& e) {
    std::string msg = e.what();
    if (e.span().valid()) {
        const std::string loc = e.span().to_string() + ": ";
        if (msg.rfind(loc, 0) == 0) msg.erase(0, loc.size());
        return loc + "error: " + msg;
    }
    return "bpvar: error: " + msg;
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ImportError("cannot write '" + out_path + "'");
    f << text;
}

inline std::string render_model(const ProcessModel& m, const std::string& format) {
    if (format == "dot") return vardl::to_dot(m);
    if (format == "structured-export") return vardl::model_to_json(m);
    return vardl::serialize(m);
}

/// First process declaration of a document, or the named one.
inline const ProcessModel& pick_process(const vardl::Document& doc, const std::string& name) {
    if (!name.empty()) {
        auto it = doc.linked.processes.find(name);
        if (it == doc.linked.processes.end())
            throw UnresolvedReference("no process named '" + name + "' in " + doc.filename);
        return it->second;
    }
    for (const auto& decl : doc.decls)
        if (const auto* p = std::get_if<vardl::ProcessDecl>(&decl)) {
            return doc.linked.processes.at(p->model.id);
        }
    throw UnresolvedReference("no process declared in " + doc.filename);
}

/// A context argument names either a context declared in `doc` or a file
/// whose first context declaration is used.
inline Context pick_context(const vardl::Document& doc, const std::string& arg) {
    auto it = doc.linked.contexts.find(arg);
    if (it != doc.linked.contexts.end()) return it->second;
    if (std::filesystem::exists(arg)) {
        vardl::Document other = vardl::load_file(arg);
        if (!other.linked.contexts.empty()) {
            for (const auto& decl : other.decls)
                if (const auto* c = std::get_if<vardl::ContextDecl>(&decl))
                    return other.linked.contexts.at(c->name);
        }
        throw UnresolvedReference("file '" + arg + "' declares no context");
    }
    throw UnresolvedReference("'" + arg + "' is neither a declared context nor a readable file");
}

inline std::string trace_line(const Trace& t) {
    if (t.empty()) return "(empty)";
    std::string out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += " -> ";
        out += t[i];
    }
    return out;
}

inline std::string traces_to_json(const TraceSet& ts) {
    nlohmann::json j;
    j["format"] = "bpvar-traces";
    j["version"] = 1;
    j["truncated"] = ts.truncated;
    j["traces"] = nlohmann::json::array();
    for (const auto& t : ts.traces) j["traces"].push_back(t);
    return j.dump(2) + "\n";
}

// ---- verb handlers ---------------------------------------------------------

inline int run_check(const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
    bool all_ok = true;
    for (const auto& file : files) {
        try {
            vardl::Document doc = vardl::load_file(file);
            std::vector<std::string> lines;
            for (const auto& [name, model] : doc.linked.processes)
                for (const auto& v : validate_structure(model).violations)
                    lines.push_back(file + ": process " + name + ": " + v.rule + ": " + v.detail +
                                    " (" + v.subject + ")");
            if (lines.empty()) {
                out << "ok " << file << "\n";
            } else {
                all_ok = false;
                for (const auto& l : lines) out << l << "\n";
            }
        } catch (const Error& e) {
            all_ok = false;
            err << diagnose(e) << "\n";
        }
    }
    return all_ok ? 0 : 1;
}

inline int run_derive(const std::string& base_file, const std::string& process_name,
                      const std::string& context_arg, const std::vector<std::string>& option_names,
                      const std::string& format, const std::string& out_path, std::ostream& out,
                      std::ostream& err) {
    vardl::Document doc = vardl::load_file(base_file);
    const ProcessModel& base = pick_process(doc, process_name);

    ProcessModel derived;
    if (!option_names.empty()) {
        std::vector<Option> chosen;
        for (const auto& name : option_names) {
            const Option* opt = doc.linked.find_option(name);
            if (!opt) throw UnresolvedReference("no option named '" + name + "' in " + base_file);
            chosen.push_back(*opt);
        }
        derived = derive_variant(base, chosen);
    } else {
        if (context_arg.empty())
            throw InvalidConfiguration("derive needs --context or at least one --option");
        Context ctx = pick_context(doc, context_arg);
        DerivationResult r = derive_variant(base, doc.linked.options, ctx);
        for (const auto& n : r.applied) err << "applied " << n << "\n";
        for (const auto& n : r.deferred) err << "deferred " << n << " (run-time option)\n";
        for (const auto& w : r.warnings) err << "warning: " << w << "\n";
        derived = std::move(r.model);
    }
    emit(render_model(derived, format), out_path, out);
    return 0;
}

inline int run_configure(const std::string& model_file, const std::string& cepc_name,
                         const std::string& config_name, const std::string& format,
                         const std::string& out_path, std::ostream& out, std::ostream& err) {
    vardl::Document doc = vardl::load_file(model_file);

    const CepcModel* cm = nullptr;
    if (!cepc_name.empty()) {
        auto it = doc.linked.cepc_models.find(cepc_name);
        if (it == doc.linked.cepc_models.end())
            throw UnresolvedReference("no configurable model named '" + cepc_name + "' in " +
                                      model_file);
        cm = &it->second;
    } else if (doc.linked.cepc_models.size() == 1) {
        cm = &doc.linked.cepc_models.begin()->second;
    } else {
        throw UnresolvedReference(model_file + " declares " +
                                  std::to_string(doc.linked.cepc_models.size()) +
                                  " configurable models; pick one with --cepc");
    }

    auto it = doc.linked.configs.find(config_name);
    if (it == doc.linked.configs.end())
        throw UnresolvedReference("no configuration named '" + config_name + "' in " + model_file);
    if (it->second.cepc != cm->name)
        throw InvalidConfiguration("configuration '" + config_name + "' targets '" +
                                   it->second.cepc + "', not '" + cm->name + "'");

    ConfigReport report = validate_configuration(*cm, it->second.config);
    for (const auto& g : report.guideline_warnings) err << "guideline not honored: " << g << "\n";
    if (!report.valid()) {
        for (const auto& m : report.missing) err << "undecided: " << m << "\n";
        for (const auto& r : report.restriction_violations) err << "restriction: " << r << "\n";
        for (const auto& r : report.requirement_violations) err << "requirement: " << r << "\n";
        return 1;
    }
    emit(render_model(apply_configuration(*cm, it->second.config), format), out_path, out);
    return 0;
}

inline int run_simulate(const std::string& parent_file, const std::string& model_name,
                        const std::string& case_arg, std::uint32_t seed, bool exhaustive,
                        const std::string& format, const std::string& out_path, std::ostream& out,
                        std::ostream& err) {
    (void)err;
    vardl::Document doc = vardl::load_file(parent_file);

    const WorkletModel* wm = nullptr;
    if (!model_name.empty()) {
        auto it = doc.linked.worklet_models.find(model_name);
        if (it == doc.linked.worklet_models.end())
            throw UnresolvedReference("no late-binding model named '" + model_name + "' in " +
                                      parent_file);
        wm = &it->second;
    } else if (doc.linked.worklet_models.size() == 1) {
        wm = &doc.linked.worklet_models.begin()->second;
    } else {
        throw UnresolvedReference(parent_file + " declares " +
                                  std::to_string(doc.linked.worklet_models.size()) +
                                  " late-binding models; pick one with --model");
    }

    CaseData data = pick_context(doc, case_arg);

    if (exhaustive) {
        TraceSet ts = execute_exhaustive(*wm, data);
        if (format == "structured-export") {
            emit(traces_to_json(ts), out_path, out);
        } else {
            std::string text;
            for (const auto& t : ts.traces) text += trace_line(t) + "\n";
            if (ts.truncated) text += "(truncated)\n";
            emit(text, out_path, out);
        }
        return 0;
    }

    CaseLog log = execute_case(*wm, data, seed);
    if (format == "structured-export") emit(vardl::caselog_to_json(log), out_path, out);
    else emit(log.to_string(), out_path, out);
    return 0;
}

inline int run_resolve(const std::string& model_file, const std::string& stereotypes_name,
                       const std::string& features_name, const std::string& select_csv,
                       const std::string& format, const std::string& out_path, std::ostream& out,
                       std::ostream& err) {
    vardl::Document doc = vardl::load_file(model_file);

    const StereotypedModel* sm = nullptr;
    if (!stereotypes_name.empty()) {
        auto it = doc.linked.stereotyped.find(stereotypes_name);
        if (it == doc.linked.stereotyped.end())
            throw UnresolvedReference("no stereotyped model named '" + stereotypes_name + "' in " +
                                      model_file);
        sm = &it->second;
    } else if (doc.linked.stereotyped.size() == 1) {
        sm = &doc.linked.stereotyped.begin()->second;
    } else {
        throw UnresolvedReference(model_file + " declares " +
                                  std::to_string(doc.linked.stereotyped.size()) +
                                  " stereotyped models; pick one with --stereotypes");
    }
    if (!features_name.empty() && sm->features.name != features_name)
        throw UnresolvedReference("stereotyped model '" + sm->name + "' uses feature diagram '" +
                                  sm->features.name + "', not '" + features_name + "'");

    FeatureSelection sel;
    std::stringstream ss(select_csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) sel.insert(item);

    ResolveResult r = resolve(*sm, sel);
    for (const auto& n : r.notes) err << n << "\n";
    emit(render_model(r.model, format), out_path, out);
    return 0;
}

inline int run_corpus(const std::string& root_arg, bool as_json, std::ostream& out,
                      std::ostream& err) {
    (void)err;
    corpus::Manifest man =
        root_arg.empty() ? corpus::load_manifest() : corpus::load_manifest(root_arg);

    auto results = corpus::run_all(man);
    corpus::CrossCheck cross = corpus::cross_check(man);

    bool all_pass = true;
    for (const auto& [row, res] : results)
        if (!res.pass) all_pass = false;
    if (!cross.all_equal()) all_pass = false;

    if (as_json) {
        nlohmann::json j;
        j["format"] = "bpvar-corpus-report";
        j["version"] = 1;
        j["rows"] = nlohmann::json::array();
        for (const auto& [row, res] : results)
            j["rows"].push_back({{"case", row->case_name},
                                 {"approach", row->approach},
                                 {"variant", row->variant},
                                 {"pass", res.pass},
                                 {"detail", res.detail}});
        j["cross_check"] = nlohmann::json::array();
        for (const auto& p : cross.pairs)
            j["cross_check"].push_back({{"case", p.case_name},
                                        {"variant", p.variant},
                                        {"a", p.approach_a},
                                        {"b", p.approach_b},
                                        {"equal", p.equal},
                                        {"detail", p.detail}});
        j["skipped"] = nlohmann::json::array();
        for (const auto& s : cross.skipped)
            j["skipped"].push_back({{"case", s.case_name},
                                    {"variant", s.variant},
                                    {"approach", s.approach},
                                    {"note", s.note}});
        j["pass"] = all_pass;
        out << j.dump(2) << "\n";
    } else {
        for (const auto& [row, res] : results)
            out << (res.pass ? "PASS " : "FAIL ") << row->case_name << "/" << row->approach << "/"
                << row->variant << ": " << res.detail << "\n";
        for (const auto& p : cross.pairs)
            out << (p.equal ? "PASS " : "FAIL ") << p.case_name << "/" << p.variant << ": "
                << p.approach_a << " ~ " << p.approach_b
                << (p.equal ? " trace sets match" : " differ: " + p.detail) << "\n";
        for (const auto& s : cross.skipped)
            out << "SKIP " << s.case_name << "/" << s.variant << ": " << s.approach << ": "
                << s.note << "\n";
    }
    return all_pass ? 0 : 1;
}

inline int run_dot(const std::string& model_file, const std::string& process_name,
                   const std::string& out_path, std::ostream& out) {
    vardl::Document doc = vardl::load_file(model_file);
    emit(vardl::to_dot(pick_process(doc, process_name)), out_path, out);
    return 0;
}

inline int run_diff(const std::string& old_file, const std::string& new_file,
                    const std::string& old_process, const std::string& new_process,
                    std::ostream& out) {
    vardl::Document doc_old = vardl::load_file(old_file);
    vardl::Document doc_new = vardl::load_file(new_file);
    ModelDiff d = diff_models(pick_process(doc_old, old_process), pick_process(doc_new, new_process));
    if (d.empty()) {
        out << "models are identical\n";
        return 0;
    }
    out << d.to_string();
    return 1;
}

} // namespace detail

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Exit codes: 0 success, 1 negative verdict or data error,
/// 2 usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"variability engine for business-process models", "bpvar"};
    app.require_subcommand(1);

    std::string format = "vardl";
    std::string out_path;
    auto add_output_opts = [&](CLI::App* sub) {
        sub->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"vardl", "dot", "structured-export"}));
        sub->add_option("-o,--output", out_path, "write output to a file instead of stdout");
    };

    // check
    std::vector<std::string> check_files;
    CLI::App* check = app.add_subcommand("check", "parse, link and structurally validate documents");
    check->add_option("files", check_files, "VarDL documents")->required();

    // derive
    std::string derive_base, derive_process, derive_context;
    std::vector<std::string> derive_options;
    CLI::App* derive = app.add_subcommand("derive", "apply options to a base process");
    derive->add_option("--base", derive_base, "document with base process and options")->required();
    derive->add_option("--process", derive_process, "base process name (default: first declared)");
    derive->add_option("--context", derive_context, "context name in the document, or a file");
    derive->add_option("--option", derive_options, "apply exactly these options, in order");
    add_output_opts(derive);

    // configure-cepc
    std::string conf_file, conf_cepc, conf_name;
    CLI::App* conf = app.add_subcommand("configure-cepc", "apply a configuration decision set");
    conf->add_option("--model", conf_file, "document with the configurable model")->required();
    conf->add_option("--cepc", conf_cepc, "configurable model name (default: the only one)");
    conf->add_option("--config", conf_name, "configuration name in the document")->required();
    add_output_opts(conf);

    // simulate
    std::string sim_parent, sim_model, sim_case;
    std::uint32_t sim_seed = 0;
    bool sim_exhaustive = false;
    CLI::App* sim = app.add_subcommand("simulate", "execute a late-binding model on case data");
    sim->add_option("--parent", sim_parent, "document with the late-binding model")->required();
    sim->add_option("--model", sim_model, "late-binding model name (default: the only one)");
    sim->add_option("--case", sim_case, "case-data context name in the document, or a file")
        ->required();
    sim->add_option("--seed", sim_seed, "random seed for branch choices");
    sim->add_flag("--exhaustive", sim_exhaustive, "enumerate all reachable traces instead");
    add_output_opts(sim);

    // resolve-pesoa
    std::string res_file, res_st, res_features, res_select;
    CLI::App* res = app.add_subcommand("resolve-pesoa", "resolve a stereotyped model");
    res->add_option("--model", res_file, "document with the stereotyped model")->required();
    res->add_option("--stereotypes", res_st, "stereotyped model name (default: the only one)");
    res->add_option("--features", res_features, "feature diagram name (cross-checked)");
    res->add_option("--select", res_select, "comma-separated selected features")->required();
    add_output_opts(res);

    // corpus
    std::string corpus_root_arg;
    bool corpus_json = false;
    CLI::App* corp = app.add_subcommand("corpus", "run the case-study corpus and cross-checks");
    corp->add_option("--root", corpus_root_arg, "corpus directory (default: BPVAR_CORPUS or search)");
    corp->add_flag("--json", corpus_json, "structured report");

    // dot
    std::string dot_file, dot_process;
    CLI::App* dotv = app.add_subcommand("dot", "render a process as Graphviz");
    dotv->add_option("--model", dot_file, "document with the process")->required();
    dotv->add_option("--process", dot_process, "process name (default: first declared)");
    dotv->add_option("-o,--output", out_path, "write output to a file instead of stdout");

    // diff
    std::string diff_old, diff_new, diff_old_proc, diff_new_proc;
    CLI::App* diffv = app.add_subcommand("diff", "structural diff of two processes");
    diffv->add_option("--old", diff_old, "document with the old process")->required();
    diffv->add_option("--new", diff_new, "document with the new process")->required();
    diffv->add_option("--old-process", diff_old_proc, "old process name (default: first declared)");
    diffv->add_option("--new-process", diff_new_proc, "new process name (default: first declared)");

    std::vector<const char*> argv;
    argv.push_back("bpvar");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (check->parsed()) return detail::run_check(check_files, out, err);
        if (derive->parsed())
            return detail::run_derive(derive_base, derive_process, derive_context, derive_options,
                                      format, out_path, out, err);
        if (conf->parsed())
            return detail::run_configure(conf_file, conf_cepc, conf_name, format, out_path, out,
                                         err);
        if (sim->parsed())
            return detail::run_simulate(sim_parent, sim_model, sim_case, sim_seed, sim_exhaustive,
                                        format, out_path, out, err);
        if (res->parsed())
            return detail::run_resolve(res_file, res_st, res_features, res_select, format,
                                       out_path, out, err);
        if (corp->parsed()) return detail::run_corpus(corpus_root_arg, corpus_json, out, err);
        if (dotv->parsed()) return detail::run_dot(dot_file, dot_process, out_path, out);
        if (diffv->parsed())
            return detail::run_diff(diff_old, diff_new, diff_old_proc, diff_new_proc, out);
    } catch (const Error& e) {
        err << detail::diagnose(e) << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "bpvar: error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace bpvar::cli
