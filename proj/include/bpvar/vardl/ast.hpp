#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bpvar/cepc.hpp"
#include "bpvar/model.hpp"
#include "bpvar/pesoa.hpp"
#include "bpvar/provop.hpp"
#include "bpvar/source_span.hpp"
#include "bpvar/worklet.hpp"

namespace bpvar::vardl {

// Declaration nodes hold exactly what the file states; cross-declaration
// references (process names, feature-model names, ...) stay symbolic until
// `link` materializes them into Document::linked. Source spans never take
// part in equality, so a parse → serialize → parse round trip compares equal.

struct ImportDecl {
    std::string path;
    SourceSpan span;

    friend bool operator==(const ImportDecl& a, const ImportDecl& b) { return a.path == b.path; }
};

struct ProcessDecl {
    ProcessModel model;
    std::set<std::string> worklet_tasks; // labels of nodes flagged `worklet task`
    SourceSpan span;

    friend bool operator==(const ProcessDecl& a, const ProcessDecl& b) {
        return a.model == b.model && a.worklet_tasks == b.worklet_tasks;
    }
};

struct OptionDecl {
    Option option; // insert-by-name ops carry fragment_ref; fragment stays empty until link
    SourceSpan span;

    friend bool operator==(const OptionDecl& a, const OptionDecl& b) {
        return a.option == b.option;
    }
};

struct ContextDecl {
    std::string name;
    Context vars;
    SourceSpan span;

    friend bool operator==(const ContextDecl& a, const ContextDecl& b) {
        return a.name == b.name && a.vars == b.vars;
    }
};

struct CepcDecl {
    std::string name;
    std::string base_ref;
    std::set<std::string> functions;
    std::map<std::string, std::set<GatewayKind>> connectors;
    std::vector<std::string> requirements; // predicate source text, parsed at link
    std::vector<std::string> guidelines;
    SourceSpan span;

    friend bool operator==(const CepcDecl& a, const CepcDecl& b) {
        return a.name == b.name && a.base_ref == b.base_ref && a.functions == b.functions &&
               a.connectors == b.connectors && a.requirements == b.requirements &&
               a.guidelines == b.guidelines;
    }
};

struct ConfigDecl {
    std::string name;
    std::string cepc_ref;
    Configuration config;
    SourceSpan span;

    friend bool operator==(const ConfigDecl& a, const ConfigDecl& b) {
        return a.name == b.name && a.cepc_ref == b.cepc_ref && a.config == b.config;
    }
};

struct RdrDecl {
    RdrTree tree;
    SourceSpan span;

    friend bool operator==(const RdrDecl& a, const RdrDecl& b) { return a.tree == b.tree; }
};

struct RepertoireDecl {
    std::string name;                                        // optional
    std::vector<std::pair<std::string, std::string>> entries; // worklet -> process ref ("" = EMPTY)
    SourceSpan span;

    friend bool operator==(const RepertoireDecl& a, const RepertoireDecl& b) {
        return a.name == b.name && a.entries == b.entries;
    }
};

struct FeaturesDecl {
    FeatureModel fm;
    SourceSpan span;

    friend bool operator==(const FeaturesDecl& a, const FeaturesDecl& b) { return a.fm == b.fm; }
};

struct StereotypesDecl {
    struct RawVariant {
        std::string name;
        std::string of;           // variation-point label
        std::string fragment_ref; // process name
        bool is_default = false;

        friend bool operator==(const RawVariant&, const RawVariant&) = default;
    };

    std::string name;
    std::string base_ref;
    std::string features_ref;
    std::vector<std::string> varpoints;
    std::vector<RawVariant> variants;
    std::vector<std::string> optionals;
    std::vector<std::string> nullables;
    std::vector<std::pair<std::string, std::vector<std::string>>> params; // label -> attrs
    std::vector<std::pair<std::string, std::vector<FeatureBinding>>> binds; // feature -> bindings
    SourceSpan span;

    friend bool operator==(const StereotypesDecl& a, const StereotypesDecl& b) {
        return a.name == b.name && a.base_ref == b.base_ref && a.features_ref == b.features_ref &&
               a.varpoints == b.varpoints && a.variants == b.variants &&
               a.optionals == b.optionals && a.nullables == b.nullables && a.params == b.params &&
               a.binds == b.binds;
    }
};

using Decl = std::variant<ImportDecl, ProcessDecl, OptionDecl, ContextDecl, CepcDecl, ConfigDecl,
                          RdrDecl, RepertoireDecl, FeaturesDecl, StereotypesDecl>;

/// Resolved view of a document: every symbolic reference materialized,
/// imports merged in (imported declarations first, own declarations after).
struct Linked {
    std::map<std::string, ProcessModel> processes;
    std::map<std::string, std::set<std::string>> process_worklet_tasks;
    std::vector<Option> options; // declaration order
    std::map<std::string, Context> contexts;
    std::map<std::string, CepcModel> cepc_models;

    struct NamedConfig {
        std::string cepc;
        Configuration config;
    };
    std::map<std::string, NamedConfig> configs;

    std::map<std::string, RdrTree> trees; // task label -> tree
    Repertoire repertoire;                // all repertoire declarations merged
    std::map<std::string, WorkletModel> worklet_models; // keyed by parent process name
    std::map<std::string, FeatureModel> feature_models;
    std::map<std::string, StereotypedModel> stereotyped;

    const Option* find_option(const std::string& name) const {
        for (const auto& o : options)
            if (o.name == name) return &o;
        return nullptr;
    }
};

struct Document {
    std::string filename;
    std::vector<Decl> decls; // file order, this file only (imports not inlined)
    Linked linked;           // filled by link()/load_file()

    friend bool operator==(const Document& a, const Document& b) { return a.decls == b.decls; }
};

} // namespace bpvar::vardl
