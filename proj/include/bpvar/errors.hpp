#pragma once

#include <exception>
#include <string>
#include <utility>

#include "bpvar/source_span.hpp"

namespace bpvar {

/// Base class for every library error. `code()` is a stable, machine-readable
/// identifier; `what()` is the human-readable message (with source location
/// when one is known). `prepend_context()` lets a caller add surrounding
/// context (e.g. which option and operation failed) while the concrete
/// exception type is preserved by rethrowing the original object.
class Error : public std::exception {
public:
    Error(std::string code, const std::string& message, SourceSpan span = {})
        : message_(span.valid() ? span.to_string() + ": " + message : message),
          code_(std::move(code)),
          span_(std::move(span)) {}

    const char* what() const noexcept override { return message_.c_str(); }
    const std::string& code() const { return code_; }
    const SourceSpan& span() const { return span_; }

    void prepend_context(const std::string& context) {
        message_ = context + ": " + message_;
    }

private:
    std::string message_;
    std::string code_;
    SourceSpan span_;
};

#define BPVAR_DEFINE_ERROR(NAME, CODE)                                        \
    class NAME : public Error {                                               \
    public:                                                                    \
        explicit NAME(const std::string& message, SourceSpan span = {})       \
            : Error(CODE, message, std::move(span)) {}                        \
    }

// process graph
BPVAR_DEFINE_ERROR(CyclicModel, "cyclic-model");
BPVAR_DEFINE_ERROR(AmbiguousLabels, "ambiguous-labels");

// change operations (shared by the option, configuration and resolution engines)
BPVAR_DEFINE_ERROR(TargetNotFound, "target-not-found");
BPVAR_DEFINE_ERROR(AnchorNotFound, "anchor-not-found");
BPVAR_DEFINE_ERROR(IllegalSplice, "illegal-splice");
BPVAR_DEFINE_ERROR(InvalidResult, "invalid-result");
BPVAR_DEFINE_ERROR(OrderConflict, "order-conflict");

// configurable models
BPVAR_DEFINE_ERROR(UnknownTarget, "unknown-target");
BPVAR_DEFINE_ERROR(InvalidConfiguration, "invalid-configuration");

// late-binding rule trees
BPVAR_DEFINE_ERROR(UnknownWorklet, "unknown-worklet");
BPVAR_DEFINE_ERROR(MissingTree, "missing-tree");
BPVAR_DEFINE_ERROR(RedundantRule, "redundant-rule");
BPVAR_DEFINE_ERROR(ConditionRejectsCase, "condition-rejects-case");

// feature-based resolution
BPVAR_DEFINE_ERROR(InvalidSelection, "invalid-selection");
BPVAR_DEFINE_ERROR(UnboundVariationPoint, "unbound-variation-point");
BPVAR_DEFINE_ERROR(ConflictingBindings, "conflicting-bindings");

// language front end
BPVAR_DEFINE_ERROR(SyntaxError, "syntax-error");
BPVAR_DEFINE_ERROR(UnresolvedReference, "unresolved-reference");
BPVAR_DEFINE_ERROR(DuplicateName, "duplicate-name");
BPVAR_DEFINE_ERROR(ImportError, "import-error");

#undef BPVAR_DEFINE_ERROR

} // namespace bpvar
