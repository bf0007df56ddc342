#pragma once

#include <string>

namespace bpvar {

/// Location of a construct in a VarDL source file. Lines and columns are
/// 1-based; a default-constructed span means "no source attached".
struct SourceSpan {
    std::string file;
    int line = 0;
    int column = 0;
    int end_line = 0;
    int end_column = 0;

    bool valid() const { return line > 0; }

    std::string to_string() const {
        if (!valid()) return "<no location>";
        return file + ":" + std::to_string(line) + ":" + std::to_string(column);
    }

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

} // namespace bpvar
