#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tte::python {

struct Parameter {
    std::string name;
    bool has_default = false;
};

struct FunctionDef {
    std::string name;
    std::string source;              // decorators + def + body, verbatim
    std::string docstring_first_line;
    std::vector<Parameter> parameters;  // positional-or-keyword and keyword-only
    bool var_args = false;
    bool var_kwargs = false;
};

// Top-level layout of a module: every column-0 `def` (with its decorators)
// becomes a FunctionDef; all other top-level statements (imports, constants,
// classes) are concatenated in order into the preamble.
struct ModuleLayout {
    std::string preamble;
    std::vector<FunctionDef> functions;
};

// Line scanner aware of string literals, comments and bracket nesting.
// Not a parser: it assumes the source already passed a syntax check.
ModuleLayout split_module(std::string_view source);

const FunctionDef* find_function(const ModuleLayout& layout, std::string_view name);

}  // namespace tte::python
