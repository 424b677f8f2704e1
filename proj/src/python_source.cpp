#include "tte/python_source.hpp"

#include <cctype>

namespace tte::python {

namespace {

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) lines.push_back(s.substr(start));
            break;
        }
        lines.push_back(s.substr(start, nl - start + 1));  // keeps '\n'
        start = nl + 1;
    }
    return lines;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Tracks open string literals and bracket depth across lines.
struct ScanState {
    int depth = 0;
    char quote = 0;       // active quote char, 0 when not in a string
    bool triple = false;

    bool continuing() const { return depth > 0 || quote != 0; }

    void feed(std::string_view line) {
        std::size_t i = 0;
        while (i < line.size()) {
            char c = line[i];
            if (quote) {
                if (c == '\\') {
                    i += 2;
                    continue;
                }
                if (c == quote) {
                    if (!triple) {
                        quote = 0;
                    } else if (line.substr(i, 3) == std::string(3, quote)) {
                        quote = 0;
                        triple = false;
                        i += 3;
                        continue;
                    }
                }
                ++i;
                continue;
            }
            if (c == '#') break;
            if (c == '"' || c == '\'') {
                if (line.substr(i, 3) == std::string(3, c)) {
                    quote = c;
                    triple = true;
                    i += 3;
                    continue;
                }
                quote = c;
                triple = false;
            } else if (c == '(' || c == '[' || c == '{') {
                ++depth;
            } else if ((c == ')' || c == ']' || c == '}') && depth > 0) {
                --depth;
            }
            ++i;
        }
        if (quote && !triple) quote = 0;  // unterminated single-line string
    }
};

bool starts_keyword(std::string_view line, std::string_view kw) {
    return line.starts_with(kw) && line.size() > kw.size() &&
           (line[kw.size()] == ' ' || line[kw.size()] == '\t');
}

std::vector<std::string> split_top_level_commas(std::string_view s) {
    std::vector<std::string> parts;
    int depth = 0;
    char quote = 0;
    std::string cur;
    for (char c : s) {
        if (quote) {
            cur += c;
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
            continue;
        }
        cur += c;
    }
    if (!trim(cur).empty()) parts.push_back(cur);
    return parts;
}

void parse_signature(std::string_view src, FunctionDef& fn) {
    std::size_t def = src.find("def ");
    if (def == std::string_view::npos) return;
    std::size_t name_begin = def + 4;
    while (name_begin < src.size() && src[name_begin] == ' ') ++name_begin;
    std::size_t name_end = name_begin;
    while (name_end < src.size() && (std::isalnum(static_cast<unsigned char>(src[name_end])) || src[name_end] == '_')) {
        ++name_end;
    }
    fn.name = std::string(src.substr(name_begin, name_end - name_begin));

    std::size_t open = src.find('(', name_end);
    if (open == std::string_view::npos) return;
    int depth = 0;
    char quote = 0;
    std::size_t close = open;
    for (std::size_t i = open; i < src.size(); ++i) {
        char c = src[i];
        if (quote) {
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        else if (c == '(') ++depth;
        else if (c == ')' && --depth == 0) {
            close = i;
            break;
        }
    }
    for (const std::string& raw : split_top_level_commas(src.substr(open + 1, close - open - 1))) {
        std::string_view p = trim(raw);
        if (p.empty() || p == "*" || p == "/") continue;
        if (p.starts_with("**")) {
            fn.var_kwargs = true;
            continue;
        }
        if (p.starts_with("*")) {
            fn.var_args = true;
            continue;
        }
        Parameter param;
        std::size_t eq = p.find('=');
        param.has_default = eq != std::string_view::npos;
        std::string_view head = p.substr(0, eq);
        std::size_t colon = head.find(':');
        param.name = std::string(trim(head.substr(0, colon)));
        if (param.name == "self" || param.name == "cls") continue;
        fn.parameters.push_back(std::move(param));
    }

    // Docstring: first statement after the header colon, if it is a string.
    std::size_t body = src.find(':', close);
    if (body == std::string_view::npos) return;
    std::string_view rest = src.substr(body + 1);
    std::size_t k = 0;
    while (k < rest.size() && std::isspace(static_cast<unsigned char>(rest[k]))) ++k;
    while (k < rest.size() && (rest[k] == 'r' || rest[k] == 'R' || rest[k] == 'u' || rest[k] == 'U')) ++k;
    if (k >= rest.size() || (rest[k] != '"' && rest[k] != '\'')) return;
    const char q = rest[k];
    const bool triple = rest.substr(k, 3) == std::string(3, q);
    const std::string terminator = triple ? std::string(3, q) : std::string(1, q);
    std::size_t content_begin = k + terminator.size();
    std::size_t content_end = rest.find(terminator, content_begin);
    std::string_view content = rest.substr(content_begin, content_end == std::string_view::npos
                                                              ? std::string_view::npos
                                                              : content_end - content_begin);
    for (std::string_view line : split_lines(content)) {
        std::string_view t = trim(line);
        if (!t.empty()) {
            fn.docstring_first_line = std::string(t);
            return;
        }
    }
}

}  // namespace

ModuleLayout split_module(std::string_view source) {
    ModuleLayout layout;
    enum class Block { Preamble, Function };
    Block current = Block::Preamble;
    std::string pending_decorators;
    std::string fn_source;
    ScanState state;

    auto flush_function = [&] {
        if (current == Block::Function) {
            FunctionDef fn;
            parse_signature(fn_source, fn);
            fn.source = fn_source;
            while (!fn.source.empty() && (fn.source.back() == '\n' || fn.source.back() == ' ')) fn.source.pop_back();
            fn.source += '\n';
            layout.functions.push_back(std::move(fn));
            fn_source.clear();
        }
        current = Block::Preamble;
    };

    for (std::string_view line : split_lines(source)) {
        const bool logical_start = !state.continuing();
        state.feed(line);
        if (!logical_start) {
            (current == Block::Function ? fn_source : layout.preamble) += line;
            continue;
        }
        std::string_view t = trim(line);
        const bool top_level = !line.empty() && !std::isspace(static_cast<unsigned char>(line[0])) && !t.empty() &&
                               t[0] != '#';
        if (!top_level) {
            if (!pending_decorators.empty()) pending_decorators += line;
            else (current == Block::Function ? fn_source : layout.preamble) += line;
            continue;
        }
        if (line[0] == '@') {
            flush_function();
            pending_decorators += line;
            continue;
        }
        if (starts_keyword(line, "def") || (starts_keyword(line, "async") && trim(line.substr(5)).starts_with("def "))) {
            flush_function();
            current = Block::Function;
            fn_source = pending_decorators;
            pending_decorators.clear();
            fn_source += line;
            continue;
        }
        flush_function();
        layout.preamble += pending_decorators;  // decorated class
        pending_decorators.clear();
        layout.preamble += line;
    }
    flush_function();
    layout.preamble += pending_decorators;
    return layout;
}

const FunctionDef* find_function(const ModuleLayout& layout, std::string_view name) {
    for (const FunctionDef& f : layout.functions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

}  // namespace tte::python
