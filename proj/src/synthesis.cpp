#include "tte/synthesis.hpp"

#include <cctype>

#include "tte/error.hpp"
#include "tte/python_source.hpp"

namespace tte {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string trimmed(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

[[noreturn]] void malformed_plan(const std::string& why) { throw Error(ErrorCode::MalformedDecomposition, why); }
[[noreturn]] void malformed_tool(const std::string& why) { throw Error(ErrorCode::MalformedToolJson, why); }

// Free-text schema fields occasionally arrive as structured JSON.
std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::optional<std::string_view> extract_json_block(std::string_view text, char open) {
    const char close = open == '{' ? '}' : ']';
    const std::size_t start = text.find(open);
    if (start == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{' || c == '[') ++depth;
        else if (c == '}' || c == ']') {
            if (--depth == 0) {
                if (c != close) return std::nullopt;
                return text.substr(start, i - start + 1);
            }
        }
    }
    return std::nullopt;
}

DecompositionPlan parse_decomposition_json(std::string_view text) {
    auto block = extract_json_block(text, '{');
    if (!block) malformed_plan("no JSON object found in analyzer output");
    json doc;
    try {
        doc = json::parse(*block);
    } catch (const json::exception& e) {
        malformed_plan(std::string("analyzer JSON does not parse: ") + e.what());
    }
    if (!doc.contains("subtasks")) malformed_plan("missing \"subtasks\"");
    const json& subtasks = doc.at("subtasks");
    if (!subtasks.is_array()) malformed_plan("\"subtasks\" is not a list");

    DecompositionPlan plan;
    if (doc.contains("original_problem")) {
        if (!doc["original_problem"].is_string()) malformed_plan("\"original_problem\" is not a string");
        plan.original_problem = doc["original_problem"].get<std::string>();
    } else {
        plan.warnings.push_back("missing original_problem");
    }
    if (subtasks.empty()) throw Error(ErrorCode::DecompositionEmpty, "analyzer returned no subtasks");

    bool consecutive = true;
    for (std::size_t i = 0; i < subtasks.size(); ++i) {
        const json& st = subtasks[i];
        if (!st.is_object()) malformed_plan("subtask " + std::to_string(i + 1) + " is not an object");
        if (!st.contains("description") || !st["description"].is_string() ||
            trimmed(st["description"].get<std::string>()).empty()) {
            malformed_plan("subtask " + std::to_string(i + 1) + " lacks a description");
        }
        const int expected = static_cast<int>(i) + 1;
        if (!st.contains("step") || !st["step"].is_number_integer() || st["step"].get<int>() != expected) {
            consecutive = false;
        }
        plan.subtasks.push_back({expected, st["description"].get<std::string>()});
    }
    if (!consecutive) plan.warnings.push_back("step numbers were not 1..n; renumbered");
    return plan;
}

std::string serialize_plan(const DecompositionPlan& plan) {
    ordered_json doc;
    doc["original_problem"] = plan.original_problem;
    doc["subtasks"] = ordered_json::array();
    for (const SubGoal& s : plan.subtasks) doc["subtasks"].push_back({{"step", s.step}, {"description", s.description}});
    return doc.dump(2);
}

namespace {

ProposedTool tool_from_json(const json& j, std::size_t index) {
    const std::string where = "tool " + std::to_string(index + 1);
    if (!j.is_object()) malformed_tool(where + " is not an object");
    for (const char* key : {"sub_question", "name", "code", "text_description", "io_description", "test_example"}) {
        if (!j.contains(key)) malformed_tool(where + " lacks \"" + key + "\"");
    }
    ProposedTool t;
    if (!j["name"].is_string() || !is_snake_case(j["name"].get<std::string>())) {
        malformed_tool(where + " name is not a snake_case string");
    }
    t.name = j["name"].get<std::string>();
    if (!j["code"].is_string() || trimmed(j["code"].get<std::string>()).empty()) {
        malformed_tool(where + " has empty code");
    }
    t.source = j["code"].get<std::string>();
    t.sub_question = as_text(j["sub_question"]);
    t.text_description = as_text(j["text_description"]);

    const json& io = j["io_description"];
    if (!io.is_object()) malformed_tool(where + " io_description is not an object");
    t.io_description.input = io.contains("input") ? as_text(io["input"]) : "";
    t.io_description.output = io.contains("output") ? as_text(io["output"]) : "";

    const json& ex = j["test_example"];
    if (!ex.is_object() || !ex.contains("input") || !ex["input"].is_object()) {
        malformed_tool(where + " test_example.input is not an object");
    }
    t.test_example.input = ex["input"];
    t.test_example.expected = ex.contains("result") ? ex["result"] : json(nullptr);

    if (j.contains("error") && !j["error"].is_null()) {
        const std::string err = as_text(j["error"]);
        if (!trimmed(err).empty()) t.error = err;
    }
    return t;
}

std::optional<std::string_view> tag_block(std::string_view text, std::string_view open, std::string_view close,
                                          bool require_close) {
    std::size_t b = text.find(open);
    if (b == std::string_view::npos) return std::nullopt;
    b += open.size();
    std::size_t e = text.find(close, b);
    if (e == std::string_view::npos) {
        if (require_close) malformed_tool(std::string("unterminated ") + std::string(open) + " block");
        return text.substr(b);
    }
    return text.substr(b, e - b);
}

}  // namespace

std::optional<std::string> extract_answer(std::string_view text) {
    auto block = tag_block(text, "<answer>", "</answer>", false);
    if (!block) return std::nullopt;
    return trimmed(*block);
}

SynthesisOutput parse_synthesis_output(std::string_view text) {
    SynthesisOutput out;
    if (auto code = tag_block(text, "<code>", "</code>", true)) {
        json doc;
        try {
            doc = json::parse(*code);
        } catch (const json::exception& e) {
            malformed_tool(std::string("<code> block is not JSON: ") + e.what());
        }
        if (!doc.is_array()) malformed_tool("<code> block is not a JSON list");
        for (std::size_t i = 0; i < doc.size(); ++i) out.tools.push_back(tool_from_json(doc[i], i));
    }
    out.answer = extract_answer(text);
    return out;
}

ordered_json proposed_tool_to_json(const ProposedTool& t) {
    ordered_json j;
    j["sub_question"] = t.sub_question;
    j["name"] = t.name;
    j["code"] = t.source;
    j["text_description"] = t.text_description;
    j["io_description"] = {{"input", t.io_description.input}, {"output", t.io_description.output}};
    j["test_example"] = {{"input", ordered_json(t.test_example.input)},
                         {"result", ordered_json(t.test_example.expected)}};
    if (t.error) j["error"] = *t.error;
    return j;
}

DecompositionPlan decompose(ModelProvider& provider, std::string_view problem) {
    if (trimmed(problem).empty()) throw Error(ErrorCode::InvalidArgument, "problem text is empty");
    return parse_decomposition_json(provider.complete(prompts::decompose_prompt(problem)));
}

SynthesisOutput synthesize_tool(ModelProvider& provider, std::string_view problem, const SubGoal& subgoal,
                                const std::vector<prompts::StepEntry>& prior_steps) {
    std::vector<prompts::StepEntry> steps = prior_steps;
    steps.push_back({subgoal.step, subgoal.description, std::nullopt, std::nullopt});
    SynthesisOutput out = parse_synthesis_output(provider.complete(prompts::synthesis_prompt(problem, steps)));
    if (out.tools.empty() && !out.answer) {
        throw Error(ErrorCode::SynthesisEmpty, "synthesizer returned neither <code> nor <answer>");
    }
    return out;
}

std::vector<ProposedTool> atomic_decompose(const ProposedTool& proposed, const AssistedSplitter& assisted,
                                           const SourceCheck& accept) {
    const python::ModuleLayout layout = python::split_module(proposed.source);
    if (layout.functions.empty()) {
        throw Error(ErrorCode::NoFunctionFound, "tool '" + proposed.name + "' defines no function");
    }

    std::vector<ProposedTool> out;
    if (layout.functions.size() == 1) {
        out.push_back(proposed);
    } else {
        std::string preamble = trimmed(layout.preamble);
        if (!preamble.empty()) preamble += "\n\n\n";
        for (const python::FunctionDef& fn : layout.functions) {
            ProposedTool atom;
            atom.sub_question = proposed.sub_question;
            atom.name = fn.name;
            atom.source = preamble + fn.source;
            atom.text_description = fn.docstring_first_line.empty()
                                        ? proposed.text_description
                                        : fn.docstring_first_line + " " + proposed.text_description;
            if (fn.name == proposed.name) {
                atom.io_description = proposed.io_description;
                atom.test_example = proposed.test_example;
            }
            out.push_back(std::move(atom));
        }
    }

    if (assisted) {
        std::vector<ProposedTool> alt;
        try {
            alt = assisted(proposed);
        } catch (const Error&) {
            return out;
        }
        bool ok = !alt.empty();
        for (const ProposedTool& t : alt) {
            ok = ok && is_snake_case(t.name) && !t.source.empty() && (!accept || accept(t.source));
        }
        if (ok) return alt;
    }
    return out;
}

AssistedSplitter provider_splitter(ModelProvider& provider) {
    return [&provider](const ProposedTool& tool) {
        std::string prompt =
            "[SYSTEM]\n"
            "Split the Python tool below into independent atomic tools, one function each.\n"
            "Each atomic tool must run on its own. Keep names snake_case.\n"
            "Output a JSON list wrapped in <code> ... </code> with the same fields as the input.\n"
            "\n"
            "[TOOL]\n";
        prompt += proposed_tool_to_json(tool).dump(2);
        return parse_synthesis_output(provider.complete(prompt)).tools;
    };
}

namespace {

[[noreturn]] void malformed_call(const std::string& why) { throw Error(ErrorCode::MalformedToolCall, why); }

ToolCall call_from_json(const json& c) {
    if (!c.is_object()) malformed_call("tool call is not an object");
    const json& fn = c.contains("function") ? c["function"] : c;
    if (!fn.is_object() || !fn.contains("name") || !fn["name"].is_string()) malformed_call("tool call lacks a name");
    ToolCall call;
    call.name = fn["name"].get<std::string>();
    if (fn.contains("arguments")) {
        json args = fn["arguments"];
        if (args.is_string()) {
            try {
                args = json::parse(args.get<std::string>());
            } catch (const json::exception& e) {
                malformed_call(std::string("arguments string is not JSON: ") + e.what());
            }
        }
        if (!args.is_object()) malformed_call("arguments must be a JSON object");
        call.arguments = std::move(args);
    }
    return call;
}

}  // namespace

std::optional<ToolCall> parse_tool_call(std::string_view text) {
    const std::size_t obj = text.find('{');
    const std::size_t arr = text.find('[');
    std::optional<std::string_view> block;
    if (arr != std::string_view::npos && (obj == std::string_view::npos || arr < obj)) block = extract_json_block(text, '[');
    else block = extract_json_block(text, '{');
    if (!block) malformed_call("no tool-call JSON found");

    json doc;
    try {
        doc = json::parse(*block);
    } catch (const json::exception& e) {
        malformed_call(std::string("tool-call JSON does not parse: ") + e.what());
    }
    json calls;
    if (doc.is_array()) calls = doc;
    else if (doc.is_object() && doc.contains("tool_calls")) calls = doc["tool_calls"];
    else calls = json::array({doc});
    if (!calls.is_array()) malformed_call("\"tool_calls\" is not a list");
    if (calls.empty()) return std::nullopt;
    if (calls.size() > 1) malformed_call("expected exactly one tool call, got " + std::to_string(calls.size()));
    return call_from_json(calls[0]);
}

}  // namespace tte
