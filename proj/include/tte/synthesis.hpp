#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tte/prompts.hpp"
#include "tte/provider.hpp"
#include "tte/registry.hpp"

namespace tte {

struct SubGoal {
    int step = 0;
    std::string description;

    bool operator==(const SubGoal&) const = default;
};

struct DecompositionPlan {
    std::string original_problem;
    std::vector<SubGoal> subtasks;
    std::vector<std::string> warnings;  // parser repairs, not part of equality

    bool operator==(const DecompositionPlan& o) const {
        return original_problem == o.original_problem && subtasks == o.subtasks;
    }
};

// A tool as proposed by the synthesizer. test_example.expected holds the
// "result" field of the wire format.
struct ProposedTool {
    std::string sub_question;
    std::string name;
    std::string source;
    std::string text_description;
    IoDescription io_description;
    TestExample test_example;
    std::optional<std::string> error;

    bool operator==(const ProposedTool&) const = default;
};

struct SynthesisOutput {
    std::vector<ProposedTool> tools;
    std::optional<std::string> answer;
};

// Finds the first balanced top-level JSON object or array starting with
// `open` ('{' or '['), skipping prose and code fences around it.
std::optional<std::string_view> extract_json_block(std::string_view text, char open);

// Throws MalformedDecomposition (no object / bad schema) or
// DecompositionEmpty (subtasks == []). Non-consecutive step numbers are
// renumbered 1..n with a warning.
DecompositionPlan parse_decomposition_json(std::string_view text);
std::string serialize_plan(const DecompositionPlan& plan);

// Throws MalformedToolJson when a <code> block is present but is not a JSON
// list of well-formed tool objects.
SynthesisOutput parse_synthesis_output(std::string_view text);
nlohmann::ordered_json proposed_tool_to_json(const ProposedTool& tool);

// Text inside the first <answer> block (trimmed); an unclosed block runs to
// the end of the text.
std::optional<std::string> extract_answer(std::string_view text);

DecompositionPlan decompose(ModelProvider& provider, std::string_view problem);

// prior_steps are rendered before the current subgoal, whose code is null.
SynthesisOutput synthesize_tool(ModelProvider& provider, std::string_view problem, const SubGoal& subgoal,
                                const std::vector<prompts::StepEntry>& prior_steps);

// Optional second opinion on splitting; its candidates replace the static
// split only when every one passes `accept`.
using AssistedSplitter = std::function<std::vector<ProposedTool>(const ProposedTool&)>;
using SourceCheck = std::function<bool(const std::string& source)>;

// Static splitter: every top-level function becomes one candidate carrying the
// shared module preamble. A single-function source maps to itself.
// Throws NoFunctionFound.
std::vector<ProposedTool> atomic_decompose(const ProposedTool& proposed, const AssistedSplitter& assisted = {},
                                           const SourceCheck& accept = {});

// Provider-backed AssistedSplitter using the synthesis output format.
AssistedSplitter provider_splitter(ModelProvider& provider);

struct ToolCall {
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();
};

// OpenAI tool-call JSON: a list (or {"tool_calls": list}) of zero or one
// calls. Returns nullopt for an empty list; throws MalformedToolCall otherwise.
std::optional<ToolCall> parse_tool_call(std::string_view text);

}  // namespace tte
