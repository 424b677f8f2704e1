#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tte::prompts {

// Verbatim analyzer / executor / synthesizer templates.
extern const std::string_view kDecomposeTemplate;
extern const std::string_view kToolCallTemplate;
extern const std::string_view kSynthesisTemplate;

// The line of kSynthesisTemplate replaced by the rendered step list.
inline constexpr std::string_view kStepSlot = "{(step_i, sub_question_i, code_i)}  # repeated for i=1..n";

// One (step, sub_question, code) entry of the synthesis input block.
// code == nullopt renders as null ("missing"); result is only emitted when
// the step has already been executed.
struct StepEntry {
    int step = 0;
    std::string sub_question;
    std::optional<std::string> code;
    std::optional<nlohmann::json> result;
};

// Replaces each slot's first occurrence in the template, scanning the
// template only (substituted text is never re-scanned).
std::string substitute(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& slots);

std::string render_step_entries(const std::vector<StepEntry>& steps);

std::string decompose_prompt(std::string_view query);
std::string synthesis_prompt(std::string_view main_question, const std::vector<StepEntry>& steps);
std::string toolcall_prompt(std::string_view sub_question, std::string_view tool_catalog);
std::string fallback_prompt(std::string_view question);
std::string judge_prompt(std::string_view question, std::string_view predicted, std::string_view gold);

}  // namespace tte::prompts
