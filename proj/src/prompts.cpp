#include "tte/prompts.hpp"

#include <algorithm>

namespace tte::prompts {

std::string substitute(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& slots) {
    struct Hit {
        std::size_t pos;
        std::size_t len;
        const std::string* value;
    };
    std::vector<Hit> hits;
    for (const auto& [key, value] : slots) {
        if (std::size_t pos = tmpl.find(key); pos != std::string_view::npos) hits.push_back({pos, key.size(), &value});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });

    std::string out;
    std::size_t cursor = 0;
    for (const Hit& h : hits) {
        if (h.pos < cursor) continue;  // overlapping slot names
        out.append(tmpl.substr(cursor, h.pos - cursor));
        out.append(*h.value);
        cursor = h.pos + h.len;
    }
    out.append(tmpl.substr(cursor));
    return out;
}

std::string render_step_entries(const std::vector<StepEntry>& steps) {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        nlohmann::ordered_json j;
        j["step"] = steps[i].step;
        j["sub_question"] = steps[i].sub_question;
        j["code"] = steps[i].code ? nlohmann::ordered_json(*steps[i].code) : nlohmann::ordered_json(nullptr);
        if (steps[i].result) j["result"] = nlohmann::ordered_json(*steps[i].result);
        if (i > 0) out += '\n';
        out += j.dump();
    }
    return out;
}

std::string decompose_prompt(std::string_view query) {
    return substitute(kDecomposeTemplate, {{"{query}", std::string(query)}});
}

std::string synthesis_prompt(std::string_view main_question, const std::vector<StepEntry>& steps) {
    return substitute(kSynthesisTemplate,
                      {{"{main_question}", std::string(main_question)}, {kStepSlot, render_step_entries(steps)}});
}

std::string toolcall_prompt(std::string_view sub_question, std::string_view tool_catalog) {
    return substitute(kToolCallTemplate, {{"{sub_question_or_operation}", std::string(sub_question)},
                                          {"{tool_catalog_with_signatures}", std::string(tool_catalog)}});
}

std::string fallback_prompt(std::string_view question) {
    std::string p =
        "[SYSTEM]\n"
        "You are an expert scientist. Solve the problem by careful step-by-step reasoning without tools.\n"
        "Wrap the final answer in <answer> ... </answer>.\n"
        "\n"
        "[USER]\n";
    p += question;
    return p;
}

std::string judge_prompt(std::string_view question, std::string_view predicted, std::string_view gold) {
    std::string p =
        "[SYSTEM]\n"
        "You grade answers to scientific questions. Numerical answers are correct when they agree with the\n"
        "reference within a relative tolerance of 1e-5; symbolic answers must be canonically equal.\n"
        "Reply with exactly one word: yes or no.\n"
        "\n"
        "[QUESTION]\n";
    p += question;
    p += "\n\n[REFERENCE]\n";
    p += gold;
    p += "\n\n[CANDIDATE]\n";
    p += predicted;
    return p;
}

}  // namespace tte::prompts
