// Scripted-provider and stub-sandbox fixtures shared by the unit and
// acceptance suites. Tools are described once (name, parameters, Python
// source, C++ evaluator) and both sides of the loop are derived from that.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tte/provider.hpp"
#include "tte/sandbox.hpp"

namespace scenario {

using nlohmann::json;

struct ToolSpec {
    std::string name;
    std::vector<std::string> params;
    std::string body;  // indented Python statements after the docstring
    std::string summary;
    json test_input;
    json expected;
    std::function<json(const json&)> eval;

    std::string source() const {
        std::string s = "def " + name + "(";
        for (std::size_t i = 0; i < params.size(); ++i) s += (i ? ", " : "") + params[i];
        s += "):\n    \"\"\"" + summary + "\"\"\"\n" + body;
        if (s.back() != '\n') s += '\n';
        return s;
    }

    json wire(const std::string& sub_question) const {
        return {{"sub_question", sub_question},
                {"name", name},
                {"code", source()},
                {"text_description", summary},
                {"io_description", {{"input", "numbers"}, {"output", "number"}}},
                {"test_example", {{"input", test_input}, {"result", expected}}}};
    }
};

inline ToolSpec scale_tool(std::string name, std::string param, double factor, std::string summary) {
    ToolSpec t;
    t.name = std::move(name);
    t.params = {param};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", factor);
    t.body = "    return " + param + " * " + buf + "\n";
    t.summary = std::move(summary);
    t.test_input = {{param, 2.0}};
    t.expected = 2.0 * factor;
    t.eval = [param, factor](const json& a) { return json(a.at(param).get<double>() * factor); };
    return t;
}

inline ToolSpec convert_density() {
    return scale_tool("convert_density", "density_kg_m3", 1.0, "Convert density from kg/m3 to g/L.");
}
inline ToolSpec convert_pressure() {
    return scale_tool("convert_pressure", "pressure_kpa", 1000.0, "Convert pressure from kPa to Pa.");
}

inline ToolSpec calculate_molar_volume() {
    ToolSpec t;
    t.name = "calculate_molar_volume";
    t.params = {"pressure_pa", "temperature_k"};
    t.summary = "Compute molar volume Vm under the ideal gas law: Vm = RT/P.";
    t.body =
        "    R = 8.314462618  # J/(mol*K)\n"
        "    vm_m3_per_mol = (R * temperature_k) / pressure_pa\n"
        "    vm_L_per_mol = vm_m3_per_mol * 1000.0\n"
        "    return vm_L_per_mol\n";
    t.test_input = {{"pressure_pa", 20000.0}, {"temperature_k", 330.0}};
    t.expected = 8.314462618 * 330.0 / 20000.0 * 1000.0;
    t.eval = [](const json& a) {
        return json(8.314462618 * a.at("temperature_k").get<double>() / a.at("pressure_pa").get<double>() * 1000.0);
    };
    return t;
}

inline ToolSpec calculate_molar_mass() {
    ToolSpec t;
    t.name = "calculate_molar_mass";
    t.params = {"density_g_per_l", "molar_volume_l_per_mol"};
    t.summary = "Molar mass from density and molar volume: M = rho * Vm.";
    t.body = "    return density_g_per_l * molar_volume_l_per_mol\n";
    t.test_input = {{"density_g_per_l", 2.0}, {"molar_volume_l_per_mol", 3.0}};
    t.expected = 6.0;
    t.eval = [](const json& a) {
        return json(a.at("density_g_per_l").get<double>() * a.at("molar_volume_l_per_mol").get<double>());
    };
    return t;
}

// Evaluates registered tools by function name; check mode fails on the
// stub's syntax markers.
class EvalSandbox {
public:
    void add(const ToolSpec& t) { tools_[t.name] = t; }

    tte::StubSandbox make() const {
        tte::StubSandbox sb;
        auto tools = tools_;
        sb.handler = [tools](const tte::SandboxRequest& req) -> std::optional<tte::SandboxResponse> {
            if (req.source.find("def f(:") != std::string::npos) {
                return tte::SandboxResponse::failure("SyntaxError: invalid syntax");
            }
            if (req.mode == tte::SandboxMode::Check) return tte::SandboxResponse::success();
            if (req.source.find("while True:") != std::string::npos) return tte::SandboxResponse::failure("timeout");
            auto it = tools.find(req.function_name);
            if (it == tools.end() || req.source.find("def " + req.function_name + "(") == std::string::npos) {
                return tte::SandboxResponse::failure("function not found");
            }
            for (const std::string& p : it->second.params) {
                if (!req.args.contains(p)) {
                    return tte::SandboxResponse::failure("exception: TypeError: missing argument '" + p + "'");
                }
            }
            return tte::SandboxResponse::success(it->second.eval(req.args));
        };
        return sb;
    }

private:
    std::map<std::string, ToolSpec> tools_;
};

// Only the final synthesis prompt carries executed results; the template's
// own schema spells the key with a space after the colon.
inline constexpr const char* kResultMarker = "\",\"result\":";

inline std::string step_marker(const std::string& subgoal) {
    return "\"sub_question\":" + json(subgoal).dump() + ",\"code\":null}";
}

// Builds rule-based scripted providers for engine scenarios.
class Script {
public:
    Script& decompose(const std::string& question, const std::vector<std::string>& subtasks) {
        json plan = {{"original_problem", question}, {"subtasks", json::array()}};
        for (std::size_t i = 0; i < subtasks.size(); ++i) {
            plan["subtasks"].push_back({{"step", i + 1}, {"description", subtasks[i]}});
        }
        return raw_decompose(question, plan.dump(2));
    }

    Script& raw_decompose(const std::string& question, std::string response) {
        rules_.push_back({{"Decompose the user problem", "[USER]\n" + question}, {}, std::move(response)});
        return *this;
    }

    // Reply to the synthesis prompt whose current (code-less) step is `subgoal`.
    Script& synthesize(const std::string& question, const std::string& subgoal, const json& tools,
                       const std::string& answer = "pending") {
        return raw_synthesize(question, subgoal, "<code>\n" + tools.dump(2) + "\n</code>\n<answer>" + answer + "</answer>");
    }

    Script& raw_synthesize(const std::string& question, const std::string& subgoal, std::string response) {
        // A step without a tool keeps its null-code marker in later prompts,
        // so the most recently added step takes precedence.
        rules_.insert(rules_.begin(), {{"Main question:\n" + question + "\n", step_marker(subgoal)},
                                       {kResultMarker},
                                       std::move(response)});
        return *this;
    }

    Script& tool_call(const std::string& question, const std::string& subgoal, const std::string& name,
                      const json& args) {
        json call = json::array({{{"type", "function"}, {"function", {{"name", name}, {"arguments", args.dump()}}}}});
        rules_.push_back({{"strict tool-calling agent", "Problem: " + subgoal + "\nMain question: " + question + "\n"},
                          {},
                          call.dump()});
        return *this;
    }

    Script& final_answer(const std::string& question, const std::string& answer) {
        rules_.push_back({{"Main question:\n" + question + "\n", kResultMarker}, {}, "<answer>" + answer + "</answer>"});
        return *this;
    }

    Script& fallback(const std::string& question, const std::string& answer) {
        rules_.push_back({{"without tools", "[USER]\n" + question}, {}, "Reasoning...\n<answer>" + answer + "</answer>"});
        return *this;
    }

    tte::ScriptedProvider build() const {
        tte::ScriptedProvider p;
        for (const auto& r : rules_) p.add_rule(r);
        return p;
    }

    json to_json() const {
        json rules = json::array();
        for (const auto& r : rules_) {
            rules.push_back({{"contains", r.contains}, {"not_contains", r.not_contains}, {"response", r.response}});
        }
        return {{"responses", json::object()}, {"rules", rules}};
    }

private:
    std::vector<tte::ScriptedProvider::Rule> rules_;
};

}  // namespace scenario
