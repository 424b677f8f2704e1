#include "tte/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tte/error.hpp"
#include "tte/prompts.hpp"
#include "tte/python_source.hpp"

namespace tte {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kVerbPrefixes[] = {"calculate_", "compute_", "convert_", "get_",
                                              "find_",      "estimate_", "determine_"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool extends(std::string_view longer, std::string_view shorter) {
    return longer.size() > shorter.size() + 1 && longer.substr(0, shorter.size()) == shorter &&
           longer[shorter.size()] == '_';
}

double parse_double(std::string_view key, std::string_view v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(std::string(v), &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, std::string(key) + ": not a number: " + std::string(v));
    }
}

long parse_long(std::string_view key, std::string_view v) {
    try {
        std::size_t used = 0;
        const long n = std::stol(std::string(v), &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return n;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, std::string(key) + ": not an integer: " + std::string(v));
    }
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorCode::InvalidArgument, std::string(key) + ": not a boolean: " + std::string(v));
}

// Publishes a step result into the binding environment.
void publish(json& env, const std::string& function_name, int step, const json& result) {
    for (const std::string& key : result_keys(function_name)) env[key] = result;
    env["step_" + std::to_string(step)] = result;
    if (result.is_object()) {
        for (auto it = result.begin(); it != result.end(); ++it) env[it.key()] = it.value();
    }
}

ordered_json tool_catalog(const ChainTool& tool, const python::FunctionDef& fn) {
    ordered_json props = ordered_json::object();
    ordered_json required = ordered_json::array();
    for (const python::Parameter& p : fn.parameters) {
        props[p.name] = ordered_json::object();
        if (!p.has_default) required.push_back(p.name);
    }
    ordered_json entry;
    entry["type"] = "function";
    entry["function"] = {{"name", tool.name},
                         {"description", tool.description},
                         {"parameters", {{"type", "object"}, {"properties", props}, {"required", required}}}};
    return ordered_json::array({entry});
}

}  // namespace

Problem problem_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "problem must be an object");
    auto str = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
            throw Error(ErrorCode::InvalidArgument, std::string("problem needs a non-empty string '") + key + "'");
        }
        return j[key].get<std::string>();
    };
    Problem p;
    p.id = str("id");
    p.question = str("question");
    if (!j.contains("gold") || !j["gold"].is_object()) {
        throw Error(ErrorCode::InvalidArgument, "problem '" + p.id + "' needs a gold object");
    }
    const json& g = j["gold"];
    if (!g.contains("kind") || !g["kind"].is_string() || !g.contains("value")) {
        throw Error(ErrorCode::InvalidArgument, "problem '" + p.id + "': gold needs kind and value");
    }
    p.gold.kind = metrics::gold_kind_from_string(g["kind"].get<std::string>());
    p.gold.value = g["value"];
    if (!p.gold.value.is_number() && !p.gold.value.is_string()) {
        throw Error(ErrorCode::InvalidArgument, "problem '" + p.id + "': gold value must be a number or string");
    }
    if (j.contains("domain") && j["domain"].is_string()) p.domain = j["domain"].get<std::string>();
    return p;
}

std::vector<Problem> parse_corpus(std::string_view jsonl) {
    std::vector<Problem> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "corpus line " + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(problem_from_json(j));
    }
    return out;
}

void EngineConfig::validate() const {
    auto unit = [](const char* name, double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must lie in [0, 1]");
    };
    unit("tau_ret", tau_ret);
    unit("tau_dup", tau_dup);
    if (top_k == 0) throw Error(ErrorCode::InvalidArgument, "top_k must be positive");
    if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "capacity must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
    }
    if (timeout_ms <= 0) throw Error(ErrorCode::InvalidArgument, "timeout_ms must be positive");
    if (memory_cap_mb && *memory_cap_mb <= 0) throw Error(ErrorCode::InvalidArgument, "memory_cap_mb must be positive");
}

void EngineConfig::set(std::string_view key, std::string_view value) {
    auto non_negative = [&](long n) {
        if (n < 0) throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be >= 0");
        return n;
    };
    if (key == "tau_ret") tau_ret = parse_double(key, value);
    else if (key == "tau_dup") tau_dup = parse_double(key, value);
    else if (key == "top_k") top_k = static_cast<std::size_t>(non_negative(parse_long(key, value)));
    else if (key == "capacity") capacity = static_cast<std::size_t>(non_negative(parse_long(key, value)));
    else if (key == "min_usage") min_usage = static_cast<std::uint64_t>(non_negative(parse_long(key, value)));
    else if (key == "lambda") lambda = parse_double(key, value);
    else if (key == "temperature") temperature = parse_double(key, value);
    else if (key == "timeout_ms") timeout_ms = parse_long(key, value);
    else if (key == "memory_cap_mb") {
        if (value == "null" || value.empty()) memory_cap_mb.reset();
        else memory_cap_mb = parse_long(key, value);
    } else if (key == "assisted_split") assisted_split = parse_bool(key, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

ordered_json EngineConfig::to_json() const {
    ordered_json j;
    j["tau_ret"] = tau_ret;
    j["tau_dup"] = tau_dup;
    j["top_k"] = top_k;
    j["capacity"] = capacity;
    j["min_usage"] = min_usage;
    j["lambda"] = lambda;
    j["temperature"] = temperature;
    j["timeout_ms"] = timeout_ms;
    j["memory_cap_mb"] = memory_cap_mb ? json(*memory_cap_mb) : json(nullptr);
    j["assisted_split"] = assisted_split;
    return j;
}

EngineConfig EngineConfig::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    EngineConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const json& v = it.value();
        std::string text;
        if (v.is_string()) text = v.get<std::string>();
        else if (v.is_null()) text = "null";
        else text = v.dump();
        c.set(it.key(), text);
    }
    c.validate();
    return c;
}

std::string_view to_string(StepAction a) noexcept {
    switch (a) {
        case StepAction::Retrieved: return "retrieved";
        case StepAction::Evolved: return "evolved";
        case StepAction::DuplicateCredited: return "duplicate_credited";
        case StepAction::VerificationFailed: return "verification_failed";
        case StepAction::FallbackStep: return "fallback_step";
    }
    return "?";
}

std::string_view to_string(FinalAction a) noexcept {
    switch (a) {
        case FinalAction::ChainAnswer: return "chain_answer";
        case FinalAction::FallbackAnswer: return "fallback_answer";
        case FinalAction::Failed: return "failed";
    }
    return "?";
}

ordered_json trace_to_json(const Problem& problem, const SolveResult& r) {
    ordered_json j;
    j["problem_id"] = problem.id;
    j["question"] = problem.question;
    if (r.trace.plan) {
        ordered_json plan;
        plan["original_problem"] = r.trace.plan->original_problem;
        ordered_json subtasks = ordered_json::array();
        for (const SubGoal& g : r.trace.plan->subtasks) {
            subtasks.push_back({{"step", g.step}, {"description", g.description}});
        }
        plan["subtasks"] = subtasks;
        plan["warnings"] = r.trace.plan->warnings;
        j["plan"] = plan;
    } else {
        j["plan"] = nullptr;
    }
    ordered_json steps = ordered_json::array();
    for (const StepRecord& s : r.trace.steps) {
        ordered_json e;
        e["step"] = s.subgoal.step;
        e["subgoal"] = s.subgoal.description;
        e["action"] = to_string(s.action);
        e["tool_id"] = s.tool_id.empty() ? ordered_json(nullptr) : ordered_json(s.tool_id);
        e["score"] = s.score ? ordered_json(*s.score) : ordered_json(nullptr);
        e["registered"] = s.registered;
        e["credited"] = s.credited;
        e["pruned"] = s.pruned;
        e["diagnostics"] = s.diagnostics;
        e["arguments"] = s.arguments ? ordered_json(*s.arguments) : ordered_json(nullptr);
        e["intermediate_result"] = s.intermediate_result ? ordered_json(*s.intermediate_result) : ordered_json(nullptr);
        steps.push_back(std::move(e));
    }
    j["steps"] = steps;
    j["final_action"] = to_string(r.trace.final_action);
    j["answer"] = r.answer ? ordered_json(*r.answer) : ordered_json(nullptr);
    j["notes"] = r.trace.notes;
    j["library_before_size"] = r.library_before_size;
    j["library_after_size"] = r.library_after_size;
    return j;
}

std::vector<std::string> result_keys(std::string_view function_name) {
    std::vector<std::string> keys{std::string(function_name)};
    for (std::string_view prefix : kVerbPrefixes) {
        if (function_name.size() > prefix.size() && function_name.substr(0, prefix.size()) == prefix) {
            keys.emplace_back(function_name.substr(prefix.size()));
            break;
        }
    }
    return keys;
}

json bind_arguments(const std::vector<std::string>& parameters, const json& env, std::vector<std::string>* unbound) {
    json args = json::object();
    for (const std::string& p : parameters) {
        const json* exact = nullptr;
        const json* loose = nullptr;
        for (auto it = env.begin(); it != env.end(); ++it) {
            if (it.key() == p) exact = &it.value();
            else if (extends(p, it.key()) || extends(it.key(), p)) loose = &it.value();
        }
        if (const json* v = exact ? exact : loose) {
            args[p] = *v;
        } else if (unbound) {
            unbound->push_back(p);
        }
    }
    return args;
}

Engine::Engine(EngineConfig config, Providers providers, Sandbox& sandbox)
    : config_(std::move(config)), providers_(providers), sandbox_(sandbox) {
    config_.validate();
}

VerifyLimits Engine::limits() const {
    VerifyLimits l;
    l.timeout_ms = config_.timeout_ms;
    l.memory_cap_mb = config_.memory_cap_mb;
    return l;
}

std::string Engine::fresh_id(const ToolLibrary& library, const std::string& name) const {
    std::string id = name + "-" + std::to_string(library.next_seq());
    for (int n = 2; library.contains(id); ++n) {
        id = name + "-" + std::to_string(library.next_seq()) + "-" + std::to_string(n);
    }
    return id;
}

void Engine::evolve_step(const Problem& problem, const SubGoal& subgoal,
                         const std::vector<prompts::StepEntry>& prior, ToolLibrary& library, StepRecord& rec,
                         std::vector<ChainTool>& chain) {
    SynthesisOutput synth;
    try {
        synth = synthesize_tool(providers_.model, problem.question, subgoal, prior);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ProviderUnavailable) throw;
        rec.action = StepAction::FallbackStep;
        rec.diagnostics.push_back(e.what());
        return;
    }
    if (synth.tools.empty()) {
        rec.action = StepAction::FallbackStep;
        rec.diagnostics.push_back("synthesizer answered without a tool");
        return;
    }
    const ProposedTool* picked = &synth.tools.front();
    for (const ProposedTool& t : synth.tools) {
        if (trim(t.sub_question) == trim(subgoal.description)) {
            picked = &t;
            break;
        }
    }
    ProposedTool tool = *picked;

    const VerificationReport report = verify(tool, sandbox_, limits());
    if (!report.overall) {
        rec.action = StepAction::VerificationFailed;
        rec.diagnostics.insert(rec.diagnostics.end(), report.diagnostics.begin(), report.diagnostics.end());
        return;
    }

    std::vector<ProposedTool> atoms;
    try {
        const SourceCheck accept = [this](const std::string& src) {
            return sandbox_.check(src, config_.timeout_ms).ok;
        };
        atoms = config_.assisted_split ? atomic_decompose(tool, provider_splitter(providers_.model), accept)
                                       : atomic_decompose(tool);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ProviderUnavailable || e.code() == ErrorCode::SandboxUnavailable) throw;
        rec.action = StepAction::VerificationFailed;
        rec.diagnostics.push_back(e.what());
        return;
    }

    std::string main_id;
    bool main_registered = false;
    for (const ProposedTool& atom : atoms) {
        // Every registered atom must pass the syntax gate on its own.
        if (atoms.size() > 1) {
            const SandboxResponse c = sandbox_.check(atom.source, config_.timeout_ms);
            if (!c.ok) {
                rec.diagnostics.push_back("atom " + atom.name + " rejected: " + c.error.value_or("check failed"));
                continue;
            }
        }
        const EmbeddingVector code_emb = providers_.code_embedder.embed(atom.source);
        const DedupDecision dd = dedup_check(code_emb, library, config_.tau_dup);
        std::string id;
        if (dd.accept) {
            AtomicTool t;
            t.id = fresh_id(library, atom.name);
            t.name = atom.name;
            t.description = trim(atom.text_description).empty() ? atom.sub_question : atom.text_description;
            t.io_description = atom.io_description;
            t.source = atom.source;
            t.test_example = atom.test_example;
            t.usage_count = 1;
            t.origin = ToolOrigin::Evolved;
            t.desc_embedding = providers_.desc_embedder.embed(t.description);
            t.code_embedding = code_emb;
            id = t.id;
            library.register_tool(std::move(t));
            rec.registered.push_back(id);
        } else {
            id = dd.nearest_id;
            library.record_hit(id);
            rec.credited.push_back(id);
        }
        if (atom.name == tool.name || main_id.empty()) {
            main_id = id;
            main_registered = dd.accept;
        }
    }
    rec.pruned = library.prune().removed();

    rec.action = main_registered ? StepAction::Evolved : StepAction::DuplicateCredited;
    rec.tool_id = main_id;
    ChainTool ct;
    ct.step = subgoal.step;
    ct.sub_question = subgoal.description;
    ct.name = tool.name;
    ct.description = tool.text_description;
    ct.source = tool.source;
    ct.tool_id = main_id;
    chain.push_back(std::move(ct));
}

SolveResult Engine::solve(const Problem& problem, ToolLibrary& library) {
    SolveResult res;
    res.trace.problem_id = problem.id;
    res.library_before_size = library.size();
    std::vector<ChainTool> chain;

    auto finish_fallback = [&](const std::string& why) {
        res.trace.notes.push_back(why);
        try {
            res.answer = fallback(problem);
            res.trace.final_action = FinalAction::FallbackAnswer;
        } catch (const Error& e) {
            res.trace.notes.push_back(std::string("fallback failed: ") + e.what());
            res.answer.reset();
            res.trace.final_action = FinalAction::Failed;
        }
    };

    try {
        try {
            res.trace.plan = decompose(providers_.model, problem.question);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ProviderUnavailable) throw;
            finish_fallback(std::string("decomposition failed: ") + e.what());
            res.library_after_size = library.size();
            return res;
        }
        const DecompositionPlan& plan = *res.trace.plan;

        std::vector<prompts::StepEntry> prior;
        for (const SubGoal& g : plan.subtasks) {
            StepRecord rec;
            rec.subgoal = g;
            const auto candidates = retrieve_top_k(library, g.description, config_.top_k,
                                                   providers_.desc_embedder, providers_.reranker);
            const RetrievalDecision d = decide(candidates, config_.tau_ret);
            rec.score = d.best_score;
            const std::size_t chain_before = chain.size();
            if (d.matched) {
                library.record_hit(d.tool_id);
                const AtomicTool* t = library.find(d.tool_id);
                rec.action = StepAction::Retrieved;
                rec.tool_id = d.tool_id;
                ChainTool ct;
                ct.step = g.step;
                ct.sub_question = g.description;
                ct.name = t->name;
                ct.description = t->description;
                ct.source = t->source;
                ct.tool_id = t->id;
                chain.push_back(std::move(ct));
            } else {
                evolve_step(problem, g, prior, library, rec, chain);
            }
            prior.push_back({g.step, g.description,
                             chain.size() > chain_before ? std::optional<std::string>(chain.back().source)
                                                         : std::nullopt,
                             std::nullopt});
            res.trace.steps.push_back(std::move(rec));
        }

        try {
            res.answer = execute_chain(problem, chain, plan, &res.trace.steps);
            res.trace.final_action = FinalAction::ChainAnswer;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ProviderUnavailable || e.code() == ErrorCode::SandboxUnavailable) throw;
            finish_fallback(std::string("chain failed: ") + e.what());
        }
    } catch (const Error& e) {
        res.trace.notes.push_back(std::string("aborted: ") + e.what());
        res.answer.reset();
        res.trace.final_action = FinalAction::Failed;
    }
    res.library_after_size = library.size();
    return res;
}

std::string Engine::execute_chain(const Problem& problem, const std::vector<ChainTool>& chain,
                                  const DecompositionPlan& plan, std::vector<StepRecord>* steps) {
    if (chain.empty()) throw Error(ErrorCode::ChainExecutionFailed, "empty tool chain");
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ChainExecutionFailed, msg); };
    auto record_for = [&](int step) -> StepRecord* {
        if (!steps) return nullptr;
        for (StepRecord& r : *steps) {
            if (r.subgoal.step == step) return &r;
        }
        return nullptr;
    };

    json env = json::object();
    std::map<int, std::pair<std::string, json>> executed;  // step -> (source, result)
    for (const ChainTool& tool : chain) {
        const python::ModuleLayout layout = python::split_module(tool.source);
        const python::FunctionDef* fn = python::find_function(layout, tool.name);
        if (!fn) fail("tool source does not define '" + tool.name + "'");

        std::vector<std::string> names;
        for (const python::Parameter& p : fn->parameters) names.push_back(p.name);
        std::vector<std::string> unbound;
        json args = bind_arguments(names, env, &unbound);
        bool needs_call = false;
        for (const python::Parameter& p : fn->parameters) {
            if (!p.has_default && std::find(unbound.begin(), unbound.end(), p.name) != unbound.end()) needs_call = true;
        }
        if (needs_call) {
            std::string context = tool.sub_question + "\nMain question: " + problem.question;
            if (!env.empty()) context += "\nKnown values: " + env.dump();
            const std::string reply =
                providers_.model.complete(prompts::toolcall_prompt(context, tool_catalog(tool, *fn).dump(2)));
            std::optional<ToolCall> call;
            try {
                call = parse_tool_call(reply);
            } catch (const Error& e) {
                fail(std::string("step ") + std::to_string(tool.step) + ": " + e.what());
            }
            if (!call) fail("step " + std::to_string(tool.step) + ": executor made no tool call");
            if (call->name != tool.name) fail("step " + std::to_string(tool.step) + ": call to unknown tool '" + call->name + "'");
            for (auto it = args.begin(); it != args.end(); ++it) {
                if (!call->arguments.contains(it.key())) call->arguments[it.key()] = it.value();
            }
            args = call->arguments;
        }

        const SandboxResponse resp = sandbox_.run(tool.source, tool.name, args, config_.timeout_ms, config_.memory_cap_mb);
        StepRecord* rec = record_for(tool.step);
        if (rec) rec->arguments = args;
        if (!resp.ok) fail("step " + std::to_string(tool.step) + " (" + tool.name + "): " + resp.error.value_or("error"));
        const json result = resp.result.value_or(json(nullptr));
        if (contains_non_finite(result)) fail("step " + std::to_string(tool.step) + ": non-finite result");
        if (rec) rec->intermediate_result = result;
        publish(env, tool.name, tool.step, result);
        executed[tool.step] = {tool.source, result};
    }

    std::vector<prompts::StepEntry> entries;
    for (const SubGoal& g : plan.subtasks) {
        prompts::StepEntry e{g.step, g.description, std::nullopt, std::nullopt};
        if (auto it = executed.find(g.step); it != executed.end()) {
            e.code = it->second.first;
            e.result = it->second.second;
        }
        entries.push_back(std::move(e));
    }
    const std::string reply = providers_.model.complete(prompts::synthesis_prompt(problem.question, entries));
    std::optional<std::string> answer = extract_answer(reply);
    if (!answer || answer->empty()) fail("final synthesis produced no <answer>");
    return *answer;
}

std::string Engine::fallback(const Problem& problem) {
    const std::string reply = providers_.model.complete(prompts::fallback_prompt(problem.question));
    std::string answer = extract_answer(reply).value_or(trim(reply));
    if (answer.empty()) throw Error(ErrorCode::SynthesisEmpty, "fallback produced an empty answer");
    return answer;
}

StreamResult run_stream(const std::vector<Problem>& problems, ToolLibrary initial_library, Engine& engine,
                        const StreamObserver& observer) {
    StreamResult out{{}, std::move(initial_library), {}};
    for (std::size_t i = 0; i < problems.size(); ++i) {
        out.results.push_back(engine.solve(problems[i], out.library));
        out.library_sizes.push_back(out.library.size());
        if (observer) observer(i, out.results.back(), out.library);
    }
    return out;
}

}  // namespace tte
