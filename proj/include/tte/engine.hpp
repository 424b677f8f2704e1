#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tte/embedding.hpp"
#include "tte/metrics.hpp"
#include "tte/provider.hpp"
#include "tte/registry.hpp"
#include "tte/retrieval.hpp"
#include "tte/sandbox.hpp"
#include "tte/synthesis.hpp"
#include "tte/verification.hpp"

namespace tte {

struct Problem {
    std::string id;
    std::string question;
    metrics::GoldAnswer gold;
    std::optional<std::string> domain;
};

// One JSON-lines record: {id, question, gold: {kind, value}, domain?}.
Problem problem_from_json(const nlohmann::json& j);
std::vector<Problem> parse_corpus(std::string_view jsonl);

struct EngineConfig {
    double tau_ret = 0.55;
    double tau_dup = 0.8;
    std::size_t top_k = 3;
    std::size_t capacity = 500;
    std::uint64_t min_usage = 1;
    double lambda = 0.0;
    double temperature = 0.3;
    long timeout_ms = 10'000;
    std::optional<long> memory_cap_mb;
    bool assisted_split = false;

    // Throws InvalidArgument when a value is out of range.
    void validate() const;
    // Applies one "key=value" override; throws InvalidArgument.
    void set(std::string_view key, std::string_view value);
    nlohmann::ordered_json to_json() const;
    static EngineConfig from_json(const nlohmann::json& j);
};

enum class StepAction { Retrieved, Evolved, DuplicateCredited, VerificationFailed, FallbackStep };
enum class FinalAction { ChainAnswer, FallbackAnswer, Failed };

std::string_view to_string(StepAction a) noexcept;
std::string_view to_string(FinalAction a) noexcept;

struct StepRecord {
    SubGoal subgoal;
    StepAction action = StepAction::FallbackStep;
    std::string tool_id;                // Retrieved / Evolved / DuplicateCredited target
    std::optional<double> score;        // best retrieval score seen for the subgoal
    std::vector<std::string> registered;
    std::vector<std::string> credited;  // duplicate-credit recipients
    std::vector<std::string> pruned;
    std::vector<std::string> diagnostics;
    std::optional<nlohmann::json> arguments;
    std::optional<nlohmann::json> intermediate_result;
};

struct ExecutionTrace {
    std::string problem_id;
    std::optional<DecompositionPlan> plan;
    std::vector<StepRecord> steps;  // one per subgoal
    FinalAction final_action = FinalAction::Failed;
    std::vector<std::string> notes;
};

struct SolveResult {
    std::optional<std::string> answer;  // present iff final_action != Failed
    ExecutionTrace trace;
    std::size_t library_before_size = 0;
    std::size_t library_after_size = 0;
};

// Deterministic, stable-key-order trace document.
nlohmann::ordered_json trace_to_json(const Problem& problem, const SolveResult& result);

struct Providers {
    ModelProvider& model;
    Embedder& desc_embedder;
    Embedder& code_embedder;
    const Reranker* reranker = nullptr;
};

// A tool scheduled for execution at one plan step.
struct ChainTool {
    int step = 0;
    std::string sub_question;
    std::string name;
    std::string description;
    std::string source;
    std::string tool_id;  // library id when the tool is (or was credited to) a library entry
};

// Environment keys a result is published under: the function name and the
// name with a leading verb (calculate_, convert_, ...) removed.
std::vector<std::string> result_keys(std::string_view function_name);

// Binds parameters from named values. A parameter matches a key exactly, or
// when one extends the other by "_<suffix>" (units). Later values win.
nlohmann::json bind_arguments(const std::vector<std::string>& parameters, const nlohmann::json& env,
                              std::vector<std::string>* unbound = nullptr);

class Engine {
public:
    Engine(EngineConfig config, Providers providers, Sandbox& sandbox);

    // One problem; mutates the library into L_{t+1}.
    SolveResult solve(const Problem& problem, ToolLibrary& library);

    // Throws ChainExecutionFailed. steps (if given) receive arguments and
    // intermediate results, indexed like plan.subtasks.
    std::string execute_chain(const Problem& problem, const std::vector<ChainTool>& chain,
                              const DecompositionPlan& plan, std::vector<StepRecord>* steps = nullptr);

    // Reasoning-only answer; throws ProviderUnavailable / TranscriptMiss.
    std::string fallback(const Problem& problem);

    const EngineConfig& config() const noexcept { return config_; }

private:
    VerifyLimits limits() const;
    void evolve_step(const Problem& problem, const SubGoal& subgoal, const std::vector<prompts::StepEntry>& prior,
                     ToolLibrary& library, StepRecord& rec, std::vector<ChainTool>& chain);
    std::string fresh_id(const ToolLibrary& library, const std::string& name) const;

    EngineConfig config_;
    Providers providers_;
    Sandbox& sandbox_;
};

struct StreamResult {
    std::vector<SolveResult> results;
    ToolLibrary library;
    std::vector<std::size_t> library_sizes;  // |L_t| after each problem
};

using StreamObserver = std::function<void(std::size_t index, const SolveResult&, const ToolLibrary&)>;

// Online setting: solve in order, threading the library through.
StreamResult run_stream(const std::vector<Problem>& problems, ToolLibrary initial_library, Engine& engine,
                        const StreamObserver& observer = {});

}  // namespace tte
