#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tte/registry.hpp"
#include "tte/sandbox.hpp"
#include "tte/synthesis.hpp"

namespace tte {

struct VerificationReport {
    bool syntax_ok = false;
    bool exec_ok = false;
    bool domain_ok = false;
    bool overall = false;  // syntax_ok && exec_ok && domain_ok
    std::vector<std::string> diagnostics;
    double syntax_ms = 0.0;
    double exec_ms = 0.0;
    double domain_ms = 0.0;
    std::optional<nlohmann::json> test_result;  // value the tool returned on its test example
};

// Extra domain predicate; returns a diagnostic to reject the result.
using DomainCheck = std::function<std::optional<std::string>(const ProposedTool&, const nlohmann::json& result)>;

struct VerifyLimits {
    long timeout_ms = 10'000;
    std::optional<long> memory_cap_mb;
    double rtol = 1e-5;
    DomainCheck extra_check;
};

// True if any numeric leaf (or "NaN"/"Infinity"-style string) is non-finite.
bool contains_non_finite(const nlohmann::json& value);

// Syntax check, test-example execution, domain validation; short-circuits
// left to right. Throws InvalidTool on an unnamed/empty tool and propagates
// SandboxUnavailable.
VerificationReport verify(const ProposedTool& tool, Sandbox& sandbox, const VerifyLimits& limits = {});

struct DedupDecision {
    bool accept = true;
    std::string nearest_id;  // set on reject
    double score = 0.0;      // max similarity (0 when the library is empty)
};

// Accept iff max cosine over library code embeddings < tau_dup (strict).
// Ties on the max resolve to the smallest created_seq.
DedupDecision dedup_check(std::span<const double> candidate_code_embedding, const ToolLibrary& library, double tau_dup);

}  // namespace tte
