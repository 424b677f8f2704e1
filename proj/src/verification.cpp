#include "tte/verification.hpp"

#include <chrono>
#include <cmath>

#include "tte/error.hpp"
#include "tte/metrics.hpp"

namespace tte {

using nlohmann::json;

bool contains_non_finite(const json& v) {
    if (v.is_number_float()) return !std::isfinite(v.get<double>());
    if (v.is_string()) {
        const std::string s = metrics::normalize_answer(v.get<std::string>(), metrics::GoldKind::Symbolic);
        return s == "nan" || s == "inf" || s == "-inf" || s == "+inf" || s == "infinity" || s == "-infinity";
    }
    if (v.is_array() || v.is_object()) {
        for (const auto& el : v) {
            if (contains_non_finite(el)) return true;
        }
    }
    return false;
}

VerificationReport verify(const ProposedTool& tool, Sandbox& sandbox, const VerifyLimits& limits) {
    if (tool.name.empty() || tool.source.empty()) {
        throw Error(ErrorCode::InvalidTool, "verify needs a named tool with source");
    }
    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };
    VerificationReport rep;

    auto t0 = Clock::now();
    const SandboxResponse checked = sandbox.check(tool.source, limits.timeout_ms);
    rep.syntax_ms = ms_since(t0);
    rep.syntax_ok = checked.ok;
    if (!rep.syntax_ok) {
        rep.diagnostics.push_back("syntax: " + checked.error.value_or("check failed"));
        return rep;
    }

    t0 = Clock::now();
    const SandboxResponse ran =
        sandbox.run(tool.source, tool.name, tool.test_example.input, limits.timeout_ms, limits.memory_cap_mb);
    rep.exec_ms = ms_since(t0);
    rep.exec_ok = ran.ok;
    if (!rep.exec_ok) {
        rep.diagnostics.push_back("exec: " + ran.error.value_or("run failed"));
        return rep;
    }
    rep.test_result = ran.result.value_or(json(nullptr));

    t0 = Clock::now();
    const json& result = *rep.test_result;
    rep.domain_ok = true;
    if (contains_non_finite(result)) {
        rep.domain_ok = false;
        rep.diagnostics.push_back("domain: result has a non-finite component");
    } else if (!tool.test_example.expected.is_null() &&
               !metrics::results_match(result, tool.test_example.expected, limits.rtol)) {
        rep.domain_ok = false;
        rep.diagnostics.push_back("domain: result " + result.dump() + " does not match expected " +
                                  tool.test_example.expected.dump());
    } else if (limits.extra_check) {
        if (auto why = limits.extra_check(tool, result)) {
            rep.domain_ok = false;
            rep.diagnostics.push_back("domain: " + *why);
        }
    }
    rep.domain_ms = ms_since(t0);
    rep.overall = rep.syntax_ok && rep.exec_ok && rep.domain_ok;
    return rep;
}

DedupDecision dedup_check(std::span<const double> candidate, const ToolLibrary& library, double tau_dup) {
    if (tau_dup < 0.0 || tau_dup > 1.0) throw Error(ErrorCode::InvalidArgument, "tau_dup must lie in [0, 1]");
    DedupDecision d;
    const AtomicTool* nearest = nullptr;
    double best = -2.0;
    for (const AtomicTool& t : library.tools()) {  // created_seq order: first max wins
        const double s = cosine_similarity(candidate, t.code_embedding);
        if (s > best) {
            best = s;
            nearest = &t;
        }
    }
    if (!nearest) return d;
    d.score = best;
    if (best >= tau_dup) {
        d.accept = false;
        d.nearest_id = nearest->id;
    }
    return d;
}

}  // namespace tte
