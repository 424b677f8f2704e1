#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tte/embedding.hpp"
#include "tte/registry.hpp"

namespace tte {

struct ScoredTool {
    std::string tool_id;
    double score = 0.0;

    bool operator==(const ScoredTool&) const = default;
};

// Reorders retrieved candidates; the default keeps the cosine order.
class Reranker {
public:
    virtual ~Reranker() = default;
    virtual std::vector<ScoredTool> rerank(std::string_view query, std::vector<ScoredTool> candidates) const {
        (void)query;
        return candidates;
    }
};

// Top-k by cosine against desc_embedding, descending, ties by created_seq.
std::vector<ScoredTool> retrieve_top_k(const ToolLibrary& library, std::span<const double> query, std::size_t k);

std::vector<ScoredTool> retrieve_top_k(const ToolLibrary& library, std::string_view query_description,
                                       std::size_t k, Embedder& embedder, const Reranker* reranker = nullptr);

struct RetrievalDecision {
    bool matched = false;
    std::string tool_id;              // set when matched
    std::optional<double> best_score; // absent only on an empty library

    static RetrievalDecision match(std::string id, double score) { return {true, std::move(id), score}; }
    static RetrievalDecision miss(std::optional<double> best) { return {false, {}, best}; }
};

// Matched iff the head candidate scores >= tau_ret (inclusive boundary).
RetrievalDecision decide(const std::vector<ScoredTool>& candidates, double tau_ret);
RetrievalDecision decide(const ToolLibrary& library, std::span<const double> query, double tau_ret,
                         std::size_t k = 3);

struct LabeledScore {
    double score = 0.0;
    bool relevant = false;
};

struct ThresholdCalibration {
    double tau = 1.0;
    double f1 = 0.0;
};

// Sweeps tau over the observed scores (predict relevant iff score >= tau)
// and returns the F1-maximizing value; ties keep the smaller tau.
ThresholdCalibration calibrate_threshold(std::span<const LabeledScore> samples);

}  // namespace tte
