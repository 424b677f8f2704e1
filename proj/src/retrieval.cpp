#include "tte/retrieval.hpp"

#include <algorithm>

#include "tte/error.hpp"

namespace tte {

std::vector<ScoredTool> retrieve_top_k(const ToolLibrary& library, std::span<const double> query, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "top-k needs k >= 1");
    struct Row {
        double score;
        std::uint64_t seq;
        const std::string* id;
    };
    std::vector<Row> rows;
    rows.reserve(library.size());
    for (const AtomicTool& t : library.tools()) {
        rows.push_back({cosine_similarity(query, t.desc_embedding), t.created_seq, &t.id});
    }
    const std::size_t n = std::min(k, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n), rows.end(),
                      [](const Row& a, const Row& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.seq < b.seq;
                      });
    std::vector<ScoredTool> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({*rows[i].id, rows[i].score});
    return out;
}

std::vector<ScoredTool> retrieve_top_k(const ToolLibrary& library, std::string_view query_description,
                                       std::size_t k, Embedder& embedder, const Reranker* reranker) {
    if (library.empty()) return {};
    const EmbeddingVector q = embedder.embed(query_description);
    auto hits = retrieve_top_k(library, q, k);
    if (reranker) hits = reranker->rerank(query_description, std::move(hits));
    return hits;
}

RetrievalDecision decide(const std::vector<ScoredTool>& candidates, double tau_ret) {
    if (tau_ret < 0.0 || tau_ret > 1.0) throw Error(ErrorCode::InvalidArgument, "tau_ret must lie in [0, 1]");
    if (candidates.empty()) return RetrievalDecision::miss(std::nullopt);
    const ScoredTool& head = candidates.front();
    if (head.score >= tau_ret) return RetrievalDecision::match(head.tool_id, head.score);
    return RetrievalDecision::miss(head.score);
}

RetrievalDecision decide(const ToolLibrary& library, std::span<const double> query, double tau_ret, std::size_t k) {
    return decide(retrieve_top_k(library, query, k), tau_ret);
}

ThresholdCalibration calibrate_threshold(std::span<const LabeledScore> samples) {
    ThresholdCalibration best;
    if (samples.empty()) return best;
    std::vector<double> taus;
    for (const auto& s : samples) taus.push_back(s.score);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

    std::size_t positives = 0;
    for (const auto& s : samples) positives += s.relevant ? 1 : 0;

    bool first = true;
    for (double tau : taus) {
        std::size_t tp = 0, fp = 0;
        for (const auto& s : samples) {
            if (s.score >= tau) (s.relevant ? tp : fp) += 1;
        }
        const std::size_t fn = positives - tp;
        const double denom = static_cast<double>(2 * tp + fp + fn);
        const double f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
        if (first || f1 > best.f1) {
            best = {tau, f1};
            first = false;
        }
    }
    return best;
}

}  // namespace tte
