#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tte/embedding.hpp"
#include "tte/registry.hpp"

namespace tte {
class ModelProvider;
}

namespace tte::metrics {

inline constexpr double kDefaultRtol = 1e-5;
inline constexpr double kDefaultAtol = 1e-8;

enum class GoldKind { Numeric, Symbolic, Text };
enum class JudgeMode { NumericLocal, ExactSymbolic, ProviderJudge };

std::string_view to_string(GoldKind kind) noexcept;
std::string_view to_string(JudgeMode mode) noexcept;
GoldKind gold_kind_from_string(std::string_view s);

struct GoldAnswer {
    GoldKind kind = GoldKind::Numeric;
    nlohmann::json value;  // number or string
};

// |p - g| <= max(rtol * |g|, atol). Non-finite inputs never match.
bool judge_numeric(double predicted, double gold, double rtol = kDefaultRtol, double atol = kDefaultAtol);
bool judge_numeric(std::string_view predicted, std::string_view gold, double rtol = kDefaultRtol,
                   double atol = kDefaultAtol);

// Whole-string parse with scientific notation; throws UnparseableNumber.
double parse_number(std::string_view text);

// Last number in free text. Digits glued to a letter or '^' (unit exponents
// such as m^3 or cm2) are not numbers; "20,000" reads as 20000.
std::optional<double> extract_last_number(std::string_view text);

// Lowercase; symbolic drops all whitespace, text collapses runs to one space.
std::string normalize_answer(std::string_view text, GoldKind kind);

struct EvalRecord {
    std::string problem_id;
    std::optional<std::string> predicted;
    GoldAnswer gold;
    bool correct = false;
    JudgeMode judge_mode = JudgeMode::NumericLocal;
    std::string diagnostic;
};

struct JudgeOptions {
    double rtol = kDefaultRtol;
    double atol = kDefaultAtol;
    bool use_provider = false;        // ProviderJudge; off by default
    ModelProvider* provider = nullptr;
    std::string question;             // context for the provider rubric
};

// Never throws: judging failures become correct=false with a diagnostic.
EvalRecord judge(std::string problem_id, std::optional<std::string> predicted, GoldAnswer gold,
                 const JudgeOptions& options = {});

// Recursive tolerance match used for tool test examples.
bool results_match(const nlohmann::json& actual, const nlohmann::json& expected, double rtol = kDefaultRtol,
                   double atol = kDefaultAtol);

// |{t : usage_count >= k}| / |L|. Throws EmptyLibrary, InvalidArgument (k = 0).
double trr_at_k(std::span<const AtomicTool> tools, std::uint64_t k);
inline double trr_at_k(const ToolLibrary& library, std::uint64_t k) { return trr_at_k(library.tools(), k); }

struct StratifiedTrr {
    std::optional<double> evol;   // nullopt: no Evolved tools
    std::optional<double> trans;  // nullopt: no Predefined tools
};
StratifiedTrr trr_stratified(std::span<const AtomicTool> tools, std::uint64_t k);
inline StratifiedTrr trr_stratified(const ToolLibrary& library, std::uint64_t k) {
    return trr_stratified(library.tools(), k);
}

// sum_t (1{correct_t} - lambda * |L_t|). Throws LengthMismatch.
double cumulative_utility(std::span<const EvalRecord> records, std::span<const std::size_t> library_sizes,
                          double lambda);

struct HitHistogram {
    std::map<std::uint64_t, std::size_t> counts;  // hit-count -> number of tools
    std::size_t total_tools = 0;
};
HitHistogram hit_histogram(std::span<const AtomicTool> tools);
inline HitHistogram hit_histogram(const ToolLibrary& library) { return hit_histogram(library.tools()); }

// Reporting bins: 0, 1-2, 3-4, 5-9, 10-49, 50+.
std::vector<std::pair<std::string, std::size_t>> histogram_bins(const HitHistogram& h);

struct SampleItem {
    std::string id;
    EmbeddingVector embedding;
};

// Lloyd's K-means (k-means++ seeding, <= 100 iterations, stops when no
// assignment changes), then min(per_cluster, |cluster|) ids drawn uniformly
// without replacement from each cluster. Output: cluster by cluster, input
// order within a cluster.
std::vector<std::string> stratified_seed_sample(std::span<const SampleItem> items, std::size_t n_clusters,
                                                std::size_t per_cluster, std::uint64_t seed);

// Cluster assignment only (exposed for tests).
std::vector<std::size_t> kmeans_assign(std::span<const SampleItem> items, std::size_t n_clusters, std::uint64_t seed);

inline const std::vector<std::uint64_t> kReportKs{1, 2, 5, 10};

// {accuracy, trr: {k: value|null}, trr_evol: {k: value|null}, trr_trans: {...},
//  utility, histogram: {bins, counts, total_tools}}
nlohmann::ordered_json build_report(std::span<const EvalRecord> records, const ToolLibrary& library,
                                    std::span<const std::size_t> library_sizes, double lambda);

std::string csv_escape(std::string_view field);

}  // namespace tte::metrics
