#include "tte/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>

#include "tte/error.hpp"
#include "tte/prompts.hpp"
#include "tte/provider.hpp"

namespace tte::metrics {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(GoldKind kind) noexcept {
    switch (kind) {
        case GoldKind::Numeric: return "numeric";
        case GoldKind::Symbolic: return "symbolic";
        case GoldKind::Text: return "text";
    }
    return "numeric";
}

std::string_view to_string(JudgeMode mode) noexcept {
    switch (mode) {
        case JudgeMode::NumericLocal: return "NumericLocal";
        case JudgeMode::ExactSymbolic: return "ExactSymbolic";
        case JudgeMode::ProviderJudge: return "ProviderJudge";
    }
    return "NumericLocal";
}

GoldKind gold_kind_from_string(std::string_view s) {
    if (s == "numeric") return GoldKind::Numeric;
    if (s == "symbolic") return GoldKind::Symbolic;
    if (s == "text") return GoldKind::Text;
    throw Error(ErrorCode::InvalidArgument, "unknown gold kind: " + std::string(s));
}

bool judge_numeric(double predicted, double gold, double rtol, double atol) {
    if (rtol < 0.0 || atol < 0.0) throw Error(ErrorCode::InvalidArgument, "tolerances must be non-negative");
    if (!std::isfinite(predicted) || !std::isfinite(gold)) return false;
    return std::abs(predicted - gold) <= std::max(rtol * std::abs(gold), atol);
}

double parse_number(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    const std::string s(text.substr(b, e - b));
    const bool charset_ok = !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E';
    });
    if (charset_ok) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() + s.size() && std::isfinite(v)) return v;
    }
    throw Error(ErrorCode::UnparseableNumber, "'" + std::string(text) + "'");
}

bool judge_numeric(std::string_view predicted, std::string_view gold, double rtol, double atol) {
    return judge_numeric(parse_number(predicted), parse_number(gold), rtol, atol);
}

std::optional<double> extract_last_number(std::string_view t) {
    auto digit = [&](std::size_t i) { return i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])); };
    std::optional<double> last;
    std::size_t i = 0;
    while (i < t.size()) {
        const bool starts = digit(i) || (t[i] == '.' && digit(i + 1));
        if (!starts) {
            ++i;
            continue;
        }
        const char prev = i > 0 ? t[i - 1] : ' ';
        const bool glued = std::isalpha(static_cast<unsigned char>(prev)) || prev == '^' || prev == '_';

        std::size_t j = i;
        std::string num;
        if (!glued && prev == '-' && (i < 2 || !std::isalnum(static_cast<unsigned char>(t[i - 2])))) num = "-";
        // integer part with optional thousands groups
        std::size_t int_begin = j;
        while (digit(j)) num += t[j++];
        const std::size_t int_len = j - int_begin;
        while (int_len > 0 && int_len <= 3 && j + 3 < t.size() + 1 && t[j] == ',' && digit(j + 1) && digit(j + 2) &&
               digit(j + 3) && !digit(j + 4)) {
            num.append(t.substr(j + 1, 3));
            j += 4;
        }
        if (j < t.size() && t[j] == '.' && digit(j + 1)) {
            num += t[j++];
            while (digit(j)) num += t[j++];
        } else if (j < t.size() && t[j] == '.' && int_len > 0) {
            ++j;  // "169." at a sentence end
        }
        if (j < t.size() && (t[j] == 'e' || t[j] == 'E')) {
            std::size_t k = j + 1;
            if (k < t.size() && (t[k] == '+' || t[k] == '-')) ++k;
            if (digit(k)) {
                num += t.substr(j, k - j);
                while (digit(k)) num += t[k++];
                j = k;
            }
        }
        if (!glued) {
            const double v = std::strtod(num.c_str(), nullptr);
            if (std::isfinite(v)) last = v;
        }
        i = std::max(j, i + 1);
    }
    return last;
}

std::string normalize_answer(std::string_view text, GoldKind kind) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            pending_space = kind != GoldKind::Symbolic && !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(uc));
    }
    return out;
}

namespace {

std::optional<double> gold_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            return parse_number(v.get<std::string>());
        } catch (const Error&) {
            return extract_last_number(v.get<std::string>());
        }
    }
    return std::nullopt;
}

std::string gold_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

EvalRecord judge(std::string problem_id, std::optional<std::string> predicted, GoldAnswer gold,
                 const JudgeOptions& options) {
    EvalRecord rec;
    rec.problem_id = std::move(problem_id);
    rec.predicted = std::move(predicted);
    rec.gold = std::move(gold);
    rec.judge_mode = options.use_provider                   ? JudgeMode::ProviderJudge
                     : rec.gold.kind == GoldKind::Numeric ? JudgeMode::NumericLocal
                                                            : JudgeMode::ExactSymbolic;
    if (!rec.predicted) {
        rec.diagnostic = "no prediction";
        return rec;
    }

    if (rec.judge_mode == JudgeMode::ProviderJudge) {
        if (!options.provider) {
            rec.diagnostic = "provider judge requested without a provider";
            return rec;
        }
        try {
            const std::string verdict = options.provider->complete(
                prompts::judge_prompt(options.question, *rec.predicted, gold_text(rec.gold.value)));
            const std::string v = normalize_answer(verdict, GoldKind::Text);
            rec.correct = v.rfind("yes", 0) == 0;
            rec.diagnostic = "judge said: " + v.substr(0, 16);
        } catch (const Error& e) {
            rec.diagnostic = e.what();
        }
        return rec;
    }

    if (rec.judge_mode == JudgeMode::NumericLocal) {
        const auto g = gold_number(rec.gold.value);
        if (!g) {
            rec.diagnostic = "gold value is not numeric";
            return rec;
        }
        const auto p = extract_last_number(*rec.predicted);
        if (!p) {
            rec.diagnostic = "no number in prediction";
            return rec;
        }
        rec.correct = judge_numeric(*p, *g, options.rtol, options.atol);
        if (!rec.correct) rec.diagnostic = "numeric mismatch";
        return rec;
    }

    rec.correct = normalize_answer(*rec.predicted, rec.gold.kind) ==
                  normalize_answer(gold_text(rec.gold.value), rec.gold.kind);
    if (!rec.correct) rec.diagnostic = "normalized text differs";
    return rec;
}

bool results_match(const json& actual, const json& expected, double rtol, double atol) {
    if (expected.is_null()) return true;
    if (expected.is_array()) {
        if (!actual.is_array() || actual.size() != expected.size()) return false;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (!results_match(actual[i], expected[i], rtol, atol)) return false;
        }
        return true;
    }
    if (expected.is_object()) {
        if (!actual.is_object() || actual.size() != expected.size()) return false;
        for (const auto& [k, v] : expected.items()) {
            if (!actual.contains(k) || !results_match(actual[k], v, rtol, atol)) return false;
        }
        return true;
    }
    if (expected.is_boolean()) return actual == expected;
    const auto e = gold_number(expected);
    if (e && (actual.is_number() || actual.is_string())) {
        const auto a = gold_number(actual);
        return a && judge_numeric(*a, *e, rtol, atol);
    }
    if (expected.is_string() && actual.is_string()) {
        return normalize_answer(actual.get<std::string>(), GoldKind::Text) ==
               normalize_answer(expected.get<std::string>(), GoldKind::Text);
    }
    return false;
}

double trr_at_k(std::span<const AtomicTool> tools, std::uint64_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "TRR needs k >= 1");
    if (tools.empty()) throw Error(ErrorCode::EmptyLibrary, "TRR is undefined on an empty library");
    const auto hits = std::count_if(tools.begin(), tools.end(), [k](const AtomicTool& t) { return t.usage_count >= k; });
    return static_cast<double>(hits) / static_cast<double>(tools.size());
}

StratifiedTrr trr_stratified(std::span<const AtomicTool> tools, std::uint64_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "TRR needs k >= 1");
    std::size_t n_evol = 0, hit_evol = 0, n_pre = 0, hit_pre = 0;
    for (const AtomicTool& t : tools) {
        const bool hit = t.usage_count >= k;
        if (t.origin == ToolOrigin::Evolved) {
            ++n_evol;
            hit_evol += hit ? 1 : 0;
        } else {
            ++n_pre;
            hit_pre += hit ? 1 : 0;
        }
    }
    StratifiedTrr out;
    if (n_evol > 0) out.evol = static_cast<double>(hit_evol) / static_cast<double>(n_evol);
    if (n_pre > 0) out.trans = static_cast<double>(hit_pre) / static_cast<double>(n_pre);
    return out;
}

double cumulative_utility(std::span<const EvalRecord> records, std::span<const std::size_t> library_sizes,
                          double lambda) {
    if (records.size() != library_sizes.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(records.size()) + " records vs " +
                                                   std::to_string(library_sizes.size()) + " library sizes");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < records.size(); ++t) {
        total += (records[t].correct ? 1.0 : 0.0) - lambda * static_cast<double>(library_sizes[t]);
    }
    return total;
}

HitHistogram hit_histogram(std::span<const AtomicTool> tools) {
    HitHistogram h;
    for (const AtomicTool& t : tools) ++h.counts[t.usage_count];
    h.total_tools = tools.size();
    return h;
}

std::vector<std::pair<std::string, std::size_t>> histogram_bins(const HitHistogram& h) {
    std::vector<std::pair<std::string, std::size_t>> bins{{"0", 0},    {"1-2", 0},   {"3-4", 0},
                                                          {"5-9", 0},  {"10-49", 0}, {"50+", 0}};
    for (const auto& [hits, n] : h.counts) {
        std::size_t idx = hits == 0 ? 0 : hits <= 2 ? 1 : hits <= 4 ? 2 : hits <= 9 ? 3 : hits <= 49 ? 4 : 5;
        bins[idx].second += n;
    }
    return bins;
}

namespace {

double sq_dist(const EmbeddingVector& a, const EmbeddingVector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

}  // namespace

std::vector<std::size_t> kmeans_assign(std::span<const SampleItem> items, std::size_t n_clusters, std::uint64_t seed) {
    if (n_clusters == 0) throw Error(ErrorCode::InvalidArgument, "n_clusters must be >= 1");
    if (items.empty()) throw Error(ErrorCode::InvalidArgument, "no items to cluster");
    const std::size_t dim = items[0].embedding.size();
    for (const SampleItem& it : items) {
        if (it.embedding.size() != dim) throw Error(ErrorCode::DimensionMismatch, "item " + it.id);
    }
    const std::size_t n = items.size();
    const std::size_t k = std::min(n_clusters, n);
    std::mt19937_64 rng(seed);

    // k-means++ seeding
    std::vector<EmbeddingVector> centers;
    centers.push_back(items[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)].embedding);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(items[i].embedding, centers.back()));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        } else {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick + 1 < n; ++pick) {
                r -= d2[pick];
                if (r < 0.0) break;
            }
        }
        centers.push_back(items[pick].embedding);
    }

    std::vector<std::size_t> assign(n, k);  // k = unassigned
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = sq_dist(items[i].embedding, centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(items[i].embedding, centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<EmbeddingVector> sums(k, EmbeddingVector(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += items[i].embedding[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
    }
    return assign;
}

std::vector<std::string> stratified_seed_sample(std::span<const SampleItem> items, std::size_t n_clusters,
                                                std::size_t per_cluster, std::uint64_t seed) {
    const auto assign = kmeans_assign(items, n_clusters, seed);
    const std::size_t k = std::min(n_clusters, items.size());
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::string> out;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (assign[i] == c) members.push_back(i);
        }
        if (members.size() > per_cluster) {
            for (std::size_t i = 0; i < per_cluster; ++i) {
                std::size_t j = std::uniform_int_distribution<std::size_t>(i, members.size() - 1)(rng);
                std::swap(members[i], members[j]);
            }
            members.resize(per_cluster);
            std::sort(members.begin(), members.end());
        }
        for (std::size_t i : members) out.push_back(items[i].id);
    }
    return out;
}

ordered_json build_report(std::span<const EvalRecord> records, const ToolLibrary& library,
                          std::span<const std::size_t> library_sizes, double lambda) {
    ordered_json r;
    if (records.empty()) {
        r["accuracy"] = nullptr;
    } else {
        const auto correct = std::count_if(records.begin(), records.end(), [](const EvalRecord& e) { return e.correct; });
        r["accuracy"] = static_cast<double>(correct) / static_cast<double>(records.size());
    }
    auto opt = [](std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json trr = ordered_json::object(), evol = ordered_json::object(), trans = ordered_json::object();
    for (std::uint64_t k : kReportKs) {
        const std::string key = std::to_string(k);
        trr[key] = library.empty() ? ordered_json(nullptr) : ordered_json(trr_at_k(library, k));
        const StratifiedTrr s = trr_stratified(library, k);
        evol[key] = opt(s.evol);
        trans[key] = opt(s.trans);
    }
    r["trr"] = trr;
    r["trr_evol"] = evol;
    r["trr_trans"] = trans;
    r["utility"] = cumulative_utility(records, library_sizes, lambda);

    const HitHistogram h = hit_histogram(library);
    ordered_json hist;
    hist["bins"] = ordered_json::object();
    for (const auto& [label, n] : histogram_bins(h)) hist["bins"][label] = n;
    hist["counts"] = ordered_json::object();
    for (const auto& [hits, n] : h.counts) hist["counts"][std::to_string(hits)] = n;
    hist["total_tools"] = h.total_tools;
    r["histogram"] = hist;
    return r;
}

std::string csv_escape(std::string_view field) {
    const bool quote = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!quote) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace tte::metrics
