#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tte/embedding.hpp"

namespace tte {

enum class ToolOrigin { Predefined, Evolved };

std::string_view to_string(ToolOrigin origin) noexcept;
ToolOrigin origin_from_string(std::string_view s);

struct IoDescription {
    std::string input;
    std::string output;

    bool operator==(const IoDescription&) const = default;
};

struct TestExample {
    nlohmann::json input = nlohmann::json::object();
    nlohmann::json expected = nullptr;

    bool operator==(const TestExample&) const = default;
};

struct AtomicTool {
    std::string id;
    std::string name;
    std::string description;
    IoDescription io_description;
    std::string source;
    TestExample test_example;
    std::uint64_t usage_count = 0;
    ToolOrigin origin = ToolOrigin::Evolved;
    std::uint64_t created_seq = 0;
    EmbeddingVector desc_embedding;
    EmbeddingVector code_embedding;

    bool operator==(const AtomicTool&) const = default;
};

bool is_snake_case(std::string_view name) noexcept;

struct PruneReport {
    std::vector<std::string> phase1_removed;  // usage_count < min_usage
    std::vector<std::string> phase2_removed;  // cap enforcement

    std::vector<std::string> removed() const;
    bool empty() const { return phase1_removed.empty() && phase2_removed.empty(); }
};

// The evolving tool registry. Tools are kept in created_seq order.
class ToolLibrary {
public:
    explicit ToolLibrary(std::size_t capacity = 500, std::uint64_t min_usage = 1);

    // Inserts the tool and assigns the next created_seq; returns that value.
    // Throws DuplicateId, InvalidTool.
    std::uint64_t register_tool(AtomicTool tool);

    // usage_count += 1. Throws UnknownTool.
    void record_hit(std::string_view id);

    // No-op unless size() > capacity().
    PruneReport prune();

    const AtomicTool* find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    const std::vector<AtomicTool>& tools() const noexcept { return tools_; }
    std::size_t size() const noexcept { return tools_.size(); }
    bool empty() const noexcept { return tools_.empty(); }

    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t min_usage() const noexcept { return min_usage_; }
    void set_capacity(std::size_t capacity);
    void set_min_usage(std::uint64_t min_usage) { min_usage_ = min_usage; }

    // created_seq the next registered tool will receive.
    std::uint64_t next_seq() const noexcept { return next_seq_; }

    // Embedding provider identity; empty until set or inferred from a snapshot.
    const std::string& provider() const noexcept { return provider_; }
    std::size_t dim() const noexcept { return dim_; }
    void set_embedding_identity(std::string provider, std::size_t dim);

    bool operator==(const ToolLibrary& other) const;

private:
    friend ToolLibrary load_snapshot(std::string_view bytes, std::optional<std::string_view> expected_provider);

    void validate(const AtomicTool& tool) const;
    void rebuild_index();
    void remove_ids(const std::vector<std::string>& ids);

    std::vector<AtomicTool> tools_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t capacity_;
    std::uint64_t min_usage_;
    std::uint64_t next_seq_ = 0;
    std::string provider_;
    std::size_t dim_ = 0;
};

nlohmann::ordered_json tool_to_json(const AtomicTool& tool);

// Canonical JSON snapshot; identical libraries serialize byte-identically.
std::string save_snapshot(const ToolLibrary& library);

// Throws CorruptSnapshot on any schema violation, ProviderMismatch when
// expected_provider is given and differs from the recorded one.
ToolLibrary load_snapshot(std::string_view bytes,
                          std::optional<std::string_view> expected_provider = std::nullopt);

}  // namespace tte
