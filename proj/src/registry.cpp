#include "tte/registry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tte/error.hpp"

namespace tte {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ToolOrigin origin) noexcept {
    return origin == ToolOrigin::Predefined ? "Predefined" : "Evolved";
}

ToolOrigin origin_from_string(std::string_view s) {
    if (s == "Predefined") return ToolOrigin::Predefined;
    if (s == "Evolved") return ToolOrigin::Evolved;
    throw Error(ErrorCode::InvalidArgument, "unknown tool origin: " + std::string(s));
}

bool is_snake_case(std::string_view name) noexcept {
    if (name.empty() || !(name[0] >= 'a' && name[0] <= 'z')) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

std::vector<std::string> PruneReport::removed() const {
    std::vector<std::string> out = phase1_removed;
    out.insert(out.end(), phase2_removed.begin(), phase2_removed.end());
    return out;
}

ToolLibrary::ToolLibrary(std::size_t capacity, std::uint64_t min_usage)
    : capacity_(capacity), min_usage_(min_usage) {
    if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "capacity must be >= 1");
}

void ToolLibrary::set_capacity(std::size_t capacity) {
    if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "capacity must be >= 1");
    capacity_ = capacity;
}

void ToolLibrary::set_embedding_identity(std::string provider, std::size_t dim) {
    if (!tools_.empty() && dim_ != 0 && dim != dim_) {
        throw Error(ErrorCode::ProviderMismatch,
                    "library holds dim " + std::to_string(dim_) + " embeddings, provider has " + std::to_string(dim));
    }
    provider_ = std::move(provider);
    dim_ = dim;
}

namespace {

bool unit_norm(const EmbeddingVector& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    return std::abs(std::sqrt(n2) - 1.0) <= 1e-9;
}

}  // namespace

void ToolLibrary::validate(const AtomicTool& tool) const {
    if (tool.id.empty()) throw Error(ErrorCode::InvalidTool, "tool id is empty");
    if (!is_snake_case(tool.name)) throw Error(ErrorCode::InvalidTool, "tool name is not snake_case: '" + tool.name + "'");
    if (tool.source.empty()) throw Error(ErrorCode::InvalidTool, "tool '" + tool.name + "' has empty source");
    if (tool.desc_embedding.empty() || tool.code_embedding.empty()) {
        throw Error(ErrorCode::InvalidTool, "tool '" + tool.id + "' lacks embeddings");
    }
    if (tool.desc_embedding.size() != tool.code_embedding.size() ||
        (dim_ != 0 && tool.desc_embedding.size() != dim_)) {
        throw Error(ErrorCode::InvalidTool, "tool '" + tool.id + "' embedding dimension mismatch");
    }
    if (!unit_norm(tool.desc_embedding) || !unit_norm(tool.code_embedding)) {
        throw Error(ErrorCode::InvalidTool, "tool '" + tool.id + "' embeddings are not unit norm");
    }
}

std::uint64_t ToolLibrary::register_tool(AtomicTool tool) {
    if (contains(tool.id)) throw Error(ErrorCode::DuplicateId, tool.id);
    validate(tool);
    if (dim_ == 0) dim_ = tool.desc_embedding.size();
    tool.created_seq = next_seq_++;
    index_.emplace(tool.id, tools_.size());
    tools_.push_back(std::move(tool));
    return tools_.back().created_seq;
}

void ToolLibrary::record_hit(std::string_view id) {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error(ErrorCode::UnknownTool, std::string(id));
    ++tools_[it->second].usage_count;
}

const AtomicTool* ToolLibrary::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &tools_[it->second];
}

void ToolLibrary::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < tools_.size(); ++i) index_.emplace(tools_[i].id, i);
}

void ToolLibrary::remove_ids(const std::vector<std::string>& ids) {
    const std::set<std::string> doomed(ids.begin(), ids.end());
    std::erase_if(tools_, [&](const AtomicTool& t) { return doomed.contains(t.id); });
    rebuild_index();
}

PruneReport ToolLibrary::prune() {
    PruneReport report;
    if (tools_.size() <= capacity_) return report;

    for (const AtomicTool& t : tools_) {
        if (t.usage_count < min_usage_) report.phase1_removed.push_back(t.id);
    }
    remove_ids(report.phase1_removed);

    if (tools_.size() > capacity_) {
        std::vector<const AtomicTool*> order;
        order.reserve(tools_.size());
        for (const AtomicTool& t : tools_) order.push_back(&t);
        std::sort(order.begin(), order.end(), [](const AtomicTool* a, const AtomicTool* b) {
            if (a->usage_count != b->usage_count) return a->usage_count < b->usage_count;
            return a->created_seq < b->created_seq;
        });
        const std::size_t excess = tools_.size() - capacity_;
        for (std::size_t i = 0; i < excess; ++i) report.phase2_removed.push_back(order[i]->id);
        remove_ids(report.phase2_removed);
    }
    return report;
}

bool ToolLibrary::operator==(const ToolLibrary& other) const {
    return tools_ == other.tools_ && capacity_ == other.capacity_ && min_usage_ == other.min_usage_ &&
           provider_ == other.provider_ && dim_ == other.dim_;
}

ordered_json tool_to_json(const AtomicTool& t) {
    ordered_json j;
    j["id"] = t.id;
    j["name"] = t.name;
    j["description"] = t.description;
    j["io_description"] = ordered_json{{"input", t.io_description.input}, {"output", t.io_description.output}};
    j["source"] = t.source;
    j["test_example"] = ordered_json{{"input", ordered_json(t.test_example.input)},
                                     {"expected", ordered_json(t.test_example.expected)}};
    j["usage_count"] = t.usage_count;
    j["origin"] = std::string(to_string(t.origin));
    j["created_seq"] = t.created_seq;
    j["desc_embedding"] = t.desc_embedding;
    j["code_embedding"] = t.code_embedding;
    return j;
}

std::string save_snapshot(const ToolLibrary& library) {
    ordered_json doc;
    doc["provider"] = library.provider();
    doc["dim"] = library.dim();
    doc["capacity"] = library.capacity();
    doc["min_usage"] = library.min_usage();
    doc["tools"] = ordered_json::array();
    for (const AtomicTool& t : library.tools()) doc["tools"].push_back(tool_to_json(t));
    return doc.dump(2) + "\n";
}

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptSnapshot, what); }

const json& field(const json& obj, const char* key, json::value_t type) {
    if (!obj.is_object() || !obj.contains(key)) corrupt(std::string("missing field '") + key + "'");
    const json& v = obj.at(key);
    const bool ok = type == json::value_t::number_unsigned ? v.is_number_unsigned() : v.type() == type;
    if (!ok) corrupt(std::string("field '") + key + "' has wrong type");
    return v;
}

EmbeddingVector vec_field(const json& obj, const char* key) {
    const json& arr = field(obj, key, json::value_t::array);
    EmbeddingVector v;
    v.reserve(arr.size());
    for (const json& x : arr) {
        if (!x.is_number()) corrupt(std::string("non-numeric entry in '") + key + "'");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace

ToolLibrary load_snapshot(std::string_view bytes, std::optional<std::string_view> expected_provider) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        corrupt(std::string("unparseable snapshot: ") + e.what());
    }
    if (!doc.is_object()) corrupt("snapshot is not a JSON object");

    const std::string provider = field(doc, "provider", json::value_t::string).get<std::string>();
    const auto dim = field(doc, "dim", json::value_t::number_unsigned).get<std::size_t>();
    const auto capacity = field(doc, "capacity", json::value_t::number_unsigned).get<std::size_t>();
    const auto min_usage = field(doc, "min_usage", json::value_t::number_unsigned).get<std::uint64_t>();
    const json& tools = field(doc, "tools", json::value_t::array);
    if (capacity == 0) corrupt("capacity must be >= 1");

    if (expected_provider && !provider.empty() && provider != *expected_provider) {
        throw Error(ErrorCode::ProviderMismatch,
                    "snapshot embedded with '" + provider + "', engine uses '" + std::string(*expected_provider) + "'");
    }

    ToolLibrary lib(capacity, min_usage);
    lib.provider_ = provider;
    lib.dim_ = dim;
    std::set<std::uint64_t> seqs;
    for (const json& tj : tools) {
        AtomicTool t;
        t.id = field(tj, "id", json::value_t::string).get<std::string>();
        t.name = field(tj, "name", json::value_t::string).get<std::string>();
        t.description = field(tj, "description", json::value_t::string).get<std::string>();
        const json& io = field(tj, "io_description", json::value_t::object);
        t.io_description.input = field(io, "input", json::value_t::string).get<std::string>();
        t.io_description.output = field(io, "output", json::value_t::string).get<std::string>();
        t.source = field(tj, "source", json::value_t::string).get<std::string>();
        const json& ex = field(tj, "test_example", json::value_t::object);
        if (!ex.contains("input") || !ex.contains("expected")) corrupt("test_example needs input and expected");
        t.test_example.input = ex.at("input");
        t.test_example.expected = ex.at("expected");
        t.usage_count = field(tj, "usage_count", json::value_t::number_unsigned).get<std::uint64_t>();
        try {
            t.origin = origin_from_string(field(tj, "origin", json::value_t::string).get<std::string>());
        } catch (const Error& e) {
            corrupt(e.what());
        }
        t.created_seq = field(tj, "created_seq", json::value_t::number_unsigned).get<std::uint64_t>();
        t.desc_embedding = vec_field(tj, "desc_embedding");
        t.code_embedding = vec_field(tj, "code_embedding");

        if (lib.contains(t.id)) corrupt("duplicate tool id '" + t.id + "'");
        if (!seqs.insert(t.created_seq).second) corrupt("duplicate created_seq " + std::to_string(t.created_seq));
        if (!lib.tools_.empty() && t.created_seq < lib.tools_.back().created_seq) {
            corrupt("tools not in created_seq order");
        }
        try {
            lib.validate(t);
        } catch (const Error& e) {
            corrupt(e.what());
        }
        lib.next_seq_ = std::max(lib.next_seq_, t.created_seq + 1);
        lib.index_.emplace(t.id, lib.tools_.size());
        lib.tools_.push_back(std::move(t));
    }
    if (lib.dim_ == 0 && !lib.tools_.empty()) corrupt("dim is 0 but tools carry embeddings");
    return lib;
}

}  // namespace tte
