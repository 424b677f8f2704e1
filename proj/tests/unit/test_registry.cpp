#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "tte/error.hpp"
#include "tte/registry.hpp"

using namespace tte;
using helpers::tool;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected tte::Error");
    return ErrorCode::InvalidArgument;
}

std::set<std::string> ids(const ToolLibrary& lib) {
    std::set<std::string> out;
    for (const auto& t : lib.tools()) out.insert(t.id);
    return out;
}

// Independent re-simulation of the two-phase eviction rule.
std::set<std::string> oracle_survivors(std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>> tools,
                                       std::size_t cap, std::uint64_t theta) {
    if (tools.size() <= cap) {
        std::set<std::string> all;
        for (auto& [id, u, seq] : tools) all.insert(id);
        return all;
    }
    std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>> kept;
    for (auto& t : tools) {
        if (std::get<1>(t) >= theta) kept.push_back(t);
    }
    while (kept.size() > cap) {
        std::size_t victim = 0;
        for (std::size_t i = 1; i < kept.size(); ++i) {
            const auto& a = kept[i];
            const auto& b = kept[victim];
            if (std::get<1>(a) < std::get<1>(b) || (std::get<1>(a) == std::get<1>(b) && std::get<2>(a) < std::get<2>(b))) {
                victim = i;
            }
        }
        kept.erase(kept.begin() + static_cast<long>(victim));
    }
    std::set<std::string> out;
    for (auto& [id, u, seq] : kept) out.insert(id);
    return out;
}

}  // namespace

TEST_CASE("register into empty library") {
    ToolLibrary lib;
    CHECK(lib.capacity() == 500);
    CHECK(lib.min_usage() == 1);
    lib.register_tool(tool("x", 1));
    CHECK(lib.size() == 1);
    CHECK(lib.find("x")->usage_count == 1);
}

TEST_CASE("register rejects duplicates and invalid tools") {
    ToolLibrary lib;
    lib.register_tool(tool("x"));
    CHECK(code_of([&] { lib.register_tool(tool("x")); }) == ErrorCode::DuplicateId);

    auto bad_name = tool("y");
    bad_name.name = "";
    CHECK(code_of([&] { lib.register_tool(bad_name); }) == ErrorCode::InvalidTool);
    bad_name.name = "NotSnake";
    CHECK(code_of([&] { lib.register_tool(bad_name); }) == ErrorCode::InvalidTool);

    auto no_src = tool("z");
    no_src.source.clear();
    CHECK(code_of([&] { lib.register_tool(no_src); }) == ErrorCode::InvalidTool);

    auto not_unit = tool("w");
    not_unit.desc_embedding = {0.5, 0.5, 0.0, 0.0};
    CHECK(code_of([&] { lib.register_tool(not_unit); }) == ErrorCode::InvalidTool);

    auto wrong_dim = tool("v");
    wrong_dim.desc_embedding = helpers::basis(3, 0);
    wrong_dim.code_embedding = helpers::basis(3, 0);
    CHECK(code_of([&] { lib.register_tool(wrong_dim); }) == ErrorCode::InvalidTool);
    CHECK(lib.size() == 1);
}

TEST_CASE("created_seq is a strictly increasing counter") {
    ToolLibrary lib;
    std::uint64_t expected = 0;
    for (const char* id : {"a", "b", "c"}) {
        CHECK(lib.register_tool(tool(id)) == expected);
        CHECK(lib.find(id)->created_seq == expected);
        ++expected;
    }
    CHECK(lib.next_seq() == 3);
}

TEST_CASE("record_hit") {
    ToolLibrary lib;
    lib.register_tool(tool("a", 0));
    lib.register_tool(tool("b", 4));
    lib.record_hit("a");
    CHECK(lib.find("a")->usage_count == 1);
    lib.record_hit("a");
    CHECK(lib.find("a")->usage_count == 2);
    CHECK(lib.find("b")->usage_count == 4);
    CHECK(code_of([&] { lib.record_hit("nope"); }) == ErrorCode::UnknownTool);
}

TEST_CASE("prune phase 1 removes low-usage tools") {
    ToolLibrary lib(2, 1);
    lib.register_tool(tool("A", 5));
    lib.register_tool(tool("B", 0));
    lib.register_tool(tool("C", 2));
    const PruneReport r = lib.prune();
    CHECK(r.phase1_removed == std::vector<std::string>{"B"});
    CHECK(r.phase2_removed.empty());
    CHECK(ids(lib) == std::set<std::string>{"A", "C"});
}

TEST_CASE("prune is a no-op within capacity") {
    ToolLibrary lib(3, 1);
    lib.register_tool(tool("A", 0));
    lib.register_tool(tool("B", 0));
    CHECK(lib.prune().empty());
    CHECK(lib.size() == 2);
}

TEST_CASE("prune phase 2 evicts the oldest among equal usage") {
    ToolLibrary lib(2, 1);
    lib.register_tool(tool("A", 2));
    lib.register_tool(tool("B", 2));
    lib.register_tool(tool("C", 2));
    const PruneReport r = lib.prune();
    CHECK(r.phase1_removed.empty());
    CHECK(r.phase2_removed == std::vector<std::string>{"A"});
    CHECK(ids(lib) == oracle_survivors({{"A", 2, 0}, {"B", 2, 1}, {"C", 2, 2}}, 2, 1));
}

TEST_CASE("prune properties on random libraries") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
        const std::uint64_t theta = std::uniform_int_distribution<std::uint64_t>(0, 3)(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 3 * cap)(rng);
        ToolLibrary lib(cap, theta);
        std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>> mirror;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t u = std::uniform_int_distribution<std::uint64_t>(0, 5)(rng);
            const std::string id = "t" + std::to_string(i);
            const auto seq = lib.register_tool(tool(id, u));
            mirror.emplace_back(id, u, seq);
        }
        const bool over = n > cap;
        const PruneReport r = lib.prune();
        CHECK(lib.size() <= cap);
        CHECK(ids(lib) == oracle_survivors(mirror, cap, theta));

        std::set<std::string> phase1(r.phase1_removed.begin(), r.phase1_removed.end());
        std::set<std::string> brute;
        if (over) {
            for (auto& [id, u, seq] : mirror) {
                if (u < theta) brute.insert(id);
            }
        }
        CHECK(phase1 == brute);

        const ToolLibrary once = lib;
        CHECK(lib.prune().empty());
        CHECK(lib == once);
    }
}

TEST_CASE("snapshot round trip") {
    ToolLibrary lib(7, 2);
    lib.set_embedding_identity("hash:4", 4);
    auto a = tool("a", 3, ToolOrigin::Predefined, helpers::basis(4, 1), helpers::basis(4, 2));
    a.io_description = {"x: float", "y: float"};
    a.test_example.input = {{"x", 1.5}};
    a.test_example.expected = 1.5;
    lib.register_tool(a);
    lib.register_tool(tool("b", 0));
    const std::string bytes = save_snapshot(lib);
    const ToolLibrary back = load_snapshot(bytes, std::string_view("hash:4"));
    CHECK(back == lib);
    CHECK(save_snapshot(back) == bytes);
    CHECK(back.next_seq() == lib.next_seq());
    CHECK(back.find("a")->origin == ToolOrigin::Predefined);
}

TEST_CASE("snapshot uses the documented field order") {
    ToolLibrary lib;
    lib.set_embedding_identity("hash:4", 4);
    lib.register_tool(tool("a"));
    const auto doc = nlohmann::ordered_json::parse(save_snapshot(lib));
    std::vector<std::string> top, fields;
    for (auto it = doc.begin(); it != doc.end(); ++it) top.push_back(it.key());
    for (auto it = doc["tools"][0].begin(); it != doc["tools"][0].end(); ++it) fields.push_back(it.key());
    CHECK(top == std::vector<std::string>{"provider", "dim", "capacity", "min_usage", "tools"});
    CHECK(fields == std::vector<std::string>{"id", "name", "description", "io_description", "source", "test_example",
                                             "usage_count", "origin", "created_seq", "desc_embedding",
                                             "code_embedding"});
}

TEST_CASE("empty library snapshot") {
    ToolLibrary lib;
    const ToolLibrary back = load_snapshot(save_snapshot(lib));
    CHECK(back.empty());
    CHECK(back == lib);
}

TEST_CASE("corrupt snapshots") {
    ToolLibrary lib;
    lib.set_embedding_identity("hash:4", 4);
    lib.register_tool(tool("a", 1));
    lib.register_tool(tool("b", 1));
    const std::string good = save_snapshot(lib);

    CHECK(code_of([&] { load_snapshot(good.substr(0, good.size() / 2)); }) == ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot(""); }) == ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot("[]"); }) == ErrorCode::CorruptSnapshot);

    auto doc = nlohmann::json::parse(good);
    auto mutate = [&](auto&& fn) {
        auto d = doc;
        fn(d);
        return d.dump();
    };
    CHECK(code_of([&] { load_snapshot(mutate([](auto& d) { d.erase("tools"); })); }) == ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot(mutate([](auto& d) { d["tools"][0]["usage_count"] = -1; })); }) ==
          ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot(mutate([](auto& d) { d["tools"][1]["id"] = "a"; })); }) ==
          ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot(mutate([](auto& d) { d["tools"][0]["origin"] = "Borrowed"; })); }) ==
          ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot(mutate([](auto& d) { std::swap(d["tools"][0], d["tools"][1]); })); }) ==
          ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { load_snapshot(good, std::string_view("hash:8")); }) == ErrorCode::ProviderMismatch);
}
