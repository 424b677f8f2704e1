#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "tte/embedding.hpp"
#include "tte/registry.hpp"

namespace helpers {

inline tte::EmbeddingVector basis(std::size_t dim, std::size_t i) {
    tte::EmbeddingVector v(dim, 0.0);
    v[i] = 1.0;
    return v;
}

inline tte::EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    tte::EmbeddingVector v(dim);
    for (double& x : v) x = n(rng);
    tte::normalize(v);
    return v;
}

inline tte::AtomicTool tool(const std::string& id, std::uint64_t usage = 0,
                            tte::ToolOrigin origin = tte::ToolOrigin::Evolved, tte::EmbeddingVector desc = {},
                            tte::EmbeddingVector code = {}) {
    tte::AtomicTool t;
    t.id = id;
    t.name = "tool_" + id;
    for (char& c : t.name) {
        c = c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    t.description = "description of " + id;
    t.source = "def " + t.name + "(x):\n    return x\n";
    t.usage_count = usage;
    t.origin = origin;
    t.desc_embedding = desc.empty() ? basis(4, 0) : desc;
    t.code_embedding = code.empty() ? basis(4, 0) : code;
    return t;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("tte-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace helpers
