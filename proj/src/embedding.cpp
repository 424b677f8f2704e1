#include "tte/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

#include "json.hpp"
#include "tte/error.hpp"
#include "tte/http.hpp"

namespace tte {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    // rounding can push identical vectors a hair past 1
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

void normalize(EmbeddingVector& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 == 0.0) {
        throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= inv;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

}  // namespace

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

std::string HashEmbedder::id() const { return "hash:" + std::to_string(dim_); }

EmbeddingVector HashEmbedder::embed(std::string_view text) {
    EmbeddingVector v(dim_, 0.0);
    bool any = false;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string_view raw = text.substr(i, j - i);
            std::size_t b = 0, e = raw.size();
            while (b < e && !is_word_char(static_cast<unsigned char>(raw[b]))) ++b;
            while (e > b && !is_word_char(static_cast<unsigned char>(raw[e - 1]))) --e;
            // pure-punctuation tokens still count, hashed as-is
            std::string_view core = (e > b) ? raw.substr(b, e - b) : raw;
            std::string token(core);
            for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            v[fnv1a(token) % dim_] += 1.0;
            any = true;
        }
        i = j;
    }
    if (!any) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
    normalize(v);
    return v;
}

HttpEmbedder::HttpEmbedder(std::string url, std::string model, std::size_t dim)
    : url_(std::move(url)), model_(std::move(model)), dim_(dim) {}

std::string HttpEmbedder::id() const { return "http:" + url_ + "#model=" + model_; }

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
    bool blank = true;
    for (char c : text) blank = blank && std::isspace(static_cast<unsigned char>(c));
    if (blank) throw Error(ErrorCode::EmptyText, "cannot embed empty text");

    nlohmann::json req = {{"model", model_}, {"input", nlohmann::json::array({std::string(text)})}};
    nlohmann::json resp;
    try {
        resp = nlohmann::json::parse(http_post_json(url_, req.dump()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("bad embedding response: ") + e.what());
    }
    if (!resp.contains("vectors") || !resp["vectors"].is_array() || resp["vectors"].empty()) {
        throw Error(ErrorCode::ProviderUnavailable, "embedding response lacks vectors");
    }
    EmbeddingVector v;
    try {
        v = resp["vectors"][0].get<EmbeddingVector>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("bad embedding vector: ") + e.what());
    }
    if (v.size() != dim_) {
        throw Error(ErrorCode::DimensionMismatch,
                    "service returned " + std::to_string(v.size()) + ", expected " + std::to_string(dim_));
    }
    normalize(v);
    return v;
}

std::unique_ptr<Embedder> make_embedder(std::string_view spec) {
    if (spec.starts_with("hash:")) {
        const std::string n(spec.substr(5));
        std::size_t pos = 0;
        long long dim = -1;
        try {
            dim = std::stoll(n, &pos);
        } catch (const std::exception&) {
        }
        if (pos != n.size() || dim <= 0) {
            throw Error(ErrorCode::InvalidArgument, "bad hash embedder dimension: " + n);
        }
        return std::make_unique<HashEmbedder>(static_cast<std::size_t>(dim));
    }
    if (spec.starts_with("http:")) {
        // "http://host/..." is accepted as shorthand for "http:http://host/...".
        std::string rest(spec.substr(5));
        if (rest.starts_with("//")) rest = "http:" + rest;
        std::string model = "default";
        std::size_t dim = 0;
        std::size_t hash = rest.find('#');
        std::string url = rest.substr(0, hash);
        while (hash != std::string::npos) {
            std::size_t next = rest.find('#', hash + 1);
            std::string opt = rest.substr(hash + 1, next == std::string::npos ? std::string::npos : next - hash - 1);
            if (opt.starts_with("dim=")) {
                try {
                    dim = static_cast<std::size_t>(std::stoul(opt.substr(4)));
                } catch (const std::exception&) {
                    throw Error(ErrorCode::InvalidArgument, "bad http embedder dim: " + opt);
                }
            } else if (opt.starts_with("model=")) {
                model = opt.substr(6);
            } else {
                throw Error(ErrorCode::InvalidArgument, "unknown http embedder option: " + opt);
            }
            hash = next;
        }
        if (dim == 0) throw Error(ErrorCode::InvalidArgument, "http embedder needs #dim=<n>");
        parse_http_url(url);  // validates
        return std::make_unique<HttpEmbedder>(url, model, dim);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown embedder spec: " + std::string(spec));
}

}  // namespace tte
