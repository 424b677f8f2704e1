#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tte {

// Unit-norm dense vector produced by an Embedder.
using EmbeddingVector = std::vector<double>;

// dot(a,b) / (|a||b|). Throws DimensionMismatch / ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Scales v to unit L2 norm in place. Throws ZeroVector on an all-zero input.
void normalize(EmbeddingVector& v);

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual EmbeddingVector embed(std::string_view text) = 0;

    // Identity string recorded in snapshots, e.g. "hash:256".
    virtual std::string id() const = 0;
    virtual std::size_t dim() const = 0;
};

// Deterministic test provider: whitespace tokens, lowercased and stripped of
// surrounding punctuation, hashed (FNV-1a 64) into dim buckets.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256);

    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override;
    std::size_t dim() const override { return dim_; }

private:
    std::size_t dim_;
};

// Remote embedding service: POST {model, input:[text]} -> {vectors:[[...]]}.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(std::string url, std::string model, std::size_t dim);

    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override;
    std::size_t dim() const override { return dim_; }

private:
    std::string url_;
    std::string model_;
    std::size_t dim_;
};

// Parses "hash:<dim>" or "http:<url>[#dim=<n>][#model=<m>]".
std::unique_ptr<Embedder> make_embedder(std::string_view spec);

}  // namespace tte
