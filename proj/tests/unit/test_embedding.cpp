#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tte/embedding.hpp"
#include "tte/error.hpp"

using namespace tte;

namespace {

double norm(const EmbeddingVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected tte::Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
    const std::vector<double> e1{1, 0}, e2{0, 1}, d{1, 1};
    CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));
    // dot = 1, norms sqrt(2) and 1
    CHECK(std::abs(cosine_similarity(d, e1) - 1.0 / std::sqrt(2.0)) < 1e-9);
    CHECK(std::abs(cosine_similarity(d, e1) - 0.70710678) < 1e-8);
}

TEST_CASE("cosine similarity errors") {
    const std::vector<double> a{1, 0}, b{1, 0, 0}, z{0, 0};
    CHECK(code_of([&] { cosine_similarity(a, b); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { cosine_similarity(a, z); }) == ErrorCode::ZeroVector);
}

TEST_CASE("cosine similarity stays in [-1, 1] and is symmetric on random vectors") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 64);
    for (int i = 0; i < 2000; ++i) {
        const auto n = static_cast<std::size_t>(dim(rng));
        auto a = helpers::random_unit(rng, n);
        auto b = i % 10 == 0 ? a : helpers::random_unit(rng, n);
        if (i % 7 == 0) {
            for (double& x : b) x = -x;
        }
        const double s = cosine_similarity(a, b);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        CHECK(s == cosine_similarity(b, a));
    }
}

TEST_CASE("hash embedder is deterministic and unit norm") {
    HashEmbedder e(256);
    const auto v1 = e.embed("Convert pressure from kPa to Pa");
    const auto v2 = e.embed("Convert pressure from kPa to Pa");
    CHECK(v1 == v2);
    CHECK(v1.size() == 256);
    CHECK(std::abs(norm(v1) - 1.0) < 1e-9);
    for (const char* text : {"x", "a b c d e f g", "Molar volume (PV=nRT), T=330 K!", "  spaced   out  "}) {
        CHECK(std::abs(norm(e.embed(text)) - 1.0) < 1e-9);
    }
    CHECK(e.id() == "hash:256");
}

TEST_CASE("hash embedder normalizes case and edge punctuation") {
    HashEmbedder e(64);
    CHECK(e.embed("Pressure, (kPa)") == e.embed("pressure kpa"));
    CHECK(cosine_similarity(e.embed("density of gas"), e.embed("density of gas")) == doctest::Approx(1.0));
}

TEST_CASE("hash embedder rejects empty text") {
    HashEmbedder e(16);
    CHECK(code_of([&] { e.embed(""); }) == ErrorCode::EmptyText);
    CHECK(code_of([&] { e.embed("  \n\t "); }) == ErrorCode::EmptyText);
    // punctuation-only text still has tokens
    CHECK_NOTHROW(e.embed("!!! ..."));
}

TEST_CASE("normalize") {
    EmbeddingVector v{3, 4};
    normalize(v);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    EmbeddingVector z{0, 0};
    CHECK(code_of([&] { normalize(z); }) == ErrorCode::ZeroVector);
}

TEST_CASE("embedder specs") {
    auto h = make_embedder("hash:32");
    CHECK(h->id() == "hash:32");
    CHECK(h->dim() == 32);
    auto web = make_embedder("http://127.0.0.1:9/embed#dim=8#model=m");
    CHECK(web->dim() == 8);
    CHECK(code_of([] { make_embedder("bogus"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { make_embedder("hash:0"); }) == ErrorCode::InvalidArgument);
}
