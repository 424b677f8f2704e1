#include "tte/provider.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "tte/error.hpp"
#include "tte/http.hpp"

namespace tte {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::InvalidArgument, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string prompt_key(const std::vector<Message>& messages) {
    std::string all;
    for (const Message& m : messages) all += m.content;
    return sha256_hex(all);
}

std::string ModelProvider::complete(const std::vector<Message>& messages) {
    bool empty = true;
    for (const Message& m : messages) empty = empty && m.content.empty();
    if (empty) throw Error(ErrorCode::EmptyText, "empty prompt");
    if (transcript_.provider_id.empty()) transcript_.provider_id = id();

    std::string response = do_complete(messages);

    std::string request;
    for (const Message& m : messages) request += m.content;
    transcript_.entries.push_back({messages.back().role, std::move(request), response});
    return response;
}

void ScriptedProvider::add_response(const std::string& prompt_sha256, std::string response) {
    responses_[prompt_sha256] = std::move(response);
}

void ScriptedProvider::add_prompt_response(const std::string& prompt, std::string response) {
    responses_[sha256_hex(prompt)] = std::move(response);
}

void ScriptedProvider::add_rule(Rule rule) { rules_.push_back(std::move(rule)); }

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    return v.get<std::vector<std::string>>();
}

}  // namespace

ScriptedProvider ScriptedProvider::from_json(const json& doc) {
    ScriptedProvider p;
    try {
        if (!doc.is_object()) throw Error(ErrorCode::ProviderUnavailable, "scripted transcript must be a JSON object");
        const bool structured = doc.contains("responses") || doc.contains("rules");
        const json& responses = structured ? doc.value("responses", json::object()) : doc;
        for (const auto& [key, value] : responses.items()) p.add_response(key, value.get<std::string>());
        if (structured && doc.contains("rules")) {
            for (const json& r : doc.at("rules")) {
                p.add_rule({string_list(r, "contains"), string_list(r, "not_contains"),
                            r.at("response").get<std::string>()});
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("malformed scripted transcript: ") + e.what());
    }
    return p;
}

ScriptedProvider ScriptedProvider::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ProviderUnavailable, "cannot open scripted transcript " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json doc;
    try {
        doc = json::parse(ss.str());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, "cannot parse " + path + ": " + e.what());
    }
    return from_json(doc);
}

std::string ScriptedProvider::do_complete(const std::vector<Message>& messages) {
    const std::string key = prompt_key(messages);
    if (auto it = responses_.find(key); it != responses_.end()) return it->second;

    std::string all;
    for (const Message& m : messages) all += m.content;
    for (const Rule& r : rules_) {
        bool ok = true;
        for (const auto& s : r.contains) ok = ok && all.find(s) != std::string::npos;
        for (const auto& s : r.not_contains) ok = ok && all.find(s) == std::string::npos;
        if (ok) return r.response;
    }
    throw Error(ErrorCode::TranscriptMiss, "no scripted reply for prompt " + key);
}

HttpProvider::HttpProvider(std::string url, double temperature) : ModelProvider(temperature), url_(std::move(url)) {
    parse_http_url(url_);
}

std::string HttpProvider::do_complete(const std::vector<Message>& messages) {
    json req;
    req["messages"] = json::array();
    for (const Message& m : messages) req["messages"].push_back({{"role", m.role}, {"content", m.content}});
    req["temperature"] = temperature();
    try {
        json resp = json::parse(http_post_json(url_, req.dump()));
        return resp.at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("bad completion response: ") + e.what());
    }
}

std::unique_ptr<ModelProvider> make_provider(std::string_view spec, double temperature) {
    if (spec.starts_with("scripted:")) {
        auto p = std::make_unique<ScriptedProvider>(ScriptedProvider::from_file(std::string(spec.substr(9))));
        p->set_temperature(temperature);
        return p;
    }
    if (spec.starts_with("http:")) {
        std::string url(spec.substr(5));
        if (url.starts_with("//")) url = "http:" + url;
        parse_http_url(url);
        return std::make_unique<HttpProvider>(url, temperature);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown provider spec: " + std::string(spec));
}

}  // namespace tte
