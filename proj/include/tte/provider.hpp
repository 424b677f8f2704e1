#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tte {

struct Message {
    std::string role;
    std::string content;
};

struct TranscriptEntry {
    std::string request_role;
    std::string request_text;
    std::string response_text;
};

// Append-only log of every completion a provider served.
struct ModelTranscript {
    std::string provider_id;
    double temperature = 0.3;
    std::vector<TranscriptEntry> entries;
};

std::string sha256_hex(std::string_view data);

// Key the scripted provider uses: SHA-256 of the message contents concatenated.
std::string prompt_key(const std::vector<Message>& messages);

class ModelProvider {
public:
    explicit ModelProvider(double temperature = 0.3) { transcript_.temperature = temperature; }
    virtual ~ModelProvider() = default;

    // Throws EmptyText on an empty prompt, ProviderUnavailable on transport
    // failure, TranscriptMiss for scripted providers without a reply.
    std::string complete(const std::vector<Message>& messages);
    std::string complete(std::string prompt) { return complete({Message{"user", std::move(prompt)}}); }

    virtual std::string id() const = 0;

    double temperature() const noexcept { return transcript_.temperature; }
    void set_temperature(double t) { transcript_.temperature = t; }
    const ModelTranscript& transcript() const noexcept { return transcript_; }

protected:
    virtual std::string do_complete(const std::vector<Message>& messages) = 0;

private:
    ModelTranscript transcript_;
};

// Replays canned responses. Lookup order: exact SHA-256 prompt key, then the
// substring rules in file order.
class ScriptedProvider final : public ModelProvider {
public:
    struct Rule {
        std::vector<std::string> contains;
        std::vector<std::string> not_contains;
        std::string response;
    };

    ScriptedProvider() = default;

    void add_response(const std::string& prompt_sha256, std::string response);
    void add_prompt_response(const std::string& prompt, std::string response);
    void add_rule(Rule rule);

    // Accepts either {"<sha256>": "text", ...} or
    // {"responses": {...}, "rules": [{"contains": [...], "not_contains": [...], "response": "..."}]}.
    static ScriptedProvider from_json(const nlohmann::json& doc);
    static ScriptedProvider from_file(const std::string& path);

    std::string id() const override { return "scripted"; }

protected:
    std::string do_complete(const std::vector<Message>& messages) override;

private:
    std::map<std::string, std::string> responses_;
    std::vector<Rule> rules_;
};

// OpenAI-style chat service: POST {messages, temperature} -> {content}.
class HttpProvider final : public ModelProvider {
public:
    HttpProvider(std::string url, double temperature = 0.3);
    std::string id() const override { return "http:" + url_; }

protected:
    std::string do_complete(const std::vector<Message>& messages) override;

private:
    std::string url_;
};

// "scripted:<path>" or "http:<url>". Scripted file problems throw
// ProviderUnavailable; malformed specs throw InvalidArgument.
std::unique_ptr<ModelProvider> make_provider(std::string_view spec, double temperature);

}  // namespace tte
