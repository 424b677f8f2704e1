#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "json.hpp"

namespace tte {

enum class SandboxMode { Check, Run };

struct SandboxRequest {
    SandboxMode mode = SandboxMode::Check;
    std::string source;
    std::string function_name;
    nlohmann::json args = nlohmann::json::object();
    long timeout_ms = 10'000;
    std::optional<long> memory_cap_mb;
};

struct SandboxResponse {
    bool ok = false;
    std::optional<nlohmann::json> result;
    std::optional<std::string> error;
    std::string stdout_text;
    double duration_ms = 0.0;

    static SandboxResponse failure(std::string error) {
        SandboxResponse r;
        r.error = std::move(error);
        return r;
    }
    static SandboxResponse success(std::optional<nlohmann::json> result = std::nullopt) {
        SandboxResponse r;
        r.ok = true;
        r.result = std::move(result);
        return r;
    }
};

// Wire format: one JSON object per line, field names as in the structs
// ("stdout" for stdout_text).
nlohmann::ordered_json to_json(const SandboxRequest& req);
nlohmann::ordered_json to_json(const SandboxResponse& resp);
SandboxResponse response_from_json(const nlohmann::json& j);

class Sandbox {
public:
    virtual ~Sandbox() = default;

    // Never throws for tool misbehavior; those become ok=false responses.
    // Throws SandboxUnavailable when the runner cannot be (re)started.
    virtual SandboxResponse execute(const SandboxRequest& req) = 0;

    SandboxResponse check(const std::string& source, long timeout_ms = 10'000);
    SandboxResponse run(const std::string& source, const std::string& function_name, const nlohmann::json& args,
                        long timeout_ms = 10'000, std::optional<long> memory_cap_mb = std::nullopt);
};

struct SupervisorOptions {
    long startup_timeout_ms = 10'000;
    long grace_ms = 2'000;                 // backstop on top of each request deadline
    std::optional<long> address_space_mb;  // RLIMIT_AS applied to the runner process
};

// Supervises a runner subprocess speaking the line protocol. The runner must
// announce {"ready": true, "protocol": 1} first. A runner that overruns
// timeout + grace is killed and restarted lazily on the next request.
class SubprocessSandbox final : public Sandbox {
public:
    explicit SubprocessSandbox(std::vector<std::string> argv, SupervisorOptions options = {});
    ~SubprocessSandbox() override;

    SubprocessSandbox(const SubprocessSandbox&) = delete;
    SubprocessSandbox& operator=(const SubprocessSandbox&) = delete;

    // Throws SandboxUnavailable.
    void start();
    bool running() const noexcept { return pid_ > 0; }
    pid_t pid() const noexcept { return pid_; }

    SandboxResponse execute(const SandboxRequest& req) override;

private:
    void stop(bool force);
    std::optional<std::string> read_line(long timeout_ms);

    std::vector<std::string> argv_;
    SupervisorOptions options_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// Serves canned responses; used by tests and by offline runs.
class StubSandbox final : public Sandbox {
public:
    struct RunRule {
        std::string function_name;
        std::optional<nlohmann::json> args;  // nullopt matches any arguments
        SandboxResponse response;
    };
    using Handler = std::function<std::optional<SandboxResponse>(const SandboxRequest&)>;

    std::vector<std::string> syntax_error_markers{"def f(:"};
    std::vector<std::string> timeout_markers{"while True:"};
    std::vector<RunRule> rules;
    Handler handler;  // consulted before the rules

    // {"syntax_error_markers": [...], "timeout_markers": [...],
    //  "run": [{"function": name, "args": {...}?, "response": {...}}]}
    static StubSandbox from_json(const nlohmann::json& doc);
    static StubSandbox from_file(const std::string& path);

    SandboxResponse execute(const SandboxRequest& req) override;

    const std::vector<SandboxRequest>& requests() const noexcept { return requests_; }

private:
    std::vector<SandboxRequest> requests_;
};

// "stub:<path>" or "cmd:<argv separated by spaces>".
std::unique_ptr<Sandbox> make_sandbox(std::string_view spec, SupervisorOptions options = {});

}  // namespace tte
