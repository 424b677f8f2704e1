#include "tte/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tte/error.hpp"

namespace tte {

using nlohmann::json;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

ordered_json to_json(const SandboxRequest& req) {
    ordered_json j;
    j["mode"] = req.mode == SandboxMode::Check ? "check" : "run";
    j["source"] = req.source;
    j["function_name"] = req.function_name;
    j["args"] = ordered_json(req.args);
    j["timeout_ms"] = req.timeout_ms;
    if (req.memory_cap_mb) j["memory_cap_mb"] = *req.memory_cap_mb;
    return j;
}

ordered_json to_json(const SandboxResponse& resp) {
    ordered_json j;
    j["ok"] = resp.ok;
    if (resp.result) j["result"] = ordered_json(*resp.result);
    if (resp.error) j["error"] = *resp.error;
    j["stdout"] = resp.stdout_text;
    j["duration_ms"] = resp.duration_ms;
    return j;
}

SandboxResponse response_from_json(const json& j) {
    if (!j.is_object() || !j.contains("ok") || !j["ok"].is_boolean()) {
        return SandboxResponse::failure("protocol error: response lacks boolean \"ok\"");
    }
    SandboxResponse r;
    r.ok = j["ok"].get<bool>();
    if (j.contains("result")) r.result = j["result"];
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    if (j.contains("stdout") && j["stdout"].is_string()) r.stdout_text = j["stdout"].get<std::string>();
    if (j.contains("duration_ms") && j["duration_ms"].is_number()) r.duration_ms = j["duration_ms"].get<double>();
    if (!r.ok && (!r.error || r.error->empty())) r.error = "unspecified runner error";
    return r;
}

SandboxResponse Sandbox::check(const std::string& source, long timeout_ms) {
    SandboxRequest req;
    req.mode = SandboxMode::Check;
    req.source = source;
    req.timeout_ms = timeout_ms;
    return execute(req);
}

SandboxResponse Sandbox::run(const std::string& source, const std::string& function_name, const json& args,
                             long timeout_ms, std::optional<long> memory_cap_mb) {
    SandboxRequest req;
    req.mode = SandboxMode::Run;
    req.source = source;
    req.function_name = function_name;
    req.args = args;
    req.timeout_ms = timeout_ms;
    req.memory_cap_mb = memory_cap_mb;
    return execute(req);
}

// ---------------------------------------------------------------------------

SubprocessSandbox::SubprocessSandbox(std::vector<std::string> argv, SupervisorOptions options)
    : argv_(std::move(argv)), options_(options) {
    if (argv_.empty()) throw Error(ErrorCode::InvalidArgument, "sandbox command is empty");
    // writes to a dead runner must surface as EPIPE, not kill the supervisor
    ::signal(SIGPIPE, SIG_IGN);
}

SubprocessSandbox::~SubprocessSandbox() { stop(false); }

void SubprocessSandbox::start() {
    if (running()) return;
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
        throw Error(ErrorCode::SandboxUnavailable, std::string("pipe: ") + std::strerror(errno));
    }
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw Error(ErrorCode::SandboxUnavailable, std::string("pipe: ") + std::strerror(errno));
    }

    std::vector<char*> cargv;
    for (std::string& a : argv_) cargv.push_back(a.data());
    cargv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        throw Error(ErrorCode::SandboxUnavailable, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        int devnull = ::open("/dev/null", O_WRONLY);
        if (devnull >= 0) ::dup2(devnull, STDERR_FILENO);
        if (options_.address_space_mb) {
            rlimit lim{};
            lim.rlim_cur = lim.rlim_max = static_cast<rlim_t>(*options_.address_space_mb) * 1024 * 1024;
            ::setrlimit(RLIMIT_AS, &lim);
        }
        ::signal(SIGPIPE, SIG_DFL);
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();

    auto line = read_line(options_.startup_timeout_ms);
    json hello;
    try {
        if (line) hello = json::parse(*line);
    } catch (const json::exception&) {
    }
    if (!hello.is_object() || hello.value("ready", false) != true || hello.value("protocol", 0) != 1) {
        stop(true);
        throw Error(ErrorCode::SandboxUnavailable,
                    "runner '" + argv_.front() + "' did not announce protocol 1" + (line ? ": " + *line : ""));
    }
}

void SubprocessSandbox::stop(bool force) {
    if (to_child_ >= 0) ::close(to_child_);
    to_child_ = -1;
    if (pid_ > 0) {
        if (!force) {
            // closed stdin asks the runner to exit; give it a moment
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
                    pid_ = -1;
                    break;
                }
                ::usleep(2000);
            }
        }
        if (pid_ > 0) {
            ::kill(-pid_, SIGKILL);
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
        }
    }
    pid_ = -1;
    if (from_child_ >= 0) ::close(from_child_);
    from_child_ = -1;
    buffer_.clear();
}

std::optional<std::string> SubprocessSandbox::read_line(long timeout_ms) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        if (std::size_t nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) return std::nullopt;
        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(left));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) return std::nullopt;
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return std::nullopt;  // EOF: runner died
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

SandboxResponse SubprocessSandbox::execute(const SandboxRequest& req) {
    if (!running()) start();
    const auto t0 = Clock::now();
    auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };

    std::string line = to_json(req).dump() + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
        const ssize_t n = ::write(to_child_, line.data() + off, line.size() - off);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            stop(true);
            auto r = SandboxResponse::failure("runner exited unexpectedly");
            r.duration_ms = elapsed_ms();
            return r;
        }
        off += static_cast<std::size_t>(n);
    }

    auto reply = read_line(req.timeout_ms + options_.grace_ms);
    if (!reply) {
        // a timed-out runner is killed; one that closed its pipe died
        const bool overran = elapsed_ms() >= static_cast<double>(req.timeout_ms + options_.grace_ms);
        stop(true);
        auto r = SandboxResponse::failure(overran ? "timeout" : "runner exited unexpectedly");
        r.duration_ms = elapsed_ms();
        return r;
    }
    SandboxResponse resp;
    try {
        resp = response_from_json(json::parse(*reply));
    } catch (const json::exception& e) {
        resp = SandboxResponse::failure(std::string("protocol error: ") + e.what());
    }
    if (resp.duration_ms == 0.0) resp.duration_ms = elapsed_ms();
    return resp;
}

// ---------------------------------------------------------------------------

StubSandbox StubSandbox::from_json(const json& doc) {
    StubSandbox s;
    try {
        if (doc.contains("syntax_error_markers")) {
            s.syntax_error_markers = doc["syntax_error_markers"].get<std::vector<std::string>>();
        }
        if (doc.contains("timeout_markers")) s.timeout_markers = doc["timeout_markers"].get<std::vector<std::string>>();
        for (const json& r : doc.value("run", json::array())) {
            RunRule rule;
            rule.function_name = r.at("function").get<std::string>();
            if (r.contains("args")) rule.args = r["args"];
            rule.response = response_from_json(r.at("response"));
            s.rules.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SandboxUnavailable, std::string("malformed stub sandbox file: ") + e.what());
    }
    return s;
}

StubSandbox StubSandbox::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::SandboxUnavailable, "cannot open stub sandbox file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return from_json(json::parse(ss.str()));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SandboxUnavailable, "cannot parse " + path + ": " + e.what());
    }
}

SandboxResponse StubSandbox::execute(const SandboxRequest& req) {
    requests_.push_back(req);
    if (handler) {
        if (auto r = handler(req)) return *r;
    }
    for (const std::string& m : syntax_error_markers) {
        if (req.source.find(m) != std::string::npos) return SandboxResponse::failure("SyntaxError: invalid syntax");
    }
    if (req.mode == SandboxMode::Check) return SandboxResponse::success();
    for (const std::string& m : timeout_markers) {
        if (req.source.find(m) != std::string::npos) return SandboxResponse::failure("timeout");
    }
    for (const RunRule& rule : rules) {
        if (rule.function_name == req.function_name && (!rule.args || *rule.args == req.args)) return rule.response;
    }
    return SandboxResponse::failure("exception: StubMiss: no canned response for " + req.function_name + "(" +
                                    req.args.dump() + ")");
}

std::unique_ptr<Sandbox> make_sandbox(std::string_view spec, SupervisorOptions options) {
    if (spec.starts_with("stub:")) {
        return std::make_unique<StubSandbox>(StubSandbox::from_file(std::string(spec.substr(5))));
    }
    if (spec.starts_with("cmd:")) {
        std::vector<std::string> argv;
        std::istringstream in{std::string(spec.substr(4))};
        for (std::string a; in >> a;) argv.push_back(a);
        if (argv.empty()) throw Error(ErrorCode::InvalidArgument, "empty sandbox command");
        auto sb = std::make_unique<SubprocessSandbox>(std::move(argv), options);
        sb->start();
        return sb;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown sandbox spec: " + std::string(spec));
}

}  // namespace tte
