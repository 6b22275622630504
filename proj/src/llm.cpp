#include "tapsynth/llm.hpp"

#include <cstdint>
#include <cstdio>
#include <mutex>
#include <semaphore>

#include "http_util.hpp"
#include "httplib.h"
#include "tapsynth/catalog.hpp"
#include "tapsynth/error.hpp"

namespace tapsynth {

namespace detail {
// Defined in the generated prompts source.
std::string_view builtin_prompt_text(std::string_view agent);
extern const char* const kPromptVersion;
}  // namespace detail

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

PromptTemplate parse_prompt_file(std::string_view agent, std::string_view version, std::string_view text) {
    PromptTemplate t;
    t.agent = std::string(agent);
    t.version = std::string(version);
    std::string* current = nullptr;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        if (line == "### SYSTEM") {
            current = &t.system;
        } else if (line == "### USER") {
            current = &t.user;
        } else if (line == "### SCHEMA") {
            current = &t.schema;
        } else if (current) {
            current->append(line);
            current->push_back('\n');
        }
        pos = eol + 1;
    }
    for (auto* s : {&t.system, &t.user, &t.schema}) *s = std::string(trim(*s));
    if (t.system.empty() || t.user.empty()) {
        throw Error(ErrorCode::Config, "prompt file for '" + t.agent + "' lacks a SYSTEM or USER section");
    }
    return t;
}

const PromptTemplate& prompt_template(std::string_view agent) {
    static const std::map<std::string, PromptTemplate, std::less<>> kTemplates = [] {
        std::map<std::string, PromptTemplate, std::less<>> m;
        for (const char* name : {"analyzer", "trigger_selector", "action_selector", "binder", "verifier"}) {
            m.emplace(name, parse_prompt_file(name, detail::kPromptVersion, detail::builtin_prompt_text(name)));
        }
        return m;
    }();
    auto it = kTemplates.find(agent);
    if (it == kTemplates.end()) throw Error(ErrorCode::InvalidArgument, "no prompt for agent '" + std::string(agent) + "'");
    return it->second;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        const std::string key(tmpl.substr(open + 2, close - open - 2));
        auto it = vars.find(key);
        if (it != vars.end()) {
            out += it->second;
        } else {
            out.append(tmpl.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    out.append(tmpl.substr(pos));
    return out;
}

std::string prompt_fingerprint(const LlmRequest& request) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view s) {
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    };
    mix(request.agent);
    mix(request.system_prompt);
    mix(request.user_prompt);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

namespace {

class ScriptedConversation final : public LlmConversation {
public:
    explicit ScriptedConversation(const ScriptedBackend& script) : script_(script) {}

    std::string complete(const LlmRequest& request) override {
        if (auto it = script_.fingerprints.find(prompt_fingerprint(request)); it != script_.fingerprints.end()) {
            return it->second;
        }
        auto it = script_.responses.find(request.agent);
        if (it == script_.responses.end() || it->second.empty()) return {};
        std::size_t& cursor = cursors_[request.agent];
        const auto& queue = it->second;
        const std::string& reply = queue[std::min(cursor, queue.size() - 1)];
        ++cursor;
        return reply;
    }

private:
    const ScriptedBackend& script_;
    std::map<std::string, std::size_t> cursors_;
};

}  // namespace

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(std::string_view document) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("scripted backend file: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::Parse, "scripted backend file must be an object");
    auto backend = std::make_shared<ScriptedBackend>();
    if (root.contains("fingerprints")) {
        for (const auto& [k, v] : root["fingerprints"].items()) {
            if (!v.is_string()) throw Error(ErrorCode::Parse, "fingerprints." + k + ": expected string");
            backend->fingerprints[k] = v.get<std::string>();
        }
    }
    if (root.contains("responses")) {
        for (const auto& [agent, list] : root["responses"].items()) {
            if (!list.is_array()) throw Error(ErrorCode::Parse, "responses." + agent + ": expected array");
            auto& queue = backend->responses[agent];
            for (const auto& r : list) {
                if (!r.is_string()) throw Error(ErrorCode::Parse, "responses." + agent + ": expected strings");
                queue.push_back(r.get<std::string>());
            }
        }
    }
    return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::string& path) {
    return from_json(read_text_file(path));
}

std::unique_ptr<LlmConversation> ScriptedBackend::start() const {
    return std::make_unique<ScriptedConversation>(*this);
}

// ---------------------------------------------------------------------------

struct RemoteChatBackend::Gate {
    explicit Gate(std::ptrdiff_t n) : slots(n) {}
    std::counting_semaphore<1024> slots;
};

namespace {

class RemoteConversation final : public LlmConversation {
public:
    explicit RemoteConversation(const RemoteChatBackend& backend) : backend_(backend) {}
    std::string complete(const LlmRequest& request) override { return backend_.complete(request); }

private:
    const RemoteChatBackend& backend_;
};

}  // namespace

RemoteChatBackend::RemoteChatBackend(RemoteChatOptions options) : options_(std::move(options)) {
    if (options_.max_parallel == 0) options_.max_parallel = 1;
    detail::split_url(options_.url, ErrorCode::Config);
    gate_ = std::make_unique<Gate>(static_cast<std::ptrdiff_t>(std::min<std::size_t>(options_.max_parallel, 1024)));
}

RemoteChatBackend::~RemoteChatBackend() = default;

std::unique_ptr<LlmConversation> RemoteChatBackend::start() const {
    return std::make_unique<RemoteConversation>(*this);
}

std::string RemoteChatBackend::complete(const LlmRequest& request) const {
    const auto endpoint = detail::split_url(options_.url, ErrorCode::Config);
    nlohmann::json body;
    body["model"] = options_.model;
    body["temperature"] = 0;
    std::string system = request.system_prompt;
    if (!request.response_schema.empty()) system += "\nDECISION schema: " + request.response_schema;
    body["messages"] = nlohmann::json::array({
        {{"role", "system"}, {"content", system}},
        {{"role", "user"}, {"content", request.user_prompt}},
    });
    httplib::Headers headers;
    if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);

    httplib::Result res;
    gate_->slots.acquire();
    {
        httplib::Client client(endpoint.base);
        client.set_connection_timeout(options_.timeout_seconds, 0);
        client.set_read_timeout(options_.timeout_seconds, 0);
        res = client.Post(endpoint.path, headers, body.dump(), "application/json");
    }
    gate_->slots.release();

    if (!res) {
        throw Error(ErrorCode::Backend, "chat backend unreachable at " + options_.url + ": " +
                                            httplib::to_string(res.error()));
    }
    if (res->status != 200) throw Error(ErrorCode::Backend, "chat backend returned HTTP " + std::to_string(res->status));
    try {
        const auto reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        // A malformed envelope is a parse failure for the calling agent.
        return {};
    }
}

// ---------------------------------------------------------------------------

std::optional<AgentResponse> parse_agent_response(std::string_view text) {
    AgentResponse out;
    std::string_view json_part;
    const auto marker = text.rfind("DECISION:");
    if (marker != std::string_view::npos) {
        std::string_view thinking = trim(text.substr(0, marker));
        if (thinking.starts_with("THINKING:")) thinking = trim(thinking.substr(9));
        out.thinking = std::string(thinking);
        json_part = trim(text.substr(marker + 9));
    } else {
        json_part = trim(text);
    }
    const auto open = json_part.find('{');
    const auto close = json_part.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    // Bare replies must be pure JSON; after a DECISION marker, code fences are tolerated.
    if (marker == std::string_view::npos && open != 0) return std::nullopt;
    try {
        out.decision = nlohmann::json::parse(json_part.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error&) {
        return std::nullopt;
    }
    if (!out.decision.is_object()) return std::nullopt;
    return out;
}

}  // namespace tapsynth
