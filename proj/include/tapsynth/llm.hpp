#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tapsynth {

// One agent prompt, split from a versioned prompt file into its sections.
struct PromptTemplate {
    std::string agent;
    std::string version;
    std::string system;
    std::string user;
    std::string schema;  // JSON Schema of the DECISION block
};

// Agents: analyzer, trigger_selector, action_selector, binder, verifier.
const PromptTemplate& prompt_template(std::string_view agent);
PromptTemplate parse_prompt_file(std::string_view agent, std::string_view version, std::string_view text);
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

struct LlmRequest {
    std::string agent;
    std::string system_prompt;
    std::string user_prompt;
    std::string response_schema;
};

// FNV-1a over agent, system and user prompt, as 16 hex digits.
std::string prompt_fingerprint(const LlmRequest& request);

// Per-query conversation. Throws Error(Backend) when the backend cannot be
// reached; any returned text may still fail to parse.
class LlmConversation {
public:
    virtual ~LlmConversation() = default;
    virtual std::string complete(const LlmRequest& request) = 0;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string name() const = 0;
    virtual std::unique_ptr<LlmConversation> start() const = 0;
};

// Canned responses. Lookup order: exact prompt fingerprint, then the next
// queued response for the agent (the last one repeats once the queue is
// drained). Agents with nothing scripted receive an empty reply.
//
//   {"fingerprints": {"<hex>": "..."},
//    "responses": {"verifier": ["...", "..."], ...}}
class ScriptedBackend final : public LlmBackend {
public:
    static std::shared_ptr<ScriptedBackend> from_json(std::string_view document);
    static std::shared_ptr<ScriptedBackend> load(const std::string& path);

    std::string name() const override { return "scripted"; }
    std::unique_ptr<LlmConversation> start() const override;

    std::map<std::string, std::string> fingerprints;
    std::map<std::string, std::vector<std::string>> responses;
};

struct RemoteChatOptions {
    std::string url;  // chat-completion endpoint
    std::string model;
    std::string token;
    std::size_t max_parallel = 4;
    int timeout_seconds = 60;
};

// Sends {model, messages, temperature: 0} and reads choices[0].message.content.
class RemoteChatBackend final : public LlmBackend {
public:
    explicit RemoteChatBackend(RemoteChatOptions options);
    ~RemoteChatBackend() override;

    std::string name() const override { return "remote"; }
    std::unique_ptr<LlmConversation> start() const override;

    std::string complete(const LlmRequest& request) const;

private:
    RemoteChatOptions options_;
    struct Gate;
    std::unique_ptr<Gate> gate_;
};

struct AgentResponse {
    std::string thinking;
    nlohmann::json decision;
};

// Accepts "THINKING: ... DECISION: {json}" or a bare JSON object.
std::optional<AgentResponse> parse_agent_response(std::string_view text);

}  // namespace tapsynth
