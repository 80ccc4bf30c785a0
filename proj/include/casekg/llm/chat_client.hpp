#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "casekg/net/http_transport.hpp"

namespace casekg::llm {

enum class RequestKind { description, mechanism, predict, revise };

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct ChatRequest {
    RequestKind kind = RequestKind::predict;
    std::vector<ChatMessage> messages;

    // Concatenated user messages.
    std::string user_text() const;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct MockRule {
    std::string pattern;  // case-insensitive substring of the prompt
    std::optional<std::string> description;
    std::optional<std::string> mechanism;
    std::optional<std::string> label;
};

// Canned answers keyed on prompt substrings. For every request kind the rule
// whose pattern occurs earliest in the user prompt (ties: earlier rule) among
// the rules providing the needed field wins; otherwise the default applies.
struct MockPolicy {
    std::vector<MockRule> rules;
    MockRule fallback{"", "No description available.", "No mechanism identified.", std::nullopt};

    static MockPolicy from_json(const nlohmann::json& j);
    static MockPolicy load(const std::string& path);
    nlohmann::json to_json() const;
};

// Pure function of the request. Predict answers read
// "Mechanism: <text>\nAnswer: <label>".
class MockChatClient final : public ChatClient {
public:
    explicit MockChatClient(MockPolicy policy) : policy_(std::move(policy)) {}
    std::string complete(const ChatRequest& request) override;

private:
    const MockRule* match(std::string_view prompt, std::optional<std::string> MockRule::*field) const;
    MockPolicy policy_;
};

enum class Backend { remote, mock };

struct ChatClientConfig {
    Backend backend = Backend::mock;
    std::string endpoint;  // full chat-completions URL
    std::string model;
    std::string api_key_env;  // name of the variable holding the credential
    double temperature = 0.0;
    int max_retries = 3;
    int timeout_seconds = 60;
    int max_in_flight = 4;
    std::optional<std::string> cache_path;
    std::optional<std::string> mock_policy_path;
    std::optional<MockPolicy> mock_policy;  // takes precedence over the path

    void validate() const;
};

// OpenAI-style chat completions over HTTP with a response cache keyed by
// sha256(model, messages). The credential is read from the environment on
// each request and never written anywhere.
class RemoteChatClient final : public ChatClient {
public:
    RemoteChatClient(ChatClientConfig config, std::shared_ptr<net::HttpTransport> transport = nullptr);
    std::string complete(const ChatRequest& request) override;

    std::size_t wire_requests() const;

private:
    std::string cache_key(const ChatRequest& request) const;

    ChatClientConfig config_;
    std::shared_ptr<net::HttpTransport> transport_;
    std::counting_semaphore<1024> in_flight_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> cache_;
    std::size_t wire_requests_ = 0;
};

std::unique_ptr<ChatClient> make_chat_client(const ChatClientConfig& config,
                                             std::shared_ptr<net::HttpTransport> transport = nullptr);

}  // namespace casekg::llm
