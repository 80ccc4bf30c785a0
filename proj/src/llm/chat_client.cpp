#include "casekg/llm/chat_client.hpp"

#include <fstream>

#include "casekg/error.hpp"
#include "casekg/text.hpp"

namespace casekg::llm {

using nlohmann::json;

namespace {

MockRule rule_from_json(const json& j) {
    MockRule r;
    r.pattern = j.value("pattern", std::string());
    if (j.contains("description")) r.description = j.at("description").get<std::string>();
    if (j.contains("mechanism")) r.mechanism = j.at("mechanism").get<std::string>();
    if (j.contains("label")) r.label = j.at("label").get<std::string>();
    return r;
}

json rule_to_json(const MockRule& r) {
    json j{{"pattern", r.pattern}};
    if (r.description) j["description"] = *r.description;
    if (r.mechanism) j["mechanism"] = *r.mechanism;
    if (r.label) j["label"] = *r.label;
    return j;
}

}  // namespace

std::string ChatRequest::user_text() const {
    std::string out;
    for (const auto& m : messages) {
        if (m.role != "user") continue;
        if (!out.empty()) out += '\n';
        out += m.content;
    }
    return out;
}

MockPolicy MockPolicy::from_json(const json& j) {
    MockPolicy p;
    const json& rules = j.is_array() ? j : j.at("rules");
    for (const auto& r : rules) {
        auto rule = rule_from_json(r);
        if (rule.pattern.empty()) throw Error("mock rule with an empty pattern");
        p.rules.push_back(std::move(rule));
    }
    if (j.is_object() && j.contains("default")) {
        const auto d = rule_from_json(j.at("default"));
        if (d.description) p.fallback.description = d.description;
        if (d.mechanism) p.fallback.mechanism = d.mechanism;
        if (d.label) p.fallback.label = d.label;
    }
    return p;
}

MockPolicy MockPolicy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open mock policy " + path);
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
}

json MockPolicy::to_json() const {
    json out = json::array();
    for (const auto& r : rules) out.push_back(rule_to_json(r));
    return {{"rules", out}, {"default", rule_to_json(fallback)}};
}

const MockRule* MockChatClient::match(std::string_view prompt, std::optional<std::string> MockRule::*field) const {
    const MockRule* best = nullptr;
    std::size_t best_pos = std::string_view::npos;
    for (const auto& rule : policy_.rules) {
        if (!(rule.*field)) continue;
        const auto pos = text::ifind(prompt, rule.pattern);
        if (pos != std::string_view::npos && (best == nullptr || pos < best_pos)) {
            best = &rule;
            best_pos = pos;
        }
    }
    return best;
}

std::string MockChatClient::complete(const ChatRequest& request) {
    const std::string prompt = request.user_text();
    auto pick = [&](std::optional<std::string> MockRule::*field) -> std::string {
        if (const MockRule* r = match(prompt, field)) return *(r->*field);
        return (policy_.fallback.*field).value_or("");
    };
    switch (request.kind) {
        case RequestKind::description:
            return pick(&MockRule::description);
        case RequestKind::mechanism:
        case RequestKind::revise:
            return pick(&MockRule::mechanism);
        case RequestKind::predict:
            return "Mechanism: " + pick(&MockRule::mechanism) + "\nAnswer: " + pick(&MockRule::label);
    }
    return {};
}

void ChatClientConfig::validate() const {
    if (!(temperature >= 0.0)) throw Error("temperature must be >= 0");
    if (max_retries < 0) throw Error("max_retries must be >= 0");
    if (max_in_flight < 1 || max_in_flight > 1024) throw Error("max_in_flight must lie in [1, 1024]");
    if (backend == Backend::remote && endpoint.empty()) throw Error("remote chat backend needs an endpoint");
}

RemoteChatClient::RemoteChatClient(ChatClientConfig config, std::shared_ptr<net::HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)), in_flight_(config_.max_in_flight) {
    config_.validate();
    if (!transport_) transport_ = net::make_default_transport();
    if (config_.cache_path) {
        std::ifstream in(*config_.cache_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                const auto rec = json::parse(line);
                cache_.emplace(rec.at("key").get<std::string>(), rec.at("content").get<std::string>());
            } catch (const json::exception& e) {
                throw ParseError(*config_.cache_path, line_no, e.what());
            }
        }
    }
}

std::string RemoteChatClient::cache_key(const ChatRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    return text::sha256_hex(config_.model + '\x1f' + messages.dump());
}

std::size_t RemoteChatClient::wire_requests() const {
    std::lock_guard lock(mutex_);
    return wire_requests_;
}

std::string RemoteChatClient::complete(const ChatRequest& request) {
    const std::string key = cache_key(request);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }

    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    net::HttpRequest http;
    http.url = config_.endpoint;
    http.body = json{{"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}}.dump();
    http.timeout = std::chrono::seconds(config_.timeout_seconds);
    http.headers.emplace_back("Content-Type", "application/json");
    if (!config_.api_key_env.empty()) {
        if (const auto secret = net::read_env(config_.api_key_env); !secret.empty()) {
            http.headers.emplace_back("Authorization", "Bearer " + secret);
        }
    }

    std::string body;
    in_flight_.acquire();
    try {
        {
            std::lock_guard lock(mutex_);
            ++wire_requests_;
        }
        body = net::post_with_retries(*transport_, http, {config_.max_retries});
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();

    std::string content;
    try {
        content = json::parse(body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw net::TransportError(std::string("malformed chat response: ") + e.what());
    }

    std::lock_guard lock(mutex_);
    if (cache_.emplace(key, content).second && config_.cache_path) {
        std::ofstream out(*config_.cache_path, std::ios::app);
        out << json{{"key", key}, {"content", content}}.dump() << '\n';
    }
    return content;
}

std::unique_ptr<ChatClient> make_chat_client(const ChatClientConfig& config,
                                             std::shared_ptr<net::HttpTransport> transport) {
    config.validate();
    if (config.backend == Backend::remote) return std::make_unique<RemoteChatClient>(config, std::move(transport));
    if (config.mock_policy) return std::make_unique<MockChatClient>(*config.mock_policy);
    if (config.mock_policy_path) return std::make_unique<MockChatClient>(MockPolicy::load(*config.mock_policy_path));
    return std::make_unique<MockChatClient>(MockPolicy{});
}

}  // namespace casekg::llm
