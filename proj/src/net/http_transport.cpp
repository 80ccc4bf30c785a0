#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "casekg/net/http_transport.hpp"

#include <cstdlib>
#include <thread>

namespace casekg::net {

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse HttplibTransport::post(const HttpRequest& request) {
    const auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    client.set_connection_timeout(request.timeout);
    client.set_read_timeout(request.timeout);
    client.set_write_timeout(request.timeout);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(path, headers, request.body, "application/json");
    if (!result) throw TransportError("POST " + origin + path + " failed: " + httplib::to_string(result.error()));
    return HttpResponse{result->status, result->body};
}

std::shared_ptr<HttpTransport> make_default_transport() { return std::make_shared<HttplibTransport>(); }

std::string post_with_retries(HttpTransport& transport, const HttpRequest& request, const RetryPolicy& policy) {
    std::string last_error;
    auto delay = policy.backoff;
    int attempts = 0;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        ++attempts;
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        try {
            const auto response = transport.post(request);
            if (response.status >= 200 && response.status < 300) return response.body;
            last_error = "HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 200);
            if (response.status != 429 && response.status < 500) break;
        } catch (const TransportError& e) {
            last_error = e.what();
        }
    }
    throw TransportError("request to " + request.url + " failed after " + std::to_string(attempts) +
                         " attempt(s): " + last_error);
}

std::string read_env(const std::string& name) {
    if (name.empty()) return {};
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : std::string();
}

}  // namespace casekg::net
