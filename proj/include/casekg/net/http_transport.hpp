#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "casekg/error.hpp"

namespace casekg::net {

struct HttpRequest {
    std::string url;  // scheme://host[:port]/path
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::chrono::seconds timeout{60};
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Failure to obtain a successful response; the message carries the transport detail.
class TransportError : public Error {
public:
    using Error::Error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    // Throws TransportError when no response could be obtained.
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib backed transport supporting http and https URLs.
class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const HttpRequest& request) override;
};

std::shared_ptr<HttpTransport> make_default_transport();

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds backoff{250};
};

// POSTs until a 2xx arrives. Transport failures, 429 and 5xx are retried up to
// max_retries times with doubling backoff; other statuses fail immediately.
// Returns the response body.
std::string post_with_retries(HttpTransport& transport, const HttpRequest& request, const RetryPolicy& policy);

// Value of the named environment variable, or empty when unset.
std::string read_env(const std::string& name);

}  // namespace casekg::net
