#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "casekg/embedding/text_embedding.hpp"
#include "casekg/net/http_transport.hpp"

namespace casekg::embedding {

enum class ProviderKind { hashed, remote };

struct EmbeddingConfig {
    ProviderKind provider = ProviderKind::hashed;
    std::size_t dim = 64;  // hashed mode only
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    int max_retries = 3;
    int timeout_seconds = 60;
    std::optional<std::string> cache_path;
};

// Character 3-gram feature hashing over the normalized text padded with one
// space on each side: each gram adds +-1 to one of `dim` buckets, then the
// vector is L2-normalized.
TextEmbedding hashed_embedding(std::string_view normalized_text, std::size_t dim);

// Text -> TextEmbedding with normalization, an in-memory cache and an optional
// append-only cache file of `{"digest": <sha256 of normalized text>, "values": [...]}` lines.
// Safe for concurrent calls.
class EmbeddingProvider {
public:
    explicit EmbeddingProvider(EmbeddingConfig config, std::shared_ptr<net::HttpTransport> transport = nullptr);

    // Throws Error for text that is empty after normalization and
    // net::TransportError when the remote service keeps failing.
    TextEmbedding embed(std::string_view text);

    const EmbeddingConfig& config() const noexcept { return config_; }
    // Embedding width; for the remote provider 0 until the first response.
    std::size_t dim() const;
    std::size_t remote_requests() const;

private:
    TextEmbedding compute(const std::string& normalized);
    void load_cache_file();
    void append_cache_file(const std::string& digest, const TextEmbedding& e);

    EmbeddingConfig config_;
    std::shared_ptr<net::HttpTransport> transport_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, TextEmbedding> cache_;
    std::size_t remote_dim_ = 0;
    std::size_t remote_requests_ = 0;
};

}  // namespace casekg::embedding
