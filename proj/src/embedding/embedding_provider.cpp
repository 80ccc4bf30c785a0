#include "casekg/embedding/embedding_provider.hpp"

#include <fstream>

#include <json.hpp>

#include "casekg/text.hpp"

namespace casekg::embedding {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::vector<std::vector<double>> parse_embedding_response(const std::string& body) {
    const json doc = json::parse(body);
    std::vector<std::vector<double>> out;
    if (doc.is_array()) {
        for (const auto& row : doc) out.push_back(row.get<std::vector<double>>());
    } else if (doc.contains("data")) {
        for (const auto& item : doc.at("data")) out.push_back(item.at("embedding").get<std::vector<double>>());
    } else if (doc.contains("embeddings")) {
        for (const auto& row : doc.at("embeddings")) out.push_back(row.get<std::vector<double>>());
    } else {
        throw Error("embedding response has no data, embeddings or top-level array");
    }
    return out;
}

}  // namespace

TextEmbedding hashed_embedding(std::string_view normalized_text, std::size_t dim) {
    if (dim < 8) throw Error("hashed embedding dimension must be at least 8");
    if (normalized_text.empty()) throw Error("cannot embed empty text");
    const std::string padded = " " + std::string(normalized_text) + " ";
    std::vector<double> values(dim, 0.0);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        const std::uint64_t h = fnv1a(std::string_view(padded).substr(i, 3));
        const double sign = (splitmix64(h) >> 63) != 0 ? -1.0 : 1.0;
        values[h % dim] += sign;
    }
    return TextEmbedding::normalized(std::move(values));
}

EmbeddingProvider::EmbeddingProvider(EmbeddingConfig config, std::shared_ptr<net::HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.provider == ProviderKind::hashed && config_.dim < 8) {
        throw Error("hashed embedding dimension must be at least 8");
    }
    if (config_.provider == ProviderKind::remote) {
        if (config_.endpoint.empty()) throw Error("remote embedding provider needs an endpoint");
        if (!transport_) transport_ = net::make_default_transport();
    }
    load_cache_file();
}

std::size_t EmbeddingProvider::dim() const {
    if (config_.provider == ProviderKind::hashed) return config_.dim;
    std::lock_guard lock(mutex_);
    return remote_dim_;
}

std::size_t EmbeddingProvider::remote_requests() const {
    std::lock_guard lock(mutex_);
    return remote_requests_;
}

TextEmbedding EmbeddingProvider::embed(std::string_view raw) {
    const std::string normalized = text::normalize(raw);
    if (normalized.empty()) throw Error("cannot embed empty text");
    const std::string digest = text::sha256_hex(normalized);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(digest); it != cache_.end()) return it->second;
    }
    TextEmbedding e = compute(normalized);
    std::lock_guard lock(mutex_);
    auto [it, inserted] = cache_.emplace(digest, std::move(e));
    if (inserted) append_cache_file(digest, it->second);
    return it->second;
}

TextEmbedding EmbeddingProvider::compute(const std::string& normalized) {
    if (config_.provider == ProviderKind::hashed) return hashed_embedding(normalized, config_.dim);

    json body{{"model", config_.model}, {"input", json::array({normalized})}};
    net::HttpRequest request;
    request.url = config_.endpoint;
    request.body = body.dump();
    request.timeout = std::chrono::seconds(config_.timeout_seconds);
    if (const auto key = net::read_env(config_.api_key_env); !key.empty()) {
        request.headers.emplace_back("Authorization", "Bearer " + key);
    }
    {
        std::lock_guard lock(mutex_);
        ++remote_requests_;
    }
    const std::string response = net::post_with_retries(*transport_, request, {config_.max_retries});
    std::vector<std::vector<double>> rows;
    try {
        rows = parse_embedding_response(response);
    } catch (const json::exception& e) {
        throw net::TransportError(std::string("malformed embedding response: ") + e.what());
    }
    if (rows.size() != 1) throw net::TransportError("embedding response must hold exactly one vector");
    TextEmbedding e = TextEmbedding::normalized(std::move(rows.front()));
    std::lock_guard lock(mutex_);
    if (remote_dim_ == 0) remote_dim_ = e.dim();
    if (e.dim() != remote_dim_) throw ShapeError("remote embedding dimension changed between calls");
    return e;
}

void EmbeddingProvider::load_cache_file() {
    if (!config_.cache_path) return;
    std::ifstream in(*config_.cache_path);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json rec = json::parse(line);
            auto values = rec.at("values").get<std::vector<double>>();
            if (config_.provider == ProviderKind::hashed && values.size() != config_.dim) continue;
            cache_.emplace(rec.at("digest").get<std::string>(), TextEmbedding::from_unit(std::move(values)));
        } catch (const json::exception& e) {
            throw ParseError(*config_.cache_path, line_no, e.what());
        }
    }
    if (config_.provider == ProviderKind::remote && !cache_.empty()) remote_dim_ = cache_.begin()->second.dim();
}

void EmbeddingProvider::append_cache_file(const std::string& digest, const TextEmbedding& e) {
    if (!config_.cache_path) return;
    std::ofstream out(*config_.cache_path, std::ios::app);
    if (!out) throw Error("cannot append to embedding cache: " + *config_.cache_path);
    const json rec{{"digest", digest}, {"values", std::vector<double>(e.values().begin(), e.values().end())}};
    out << rec.dump() << '\n';
}

}  // namespace casekg::embedding
