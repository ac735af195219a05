#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "mixlaw/io.hpp"

namespace mixlaw {

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

/// Request handling for the HTTP API, independent of any socket. The loaded
/// artifact is never modified, so one instance serves concurrent requests.
///
///   GET  /v1/metadata  -> artifact summary
///   POST /v1/predict   {"mixture": [...] | {"name": p, ...}}
///   POST /v1/optimize  {"bounds"?: [[lo, hi], ...], "grid_step"?: x, "refine_iters"?: n, "chain"?: name}
///
/// Failures answer 4xx with {"error": {"category", "rule", "detail"}}.
class Api {
public:
    explicit Api(LawArtifact artifact);

    ApiResponse metadata() const;
    ApiResponse predict(std::string_view body) const;
    ApiResponse optimize(std::string_view body) const;

    const LawArtifact& artifact() const noexcept { return artifact_; }

private:
    LawArtifact artifact_;
};

int status_for(ErrorKind kind) noexcept;
std::string error_body(ErrorKind kind, const std::string& rule, const std::string& detail);

// JSON bodies shared with the CLI so both surfaces print identical numbers.
nlohmann::json prediction_json(const ArtifactPrediction& p);
nlohmann::json argmin_json(const ArgminResult& r);

/// Blocking HTTP server around an Api.
class HttpServer {
public:
    explicit HttpServer(LawArtifact artifact);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds `port` (0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    // Serves until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mixlaw
