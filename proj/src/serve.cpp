#include "mixlaw/serve.hpp"

#include <httplib.h>

namespace mixlaw {

using nlohmann::json;

namespace {

json parse_body(std::string_view body) {
    if (body.empty()) return json::object();
    try {
        auto j = json::parse(body);
        if (!j.is_object()) fail(ErrorKind::Schema, "request body must be a JSON object", "body_object");
        return j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("request body is not valid JSON: ") + e.what(), "json_syntax");
    }
}

template <class F>
ApiResponse guarded(F&& f) {
    try {
        return {200, f().dump()};
    } catch (const Error& e) {
        return {status_for(e.kind()), error_body(e.kind(), e.rule(), e.what())};
    } catch (const json::exception& e) {
        return {400, error_body(ErrorKind::Schema, "field_type", e.what())};
    }
}

}  // namespace

int status_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MissingDomain: return 404;
        case ErrorKind::NoSolution:
        case ErrorKind::Infeasible:
        case ErrorKind::FitFailed: return 422;
        default: return 400;
    }
}

std::string error_body(ErrorKind kind, const std::string& rule, const std::string& detail) {
    return json{{"error", {{"category", std::string(to_string(kind))}, {"rule", rule}, {"detail", detail}}}}.dump();
}

json prediction_json(const ArtifactPrediction& p) {
    json per_domain = json::object();
    for (const auto& [name, v] : p.per_domain) per_domain[name] = v;
    return {{"overall", p.overall}, {"per_domain", per_domain}};
}

json argmin_json(const ArgminResult& r) {
    return {{"mixture", std::vector<double>(r.mixture.proportions().begin(), r.mixture.proportions().end())},
            {"domain_names", r.mixture.domain_names()},
            {"loss", r.loss},
            {"per_domain", r.prediction.per_domain},
            {"grid_mixture", std::vector<double>(r.grid_mixture.proportions().begin(), r.grid_mixture.proportions().end())},
            {"grid_loss", r.grid_loss},
            {"grid_points", r.grid_points}};
}

Api::Api(LawArtifact artifact) : artifact_(std::move(artifact)) {}

ApiResponse Api::metadata() const {
    return guarded([&] { return artifact_metadata(artifact_); });
}

ApiResponse Api::predict(std::string_view body) const {
    return guarded([&] {
        const auto j = parse_body(body);
        if (!j.contains("mixture")) fail(ErrorKind::Schema, "request needs a 'mixture' field", "required_field");
        const auto names = artifact_.training_domains();
        if (names.empty()) fail(ErrorKind::InvalidArgument, "artifact is a power law and takes no mixture", "kind");
        const auto r = mixture_from_json(j.at("mixture"), names);
        return prediction_json(predict_artifact(artifact_, r));
    });
}

ApiResponse Api::optimize(std::string_view body) const {
    return guarded([&] {
        const auto j = parse_body(body);
        OptimizeConfig config;
        if (j.contains("grid_step") && !j.at("grid_step").is_null()) config.grid_step = j.at("grid_step").get<double>();
        if (j.contains("refine_iters")) config.refine_iters = j.at("refine_iters").get<int>();
        if (j.contains("bounds") && !j.at("bounds").is_null()) {
            std::vector<std::pair<double, double>> bounds;
            for (const auto& b : j.at("bounds")) {
                if (!b.is_array() || b.size() != 2) fail(ErrorKind::Schema, "each bound must be [lo, hi]", "bounds_shape");
                bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
            }
            config.bounds = std::move(bounds);
        }
        const std::string chain = j.value("chain", std::string());
        return argmin_json(optimize_artifact(artifact_, config, chain));
    });
}

struct HttpServer::Impl {
    Api api;
    httplib::Server server;
    std::string host;
    int port = 0;

    explicit Impl(LawArtifact artifact) : api(std::move(artifact)) {
        const auto reply = [](httplib::Response& res, const ApiResponse& out) {
            res.status = out.status;
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_content(out.body, "application/json");
        };
        server.Get("/v1/metadata", [this, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, api.metadata());
        });
        server.Post("/v1/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, api.predict(req.body));
        });
        server.Post("/v1/optimize", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, api.optimize(req.body));
        });
        server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.status == 404) {
                res.set_content(error_body(ErrorKind::InvalidArgument, "unknown_endpoint", "no such endpoint"), "application/json");
            }
        });
    }
};

HttpServer::HttpServer(LawArtifact artifact) : impl_(std::make_unique<Impl>(std::move(artifact))) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (impl_->port < 0) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    return impl_->port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace mixlaw
