#pragma once

#include "streamlens/snapshot.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace streamlens::service {

struct ApiRequest {
    std::string method = "GET";
    std::string path;
    std::multimap<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

struct ApiOptions {
    std::chrono::seconds session_ttl{3600};
    std::size_t ego_max_nodes = 500;
    std::function<std::chrono::steady_clock::time_point()> clock = [] { return std::chrono::steady_clock::now(); };
};

/// Read-only JSON API over a snapshot store; Bot-Match sessions are the only
/// mutable state. Every body carries the snapshot id and config digest.
class ApiService {
public:
    explicit ApiService(std::filesystem::path store, ApiOptions options = {});
    ~ApiService();
    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    ApiResponse handle(const ApiRequest& request);
    /// Rescans the store for new snapshots.
    void refresh();
    std::size_t session_count();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP front end for an ApiService.
class HttpServer {
public:
    explicit HttpServer(ApiService& api);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to host:port (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace streamlens::service
