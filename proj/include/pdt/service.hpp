#pragma once

// HTTP front door. Api maps requests to responses without any transport so
// it can be driven directly by tests and transcripts; serve() binds it to a
// socket.

#include "pdt/tracker.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <mutex>
#include <string>

namespace pdt {

struct ServiceConfig {
    /// Empty keeps everything in memory.
    std::string store_dir;
    bool fsync = false;
    std::string host = "127.0.0.1";
    int port = 8080;
    /// Graph definition installed at start-up when the store holds none.
    std::string graph;
    int threads = 8;
    GraphParams params;
};

inline constexpr const char* kEnvPrefix = "PDT_";

/// Reads a flat JSON config object. Every key can be overridden by the
/// environment variable PDT_<KEY in upper case>. Unknown keys are errors.
ServiceConfig load_config(const std::string& text);
ServiceConfig apply_env(ServiceConfig config);

/// Compact JSON with every non-integer number written to 17 significant digits.
std::string to_wire(const nlohmann::json& value);

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    /// Idempotency-Key header, empty when absent.
    std::string request_key;
};

struct Response {
    int status = 200;
    std::string body;

    bool operator==(const Response&) const = default;
};

class Api {
   public:
    using Clock = std::function<Timestamp()>;

    explicit Api(Tracker& tracker, Clock clock = {});

    /// Thread-safe.
    Response handle(const Request& request);

   private:
    Response dispatch(const Request& request);

    Tracker& tracker_;
    Clock clock_;
    std::mutex keys_mutex_;
    struct Cached {
        std::string fingerprint;
        Response response;
    };
    std::map<std::string, Cached> cache_;
};

class HttpServer {
   public:
    HttpServer(Api& api, int threads = 8);
    ~HttpServer();

    /// Binds to `port` (0 picks a free one); returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    bool run();
    void stop();

   private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pdt
