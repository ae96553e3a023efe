#pragma once

// Drives an Api through a scripted list of requests and renders the
// exchange as text, for byte-for-byte comparison with a recorded transcript.

#include "pdt/service.hpp"
#include "support.hpp"

#include <string>
#include <vector>

namespace test_support {

struct ScriptedRequest {
    pdt::Request request;
    std::string label;
};

inline std::vector<ScriptedRequest> load_script(const std::filesystem::path& path) {
    const auto doc = nlohmann::json::parse(read_text(path));
    std::vector<ScriptedRequest> out;
    for (const auto& j : doc) {
        ScriptedRequest s;
        s.request.method = j.at("method").get<std::string>();
        s.request.path = j.at("path").get<std::string>();
        if (j.contains("query"))
            for (const auto& [k, v] : j.at("query").items()) s.request.query[k] = v.get<std::string>();
        if (j.contains("body_file")) s.request.body = read_text(source_path(j.at("body_file").get<std::string>()));
        if (j.contains("body")) s.request.body = j.at("body").get<std::string>();
        s.request.request_key = j.value("key", "");
        s.label = s.request.method + " " + s.request.path;
        std::string q;
        for (const auto& [k, v] : s.request.query) q += (q.empty() ? "?" : "&") + k + "=" + v;
        s.label += q;
        if (!s.request.request_key.empty()) s.label += " [key " + s.request.request_key + "]";
        if (j.contains("body_file")) s.label += " <" + j.at("body_file").get<std::string>();
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string render_exchange(const ScriptedRequest& s, const pdt::Response& res) {
    std::string out = ">>> " + s.label + "\n";
    if (!s.request.body.empty() && s.label.find(" <") == std::string::npos) out += s.request.body + "\n";
    return out + "<<< " + std::to_string(res.status) + "\n" + res.body + "\n";
}

/// Server clock fixed so that requests without `at` are reproducible.
inline constexpr pdt::Timestamp kPinnedNow = 1'700'000'000;

inline std::string run_script(pdt::Api& api, const std::vector<ScriptedRequest>& script) {
    std::string out;
    for (const auto& s : script) out += render_exchange(s, api.handle(s.request));
    return out;
}

}  // namespace test_support
