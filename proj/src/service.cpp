#include "pdt/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pdt {

using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

const std::vector<std::string> kConfigKeys = {"store_dir", "fsync", "host",      "port",    "graph",
                                              "threads",   "t_half_days", "t_e0_days", "n_half", "n_s_max",
                                              "n_i",       "n_c_cap"};

void set_key(ServiceConfig& c, const std::string& key, const json& v) {
    if (key == "store_dir") c.store_dir = v.get<std::string>();
    else if (key == "fsync") c.fsync = v.get<bool>();
    else if (key == "host") c.host = v.get<std::string>();
    else if (key == "port") c.port = v.get<int>();
    else if (key == "graph") c.graph = v.get<std::string>();
    else if (key == "threads") c.threads = v.get<int>();
    else if (key == "t_half_days") c.params.decay.t_half = days_to_seconds(v.get<double>());
    else if (key == "t_e0_days") c.params.decay.t_e0 = days_to_seconds(v.get<double>());
    else if (key == "n_half") c.params.decay.n_half = v.get<int>();
    else if (key == "n_s_max") c.params.decay.n_s_max = v.get<int>();
    else if (key == "n_i") c.params.n_i = v.get<int>();
    else if (key == "n_c_cap") c.params.n_c_cap = v.get<int>();
    else throw Error("unknown config key '" + key + "'");
}

// Environment values are untyped; read them as JSON when they parse (numbers,
// booleans) and as plain strings otherwise.
json env_value(const std::string& key, const char* raw) {
    const std::string text = raw;
    if (key == "store_dir" || key == "host" || key == "graph") return text;
    if (key == "fsync") {
        if (text == "1" || text == "true") return true;
        if (text == "0" || text == "false" || text.empty()) return false;
        throw Error(std::string(kEnvPrefix) + "FSYNC must be true/false/1/0");
    }
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        throw Error("environment value for '" + key + "' is not a number: " + text);
    }
}

void check_config(const ServiceConfig& c) {
    if (c.port < 0 || c.port > 65535) throw Error("port out of range");
    if (c.threads < 1) throw Error("threads must be at least 1");
    Graph probe;
    probe.params = c.params;
    const auto report = validate_graph(probe);
    if (!report.ok()) throw Error("invalid parameters: " + report.errors.front().message);
}

}  // namespace

ServiceConfig load_config(const std::string& text) {
    ServiceConfig c;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        try {
            set_key(c, key, value);
        } catch (const json::exception&) {
            throw Error("config key '" + key + "' has the wrong type");
        }
    }
    check_config(c);
    return c;
}

ServiceConfig apply_env(ServiceConfig c) {
    for (const auto& key : kConfigKeys) {
        std::string name = kEnvPrefix + key;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
        const char* raw = std::getenv(name.c_str());
        if (!raw) continue;
        try {
            set_key(c, key, env_value(key, raw));
        } catch (const json::exception&) {
            throw Error(name + " has the wrong type");
        }
    }
    check_config(c);
    return c;
}

// ---------------------------------------------------------------- wire format

namespace {

void write_wire(const json& v, std::string& out) {
    switch (v.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, item] : v.items()) {
                if (!first) out += ',';
                first = false;
                out += json(key).dump();
                out += ':';
                write_wire(item, out);
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ',';
                write_wire(v[i], out);
            }
            out += ']';
            break;
        }
        case json::value_t::number_float: {
            const double d = v.get<double>();
            if (!std::isfinite(d)) {
                out += "null";
                break;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", d);
            out += buf;
            break;
        }
        default:
            out += v.dump();
    }
}

}  // namespace

std::string to_wire(const json& value) {
    std::string out;
    write_wire(value, out);
    return out;
}

// ---------------------------------------------------------------- api

namespace {

struct ApiError {
    int status;
    std::string code;
    std::string message;
    json detail = nullptr;
};

Response reply(int status, const json& body) { return {status, to_wire(body)}; }

Response error_reply(const ApiError& e) {
    return reply(e.status, {{"code", e.code}, {"message", e.message}, {"detail", e.detail}});
}

json coeffs_json(const BasisCoefficients& c) {
    json out = json::array();
    for (Eigen::Index i = 0; i < c.size(); ++i) out.push_back(c[i]);
    return out;
}

json trace_json(const std::vector<Evidence>& trace) {
    json out = json::array();
    for (const auto& e : trace) {
        json j = {{"source", to_string(e.source)}, {"skills", e.skills}, {"order", e.coeffs.size() - 1},
                  {"mean", e.mean}};
        if (e.source == EvidenceSource::Correlated) j["n_c"] = e.n_c;
        out.push_back(j);
    }
    return out;
}

json summary_json(const Posterior& p) {
    return {{"skill", p.skill},
            {"order", p.coeffs.size() - 1},
            {"mean", p.mean},
            {"interval", {p.lower, p.upper}}};
}

json posterior_json(const Posterior& p) {
    json j = summary_json(p);
    j["coefficients"] = coeffs_json(p.coeffs);
    j["trace"] = trace_json(p.trace);
    return j;
}

json issues_json(const std::vector<GraphIssue>& issues) {
    json out = json::array();
    for (const auto& i : issues) out.push_back({{"code", i.code}, {"subject", i.subject}, {"message", i.message}});
    return out;
}

json parse_body(const std::string& body) {
    try {
        json doc = json::parse(body);
        if (!doc.is_object()) throw ApiError{400, "bad_request", "request body must be a JSON object"};
        return doc;
    } catch (const json::parse_error& e) {
        throw ApiError{400, "bad_request", "request body is not valid JSON", e.what()};
    }
}

template <class T>
T field(const json& doc, const char* name) {
    if (!doc.contains(name)) throw ApiError{422, "invalid_request", std::string("missing field '") + name + "'"};
    try {
        return doc.at(name).get<T>();
    } catch (const json::exception&) {
        throw ApiError{422, "invalid_request", std::string("field '") + name + "' has the wrong type"};
    }
}

template <class T>
std::optional<T> query_number(const Request& req, const char* name) {
    const auto it = req.query.find(name);
    if (it == req.query.end()) return std::nullopt;
    const std::string& s = it->second;
    T value{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || end != s.data() + s.size())
        throw ApiError{422, "invalid_request", std::string("query parameter '") + name + "' is not a number"};
    return value;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : path) {
        if (ch == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

Timestamp system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

Api::Api(Tracker& tracker, Clock clock) : tracker_(tracker), clock_(clock ? std::move(clock) : system_now) {}

Response Api::handle(const Request& req) {
    if (req.method != "POST" || req.request_key.empty()) return dispatch(req);

    // Keyed mutations are serialized so a retry racing the original cannot
    // apply twice.
    std::lock_guard lock(keys_mutex_);
    const std::string fingerprint = req.path + "\n" + req.body;
    if (const auto it = cache_.find(req.request_key); it != cache_.end()) {
        if (it->second.fingerprint == fingerprint) return it->second.response;
        return error_reply({422, "idempotency_key_reuse", "request key was already used for a different request",
                            {{"request_key", req.request_key}}});
    }
    if (const auto seq = tracker_.seq_for_key(req.request_key))
        return reply(200, {{"duplicate", true}, {"seq", *seq}});
    Response res = dispatch(req);
    if (res.status >= 200 && res.status < 300) cache_[req.request_key] = {fingerprint, res};
    return res;
}

Response Api::dispatch(const Request& req) {
    try {
        const auto parts = split_path(req.path);
        const auto n = parts.size();
        const bool get = req.method == "GET";
        const bool post = req.method == "POST";
        auto method_not_allowed = [&] {
            return error_reply({405, "method_not_allowed", req.method + " is not supported on " + req.path});
        };

        if (n == 1 && parts[0] == "healthz") {
            if (!get) return method_not_allowed();
            return reply(200, {{"status", "ok"}});
        }

        if (n == 1 && parts[0] == "graph") {
            if (get) return {200, dump_graph(*tracker_.graph())};
            if (!post) return method_not_allowed();
            const auto loaded = tracker_.set_graph(req.body);
            if (!loaded.report.ok())
                return error_reply({422, "invalid_graph", "graph definition has errors",
                                    {{"errors", issues_json(loaded.report.errors)},
                                     {"warnings", issues_json(loaded.report.warnings)}}});
            return reply(200, {{"ok", true},
                               {"skills", loaded.graph.skills().size()},
                               {"exercises", loaded.graph.exercises().size()},
                               {"errors", json::array()},
                               {"warnings", issues_json(loaded.report.warnings)}});
        }

        if (n == 1 && parts[0] == "students") {
            if (get) return reply(200, {{"students", tracker_.students()}});
            if (!post) return method_not_allowed();
            const json doc = parse_body(req.body);
            const auto id = field<std::string>(doc, "id");
            if (!valid_student_id(id))
                throw ApiError{422, "invalid_student_id",
                               "student ids are 1 to 64 characters of [A-Za-z0-9_.-] not starting with '.'"};
            if (!tracker_.create_student(id, req.request_key))
                throw ApiError{409, "student_exists", "student '" + id + "' already exists"};
            return reply(201, {{"id", id}});
        }

        if (n == 1 && parts[0] == "observations") {
            if (!post) return method_not_allowed();
            const json doc = parse_body(req.body);
            Observation obs;
            obs.student = field<std::string>(doc, "student");
            obs.exercise = field<std::string>(doc, "exercise");
            const auto outcome = field<std::string>(doc, "outcome");
            if (outcome == "success") obs.outcome = Outcome::Success;
            else if (outcome == "failure") obs.outcome = Outcome::Failure;
            else throw ApiError{422, "invalid_request", "outcome must be \"success\" or \"failure\""};
            obs.at = doc.contains("at") && !doc.at("at").is_null() ? field<Timestamp>(doc, "at") : clock_();
            const bool dry_run = doc.contains("dry_run") && field<bool>(doc, "dry_run");

            const auto result = tracker_.record(obs, dry_run, req.request_key);
            json skills = json::array();
            for (const auto& p : result.posteriors) skills.push_back(posterior_json(p));
            json body = {{"student", obs.student}, {"exercise", obs.exercise}, {"outcome", outcome},
                         {"at", obs.at},           {"dry_run", dry_run},       {"skills", skills}};
            if (!dry_run) body["seq"] = result.seq;
            return reply(200, body);
        }

        if (n >= 3 && parts[0] == "students") {
            if (!get) return method_not_allowed();
            const StudentId& student = parts[1];
            if (!tracker_.has_student(student)) throw UnknownStudent(student);
            const Timestamp at = query_number<Timestamp>(req, "at").value_or(clock_());

            if (n == 3 && parts[2] == "skills") {
                json skills = json::array();
                for (const auto& p : tracker_.posteriors(student, at)) skills.push_back(summary_json(p));
                return reply(200, {{"student", student}, {"at", at}, {"skills", skills}});
            }
            if (n == 4 && parts[2] == "skills") {
                json body = posterior_json(tracker_.posterior(student, parts[3], at));
                body["student"] = student;
                body["at"] = at;
                return reply(200, body);
            }
            if (n == 3 && parts[2] == "recommendations") {
                const double lo = query_number<double>(req, "lo").value_or(0.4);
                const double hi = query_number<double>(req, "hi").value_or(0.8);
                if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
                    throw ApiError{422, "invalid_request", "window must satisfy 0 <= lo <= hi <= 1"};
                json list = json::array();
                for (const auto& r : tracker_.recommend(student, at, lo, hi))
                    list.push_back({{"exercise", r.exercise},
                                    {"expected_success", r.expected_success},
                                    {"in_window", r.in_window}});
                return reply(200, {{"student", student}, {"at", at}, {"lo", lo}, {"hi", hi}, {"exercises", list}});
            }
        }

        return error_reply({404, "not_found", "no route for " + req.method + " " + req.path});
    } catch (const ApiError& e) {
        return error_reply(e);
    } catch (const UnknownStudent& e) {
        return error_reply({404, "unknown_student", e.what()});
    } catch (const UnknownExercise& e) {
        return error_reply({404, "unknown_exercise", e.what()});
    } catch (const UnknownSkill& e) {
        return error_reply({404, "unknown_skill", e.what()});
    } catch (const TimestampRegression& e) {
        return error_reply({409, "timestamp_regression", e.what()});
    } catch (const AllZero& e) {
        return error_reply({422, "contradictory_observation", e.what()});
    } catch (const Error& e) {
        return error_reply({422, "rejected", e.what()});
    } catch (const std::exception& e) {
        return error_reply({500, "internal_error", e.what()});
    }
}

// ---------------------------------------------------------------- http

struct HttpServer::Impl {
    Api& api;
    httplib::Server server;

    explicit Impl(Api& a) : api(a) {}
};

HttpServer::HttpServer(Api& api, int threads) : impl_(std::make_unique<Impl>(api)) {
    auto& svr = impl_->server;
    const auto n = static_cast<std::size_t>(std::max(1, threads));
    svr.new_task_queue = [n] { return new httplib::ThreadPool(n); };
    auto handler = [this](const httplib::Request& hreq, httplib::Response& hres) {
        Request req;
        req.method = hreq.method;
        req.path = hreq.path;
        for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
        req.body = hreq.body;
        req.request_key = hreq.get_header_value("Idempotency-Key");
        const Response res = impl_->api.handle(req);
        hres.status = res.status;
        hres.set_content(res.body, "application/json");
    };
    svr.Get(".*", handler);
    svr.Post(".*", handler);
    svr.Put(".*", handler);
    svr.Delete(".*", handler);
    svr.Patch(".*", handler);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace pdt
