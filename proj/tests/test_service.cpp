#include "pdt/service.hpp"
#include "support.hpp"
#include "transcript.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cstdlib>
#include <random>
#include <thread>

using namespace pdt;
using nlohmann::json;
using test_support::TempDir;

namespace {

constexpr Timestamp kT0 = 1'700'000'000;

struct Fixture {
    std::unique_ptr<Tracker> tracker;
    std::unique_ptr<Api> api;

    explicit Fixture(std::unique_ptr<Store> store = Store::in_memory()) {
        tracker = std::make_unique<Tracker>(std::move(store));
        api = std::make_unique<Api>(*tracker, [] { return kT0; });
    }

    Response post(const std::string& path, const json& body, const std::string& key = {}) {
        return api->handle({"POST", path, {}, body.dump(), key});
    }
    Response get(const std::string& path, std::map<std::string, std::string> query = {}) {
        return api->handle({"GET", path, std::move(query), "", ""});
    }
    void setup_demo() {
        REQUIRE(api->handle({"POST", "/graph", {}, test_support::read_text(test_support::source_path("demo/graph.def")),
                             ""})
                    .status == 200);
        REQUIRE(post("/students", {{"id", "ann"}}).status == 201);
    }
};

json body_of(const Response& r) { return json::parse(r.body); }

// Minimal structural schema: every listed key present with the given JSON type.
void expect_shape(const json& j, std::initializer_list<std::pair<const char*, json::value_t>> fields) {
    REQUIRE(j.is_object());
    for (const auto& [key, type] : fields) {
        INFO(key);
        REQUIRE(j.contains(key));
        const auto t = j.at(key).type();
        const bool number = type == json::value_t::number_float;
        if (number)
            CHECK(j.at(key).is_number());
        else if (type == json::value_t::number_integer)
            CHECK(j.at(key).is_number_integer());
        else
            CHECK(t == type);
    }
}

void expect_error_shape(const Response& r, int status, const std::string& code) {
    CHECK(r.status == status);
    const json j = body_of(r);
    expect_shape(j, {{"code", json::value_t::string}, {"message", json::value_t::string}});
    CHECK(j.contains("detail"));
    CHECK(j.at("code") == code);
}

void expect_posterior_shape(const json& j) {
    using t = json::value_t;
    expect_shape(j, {{"skill", t::string},
                     {"order", t::number_integer},
                     {"mean", t::number_float},
                     {"interval", t::array},
                     {"coefficients", t::array},
                     {"trace", t::array}});
    CHECK(j.at("coefficients").size() == j.at("order").get<std::size_t>() + 1);
    CHECK(j.at("interval").size() == 2);
    for (const auto& e : j.at("trace"))
        expect_shape(e, {{"source", t::string}, {"skills", t::array}, {"order", t::number_integer}, {"mean", t::number_float}});
}

}  // namespace

TEST_CASE("numbers go out with 17 significant digits and round-trip") {
    CHECK(to_wire(json{{"x", 2.0 / 3.0}}) == R"({"x":0.66666666666666663})");
    CHECK(to_wire(json{{"n", 3}, {"s", "a\"b"}, {"v", {0.5, 1e-300, 0.1}}}) ==
          R"({"n":3,"s":"a\"b","v":[0.5,1e-300,0.10000000000000001]})");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(json::parse(to_wire(json(x))).get<double>() == x);
    }
}

TEST_CASE("config file with environment overrides") {
    const auto c = load_config(R"({"store_dir":"/tmp/x","port":9000,"t_half_days":100,"n_i":12})");
    CHECK(c.store_dir == "/tmp/x");
    CHECK(c.port == 9000);
    CHECK(c.params.decay.t_half == 100 * kSecondsPerDay);
    CHECK(c.params.n_i == 12);
    CHECK_THROWS_AS(load_config(R"({"colour":"red"})"), Error);
    CHECK_THROWS_AS(load_config(R"({"port":"x"})"), Error);
    CHECK_THROWS_AS(load_config(R"({"n_c_cap":11})"), Error);
    CHECK_THROWS_AS(load_config("[1]"), Error);

    ::setenv("PDT_PORT", "9100", 1);
    ::setenv("PDT_STORE_DIR", "/srv/pdt", 1);
    ::setenv("PDT_FSYNC", "true", 1);
    ::setenv("PDT_N_HALF", "4", 1);
    const auto e = apply_env(c);
    ::unsetenv("PDT_PORT");
    ::unsetenv("PDT_STORE_DIR");
    ::unsetenv("PDT_FSYNC");
    ::unsetenv("PDT_N_HALF");
    CHECK(e.port == 9100);
    CHECK(e.store_dir == "/srv/pdt");
    CHECK(e.fsync);
    CHECK(e.params.decay.n_half == 4);
    CHECK(e.params.n_i == 12);

    ::setenv("PDT_THREADS", "many", 1);
    CHECK_THROWS_AS(apply_env(c), Error);
    ::unsetenv("PDT_THREADS");
}

TEST_CASE("config parameters become graph defaults") {
    GraphParams params;
    params.n_i = 6;
    Tracker tracker(Store::in_memory(), params);
    REQUIRE(tracker.set_graph(R"({"skills":[{"id":"a"}]})").report.ok());
    CHECK(tracker.graph()->params.n_i == 6);
    REQUIRE(tracker.set_graph(R"({"params":{"n_i":9},"skills":[{"id":"a"}]})").report.ok());
    CHECK(tracker.graph()->params.n_i == 9);
}

TEST_CASE("api: fresh student is flat, one success gives 2/3 at the same instant") {
    Fixture f;
    f.setup_demo();
    auto r = f.get("/students/ann/skills/add", {{"at", std::to_string(kT0)}});
    REQUIRE(r.status == 200);
    json j = body_of(r);
    expect_posterior_shape(j);
    CHECK(j.at("mean").get<double>() == 0.5);
    CHECK(j.at("coefficients") == json::array({1.0}));

    r = f.post("/observations", {{"student", "ann"}, {"exercise", "add-1"}, {"outcome", "success"}, {"at", kT0}});
    REQUIRE(r.status == 200);
    j = body_of(r);
    expect_shape(j, {{"student", json::value_t::string},
                     {"exercise", json::value_t::string},
                     {"outcome", json::value_t::string},
                     {"at", json::value_t::number_integer},
                     {"dry_run", json::value_t::boolean},
                     {"seq", json::value_t::number_integer},
                     {"skills", json::value_t::array}});
    REQUIRE(j.at("skills").size() == 1);
    expect_posterior_shape(j.at("skills")[0]);

    j = body_of(f.get("/students/ann/skills/add", {{"at", std::to_string(kT0)}}));
    CHECK(j.at("mean").get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // Later reads decay towards 1/2.
    const double later = body_of(f.get("/students/ann/skills/add", {{"at", std::to_string(kT0 + 200 * kSecondsPerDay)}}))
                             .at("mean")
                             .get<double>();
    CHECK(later < 2.0 / 3.0);
    CHECK(later > 0.5);
}

TEST_CASE("api: at defaults to the server clock") {
    Fixture f;
    f.setup_demo();
    auto j = body_of(f.post("/observations", {{"student", "ann"}, {"exercise", "add-1"}, {"outcome", "failure"}}));
    CHECK(j.at("at") == kT0);
    j = body_of(f.get("/students/ann/skills/add"));
    CHECK(j.at("at") == kT0);
    CHECK(j.at("mean").get<double>() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("api: dry run previews without persisting") {
    Fixture f;
    f.setup_demo();
    const auto seq_before = f.tracker->store().last_seq();
    const json obs = {{"student", "ann"}, {"exercise", "neg-1"}, {"outcome", "success"}, {"at", kT0}};
    json dry = obs;
    dry["dry_run"] = true;
    const json preview = body_of(f.post("/observations", dry));
    CHECK(preview.at("dry_run") == true);
    CHECK_FALSE(preview.contains("seq"));
    CHECK(f.tracker->store().last_seq() == seq_before);
    CHECK(body_of(f.get("/students/ann/skills/neg", {{"at", std::to_string(kT0)}})).at("mean").get<double>() == 0.5);

    json real = body_of(f.post("/observations", obs));
    CHECK(real.at("skills") == preview.at("skills"));
    CHECK(f.tracker->store().last_seq() == seq_before + 1);

    dry["dry_run"] = "yes";
    expect_error_shape(f.post("/observations", dry), 422, "invalid_request");
}

TEST_CASE("api: request keys make mutations idempotent") {
    TempDir dir;
    const json obs = {{"student", "ann"}, {"exercise", "add-1"}, {"outcome", "success"}, {"at", kT0}};
    {
        Fixture f(Store::open(dir.path()));
        f.setup_demo();
        const auto first = f.post("/observations", obs, "k1");
        const auto again = f.post("/observations", obs, "k1");
        CHECK(first == again);
        CHECK(f.tracker->record_of("ann").skills.at("add").practice_count == 1);

        json other = obs;
        other["outcome"] = "failure";
        expect_error_shape(f.post("/observations", other, "k1"), 422, "idempotency_key_reuse");

        CHECK(f.post("/students", {{"id", "bob"}}, "s1").status == 201);
        CHECK(f.post("/students", {{"id", "bob"}}, "s1").status == 201);
        expect_error_shape(f.post("/students", {{"id", "bob"}}, "s2"), 409, "student_exists");
    }
    // After a restart the key is known from the log only.
    Fixture f(Store::open(dir.path()));
    const auto dup = f.post("/observations", obs, "k1");
    CHECK(dup.status == 200);
    const json j = body_of(dup);
    CHECK(j.at("duplicate") == true);
    CHECK(j.at("seq") == 2);
    CHECK(f.tracker->record_of("ann").skills.at("add").practice_count == 1);
    CHECK(body_of(f.post("/students", {{"id", "bob"}}, "s1")).at("duplicate") == true);
}

TEST_CASE("api: error statuses and bodies") {
    Fixture f;
    expect_error_shape(f.post("/observations", {{"student", "ann"}, {"exercise", "add-1"}, {"outcome", "success"}}), 404,
                       "unknown_student");
    f.setup_demo();
    const auto obs = [](const char* ex, const char* outcome, Timestamp at) {
        return json{{"student", "ann"}, {"exercise", ex}, {"outcome", outcome}, {"at", at}};
    };
    REQUIRE(f.post("/observations", obs("add-1", "success", kT0 + 100)).status == 200);
    expect_error_shape(f.post("/observations", obs("add-1", "success", kT0)), 409, "timestamp_regression");
    expect_error_shape(f.post("/observations", obs("nope", "success", kT0 + 200)), 404, "unknown_exercise");
    expect_error_shape(f.post("/observations", obs("add-1", "perhaps", kT0 + 200)), 422, "invalid_request");
    expect_error_shape(f.post("/observations", json{{"student", "ann"}}), 422, "invalid_request");
    expect_error_shape(f.api->handle({"POST", "/observations", {}, "{", ""}), 400, "bad_request");
    expect_error_shape(f.get("/students/ann/skills/nope"), 404, "unknown_skill");
    expect_error_shape(f.get("/students/ann/skills/add", {{"at", "soon"}}), 422, "invalid_request");
    expect_error_shape(f.get("/students/ann/skills/add", {{"at", std::to_string(kT0)}}), 409, "timestamp_regression");
    expect_error_shape(f.get("/students/ann/recommendations", {{"lo", "0.9"}, {"hi", "0.1"}}), 422,
                       "invalid_request");
    expect_error_shape(f.post("/students", {{"id", "../x"}}), 422, "invalid_student_id");
    expect_error_shape(f.api->handle({"DELETE", "/students", {}, "", ""}), 405, "method_not_allowed");
    expect_error_shape(f.get("/nope"), 404, "not_found");

    const auto bad = f.api->handle({"POST", "/graph", {}, R"J({"skills":[{"id":"a","setup":"and(a,b)"}]})J", ""});
    expect_error_shape(bad, 422, "invalid_graph");
    const json detail = body_of(bad).at("detail");
    CHECK_FALSE(detail.at("errors").empty());
    for (const auto& e : detail.at("errors"))
        expect_shape(e, {{"code", json::value_t::string}, {"subject", json::value_t::string},
                         {"message", json::value_t::string}});
    // A rejected graph leaves the installed one alone.
    CHECK(f.tracker->graph()->find_skill("eval_expr") != nullptr);
}

TEST_CASE("api: summaries and recommendations") {
    Fixture f;
    f.setup_demo();
    const json all = body_of(f.get("/students/ann/skills"));
    CHECK(all.at("skills").size() == f.tracker->graph()->skills().size());
    for (const auto& s : all.at("skills")) {
        expect_shape(s, {{"skill", json::value_t::string}, {"mean", json::value_t::number_float},
                         {"interval", json::value_t::array}});
        CHECK_FALSE(s.contains("coefficients"));
    }
    const json rec = body_of(f.get("/students/ann/recommendations"));
    expect_shape(rec, {{"exercises", json::value_t::array}, {"lo", json::value_t::number_float},
                       {"hi", json::value_t::number_float}});
    const auto& list = rec.at("exercises");
    CHECK(list.size() == f.tracker->graph()->exercises().size());
    // Flat posteriors: single-skill exercises (0.5) come first, in id order.
    CHECK(list[0].at("exercise") == "add-1");
    CHECK(list[0].at("expected_success").get<double>() == doctest::Approx(0.5));
    CHECK(list[0].at("in_window") == true);
}

TEST_CASE("service never serves a posterior the library would not produce") {
    TempDir dir;
    std::mt19937_64 rng(11);
    {
        Fixture f(Store::open(dir.path()));
        f.setup_demo();
        REQUIRE(f.post("/students", {{"id", "bob"}}).status == 201);
        const auto graph = f.tracker->graph();
        Timestamp t = kT0;
        for (int i = 0; i < 60; ++i) {
            const auto& ex = graph->exercises()[rng() % graph->exercises().size()];
            t += static_cast<Timestamp>(rng() % (20 * kSecondsPerDay));
            REQUIRE(f.post("/observations", {{"student", i % 3 ? "ann" : "bob"},
                                             {"exercise", ex.id},
                                             {"outcome", rng() % 2 ? "success" : "failure"},
                                             {"at", t}})
                        .status == 200);
        }
    }
    Fixture served(Store::open(dir.path()));
    Tracker library(Store::open(dir.path()));
    const auto graph = library.graph();
    const Timestamp now = kT0 + 3 * kSecondsPerYear;
    for (const char* student : {"ann", "bob"}) {
        const auto record = library.record_of(student);
        for (const auto& skill : graph->skills()) {
            const Posterior p = posterior(*graph, record, skill.id, now);
            const json j = body_of(served.get(std::string("/students/") + student + "/skills/" + skill.id,
                                              {{"at", std::to_string(now)}}));
            const auto coeffs = j.at("coefficients").get<std::vector<double>>();
            REQUIRE(coeffs.size() == static_cast<std::size_t>(p.coeffs.size()));
            for (std::size_t i = 0; i < coeffs.size(); ++i) CHECK(coeffs[i] == p.coeffs[static_cast<Eigen::Index>(i)]);
            CHECK(j.at("mean").get<double>() == p.mean);
            CHECK(j.at("interval")[0].get<double>() == p.lower);
            CHECK(j.at("interval")[1].get<double>() == p.upper);
        }
    }
}

TEST_CASE("golden transcript replays byte for byte") {
    const auto script = test_support::load_script(test_support::source_path("tests/data/golden_script.json"));
    const auto golden_path = test_support::source_path("tests/data/golden_transcript.txt");

    Tracker tracker(Store::in_memory());
    Api api(tracker, [] { return test_support::kPinnedNow; });
    const std::string transcript = test_support::run_script(api, script);

    if (std::getenv("PDT_UPDATE_GOLDEN")) {
        std::ofstream(golden_path, std::ios::binary) << transcript;
        MESSAGE("golden transcript rewritten");
    }
    const std::string golden = test_support::read_text(golden_path);
    REQUIRE_FALSE(golden.empty());
    CHECK(transcript == golden);

    // An on-disk store gives the same bytes.
    TempDir dir;
    Tracker disk(Store::open(dir.path()));
    Api disk_api(disk, [] { return test_support::kPinnedNow; });
    CHECK(test_support::run_script(disk_api, script) == golden);
}

TEST_CASE("http transport") {
    Fixture f;
    f.setup_demo();
    HttpServer server(*f.api, 2);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread runner([&] { server.run(); });

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    auto res = client.Get("/healthz");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "application/json");

    const std::string obs =
        json{{"student", "ann"}, {"exercise", "add-1"}, {"outcome", "success"}, {"at", kT0}}.dump();
    httplib::Headers headers = {{"Idempotency-Key", "h1"}};
    auto first = client.Post("/observations", headers, obs, "application/json");
    auto second = client.Post("/observations", headers, obs, "application/json");
    REQUIRE(first);
    REQUIRE(second);
    CHECK(first->status == 200);
    CHECK(first->body == second->body);
    CHECK(f.tracker->record_of("ann").skills.at("add").practice_count == 1);

    res = client.Get("/students/ann/skills/add?at=" + std::to_string(kT0));
    REQUIRE(res);
    CHECK(res->body == f.get("/students/ann/skills/add", {{"at", std::to_string(kT0)}}).body);
    res = client.Get("/students/nobody/skills");
    REQUIRE(res);
    CHECK(res->status == 404);

    server.stop();
    runner.join();
}
