// Command-line front end: serve the HTTP API, validate graph definitions,
// replay logs, run calibration simulations and the oracle suite, and explain
// a stored posterior. Exit codes are listed in kUsageFooter.

#include "pdt/oracle_suite.hpp"
#include "pdt/service.hpp"
#include "pdt/simulator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int {
    kOk = 0,
    kCheckFailed = 1,  // validation errors, oracle failures, replay mismatches
    kUsage = 2,        // bad command line
    kInput = 3,        // unreadable file, bad config, bad graph, unknown student or skill
    kCorrupt = 4,      // store or log failed its integrity checks
    kBind = 5,         // the server could not bind its address
};

const char* kUsageFooter = R"(
Exit codes:
  0  success
  1  check failed (graph has errors, oracle law failed, replay mismatch)
  2  bad command line
  3  input error (unreadable file, bad config, invalid graph, unknown id)
  4  corrupt store or log
  5  cannot bind the server address

Config keys (JSON object) and their environment overrides:
  store_dir PDT_STORE_DIR   fsync PDT_FSYNC   host PDT_HOST   port PDT_PORT
  graph PDT_GRAPH   threads PDT_THREADS   t_half_days PDT_T_HALF_DAYS
  t_e0_days PDT_T_E0_DAYS   n_half PDT_N_HALF   n_s_max PDT_N_S_MAX
  n_i PDT_N_I   n_c_cap PDT_N_C_CAP)";

struct Failure {
    int code;
    std::string message;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kInput, "cannot read " + path.string()};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

pdt::GraphLoad load_graph_file(const fs::path& path, const pdt::GraphParams& defaults = {}) {
    auto loaded = pdt::load_graph(read_text(path), defaults);
    return loaded;
}

void print_issues(const pdt::ValidationReport& report, std::ostream& out) {
    for (const auto& e : report.errors)
        out << "error   " << e.code << (e.subject.empty() ? "" : " [" + e.subject + "]") << ": " << e.message << "\n";
    for (const auto& w : report.warnings)
        out << "warning " << w.code << (w.subject.empty() ? "" : " [" + w.subject + "]") << ": " << w.message
            << "\n";
}

pdt::Graph require_graph(const fs::path& path, const pdt::GraphParams& defaults = {}) {
    auto loaded = load_graph_file(path, defaults);
    if (!loaded.report.ok()) {
        print_issues(loaded.report, std::cerr);
        throw Failure{kInput, "graph " + path.string() + " has errors"};
    }
    return loaded.graph;
}

pdt::ServiceConfig read_config(const std::string& path) {
    try {
        pdt::ServiceConfig config = path.empty() ? pdt::ServiceConfig{} : pdt::load_config(read_text(path));
        return pdt::apply_env(config);
    } catch (const pdt::Error& e) {
        throw Failure{kInput, e.what()};
    }
}

std::unique_ptr<pdt::Tracker> open_tracker(const pdt::ServiceConfig& config) {
    auto store = config.store_dir.empty() ? pdt::Store::in_memory()
                                          : pdt::Store::open(config.store_dir, {.fsync = config.fsync});
    auto tracker = std::make_unique<pdt::Tracker>(std::move(store), config.params);
    if (!config.graph.empty() && !tracker->store().load_graph()) {
        const auto loaded = tracker->set_graph(read_text(config.graph));
        if (!loaded.report.ok()) {
            print_issues(loaded.report, std::cerr);
            throw Failure{kInput, "graph " + config.graph + " has errors"};
        }
    }
    return tracker;
}

pdt::Timestamp now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// ---------------------------------------------------------------- serve

pdt::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const std::string& config_path) {
    const auto config = read_config(config_path);
    auto tracker = open_tracker(config);
    pdt::Api api(*tracker);
    pdt::HttpServer server(api, config.threads);
    const int port = server.bind(config.host, config.port);
    if (port < 0) throw Failure{kBind, "cannot bind " + config.host + ":" + std::to_string(config.port)};
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << config.host << ":" << port << std::endl;
    server.run();
    g_server = nullptr;
    return kOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& path, bool as_json) {
    const auto loaded = load_graph_file(path);
    if (as_json) {
        auto issues = [](const std::vector<pdt::GraphIssue>& list) {
            json out = json::array();
            for (const auto& i : list) out.push_back({{"code", i.code}, {"subject", i.subject}, {"message", i.message}});
            return out;
        };
        std::cout << json{{"ok", loaded.report.ok()},
                          {"errors", issues(loaded.report.errors)},
                          {"warnings", issues(loaded.report.warnings)}}
                         .dump(2)
                  << "\n";
    } else {
        print_issues(loaded.report, std::cout);
        if (loaded.report.ok())
            std::cout << "ok: " << loaded.graph.skills().size() << " skills, " << loaded.graph.exercises().size()
                      << " exercises\n";
    }
    return loaded.report.ok() ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------- replay

int cmd_replay(std::string log_arg, std::string graph_arg, bool check, bool as_json) {
    fs::path log_path = log_arg;
    if (fs::is_directory(log_path)) log_path /= "observations.log";
    const fs::path dir = log_path.parent_path();
    const fs::path graph_path = graph_arg.empty() ? dir / "graph.def" : fs::path(graph_arg);
    const pdt::Graph graph = require_graph(graph_path);

    const auto parsed = pdt::parse_log(read_text(log_path), log_path.string());
    if (parsed.torn_tail)
        std::cerr << "note: ignoring a partial final record after byte " << parsed.valid_bytes << "\n";
    const auto records = pdt::replay_log(graph, parsed.entries);

    json out = json::object();
    for (const auto& [student, record] : records) {
        json skills = json::object();
        for (const auto& [skill, state] : record.skills) {
            json coeffs = json::array();
            for (pdt::BasisCoefficients::Index i = 0; i < state.coeffs.size(); ++i) coeffs.push_back(state.coeffs[i]);
            skills[skill] = {{"practice_count", state.practice_count},
                             {"last_practiced", state.last_practiced},
                             {"mean", pdt::mean(state.coeffs)},
                             {"coefficients", coeffs}};
        }
        out[student] = {{"last_at", record.last_at ? json(*record.last_at) : json(nullptr)}, {"skills", skills}};
    }

    if (as_json) {
        std::cout << pdt::to_wire(out) << "\n";
    } else {
        std::cout << parsed.entries.size() << " entries, " << records.size() << " students\n";
        for (const auto& [student, record] : records)
            for (const auto& [skill, state] : record.skills) {
                char line[160];
                std::snprintf(line, sizeof line, "%-16s %-16s count %4d  order %3ld  mean %.6f\n", student.c_str(),
                              skill.c_str(), state.practice_count, static_cast<long>(state.coeffs.size() - 1),
                              pdt::mean(state.coeffs));
                std::cout << line;
            }
    }

    if (!check) return kOk;
    // Snapshots are folded from the same log, so they must match bit for bit.
    auto store = pdt::Store::open(dir);
    int mismatches = 0;
    for (const auto& [student, record] : records) {
        const auto snap = store->load_states(student);
        if (!snap || !(snap->record == record)) {
            std::cerr << "mismatch: " << student << "\n";
            ++mismatches;
        }
    }
    std::cerr << (mismatches ? "replay differs from snapshots\n" : "replay matches snapshots\n");
    return mismatches ? kCheckFailed : kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    int students = 20;
    std::uint64_t seed = 7;
    int trials = 500;
    double sigma = 0.0;
    double rate = -1.0;
    std::string graph;
    std::vector<std::string> exercises;
    bool as_json = false;
    std::string trace;
    int bins = 10;
    std::size_t min_bin = 500;
};

const char* kSingleSkillGraph = R"({"skills":[{"id":"skill"}],"exercises":[{"id":"exercise","setup":"skill"}]})";

int cmd_simulate(const SimulateArgs& a) {
    pdt::Graph graph;
    if (a.graph.empty()) {
        graph = pdt::load_graph(kSingleSkillGraph).graph;
    } else {
        graph = require_graph(a.graph);
    }
    pdt::sim::CohortConfig cohort;
    cohort.students = a.students;
    cohort.trials = a.trials;
    cohort.seed = a.seed;
    cohort.sigma = a.sigma;
    if (a.rate >= 0.0) cohort.initial_rate = a.rate;
    cohort.exercises = a.exercises;
    for (const auto& e : cohort.exercises)
        if (!graph.find_exercise(e)) throw Failure{kInput, "unknown exercise '" + e + "'"};

    const auto scripts = pdt::sim::gen_cohort(graph, cohort);
    const auto result = pdt::sim::run(graph, scripts);
    const auto report = pdt::sim::calibration_report(result, a.bins, a.min_bin);
    std::cout << (a.as_json ? pdt::sim::format_json(report) : pdt::sim::format_text(report));

    if (!a.trace.empty()) {
        std::ofstream out(a.trace);
        if (!out) throw Failure{kInput, "cannot write " + a.trace};
        out << "student,exercise,predicted,truth,outcome\n";
        char line[256];
        for (const auto& p : result.predictions) {
            std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%d\n", p.student.c_str(), p.exercise.c_str(),
                          p.predicted, p.truth, p.outcome == pdt::Outcome::Success ? 1 : 0);
            out << line;
        }
    }
    return kOk;
}

// ---------------------------------------------------------------- oracle-check

int cmd_oracle_check(const pdt::oracle::SuiteConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const auto checks = pdt::oracle::run_suite(config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool all = true;
    for (const auto& c : checks) {
        char line[200];
        std::snprintf(line, sizeof line, "%-4s %-18s vs %-28s cases %4d  max %.3e  limit %.1e  within %.3f\n",
                      c.passed ? "PASS" : "FAIL", c.law.c_str(), c.oracle.c_str(), c.cases, c.max_deviation,
                      c.threshold, c.within);
        std::cout << line;
        all = all && c.passed;
    }
    std::printf("%s in %.1f s\n", all ? "all laws agree" : "some laws disagree", secs);
    return all ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------- explain

int cmd_explain(const std::string& student, const std::string& skill, const std::string& config_path,
                const std::string& store_dir, std::optional<pdt::Timestamp> at, bool as_json) {
    auto config = read_config(config_path);
    if (!store_dir.empty()) config.store_dir = store_dir;
    if (config.store_dir.empty()) throw Failure{kUsage, "explain needs --store or a config with store_dir"};
    if (!fs::exists(fs::path(config.store_dir) / "observations.log"))
        throw Failure{kInput, "no store at " + config.store_dir};
    auto tracker = open_tracker(config);
    const pdt::Timestamp when = at.value_or(now_seconds());

    if (as_json) {
        pdt::Api api(*tracker, [when] { return when; });
        const auto res = api.handle({"GET", "/students/" + student + "/skills/" + skill, {}, "", ""});
        std::cout << res.body << "\n";
        return res.status == 200 ? kOk : kInput;
    }

    pdt::Posterior p;
    try {
        p = tracker->posterior(student, skill, when);
    } catch (const pdt::UnknownStudent& e) {
        throw Failure{kInput, e.what()};
    } catch (const pdt::UnknownSkill& e) {
        throw Failure{kInput, e.what()};
    }
    std::printf("%s / %s at %lld\n", student.c_str(), skill.c_str(), static_cast<long long>(when));
    for (const auto& e : p.trace) {
        std::string names;
        for (const auto& s : e.skills) names += (names.empty() ? "" : ",") + s;
        std::string extra = e.source == pdt::EvidenceSource::Correlated ? " n_c " + std::to_string(e.n_c) : "";
        std::printf("  %-10s %-32s order %3ld  mean %.6f%s\n", pdt::to_string(e.source).c_str(), names.c_str(),
                    static_cast<long>(e.coeffs.size() - 1), e.mean, extra.c_str());
    }
    std::printf("  posterior  order %ld  mean %.6f  90%% interval [%.6f, %.6f]\n",
                static_cast<long>(p.coeffs.size() - 1), p.mean, p.lower, p.upper);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Performance distribution tracing"};
    app.footer(kUsageFooter);
    app.require_subcommand(1);

    std::string config_path;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

    std::string graph_path;
    bool as_json = false;
    auto* validate = app.add_subcommand("validate", "Check a graph definition");
    validate->add_option("graph", graph_path, "graph definition file")->required();
    validate->add_flag("--json", as_json, "machine-readable report");

    std::string log_path;
    bool check = false;
    auto* replay = app.add_subcommand("replay", "Fold an observation log into states");
    replay->add_option("log", log_path, "observations.log or a store directory")->required();
    replay->add_option("--graph", graph_path, "graph definition (default: graph.def beside the log)");
    replay->add_flag("--check", check, "compare with the snapshots beside the log");
    replay->add_flag("--json", as_json, "print states as JSON");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Calibration run over synthetic students");
    simulate->add_option("--students", sim.students, "number of students")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--trials", sim.trials, "attempts per student")->check(CLI::PositiveNumber);
    simulate->add_option("--sigma", sim.sigma, "logit random-walk step (0 = static rates)")->check(CLI::NonNegativeNumber);
    simulate->add_option("--rate", sim.rate, "fixed starting rate (default: uniform per skill)")
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--graph", sim.graph, "graph definition (default: one skill, one exercise)");
    simulate->add_option("--exercise", sim.exercises, "restrict attempts to these exercises");
    simulate->add_option("--bins", sim.bins, "reliability bins")->check(CLI::PositiveNumber);
    simulate->add_option("--min-bin", sim.min_bin, "smallest bin counted in max_gap");
    simulate->add_option("--trace", sim.trace, "write per-attempt CSV here");
    simulate->add_flag("--json", sim.as_json, "machine-readable report");

    pdt::oracle::SuiteConfig suite;
    auto* oracle_check = app.add_subcommand("oracle-check", "Compare every law against its oracle");
    oracle_check->add_option("--seed", suite.seed, "random seed");
    oracle_check->add_option("--cases", suite.cases, "cases per law")->check(CLI::PositiveNumber);
    oracle_check->add_option("--samples", suite.mc_samples, "Monte-Carlo samples per case");

    std::string student, skill, store_dir;
    std::optional<pdt::Timestamp> at;
    auto* explain = app.add_subcommand("explain", "Print the evidence behind a posterior");
    explain->add_option("student", student)->required();
    explain->add_option("skill", skill)->required();
    explain->add_option("--store", store_dir, "store directory");
    explain->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    explain->add_option("--at", at, "query time in seconds since the epoch (default: now)");
    explain->add_flag("--json", as_json, "print the API payload");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*serve) return cmd_serve(config_path);
        if (*validate) return cmd_validate(graph_path, as_json);
        if (*replay) return cmd_replay(log_path, graph_path, check, as_json);
        if (*simulate) return cmd_simulate(sim);
        if (*oracle_check) return cmd_oracle_check(suite);
        if (*explain) return cmd_explain(student, skill, config_path, store_dir, at, as_json);
    } catch (const Failure& f) {
        std::cerr << "pdt: " << f.message << "\n";
        return f.code;
    } catch (const pdt::CorruptRecord& e) {
        std::cerr << "pdt: " << e.what() << "\n";
        return kCorrupt;
    } catch (const std::exception& e) {
        std::cerr << "pdt: " << e.what() << "\n";
        return kInput;
    }
    return kUsage;
}
