#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "mbp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = mbp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "mbp_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t lines(const std::string& s) {
    std::size_t n = 0;
    for (char ch : s) n += ch == '\n';
    return n;
}

const char* kFrechet = R"(
seed = 5
[process]
offspring = {family = "frechet", c = 1.0, beta = 2.0}
[run]
n_steps = 10
n_paths = 1
)";

} // namespace

TEST_CASE("help lists every subcommand and flag") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    for (const char* s : {"simulate", "classify", "estimate-stationary", "queue-sim", "verify", "--config", "--seed",
                          "--threads", "--out", "--format"}) {
        CAPTURE(s);
        CHECK(r.out.find(s) != std::string::npos);
    }
    CHECK(run({}).code == 2);
    CHECK(run({"simulate", "--format", "xml"}).code == 2);
}

TEST_CASE("simulate writes one row per step") {
    const auto cfg = write_config("frechet.toml", kFrechet);
    const auto r = run({"simulate", "--config", cfg});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("path_id,step,state\n", 0) == 0);
    CHECK(lines(r.out) == 12);
    const auto summary = nlohmann::json::parse(r.err);
    CHECK(summary.at("seed") == 5);
    CHECK(summary.at("absorbed_paths") == 0);
}

TEST_CASE("same config and seed give byte-identical files") {
    const auto cfg = write_config("frechet_many.toml", std::string(kFrechet) + "\n");
    const auto a = (scratch() / "a.csv").string(), b = (scratch() / "b.csv").string(),
               c = (scratch() / "c.csv").string(), d = (scratch() / "d.csv").string();
    CHECK(run({"simulate", "--config", cfg, "--seed", "99", "--out", a}).code == 0);
    CHECK(run({"simulate", "--config", cfg, "--seed", "99", "--out", b}).code == 0);
    CHECK(run({"simulate", "--config", cfg, "--seed", "100", "--out", c}).code == 0);
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file(a) != read_file(c));

    const auto many = write_config("frechet_paths.toml", "[process]\noffspring = {family = \"frechet\", beta = 2.0}\n"
                                                         "[run]\nn_steps = 50\nn_paths = 40\n");
    CHECK(run({"simulate", "--config", many, "--threads", "1", "--out", a}).code == 0);
    CHECK(run({"simulate", "--config", many, "--threads", "4", "--out", d}).code == 0);
    CHECK(read_file(a) == read_file(d));
    CHECK(lines(read_file(d)) == 40 * 51 + 1);
}

TEST_CASE("JSON-lines output") {
    const auto cfg = write_config("frechet_jsonl.toml", kFrechet);
    const auto r = run({"simulate", "--config", cfg, "--format", "jsonl"});
    CHECK(r.code == 0);
    const auto line = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
    CHECK(line.at("states").size() == 11);
    CHECK(line.at("path_id") == 0);
}

TEST_CASE("config errors exit with code 2 and name the key") {
    const auto bad = write_config("bad_beta.toml", "[process]\noffspring = {family = \"frechet\", c = 1.0, beta = -1}\n");
    const auto r = run({"simulate", "--config", bad});
    CHECK(r.code == 2);
    CHECK(r.err.find("beta") != std::string::npos);
    const auto unknown = write_config("unknown.toml", "[run]\nn_stepz = 3\n");
    CHECK(run({"simulate", "--config", unknown}).code == 2);
    CHECK(run({"simulate", "--config", (scratch() / "missing.toml").string()}).code == 2);
    CHECK(run({"simulate"}).code == 2);
    CHECK(run({"queue-sim", "--config", write_config("frechet_noq.toml", kFrechet)}).code == 2);
}

TEST_CASE("classify reports") {
    const auto ergodic = run({"classify", "--config", write_config("c1.toml", kFrechet)});
    CHECK(ergodic.code == 0);
    const auto j = nlohmann::json::parse(ergodic.out);
    CHECK(j.at("verdict") == "Ergodic");
    CHECK(j.at("delta").get<double>() == doctest::Approx(0.577216).epsilon(1e-6));

    const auto transient = nlohmann::json::parse(
        run({"classify", "--config",
             write_config("c2.toml", "[process]\noffspring = {family = \"frechet\", c = 1.0, beta = 1.0}\n"
                                     "environment = {family = \"exponential\", theta = 2.718281828459045}\n")})
            .out);
    CHECK(transient.at("verdict") == "Transient");

    const auto degenerate = nlohmann::json::parse(
        run({"classify", "--config",
             write_config("c3.toml", "[process]\nvariant = \"mbp_continuous\"\n"
                                     "offspring = {family = \"queue_induced\", lambda = 1.0, "
                                     "service = {family = \"exponential\", mean = 1.0}}\n")})
            .out);
    CHECK(degenerate.at("verdict") == "Degenerate");
}

TEST_CASE("estimate-stationary matches the product formula") {
    const auto cfg = write_config("ex4.toml", R"(
seed = 3
[process]
offspring = {family = "frechet", c = 1.0, beta = 2.0}
environment = {family = "stable", alpha = 0.5, c = 1.0}
[run]
burn_in = 200
[stationary]
n_samples = 100000
moment_orders = [0.5]
)");
    const auto r = run({"estimate-stationary", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const auto& ref = j.at("product_formula").at(0);
    CHECK(ref.at("product_formula").get<double>() == doctest::Approx(2.5550113338330673).epsilon(1e-8));
    CHECK(std::abs(ref.at("relative_difference").get<double>()) < 0.02);

    const auto gated = write_config("gated.toml", "[process]\nvariant = \"mbp_continuous\"\n"
                                                  "offspring = {family = \"queue_induced\", lambda = 1.0, "
                                                  "service = {family = \"exponential\", mean = 1.0}}\n");
    CHECK(run({"estimate-stationary", "--config", gated}).code == 2);
}

TEST_CASE("queue-sim with deterministic service") {
    const auto cfg = write_config("q.toml", R"(
seed = 1
[queue]
arrival_rate = 1.0
service = {family = "deterministic", value = 2.5}
n_stages = 1000
)");
    const auto out = (scratch() / "stages.csv").string();
    const auto r = run({"queue-sim", "--config", cfg, "--out", out});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("mean_stage_duration").get<double>() == 2.5);
    CHECK(lines(read_file(out)) == 1001);
}

TEST_CASE("verify passes every exact invariant") {
    const auto r = run({"verify", "--seed", "11"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("all_exact_pass") == true);
    CHECK(j.at("exact_invariants").size() >= 9);
    CHECK(j.at("statistical_gates").size() >= 6);
}
