#pragma once

// Run configuration read from a TOML file. Every section and key is checked
// against a fixed schema; laws are written as inline tables such as
// offspring = {family = "frechet", c = 1.0, beta = 2.0}.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mbp/analysis.hpp"
#include "mbp/process.hpp"
#include "mbp/queue.hpp"

namespace mbp {

enum class OutputFormat { Csv, Jsonl };

struct RunSection {
    std::size_t n_steps = 100;
    std::size_t n_paths = 1;
    std::size_t burn_in = 200;
};

struct OutputSection {
    OutputFormat format = OutputFormat::Csv;
    // Empty: standard output.
    std::string path;
};

struct StationarySection {
    std::size_t n_samples = 10000;
    std::vector<double> moment_orders;
    bool override_gate = false;
    std::size_t jackknife_groups = 20;
    double ks_alpha = 0.01;
};

struct QueueSection {
    GatedQueueConfig config;
    std::size_t n_stages = 10000;
};

struct VerifySection {
    std::size_t coupling_paths = 100;
    std::size_t coupling_steps = 1000;
    std::size_t transport_cases = 10000;
    std::size_t statistical_samples = 10000;
};

struct RunConfig {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::optional<ProcessSpec> process;
    RunSection run;
    OutputSection output;
    TailMode tail_mode = TailMode::Analytic;
    StationarySection stationary;
    std::optional<QueueSection> queue;
    VerifySection verify;
};

// Throws ConfigError naming the offending key (syntax errors report line and column).
RunConfig parse_config(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::string& path);

Variant parse_variant(std::string_view name);
OutputFormat parse_output_format(std::string_view name);

} // namespace mbp
