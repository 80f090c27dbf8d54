#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbp/analysis.hpp"
#include "mbp/config.hpp"
#include "mbp/couplings.hpp"
#include "mbp/error.hpp"
#include "mbp/kernels.hpp"
#include "mbp/process.hpp"
#include "mbp/queue.hpp"
#include "mbp/report.hpp"
#include "mbp/rng.hpp"

namespace mbp::cli {

namespace {

using nlohmann::json;

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

RunConfig resolve(const GlobalFlags& g, bool need_config) {
    RunConfig c;
    if (!g.config.empty()) c = load_config(g.config);
    else if (need_config) throw ConfigError("--config: a config file is required for this command");
    if (g.seed) c.seed = *g.seed;
    if (g.threads) {
        if (*g.threads == 0) throw ConfigError("--threads: must be >= 1");
        c.threads = *g.threads;
    }
    if (g.out) c.output.path = *g.out;
    if (g.format) c.output.format = parse_output_format(*g.format);
    return c;
}

const ProcessSpec& require_process(const RunConfig& c) {
    if (!c.process) throw ConfigError("process: section is required for this command");
    return *c.process;
}

// Bulk records go to the output file when one is set, else to `out`; the run
// summary then goes to `out`, or to `err` when `out` already carries the records.
class Sinks {
public:
    Sinks(const std::string& path, std::ostream& out, std::ostream& err) : out_(out), err_(err) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw ConfigError("output.path: cannot open '" + path + "' for writing");
        }
    }
    std::ostream& records() { return file_.is_open() ? static_cast<std::ostream&>(file_) : out_; }
    std::ostream& summary() { return file_.is_open() ? out_ : err_; }

private:
    std::ofstream file_;
    std::ostream& out_;
    std::ostream& err_;
};

void print(std::ostream& os, const json& j) { os << j.dump(2) << "\n"; }

json optional_index(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

// ---- simulate -------------------------------------------------------------------

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const ProcessSpec& spec = require_process(c);
    const auto paths = simulate_batch(spec, c.run.n_steps, c.run.n_paths, c.seed, c.threads);
    Sinks sinks(c.output.path, out, err);
    std::ostream& rec = sinks.records();
    if (c.output.format == OutputFormat::Csv) {
        rec << "path_id,step,state\n";
        for (std::size_t p = 0; p < paths.size(); ++p) {
            const auto& s = paths[p].states;
            for (std::size_t n = 0; n < s.size(); ++n) rec << p << ',' << n << ',' << format_number(s[n]) << '\n';
        }
    } else {
        for (std::size_t p = 0; p < paths.size(); ++p) {
            json states = json::array();
            for (double v : paths[p].states) states.push_back(json_number(v));
            const json line = {{"path_id", p}, {"seed", paths[p].seed},
                               {"absorbed_at", optional_index(paths[p].absorbed_at)}, {"states", states}};
            rec << line.dump() << '\n';
        }
    }
    rec.flush();

    std::size_t absorbed = 0, numeric = 0;
    double absorb_sum = 0.0;
    std::vector<double> finals;
    for (const auto& t : paths) {
        if (t.absorbed_at) {
            ++absorbed;
            absorb_sum += static_cast<double>(*t.absorbed_at);
        }
        if (t.numeric_absorption) ++numeric;
        finals.push_back(t.states.back());
    }
    std::sort(finals.begin(), finals.end());
    const double n = static_cast<double>(paths.size());
    print(sinks.summary(),
          {{"command", "simulate"},
           {"seed", c.seed},
           {"variant", variant_name(spec.variant)},
           {"n_paths", paths.size()},
           {"n_steps", c.run.n_steps},
           {"absorbed_paths", absorbed},
           {"absorbed_fraction", json_number(static_cast<double>(absorbed) / n)},
           {"mean_absorption_step", absorbed ? json_number(absorb_sum / static_cast<double>(absorbed)) : json(nullptr)},
           {"numeric_absorptions", numeric},
           {"final_state_median", json_number(finals[finals.size() / 2])}});
    return kExitOk;
}

// ---- classify -------------------------------------------------------------------

int cmd_classify(const RunConfig& c, std::ostream& out) {
    json j = to_json(classify(require_process(c), c.tail_mode));
    j["command"] = "classify";
    print(out, j);
    return kExitOk;
}

// ---- estimate-stationary ------------------------------------------------------------

// Closed-form moments exist for F(x) = exp(-x^{-β}) with φ(u) = exp(-u^α).
std::optional<std::pair<double, double>> product_formula_params(const ProcessSpec& spec) {
    if (spec.variant != Variant::Mbpplre) return std::nullopt;
    double beta = 0.0;
    if (const auto* f = std::get_if<offspring::Frechet>(&spec.offspring.family())) {
        if (f->c != 1.0) return std::nullopt;
        beta = f->beta;
    } else if (const auto* u = std::get_if<offspring::UnitFrechet>(&spec.offspring.family())) {
        beta = u->beta;
    } else {
        return std::nullopt;
    }
    const auto* s = std::get_if<environment::StrictlyStable>(&spec.environment.family());
    if (!s || s->c != 1.0 || !(beta > 1.0)) return std::nullopt;
    return std::make_pair(s->alpha, beta);
}

int cmd_estimate_stationary(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const ProcessSpec& spec = require_process(c);
    StationaryOptions o;
    o.burn_in = c.run.burn_in;
    o.n_samples = c.stationary.n_samples;
    o.seed = c.seed;
    o.threads = c.threads;
    o.moment_orders = c.stationary.moment_orders;
    o.override_gate = c.stationary.override_gate;
    o.jackknife_groups = c.stationary.jackknife_groups;
    o.ks_alpha = c.stationary.ks_alpha;
    const auto e = estimate_stationary(spec, o);

    json j = to_json(e);
    j["command"] = "estimate-stationary";
    j["seed"] = c.seed;
    if (const auto p = product_formula_params(spec)) {
        json refs = json::array();
        for (const auto& m : e.moments) {
            if (!(m.s < p->first * p->second)) continue;
            const auto r = stationary_moment_frechet_stable(p->first, p->second, m.s);
            refs.push_back({{"s", json_number(m.s)},
                            {"product_formula", json_number(r.value)},
                            {"relative_difference", json_number(m.value / r.value - 1.0)}});
        }
        j["product_formula"] = refs;
    }
    if (e.stabilization_warning) err << "warning: even/odd half samples disagree; burn-in may be too short\n";

    if (!c.output.path.empty()) {
        Sinks sinks(c.output.path, out, err);
        std::ostream& rec = sinks.records();
        if (c.output.format == OutputFormat::Csv) rec << "rank,state\n";
        for (std::size_t i = 0; i < e.sorted_samples.size(); ++i) {
            if (c.output.format == OutputFormat::Csv) rec << i << ',' << format_number(e.sorted_samples[i]) << '\n';
            else rec << json{{"rank", i}, {"state", json_number(e.sorted_samples[i])}}.dump() << '\n';
        }
    }
    print(out, j);
    return kExitOk;
}

// ---- queue-sim --------------------------------------------------------------------

int cmd_queue_sim(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (!c.queue) throw ConfigError("queue: section is required for this command");
    const auto stages = simulate_gated_queue(c.queue->config, c.queue->n_stages, c.seed);
    Sinks sinks(c.output.path, out, err);
    std::ostream& rec = sinks.records();
    if (c.output.format == OutputFormat::Csv) {
        write_stage_csv(rec, stages);
    } else {
        for (const auto& s : stages) {
            rec << json{{"stage_index", s.stage_index},
                        {"gate_open_time", json_number(s.gate_open_time)},
                        {"batch_size", s.batch_size},
                        {"stage_duration", json_number(s.stage_duration)},
                        {"idle_wait", json_number(s.idle_wait)}}
                       .dump()
                << '\n';
        }
    }
    rec.flush();
    json j = to_json(summarize_queue(c.queue->config, stages));
    j["command"] = "queue-sim";
    j["seed"] = c.seed;
    j["mode"] = queue_mode_name(c.queue->config.mode);
    print(sinks.summary(), j);
    return kExitOk;
}

// ---- verify -----------------------------------------------------------------------

struct Check {
    std::string name;
    bool exact = true;
    bool pass = false;
    json detail = json::object();
};

ProcessSpec frechet_spec(double c, double beta, EnvironmentLaw env = EnvironmentLaw::degenerate(1.0)) {
    ProcessSpec s;
    s.variant = Variant::Mbpplre;
    s.offspring = OffspringLaw::frechet(c, beta);
    s.environment = std::move(env);
    return s;
}

GatedQueueConfig reference_queue() {
    GatedQueueConfig q;
    q.arrival_rate = 1.0;
    q.service = ServiceLaw::exponential(1.0);
    return q;
}

Check monotone_check(const std::string& name, const ProcessSpec& spec, double lo, double hi,
                     const VerifySection& v, std::uint64_t seed) {
    Check c{name};
    std::size_t steps = 0;
    for (std::size_t p = 0; p < v.coupling_paths; ++p) {
        steps += coupled_monotone_paths(spec, lo, hi, v.coupling_steps, derive_seed(seed, p)).steps_compared;
    }
    c.pass = true;
    c.detail = {{"steps_compared", steps}, {"violations", 0}};
    return c;
}

Check parameter_check(const std::string& name, const ProcessSpec& lo, const ProcessSpec& hi,
                      const VerifySection& v, std::uint64_t seed) {
    Check c{name};
    std::size_t steps = 0;
    for (std::size_t p = 0; p < v.coupling_paths; ++p) {
        steps += coupled_parameter_paths(lo, hi, v.coupling_steps, derive_seed(seed, p)).steps_compared;
    }
    c.pass = true;
    c.detail = {{"steps_compared", steps}, {"violations", 0}};
    return c;
}

Check variant_equivalence(std::size_t n, std::uint64_t seed) {
    Check c{"degenerate_environment_matches_plain_mbp"};
    const auto law = OffspringLaw::frechet(1.0, 2.0);
    const auto env = EnvironmentLaw::degenerate(1.0);
    RngStream rng(seed);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 10.0 * rng.uniform(), u = rng.uniform();
        const double a = step_mbpplre(z, u, law, env), b = step_mbp_continuous(z, u, law);
        worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
    }
    c.pass = worst <= 1e-12;
    c.detail = {{"cases", n}, {"max_relative_diff", json_number(worst)}, {"tolerance", 1e-12}};
    return c;
}

Check transport_check(const VerifySection& v, std::uint64_t seed) {
    Check c{"scaling_transport"};
    const auto spec = frechet_spec(1.5, 2.0, EnvironmentLaw::strictly_stable(0.5, 1.0));
    double worst = 0.0;
    for (double lambda : {0.5, 2.0, 10.0}) {
        worst = std::max(worst, scaling_transport(spec, lambda, v.transport_cases, seed).max_relative_diff);
    }
    c.pass = worst <= 1e-9;
    c.detail = {{"cases_per_lambda", v.transport_cases}, {"max_relative_diff", json_number(worst)},
                {"tolerance", 1e-9}};
    return c;
}

Check absorption_check(const VerifySection& v, std::uint64_t seed) {
    Check c{"absorbing_zero"};
    ProcessSpec s;
    s.variant = Variant::MbpContinuous;
    s.offspring = induced_offspring_law(1.0, ServiceLaw::exponential(1.0));
    const auto paths = simulate_batch(s, v.coupling_steps, v.coupling_paths, seed);
    std::size_t absorbed = 0;
    c.pass = true;
    for (const auto& t : paths) {
        const auto first = std::find(t.states.begin(), t.states.end(), 0.0);
        if (first == t.states.end()) continue;
        ++absorbed;
        const auto at = static_cast<std::size_t>(first - t.states.begin());
        if (!t.absorbed_at || *t.absorbed_at != at) c.pass = false;
        if (!std::all_of(first, t.states.end(), [](double z) { return z == 0.0; })) c.pass = false;
    }
    c.detail = {{"paths", paths.size()}, {"absorbed_paths", absorbed}};
    return c;
}

Check simd_check(std::uint64_t seed) {
    Check c{"simd_kernels_match_scalar"};
    RngStream rng(seed);
    std::vector<double> a(1023), b(1023), noise(1023);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
        noise[i] = rng.normal();
    }
    bool ok = kernels::count_greater(a, b) == kernels::scalar::count_greater(a, b) &&
              kernels::count_less_equal(a, 0.1) == kernels::scalar::count_less_equal(a, 0.1);
    const auto s1 = kernels::sum_and_squares(a), s2 = kernels::scalar::sum_and_squares(a);
    ok = ok && std::abs(s1.sum - s2.sum) <= 1e-12 * (1.0 + std::abs(s2.sum)) &&
         std::abs(s1.sum_sq - s2.sum_sq) <= 1e-12 * s2.sum_sq;
    auto x1 = a, x2 = a;
    kernels::affine_noise(x1, 0.5, 0.3, noise);
    kernels::scalar::affine_noise(x2, 0.5, 0.3, noise);
    for (std::size_t i = 0; i < x1.size(); ++i) ok = ok && std::abs(x1[i] - x2[i]) <= 1e-12 * (1.0 + std::abs(x2[i]));
    c.pass = ok;
    c.detail = {{"active_isa", kernels::isa_name(kernels::active_isa())}};
    return c;
}

Check queue_identity_check(std::size_t n, std::uint64_t seed) {
    Check c{"queue_stage_matches_mbp_kernel"};
    const auto q = reference_queue();
    const auto law = induced_offspring_law(q.arrival_rate, q.service);
    RngStream rng(seed);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 5.0 * rng.uniform(), u = rng.uniform();
        if (queue_step_from_uniform(q, x, u) != step_mbp_continuous(x, u, law)) ++mismatches;
    }
    c.pass = mismatches == 0;
    c.detail = {{"cases", n}, {"mismatches", mismatches}};
    return c;
}

std::vector<Check> statistical_checks(const VerifySection& v, std::uint64_t seed, unsigned threads) {
    std::vector<Check> out;
    const std::size_t n = v.statistical_samples;
    {
        Check c{"initial_state_forgotten", false};
        auto lo = frechet_spec(1.0, 2.0), hi = lo;
        lo.initial = 0.01;
        hi.initial = 100.0;
        const auto ks = ks_two_sample(stationary_samples(lo, 200, n, derive_seed(seed, 1), threads),
                                      stationary_samples(hi, 200, n, derive_seed(seed, 2), threads));
        const double crit = ks_critical_value(0.01, n, n);
        c.pass = ks.statistic < crit;
        c.detail = {{"ks", to_json(ks)}, {"critical_value", json_number(crit)}};
        out.push_back(std::move(c));
    }
    {
        Check c{"association", false};
        const auto r = association_test(frechet_spec(1.0, 2.0), {2, 7}, n, derive_seed(seed, 3));
        c.pass = r.all_pass;
        c.detail = to_json(r);
        out.push_back(std::move(c));
    }
    {
        Check c{"queue_one_step_kernel", false};
        const auto r = queue_kernel_check(reference_queue(), {0.25, 0.5, 1.0, 2.0, 4.0},
                                          {0.1, 0.5, 1.0, 2.0, 4.0}, n, derive_seed(seed, 4));
        c.pass = r.all_pass;
        c.detail = to_json(r);
        out.push_back(std::move(c));
    }
    {
        Check c{"poisson_batches", false};
        const auto r = poisson_batch_check(reference_queue(), 1.0, n, derive_seed(seed, 5));
        c.pass = r.pass;
        c.detail = {{"mean", json_number(r.mean)}, {"variance_over_mean", json_number(r.ratio)},
                    {"std_error", json_number(r.ratio_std_error)}};
        out.push_back(std::move(c));
    }
    {
        Check c{"queue_matches_induced_mbp", false};
        const auto r = queue_vs_mbp_equivalence(reference_queue(), n, derive_seed(seed, 6), derive_seed(seed, 7));
        c.pass = r.pass;
        c.detail = to_json(r);
        out.push_back(std::move(c));
    }
    {
        Check c{"queue_induced_degeneracy", false};
        ProcessSpec s;
        s.variant = Variant::MbpContinuous;
        s.offspring = induced_offspring_law(1.0, ServiceLaw::exponential(1.0));
        const auto r = degeneracy_experiment(s, 1000, std::max<std::size_t>(n / 10, 100), derive_seed(seed, 8),
                                             threads, {10, 100, 1000});
        c.pass = r.nondecreasing && r.absorbed_fraction.back() >= 0.99;
        c.detail = to_json(r);
        out.push_back(std::move(c));
    }
    return out;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const VerifySection& v = cfg.verify;
    const std::uint64_t seed = cfg.seed;
    std::vector<std::pair<std::string, std::function<Check()>>> exact = {
        {"monotone_initial_coupling",
         [&] { return monotone_check("monotone_initial_coupling", frechet_spec(1.0, 2.0), 0.01, 100.0, v, derive_seed(seed, 10)); }},
        {"monotone_coupling_stable_environment",
         [&] {
             return monotone_check("monotone_coupling_stable_environment",
                                   frechet_spec(1.0, 2.0, EnvironmentLaw::strictly_stable(0.5, 1.0)), 0.5, 2.0, v,
                                   derive_seed(seed, 11));
         }},
        {"offspring_parameter_coupling",
         [&] { return parameter_check("offspring_parameter_coupling", frechet_spec(1.0, 2.0), frechet_spec(2.0, 2.0), v, derive_seed(seed, 12)); }},
        {"environment_parameter_coupling",
         [&] {
             return parameter_check("environment_parameter_coupling", frechet_spec(1.0, 2.0),
                                    frechet_spec(1.0, 2.0, EnvironmentLaw::degenerate(2.0)), v, derive_seed(seed, 13));
         }},
        {"degenerate_environment_matches_plain_mbp", [&] { return variant_equivalence(v.transport_cases, derive_seed(seed, 14)); }},
        {"scaling_transport", [&] { return transport_check(v, derive_seed(seed, 15)); }},
        {"absorbing_zero", [&] { return absorption_check(v, derive_seed(seed, 16)); }},
        {"simd_kernels_match_scalar", [&] { return simd_check(derive_seed(seed, 17)); }},
        {"queue_stage_matches_mbp_kernel", [&] { return queue_identity_check(v.transport_cases, derive_seed(seed, 18)); }},
    };
    if (cfg.process && cfg.process->single_uniform() && std::holds_alternative<double>(cfg.process->initial)) {
        const ProcessSpec spec = *cfg.process;
        exact.emplace_back("config_monotone_coupling", [&v, spec, seed] {
            const double z0 = std::get<double>(spec.initial);
            return monotone_check("config_monotone_coupling", spec, 0.5 * z0, 2.0 * z0 + 1.0, v, derive_seed(seed, 19));
        });
    }

    std::vector<Check> checks;
    for (auto& [name, fn] : exact) {
        try {
            checks.push_back(fn());
        } catch (const InvariantError& e) {
            checks.push_back({name, true, false, {{"error", e.what()}}});
        }
    }
    for (auto& c : statistical_checks(v, derive_seed(seed, 20), cfg.threads)) checks.push_back(std::move(c));

    bool exact_ok = true, stat_ok = true;
    json exact_json = json::array(), stat_json = json::array();
    for (const auto& c : checks) {
        json j = {{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}};
        if (c.exact) {
            exact_ok = exact_ok && c.pass;
            exact_json.push_back(std::move(j));
        } else {
            stat_ok = stat_ok && c.pass;
            if (!c.pass) err << "warning: statistical gate " << c.name << " did not pass\n";
            stat_json.push_back(std::move(j));
        }
    }
    print(out, {{"command", "verify"},
                {"seed", seed},
                {"exact_invariants", exact_json},
                {"statistical_gates", stat_json},
                {"all_exact_pass", exact_ok},
                {"all_statistical_pass", stat_ok}});
    return exact_ok ? kExitOk : kExitInvariant;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Maximal branching processes: simulation, classification, stationary laws and gated queues", "mbp"};
    app.require_subcommand(1, 1);
    GlobalFlags g;
    app.add_option("--config", g.config, "TOML run configuration")->type_name("PATH");
    app.add_option("--seed", g.seed, "Top-level seed; overrides the config")->type_name("U64");
    app.add_option("--threads", g.threads, "Worker threads; results do not depend on it")->type_name("N");
    app.add_option("--out", g.out, "Output file for trajectories, stages or samples")->type_name("PATH");
    app.add_option("--format", g.format, "Record format")->check(CLI::IsMember({"csv", "jsonl"}));

    auto* simulate = app.add_subcommand("simulate", "Simulate trajectories of the configured process");
    auto* classify_cmd = app.add_subcommand("classify", "Classify the configured process (JSON report)");
    auto* stationary = app.add_subcommand("estimate-stationary", "Monte Carlo estimate of the stationary law");
    auto* queue = app.add_subcommand("queue-sim", "Simulate the gated infinite-server queue");
    auto* verify = app.add_subcommand("verify", "Run the exact invariants and statistical gates");
    for (auto* s : {simulate, classify_cmd, stationary, queue, verify}) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run 'mbp --help' for usage\n";
        return kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(resolve(g, true), out, err);
        if (classify_cmd->parsed()) return cmd_classify(resolve(g, true), out);
        if (stationary->parsed()) return cmd_estimate_stationary(resolve(g, true), out, err);
        if (queue->parsed()) return cmd_queue_sim(resolve(g, true), out, err);
        return cmd_verify(resolve(g, false), out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PreconditionError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numeric error";
        if (e.step() >= 0) err << " at step " << e.step();
        err << ": " << e.what() << "\n";
        return kExitNumeric;
    } catch (const InvariantError& e) {
        err << "invariant violated: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

} // namespace mbp::cli
