#include "mbp/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "mbp/error.hpp"

namespace mbp {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
    throw ConfigError(key + ": " + msg);
}

// A TOML table under a dotted key path; records which keys were read so that
// anything left over can be rejected.
class Section {
public:
    Section(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    std::string key(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }

    const toml::node* get(std::string_view k) {
        seen_.insert(std::string(k));
        return t_.get(k);
    }
    bool has(std::string_view k) const { return t_.contains(k); }

    double number(std::string_view k, std::optional<double> dflt = std::nullopt) {
        const toml::node* n = get(k);
        if (!n) {
            if (dflt) return *dflt;
            fail(key(k), "missing required number");
        }
        if (auto v = n->value_exact<double>()) return *v;
        if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
        fail(key(k), "expected a number");
    }

    std::uint64_t count(std::string_view k, std::uint64_t dflt) {
        const toml::node* n = get(k);
        if (!n) return dflt;
        auto v = n->value_exact<std::int64_t>();
        if (!v) fail(key(k), "expected an integer");
        if (*v < 0) fail(key(k), "must be >= 0");
        return static_cast<std::uint64_t>(*v);
    }

    bool boolean(std::string_view k, bool dflt) {
        const toml::node* n = get(k);
        if (!n) return dflt;
        auto v = n->value_exact<bool>();
        if (!v) fail(key(k), "expected true or false");
        return *v;
    }

    std::optional<std::string> string(std::string_view k) {
        const toml::node* n = get(k);
        if (!n) return std::nullopt;
        auto v = n->value_exact<std::string>();
        if (!v) fail(key(k), "expected a string");
        return *v;
    }

    std::vector<double> numbers(std::string_view k, bool required) {
        const toml::node* n = get(k);
        std::vector<double> out;
        if (!n) {
            if (required) fail(key(k), "missing required array");
            return out;
        }
        const toml::array* a = n->as_array();
        if (!a) fail(key(k), "expected an array of numbers");
        for (const auto& e : *a) {
            if (auto v = e.value_exact<double>()) out.push_back(*v);
            else if (auto i = e.value_exact<std::int64_t>()) out.push_back(static_cast<double>(*i));
            else fail(key(k), "expected an array of numbers");
        }
        return out;
    }

    Section table(std::string_view k) {
        const toml::node* n = get(k);
        if (!n || !n->is_table()) fail(key(k), "expected a table");
        return Section(*n->as_table(), key(k));
    }

    void finish() const {
        for (const auto& [k, v] : t_) {
            if (!seen_.count(std::string(k.str()))) fail(key(k.str()), "unknown key");
        }
    }

private:
    const toml::table& t_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string family_of(Section& s) {
    auto f = s.string("family");
    if (!f) fail(s.key("family"), "missing law family");
    return *f;
}

// Builds a law and turns domain violations reported by the factory into
// errors that carry the key path.
template <class Fn>
auto build(const Section& s, Fn&& fn) {
    try {
        return fn();
    } catch (const DomainError& e) {
        fail(s.path(), e.what());
    }
}

ServiceLaw parse_service(Section s) {
    const std::string f = family_of(s);
    ServiceLaw law = ServiceLaw::exponential(1.0);
    if (f == "exponential") {
        const double mean = s.number("mean");
        law = build(s, [&] { return ServiceLaw::exponential(mean); });
    } else if (f == "deterministic") {
        const double value = s.number("value");
        law = build(s, [&] { return ServiceLaw::deterministic(value); });
    } else if (f == "pareto") {
        const double shape = s.number("shape"), scale = s.number("scale", 1.0);
        law = build(s, [&] { return ServiceLaw::pareto(shape, scale); });
    } else if (f == "empirical") {
        auto values = s.numbers("values", true), cdf = s.numbers("cdf", true);
        law = build(s, [&] { return ServiceLaw::empirical(values, cdf); });
    } else {
        fail(s.key("family"), "unknown service family '" + f + "'");
    }
    s.finish();
    return law;
}

OffspringLaw parse_offspring(Section s) {
    const std::string f = family_of(s);
    OffspringLaw law = OffspringLaw::frechet(1.0, 1.0);
    if (f == "frechet") {
        const double c = s.number("c", 1.0), beta = s.number("beta");
        law = build(s, [&] { return OffspringLaw::frechet(c, beta); });
    } else if (f == "unit_frechet") {
        const double beta = s.number("beta");
        law = build(s, [&] { return OffspringLaw::unit_frechet(beta); });
    } else if (f == "gumbel_shifted") {
        const double m = s.number("m");
        law = build(s, [&] { return OffspringLaw::gumbel_shifted(m); });
    } else if (f == "queue_induced") {
        const double lambda = s.number("lambda");
        ServiceLaw service = parse_service(s.table("service"));
        law = build(s, [&] { return OffspringLaw::queue_induced(lambda, service); });
    } else if (f == "integer_tail") {
        const double q = s.number("q");
        auto head = s.numbers("head", false);
        law = build(s, [&] { return OffspringLaw::integer_tail(q, head); });
    } else if (f == "empirical") {
        auto values = s.numbers("values", true), cdf = s.numbers("cdf", true);
        law = build(s, [&] { return OffspringLaw::empirical(values, cdf); });
    } else {
        fail(s.key("family"), "unknown offspring family '" + f + "'");
    }
    s.finish();
    return law;
}

EnvironmentLaw parse_environment(Section s) {
    const std::string f = family_of(s);
    EnvironmentLaw law = EnvironmentLaw::degenerate(1.0);
    if (f == "degenerate") {
        const double a = s.number("a", 1.0);
        law = build(s, [&] { return EnvironmentLaw::degenerate(a); });
    } else if (f == "exponential") {
        const double theta = s.number("theta");
        law = build(s, [&] { return EnvironmentLaw::exponential(theta); });
    } else if (f == "stable") {
        const double alpha = s.number("alpha"), c = s.number("c", 1.0);
        law = build(s, [&] { return EnvironmentLaw::strictly_stable(alpha, c); });
    } else if (f == "heavy_log_tail") {
        law = EnvironmentLaw::heavy_log_tail();
    } else if (f == "empirical") {
        auto values = s.numbers("values", true), probs = s.numbers("probs", true);
        law = build(s, [&] { return EnvironmentLaw::empirical(values, probs); });
    } else {
        fail(s.key("family"), "unknown environment family '" + f + "'");
    }
    s.finish();
    return law;
}

ProcessSpec parse_process(Section s) {
    ProcessSpec p;
    if (auto v = s.string("variant")) {
        try {
            p.variant = parse_variant(*v);
        } catch (const ConfigError& e) {
            fail(s.key("variant"), e.what());
        }
    }
    if (p.variant == Variant::MbpreInteger) {
        const toml::node* n = s.get("offspring_family");
        const toml::array* a = n ? n->as_array() : nullptr;
        if (!a || a->empty()) fail(s.key("offspring_family"), "expected a non-empty array of laws");
        p.offspring_family.clear();
        for (std::size_t i = 0; i < a->size(); ++i) {
            const std::string k = s.key("offspring_family") + "[" + std::to_string(i) + "]";
            const toml::table* t = a->get(i)->as_table();
            if (!t) fail(k, "expected a law table");
            p.offspring_family.push_back(parse_offspring(Section(*t, k)));
        }
        if (s.has("offspring")) fail(s.key("offspring"), "not used by variant mbpre_integer");
    } else {
        if (s.has("offspring_family")) fail(s.key("offspring_family"), "only used by variant mbpre_integer");
        p.offspring = parse_offspring(s.table("offspring"));
    }
    if (s.has("environment")) p.environment = parse_environment(s.table("environment"));
    if (const toml::node* n = s.get("initial")) {
        if (n->is_table()) {
            p.initial = parse_offspring(Section(*n->as_table(), s.key("initial")));
        } else {
            const double z0 = s.number("initial");
            if (!(std::isfinite(z0) && z0 >= 0.0)) fail(s.key("initial"), "must be a finite number >= 0");
            p.initial = z0;
        }
    }
    s.finish();
    try {
        p.validate();
    } catch (const ConfigError& e) {
        fail(s.path(), e.what());
    }
    return p;
}

std::size_t positive_count(Section& s, std::string_view k, std::size_t dflt) {
    const std::uint64_t v = s.count(k, dflt);
    if (v == 0) fail(s.key(k), "must be >= 1");
    return static_cast<std::size_t>(v);
}

} // namespace

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::MbpInteger, Variant::MbpContinuous, Variant::MbpreInteger, Variant::Mbpplre}) {
        if (name == variant_name(v)) return v;
    }
    throw ConfigError("unknown variant '" + std::string(name) +
                      "' (expected mbp_integer, mbp_continuous, mbpre_integer or mbpplre)");
}

OutputFormat parse_output_format(std::string_view name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "jsonl") return OutputFormat::Jsonl;
    throw ConfigError("unknown output format '" + std::string(name) + "' (expected csv or jsonl)");
}

RunConfig parse_config(std::string_view text, std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
           << e.description();
        throw ConfigError(os.str());
    }

    RunConfig c;
    Section top(root, "");
    c.seed = top.count("seed", 0);
    const std::uint64_t threads = top.count("threads", 1);
    if (threads == 0 || threads > 1024) fail("threads", "must lie in [1, 1024]");
    c.threads = static_cast<unsigned>(threads);

    if (top.has("process")) c.process = parse_process(top.table("process"));

    if (top.has("run")) {
        Section s = top.table("run");
        c.run.n_steps = static_cast<std::size_t>(s.count("n_steps", c.run.n_steps));
        c.run.n_paths = positive_count(s, "n_paths", c.run.n_paths);
        c.run.burn_in = static_cast<std::size_t>(s.count("burn_in", c.run.burn_in));
        s.finish();
    }

    if (top.has("output")) {
        Section s = top.table("output");
        if (auto f = s.string("format")) {
            try {
                c.output.format = parse_output_format(*f);
            } catch (const ConfigError& e) {
                fail(s.key("format"), e.what());
            }
        }
        if (auto p = s.string("path")) c.output.path = *p;
        s.finish();
    }

    if (top.has("classify")) {
        Section s = top.table("classify");
        if (auto m = s.string("tail_mode")) {
            if (*m == "analytic") c.tail_mode = TailMode::Analytic;
            else if (*m == "numeric") c.tail_mode = TailMode::NumericGrid;
            else fail(s.key("tail_mode"), "expected analytic or numeric");
        }
        s.finish();
    }

    if (top.has("stationary")) {
        Section s = top.table("stationary");
        c.stationary.n_samples = positive_count(s, "n_samples", c.stationary.n_samples);
        c.stationary.moment_orders = s.numbers("moment_orders", false);
        for (double m : c.stationary.moment_orders) {
            if (!(std::isfinite(m) && m > 0.0)) fail(s.key("moment_orders"), "orders must be > 0");
        }
        c.stationary.override_gate = s.boolean("override_gate", false);
        c.stationary.jackknife_groups = positive_count(s, "jackknife_groups", c.stationary.jackknife_groups);
        if (c.stationary.jackknife_groups < 2) fail(s.key("jackknife_groups"), "must be >= 2");
        c.stationary.ks_alpha = s.number("ks_alpha", c.stationary.ks_alpha);
        if (!(c.stationary.ks_alpha > 0.0 && c.stationary.ks_alpha < 1.0)) fail(s.key("ks_alpha"), "must lie in (0,1)");
        s.finish();
    }

    if (top.has("queue")) {
        Section s = top.table("queue");
        QueueSection q;
        q.config.arrival_rate = s.number("arrival_rate", 1.0);
        if (s.has("service")) q.config.service = parse_service(s.table("service"));
        if (auto m = s.string("mode")) {
            if (*m == "continuous") q.config.mode = QueueMode::ContinuousTime;
            else if (*m == "discrete") q.config.mode = QueueMode::DiscreteTimeUnitArrivals;
            else fail(s.key("mode"), "expected continuous or discrete");
        }
        q.n_stages = positive_count(s, "n_stages", q.n_stages);
        s.finish();
        try {
            q.config.validate();
        } catch (const ConfigError& e) {
            fail("queue", e.what());
        }
        c.queue = std::move(q);
    }

    if (top.has("verify")) {
        Section s = top.table("verify");
        c.verify.coupling_paths = positive_count(s, "coupling_paths", c.verify.coupling_paths);
        c.verify.coupling_steps = positive_count(s, "coupling_steps", c.verify.coupling_steps);
        c.verify.transport_cases = positive_count(s, "transport_cases", c.verify.transport_cases);
        c.verify.statistical_samples = positive_count(s, "statistical_samples", c.verify.statistical_samples);
        s.finish();
    }

    top.finish();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace mbp
