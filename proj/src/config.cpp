#include "maglorentz/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

namespace mlg
{
namespace
{
enum class Type
{
    Real,
    Integer,
    Bool,
    List
};

struct KeySpec
{
    char const* name;
    Type type;
    std::optional<ConfigValue> def;  //!< nullopt: required unless optional
    bool optional = false;  //!< may stay unset
    char const* help = "";
};

char const* type_name(Type t)
{
    switch (t)
    {
        case Type::Real: return "a real";
        case Type::Integer: return "an integer";
        case Type::Bool: return "true or false";
        case Type::List: return "a comma-separated list";
    }
    return "?";
}

char const* short_type_name(Type t)
{
    switch (t)
    {
        case Type::Real: return "real";
        case Type::Integer: return "integer";
        case Type::Bool: return "bool";
        case Type::List: return "list";
    }
    return "?";
}

using Schema = std::vector<KeySpec>;

KeySpec real(char const* n, std::optional<double> d, char const* help)
{
    return {n, Type::Real, d ? std::optional<ConfigValue>(*d) : std::nullopt, false, help};
}
KeySpec integer(char const* n, std::optional<std::int64_t> d, char const* help)
{
    return {n, Type::Integer, d ? std::optional<ConfigValue>(*d) : std::nullopt, false, help};
}
KeySpec optional_real(char const* n, char const* help)
{
    return {n, Type::Real, std::nullopt, true, help};
}

void add_eta_keys(Schema& s)
{
    s.push_back(optional_real("eta", "density factor eta (or give eta_exponent)"));
    s.push_back(optional_real("eta_exponent", "eta = eta_prefactor * eps^(-eta_exponent)"));
    s.push_back(optional_real("eta_prefactor", "prefactor of the eta rule (default 1)"));
}

void add_initial_keys(Schema& s)
{
    s.push_back(real("amp_x", 0.5, "f0 = 1 + amp_x cos(2 pi x/L) + amp_y sin(2 pi y/L) + amp_v cos(angle)"));
    s.push_back(real("amp_y", 0.3, "see amp_x"));
    s.push_back(real("amp_v", 0.0, "see amp_x"));
}

Schema const& schema(ExperimentKind kind)
{
    static std::map<ExperimentKind, Schema> const all = [] {
        std::map<ExperimentKind, Schema> m;
        double two_pi = 2 * std::numbers::pi;

        Schema msd{real("eps", {}, "obstacle radius"),
                   real("mu", {}, "intensity parameter, mu_eff = eta mu / eps"),
                   real("B", 0.0, "field strength"),
                   integer("n_replicas", 1000, "independent field/start pairs"),
                   real("t_max", {}, "final time"),
                   integer("n_times", 20, "equispaced sample times in (0, t_max]"),
                   integer("seed", {}, "master seed"),
                   integer("max_events", 5000000, "per-trajectory collision cap")};
        add_eta_keys(msd);
        m[ExperimentKind::Msd] = msd;

        Schema scaling{{"eps_list", Type::List, std::nullopt, false, "obstacle radii"},
                       real("mu", 1.0, "intensity parameter"),
                       real("B", 1.0, "field strength"),
                       real("t", 5.0, "time horizon"),
                       integer("n_replicas", 10000, "replicas per radius"),
                       integer("seed", {}, "master seed"),
                       integer("max_events", 5000000, "per-trajectory collision cap")};
        add_eta_keys(scaling);
        m[ExperimentKind::ScalingStudy] = scaling;

        m[ExperimentKind::GreenKuboMc] = {real("mu", {}, "scattering intensity"),
                                          real("B", {}, "field strength, T = 2 pi / B"),
                                          integer("n_paths", 1000000, "sampled velocity paths"),
                                          real("t_cut", 15.0, "upper limit of the time integral"),
                                          real("dt_quad", 0.01, "trapezoid spacing"),
                                          integer("seed", {}, "master seed")};

        m[ExperimentKind::OperatorSweep] = {real("mu", 1.0, "scattering intensity"),
                                            real("B_min", 0.0, "first field strength"),
                                            real("B_max", 8.1, "last field strength"),
                                            real("B_step", 0.1, "spacing"),
                                            integer("M_modes", 64, "angular modes"),
                                            integer("quadrature_order", 256,
                                                    "Gauss-Legendre order per panel")};

        Schema kinetic{real("mu", {}, "scattering intensity"),
                       real("B", {}, "field strength"),
                       real("eta", {}, "scaling parameter"),
                       integer("N_x", 1, "spatial modes per axis: |xi_i| <= N_x"),
                       integer("N_v", 32, "angle grid points (even, >= 8)"),
                       real("L_box", two_pi, "torus period"),
                       real("t_end", {}, "final macroscopic time"),
                       real("dt", 0.0, "time step (0: stability bound)"),
                       real("output_interval", 0.01, "diagnostics spacing"),
                       {"memory", Type::Bool, ConfigValue(true), false, "include delayed terms"}};
        add_initial_keys(kinetic);
        m[ExperimentKind::KineticRun] = kinetic;

        Schema hilbert{real("mu", 1.0, "scattering intensity"),
                       real("B", 1.0, "field strength"),
                       {"eta_list", Type::List, std::nullopt, false, "increasing eta values"},
                       real("t_probe", 0.5, "comparison time"),
                       integer("N_x", 1, "spatial modes per axis"),
                       integer("N_v", 32, "angle grid points"),
                       real("L_box", two_pi, "torus period"),
                       real("dt_fraction", 1.0, "time step as a fraction of the bound")};
        add_initial_keys(hilbert);
        m[ExperimentKind::HilbertStudy] = hilbert;

        Schema circling{real("eps", {}, "obstacle radius"),
                        real("mu", {}, "intensity parameter"),
                        optional_real("R", "Larmor radius (or give B)"),
                        optional_real("B", "field strength (or give R)"),
                        integer("n_fields", 100000, "independent obstacle fields"),
                        integer("n_paths", 100000, "velocity-process paths"),
                        integer("seed", {}, "master seed")};
        add_eta_keys(circling);
        m[ExperimentKind::CirclingCheck] = circling;
        return m;
    }();
    return all.at(kind);
}

KeySpec const* find_key(Schema const& s, std::string_view name)
{
    for (auto const& k : s)
    {
        if (name == k.name)
        {
            return &k;
        }
    }
    return nullptr;
}

std::string_view trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
    {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(std::string_view s)
{
    s = trim(s);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    {
        return std::nullopt;
    }
    return v;
}

std::optional<std::int64_t> parse_integer(std::string_view s)
{
    s = trim(s);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
    {
        return std::nullopt;
    }
    return v;
}

std::optional<ConfigValue> parse_value(Type t, std::string_view s)
{
    switch (t)
    {
        case Type::Real:
            if (auto v = parse_real(s))
            {
                return ConfigValue(*v);
            }
            return std::nullopt;
        case Type::Integer:
            if (auto v = parse_integer(s))
            {
                return ConfigValue(*v);
            }
            return std::nullopt;
        case Type::Bool:
            if (s == "true")
            {
                return ConfigValue(true);
            }
            if (s == "false")
            {
                return ConfigValue(false);
            }
            return std::nullopt;
        case Type::List: {
            std::vector<double> out;
            while (true)
            {
                auto comma = s.find(',');
                auto v = parse_real(s.substr(0, comma));
                if (!v)
                {
                    return std::nullopt;
                }
                out.push_back(*v);
                if (comma == std::string_view::npos)
                {
                    break;
                }
                s.remove_prefix(comma + 1);
            }
            return ConfigValue(std::move(out));
        }
    }
    return std::nullopt;
}

std::string format_value(ConfigValue const& v)
{
    return std::visit(
        [](auto const& x) -> std::string {
            using X = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<X, double>)
            {
                return fmt::format("{:.17g}", x);
            }
            else if constexpr (std::is_same_v<X, bool>)
            {
                return x ? "true" : "false";
            }
            else if constexpr (std::is_same_v<X, std::int64_t>)
            {
                return fmt::format("{}", x);
            }
            else
            {
                std::string s;
                for (std::size_t i = 0; i < x.size(); ++i)
                {
                    s += fmt::format("{}{:.17g}", i ? ", " : "", x[i]);
                }
                return s;
            }
        },
        v);
}

//---------------------------------------------------------------------------//
// Semantic checks on a config whose keys are all typed and present
void check_semantics(ExperimentConfig const& c, std::vector<std::string>& errors)
{
    auto need = [&](bool ok, std::string msg) {
        if (!ok)
        {
            errors.push_back(std::move(msg));
        }
    };
    auto positive = [&](char const* key) {
        if (c.has(key))
        {
            need(c.real(key) > 0, fmt::format("'{}' must be positive", key));
        }
    };
    auto nonnegative = [&](char const* key) {
        if (c.has(key))
        {
            need(c.real(key) >= 0, fmt::format("'{}' must be nonnegative", key));
        }
    };
    auto at_least = [&](char const* key, std::int64_t lo) {
        if (c.has(key))
        {
            need(c.integer(key) >= lo, fmt::format("'{}' must be >= {}", key, lo));
        }
    };

    for (auto k : {"eps", "t_max", "t", "t_cut", "dt_quad", "t_end", "L_box", "R",
                   "output_interval", "t_probe", "B_step", "eta_prefactor"})
    {
        positive(k);
    }
    for (auto k : {"B", "B_min", "dt", "eta_exponent"})
    {
        nonnegative(k);
    }
    for (auto k : {"n_replicas", "n_times", "n_paths", "n_fields", "max_events", "M_modes"})
    {
        at_least(k, 1);
    }
    at_least("seed", 0);
    at_least("quadrature_order", 32);
    at_least("N_x", 0);
    if (c.has("mu"))
    {
        bool kinetic = c.kind == ExperimentKind::KineticRun;
        need(kinetic ? c.real("mu") >= 0 : c.real("mu") > 0,
             kinetic ? "'mu' must be nonnegative" : "'mu' must be positive");
        if (kinetic && c.real("mu") == 0)
        {
            need(c.real("dt") > 0, "'dt' must be given when mu = 0");
        }
    }
    if (c.has("eta"))
    {
        need(c.real("eta") >= 1, "'eta' must be >= 1");
    }
    if (c.has("N_v"))
    {
        auto n = c.integer("N_v");
        need(n >= 8 && n % 2 == 0, "'N_v' must be even and >= 8");
    }
    if (c.has("dt_fraction"))
    {
        double f = c.real("dt_fraction");
        need(f > 0 && f <= 1, "'dt_fraction' must lie in (0, 1]");
    }
    if (c.has("B_max") && c.has("B_min"))
    {
        need(c.real("B_max") >= c.real("B_min"), "'B_max' must be >= 'B_min'");
    }
    if (c.has("eps_list"))
    {
        auto const& l = c.list("eps_list");
        need(l.size() >= 2, "'eps_list' needs at least two radii");
        need(std::all_of(l.begin(), l.end(), [](double e) { return e > 0; }),
             "'eps_list' entries must be positive");
    }
    if (c.has("eta_list"))
    {
        auto const& l = c.list("eta_list");
        bool inc = std::adjacent_find(l.begin(), l.end(), std::greater_equal<>()) == l.end();
        need(!l.empty() && inc, "'eta_list' must be nonempty and strictly increasing");
        need(std::all_of(l.begin(), l.end(), [](double e) { return e >= 1; }),
             "'eta_list' entries must be >= 1");
    }
    if (c.has("amp_x"))
    {
        double s = std::abs(c.real("amp_x")) + std::abs(c.real("amp_y"))
                   + std::abs(c.real("amp_v"));
        need(s <= 1, "initial datum must be nonnegative: |amp_x| + |amp_y| + |amp_v| <= 1");
    }
}

// Cross-key rules; fills eta_prefactor when the rule is used
void check_alternatives(ExperimentConfig& c, std::vector<std::string>& errors)
{
    auto const& s = schema(c.kind);
    if (find_key(s, "eta_exponent"))
    {
        bool direct = c.has("eta"), rule = c.has("eta_exponent");
        if (direct && rule)
        {
            errors.push_back("conflict: 'eta' given both directly and via 'eta_exponent'");
        }
        else if (!direct && !rule)
        {
            errors.push_back("missing 'eta' (or 'eta_exponent')");
        }
        if (c.has("eta_prefactor") && !rule)
        {
            errors.push_back("'eta_prefactor' requires 'eta_exponent'");
        }
        if (rule && !c.has("eta_prefactor"))
        {
            c.values["eta_prefactor"] = 1.0;
        }
    }
    if (c.kind == ExperimentKind::CirclingCheck)
    {
        if (c.has("R") && c.has("B"))
        {
            errors.push_back("conflict: give 'R' or 'B', not both");
        }
        else if (!c.has("R") && !c.has("B"))
        {
            errors.push_back("missing 'R' (or 'B')");
        }
    }
}
}  // namespace

//---------------------------------------------------------------------------//
char const* to_string(ExperimentKind kind)
{
    switch (kind)
    {
        case ExperimentKind::Msd: return "msd";
        case ExperimentKind::ScalingStudy: return "scaling-study";
        case ExperimentKind::GreenKuboMc: return "green-kubo";
        case ExperimentKind::OperatorSweep: return "operator-sweep";
        case ExperimentKind::KineticRun: return "kinetic";
        case ExperimentKind::HilbertStudy: return "hilbert";
        case ExperimentKind::CirclingCheck: return "circling";
    }
    return "?";
}

std::optional<ExperimentKind> kind_from_string(std::string_view name)
{
    for (auto k : {ExperimentKind::Msd, ExperimentKind::ScalingStudy,
                   ExperimentKind::GreenKuboMc, ExperimentKind::OperatorSweep,
                   ExperimentKind::KineticRun, ExperimentKind::HilbertStudy,
                   ExperimentKind::CirclingCheck})
    {
        if (name == to_string(k))
        {
            return k;
        }
    }
    return std::nullopt;
}

double ExperimentConfig::real(std::string const& key) const
{
    return std::get<double>(values.at(key));
}

std::int64_t ExperimentConfig::integer(std::string const& key) const
{
    return std::get<std::int64_t>(values.at(key));
}

std::uint64_t ExperimentConfig::seed() const
{
    return static_cast<std::uint64_t>(integer("seed"));
}

bool ExperimentConfig::flag(std::string const& key) const
{
    return std::get<bool>(values.at(key));
}

std::vector<double> const& ExperimentConfig::list(std::string const& key) const
{
    return std::get<std::vector<double>>(values.at(key));
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string s = "invalid configuration:";
          for (auto const& e : errors)
          {
              s += "\n  " + e;
          }
          return s;
      }()),
      errors_(std::move(errors))
{
}

ExperimentConfig parse_config(std::string_view text)
{
    std::vector<std::string> errors;
    ExperimentConfig cfg;
    std::optional<ExperimentKind> kind;
    bool bad_section = false;
    std::set<std::string> seen;
    int line_no = 0;

    while (!text.empty())
    {
        ++line_no;
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        line = trim(line.substr(0, line.find('#')));
        if (line.empty())
        {
            continue;
        }
        if (line.front() == '[')
        {
            if (line.back() != ']')
            {
                errors.push_back(fmt::format("line {}: malformed section header", line_no));
                continue;
            }
            auto name = trim(line.substr(1, line.size() - 2));
            if (kind || bad_section)
            {
                errors.push_back(fmt::format("line {}: only one section is allowed", line_no));
                continue;
            }
            kind = kind_from_string(name);
            if (!kind)
            {
                bad_section = true;
                errors.push_back(
                    fmt::format("line {}: unknown experiment kind '{}'", line_no, name));
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
        {
            errors.push_back(fmt::format("line {}: expected 'key = value'", line_no));
            continue;
        }
        std::string key(trim(line.substr(0, eq)));
        auto raw = trim(line.substr(eq + 1));
        if (key.empty() || raw.empty())
        {
            errors.push_back(fmt::format("line {}: expected 'key = value'", line_no));
            continue;
        }
        if (!seen.insert(key).second)
        {
            errors.push_back(fmt::format("line {}: duplicate key '{}'", line_no, key));
            continue;
        }
        if (!kind)
        {
            if (!bad_section)
            {
                errors.push_back(
                    fmt::format("line {}: key '{}' appears before the section header", line_no, key));
            }
            continue;
        }
        auto const* spec = find_key(schema(*kind), key);
        if (!spec)
        {
            errors.push_back(
                fmt::format("line {}: unknown key '{}' for [{}]", line_no, key, to_string(*kind)));
            continue;
        }
        auto v = parse_value(spec->type, raw);
        if (!v)
        {
            errors.push_back(fmt::format("line {}: '{}' expects {} (got '{}')", line_no, key,
                                         type_name(spec->type), raw));
            continue;
        }
        cfg.values[key] = std::move(*v);
    }

    if (!kind)
    {
        if (!bad_section)
        {
            errors.push_back("missing section header naming the experiment kind");
        }
        throw ConfigError(std::move(errors));
    }
    cfg.kind = *kind;
    for (auto const& spec : schema(cfg.kind))
    {
        if (cfg.has(spec.name) || seen.count(spec.name))
        {
            continue;
        }
        if (spec.def)
        {
            cfg.values[spec.name] = *spec.def;
        }
        else if (!spec.optional)
        {
            errors.push_back(fmt::format("missing required key '{}'", spec.name));
        }
    }
    if (errors.empty())
    {
        check_alternatives(cfg, errors);
        check_semantics(cfg, errors);
    }
    if (!errors.empty())
    {
        throw ConfigError(std::move(errors));
    }
    return cfg;
}

std::string to_text(ExperimentConfig const& config)
{
    std::string s = fmt::format("[{}]\n", to_string(config.kind));
    for (auto const& spec : schema(config.kind))
    {
        auto it = config.values.find(spec.name);
        if (it != config.values.end())
        {
            s += fmt::format("{} = {}\n", spec.name, format_value(it->second));
        }
    }
    return s;
}

nlohmann::ordered_json to_json(ExperimentConfig const& config)
{
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (auto const& spec : schema(config.kind))
    {
        auto it = config.values.find(spec.name);
        if (it == config.values.end())
        {
            continue;
        }
        std::visit([&](auto const& x) { values[spec.name] = x; }, it->second);
    }
    return {{"kind", to_string(config.kind)}, {"values", values}};
}

ExperimentConfig config_from_json(nlohmann::ordered_json const& j)
{
    auto kind = kind_from_string(j.at("kind").get<std::string>());
    if (!kind)
    {
        throw ConfigError({"unknown experiment kind in JSON"});
    }
    ExperimentConfig cfg;
    cfg.kind = *kind;
    std::vector<std::string> errors;
    for (auto const& [key, value] : j.at("values").items())
    {
        auto const* spec = find_key(schema(cfg.kind), key);
        if (!spec)
        {
            errors.push_back(fmt::format("unknown key '{}'", key));
            continue;
        }
        switch (spec->type)
        {
            case Type::Real: cfg.values[key] = value.get<double>(); break;
            case Type::Integer: cfg.values[key] = value.get<std::int64_t>(); break;
            case Type::Bool: cfg.values[key] = value.get<bool>(); break;
            case Type::List: cfg.values[key] = value.get<std::vector<double>>(); break;
        }
    }
    if (!errors.empty())
    {
        throw ConfigError(std::move(errors));
    }
    return cfg;
}

std::string describe_schema(ExperimentKind kind)
{
    std::string s = fmt::format("[{}]\n", to_string(kind));
    for (auto const& spec : schema(kind))
    {
        std::string def = spec.def ? format_value(*spec.def)
                                   : (spec.optional ? "optional" : "required");
        s += fmt::format("  {:<16} {:<8} {:<20} {}\n", spec.name, short_type_name(spec.type), def,
                         spec.help);
    }
    return s;
}

}  // namespace mlg
