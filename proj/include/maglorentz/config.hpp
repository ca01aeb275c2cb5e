//---------------------------------------------------------------------------//
//! \file maglorentz/config.hpp
//! Flat key = value experiment configuration.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace mlg
{
inline constexpr char const* toolkit_version = "maglorentz 0.1.0";

enum class ExperimentKind
{
    Msd,
    ScalingStudy,
    GreenKuboMc,
    OperatorSweep,
    KineticRun,
    HilbertStudy,
    CirclingCheck
};

//! Section / subcommand name, e.g. "scaling-study".
char const* to_string(ExperimentKind kind);
std::optional<ExperimentKind> kind_from_string(std::string_view name);

using ConfigValue = std::variant<double, std::int64_t, bool, std::vector<double>>;

/*!
 * Validated configuration with every default filled in.
 *
 * Values are typed by the schema of the kind; accessors throw
 * std::out_of_range for keys that are absent (optional keys left unset).
 */
struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::Msd;
    std::map<std::string, ConfigValue> values;

    bool has(std::string const& key) const { return values.count(key) != 0; }
    double real(std::string const& key) const;
    std::int64_t integer(std::string const& key) const;
    std::uint64_t seed() const;
    bool flag(std::string const& key) const;
    std::vector<double> const& list(std::string const& key) const;

    bool operator==(ExperimentConfig const&) const = default;
};

//! All problems found in a config, reported together.
class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(std::vector<std::string> errors);
    std::vector<std::string> const& errors() const { return errors_; }

  private:
    std::vector<std::string> errors_;
};

/*!
 * Parse and validate.
 *
 * Format: '#' starts a comment; exactly one section header "[kind]"; then
 * "key = value" lines. Lists are comma separated; booleans are true/false.
 * Unknown and duplicate keys are errors.
 */
ExperimentConfig parse_config(std::string_view text);

//! Resolved config in the same text format (parses back to an equal config).
std::string to_text(ExperimentConfig const& config);

nlohmann::ordered_json to_json(ExperimentConfig const& config);
ExperimentConfig config_from_json(nlohmann::ordered_json const& j);

//! Key reference for one kind: "key  type  default-or-required  description".
std::string describe_schema(ExperimentKind kind);

}  // namespace mlg
