//---------------------------------------------------------------------------//
//! \file maglorentz/experiments.hpp
//! Run a validated configuration and collect its output files.
//---------------------------------------------------------------------------//
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace mlg
{
struct ExperimentOutput
{
    //! (suffix, content) pairs, e.g. ("_sweep.csv", ...)
    std::vector<std::pair<std::string, std::string>> files;
    //! Toolkit version, resolved config and scalar results.
    nlohmann::ordered_json summary;

    //! Writes prefix + suffix for every file and prefix + "_summary.json".
    void write(std::string const& prefix) const;
};

/*!
 * Run one experiment.
 *
 * Nothing is written here, so a failing run leaves no files behind. Output
 * content does not depend on the worker count.
 */
ExperimentOutput run_experiment(ExperimentConfig const& config, unsigned workers = 1);

//! eta from "eta" or from eta_prefactor * eps^(-eta_exponent).
double resolve_eta(ExperimentConfig const& config, double eps);

}  // namespace mlg
