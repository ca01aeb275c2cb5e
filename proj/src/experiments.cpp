#include "maglorentz/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "maglorentz/boltzmann_process.hpp"
#include "maglorentz/kinetic_solver.hpp"
#include "maglorentz/lorentz_sim.hpp"
#include "maglorentz/medium.hpp"
#include "maglorentz/operators.hpp"
#include "maglorentz/rng.hpp"

namespace mlg
{
namespace
{
constexpr double pi = std::numbers::pi;

// One CSV line; doubles at 17 significant digits, bools as 1/0
struct CsvLine
{
    std::string text;

    CsvLine& operator<<(double v)
    {
        return add(fmt::format("{:.17g}", v));
    }
    CsvLine& operator<<(std::uint64_t v) { return add(fmt::format("{}", v)); }
    CsvLine& operator<<(bool v) { return add(v ? "1" : "0"); }
    CsvLine& operator<<(char const* v) { return add(v); }

    CsvLine& add(std::string const& s)
    {
        if (!text.empty())
        {
            text += ',';
        }
        text += s;
        return *this;
    }
};

double larmor_period(double B)
{
    return B > 0 ? 2 * pi / B : std::numeric_limits<double>::infinity();
}

SimulationOptions sim_options(ExperimentConfig const& c)
{
    SimulationOptions o;
    o.max_events = static_cast<std::uint64_t>(c.integer("max_events"));
    return o;
}

KineticField initial_datum(ExperimentConfig const& c)
{
    double ax = c.real("amp_x"), ay = c.real("amp_y"), av = c.real("amp_v");
    double L = c.real("L_box");
    return KineticField::from_function(
        static_cast<int>(c.integer("N_x")), static_cast<int>(c.integer("N_v")), L,
        [=](double x, double y, double a) {
            return 1 + ax * std::cos(2 * pi * x / L) + ay * std::sin(2 * pi * y / L)
                   + av * std::cos(a);
        });
}

nlohmann::ordered_json scaling_json(ScalingParams const& p)
{
    return {{"eps", p.eps},
            {"mu", p.mu},
            {"eta", p.eta},
            {"mu_eff", p.mu_eff},
            {"B", p.B},
            {"R", p.R},
            {"T_larmor", p.T_larmor},
            {"area_fraction", p.area_fraction},
            {"growth_condition", p.growth_condition},
            {"warnings", p.warnings}};
}

void run_msd(ExperimentConfig const& c, unsigned workers, ExperimentOutput& out)
{
    double eps = c.real("eps");
    auto params = scaling_from(eps, c.real("mu"), resolve_eta(c, eps), c.real("B"));
    auto n_times = c.integer("n_times");
    std::vector<double> grid;
    for (std::int64_t i = 1; i <= n_times; ++i)
    {
        grid.push_back(c.real("t_max") * static_cast<double>(i) / static_cast<double>(n_times));
    }
    auto r = msd_estimate(params, static_cast<std::uint64_t>(c.integer("n_replicas")), grid,
                          c.seed(), workers, sim_options(c));

    std::string csv = "t,msd,msd_se,circling_frac\n";
    for (auto const& row : r.rows)
    {
        csv += (CsvLine{} << row.t << row.msd << row.msd_se << row.circling_frac).text + '\n';
    }
    out.files.emplace_back("_msd.csv", std::move(csv));

    auto const& last = r.rows.back();
    out.summary["results"] = {{"scaling", scaling_json(params)},
                              {"n_replicas", r.n_replicas},
                              {"n_aborted", r.n_aborted},
                              {"trapped_daisy_frac", r.trapped_daisy_frac},
                              {"msd_over_4t_final", last.msd / (4 * last.t)},
                              {"msd_over_4t_final_se", last.msd_se / (4 * last.t)}};
}

void run_scaling(ExperimentConfig const& c, unsigned workers, ExperimentOutput& out)
{
    auto study = event_rate_study(
        c.list("eps_list"), [&c](double eps) { return resolve_eta(c, eps); }, c.real("mu"),
        c.real("B"), c.real("t"), static_cast<std::uint64_t>(c.integer("n_replicas")), c.seed(),
        workers, sim_options(c));

    // exponent_fit repeats the fitted recollision exponent on every row
    std::string csv = "eps,eta,p_recoll,p_recoll_se,p_interf,p_interf_se,p_daisy,p_daisy_se,"
                      "p_circ,p_circ_se,exponent_fit,p_circ_closed_form,p_self_recoll,"
                      "n_replicas,n_aborted\n";
    for (auto const& r : study.rows)
    {
        CsvLine line;
        line << r.eps << r.eta << r.p_recoll << r.p_recoll_se << r.p_interf << r.p_interf_se
             << r.p_daisy << r.p_daisy_se << r.p_circ << r.p_circ_se << study.exponent_recoll
             << r.p_circ_closed_form << r.p_self_recoll << r.n_replicas << r.n_aborted;
        csv += line.text + '\n';
    }
    out.files.emplace_back("_scaling.csv", std::move(csv));
    out.summary["results"] = {{"exponent_recoll", study.exponent_recoll},
                              {"exponent_interf", study.exponent_interf},
                              {"exponent_daisy", study.exponent_daisy},
                              {"exponent_circ", study.exponent_circ}};
}

void run_green_kubo(ExperimentConfig const& c, unsigned workers, ExperimentOutput& out)
{
    double mu = c.real("mu"), T = larmor_period(c.real("B"));
    auto gk = green_kubo_mc(mu, T, static_cast<std::uint64_t>(c.integer("n_paths")),
                            c.real("t_cut"), c.real("dt_quad"), c.seed(), workers);
    auto D_op = diffusion_coefficient(build_LG(mu, T, default_modes)).D_B;

    std::string csv = "t,vacf,vacf_se\n";
    for (std::size_t i = 0; i < gk.t.size(); ++i)
    {
        csv += (CsvLine{} << gk.t[i] << gk.vacf[i] << gk.vacf_se[i]).text + '\n';
    }
    out.files.emplace_back("_vacf.csv", std::move(csv));
    out.summary["results"] = {{"T", T},
                              {"D_mc", gk.D},
                              {"D_mc_se", gk.D_se},
                              {"D_operator", D_op},
                              {"z_score", (gk.D - D_op) / gk.D_se},
                              {"D_mc_lab", gk.D_lab},
                              {"D_mc_lab_se", gk.D_lab_se},
                              {"circling_frac", gk.circling_frac},
                              {"circling_se", gk.circling_se}};
}

void run_sweep(ExperimentConfig const& c, ExperimentOutput& out)
{
    double lo = c.real("B_min"), hi = c.real("B_max"), step = c.real("B_step");
    auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> B(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        B[i] = lo + static_cast<double>(i) * step;
    }
    auto rows = operator_sweep(c.real("mu"), B, static_cast<int>(c.integer("M_modes")),
                               static_cast<int>(c.integer("quadrature_order")));

    std::string csv = "B,T,D_direct,D_markovian_term,D_memory_sum,series_converged\n";
    for (auto const& r : rows)
    {
        CsvLine line;
        line << r.B << r.T << r.D_direct << r.D_markovian_term << r.D_memory_sum
             << r.series_converged;
        csv += line.text + '\n';
    }
    out.files.emplace_back("_sweep.csv", std::move(csv));

    auto th = invertibility_threshold();
    out.summary["results"] = {{"beta", th.beta},
                              {"T_star", th.T_star},
                              {"B_star", th.B_star},
                              {"B_stated", th.B_stated},
                              {"B_gap", th.B_gap}};
}

void run_kinetic(ExperimentConfig const& c, ExperimentOutput& out)
{
    KineticParams p;
    p.mu = c.real("mu");
    p.B = c.real("B");
    p.eta = c.real("eta");
    p.memory = c.flag("memory");
    KineticSolveOptions opt;
    opt.dt = c.real("dt");
    opt.output_interval = c.real("output_interval");
    auto run = solve(p, initial_datum(c), c.real("t_end"), opt);

    std::string csv = "t,mass,dist_to_avg,dist_to_heat\n";
    for (auto const& r : run.rows)
    {
        csv += (CsvLine{} << r.t << r.mass << r.dist_to_avg << r.dist_to_heat).text + '\n';
    }
    out.files.emplace_back("_diagnostics.csv", std::move(csv));
    double t_end = run.rows.back().t;
    out.summary["results"] = {
        {"T_delay", p.T_delay()},
        {"dt", run.dt},
        {"D11", run.D_heat},
        {"mass_drift_per_time", std::abs(run.rows.back().mass - run.rows.front().mass) / t_end},
        {"max_reality_defect", run.max_reality_defect}};
}

void run_hilbert(ExperimentConfig const& c, unsigned workers, ExperimentOutput& out)
{
    KineticParams base;
    base.mu = c.real("mu");
    base.B = c.real("B");
    auto rows = hilbert_residual_study(c.list("eta_list"), base, initial_datum(c),
                                       c.real("t_probe"), c.real("dt_fraction"), workers);

    std::string csv = "eta,dist_heat,dist_hilbert1\n";
    for (auto const& r : rows)
    {
        csv += (CsvLine{} << r.eta << r.dist_heat << r.dist_hilbert1).text + '\n';
    }
    out.files.emplace_back("_hilbert.csv", std::move(csv));

    bool decreasing = true, corrector_helps = true;
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        decreasing = decreasing && (i == 0 || rows[i].dist_heat < rows[i - 1].dist_heat);
        corrector_helps = corrector_helps && rows[i].dist_hilbert1 < rows[i].dist_heat;
    }
    auto D = diffusion_coefficient(build_LG(base.mu, base.T_delay(), default_modes));
    out.summary["results"] = {{"D_B", D.D_B},
                              {"D11", D.D11},
                              {"dist_heat_decreasing", decreasing},
                              {"corrector_reduces_distance", corrector_helps}};
}

void run_circling(ExperimentConfig const& c, unsigned workers, ExperimentOutput& out)
{
    double eps = c.real("eps"), mu = c.real("mu");
    double B = c.has("B") ? c.real("B") : 1 / c.real("R");
    if (!(B > 0))
    {
        throw std::invalid_argument("circling check needs a nonzero field");
    }
    auto params = scaling_from(eps, mu, resolve_eta(c, eps), B);
    auto annulus = empty_annulus_probability_mc(
        params, {0, 0}, static_cast<std::uint64_t>(c.integer("n_fields")),
        derive_key({c.seed(), 1}), workers);
    double T = larmor_period(B);
    auto n_paths = static_cast<std::uint64_t>(c.integer("n_paths"));
    auto process = circling_fraction_mc(mu, T, n_paths, derive_key({c.seed(), 2}), workers);
    double process_exact = std::exp(-2 * mu * T);

    // Standard errors under the closed form, so an empty count is still testable
    auto null_se = [](double p, std::uint64_t n) {
        return std::sqrt(p * (1 - p) / static_cast<double>(n));
    };
    double annulus_null = null_se(annulus.closed_form, annulus.n_samples);
    double process_null = null_se(process_exact, n_paths);

    std::string csv = "source,estimate,std_error,closed_form,null_std_error,n\n";
    csv += (CsvLine{} << "annulus" << annulus.estimate << annulus.std_error
                      << annulus.closed_form << annulus_null << annulus.n_samples)
               .text
           + '\n';
    csv += (CsvLine{} << "process" << process.fraction << process.std_error << process_exact
                      << process_null << n_paths)
               .text
           + '\n';
    out.files.emplace_back("_circling.csv", std::move(csv));
    out.summary["results"] = {
        {"scaling", scaling_json(params)},
        {"annulus_z", (annulus.estimate - annulus.closed_form) / annulus_null},
        {"process_z", (process.fraction - process_exact) / process_null}};
}
}  // namespace

double resolve_eta(ExperimentConfig const& config, double eps)
{
    if (config.has("eta"))
    {
        return config.real("eta");
    }
    return config.real("eta_prefactor") * std::pow(eps, -config.real("eta_exponent"));
}

ExperimentOutput run_experiment(ExperimentConfig const& config, unsigned workers)
{
    ExperimentOutput out;
    out.summary["version"] = toolkit_version;
    out.summary["config"] = to_json(config);
    switch (config.kind)
    {
        case ExperimentKind::Msd: run_msd(config, workers, out); break;
        case ExperimentKind::ScalingStudy: run_scaling(config, workers, out); break;
        case ExperimentKind::GreenKuboMc: run_green_kubo(config, workers, out); break;
        case ExperimentKind::OperatorSweep: run_sweep(config, out); break;
        case ExperimentKind::KineticRun: run_kinetic(config, out); break;
        case ExperimentKind::HilbertStudy: run_hilbert(config, workers, out); break;
        case ExperimentKind::CirclingCheck: run_circling(config, workers, out); break;
    }
    return out;
}

void ExperimentOutput::write(std::string const& prefix) const
{
    auto put = [](std::string const& path, std::string const& content) {
        std::ofstream f(path, std::ios::binary);
        f << content;
        if (!f)
        {
            throw std::runtime_error("cannot write " + path);
        }
    };
    for (auto const& [suffix, content] : files)
    {
        put(prefix + suffix, content);
    }
    put(prefix + "_summary.json", summary.dump(2) + '\n');
}

}  // namespace mlg
