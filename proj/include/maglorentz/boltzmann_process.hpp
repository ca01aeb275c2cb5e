//---------------------------------------------------------------------------//
//! \file maglorentz/boltzmann_process.hpp
//! Velocity process of the generalized Boltzmann equation and its
//! Green-Kubo estimate.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <vector>

namespace mlg
{
//---------------------------------------------------------------------------//
enum class JumpKind
{
    Scatter,
    Replay
};

struct GBJump
{
    double time = 0;
    JumpKind kind = JumpKind::Scatter;
    double b_norm = 0;  //!< impact parameter of the scattering being replayed
    double rotation = 0;  //!< angle increment applied at this jump
};

//! Angle conventions: Lab includes the cyclotron drift 2 pi t / T.
enum class Frame
{
    Lab,
    CoRotating
};

struct GBState
{
    double velocity_angle = 0;
    double last_deflection = 0;
    double time_since_scatter = 0;
    bool scattered_yet = false;
};

/*!
 * One sampled path on [0, t_max].
 *
 * The angle is piecewise constant in the co-rotating frame and changes only
 * at jumps. A circling path never scatters; if circling is absorbing it also
 * has no jumps at all.
 */
struct GBPath
{
    double initial_angle = 0;
    double drift_rate = 0;  //!< 2 pi / T
    double t_max = 0;
    bool circling = false;
    std::vector<GBJump> jumps;

    //! Sum of rotations of the jumps at times <= t.
    double rotation_until(double t) const;
    double angle_at(double t, Frame frame = Frame::Lab) const;
    //! Number of Replay jumps directly following the first Scatter.
    std::size_t replays_after_first_scatter() const;
};

struct GBSampleOptions
{
    //! A path whose first wait exceeds T circles forever (physical reading).
    //! When false, the first scattering happens after the full wait instead.
    bool absorb_circling = true;
};

/*!
 * Forward sampler: rate-2 mu scattering clock, uniform impact parameter,
 * replay of the last deflection at every full period T after a scattering.
 *
 * T may be +infinity (no field, no replays).
 */
GBPath sample_velocity_path(double mu,
                            double T,
                            double v0_angle,
                            double t_max,
                            std::uint64_t key,
                            GBSampleOptions const& options = {});

//! State summary at time t of a sampled path.
GBState state_at(GBPath const& path, double t);

//---------------------------------------------------------------------------//
struct GreenKuboResult
{
    double D = 0;
    double D_se = 0;
    //! Same paths with lab-frame drift and absorbing circling
    double D_lab = 0;
    double D_lab_se = 0;
    double circling_frac = 0;
    double circling_se = 0;
    std::vector<double> t;
    std::vector<double> vacf;
    std::vector<double> vacf_se;
};

/*!
 * Trapezoidal time integral of the velocity autocorrelation on [0, t_cut].
 *
 * The primary estimate uses the co-rotating angle of non-absorbing paths,
 * which is the process whose generator is L^G.
 */
GreenKuboResult green_kubo_mc(double mu,
                              double T,
                              std::uint64_t n_paths,
                              double t_cut,
                              double dt_quad,
                              std::uint64_t seed,
                              unsigned workers = 1);

struct FractionEstimate
{
    double fraction = 0;
    double std_error = 0;
};

//! Fraction of paths with no scattering during the first period.
FractionEstimate circling_fraction_mc(double mu, double T, std::uint64_t n_paths,
                                      std::uint64_t seed, unsigned workers = 1);

}  // namespace mlg
