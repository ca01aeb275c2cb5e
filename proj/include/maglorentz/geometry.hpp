//---------------------------------------------------------------------------//
//! \file maglorentz/geometry.hpp
//! Free cyclotron flight, arc/disk intersection and elastic scattering.
//---------------------------------------------------------------------------//
#pragma once

#include <cmath>
#include <numbers>
#include <optional>

namespace mlg
{
inline constexpr double two_pi = 2 * std::numbers::pi;

//---------------------------------------------------------------------------//
struct PlanarPoint
{
    double x = 0;
    double y = 0;
};

inline PlanarPoint operator+(PlanarPoint a, PlanarPoint b)
{
    return {a.x + b.x, a.y + b.y};
}
inline PlanarPoint operator-(PlanarPoint a, PlanarPoint b)
{
    return {a.x - b.x, a.y - b.y};
}
inline PlanarPoint operator*(double s, PlanarPoint a)
{
    return {s * a.x, s * a.y};
}
inline double dot(PlanarPoint a, PlanarPoint b)
{
    return a.x * b.x + a.y * b.y;
}
//! z-component of the 3D cross product.
inline double cross(PlanarPoint a, PlanarPoint b)
{
    return a.x * b.y - a.y * b.x;
}
inline double norm(PlanarPoint a)
{
    return std::hypot(a.x, a.y);
}
inline PlanarPoint unit_vector(double angle)
{
    return {std::cos(angle), std::sin(angle)};
}

//! Map an angle to [0, 2pi).
double normalize_angle(double angle);

//! Velocity is the unit vector at `velocity_angle`.
struct ParticleState
{
    PlanarPoint position;
    double velocity_angle = 0;

    PlanarPoint velocity() const { return unit_vector(velocity_angle); }
};

struct Disk
{
    PlanarPoint center;
    double radius = 0;
};

//! Counterclockwise circular arc traversed at unit speed.
struct LarmorArc
{
    PlanarPoint center;
    double radius = 0;
    double start_phase = 0;
    double swept = 0;

    PlanarPoint point_at(double phase_offset) const
    {
        return center + radius * unit_vector(start_phase + phase_offset);
    }
};

struct ScatterData
{
    PlanarPoint impact_vector;
    double impact_parameter = 0;
    double incidence_angle = 0;
    double deflection = 0;
};

struct DiskHit
{
    double time = 0;
    PlanarPoint impact_vector;
};

//---------------------------------------------------------------------------//
// Departure guard applied after a reflection off the same disk
inline constexpr double departure_guard = 1e-9;
// Impacts with |v.n| below this are ignored
inline constexpr double grazing_tolerance = 1e-10;

//! Center of the counterclockwise Larmor orbit; throws std::domain_error at B=0.
PlanarPoint larmor_center(ParticleState const& state, double B_magnitude);

//! Arc followed for time tau from `state` (B > 0).
LarmorArc larmor_arc(ParticleState const& state, double B_magnitude, double tau);

//! Exact free flight for time tau (straight line when B = 0).
ParticleState advance_free(ParticleState const& state, double B_magnitude, double tau);

/*!
 * Earliest contact of the free flight with a disk within (min_time, horizon].
 *
 * For B > 0 at most one revolution is searched. Tangential contacts are
 * reported as misses. Throws std::invalid_argument if the start point is
 * inside the disk.
 */
std::optional<DiskHit> first_arc_disk_hit(ParticleState const& state,
                                          double B_magnitude,
                                          Disk const& disk,
                                          double horizon,
                                          double min_time = 0);

//! Angle of v - 2(v.n)n.
double reflect(double velocity_angle, PlanarPoint n);

//! Signed deflection sign(b)(pi - 2 asin|b|), with deflection(0) = pi.
double deflection_from_impact(double b_norm);

//! Impact data for a particle with the given velocity touching a disk at n.
ScatterData scatter_data(double velocity_angle, PlanarPoint n, double eps);

//! Angle beta of the self-recollision geometry for Larmor center offset Delta.
double self_recollision_angle(double Delta, double R, double eps);

}  // namespace mlg
