#include "maglorentz/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace mlg
{
namespace
{
void check_outside(PlanarPoint x, Disk const& disk)
{
    double dist = norm(x - disk.center);
    double tol = 1e-6 * disk.radius
                 + 8 * std::numeric_limits<double>::epsilon()
                       * (std::abs(x.x) + std::abs(x.y));
    if (dist < disk.radius - tol)
    {
        throw std::invalid_argument(
            "first_arc_disk_hit: start point lies inside the disk");
    }
}

std::optional<DiskHit> make_hit(double tau,
                                PlanarPoint at,
                                PlanarPoint velocity,
                                Disk const& disk)
{
    PlanarPoint n = (1 / disk.radius) * (at - disk.center);
    n = (1 / norm(n)) * n;
    if (std::abs(dot(velocity, n)) < grazing_tolerance)
    {
        return std::nullopt;
    }
    return DiskHit{tau, n};
}

std::optional<DiskHit> straight_hit(ParticleState const& state,
                                    Disk const& disk,
                                    double horizon,
                                    double min_time)
{
    PlanarPoint v = state.velocity();
    PlanarPoint rel = state.position - disk.center;
    double b = dot(v, rel);
    double c0 = dot(rel, rel) - disk.radius * disk.radius;
    if (b >= 0)
    {
        return std::nullopt;
    }
    double disc = b * b - c0;
    if (disc < 0)
    {
        return std::nullopt;
    }
    // Smaller root in the cancellation-free form
    double tau = c0 / (-b + std::sqrt(disc));
    tau = std::max(tau, 0.0);
    if (tau <= min_time || tau > horizon)
    {
        return std::nullopt;
    }
    return make_hit(tau, state.position + tau * v, v, disk);
}
}  // namespace

double normalize_angle(double angle)
{
    double r = std::fmod(angle, two_pi);
    if (r < 0)
    {
        r += two_pi;
    }
    if (r >= two_pi)
    {
        r = 0;
    }
    return r;
}

PlanarPoint larmor_center(ParticleState const& state, double B_magnitude)
{
    if (!(B_magnitude > 0))
    {
        throw std::domain_error(
            "larmor_center: zero field, use straight-line flight");
    }
    double R = 1 / B_magnitude;
    return state.position
           + R * unit_vector(state.velocity_angle + std::numbers::pi / 2);
}

LarmorArc larmor_arc(ParticleState const& state, double B_magnitude, double tau)
{
    LarmorArc arc;
    arc.center = larmor_center(state, B_magnitude);
    arc.radius = 1 / B_magnitude;
    arc.start_phase = state.velocity_angle - std::numbers::pi / 2;
    arc.swept = B_magnitude * tau;
    return arc;
}

ParticleState advance_free(ParticleState const& state, double B_magnitude, double tau)
{
    ParticleState out;
    if (B_magnitude == 0)
    {
        out.position = state.position + tau * state.velocity();
        out.velocity_angle = normalize_angle(state.velocity_angle);
        return out;
    }
    double R = 1 / B_magnitude;
    double a0 = state.velocity_angle;
    double a1 = a0 + B_magnitude * tau;
    // x(t) = q + R(sin a(t), -cos a(t)) with q fixed; write as a difference
    // so the result is exact at tau = 0.
    out.position = state.position
                   + R * PlanarPoint{std::sin(a1) - std::sin(a0),
                                     std::cos(a0) - std::cos(a1)};
    out.velocity_angle = normalize_angle(a1);
    return out;
}

std::optional<DiskHit> first_arc_disk_hit(ParticleState const& state,
                                          double B_magnitude,
                                          Disk const& disk,
                                          double horizon,
                                          double min_time)
{
    check_outside(state.position, disk);
    if (!(horizon > 0))
    {
        return std::nullopt;
    }
    if (B_magnitude == 0)
    {
        return straight_hit(state, disk, horizon, min_time);
    }

    double R = 1 / B_magnitude;
    double eps = disk.radius;
    PlanarPoint q = larmor_center(state, B_magnitude);
    PlanarPoint cq = disk.center - q;
    double d = norm(cq);
    if (d > R + eps || d < R - eps || d == 0)
    {
        return std::nullopt;
    }
    // Angle at the Larmor center between the disk center and the crossing
    // points; the half-angle form keeps full accuracy for thin crossings
    // where the law of cosines would cancel.
    double num = (d + eps - R) * (R + eps - d);
    double den = (R + d + eps) * (R + d - eps);
    if (!(num > 0) || !(den > 0))
    {
        return std::nullopt;
    }
    double gamma = 2 * std::atan(std::sqrt(num / den));
    double psi = std::atan2(cq.y, cq.x);
    double theta0 = state.velocity_angle - std::numbers::pi / 2;
    double period = two_pi / B_magnitude;
    double tau = normalize_angle(psi - gamma - theta0) / B_magnitude;
    if (tau <= min_time)
    {
        tau += period;
    }
    if (tau > horizon || tau > period + min_time)
    {
        return std::nullopt;
    }
    ParticleState at = advance_free(state, B_magnitude, tau);
    return make_hit(tau, at.position, at.velocity(), disk);
}

double reflect(double velocity_angle, PlanarPoint n)
{
    PlanarPoint v = unit_vector(velocity_angle);
    PlanarPoint out = v - (2 * dot(v, n)) * n;
    return normalize_angle(std::atan2(out.y, out.x));
}

double deflection_from_impact(double b_norm)
{
    if (!(std::abs(b_norm) <= 1))
    {
        throw std::domain_error("deflection_from_impact: |b| exceeds 1");
    }
    if (b_norm == 0)
    {
        return std::numbers::pi;
    }
    double mag = std::numbers::pi - 2 * std::asin(std::abs(b_norm));
    return std::copysign(mag, b_norm);
}

ScatterData scatter_data(double velocity_angle, PlanarPoint n, double eps)
{
    PlanarPoint minus_v = -1.0 * unit_vector(velocity_angle);
    ScatterData s;
    s.impact_vector = n;
    s.incidence_angle = std::atan2(cross(n, minus_v), dot(n, minus_v));
    double b_norm = std::clamp(std::sin(s.incidence_angle), -1.0, 1.0);
    s.impact_parameter = eps * b_norm;
    s.deflection = deflection_from_impact(b_norm);
    return s;
}

double self_recollision_angle(double Delta, double R, double eps)
{
    if (!(Delta >= R - eps && Delta <= R + eps))
    {
        throw std::domain_error(
            "self_recollision_angle: offset outside (R - eps, R + eps)");
    }
    double c = (Delta * Delta - R * R + eps * eps) / (2 * Delta * eps);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace mlg
