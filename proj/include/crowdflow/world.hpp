#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <vector>

namespace crowdflow {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
using Vec2 = Vec2T<double>;

using AgentId = std::int32_t;

enum class AgentKind { pedestrian, robot };

const char* to_string(AgentKind kind);

/// Axis-aligned rectangle in meters.
struct Arena {
    Vec2 min{0.0, 0.0};
    Vec2 max{20.0, 10.0};

    double width() const { return max.x() - min.x(); }
    double height() const { return max.y() - min.y(); }
    bool contains(const Vec2& p) const;
    Vec2 clamp(const Vec2& p) const;
};

struct AgentState {
    AgentId id = 0;
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    double heading = 0.0;  // (-pi, pi]
    double radius = 0.3;
    double desired_speed = 1.34;
    Vec2 goal = Vec2::Zero();
    AgentKind kind = AgentKind::pedestrian;
};

struct WorldState {
    double time = 0.0;
    std::vector<AgentState> agents;
    Arena arena;

    const AgentState* find(AgentId id) const;
    AgentState* find(AgentId id);
};

struct KinematicLimits {
    double v_max = 2.0;
    double heading_speed_threshold = 1e-6;
};

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a)
{
    constexpr Scalar pi = Scalar(3.14159265358979323846);
    a = std::remainder(a, Scalar(2) * pi);
    if (a <= -pi) a += Scalar(2) * pi;
    return a;
}

/// Angle of v in (-pi, pi]; 0 for the zero vector.
template <typename Scalar>
Scalar heading_of(const Vec2T<Scalar>& v)
{
    if (v.x() == Scalar(0) && v.y() == Scalar(0)) return Scalar(0);
    return wrap_angle(std::atan2(v.y(), v.x()));
}

template <typename Scalar>
Vec2T<Scalar> unit_or_zero(const Vec2T<Scalar>& v)
{
    const Scalar n = v.norm();
    return n > Scalar(0) ? Vec2T<Scalar>(v / n) : Vec2T<Scalar>::Zero();
}

template <typename Scalar>
Vec2T<Scalar> clamp_norm(const Vec2T<Scalar>& v, Scalar limit)
{
    const Scalar n = v.norm();
    return n > limit ? Vec2T<Scalar>(v * (limit / n)) : v;
}

template <typename Scalar>
Vec2T<Scalar> direction_of(Scalar heading)
{
    return {std::cos(heading), std::sin(heading)};
}

bool is_finite(const Vec2& v);

/// One semi-implicit Euler step with unit mass: the speed is clamped to
/// limits.v_max before the position update, and the position is clamped to
/// the arena. Heading follows the velocity above the speed threshold and is
/// held otherwise. Throws std::invalid_argument for dt <= 0 and
/// std::domain_error for a non-finite force.
AgentState integrate(const AgentState& state, const Vec2& force, double dt, const Arena& arena,
                     const KinematicLimits& limits = {});

}  // namespace crowdflow
