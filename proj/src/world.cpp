#include "crowdflow/world.hpp"

#include <algorithm>
#include <stdexcept>

namespace crowdflow {

const char* to_string(AgentKind kind)
{
    return kind == AgentKind::robot ? "robot" : "pedestrian";
}

bool Arena::contains(const Vec2& p) const
{
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
}

Vec2 Arena::clamp(const Vec2& p) const
{
    return {std::clamp(p.x(), min.x(), max.x()), std::clamp(p.y(), min.y(), max.y())};
}

const AgentState* WorldState::find(AgentId id) const
{
    for (const auto& a : agents)
        if (a.id == id) return &a;
    return nullptr;
}

AgentState* WorldState::find(AgentId id)
{
    for (auto& a : agents)
        if (a.id == id) return &a;
    return nullptr;
}

bool is_finite(const Vec2& v)
{
    return std::isfinite(v.x()) && std::isfinite(v.y());
}

AgentState integrate(const AgentState& state, const Vec2& force, double dt, const Arena& arena,
                     const KinematicLimits& limits)
{
    if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
    if (!is_finite(force))
        throw std::domain_error("integrate: non-finite force on agent " + std::to_string(state.id));

    AgentState next = state;
    next.velocity = clamp_norm<double>(state.velocity + force * dt, limits.v_max);
    next.position = arena.clamp(state.position + next.velocity * dt);
    if (next.velocity.norm() > limits.heading_speed_threshold) next.heading = heading_of(next.velocity);
    return next;
}

}  // namespace crowdflow
