#include "crowdflow/sim_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace crowdflow {

std::string format_fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0.000000" || (s.size() > 1 && s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos))
        s.erase(0, 1);
    return s;
}

void write_trajectories_csv(std::ostream& os, const Trajectories& t)
{
    os << "time,agent_id,kind,x,y\n";
    for (std::size_t k = 0; k < t.times.size(); ++k) {
        const std::string time = format_fixed(t.times[k], 3);
        for (const auto& [id, path] : t.positions) {
            if (k >= path.size()) continue;
            os << time << ',' << id << ',' << to_string(t.kinds.at(id)) << ',' << format_fixed(path[k].x()) << ','
               << format_fixed(path[k].y()) << '\n';
        }
    }
}

Trajectories read_trajectories_csv(std::istream& is)
{
    Trajectories t;
    std::string line;
    if (!std::getline(is, line) || line != "time,agent_id,kind,x,y")
        throw std::runtime_error("trajectory CSV: missing header");
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string time, id, kind, x, y;
        if (!std::getline(ss, time, ',') || !std::getline(ss, id, ',') || !std::getline(ss, kind, ',') ||
            !std::getline(ss, x, ',') || !std::getline(ss, y))
            throw std::runtime_error("trajectory CSV line " + std::to_string(line_no) + ": expected 5 fields");
        try {
            const double tm = std::stod(time);
            const auto agent = static_cast<AgentId>(std::stol(id));
            if (t.times.empty() || std::abs(t.times.back() - tm) > 1e-9) t.times.push_back(tm);
            t.positions[agent].emplace_back(std::stod(x), std::stod(y));
            t.kinds[agent] = kind == "robot" ? AgentKind::robot : AgentKind::pedestrian;
        } catch (const std::logic_error&) {
            throw std::runtime_error("trajectory CSV line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return t;
}

void write_collisions_csv(std::ostream& os, const CollisionSummary& c)
{
    os << "pedestrian,start,end\n";
    for (const auto& e : c.events)
        os << e.pedestrian << ',' << format_fixed(e.start, 3) << ',' << format_fixed(e.end, 3) << '\n';
}

void write_ticks_csv(std::ostream& os, const SimResult& r)
{
    os << "time,waypoint_x,waypoint_y,mode,followed_group,primitive,command_x,command_y,pooled_norm\n";
    for (const auto& tick : r.ticks) {
        os << format_fixed(tick.time, 3) << ',' << format_fixed(tick.waypoint.position.x()) << ','
           << format_fixed(tick.waypoint.position.y()) << ','
           << (tick.waypoint.mode == WaypointMode::follow ? "follow" : "direct") << ','
           << (tick.waypoint.followed_group ? *tick.waypoint.followed_group : -1) << ','
           << (tick.plan.primitive ? *tick.plan.primitive : -1) << ',' << format_fixed(tick.command.x()) << ','
           << format_fixed(tick.command.y()) << ',' << format_fixed(tick.pooled_norm) << '\n';
    }
}

namespace {

std::vector<std::pair<std::string, std::string>> ordered_metrics(const SimResult& r)
{
    int follow = 0;
    int stops = 0;
    for (const auto& tick : r.ticks) {
        follow += tick.waypoint.mode == WaypointMode::follow ? 1 : 0;
        stops += tick.plan.stopped() ? 1 : 0;
    }
    return {
        {"mode", to_string(r.mode)},
        {"seed", std::to_string(r.seed)},
        {"goal_reached", r.goal_reached ? "true" : "false"},
        {"travel_time_s", format_fixed(r.travel_time, 3)},
        {"path_length_m", format_fixed(r.path_length)},
        {"collision_count", std::to_string(r.collisions.count)},
        {"min_clearance_m", format_fixed(r.min_clearance)},
        {"disturbance_m", format_fixed(r.disturbance)},
        {"steps", std::to_string(r.steps)},
        {"planner_ticks", std::to_string(r.ticks.size())},
        {"follow_ticks", std::to_string(follow)},
        {"stop_ticks", std::to_string(stops)},
    };
}

}  // namespace

std::map<std::string, std::string> metrics_of(const SimResult& r)
{
    const auto kv = ordered_metrics(r);
    return {kv.begin(), kv.end()};
}

void write_key_values(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv)
{
    for (const auto& [k, v] : kv) os << k << ": " << v << '\n';
}

void write_metrics(std::ostream& os, const SimResult& r)
{
    write_key_values(os, ordered_metrics(r));
}

}  // namespace crowdflow
