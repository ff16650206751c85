#pragma once

#include "crowdflow/sim.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace crowdflow {

/// "time,agent_id,kind,x,y", one row per agent per recorded time, agents in
/// ascending id order within a time. Fixed 6-decimal formatting.
void write_trajectories_csv(std::ostream& os, const Trajectories& t);

/// Parses the format written by write_trajectories_csv.
Trajectories read_trajectories_csv(std::istream& is);

/// "pedestrian,start,end" per collision event.
void write_collisions_csv(std::ostream& os, const CollisionSummary& c);

/// One row per planner tick: time, waypoint, mode, followed group, chosen
/// primitive (-1 on stop), commanded velocity, pooled-embedding norm.
void write_ticks_csv(std::ostream& os, const SimResult& r);

/// Ordered "key: value" metrics of one run.
std::map<std::string, std::string> metrics_of(const SimResult& r);

/// Writes "key: value" lines in the given order.
void write_key_values(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv);
void write_metrics(std::ostream& os, const SimResult& r);

std::string format_fixed(double v, int decimals = 6);

}  // namespace crowdflow
