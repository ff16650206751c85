#include "crowdflow/scenario_config.hpp"
#include "crowdflow/sim.hpp"
#include "crowdflow/sim_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

using namespace crowdflow;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(CROWDFLOW_SOURCE_DIR) / "scenarios";

ScenarioConfig empty_scenario()
{
    ScenarioConfig c;
    c.seed = 3;
    return c;
}

PedestrianGroupSpec group(Vec2 lo, Vec2 hi, Vec2 goal, int members = 3)
{
    PedestrianGroupSpec g;
    g.members = members;
    g.spawn_region = Arena{lo, hi};
    g.goal = goal;
    return g;
}

Trajectories two_agent_trajectories(const std::vector<double>& gaps)
{
    Trajectories t;
    t.kinds = {{0, AgentKind::robot}, {1, AgentKind::pedestrian}};
    t.radii = {{0, 0.4}, {1, 0.3}};
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        t.times.push_back(0.1 * static_cast<double>(k));
        t.positions[0].push_back(Vec2(0, 0));
        t.positions[1].push_back(Vec2(gaps[k], 0));
    }
    return t;
}

}  // namespace

TEST_CASE("mode names and seed streams")
{
    CHECK(parse_mode("with") == NavigationMode::with_social_model);
    CHECK(parse_mode("without_social_model") == NavigationMode::without_social_model);
    CHECK_FALSE(parse_mode("sideways").has_value());
    CHECK(std::string(to_string(NavigationMode::with_social_model)) == "with_social_model");
    CHECK(substream_seed(1, "spawn") == substream_seed(1, "spawn"));
    CHECK(substream_seed(1, "spawn") != substream_seed(1, "encoder"));
    CHECK(substream_seed(1, "spawn") != substream_seed(2, "spawn"));
}

TEST_CASE("step on an empty world only advances time")
{
    const ScenarioConfig cfg = empty_scenario();
    PlannerState ps = make_planner_state(cfg, {});
    WorldState w;
    const WorldState next = step(w, cfg, ps, cfg.dt);
    CHECK(next.time == doctest::Approx(0.1));
    CHECK(next.agents.empty());
    CHECK_THROWS_AS(step(w, cfg, ps, 0.2), std::invalid_argument);
}

TEST_CASE("a lone pedestrian walks toward its goal")
{
    ScenarioConfig cfg = empty_scenario();
    cfg.groups.push_back(group(Vec2(2, 2), Vec2(2, 2), Vec2(18, 2), 1));
    WorldState w = spawn_world(cfg, false);
    REQUIRE(w.agents.size() == 1);
    w.agents[0].velocity = Vec2::Zero();
    PlannerState ps = make_planner_state(cfg, {});
    const WorldState next = step(w, cfg, ps, cfg.dt);
    const Vec2 moved = next.agents[0].position - w.agents[0].position;
    CHECK(moved.x() > 0.0);
    CHECK(moved.y() == doctest::Approx(0.0));
}

TEST_CASE("robot with a clear corridor advances in both modes")
{
    for (const auto mode : {NavigationMode::with_social_model, NavigationMode::without_social_model}) {
        ScenarioConfig cfg = empty_scenario();
        cfg.mode = mode;
        WorldState w = spawn_world(cfg, true);
        PlannerState ps = make_planner_state(cfg, {});
        const double before = (cfg.robot.goal - w.find(kRobotId)->position).norm();
        for (int k = 0; k < 10; ++k) w = step(w, cfg, ps, cfg.dt);
        CHECK((cfg.robot.goal - w.find(kRobotId)->position).norm() < before - 0.5);
    }
}

TEST_CASE("empty crowd: straight run to the goal")
{
    const SimResult r = run_scenario(empty_scenario());
    CHECK(r.goal_reached);
    CHECK(r.collisions.count == 0);
    const double straight = (ScenarioConfig{}.robot.goal - ScenarioConfig{}.robot.start).norm();
    CHECK(r.path_length == doctest::Approx(straight).epsilon(0.05));
    CHECK(r.disturbance == 0.0);
}

TEST_CASE("spawn layout does not depend on the robot")
{
    const ScenarioConfig cfg = load_scenario(kScenarios / "crowd_six_groups.json");
    std::map<AgentId, int> groups;
    const WorldState with = spawn_world(cfg, true, &groups);
    const WorldState without = spawn_world(cfg, false);
    CHECK(with.agents.size() == 19);
    CHECK(without.agents.size() == 18);
    CHECK(groups.size() == 18);
    for (const auto& a : without.agents) {
        const AgentState* b = with.find(a.id);
        REQUIRE(b != nullptr);
        CHECK(a.position == b->position);
        CHECK(cfg.arena.contains(a.position));
    }
    std::set<AgentId> ids;
    for (const auto& a : with.agents) CHECK(ids.insert(a.id).second);
}

TEST_CASE("run_scenario is deterministic")
{
    const ScenarioConfig cfg = load_scenario(kScenarios / "crowd_six_groups.json");
    const SimResult a = run_scenario(cfg);
    const SimResult b = run_scenario(cfg);
    std::ostringstream ta;
    std::ostringstream tb;
    write_trajectories_csv(ta, a.trajectories);
    write_trajectories_csv(tb, b.trajectories);
    CHECK(ta.str() == tb.str());
    CHECK(a.trajectories.positions == b.trajectories.positions);
    CHECK(a.disturbance == b.disturbance);
    CHECK(a.ticks.size() == b.ticks.size());
}

TEST_CASE("planner safety holds against each tick's snapshot")
{
    for (const char* name : {"crowd_six_groups.json", "two_groups_head_on.json"}) {
        for (const auto mode : {NavigationMode::with_social_model, NavigationMode::without_social_model}) {
            ScenarioConfig cfg = load_scenario(kScenarios / name);
            cfg.mode = mode;
            const SimResult r = run_scenario(cfg);
            const PlannerState ps = make_planner_state(cfg, {});
            CHECK(audit_planner_safety(r, ps.library) > 0.0);
        }
    }
}

TEST_CASE("head-on geometry: direct route versus joining the flow")
{
    ScenarioConfig cfg = load_scenario(kScenarios / "two_groups_head_on.json");
    cfg.mode = NavigationMode::without_social_model;
    const SimResult direct = run_scenario(cfg);
    cfg.mode = NavigationMode::with_social_model;
    const SimResult follow = run_scenario(cfg);
    REQUIRE(direct.goal_reached);
    REQUIRE(follow.goal_reached);

    // The opposing group (scripted group 1) walks the robot's straight line;
    // the direct robot meets it inside its corridor.
    double closest_direct = INFINITY;
    const auto& robot = direct.trajectories.positions.at(kRobotId);
    for (const auto& [id, g] : direct.scripted_groups) {
        if (g != 1) continue;
        const auto& ped = direct.trajectories.positions.at(id);
        for (std::size_t k = 0; k < robot.size(); ++k) closest_direct = std::min(closest_direct, (robot[k] - ped[k]).norm());
    }
    CHECK(closest_direct < 1.5);

    // While following, the robot heads the way its flow goes.
    int followed = 0;
    Vec2 heading_sum = Vec2::Zero();
    Vec2 flow_sum = Vec2::Zero();
    for (const auto& t : follow.ticks) {
        if (t.followed_members.empty()) continue;
        ++followed;
        heading_sum += direction_of(t.robot_pose.heading);
        flow_sum += t.followed_velocity.normalized();
        for (AgentId m : t.followed_members) CHECK(follow.scripted_groups.at(m) == 0);
    }
    CHECK(followed > 0);
    CHECK(heading_sum.normalized().dot(flow_sum.normalized()) > 0.9);
}

TEST_CASE("collision events are maximal overlap intervals")
{
    CHECK(collision_count(two_agent_trajectories({2, 2, 2, 2})).count == 0);
    CHECK(collision_count(two_agent_trajectories({0.71, 0.75, 1.0})).count == 0);

    const CollisionSummary one = collision_count(two_agent_trajectories({2, 0.5, 0.5, 0.5, 2}));
    REQUIRE(one.count == 1);
    CHECK(one.events[0].start == doctest::Approx(0.1));
    CHECK(one.events[0].end == doctest::Approx(0.3));

    const CollisionSummary two = collision_count(two_agent_trajectories({0.5, 0.6, 1.2, 1.2, 0.2, 0.5}));
    REQUIRE(two.count == 2);
    CHECK(two.events[0].start == doctest::Approx(0.0));
    CHECK(two.events[0].end == doctest::Approx(0.1));
    CHECK(two.events[1].start == doctest::Approx(0.4));
    CHECK(two.events[1].end == doctest::Approx(0.5));
    CHECK(two.events[1].pedestrian == 1);
}

TEST_CASE("clearance and path length")
{
    CHECK(min_clearance(two_agent_trajectories({2, 1.0, 3})) == doctest::Approx(0.3));
    const std::vector<Vec2> path{Vec2(0, 0), Vec2(3, 4), Vec2(3, 5)};
    CHECK(path_length(path) == doctest::Approx(6.0));
    CHECK(path_length({}) == 0.0);
}

TEST_CASE("disturbance metric")
{
    const Trajectories t = two_agent_trajectories({1, 2, 3});
    CHECK(disturbance_metric(t, t) == 0.0);

    Trajectories shifted = t;
    for (auto& p : shifted.positions[1]) p += Vec2(0, 0.5);
    CHECK(disturbance_metric(t, shifted) == doctest::Approx(0.5));

    Trajectories other = t;
    other.kinds[2] = AgentKind::pedestrian;
    other.positions[2] = t.positions.at(1);
    CHECK_THROWS_AS(disturbance_metric(t, other), std::invalid_argument);

    Trajectories shorter = t;
    shorter.times.pop_back();
    CHECK_THROWS_AS(disturbance_metric(t, shorter), std::invalid_argument);
}

TEST_CASE("disturbance: a robot nobody reacts to changes nothing")
{
    ScenarioConfig cfg = empty_scenario();
    cfg.groups.push_back(group(Vec2(2, 7), Vec2(4, 9), Vec2(18, 8)));
    cfg.robot.start = Vec2(1, 1);
    cfg.robot.goal = Vec2(19, 1);
    cfg.pedestrians_see_robot = false;
    const SimResult r = run_scenario(cfg);
    CHECK(r.disturbance == 0.0);
}

TEST_CASE("disturbance: driving through a lane displaces pedestrians")
{
    ScenarioConfig cfg = empty_scenario();
    cfg.mode = NavigationMode::without_social_model;
    cfg.groups.push_back(group(Vec2(14, 4), Vec2(16, 6), Vec2(1, 5)));
    const SimResult r = run_scenario(cfg);
    CHECK(r.disturbance > 0.0);
}

TEST_CASE("invalid scenarios are rejected with every problem")
{
    ScenarioConfig cfg = empty_scenario();
    cfg.dt = 0.0;
    cfg.robot.goal = Vec2(50, 5);
    cfg.planner.library.count = 4;
    const auto errors = cfg.validate();
    CHECK(errors.size() == 3);
    CHECK_THROWS_AS(run_scenario(cfg), std::invalid_argument);
}

TEST_CASE("trajectory CSV round trip")
{
    ScenarioConfig cfg = empty_scenario();
    cfg.groups.push_back(group(Vec2(2, 2), Vec2(4, 4), Vec2(18, 3), 2));
    cfg.max_duration = 3.0;
    const SimResult r = run_scenario(cfg);
    std::stringstream ss;
    write_trajectories_csv(ss, r.trajectories);
    const Trajectories back = read_trajectories_csv(ss);
    REQUIRE(back.times.size() == r.trajectories.times.size());
    for (const auto& [id, path] : r.trajectories.positions) {
        REQUIRE(back.positions.count(id) == 1);
        CHECK(back.kinds.at(id) == r.trajectories.kinds.at(id));
        for (std::size_t k = 0; k < path.size(); ++k)
            CHECK((back.positions.at(id)[k] - path[k]).norm() < 1e-6);
    }
}

TEST_CASE("metrics record")
{
    const SimResult r = run_scenario(empty_scenario());
    const auto m = metrics_of(r);
    CHECK(m.at("goal_reached") == "true");
    CHECK(m.at("collision_count") == "0");
    CHECK(m.at("mode") == "with_social_model");
    CHECK(format_fixed(-0.0000001, 3) == "0.000");
    CHECK(format_fixed(1.23456, 2) == "1.23");
}

TEST_CASE("robot moves with the followed flow")
{
    for (const char* name : {"two_groups_head_on.json", "crowd_six_groups.json"}) {
        ScenarioConfig cfg = load_scenario(kScenarios / name);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            cfg.seed = seed;
            const SimResult r = run_scenario(cfg);
            for (const auto& tick : r.ticks) {
                if (tick.waypoint.mode != WaypointMode::follow) continue;
                INFO(std::string(name) << " seed " << seed << " t " << tick.time);
                CHECK(tick.command.dot(tick.followed_velocity) >= 0.0);
            }
        }
    }
}
