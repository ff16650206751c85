#include "crowdflow/scenario_config.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <sstream>

namespace crowdflow {

namespace {

std::string join(const std::vector<std::string>& lines)
{
    std::string s = "invalid scenario config:";
    for (const auto& l : lines) s += "\n  " + l;
    return s;
}

using nlohmann::json;

// Visits one JSON object, dispatching known keys and flagging the rest.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string prefix, std::vector<std::string>& errors)
        : obj_(obj), prefix_(std::move(prefix)), errors_(errors)
    {
    }

    std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

    void number(const std::string& name, double& out)
    {
        if (const json* v = take(name)) {
            if (v->is_number())
                out = v->get<double>();
            else
                errors_.push_back(key(name) + ": expected a number");
        }
    }

    template <typename Int>
    void integer(const std::string& name, Int& out)
    {
        if (const json* v = take(name)) {
            if (v->is_number_integer())
                out = v->get<Int>();
            else
                errors_.push_back(key(name) + ": expected an integer");
        }
    }

    void boolean(const std::string& name, bool& out)
    {
        if (const json* v = take(name)) {
            if (v->is_boolean())
                out = v->get<bool>();
            else
                errors_.push_back(key(name) + ": expected true or false");
        }
    }

    void string(const std::string& name, std::string& out)
    {
        if (const json* v = take(name)) {
            if (v->is_string())
                out = v->get<std::string>();
            else
                errors_.push_back(key(name) + ": expected a string");
        }
    }

    void vec2(const std::string& name, Vec2& out)
    {
        if (const json* v = take(name)) {
            if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number())
                out = Vec2((*v)[0].get<double>(), (*v)[1].get<double>());
            else
                errors_.push_back(key(name) + ": expected [x, y]");
        }
    }

    void object(const std::string& name, const std::function<void(ObjectReader&)>& fn)
    {
        if (const json* v = take(name)) {
            if (!v->is_object()) {
                errors_.push_back(key(name) + ": expected an object");
                return;
            }
            ObjectReader sub(*v, key(name), errors_);
            fn(sub);
            sub.finish();
        }
    }

    const json* take(const std::string& name)
    {
        seen_.push_back(name);
        const auto it = obj_.find(name);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (const auto& [k, v] : obj_.items())
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) errors_.push_back(key(k) + ": unknown key");
    }

    std::vector<std::string>& errors() { return errors_; }

private:
    const json& obj_;
    std::string prefix_;
    std::vector<std::string>& errors_;
    std::vector<std::string> seen_;
};

void read_rect(ObjectReader& r, Arena& rect)
{
    r.vec2("min", rect.min);
    r.vec2("max", rect.max);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems) : std::runtime_error(join(problems)), problems_(std::move(problems))
{
}

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("document: ") + e.what()});
    }
    if (!doc.is_object()) throw ConfigError({"document: expected a JSON object"});

    ScenarioConfig cfg;
    std::vector<std::string> errors;
    ObjectReader root(doc, "", errors);

    root.integer("seed", cfg.seed);
    std::string mode = to_string(cfg.mode);
    root.string("mode", mode);
    if (const auto m = parse_mode(mode))
        cfg.mode = *m;
    else
        errors.push_back("mode: expected \"with\" or \"without\"");
    root.number("dt", cfg.dt);
    root.number("max_duration", cfg.max_duration);
    root.number("pedestrian_radius", cfg.pedestrian_radius);
    root.number("v_max", cfg.v_max);
    root.number("goal_tolerance", cfg.goal_tolerance);
    root.boolean("pedestrians_see_robot", cfg.pedestrians_see_robot);
    root.object("arena", [&](ObjectReader& r) { read_rect(r, cfg.arena); });
    root.object("robot", [&](ObjectReader& r) {
        r.vec2("start", cfg.robot.start);
        r.vec2("goal", cfg.robot.goal);
        r.number("cruise_speed", cfg.robot.cruise_speed);
        r.number("radius", cfg.robot.radius);
    });

    if (const json* groups = root.take("groups")) {
        if (!groups->is_array()) {
            errors.push_back("groups: expected an array");
        } else {
            for (std::size_t g = 0; g < groups->size(); ++g) {
                const std::string key = "groups[" + std::to_string(g) + "]";
                const json& item = (*groups)[g];
                if (!item.is_object()) {
                    errors.push_back(key + ": expected an object");
                    continue;
                }
                PedestrianGroupSpec spec;
                ObjectReader r(item, key, errors);
                r.integer("members", spec.members);
                r.object("spawn", [&](ObjectReader& s) { read_rect(s, spec.spawn_region); });
                r.vec2("goal", spec.goal);
                r.number("desired_speed", spec.desired_speed);
                r.finish();
                cfg.groups.push_back(spec);
            }
        }
    }

    root.object("forces", [&](ObjectReader& r) {
        auto& f = cfg.forces;
        r.number("tau", f.tau);
        r.number("repulsion_strength", f.repulsion_strength);
        r.number("repulsion_range", f.repulsion_range);
        r.number("gaze", f.gaze);
        r.number("attraction", f.attraction);
        r.number("group_repulsion", f.group_repulsion);
        r.number("attraction_threshold", f.attraction_threshold);
        r.number("group_repulsion_distance", f.group_repulsion_distance);
    });

    std::string weights_file;
    root.object("planner", [&](ObjectReader& r) {
        auto& p = cfg.planner;
        r.integer("replan_every", p.replan_every);
        r.number("lookahead", p.lookahead);
        r.number("sensing_range", p.sensing_range);
        r.integer("smoothing_window", p.smoothing_window);
        r.integer("feature_window", p.feature_window);
        r.number("min_group_speed", p.selection.min_speed);
        r.number("distance_penalty", p.selection.distance_penalty);
        r.integer("min_group_members", p.selection.min_members);
        r.boolean("extrapolate_obstacles", p.extrapolate_obstacles);
        r.boolean("match_group_speed", p.match_group_speed);
        r.integer("noise_dim", p.noise_dim);
        r.string("weights_file", weights_file);
        if (const json* c = r.take("classifier")) {
            if (c->is_array() && c->size() == 4 && std::all_of(c->begin(), c->end(), [](const json& x) {
                    return x.is_number();
                })) {
                p.classifier.weights = {(*c)[0].get<double>(), (*c)[1].get<double>(), (*c)[2].get<double>()};
                p.classifier.bias = (*c)[3].get<double>();
            } else {
                errors.push_back(r.key("classifier") + ": expected [w1, w2, w3, bias]");
            }
        }
        r.object("library", [&](ObjectReader& l) {
            l.integer("count", p.library.count);
            l.number("max_curvature", p.library.max_curvature);
            l.number("length", p.library.length);
            l.number("inflation", p.library.inflation);
        });
        r.object("encoder", [&](ObjectReader& e) {
            e.integer("dimension", p.encoder.dimension);
            e.number("weight_scale", p.encoder.weight_scale);
            e.integer("history_length", p.encoder.history_length);
        });
    });
    root.finish();

    if (!weights_file.empty()) {
        std::filesystem::path path(weights_file);
        if (path.is_relative()) path = base_dir / path;
        std::ifstream in(path);
        if (!in) {
            errors.push_back("planner.weights_file: cannot open " + path.string());
        } else {
            try {
                cfg.planner.weights = load_planner_weights(in);
            } catch (const std::exception& e) {
                errors.push_back(std::string("planner.weights_file: ") + e.what());
            }
        }
    }

    for (auto& e : cfg.validate()) errors.push_back(std::move(e));
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open " + path.string()});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

}  // namespace crowdflow
