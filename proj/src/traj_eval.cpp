#include "crowdflow/traj_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace crowdflow {

namespace {

bool parse_real(const std::string& token, double& out)
{
    char* end = nullptr;
    out = std::strtod(token.c_str(), &end);
    return end == token.c_str() + token.size() && std::isfinite(out);
}

bool parse_integral(const std::string& token, long& out)
{
    double v = 0.0;
    if (!parse_real(token, v) || std::abs(v - std::round(v)) > 1e-6) return false;
    out = std::lround(v);
    return true;
}

struct Row {
    long frame;
    AgentId ped;
    Vec2 p;
};

}  // namespace

std::vector<Track> load_dataset(std::istream& is, const std::string& name)
{
    std::vector<Row> rows;
    std::set<std::pair<long, AgentId>> seen;
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& what) {
        throw std::runtime_error(name + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<std::string> fields;
        for (std::string tok; ss >> tok;) fields.push_back(tok);
        if (fields.empty() || fields[0][0] == '#') continue;
        if (fields.size() != 4) fail("expected 4 fields \"frame_id ped_id x y\", found " + std::to_string(fields.size()));

        Row r{};
        long ped = 0;
        double x = 0.0;
        double y = 0.0;
        if (!parse_integral(fields[0], r.frame)) fail("frame_id is not an integer: " + fields[0]);
        if (!parse_integral(fields[1], ped)) fail("ped_id is not an integer: " + fields[1]);
        if (!parse_real(fields[2], x)) fail("x is not a number: " + fields[2]);
        if (!parse_real(fields[3], y)) fail("y is not a number: " + fields[3]);
        r.ped = static_cast<AgentId>(ped);
        r.p = Vec2(x, y);
        if (!seen.emplace(r.frame, r.ped).second)
            fail("duplicate row for frame " + fields[0] + ", pedestrian " + fields[1]);
        rows.push_back(r);
    }
    if (is.bad()) throw std::runtime_error(name + ": read error");

    std::vector<long> frames;
    for (const auto& r : rows) frames.push_back(r.frame);
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    long step = 0;
    for (std::size_t k = 1; k < frames.size(); ++k) step = std::gcd(step, frames[k] - frames[k - 1]);
    if (step == 0) step = 1;
    const long first = frames.empty() ? 0 : frames.front();

    std::map<AgentId, std::vector<std::pair<long, Vec2>>> by_ped;
    for (const auto& r : rows) by_ped[r.ped].emplace_back((r.frame - first) / step, r.p);

    std::vector<Track> tracks;
    for (auto& [ped, samples] : by_ped) {
        std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Track t;
        t.pedestrian = ped;
        for (const auto& [f, p] : samples) {
            t.frames.push_back(f);
            t.positions.push_back(p);
        }
        tracks.push_back(std::move(t));
    }
    return tracks;
}

std::vector<Track> load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open file");
    return load_dataset(in, path.string());
}

std::vector<Vec2> linear_baseline(std::span<const Vec2> observed, int t_pred)
{
    const auto n = static_cast<Eigen::Index>(observed.size());
    if (n < 2) throw std::invalid_argument("linear_baseline: need at least 2 observed positions");
    if (t_pred < 0) throw std::invalid_argument("linear_baseline: t_pred must be >= 0");

    Eigen::MatrixXd design(n, 2);
    Eigen::MatrixXd targets(n, 2);
    for (Eigen::Index t = 0; t < n; ++t) {
        design(t, 0) = 1.0;
        design(t, 1) = static_cast<double>(t);
        targets.row(t) = observed[static_cast<std::size_t>(t)].transpose();
    }
    // Rows: intercept, slope. Columns: x, y.
    const Eigen::Matrix2d coeffs = design.colPivHouseholderQr().solve(targets);

    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(t_pred));
    for (int k = 0; k < t_pred; ++k) {
        const double t = static_cast<double>(n + k);
        out.emplace_back(coeffs.row(0).transpose() + t * coeffs.row(1).transpose());
    }
    return out;
}

void EvalConfig::validate() const
{
    if (t_obs < 2) throw std::invalid_argument("EvalConfig: t_obs must be >= 2");
    if (t_pred < 1) throw std::invalid_argument("EvalConfig: t_pred must be >= 1");
    if (!(frame_period > 0.0)) throw std::invalid_argument("EvalConfig: frame period must be positive");
}

Predictor make_linear_predictor()
{
    return [](const PredictionContext& ctx) { return linear_baseline(ctx.observed, ctx.t_pred); };
}

Predictor make_flow_predictor(const LinearClassifier& classifier, const FlowSelectionParams& selection,
                              double lookahead)
{
    return [=](const PredictionContext& ctx) {
        const std::size_t t_obs = ctx.observed.size();
        const auto straight = linear_baseline(ctx.observed, ctx.t_pred);
        const Vec2 goal = straight.back();

        double travelled = 0.0;
        for (std::size_t k = 1; k < t_obs; ++k) travelled += (ctx.observed[k] - ctx.observed[k - 1]).norm();
        const double step_length = travelled / static_cast<double>(t_obs - 1);

        // Rolling windows: observed frames followed by predicted ones.
        std::map<AgentId, std::vector<Vec2>> neighbor_paths;
        for (const auto& [id, obs] : ctx.neighbors) {
            auto path = obs;
            const auto future = linear_baseline(obs, ctx.t_pred);
            path.insert(path.end(), future.begin(), future.end());
            neighbor_paths.emplace(id, std::move(path));
        }
        std::vector<Vec2> own = ctx.observed;

        Arena unbounded{Vec2(-1e9, -1e9), Vec2(1e9, 1e9)};
        std::vector<Vec2> prediction;
        for (int k = 0; k < ctx.t_pred; ++k) {
            const std::size_t now = t_obs + static_cast<std::size_t>(k);  // frames known so far
            std::map<AgentId, TrackHistory> tracks;
            for (const auto& [id, path] : neighbor_paths) {
                const std::span<const Vec2> window(path.data() + (now - t_obs), t_obs);
                tracks.emplace(id, history_from_positions(window, static_cast<double>(now - t_obs) * ctx.frame_period,
                                                          ctx.frame_period));
            }
            const GroupAssignment groups = infer_groups(tracks, classifier, t_obs);
            const auto flows = group_flows(groups, tracks, t_obs, selection.min_members);

            AgentState self;
            self.id = ctx.target;
            self.position = own.back();
            self.velocity = (own.back() - own[own.size() - 2]) / ctx.frame_period;
            self.heading = heading_of(self.velocity);
            const auto followed = select_group(flows, self, goal, selection);
            const GroupFlow* flow = nullptr;
            for (const auto& f : flows)
                if (followed && f.group == *followed) flow = &f;

            const Waypoint wp = compute_waypoint(self, goal, flow, lookahead, unbounded);
            const Vec2 to_wp = wp.position - self.position;
            const Vec2 next = self.position + unit_or_zero(to_wp) * std::min(step_length, to_wp.norm());
            prediction.push_back(next);
            own.push_back(next);
        }
        return prediction;
    };
}

EvalReport evaluate(std::span<const Track> input, const Predictor& predictor, const EvalConfig& cfg,
                    const LinearClassifier& classifier, const std::string& name)
{
    cfg.validate();
    std::vector<const Track*> tracks;
    for (const auto& t : input) tracks.push_back(&t);
    std::stable_sort(tracks.begin(), tracks.end(),
                     [](const Track* a, const Track* b) { return a->pedestrian < b->pedestrian; });

    // frame -> pedestrian -> position
    std::map<long, std::map<AgentId, Vec2>> scene;
    for (const Track* t : tracks)
        for (std::size_t k = 0; k < t->frames.size(); ++k) scene[t->frames[k]][t->pedestrian] = t->positions[k];

    const auto obs = static_cast<std::size_t>(cfg.t_obs);
    const auto pred = static_cast<std::size_t>(cfg.t_pred);

    // Pedestrians with a complete observation window starting at `frame`.
    const auto observed_window = [&](AgentId id, long frame, std::vector<Vec2>& out) {
        out.clear();
        for (std::size_t k = 0; k < obs; ++k) {
            const auto f = scene.find(frame + static_cast<long>(k));
            if (f == scene.end()) return false;
            const auto p = f->second.find(id);
            if (p == f->second.end()) return false;
            out.push_back(p->second);
        }
        return true;
    };

    EvalReport report;
    report.dataset = name;
    double ade_sum = 0.0;
    double fde_sum = 0.0;
    std::vector<Vec2> scratch;
    for (const Track* t : tracks) {
        const std::size_t n = t->frames.size();
        for (std::size_t s = 0; s + obs + pred <= n; ++s) {
            if (t->frames[s + obs + pred - 1] - t->frames[s] != static_cast<long>(obs + pred - 1)) continue;

            PredictionContext ctx;
            ctx.target = t->pedestrian;
            ctx.t_pred = cfg.t_pred;
            ctx.frame_period = cfg.frame_period;
            ctx.observed.assign(t->positions.begin() + static_cast<std::ptrdiff_t>(s),
                                t->positions.begin() + static_cast<std::ptrdiff_t>(s + obs));
            for (const auto& [id, p] : scene[t->frames[s]]) {
                if (id == t->pedestrian) continue;
                if (observed_window(id, t->frames[s], scratch)) ctx.neighbors.emplace(id, scratch);
            }
            const std::vector<Vec2> truth(t->positions.begin() + static_cast<std::ptrdiff_t>(s + obs),
                                          t->positions.begin() + static_cast<std::ptrdiff_t>(s + obs + pred));
            const std::vector<Vec2> guess = predictor(ctx);
            WindowError w{t->pedestrian, t->frames[s], ade(guess, truth), fde(guess, truth)};
            ade_sum += w.ade;
            fde_sum += w.fde;
            report.per_window.push_back(w);
        }
    }
    if (report.per_window.empty())
        throw std::runtime_error("evaluate: no window of " + std::to_string(obs + pred) + " contiguous frames");
    report.windows = report.per_window.size();
    report.ade = ade_sum / static_cast<double>(report.windows);
    report.fde = fde_sum / static_cast<double>(report.windows);

    // Group membership over every observation window of the scene.
    std::map<AgentId, std::pair<int, int>> membership;  // appearances, non-singleton
    for (const auto& [frame, present] : scene) {
        std::map<AgentId, TrackHistory> histories;
        for (const auto& [id, p] : present)
            if (observed_window(id, frame, scratch))
                histories.emplace(id, history_from_positions(scratch, static_cast<double>(frame) * cfg.frame_period,
                                                             cfg.frame_period));
        if (histories.empty()) continue;
        const GroupAssignment groups = infer_groups(histories, classifier, obs);
        for (const auto& [id, label] : groups.labels) {
            auto& m = membership[id];
            ++m.first;
            if (groups.groups[static_cast<std::size_t>(label)].size() > 1) ++m.second;
        }
    }
    std::size_t grouped = 0;
    for (const auto& [id, m] : membership) grouped += (2 * m.second > m.first) ? 1 : 0;
    report.group_percentage =
        membership.empty() ? 0.0 : static_cast<double>(grouped) / static_cast<double>(membership.size());
    return report;
}

void write_report(std::ostream& os, const EvalReport& r)
{
    os << std::fixed << std::setprecision(4);
    os << "dataset: " << r.dataset << '\n'
       << "windows: " << r.windows << '\n'
       << "ade_m: " << r.ade << '\n'
       << "fde_m: " << r.fde << '\n'
       << "group_percentage: " << r.group_percentage << '\n';
}

void write_window_csv(std::ostream& os, const EvalReport& r)
{
    os << "pedestrian,start_frame,ade,fde\n" << std::fixed << std::setprecision(6);
    for (const auto& w : r.per_window) os << w.pedestrian << ',' << w.start_frame << ',' << w.ade << ',' << w.fde << '\n';
}

}  // namespace crowdflow
