#pragma once

#include "crowdflow/flow_planner.hpp"
#include "crowdflow/group_inference.hpp"
#include "crowdflow/world.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdflow {

struct Track {
    AgentId pedestrian = 0;
    std::vector<long> frames;  // uniform index grid, strictly increasing
    std::vector<Vec2> positions;
};

/// Reads whitespace-separated "frame_id ped_id x y" rows. Frame ids are
/// mapped onto a uniform index grid using the dataset's frame step (the
/// gcd of all frame differences). Tracks come back sorted by pedestrian id.
/// Throws std::runtime_error naming the file and line for malformed rows
/// and duplicate (frame, pedestrian) pairs.
std::vector<Track> load_dataset(std::istream& is, const std::string& name = "<stream>");
std::vector<Track> load_dataset(const std::filesystem::path& path);

/// Mean L2 error over time steps. Throws std::invalid_argument on a length
/// mismatch or empty input.
template <typename Scalar>
Scalar ade(std::span<const Vec2T<Scalar>> pred, std::span<const Vec2T<Scalar>> truth)
{
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("ade: prediction and truth must have the same non-zero length");
    Scalar sum(0);
    for (std::size_t t = 0; t < pred.size(); ++t) sum += (pred[t] - truth[t]).norm();
    return sum / static_cast<Scalar>(pred.size());
}

/// L2 error at the final time step.
template <typename Scalar>
Scalar fde(std::span<const Vec2T<Scalar>> pred, std::span<const Vec2T<Scalar>> truth)
{
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("fde: prediction and truth must have the same non-zero length");
    return (pred.back() - truth.back()).norm();
}

inline double ade(const std::vector<Vec2>& pred, const std::vector<Vec2>& truth)
{
    return ade<double>(std::span<const Vec2>(pred), std::span<const Vec2>(truth));
}
inline double fde(const std::vector<Vec2>& pred, const std::vector<Vec2>& truth)
{
    return fde<double>(std::span<const Vec2>(pred), std::span<const Vec2>(truth));
}

/// Least-squares straight-line fit of x(t) and y(t) over the observed frames
/// (t = 0, 1, ...), extrapolated over the next `t_pred` frames.
std::vector<Vec2> linear_baseline(std::span<const Vec2> observed, int t_pred);

struct EvalConfig {
    int t_obs = 8;
    int t_pred = 8;
    double frame_period = 0.4;  // s

    void validate() const;
};

/// What a predictor sees for one window.
struct PredictionContext {
    AgentId target = 0;
    std::vector<Vec2> observed;                          // t_obs positions
    std::map<AgentId, std::vector<Vec2>> neighbors;      // full observed windows only
    int t_pred = 8;
    double frame_period = 0.4;
};

using Predictor = std::function<std::vector<Vec2>(const PredictionContext&)>;

Predictor make_linear_predictor();

/// Treats the target as the navigating agent: its goal is the end of its
/// own straight-line extrapolation, and each predicted frame steps toward a
/// flow-joining waypoint at the target's observed mean speed. Neighbors are
/// extrapolated linearly over the prediction horizon.
Predictor make_flow_predictor(const LinearClassifier& classifier = {}, const FlowSelectionParams& selection = {},
                              double lookahead = 3.0);

struct WindowError {
    AgentId pedestrian = 0;
    long start_frame = 0;
    double ade = 0.0;
    double fde = 0.0;
};

struct EvalReport {
    std::string dataset;
    double ade = 0.0;
    double fde = 0.0;
    std::size_t windows = 0;
    double group_percentage = 0.0;  // fraction in [0, 1]
    std::vector<WindowError> per_window;
};

/// Slides over every pedestrian window of t_obs + t_pred contiguous frames,
/// averaging ADE/FDE over windows in (pedestrian, start frame) order. A
/// pedestrian counts as grouped when the classifier places it in a
/// non-singleton group in more than half of the observation windows in
/// which it appears. Throws std::runtime_error when no window exists.
EvalReport evaluate(std::span<const Track> tracks, const Predictor& predictor, const EvalConfig& cfg,
                    const LinearClassifier& classifier = {}, const std::string& name = {});

/// Key: value lines, per-window CSV "pedestrian,start_frame,ade,fde".
void write_report(std::ostream& os, const EvalReport& r);
void write_window_csv(std::ostream& os, const EvalReport& r);

}  // namespace crowdflow
