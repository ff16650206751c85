#pragma once

#include "crowdflow/group_inference.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

namespace crowdflow::testing {

/// Six triads in a 20 x 10 m arena, each walking its own direction: two
/// lanes along x in opposite directions, two crossing along y and two
/// diagonals. Members walk abreast 0.7 m apart. Ids run 1..18, three per
/// triad in order.
inline std::map<AgentId, TrackHistory> six_triads(int samples = 9, double period = 0.4)
{
    struct Triad {
        Vec2 start;
        double heading;
        double speed;
    };
    const double pi = std::numbers::pi;
    const Triad triads[] = {
        {{3.0, 2.5}, 0.0, 1.3},        {{17.0, 7.5}, pi, 1.2},         {{8.0, 5.0}, pi / 2, 1.1},
        {{12.5, 5.0}, -pi / 2, 1.25},  {{16.5, 2.0}, 3 * pi / 4, 1.0}, {{3.5, 7.5}, -pi / 4, 1.15},
    };
    std::map<AgentId, TrackHistory> tracks;
    AgentId id = 1;
    for (const auto& t : triads) {
        const Vec2 dir(std::cos(t.heading), std::sin(t.heading));
        const Vec2 side(-dir.y(), dir.x());
        for (int m = -1; m <= 1; ++m, ++id) {
            std::vector<Vec2> positions;
            for (int k = 0; k < samples; ++k)
                positions.push_back(t.start + 0.7 * m * side + dir * (t.speed * period * k));
            tracks[id] = history_from_positions(positions, 0.0, period);
        }
    }
    return tracks;
}

/// Ten labeled pairs separated with a wide margin.
inline std::vector<LabeledPair> separable_pairs()
{
    return {
        {{0.05, 0.05, 0.6}, true},  {{0.10, 0.20, 1.0}, true},  {{0.00, 0.10, 0.8}, true},
        {{0.15, 0.00, 1.2}, true},  {{0.05, 0.30, 0.7}, true},  {{0.90, 1.20, 4.0}, false},
        {{1.20, 2.50, 6.0}, false}, {{0.60, 0.40, 5.0}, false}, {{0.30, 2.80, 3.5}, false},
        {{1.50, 0.10, 4.5}, false},
    };
}

}  // namespace crowdflow::testing
