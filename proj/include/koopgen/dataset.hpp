#pragma once

#include <optional>

#include "koopgen/common.hpp"

namespace koopgen {

// One training sample in observation space. Trajectory provenance
// (traj_id, step_idx) lets finite-difference stencils find neighbors.
struct Sample {
    Vector x;
    Vector u;
    std::optional<Vector> xdot;
    std::optional<Vector> xnext;
    int traj_id = 0;
    int step_idx = 0;
};

struct TrajectoryDataset {
    std::vector<Sample> samples;
    double dt = 0.0;  // hold interval / snapshot spacing; 0 if pairs absent
    Box input_box;
    std::string source;  // plant/input metadata, free-form

    int state_dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].x.size()); }
    int input_dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].u.size()); }
    bool has_derivatives() const;
    bool has_pairs() const;

    // Enforces the invariants: nonempty, each sample carries xdot or xnext,
    // consistent dimensions, dt > 0 when pairs are present, inputs in box.
    void validate() const;
};

}  // namespace koopgen
