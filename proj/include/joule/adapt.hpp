#pragma once

#include "joule/estimate.hpp"
#include "joule/solver.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace joule {

/// Smallest cell set (greedy over descending mass, ties to the lower cell id)
/// whose summed squared indicator mass reaches theta times the total.
/// theta = 0 returns the single heaviest cell when any mass is positive.
std::vector<int> mark_dorfler(std::span<const double> per_cell_mass, double theta);

struct AdaptRecord {
    int level = 0;
    int ndofs_phi = 0;
    int ndofs_u = 0;
    double estimator_total = 0.0;
    std::optional<double> error_x; // X-norm error when an exact solution is known
    int picard_iterations = 0;
    double gamma = 0.0; // shape regularity
    int num_cells = 0;
};

struct AdaptHistory {
    std::vector<AdaptRecord> levels;
    bool failed = false; // Picard did not converge at the last recorded level
    std::shared_ptr<const Mesh> final_mesh;
    std::optional<PicardState> final_state;
};

struct AdaptParams {
    double theta = 0.5;
    int max_levels = 10;
    double target_total = 0.0;
    int degree_phi = 1;
    int degree_u = 1;
    PicardOptions picard;
    /// When set, per-level meshes/solutions/estimator tables are dumped here.
    std::optional<std::string> dump_dir;
    /// Optional X-norm error callback (exact solutions in verification runs).
    std::function<double(const PicardState&)> error_x;
};

/// Solve / estimate / mark / refine until the estimator total drops below
/// target_total or max_levels is reached. Picard failure truncates the
/// history with the failed flag set.
AdaptHistory adaptive_solve(const ProblemData& data, const Mesh& initial_mesh,
                            const AdaptParams& params);

} // namespace joule
