#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "birdpose/pipeline.hpp"

namespace birdpose {

// Cartesian product of the listed settings, each combination run `replicates` times.
struct GridBlock {
    std::vector<int> window_sizes{100};
    std::vector<double> lambda_vel{0.0};
    std::vector<bool> acceleration{false};  // true sets lambda_acc = lambda_vel
    std::vector<bool> median{false};
    std::vector<bool> common_size{false};
    int replicates = 1;
};

struct GridSpec {
    std::vector<GridBlock> blocks;
};

struct GridCell {
    int index = 0;  // position in enumeration order
    int window_size = 1;
    double lambda_vel = 0.0;
    bool acceleration = false;
    bool median = false;
    bool common_size = false;
    int replicate = 0;

    // `base` with this cell's window, temporal weights, median filter and size sharing.
    FitConfig apply(const FitConfig& base) const;
};

// Blocks in order; within a block window, lambda_vel, acceleration, median, common_size, replicate vary
// from slowest to fastest.
std::vector<GridCell> enumerate_grid(const GridSpec& spec);

// 66 runs: window 1 with and without the median filter, plus the 32 window-100 combinations of
// lambda_vel in {1e2, 1e3, 1e4, 1e5} x acc x med x size, each run twice.
GridSpec standard_grid();

// {"version": 1, "preset": "standard"} or {"version": 1, "blocks": [{"window": [...], "lambda_vel": [...],
// "acc": [...], "med": [...], "size": [...], "replicates": n}]}.
GridSpec grid_from_json(std::string_view text);

// Input of one replicate. With `truth` set, tracks are matched to ground truth as `eval` does; otherwise
// the dataset's own track truth is used.
struct GridInput {
    Dataset data;
    std::map<DetectionKey, TruthRecord> truth;
};

using GridData = std::function<GridInput(int replicate)>;

struct GridRow {
    GridCell cell;
    bool ok = false;
    double me_p = 0.0;
    double me_v = 0.0;
    std::string error;  // set when !ok
};

// Runs every cell on `threads` workers. A failing cell is recorded and the rest continue. Rows come back in
// enumeration order and do not depend on the thread count.
std::vector<GridRow> run_grid(const std::vector<GridCell>& cells, const SkeletonModel& model, const Camera& camera,
                              const FitConfig& base, const GridData& data, int threads = 1);

// CSV `window,lambda_vel,acc,med,size,replicate,me_p,me_v,status,error`, sorted by descending me_p
// (ties in enumeration order) with failed rows last.
std::string grid_table(const std::vector<GridRow>& rows);

}  // namespace birdpose
