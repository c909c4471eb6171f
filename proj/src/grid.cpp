#include "birdpose/grid.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "birdpose/io.hpp"

namespace birdpose {

using nlohmann::json;

FitConfig GridCell::apply(const FitConfig& base) const {
    FitConfig c = base;
    c.window_size = window_size;
    c.weights.lambda_vel = lambda_vel;
    c.weights.lambda_acc = acceleration ? lambda_vel : 0.0;
    c.use_median_filter = median;
    c.common_size = common_size;
    return c;
}

std::vector<GridCell> enumerate_grid(const GridSpec& spec) {
    std::vector<GridCell> cells;
    for (size_t b = 0; b < spec.blocks.size(); ++b) {
        const GridBlock& blk = spec.blocks[b];
        if (blk.replicates < 1) {
            throw Error(ErrorKind::Validation, "blocks[" + std::to_string(b) + "].replicates", "must be >= 1");
        }
        for (int w : blk.window_sizes) {
            if (w < 1) throw Error(ErrorKind::Validation, "blocks[" + std::to_string(b) + "].window", "must be >= 1");
            for (double lv : blk.lambda_vel) {
                if (!(lv >= 0.0)) {
                    throw Error(ErrorKind::Validation, "blocks[" + std::to_string(b) + "].lambda_vel", "must be >= 0");
                }
                for (bool acc : blk.acceleration) {
                    for (bool med : blk.median) {
                        for (bool size : blk.common_size) {
                            for (int r = 0; r < blk.replicates; ++r) {
                                cells.push_back({static_cast<int>(cells.size()), w, lv, acc, med, size, r});
                            }
                        }
                    }
                }
            }
        }
    }
    return cells;
}

GridSpec standard_grid() {
    GridBlock single;
    single.window_sizes = {1};
    single.lambda_vel = {0.0};
    single.median = {false, true};
    GridBlock temporal;
    temporal.window_sizes = {100};
    temporal.lambda_vel = {1e2, 1e3, 1e4, 1e5};
    temporal.acceleration = {false, true};
    temporal.median = {false, true};
    temporal.common_size = {false, true};
    temporal.replicates = 2;
    return {{single, temporal}};
}

GridSpec grid_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "grid", e.what());
    }
    try {
        if (!doc.is_object()) throw Error(ErrorKind::Parse, "grid", "expected an object");
        if (doc.value("version", kFormatVersion) != kFormatVersion) {
            throw Error(ErrorKind::Parse, "version", "grid spec version is not supported");
        }
        for (const auto& [k, v] : doc.items()) {
            if (k != "version" && k != "preset" && k != "blocks") throw Error(ErrorKind::Parse, k, "unknown key");
        }
        if (doc.contains("preset")) {
            if (doc.contains("blocks")) throw Error(ErrorKind::Parse, "preset", "give either preset or blocks");
            const auto preset = doc.at("preset").get<std::string>();
            if (preset != "standard") throw Error(ErrorKind::Parse, "preset", "unknown preset '" + preset + "'");
            return standard_grid();
        }
        GridSpec spec;
        const auto& blocks = doc.at("blocks");
        for (size_t i = 0; i < blocks.size(); ++i) {
            const auto& b = blocks.at(i);
            const std::string where = "blocks[" + std::to_string(i) + "]";
            for (const auto& [k, v] : b.items()) {
                if (k != "window" && k != "lambda_vel" && k != "acc" && k != "med" && k != "size" &&
                    k != "replicates") {
                    throw Error(ErrorKind::Parse, where + "." + k, "unknown key");
                }
            }
            GridBlock blk;
            if (b.contains("window")) blk.window_sizes = b.at("window").get<std::vector<int>>();
            if (b.contains("lambda_vel")) blk.lambda_vel = b.at("lambda_vel").get<std::vector<double>>();
            if (b.contains("acc")) blk.acceleration = b.at("acc").get<std::vector<bool>>();
            if (b.contains("med")) blk.median = b.at("med").get<std::vector<bool>>();
            if (b.contains("size")) blk.common_size = b.at("size").get<std::vector<bool>>();
            blk.replicates = b.value("replicates", 1);
            spec.blocks.push_back(std::move(blk));
        }
        enumerate_grid(spec);  // validates
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "grid", e.what());
    }
}

namespace {

GridRow run_cell(const GridCell& cell, const GridInput& input, const SkeletonModel& model, const Camera& camera,
                 const FitConfig& base) {
    GridRow row;
    row.cell = cell;
    const FitConfig cfg = cell.apply(base);
    const auto fits = fit_dataset(model, camera, input.data, cfg);
    MetricsReport rep;
    if (input.truth.empty()) {
        rep = evaluate_dataset(input.data, fits);
    } else {
        std::vector<FittedTrack> tracks;
        for (size_t i = 0; i < fits.size(); ++i) {
            tracks.push_back({fits[i].track_id, input.data.tracks[i].observations, fits[i].fit});
        }
        rep = evaluate_tracks(tracks, input.truth).report;
    }
    row.ok = true;
    row.me_p = rep.me_p;
    row.me_v = rep.me_v;
    return row;
}

std::string describe(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        return std::string(to_string(err->kind())) + " " + err->field() + ": " + err->message();
    }
    return e.what();
}

}  // namespace

std::vector<GridRow> run_grid(const std::vector<GridCell>& cells, const SkeletonModel& model, const Camera& camera,
                              const FitConfig& base, const GridData& data, int threads) {
    if (threads < 1) throw Error(ErrorKind::Validation, "threads", "threads must be >= 1");
    // Data per replicate, built once up front; a failure fails that replicate's cells.
    std::map<int, std::optional<GridInput>> inputs;
    std::map<int, std::string> input_errors;
    for (const auto& c : cells) {
        if (inputs.count(c.replicate)) continue;
        try {
            inputs[c.replicate] = data(c.replicate);
        } catch (const std::exception& e) {
            inputs[c.replicate] = std::nullopt;
            input_errors[c.replicate] = "data: " + describe(e);
        }
    }

    std::vector<GridRow> rows(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < cells.size(); i = next++) {
            const GridCell& c = cells[i];
            const auto& in = inputs.at(c.replicate);
            if (!in) {
                rows[i] = {c, false, 0.0, 0.0, input_errors.at(c.replicate)};
                continue;
            }
            try {
                rows[i] = run_cell(c, *in, model, camera, base);
            } catch (const std::exception& e) {
                rows[i] = {c, false, 0.0, 0.0, describe(e)};
            }
        }
    };
    const int n = std::min<int>(threads, static_cast<int>(cells.size()));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;
}

std::string grid_table(const std::vector<GridRow>& rows) {
    std::vector<const GridRow*> order;
    for (const auto& r : rows) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const GridRow* a, const GridRow* b) {
        if (a->ok != b->ok) return a->ok;
        if (a->ok && a->me_p != b->me_p) return a->me_p > b->me_p;
        return a->cell.index < b->cell.index;
    });
    std::ostringstream out;
    out << "window,lambda_vel,acc,med,size,replicate,me_p,me_v,status,error\n";
    for (const auto* r : order) {
        const GridCell& c = r->cell;
        std::string err = r->error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << c.window_size << ',' << format_double(c.lambda_vel) << ',' << c.acceleration << ',' << c.median << ','
            << c.common_size << ',' << c.replicate << ',';
        if (r->ok) {
            out << format_double(r->me_p) << ',' << format_double(r->me_v) << ",ok,\n";
        } else {
            out << ",,failed," << err << '\n';
        }
    }
    return out.str();
}

}  // namespace birdpose
