#include "birdpose/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace birdpose {

using nlohmann::json;

namespace {

Error parse_error(const fs::path& path, long line, const std::string& message) {
    return Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line), message);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

template <typename T>
T parse_number(const std::string& s, const fs::path& path, long line, std::string_view column) {
    T v{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || s.empty()) {
        throw parse_error(path, line, "bad " + std::string(column) + " value '" + s + "'");
    }
    return v;
}

// Reads a CSV with the exact header `header`; calls row(cells, line) for every non-empty line.
template <typename Fn>
void read_csv(const fs::path& path, const std::string& header, Fn&& row) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw parse_error(path, 1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw parse_error(path, 1, "expected header '" + header + "'");
    const size_t columns = split(header, ',').size();
    long n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != columns) {
            throw parse_error(path, n, "expected " + std::to_string(columns) + " columns, got " +
                                           std::to_string(cells.size()));
        }
        row(cells, n);
    }
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::Io, path.string(), "cannot open file for writing");
    return out;
}

void check_key_range(const fs::path& path, long line, int keypoint_id, int num_keypoints) {
    if (keypoint_id < 0 || keypoint_id >= num_keypoints) {
        throw parse_error(path, line,
                          "keypoint_id " + std::to_string(keypoint_id) + " outside [0, " +
                              std::to_string(num_keypoints) + ")");
    }
}

json bbox_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from(const json& j) {
    if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::Parse, "bbox", "expected [x0, y0, x1, y1]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json crop_json(const CropTransform& c) { return {{"scale", c.scale}, {"offset", {c.offset.x(), c.offset.y()}}}; }

CropTransform crop_from(const json& j) {
    CropTransform c;
    c.scale = j.at("scale").get<double>();
    const auto& o = j.at("offset");
    c.offset = {o.at(0).get<double>(), o.at(1).get<double>()};
    return c;
}

template <typename Matrix>
json rows_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

template <typename Matrix>
Matrix rows_from(const json& j, Eigen::Index cols, const std::string& field) {
    if (!j.is_array()) throw Error(ErrorKind::Parse, field, "expected an array of rows");
    Matrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != static_cast<size_t>(cols)) {
            throw Error(ErrorKind::Parse, field + "[" + std::to_string(i) + "]",
                        "expected " + std::to_string(cols) + " numbers");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = j[i][c].get<double>();
    }
    return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j, const std::string& field, Eigen::Index expected = -1) {
    const auto v = j.get<std::vector<double>>();
    if (expected >= 0 && static_cast<Eigen::Index>(v.size()) != expected) {
        throw Error(ErrorKind::Parse, field, "expected " + std::to_string(expected) + " numbers");
    }
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_version(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("version")) throw Error(ErrorKind::Parse, "version", what + " has no version");
    const int v = j.at("version").get<int>();
    if (v != kFormatVersion) {
        throw Error(ErrorKind::Parse, "version", what + " version " + std::to_string(v) + " is not supported");
    }
}

json parse_json(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string(), e.what());
    }
}

// Wraps nlohmann type and lookup errors in Parse errors.
template <typename Fn>
auto guarded(const fs::path& path, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string(), e.what());
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
    auto out = open_out(path, true);
    out << text;
    if (!out) throw Error(ErrorKind::Io, path.string(), "write failed");
}

std::map<DetectionKey, KeypointSet> read_keypoints_csv(const fs::path& path, int num_keypoints) {
    std::map<DetectionKey, KeypointSet> out;
    read_csv(path, "frame,bird_id,keypoint_id,x,y,confidence", [&](const std::vector<std::string>& c, long line) {
        const int frame = parse_number<int>(c[0], path, line, "frame");
        const int bird = parse_number<int>(c[1], path, line, "bird_id");
        const int k = parse_number<int>(c[2], path, line, "keypoint_id");
        check_key_range(path, line, k, num_keypoints);
        auto [it, fresh] = out.try_emplace({frame, bird});
        if (fresh) it->second = KeypointSet::Zero(num_keypoints, 3);
        const double conf = parse_number<double>(c[5], path, line, "confidence");
        if (!(conf >= 0.0 && conf <= 1.0)) throw parse_error(path, line, "confidence outside [0, 1]");
        it->second.row(k) << parse_number<double>(c[3], path, line, "x"), parse_number<double>(c[4], path, line, "y"),
            conf;
    });
    return out;
}

void write_keypoints_csv(const fs::path& path, const std::map<DetectionKey, KeypointSet>& keypoints) {
    auto out = open_out(path);
    out << "frame,bird_id,keypoint_id,x,y,confidence\n";
    for (const auto& [key, k] : keypoints) {
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
            out << key.first << ',' << key.second << ',' << i << ',' << format_double(k(i, 0)) << ','
                << format_double(k(i, 1)) << ',' << format_double(k(i, 2)) << '\n';
        }
    }
}

std::map<DetectionKey, TruthRecord> read_truth_csv(const fs::path& path, int num_keypoints) {
    std::map<DetectionKey, TruthRecord> out;
    read_csv(path, "frame,bird_id,keypoint_id,x,y,visible", [&](const std::vector<std::string>& c, long line) {
        const int frame = parse_number<int>(c[0], path, line, "frame");
        const int bird = parse_number<int>(c[1], path, line, "bird_id");
        const int k = parse_number<int>(c[2], path, line, "keypoint_id");
        check_key_range(path, line, k, num_keypoints);
        auto [it, fresh] = out.try_emplace({frame, bird});
        if (fresh) {
            it->second.keypoints = Points2::Zero(num_keypoints, 2);
            it->second.visible.assign(num_keypoints, false);  // rows not listed are invisible
        }
        const int vis = parse_number<int>(c[5], path, line, "visible");
        if (vis != 0 && vis != 1) throw parse_error(path, line, "visible must be 0 or 1");
        it->second.keypoints.row(k) << parse_number<double>(c[3], path, line, "x"),
            parse_number<double>(c[4], path, line, "y");
        it->second.visible[k] = vis == 1;
    });
    return out;
}

void write_truth_csv(const fs::path& path, const std::map<DetectionKey, TruthRecord>& truth) {
    auto out = open_out(path);
    out << "frame,bird_id,keypoint_id,x,y,visible\n";
    for (const auto& [key, t] : truth) {
        for (Eigen::Index i = 0; i < t.keypoints.rows(); ++i) {
            const bool vis = t.visible.empty() || t.visible[i];
            out << key.first << ',' << key.second << ',' << i << ',' << format_double(t.keypoints(i, 0)) << ','
                << format_double(t.keypoints(i, 1)) << ',' << (vis ? 1 : 0) << '\n';
        }
    }
}

std::vector<long> encode_rle(const BinaryMask& mask) {
    std::vector<long> runs;
    std::uint8_t current = 0;
    long run = 0;
    for (auto v : mask.data) {
        const std::uint8_t b = v ? 1 : 0;
        if (b != current) {
            runs.push_back(run);
            current = b;
            run = 0;
        }
        ++run;
    }
    runs.push_back(run);
    return runs;
}

BinaryMask decode_rle(int width, int height, const std::vector<long>& runs) {
    if (width <= 0 || height <= 0) throw Error(ErrorKind::Parse, "runs", "mask dimensions must be positive");
    BinaryMask m(width, height, 0);
    size_t pos = 0;
    std::uint8_t value = 0;
    for (long r : runs) {
        if (r < 0 || pos + static_cast<size_t>(r) > m.data.size()) {
            throw Error(ErrorKind::Parse, "runs", "run lengths exceed the mask size");
        }
        std::fill_n(m.data.begin() + static_cast<std::ptrdiff_t>(pos), r, value);
        pos += static_cast<size_t>(r);
        value ^= 1;
    }
    if (pos != m.data.size()) throw Error(ErrorKind::Parse, "runs", "run lengths do not cover the mask");
    return m;
}

std::map<DetectionKey, BinaryMask> read_masks_csv(const fs::path& path) {
    std::map<DetectionKey, BinaryMask> out;
    read_csv(path, "frame,bird_id,width,height,runs", [&](const std::vector<std::string>& c, long line) {
        const int frame = parse_number<int>(c[0], path, line, "frame");
        const int bird = parse_number<int>(c[1], path, line, "bird_id");
        const int w = parse_number<int>(c[2], path, line, "width");
        const int h = parse_number<int>(c[3], path, line, "height");
        std::vector<long> runs;
        for (const auto& r : split(c[4], ' ')) {
            if (!r.empty()) runs.push_back(parse_number<long>(r, path, line, "runs"));
        }
        try {
            if (!out.emplace(DetectionKey{frame, bird}, decode_rle(w, h, runs)).second) {
                throw parse_error(path, line, "duplicate mask for frame and bird");
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Parse && e.field() == "runs") throw parse_error(path, line, e.message());
            throw;
        }
    });
    return out;
}

void write_masks_csv(const fs::path& path, const std::map<DetectionKey, BinaryMask>& masks) {
    auto out = open_out(path);
    out << "frame,bird_id,width,height,runs\n";
    for (const auto& [key, m] : masks) {
        out << key.first << ',' << key.second << ',' << m.width << ',' << m.height << ',';
        const auto runs = encode_rle(m);
        for (size_t i = 0; i < runs.size(); ++i) out << (i ? " " : "") << runs[i];
        out << '\n';
    }
}

std::map<DetectionKey, BinaryMask> read_mask_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, dir.string(), "not a directory");
    static const std::regex name(R"(mask_(\d+)_(\d+)\.pgm)");
    std::map<DetectionKey, BinaryMask> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string file = entry.path().filename().string();
        if (!std::regex_match(file, m, name)) continue;
        GrayImage img = read_pgm(entry.path());
        for (auto& v : img.data) v = v ? 1 : 0;
        out.emplace(DetectionKey{std::stoi(m[1]), std::stoi(m[2])}, std::move(img));
    }
    return out;
}

namespace {

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
};

PnmHeader read_pnm_header(std::istream& in, const fs::path& path) {
    PnmHeader h;
    int maxval = 0;
    auto next = [&](auto& v) {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
            in >> std::ws;
        }
        in >> v;
    };
    next(h.magic);
    next(h.width);
    next(h.height);
    next(maxval);
    if (!in || (h.magic != "P5" && h.magic != "P6")) {
        throw Error(ErrorKind::Parse, path.string(), "not a binary PGM/PPM file");
    }
    if (h.width <= 0 || h.height <= 0 || maxval != 255) {
        throw Error(ErrorKind::Parse, path.string(), "unsupported dimensions or maxval (must be 255)");
    }
    in.get();  // single whitespace before the raster
    return h;
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
    const PnmHeader h = read_pnm_header(in, path);
    if (h.magic != "P5") throw Error(ErrorKind::Parse, path.string(), "expected a P5 (grayscale) image");
    GrayImage img(h.width, h.height);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!in) throw Error(ErrorKind::Parse, path.string(), "truncated raster");
    return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
    auto out = open_out(path, true);
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

RgbImage read_rgb(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
    const PnmHeader h = read_pnm_header(in, path);
    RgbImage img(h.width, h.height);
    if (h.magic == "P6") {
        in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    } else {
        std::vector<std::uint8_t> gray(static_cast<size_t>(h.width) * h.height);
        in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
        for (size_t i = 0; i < gray.size(); ++i) std::fill_n(img.data.begin() + 3 * i, 3, gray[i]);
    }
    if (!in) throw Error(ErrorKind::Parse, path.string(), "truncated raster");
    return img;
}

void write_ppm(const fs::path& path, const RgbImage& image) {
    auto out = open_out(path, true);
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

std::vector<Track> read_tracks_csv(const fs::path& path) {
    std::map<int, Track> by_id;
    read_csv(path, "track_id,frame,detection_id,x0,y0,x1,y1", [&](const std::vector<std::string>& c, long line) {
        const int id = parse_number<int>(c[0], path, line, "track_id");
        TrackEntry e;
        e.frame_index = parse_number<int>(c[1], path, line, "frame");
        e.detection = parse_number<int>(c[2], path, line, "detection_id");
        e.bbox = {parse_number<double>(c[3], path, line, "x0"), parse_number<double>(c[4], path, line, "y0"),
                  parse_number<double>(c[5], path, line, "x1"), parse_number<double>(c[6], path, line, "y1")};
        if (!e.bbox.well_ordered()) throw parse_error(path, line, "bbox is not well ordered");
        Track& t = by_id[id];
        t.track_id = id;
        if (!t.entries.empty() && t.entries.back().frame_index >= e.frame_index) {
            throw parse_error(path, line, "frames of a track must be strictly increasing");
        }
        t.entries.push_back(e);
    });
    std::vector<Track> out;
    for (auto& [id, t] : by_id) out.push_back(std::move(t));
    return out;
}

void write_tracks_csv(const fs::path& path, const std::vector<Track>& tracks) {
    auto out = open_out(path);
    out << "track_id,frame,detection_id,x0,y0,x1,y1\n";
    for (const auto& t : tracks) {
        for (const auto& e : t.entries) {
            out << t.track_id << ',' << e.frame_index << ',' << e.detection << ',' << format_double(e.bbox.x0) << ','
                << format_double(e.bbox.y0) << ',' << format_double(e.bbox.x1) << ',' << format_double(e.bbox.y1)
                << '\n';
        }
    }
}

std::vector<CroppedDetection> read_observations_json(const fs::path& path) {
    const json doc = parse_json(path);
    return guarded(path, [&] {
        check_version(doc, "observation file");
        std::vector<CroppedDetection> out;
        for (const auto& d : doc.at("detections")) {
            CroppedDetection c;
            c.detection_id = d.at("detection_id").get<int>();
            ObservationFrame& f = c.frame;
            f.frame_index = d.at("frame").get<int>();
            f.missing = d.value("missing", false);
            f.bbox = bbox_from(d.at("bbox"));
            f.crop = crop_from(d.at("crop"));
            f.keypoints = rows_from<KeypointSet>(d.at("keypoints"), 3, "keypoints");
            if (d.contains("mask") && !d.at("mask").is_null()) {
                const auto& m = d.at("mask");
                f.mask = decode_rle(m.at("width").get<int>(), m.at("height").get<int>(),
                                    m.at("runs").get<std::vector<long>>());
            }
            out.push_back(std::move(c));
        }
        return out;
    });
}

void write_observations_json(const fs::path& path, const std::vector<CroppedDetection>& detections) {
    json list = json::array();
    for (const auto& c : detections) {
        const ObservationFrame& f = c.frame;
        json d = {{"frame", f.frame_index},
                  {"detection_id", c.detection_id},
                  {"missing", f.missing},
                  {"bbox", bbox_json(f.bbox)},
                  {"crop", crop_json(f.crop)},
                  {"keypoints", rows_json(f.keypoints)}};
        if (f.mask.empty()) {
            d["mask"] = nullptr;
        } else {
            d["mask"] = {{"width", f.mask.width}, {"height", f.mask.height}, {"runs", encode_rle(f.mask)}};
        }
        list.push_back(std::move(d));
    }
    const json doc = {{"version", kFormatVersion}, {"detections", std::move(list)}};
    write_text(path, doc.dump(1) + "\n");
}

std::vector<FittedTrack> read_fit_json(const fs::path& path, const SkeletonModel& model) {
    const json doc = parse_json(path);
    return guarded(path, [&] {
        check_version(doc, "fit file");
        std::vector<FittedTrack> out;
        for (const auto& t : doc.at("tracks")) {
            FittedTrack ft;
            ft.track_id = t.at("track_id").get<int>();
            for (const auto& fr : t.at("frames")) {
                ObservationFrame f;
                f.frame_index = fr.at("frame").get<int>();
                f.missing = fr.at("missing").get<bool>();
                f.bbox = bbox_from(fr.at("bbox"));
                f.crop = crop_from(fr.at("crop"));
                f.keypoints = rows_from<KeypointSet>(fr.at("observed"), 3, "observed");
                ft.observations.push_back(std::move(f));

                PoseParams p;
                p.kappa = vector_from(fr.at("kappa"), "kappa", 2);
                p.sigma = fr.at("sigma").get<double>();
                p.theta_g = vector_from(fr.at("theta_g"), "theta_g", 3);
                p.theta_p = vector_from(fr.at("theta_p"), "theta_p");
                check_pose(model, p);
                ft.fit.poses.push_back(std::move(p));
                ft.fit.projected_keypoints.push_back(rows_from<Points2>(fr.at("projected"), 2, "projected"));
            }
            for (const auto& w : t.at("windows")) {
                WindowDiagnostics d;
                d.first = w.at("first").get<int>();
                d.frames = w.at("frames").get<int>();
                d.initial_loss = w.at("initial_loss").get<double>();
                d.final_loss = w.at("final_loss").get<double>();
                ft.fit.windows.push_back(std::move(d));
            }
            out.push_back(std::move(ft));
        }
        return out;
    });
}

void write_fit_json(const fs::path& path, const std::vector<FittedTrack>& tracks) {
    json list = json::array();
    for (const auto& t : tracks) {
        if (t.observations.size() != t.fit.poses.size() || t.fit.poses.size() != t.fit.projected_keypoints.size()) {
            throw Error(ErrorKind::DimensionMismatch, "track " + std::to_string(t.track_id),
                        "observations, poses and projections differ in length");
        }
        json frames = json::array();
        for (size_t i = 0; i < t.observations.size(); ++i) {
            const ObservationFrame& f = t.observations[i];
            const PoseParams& p = t.fit.poses[i];
            Points2 image = t.fit.projected_keypoints[i];
            for (Eigen::Index k = 0; k < image.rows(); ++k) {
                image.row(k) = f.crop.invert(image.row(k).transpose()).transpose();
            }
            frames.push_back({{"frame", f.frame_index},
                              {"missing", f.missing},
                              {"bbox", bbox_json(f.bbox)},
                              {"crop", crop_json(f.crop)},
                              {"kappa", {p.kappa.x(), p.kappa.y()}},
                              {"sigma", p.sigma},
                              {"theta_g", {p.theta_g.x(), p.theta_g.y(), p.theta_g.z()}},
                              {"theta_p", vector_json(p.theta_p)},
                              {"observed", rows_json(f.keypoints)},
                              {"projected", rows_json(t.fit.projected_keypoints[i])},
                              {"image_keypoints", rows_json(image)}});
        }
        json windows = json::array();
        for (const auto& w : t.fit.windows) {
            windows.push_back({{"first", w.first},
                               {"frames", w.frames},
                               {"initial_loss", w.initial_loss},
                               {"final_loss", w.final_loss}});
        }
        list.push_back({{"track_id", t.track_id}, {"frames", std::move(frames)}, {"windows", std::move(windows)}});
    }
    const json doc = {{"version", kFormatVersion}, {"tracks", std::move(list)}};
    write_text(path, doc.dump(1) + "\n");
}

std::string model_to_json(const SkeletonModel& model) {
    json joints = json::array();
    for (int j = 0; j < model.num_joints(); ++j) {
        const auto& o = model.rest_offsets[j];
        joints.push_back({{"name", model.joints[j].name},
                          {"parent", model.joints[j].parent},
                          {"rest_offset", {o.x(), o.y(), o.z()}},
                          {"bone_radius", model.bone_radii[j]}});
    }
    json keypoints = json::array();
    for (const auto& k : model.keypoints) {
        keypoints.push_back(
            {{"name", k.name}, {"joint", k.joint}, {"offset", {k.offset.x(), k.offset.y(), k.offset.z()}}});
    }
    json cov = json::array();
    for (Eigen::Index i = 0; i < model.pose_prior_cov_inv.rows(); ++i) {
        cov.push_back(vector_json(model.pose_prior_cov_inv.row(i).transpose()));
    }
    const json doc = {{"version", kFormatVersion},
                      {"joints", std::move(joints)},
                      {"keypoints", std::move(keypoints)},
                      {"pose_prior_mean", vector_json(model.pose_prior_mean)},
                      {"pose_prior_cov_inv", std::move(cov)}};
    return doc.dump(1) + "\n";
}

SkeletonModel model_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "model", e.what());
    }
    SkeletonModel m;
    try {
        check_version(doc, "model");
        for (const auto& j : doc.at("joints")) {
            m.joints.push_back({j.at("name").get<std::string>(), j.at("parent").get<int>()});
            m.rest_offsets.push_back(vector_from(j.at("rest_offset"), "rest_offset", 3));
            m.bone_radii.push_back(j.at("bone_radius").get<double>());
        }
        for (const auto& k : doc.at("keypoints")) {
            KeypointAttachment a;
            a.name = k.at("name").get<std::string>();
            a.joint = k.at("joint").get<int>();
            a.offset = vector_from(k.at("offset"), "offset", 3);
            m.keypoints.push_back(std::move(a));
        }
        m.pose_prior_mean = vector_from(doc.at("pose_prior_mean"), "pose_prior_mean");
        const auto& cov = doc.at("pose_prior_cov_inv");
        const auto n = static_cast<Eigen::Index>(cov.size());
        m.pose_prior_cov_inv.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd row = vector_from(cov.at(i), "pose_prior_cov_inv", n);
            m.pose_prior_cov_inv.row(i) = row.transpose();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "model", e.what());
    }
    m.validate();
    return m;
}

SkeletonModel load_model(const fs::path& path) {
    try {
        return model_from_json(read_text(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        throw Error(e.kind(), path.string() + ":" + e.field(), e.message());
    }
}

void save_model(const fs::path& path, const SkeletonModel& model) { write_text(path, model_to_json(model)); }

std::string metrics_csv(const MetricsReport& report, const std::vector<int>& birds, const std::vector<int>& frames) {
    if (birds.size() != report.tracks.size() || frames.size() != report.tracks.size()) {
        throw Error(ErrorKind::DimensionMismatch, "birds", "one bird id and frame count per track expected");
    }
    std::ostringstream out;
    out << "track_id,bird_id,frames,position_count,velocity_count,me_p,me_v\n";
    long frames_total = 0, pos = 0, vel = 0;
    for (size_t i = 0; i < report.tracks.size(); ++i) {
        const auto& t = report.tracks[i];
        out << t.track_id << ',' << birds[i] << ',' << frames[i] << ',' << t.position_count << ',' << t.velocity_count
            << ',' << format_double(t.me_p) << ',' << format_double(t.me_v) << '\n';
        frames_total += frames[i];
        pos += t.position_count;
        vel += t.velocity_count;
    }
    out << "all,," << frames_total << ',' << pos << ',' << vel << ',' << format_double(report.me_p) << ','
        << format_double(report.me_v) << '\n';
    return out.str();
}

}  // namespace birdpose
