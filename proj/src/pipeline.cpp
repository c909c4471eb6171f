#include "birdpose/pipeline.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace birdpose {

TrackData track_from_synthetic(const SyntheticSequence& seq, int track_id, const CropOptions& crop) {
    TrackData tr;
    tr.track_id = track_id;
    for (size_t t = 0; t < seq.poses.size(); ++t) {
        if (seq.missing[t]) {
            ObservationFrame f;
            f.frame_index = static_cast<int>(t);
            f.keypoints = seq.keypoints[t];
            f.missing = true;
            // Without a mask there is no crop; keep the previous frame's so keypoints stay comparable.
            if (!tr.observations.empty()) {
                f.crop = tr.observations.back().crop;
                f.bbox = tr.observations.back().bbox;
            }
            for (Eigen::Index i = 0; i < f.keypoints.rows(); ++i) {
                const Eigen::Vector2d p = f.crop.apply(f.keypoints.row(i).head<2>().transpose());
                f.keypoints(i, 0) = p.x();
                f.keypoints(i, 1) = p.y();
            }
            tr.observations.push_back(std::move(f));
        } else {
            tr.observations.push_back(
                normalize_crop(seq.bboxes[t], seq.masks[t], seq.keypoints[t], static_cast<int>(t), crop).frame);
        }
        tr.truth.push_back(seq.truth[t]);
        tr.visible.emplace_back();
    }
    return tr;
}

std::vector<Points2> image_keypoints(const FitResult& fit, std::span<const ObservationFrame> observations) {
    if (fit.projected_keypoints.size() != observations.size()) {
        throw Error(ErrorKind::DimensionMismatch, "observations",
                    std::to_string(fit.projected_keypoints.size()) + " fitted frames vs " +
                        std::to_string(observations.size()) + " observations");
    }
    std::vector<Points2> out;
    out.reserve(observations.size());
    for (size_t t = 0; t < observations.size(); ++t) {
        Points2 p = fit.projected_keypoints[t];
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            p.row(i) = observations[t].crop.invert(p.row(i).transpose()).transpose();
        }
        out.push_back(std::move(p));
    }
    return out;
}

TrackSeries series_for(const TrackData& track, const FitResult& fit) {
    TrackSeries s;
    s.track_id = track.track_id;
    s.projected = image_keypoints(fit, track.observations);
    s.truth = track.truth;
    s.visible = track.visible;
    for (const auto& o : track.observations) s.bboxes.push_back(o.bbox);
    if (s.visible.empty()) s.visible.resize(track.observations.size());
    for (size_t t = 0; t < track.observations.size(); ++t) {
        if (track.observations[t].missing) s.visible[t] = Visibility(s.projected[t].rows(), false);
    }
    return s;
}

std::vector<TrackFit> fit_dataset(const SkeletonModel& model, const Camera& camera, const Dataset& data,
                                  const FitConfig& config) {
    std::vector<TrackFit> out;
    for (const auto& tr : data.tracks) out.push_back({tr.track_id, fit_track(model, camera, tr.observations, config)});
    return out;
}

MetricsReport evaluate_dataset(const Dataset& data, const std::vector<TrackFit>& fits) {
    if (fits.size() != data.tracks.size()) {
        throw Error(ErrorKind::DimensionMismatch, "fits", "one fit per track expected");
    }
    std::vector<TrackSeries> series;
    for (size_t i = 0; i < fits.size(); ++i) {
        if (data.tracks[i].truth.empty()) continue;
        series.push_back(series_for(data.tracks[i], fits[i].fit));
    }
    if (series.empty()) throw Error(ErrorKind::InvalidArgument, "truth", "no track carries ground truth");
    return evaluate(series);
}

Dataset synthetic_dataset(const SkeletonModel& model, const SynthConfig& config, std::uint64_t seed,
                          const CropOptions& crop) {
    Dataset d;
    const auto birds = generate_scene(model, config, seed);
    for (size_t b = 0; b < birds.size(); ++b) d.tracks.push_back(track_from_synthetic(birds[b], static_cast<int>(b), crop));
    return d;
}

std::vector<CroppedDetection> preprocess_detections(const std::map<DetectionKey, KeypointSet>& keypoints,
                                                    const std::map<DetectionKey, BinaryMask>& masks,
                                                    const CropOptions& options, std::vector<DetectionKey>* skipped) {
    options.validate();
    std::vector<CroppedDetection> out;
    auto skip = [&](const DetectionKey& k) {
        if (skipped) skipped->push_back(k);
    };
    for (const auto& [key, kp] : keypoints) {
        const auto m = masks.find(key);
        const auto box = m == masks.end() ? std::nullopt : mask_bbox(m->second);
        if (!box) {
            skip(key);
            continue;
        }
        out.push_back({key.second, normalize_crop(*box, m->second, kp, key.first, options).frame});
    }
    for (const auto& [key, m] : masks) {
        if (!keypoints.count(key)) skip(key);
    }
    return out;
}

std::vector<Track> track_detections(const std::vector<CroppedDetection>& detections, TrackerOptions options) {
    std::map<int, std::vector<const CroppedDetection*>> by_frame;
    for (const auto& d : detections) by_frame[d.frame.frame_index].push_back(&d);
    Tracker tracker(options);
    for (auto& [frame, list] : by_frame) {
        std::sort(list.begin(), list.end(),
                  [](const CroppedDetection* a, const CroppedDetection* b) { return a->detection_id < b->detection_id; });
        std::vector<BBox> boxes;
        for (const auto* d : list) boxes.push_back(d->frame.bbox);
        tracker.associate(frame, boxes);
    }
    // The tracker records positions within the frame; swap in detection ids.
    std::vector<Track> tracks = tracker.tracks();
    for (auto& t : tracks) {
        for (auto& e : t.entries) e.detection = by_frame.at(e.frame_index)[e.detection]->detection_id;
    }
    return tracks;
}

std::vector<TrackData> assemble_tracks(const std::vector<Track>& tracks,
                                       const std::vector<CroppedDetection>& detections, int num_keypoints) {
    std::map<DetectionKey, const CroppedDetection*> index;
    for (const auto& d : detections) index[{d.frame.frame_index, d.detection_id}] = &d;
    std::vector<TrackData> out;
    for (const auto& t : tracks) {
        if (t.entries.empty()) continue;
        TrackData td;
        td.track_id = t.track_id;
        size_t next = 0;
        for (int f = t.entries.front().frame_index; f <= t.entries.back().frame_index; ++f) {
            if (next < t.entries.size() && t.entries[next].frame_index == f) {
                const auto& e = t.entries[next++];
                const auto it = index.find({f, e.detection});
                if (it == index.end()) {
                    throw Error(ErrorKind::InvalidArgument, "track " + std::to_string(t.track_id),
                                "no detection " + std::to_string(e.detection) + " in frame " + std::to_string(f));
                }
                if (it->second->frame.keypoints.rows() != num_keypoints) {
                    throw Error(ErrorKind::DimensionMismatch, "keypoints",
                                "detection has " + std::to_string(it->second->frame.keypoints.rows()) +
                                    " keypoints, model has " + std::to_string(num_keypoints));
                }
                td.observations.push_back(it->second->frame);
            } else {
                ObservationFrame m;
                m.frame_index = f;
                m.missing = true;
                m.keypoints = KeypointSet::Zero(num_keypoints, 3);
                m.crop = td.observations.back().crop;
                m.bbox = td.observations.back().bbox;
                td.observations.push_back(std::move(m));
            }
        }
        out.push_back(std::move(td));
    }
    return out;
}

std::optional<TruthMatch> match_truth(const FittedTrack& track, const std::map<DetectionKey, TruthRecord>& truth) {
    const std::vector<Points2> projected = image_keypoints(track.fit, track.observations);
    std::set<int> birds;
    for (const auto& o : track.observations) {
        for (auto it = truth.lower_bound({o.frame_index, INT32_MIN});
             it != truth.end() && it->first.first == o.frame_index; ++it) {
            birds.insert(it->first.second);
        }
    }
    std::optional<TruthMatch> best;
    double best_err = 0.0;
    for (int bird : birds) {
        TrackSeries s;
        s.track_id = track.track_id;
        s.projected = projected;
        for (size_t t = 0; t < track.observations.size(); ++t) {
            const auto& o = track.observations[t];
            const Eigen::Index k = projected[t].rows();
            s.bboxes.push_back(o.bbox);
            const auto it = truth.find({o.frame_index, bird});
            if (it == truth.end() || o.missing) {
                s.truth.push_back(it == truth.end() ? Points2(Points2::Zero(k, 2)) : it->second.keypoints);
                s.visible.emplace_back(k, false);
                continue;
            }
            if (it->second.keypoints.rows() != k) {
                throw Error(ErrorKind::DimensionMismatch, "truth",
                            "ground truth has " + std::to_string(it->second.keypoints.rows()) + " keypoints, fit has " +
                                std::to_string(k));
            }
            s.truth.push_back(it->second.keypoints);
            s.visible.push_back(it->second.visible.empty() ? Visibility(k, true) : it->second.visible);
        }
        const ErrorSum e = position_errors(s.projected, s.truth, s.bboxes, s.visible);
        if (e.count == 0) continue;
        const double err = e.rms();
        if (!best || err < best_err) {
            best_err = err;
            best = TruthMatch{bird, std::move(s)};
        }
    }
    return best;
}

EvaluationResult evaluate_tracks(const std::vector<FittedTrack>& tracks,
                                 const std::map<DetectionKey, TruthRecord>& truth) {
    EvaluationResult res;
    std::vector<TrackSeries> series;
    for (const auto& t : tracks) {
        auto m = match_truth(t, truth);
        if (!m) continue;
        res.birds.push_back(m->bird_id);
        res.frames.push_back(static_cast<int>(t.observations.size()));
        series.push_back(std::move(m->series));
    }
    if (series.empty()) throw Error(ErrorKind::InvalidArgument, "truth", "no track matches any ground-truth bird");
    res.report = evaluate(series);
    return res;
}

}  // namespace birdpose
