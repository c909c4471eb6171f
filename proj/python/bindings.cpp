#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "birdpose/config.hpp"
#include "birdpose/grid.hpp"
#include "birdpose/io.hpp"
#include "birdpose/render.hpp"

namespace py = pybind11;
using namespace birdpose;

namespace {

PyObject* g_error = nullptr;

template <typename T>
py::array_t<T> grid_to_array(const Grid<T>& g) {
    py::array_t<T> a({g.height, g.width});
    std::copy(g.data.begin(), g.data.end(), a.mutable_data());
    return a;
}

BinaryMask mask_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.size() == 0) return {};
    if (a.ndim() != 2) throw Error(ErrorKind::DimensionMismatch, "mask", "expected a 2D array");
    BinaryMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = a.data()[i] != 0;
    return m;
}

GrayImage gray_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw Error(ErrorKind::DimensionMismatch, "image", "expected a 2D array");
    GrayImage g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), g.data.begin());
    return g;
}

py::array_t<std::uint8_t> rgb_to_array(const RgbImage& im) {
    py::array_t<std::uint8_t> a({im.height, im.width, 3});
    std::copy(im.data.begin(), im.data.end(), a.mutable_data());
    return a;
}

RgbImage rgb_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw Error(ErrorKind::DimensionMismatch, "image", "expected H x W x 3");
    RgbImage im(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), im.data.begin());
    return im;
}

std::string bbox_repr(const BBox& b) {
    return "BBox(" + format_double(b.x0) + ", " + format_double(b.y0) + ", " + format_double(b.x1) + ", " +
           format_double(b.y1) + ")";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bird pose estimation: skeleton model, soft silhouettes, fitting and evaluation";

    g_error = PyErr_NewException("birdpose._core.BirdposeError", PyExc_ValueError, nullptr);
    m.attr("BirdposeError") = py::handle(g_error);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::handle(g_error)(e.what());
            err.attr("kind") = std::string(to_string(e.kind()));
            err.attr("field") = e.field();
            err.attr("message") = e.message();
            PyErr_SetObject(g_error, err.ptr());
        }
    });
    m.attr("FORMAT_VERSION") = kFormatVersion;
    m.attr("DEFAULT_SHARPNESS") = kDefaultSharpness;

    py::class_<BBox>(m, "BBox")
        .def(py::init<>())
        .def(py::init([](double x0, double y0, double x1, double y1) { return BBox{x0, y0, x1, y1}; }), py::arg("x0"),
             py::arg("y0"), py::arg("x1"), py::arg("y1"))
        .def_readwrite("x0", &BBox::x0)
        .def_readwrite("y0", &BBox::y0)
        .def_readwrite("x1", &BBox::x1)
        .def_readwrite("y1", &BBox::y1)
        .def_property_readonly("width", &BBox::width)
        .def_property_readonly("height", &BBox::height)
        .def("__eq__", [](const BBox& a, const BBox& b) { return a == b; })
        .def("__repr__", &bbox_repr);

    py::class_<SkeletonModel>(m, "SkeletonModel")
        .def_property_readonly("num_joints", &SkeletonModel::num_joints)
        .def_property_readonly("num_keypoints", &SkeletonModel::num_keypoints)
        .def_property_readonly("pose_dim", &SkeletonModel::pose_dim)
        .def_property_readonly("joint_names",
                               [](const SkeletonModel& s) {
                                   std::vector<std::string> n;
                                   for (const auto& j : s.joints) n.push_back(j.name);
                                   return n;
                               })
        .def_property_readonly("parents",
                               [](const SkeletonModel& s) {
                                   std::vector<int> p;
                                   for (const auto& j : s.joints) p.push_back(j.parent);
                                   return p;
                               })
        .def_property_readonly("keypoint_names",
                               [](const SkeletonModel& s) {
                                   std::vector<std::string> n;
                                   for (const auto& k : s.keypoints) n.push_back(k.name);
                                   return n;
                               })
        .def_readonly("pose_prior_mean", &SkeletonModel::pose_prior_mean)
        .def("validate", &SkeletonModel::validate)
        .def("to_json", &model_to_json);
    m.def("default_bird_model", &default_bird_model);
    m.def("model_from_json", &model_from_json, py::arg("text"));
    m.def("load_model", [](const fs::path& p) { return load_model(p); }, py::arg("path"));

    py::class_<Camera>(m, "Camera")
        .def(py::init<>())
        .def_readwrite("focal", &Camera::focal)
        .def_readwrite("principal", &Camera::principal)
        .def_readwrite("fixed_depth", &Camera::fixed_depth)
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def("validate", &Camera::validate);

    py::class_<PoseParams>(m, "PoseParams")
        .def(py::init<>())
        .def_static("rest", &PoseParams::rest, py::arg("model"))
        .def_static("unflatten", &PoseParams::unflatten, py::arg("flat"))
        .def_readwrite("kappa", &PoseParams::kappa)
        .def_readwrite("sigma", &PoseParams::sigma)
        .def_readwrite("theta_g", &PoseParams::theta_g)
        .def_readwrite("theta_p", &PoseParams::theta_p)
        .def("flatten", &PoseParams::flatten)
        .def("__eq__", [](const PoseParams& a, const PoseParams& b) { return a == b; });

    py::class_<Kinematics>(m, "Kinematics")
        .def_readonly("joints", &Kinematics::joints)
        .def_readonly("keypoints", &Kinematics::keypoints);
    m.def("forward_kinematics", &forward_kinematics, py::arg("model"), py::arg("pose"));
    m.def("project", &project, py::arg("camera"), py::arg("points"));
    m.def("check_pose", &check_pose, py::arg("model"), py::arg("pose"));

    m.def(
        "render_soft_silhouette",
        [](const SkeletonModel& model, const PoseParams& pose, const Camera& cam, double sharpness) {
            return grid_to_array(render_soft_silhouette(model, pose, cam, sharpness));
        },
        py::arg("model"), py::arg("pose"), py::arg("camera") = Camera{}, py::arg("sharpness") = kDefaultSharpness,
        "Soft silhouette as an H x W float array in [0, 1].");

    py::class_<CropTransform>(m, "CropTransform")
        .def(py::init<>())
        .def_readwrite("scale", &CropTransform::scale)
        .def_readwrite("offset", &CropTransform::offset)
        .def("apply", &CropTransform::apply)
        .def("invert", &CropTransform::invert);

    py::class_<ObservationFrame>(m, "ObservationFrame")
        .def(py::init<>())
        .def_readwrite("frame_index", &ObservationFrame::frame_index)
        .def_readwrite("keypoints", &ObservationFrame::keypoints)
        .def_property(
            "mask", [](const ObservationFrame& o) { return grid_to_array(o.mask); },
            [](ObservationFrame& o, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
                o.mask = mask_from_array(a);
            })
        .def_readwrite("bbox", &ObservationFrame::bbox)
        .def_readwrite("crop", &ObservationFrame::crop)
        .def_readwrite("missing", &ObservationFrame::missing)
        .def("validate", &ObservationFrame::validate, py::arg("crop_width") = kCropSize,
             py::arg("crop_height") = kCropSize);

    py::class_<CropOptions>(m, "CropOptions")
        .def(py::init<>())
        .def_readwrite("pad", &CropOptions::pad)
        .def_readwrite("dilation", &CropOptions::dilation)
        .def_readwrite("crop_size", &CropOptions::crop_size);
    m.def(
        "normalize_crop",
        [](const BBox& bbox, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask,
           const KeypointSet& keypoints, int frame_index, const CropOptions& options) {
            return normalize_crop(bbox, mask_from_array(mask), keypoints, frame_index, options).frame;
        },
        py::arg("bbox"), py::arg("mask"), py::arg("keypoints"), py::arg("frame_index") = 0,
        py::arg("options") = CropOptions{}, "Crop one detection into the normalized observation space.");
    m.def(
        "weighted_median_filter",
        [](const std::vector<KeypointSet>& track, int window) { return weighted_median_filter(track, window); },
        py::arg("track"), py::arg("window") = 5);
    m.def(
        "mask_bbox",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask) {
            return mask_bbox(mask_from_array(mask));
        },
        py::arg("mask"));

    py::class_<TrackerOptions>(m, "TrackerOptions")
        .def(py::init<>())
        .def_readwrite("iou_threshold", &TrackerOptions::iou_threshold)
        .def_readwrite("memory", &TrackerOptions::memory);
    py::class_<TrackEntry>(m, "TrackEntry")
        .def_readonly("frame_index", &TrackEntry::frame_index)
        .def_readonly("bbox", &TrackEntry::bbox)
        .def_readonly("detection", &TrackEntry::detection);
    py::class_<Track>(m, "Track")
        .def_readonly("track_id", &Track::track_id)
        .def_readonly("entries", &Track::entries)
        .def_readonly("terminated", &Track::terminated);
    py::class_<Tracker>(m, "Tracker")
        .def(py::init<TrackerOptions>(), py::arg("options") = TrackerOptions{})
        .def(
            "associate",
            [](Tracker& t, int frame, const std::vector<BBox>& boxes) {
                const auto s = t.associate(frame, boxes);
                return py::dict(py::arg("updated") = s.updated, py::arg("created") = s.created,
                                py::arg("terminated") = s.terminated);
            },
            py::arg("frame_index"), py::arg("detections"))
        .def_property_readonly("tracks", &Tracker::tracks);
    m.def("iou", &iou, py::arg("a"), py::arg("b"));

    py::class_<AdamOptions>(m, "AdamOptions")
        .def(py::init<>())
        .def_readwrite("learning_rate", &AdamOptions::learning_rate)
        .def_readwrite("beta1", &AdamOptions::beta1)
        .def_readwrite("beta2", &AdamOptions::beta2)
        .def_readwrite("epsilon", &AdamOptions::epsilon);
    py::class_<LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("lambda_kpt", &LossWeights::lambda_kpt)
        .def_readwrite("lambda_msk", &LossWeights::lambda_msk)
        .def_readwrite("lambda_pp", &LossWeights::lambda_pp)
        .def_readwrite("lambda_vel", &LossWeights::lambda_vel)
        .def_readwrite("lambda_acc", &LossWeights::lambda_acc)
        .def_readwrite("beta_g", &LossWeights::beta_g)
        .def_readwrite("beta_p", &LossWeights::beta_p)
        .def_readwrite("gm_sigma", &LossWeights::gm_sigma);
    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("window_size", &FitConfig::window_size)
        .def_readwrite("weights", &FitConfig::weights)
        .def_readwrite("use_median_filter", &FitConfig::use_median_filter)
        .def_readwrite("median_window", &FitConfig::median_window)
        .def_readwrite("common_size", &FitConfig::common_size)
        .def_readwrite("stage1_iters", &FitConfig::stage1_iters)
        .def_readwrite("stage2_iters", &FitConfig::stage2_iters)
        .def_readwrite("adam", &FitConfig::adam)
        .def_readwrite("sharpness", &FitConfig::sharpness)
        .def_readwrite("stage1_lambda_msk", &FitConfig::stage1_lambda_msk)
        .def("validate", &FitConfig::validate);
    py::class_<WindowDiagnostics>(m, "WindowDiagnostics")
        .def_readonly("first", &WindowDiagnostics::first)
        .def_readonly("frames", &WindowDiagnostics::frames)
        .def_readonly("initial_loss", &WindowDiagnostics::initial_loss)
        .def_readonly("final_loss", &WindowDiagnostics::final_loss)
        .def_readonly("loss_trace", &WindowDiagnostics::loss_trace);
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("poses", &FitResult::poses)
        .def_readonly("projected_keypoints", &FitResult::projected_keypoints)
        .def_readonly("windows", &FitResult::windows);
    m.def(
        "fit_track",
        [](const SkeletonModel& model, const Camera& cam, const std::vector<ObservationFrame>& obs,
           const FitConfig& cfg) {
            py::gil_scoped_release release;
            return fit_track(model, cam, obs, cfg);
        },
        py::arg("model"), py::arg("camera"), py::arg("observations"), py::arg("config") = FitConfig{},
        "Fit every window of one track.");

    py::class_<MotionSpec>(m, "MotionSpec")
        .def(py::init<>())
        .def_readwrite("pose_step", &MotionSpec::pose_step)
        .def_readwrite("yaw_step", &MotionSpec::yaw_step)
        .def_readwrite("tilt_step", &MotionSpec::tilt_step)
        .def_readwrite("translation_step", &MotionSpec::translation_step)
        .def_readwrite("scale_step", &MotionSpec::scale_step)
        .def_readwrite("smoothing", &MotionSpec::smoothing)
        .def_readwrite("initial_pose_spread", &MotionSpec::initial_pose_spread)
        .def_readwrite("initial_sigma", &MotionSpec::initial_sigma)
        .def_readwrite("initial_offset", &MotionSpec::initial_offset)
        .def_readwrite("random_initial_yaw", &MotionSpec::random_initial_yaw)
        .def_readwrite("initial_yaw", &MotionSpec::initial_yaw)
        .def_readwrite("keypoint_noise", &MotionSpec::keypoint_noise)
        .def_readwrite("outlier_probability", &MotionSpec::outlier_probability)
        .def_readwrite("outlier_magnitude", &MotionSpec::outlier_magnitude)
        .def_readwrite("mask_sharpness", &MotionSpec::mask_sharpness);
    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("frames", &SynthConfig::frames)
        .def_readwrite("birds", &SynthConfig::birds)
        .def_readwrite("width", &SynthConfig::width)
        .def_readwrite("height", &SynthConfig::height)
        .def_readwrite("bird_spacing", &SynthConfig::bird_spacing)
        .def_readwrite("seed", &SynthConfig::seed)
        .def_readwrite("motion", &SynthConfig::motion)
        .def("camera", &SynthConfig::camera);
    py::class_<SyntheticSequence>(m, "SyntheticSequence")
        .def_readonly("poses", &SyntheticSequence::poses)
        .def_readonly("truth", &SyntheticSequence::truth)
        .def_readonly("keypoints", &SyntheticSequence::keypoints)
        .def_readonly("outliers", &SyntheticSequence::outliers)
        .def_property_readonly("masks",
                               [](const SyntheticSequence& s) {
                                   py::list l;
                                   for (const auto& mk : s.masks) l.append(grid_to_array(mk));
                                   return l;
                               })
        .def_readonly("bboxes", &SyntheticSequence::bboxes)
        .def_readonly("missing", &SyntheticSequence::missing);
    m.def("generate_trajectory", &generate_trajectory, py::arg("model"), py::arg("camera"), py::arg("frames"),
          py::arg("motion") = MotionSpec{}, py::arg("seed") = 1);
    m.def("generate_scene", &generate_scene, py::arg("model"), py::arg("config"), py::arg("seed"));

    py::class_<TrackData>(m, "TrackData")
        .def(py::init<>())
        .def_readwrite("track_id", &TrackData::track_id)
        .def_readwrite("observations", &TrackData::observations)
        .def_readwrite("truth", &TrackData::truth)
        .def_readwrite("visible", &TrackData::visible);
    py::class_<Dataset>(m, "Dataset").def(py::init<>()).def_readwrite("tracks", &Dataset::tracks);
    py::class_<TrackFit>(m, "TrackFit").def_readonly("track_id", &TrackFit::track_id).def_readonly("fit", &TrackFit::fit);
    m.def("synthetic_dataset", &synthetic_dataset, py::arg("model"), py::arg("config"), py::arg("seed"),
          py::arg("crop") = CropOptions{});
    m.def(
        "fit_dataset",
        [](const SkeletonModel& model, const Camera& cam, const Dataset& data, const FitConfig& cfg) {
            py::gil_scoped_release release;
            return fit_dataset(model, cam, data, cfg);
        },
        py::arg("model"), py::arg("camera"), py::arg("data"), py::arg("config") = FitConfig{});

    py::class_<TrackMetrics>(m, "TrackMetrics")
        .def_readonly("track_id", &TrackMetrics::track_id)
        .def_readonly("me_p", &TrackMetrics::me_p)
        .def_readonly("me_v", &TrackMetrics::me_v)
        .def_readonly("position_count", &TrackMetrics::position_count)
        .def_readonly("velocity_count", &TrackMetrics::velocity_count);
    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("tracks", &MetricsReport::tracks)
        .def_readonly("me_p", &MetricsReport::me_p)
        .def_readonly("me_v", &MetricsReport::me_v);
    m.def("evaluate_dataset", &evaluate_dataset, py::arg("data"), py::arg("fits"));
    m.def(
        "me_p",
        [](const std::vector<Points2>& projected, const std::vector<Points2>& truth, const std::vector<BBox>& boxes,
           const std::vector<Visibility>& visible) { return me_p(projected, truth, boxes, visible); },
        py::arg("projected"), py::arg("truth"), py::arg("bboxes"), py::arg("visible") = std::vector<Visibility>{});
    m.def(
        "me_v",
        [](const std::vector<Points2>& projected, const std::vector<Points2>& truth, const std::vector<BBox>& boxes,
           const std::vector<Visibility>& visible) { return me_v(projected, truth, boxes, visible); },
        py::arg("projected"), py::arg("truth"), py::arg("bboxes"), py::arg("visible") = std::vector<Visibility>{});

    py::class_<GridCell>(m, "GridCell")
        .def_readonly("index", &GridCell::index)
        .def_readonly("window_size", &GridCell::window_size)
        .def_readonly("lambda_vel", &GridCell::lambda_vel)
        .def_readonly("acceleration", &GridCell::acceleration)
        .def_readonly("median", &GridCell::median)
        .def_readonly("common_size", &GridCell::common_size)
        .def_readonly("replicate", &GridCell::replicate)
        .def("apply", &GridCell::apply, py::arg("base"));
    py::class_<GridSpec>(m, "GridSpec");
    m.def("standard_grid", &standard_grid);
    m.def("grid_from_json", [](const std::string& text) { return grid_from_json(text); }, py::arg("text"));
    m.def("enumerate_grid", &enumerate_grid, py::arg("spec"));

    py::class_<AppConfig>(m, "AppConfig")
        .def(py::init<>())
        .def_readwrite("model", &AppConfig::model)
        .def_readwrite("camera", &AppConfig::camera)
        .def_readwrite("fit", &AppConfig::fit)
        .def_readwrite("crop", &AppConfig::crop)
        .def_readwrite("tracker", &AppConfig::tracker)
        .def_readwrite("synth", &AppConfig::synth)
        .def_readwrite("threads", &AppConfig::threads)
        .def("validate", &AppConfig::validate)
        .def("to_json", &config_to_json);
    m.def("config_from_json", [](const std::string& text) { return config_from_json(text); }, py::arg("text"));
    m.def("load_config", &load_config, py::arg("path") = std::nullopt,
          "Load the config from `path`, else $BIRDPOSE_CONFIG, else ./birdpose.json, else defaults.");

    m.def(
        "read_pgm", [](const fs::path& p) { return grid_to_array(read_pgm(p)); }, py::arg("path"));
    m.def(
        "write_pgm",
        [](const fs::path& p, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
            write_pgm(p, gray_from_array(a));
        },
        py::arg("path"), py::arg("image"));
    m.def(
        "draw_fitted_bird",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& image,
           const SkeletonModel& model, const Camera& cam, const ObservationFrame& obs, const PoseParams& pose,
           int track_id) {
            RgbImage im = rgb_from_array(image);
            const Points2 kp = draw_fitted_bird(im, model, cam, obs, pose, track_color(track_id));
            return py::make_tuple(rgb_to_array(im), kp);
        },
        py::arg("image"), py::arg("model"), py::arg("camera"), py::arg("observation"), py::arg("pose"),
        py::arg("track_id") = 0, "Overlay one fitted bird; returns (image, image-space keypoints).");
}
