#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"
#include "empathd/meshgen.hpp"
#include "empathd/profile.hpp"
#include "empathd/scenegen.hpp"
#include "empathd/segmenter.hpp"
#include "empathd/tracker.hpp"
#include "empathd/wire.hpp"

namespace py = pybind11;
using namespace empathd;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const F32Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw FormatError("expected an (H, W, 3) array");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(float));
  return img;
}

F32Array from_image(const Image& img) {
  F32Array a({img.height, img.width, 3});
  std::memcpy(a.mutable_data(), img.data.data(), img.data.size() * sizeof(float));
  return a;
}

Plane to_plane(const F32Array& a) {
  if (a.ndim() != 2) throw FormatError("expected an (H, W) array");
  Plane p(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(p.data.data(), a.data(), p.data.size() * sizeof(float));
  return p;
}

F32Array from_plane(const Plane& p) {
  F32Array a({p.height, p.width});
  std::memcpy(a.mutable_data(), p.data.data(), p.data.size() * sizeof(float));
  return a;
}

SegmentMask to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw FormatError("expected an (H, W) mask");
  SegmentMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const bool* p = a.data();
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = p[i];
  return m;
}

py::array_t<bool> from_mask(const SegmentMask& m) {
  py::array_t<bool> a({m.height, m.width});
  bool* p = a.mutable_data();
  for (std::size_t i = 0; i < m.bits.size(); ++i) p[i] = m.bits[i] != 0;
  return a;
}

Pose to_pose(const F64Array& t, const F64Array& r) {
  if (t.size() != 3 || r.size() != 9) throw FormatError("pose needs a 3-vector and a 3x3 matrix");
  Pose p;
  for (int i = 0; i < 3; ++i) {
    p.translation[i] = t.data()[i];
    for (int j = 0; j < 3; ++j) p.rotation(i, j) = r.data()[i * 3 + j];
  }
  return p;
}

py::tuple from_pose(const Pose& p) {
  F64Array t(3), r({3, 3});
  for (int i = 0; i < 3; ++i) {
    t.mutable_data()[i] = p.translation[i];
    for (int j = 0; j < 3; ++j) r.mutable_data()[i * 3 + j] = p.rotation(i, j);
  }
  return py::make_tuple(t, r);
}

RgbdFrame to_frame(const F32Array& color, const F32Array& depth) {
  RgbdFrame f;
  f.color = to_image(color);
  f.depth = to_plane(depth);
  if (f.depth.width != f.color.width || f.depth.height != f.color.height) {
    throw FormatError("colour and depth sizes differ");
  }
  f.intrinsics.width = f.color.width;
  f.intrinsics.height = f.color.height;
  return f;
}

py::dict render_scene(const std::array<double, 3>& t, double yawDeg, double pitchDeg, double rollDeg,
                      std::optional<std::array<double, 5>> hand, bool glossy, double depthNoise, std::uint64_t seed) {
  SceneSpec s;
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  s.phonePose = Pose::from_yaw_pitch_roll(Vec3(t[0], t[1], t[2]), yawDeg * kDeg, pitchDeg * kDeg, rollDeg * kDeg);
  if (hand) s.handSpec = HandSpec::finger((*hand)[0], (*hand)[1], (*hand)[2], (*hand)[3], (*hand)[4]);
  s.glossyScreen = glossy;
  s.depthNoiseSigma = depthNoise;
  s.seed = seed;
  const RenderResult r = render(s);
  py::dict d;
  d["color"] = from_image(r.frame.color);
  d["depth"] = from_plane(r.frame.depth);
  d["hand_mask"] = from_mask(r.truth.handMask);
  d["pose"] = from_pose(r.truth.pose);
  return d;
}

py::dict mesh_dict(const HandMesh& m) {
  F64Array v({static_cast<py::ssize_t>(m.vertices.size()), py::ssize_t{3}});
  F64Array uv({static_cast<py::ssize_t>(m.uv.size()), py::ssize_t{2}});
  py::array_t<std::uint32_t> tri({static_cast<py::ssize_t>(m.triangles.size()), py::ssize_t{3}});
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) v.mutable_data()[i * 3 + k] = m.vertices[i][k];
  }
  for (std::size_t i = 0; i < m.uv.size(); ++i) {
    for (int k = 0; k < 2; ++k) uv.mutable_data()[i * 2 + k] = m.uv[i][k];
  }
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    for (int k = 0; k < 3; ++k) tri.mutable_data()[i * 3 + k] = m.triangles[i][k];
  }
  py::dict d;
  d["vertices"] = v;
  d["uv"] = uv;
  d["triangles"] = tri;
  return d;
}

py::dict message_dict(const wire::Message& m) {
  py::dict d;
  d["type"] = wire::type_name(wire::type_of(m));
  if (const auto* t = std::get_if<wire::TouchEvent>(&m)) {
    d["seq"] = t->seq;
    d["x"] = t->x;
    d["y"] = t->y;
    d["action"] = wire::action_name(t->action);
    d["t_micros"] = t->tMicros;
    d["sent_micros"] = t->sentMicros;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_empathd, m) {
  m.doc() = "Bindings for the empathd simulation core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("render_scene", &render_scene, py::arg("t") = std::array<double, 3>{0, 0, 0.30}, py::arg("yaw_deg") = 0.0,
        py::arg("pitch_deg") = 0.0, py::arg("roll_deg") = 0.0, py::arg("hand") = py::none(),
        py::arg("glossy") = false, py::arg("depth_noise") = 0.0, py::arg("seed") = 1,
        "Synthetic RGB-D frame of the default phone. hand = (cx, cy, width, length, hover) in phone metres.");

  m.def(
      "estimate_pose",
      [](const F32Array& color) {
        const Image img = to_image(color);
        CameraIntrinsics K;
        K.width = img.width;
        K.height = img.height;
        const PhoneGeometry g = PhoneGeometry::default_layout();
        const PoseEstimate e = estimate_pose(detect_markers(img, g), g, K);
        return py::make_tuple(from_pose(e.pose), e.rmsResidualPx, e.correspondences);
      },
      py::arg("color"), "((T, R), rms residual px, corner count) from a colour frame with default intrinsics.");

  m.def(
      "segment",
      [](const F32Array& color, const F32Array& depth, const F64Array& t, const F64Array& r, double tau) {
        return from_mask(segment(to_frame(color, depth), to_pose(t, r), PhoneGeometry::default_layout(), RoiBox{}, tau));
      },
      py::arg("color"), py::arg("depth"), py::arg("T"), py::arg("R"), py::arg("tau") = kDefaultTau);

  m.def(
      "build_mesh",
      [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& mask, const F32Array& color,
         const F32Array& depth, int stride) {
        MeshOptions o;
        o.stride = stride;
        return mesh_dict(build_mesh(to_mask(mask), to_frame(color, depth), o));
      },
      py::arg("mask"), py::arg("color"), py::arg("depth"), py::arg("stride") = 32);

  m.def(
      "delaunay",
      [](const F64Array& pts) {
        if (pts.ndim() != 2 || pts.shape(1) != 2) throw FormatError("expected an (N, 2) array");
        std::vector<Vec2> p(static_cast<std::size_t>(pts.shape(0)));
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = Vec2(pts.data()[2 * i], pts.data()[2 * i + 1]);
        const auto tris = delaunay(p);
        py::array_t<std::uint32_t> out({static_cast<py::ssize_t>(tris.size()), py::ssize_t{3}});
        for (std::size_t i = 0; i < tris.size(); ++i) {
          for (int k = 0; k < 3; ++k) out.mutable_data()[i * 3 + k] = tris[i][k];
        }
        return out;
      },
      py::arg("points"));

  m.def(
      "ssim", [](const F32Array& a, const F32Array& b, int window) { return ssim(to_image(a), to_image(b), window); },
      py::arg("a"), py::arg("b"), py::arg("window") = 7);

  m.def(
      "gaussian_blur", [](const F32Array& img, double sigma) { return from_image(gaussian_blur(to_image(img), sigma)); },
      py::arg("image"), py::arg("sigma"));

  m.def(
      "glaucoma",
      [](const F32Array& img, double inner, double outer, double sigma) {
        return from_image(apply_glaucoma(to_image(img), GlaucomaParams{inner, outer, sigma, std::nullopt}));
      },
      py::arg("image"), py::arg("inner"), py::arg("outer"), py::arg("blur_sigma") = 4.0);

  m.def(
      "cataract",
      [](const F32Array& img, double sigma, double contrast) {
        return from_image(apply_cataract(to_image(img), CataractParams{sigma, contrast, std::nullopt}));
      },
      py::arg("image"), py::arg("blur_sigma"), py::arg("contrast"));

  m.def(
      "hearing_loss",
      [](const F64Array& samples, double lowHz, double highHz, double attenuationDb, double rate) {
        AudioBuffer a;
        a.sampleRateHz = rate;
        a.samples.assign(samples.data(), samples.data() + samples.size());
        const AudioBuffer out = apply_hearing_loss(a, HearingLossParams{lowHz, highHz, attenuationDb});
        F64Array r(static_cast<py::ssize_t>(out.samples.size()));
        std::copy(out.samples.begin(), out.samples.end(), r.mutable_data());
        return r;
      },
      py::arg("samples"), py::arg("low_hz") = 2000.0, py::arg("high_hz") = 8000.0, py::arg("attenuation_db") = 40.0,
      py::arg("rate") = 48000.0);

  m.def(
      "apply_visual_profile",
      [](const F32Array& img, const std::string& profileJson) {
        const ImpairmentProfile p = profile_from_json(nlohmann::json::parse(profileJson));
        return from_image(apply_visual_profile(to_image(img), p));
      },
      py::arg("image"), py::arg("profile_json"));

  m.def(
      "encode_touch",
      [](std::uint64_t seq, double x, double y, const std::string& action, std::int64_t t, std::int64_t sent) {
        const auto bytes = wire::encode(wire::TouchEvent{seq, x, y, wire::action_from_name(action), t, sent});
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("seq"), py::arg("x"), py::arg("y"), py::arg("action"), py::arg("t_micros") = 0,
      py::arg("sent_micros") = 0);

  m.def(
      "decode",
      [](const py::bytes& data) -> py::object {
        const std::string s = data;
        const auto r = wire::decode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        if (const auto* more = std::get_if<wire::NeedMore>(&r)) return py::make_tuple(py::none(), more->count);
        const auto& d = std::get<wire::Decoded>(r);
        return py::make_tuple(message_dict(d.message), d.consumed);
      },
      py::arg("data"), "(message dict, bytes consumed), or (None, bytes still needed).");
}
