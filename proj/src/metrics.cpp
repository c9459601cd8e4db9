#include "mvedit/metrics.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace mvedit {

double mpa(const ImageD& input, const ImageD& edited, const FlowField& flow,
           const FlowEstimator& estimator, double lambda) {
  require_same_size(input, edited, "mpa");
  require_same_size(input, flow.valid, "mpa");
  return std::abs(lambda) * mean_flow_l1(flow, estimator.estimate(input, edited, &flow.valid));
}

AtfValue atf(const ImageD& input, const ImageD& edited, const FlowField& flow, double lambda) {
  require_same_size(input, edited, "atf");
  require_same_size(input, flow.valid, "atf");
  FlowField moving = flow;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.moves(x, y)) moving.clear(x, y);
    }
  }
  const auto splat = forward_splat(input, moving);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < input.height(); ++y) {
    for (int x = 0; x < input.width(); ++x) {
      if (!splat.footprint.at(x, y)) continue;
      for (int c = 0; c < input.channels(); ++c) sum += std::abs(splat.image.at(x, y, c) - edited.at(x, y, c));
      count += input.channels();
    }
  }
  if (count == 0) return {0.0, true};
  return {std::abs(lambda) * sum / static_cast<double>(count), false};
}

Mat3 mvc_homography(const CameraView& view1, const CameraView& view2) {
  // Camera-to-world rotations are the transposes of the stored extrinsics.
  const Mat3 r1 = view1.R.transpose();
  const Mat3 r2 = view2.R.transpose();
  return view1.K * r1.inverse() * r2 * view1.K.inverse();
}

HomographyWarp warp_homography(const ImageD& image, const Mat3& H, int width, int height) {
  constexpr double kEdge = 1e-9;
  HomographyWarp out{ImageD(width, height, image.channels()), Mask(width, height)};
  const Mat3 inv = H.inverse();
  const int w2 = image.width();
  const int h2 = image.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Vec3 s = inv * Vec3(x, y, 1.0);
      if (!(s.z() > 0.0)) continue;
      double sx = s.x() / s.z();
      double sy = s.y() / s.z();
      if (!(sx >= -kEdge && sy >= -kEdge && sx <= w2 - 1 + kEdge && sy <= h2 - 1 + kEdge)) continue;
      sx = std::clamp(sx, 0.0, w2 - 1.0);
      sy = std::clamp(sy, 0.0, h2 - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w2 - 1);
      const int y1 = std::min(y0 + 1, h2 - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top = (1.0 - fx) * image.at(x0, y0, c) + fx * image.at(x1, y0, c);
        const double bottom = (1.0 - fx) * image.at(x0, y1, c) + fx * image.at(x1, y1, c);
        out.image.at(x, y, c) = (1.0 - fy) * top + fy * bottom;
      }
      out.overlap.at(x, y) = 1;
    }
  }
  return out;
}

double masked_psnr(const ImageD& a, const ImageD& b, const Mask& mask) {
  require_same_size(a, b, "psnr");
  require_same_size(a, mask, "psnr");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        sum += d * d;
      }
      count += a.channels();
    }
  }
  if (count == 0) fail(ErrorKind::NoOverlap, "views share no pixels");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::clamp(10.0 * std::log10(255.0 * 255.0 / mse), 0.0, kPsnrCap);
}

namespace {

ImageD to_raw(const RgbImage& image) {
  ImageD out(image.width(), image.height(), image.channels());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = image.data()[i];
  return out;
}

}  // namespace

double mvc(const RgbImage& image1, const RgbImage& image2, const CameraView& view1, const CameraView& view2) {
  require_same_size(image1, image2, "mvc");
  const auto warped = warp_homography(to_raw(image2), mvc_homography(view1, view2), image1.width(), image1.height());
  return masked_psnr(to_raw(image1), warped.image, warped.overlap);
}

MetricReport evaluate(const Scene& scene, const std::vector<RgbImage>& edited, const std::vector<FlowField>& flows,
                      const FlowEstimator& estimator, const MetricOptions& options) {
  if (edited.size() != scene.views.size() || flows.size() != scene.views.size()) {
    fail(ErrorKind::InvalidArgument, "need one edited image and one flow per view");
  }
  MetricReport report;
  report.lambda_mpa = options.lambda_mpa;
  report.lambda_atf = options.lambda_atf;
  double mpa_sum = 0.0, atf_sum = 0.0;
  int visible = 0;
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const CameraView& view = scene.views[v];
    if (edited[v].width() != view.width() || edited[v].height() != view.height() ||
        !flows[v].valid.same_size(view.image)) {
      fail(ErrorKind::Validation, "view " + view.view_id + ": edited image or flow size differs from the scene");
    }
    ViewMetrics m;
    m.view_id = view.view_id;
    m.visible = count_set(flows[v].moving_mask()) > 0;
    const ImageD input = to_unit(view.image);
    const ImageD output = to_unit(edited[v]);
    m.mpa_raw = mpa(input, output, flows[v], estimator, 1.0);
    const AtfValue a = atf(input, output, flows[v], 1.0);
    m.atf_raw = a.value;
    m.atf_empty = a.empty_mask;
    m.mpa = std::abs(options.lambda_mpa) * m.mpa_raw;
    m.atf = std::abs(options.lambda_atf) * m.atf_raw;
    if (m.visible) {
      mpa_sum += m.mpa;
      atf_sum += m.atf;
      ++visible;
    }
    report.views.push_back(m);
  }
  report.mpa = visible ? mpa_sum / visible : 0.0;
  report.atf = visible ? atf_sum / visible : 0.0;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t n = scene.views.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (options.pairs == PairSelection::Consecutive) {
      if (i + 1 < n) pairs.emplace_back(i, i + 1);
    } else {
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
  }
  double mvc_sum = 0.0;
  int overlapping = 0;
  for (const auto& [i, j] : pairs) {
    PairMetrics p{scene.views[i].view_id, scene.views[j].view_id, std::nullopt};
    try {
      p.mvc = mvc(edited[i], edited[j], scene.views[i], scene.views[j]);
      mvc_sum += *p.mvc;
      ++overlapping;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoOverlap) throw;
    }
    report.pairs.push_back(p);
  }
  report.mvc = overlapping ? mvc_sum / overlapping : kPsnrCap;
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::json views_json = nlohmann::json::array();
  for (const auto& v : views) {
    views_json.push_back({{"view_id", v.view_id},
                          {"visible", v.visible},
                          {"mpa", v.mpa},
                          {"atf", v.atf},
                          {"atf_empty_mask", v.atf_empty},
                          {"mpa_raw", v.mpa_raw},
                          {"atf_raw", v.atf_raw}});
  }
  nlohmann::json pairs_json = nlohmann::json::array();
  for (const auto& p : pairs) {
    pairs_json.push_back({{"view_1", p.view1},
                          {"view_2", p.view2},
                          {"mvc", p.mvc ? nlohmann::json(*p.mvc) : nlohmann::json(nullptr)}});
  }
  const nlohmann::json j = {{"lambda_mpa", lambda_mpa}, {"lambda_atf", lambda_atf}, {"mpa", mpa},
                            {"atf", atf},               {"mvc", mvc},               {"views", views_json},
                            {"pairs", pairs_json}};
  return j.dump(2);
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "kind,view_1,view_2,mpa,atf,mvc\n";
  for (const auto& v : views) out << "view," << v.view_id << ",," << v.mpa << ',' << v.atf << ",\n";
  for (const auto& p : pairs) {
    out << "pair," << p.view1 << ',' << p.view2 << ",,,";
    if (p.mvc) out << *p.mvc;
    out << '\n';
  }
  out << "mean,,," << mpa << ',' << atf << ',' << mvc << '\n';
  return out.str();
}

}  // namespace mvedit
