#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvedit/models.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

inline constexpr double kPsnrCap = 99.0;

/// lambda * mean |f_m - f_p|_1 over valid f_m pixels, f_p from the estimator.
double mpa(const ImageD& input, const ImageD& edited, const FlowField& flow,
           const FlowEstimator& estimator, double lambda = 1.0);

struct AtfValue {
  double value = 0.0;
  bool empty_mask = false;  // no moving pixel landed anywhere: value is 0
};

/// lambda * mean |I_w - I_o| over the splat footprint of the moving pixels,
/// where I_w is the forward splat of the input (intensities in [0, 1]).
AtfValue atf(const ImageD& input, const ImageD& edited, const FlowField& flow, double lambda = 1.0);

/// Rotation-only homography K R1^-1 R2 K^-1 (rotations camera-to-world),
/// mapping view-2 pixels into view 1. Uses view 1's K.
Mat3 mvc_homography(const CameraView& view1, const CameraView& view2);

struct HomographyWarp {
  ImageD image;  // view-2 content resampled in view 1's frame
  Mask overlap;  // pixels whose source lies inside image 2, in front of camera 2
};

/// Samples `image` at H^-1 x for every pixel x of a width x height output.
HomographyWarp warp_homography(const ImageD& image, const Mat3& H, int width, int height);

/// PSNR (8-bit peak) over `mask`, capped at kPsnrCap. NoOverlap on an empty mask.
double masked_psnr(const ImageD& a, const ImageD& b, const Mask& mask);

/// Overlapping PSNR between I_1 and I_2 warped into view 1.
double mvc(const RgbImage& image1, const RgbImage& image2, const CameraView& view1,
           const CameraView& view2);

struct ViewMetrics {
  std::string view_id;
  bool visible = true;  // object moves in this view
  double mpa = 0.0;
  double atf = 0.0;
  bool atf_empty = false;
  double mpa_raw = 0.0;
  double atf_raw = 0.0;
};

struct PairMetrics {
  std::string view1;
  std::string view2;
  std::optional<double> mvc;  // nullopt when the views do not overlap
};

struct MetricReport {
  double lambda_mpa = 1.0;
  double lambda_atf = 1.0;
  std::vector<ViewMetrics> views;
  std::vector<PairMetrics> pairs;
  double mpa = 0.0;  // means over visible views / overlapping pairs
  double atf = 0.0;
  double mvc = kPsnrCap;

  std::string to_json() const;
  std::string to_csv() const;
};

enum class PairSelection { Consecutive, All };

struct MetricOptions {
  double lambda_mpa = 1.0;
  double lambda_atf = 1.0;
  PairSelection pairs = PairSelection::Consecutive;
};

/// `edited` and `flows` follow scene view order.
MetricReport evaluate(const Scene& scene, const std::vector<RgbImage>& edited,
                      const std::vector<FlowField>& flows, const FlowEstimator& estimator,
                      const MetricOptions& options = {});

}  // namespace mvedit
