#pragma once

#include <Eigen/Core>

#include <array>
#include <limits>
#include <string>

#include "qinpaint/imaging/image.hpp"

namespace qinpaint::metrics {

using imaging::RgbImage;
using Plane = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Returned by psnr() for identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// Mean squared error over all pixels and all three channels.
double mse(const RgbImage& a, const RgbImage& b);

/// 10 log10(1 / MSE) on the [0, 1] scale.
double psnr(const RgbImage& a, const RgbImage& b);
std::array<double, 3> psnr_per_channel(const RgbImage& a, const RgbImage& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

/// Mean of the local SSIM map over all fully-contained Gaussian windows.
double ssim_plane(const Plane& a, const Plane& b, const SsimOptions& opt = {});

/// Per-channel SSIM averaged over r, g, b.
double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opt = {});
std::array<double, 3> ssim_per_channel(const RgbImage& a, const RgbImage& b, const SsimOptions& opt = {});

/// Normalized 1-D Gaussian taps.
Eigen::VectorXd gaussian_window(int size, double sigma);

Plane channel_plane(const RgbImage& img, int channel);

struct MetricsReport {
    std::string reference;
    std::string candidate;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::array<double, 3> psnr_channels{};
    std::array<double, 3> ssim_channels{};
};

MetricsReport evaluate(const RgbImage& reference, const RgbImage& candidate, std::string reference_id = {},
                       std::string candidate_id = {});

/// "PSNR/SSIM" with three decimals each, e.g. "20.301/0.647" or "inf/1.000".
std::string format_cell(double psnr_db, double ssim);

/// Three-decimal PSNR, or "inf".
std::string format_psnr(double psnr_db);

std::string to_json(const MetricsReport& r);
std::string csv_header();
std::string csv_row(const MetricsReport& r);

}  // namespace qinpaint::metrics
