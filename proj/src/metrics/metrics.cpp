#include "qinpaint/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace qinpaint::metrics {

namespace {

void require_same(const RgbImage& a, const RgbImage& b, const char* op) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError(std::string(op) + ": image sizes differ " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
}

double psnr_from_mse(double m) { return m == 0.0 ? kInfinitePsnr : 10.0 * std::log10(1.0 / m); }

// Separable "valid" filtering: output is (h - n + 1) x (w - n + 1).
Plane filter_valid(const Plane& img, const Eigen::VectorXd& g) {
    const Index n = g.size();
    const Index oh = img.rows() - n + 1, ow = img.cols() - n + 1;
    Plane horizontal(img.rows(), ow);
    for (Index y = 0; y < img.rows(); ++y)
        for (Index x = 0; x < ow; ++x) horizontal(y, x) = img.row(y).segment(x, n).dot(g.transpose());
    Plane out(oh, ow);
    for (Index y = 0; y < oh; ++y)
        for (Index x = 0; x < ow; ++x) out(y, x) = horizontal.col(x).segment(y, n).dot(g);
    return out;
}

std::string number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

nlohmann::json finite_or_string(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

double mse(const RgbImage& a, const RgbImage& b) {
    require_same(a, b, "mse");
    if (a.size() == 0) throw GeometryError("mse: empty images");
    return (a.pixels - b.pixels).squaredNorm() / static_cast<double>(a.pixels.size());
}

double psnr(const RgbImage& a, const RgbImage& b) { return psnr_from_mse(mse(a, b)); }

std::array<double, 3> psnr_per_channel(const RgbImage& a, const RgbImage& b) {
    require_same(a, b, "psnr");
    std::array<double, 3> r{};
    for (int c = 0; c < 3; ++c)
        r[c] = psnr_from_mse((a.pixels.col(c) - b.pixels.col(c)).squaredNorm() / static_cast<double>(a.size()));
    return r;
}

Eigen::VectorXd gaussian_window(int size, double sigma) {
    Eigen::VectorXd g(size);
    const double centre = 0.5 * (size - 1);
    for (int i = 0; i < size; ++i) g[i] = std::exp(-((i - centre) * (i - centre)) / (2.0 * sigma * sigma));
    return g / g.sum();
}

double ssim_plane(const Plane& a, const Plane& b, const SsimOptions& opt) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("ssim: plane sizes differ");
    if (a.rows() < opt.window || a.cols() < opt.window)
        throw GeometryError("ssim: image " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " is smaller than the " + std::to_string(opt.window) + "x" + std::to_string(opt.window) +
                            " window");
    const Eigen::VectorXd g = gaussian_window(opt.window, opt.sigma);
    const double c1 = (opt.k1 * opt.data_range) * (opt.k1 * opt.data_range);
    const double c2 = (opt.k2 * opt.data_range) * (opt.k2 * opt.data_range);

    const Plane mu_a = filter_valid(a, g);
    const Plane mu_b = filter_valid(b, g);
    const Plane e_aa = filter_valid(a.cwiseProduct(a), g);
    const Plane e_bb = filter_valid(b.cwiseProduct(b), g);
    const Plane e_ab = filter_valid(a.cwiseProduct(b), g);

    double total = 0.0;
    for (Index y = 0; y < mu_a.rows(); ++y)
        for (Index x = 0; x < mu_a.cols(); ++x) {
            const double ma = mu_a(y, x), mb = mu_b(y, x);
            const double var_a = e_aa(y, x) - ma * ma;
            const double var_b = e_bb(y, x) - mb * mb;
            const double cov = e_ab(y, x) - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        }
    return total / static_cast<double>(mu_a.size());
}

Plane channel_plane(const RgbImage& img, int channel) {
    Plane p(img.height, img.width);
    for (Index y = 0; y < img.height; ++y)
        for (Index x = 0; x < img.width; ++x) p(y, x) = img.pixels(img.index(y, x), channel);
    return p;
}

std::array<double, 3> ssim_per_channel(const RgbImage& a, const RgbImage& b, const SsimOptions& opt) {
    require_same(a, b, "ssim");
    std::array<double, 3> r{};
    for (int c = 0; c < 3; ++c) r[c] = ssim_plane(channel_plane(a, c), channel_plane(b, c), opt);
    return r;
}

double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opt) {
    const auto r = ssim_per_channel(a, b, opt);
    return (r[0] + r[1] + r[2]) / 3.0;
}

MetricsReport evaluate(const RgbImage& reference, const RgbImage& candidate, std::string reference_id,
                       std::string candidate_id) {
    MetricsReport r;
    r.reference = std::move(reference_id);
    r.candidate = std::move(candidate_id);
    r.psnr_db = psnr(reference, candidate);
    r.psnr_channels = psnr_per_channel(reference, candidate);
    r.ssim_channels = ssim_per_channel(reference, candidate);
    r.ssim = (r.ssim_channels[0] + r.ssim_channels[1] + r.ssim_channels[2]) / 3.0;
    return r;
}

std::string format_psnr(double psnr_db) {
    if (std::isinf(psnr_db)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", psnr_db);
    return buf;
}

std::string format_cell(double psnr_db, double ssim_value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ssim_value);
    return format_psnr(psnr_db) + "/" + buf;
}

std::string to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["reference"] = r.reference;
    j["candidate"] = r.candidate;
    j["psnr_db"] = finite_or_string(r.psnr_db);
    j["ssim"] = r.ssim;
    j["psnr_channels"] = {finite_or_string(r.psnr_channels[0]), finite_or_string(r.psnr_channels[1]),
                          finite_or_string(r.psnr_channels[2])};
    j["ssim_channels"] = r.ssim_channels;
    j["cell"] = format_cell(r.psnr_db, r.ssim);
    return j.dump(2);
}

std::string csv_header() { return "reference,candidate,psnr_db,ssim"; }

std::string csv_row(const MetricsReport& r) {
    return r.reference + "," + r.candidate + "," + (std::isinf(r.psnr_db) ? "inf" : number(r.psnr_db)) + "," +
           number(r.ssim);
}

}  // namespace qinpaint::metrics
