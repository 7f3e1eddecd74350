#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "qinpaint/cli/app.hpp"
#include "qinpaint/imaging/image.hpp"
#include "qinpaint/imaging/mask.hpp"
#include "qinpaint/train/checkpoint.hpp"
#include "support.hpp"

using namespace qinpaint;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "qinpaint");
    std::ostringstream out, err;
    const int code = qinpaint::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("qinpaint_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const std::string kImage = testing::data_path("astronaut_32.png");

// A narrow network keeps these runs quick.
std::vector<std::string> small_run(const fs::path& dir, const std::string& out_name) {
    return {"inpaint", "--input", kImage, "--output", (dir / out_name).string(), "--width", "4", "--log-every", "0"};
}

}  // namespace

TEST_CASE("mask command") {
    const fs::path d = fresh_dir("mask");
    const auto a = d / "a.png", b = d / "b.png";
    Result r = invoke({"mask", "--size", "256x256", "--sr", "0.5", "--seed", "1", "--output", a.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("32768") != std::string::npos);
    CHECK(imaging::load_mask(a).observed_count() == 32768);
    REQUIRE(invoke({"mask", "--size", "256x256", "--sr", "0.5", "--seed", "1", "--output", b.string()}).code == 0);
    CHECK(slurp(a) == slurp(b));

    r = invoke({"mask", "--size", "64x48", "--pattern", "scratch-lines", "--lines", "0", "--output", a.string()});
    REQUIRE(r.code == 0);
    CHECK(imaging::load_mask(a) == imaging::Mask::full(64, 48));

    CHECK(invoke({"mask", "--size", "64", "--sr", "0.5", "--output", a.string()}).code == 1);
    CHECK(invoke({"mask", "--size", "8x8", "--sr", "1.5", "--output", a.string()}).code == 1);
    CHECK(invoke({"mask", "--size", "8x8", "--sr", "0.5", "--pattern", "text-overlay", "--output", a.string()}).code ==
          1);
    CHECK(invoke({"mask", "--size", "8x8", "--pattern", "clouds", "--output", a.string()}).code == 1);
    CHECK(invoke({"mask", "--size", "8x8", "--output", a.string()}).code == 1);
    fs::remove_all(d);
}

TEST_CASE("usage errors") {
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    CHECK(invoke({"inpaint", "--input", kImage}).code == 1);
    const Result both = invoke({"inpaint", "--input", kImage, "--output", "x.png", "--sr", "0.3", "--pattern",
                             "scratch-lines"});
    CHECK(both.code == 1);
    CHECK(both.err.find("exactly one") != std::string::npos);
    CHECK(invoke({"inpaint", "--input", kImage, "--output", "x.png"}).code == 1);
    CHECK(invoke({"--version"}).code == 0);
}

TEST_CASE("inpaint with a full mask returns the input unchanged") {
    const fs::path d = fresh_dir("full");
    REQUIRE(invoke({"mask", "--size", "32x32", "--sr", "1", "--output", (d / "m.png").string()}).code == 0);
    auto args = small_run(d, "out.png");
    args.insert(args.end(), {"--mask", (d / "m.png").string(), "--iters", "2"});
    const Result r = invoke(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(imaging::load_png(d / "out.png") == imaging::load_png(kImage));
    fs::remove_all(d);
}

TEST_CASE("one iteration writes image, trace and manifest") {
    const fs::path d = fresh_dir("one");
    auto args = small_run(d, "out.png");
    args.insert(args.end(), {"--sr", "0.3", "--seed", "5", "--iters", "1", "--gt", kImage, "--save-mask",
                             (d / "mask.png").string()});
    const Result r = invoke(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(train::read_loss_trace(d / "out_loss.csv").size() == 1);
    CHECK(slurp(d / "out_loss.csv").rfind("iter,loss\n0,", 0) == 0);
    CHECK(r.out.find("PSNR/SSIM") != std::string::npos);

    const auto manifest = nlohmann::json::parse(slurp(d / "out_manifest.json"));
    CHECK(manifest["engine_version"].is_string());
    CHECK(manifest["mask_source"]["kind"] == "random");
    CHECK(manifest["train"]["iterations"] == 1);
    CHECK(manifest["metrics"]["psnr_db"].is_number());
    CHECK(manifest["duration_seconds"].get<double>() > 0.0);
    CHECK(manifest["network"]["stages"].size() == 11);

    // observed pixels survive exactly after one 8-bit round trip
    const imaging::Mask mask = imaging::load_mask(d / "mask.png");
    CHECK(mask.observed_count() == 307);  // round(0.3 * 1024)
    const imaging::RgbImage in = imaging::load_png(kImage), out = imaging::load_png(d / "out.png");
    for (Index y = 0; y < 32; ++y)
        for (Index x = 0; x < 32; ++x)
            if (mask.observed(y, x)) CHECK(out.at(y, x) == in.at(y, x));
    fs::remove_all(d);
}

TEST_CASE("sizes that do not divide by 16") {
    const fs::path d = fresh_dir("odd");
    imaging::RgbImage img = imaging::load_png(kImage);
    imaging::save_png(imaging::crop(img, 0, 0, 30, 27), d / "odd.png");
    Result r = invoke({"inpaint", "--input", (d / "odd.png").string(), "--output", (d / "o.png").string(), "--sr", "0.5",
                    "--iters", "1", "--width", "4"});
    CHECK(r.code == 2);
    CHECK(r.err.find("divisible by 16") != std::string::npos);

    r = invoke({"inpaint", "--input", (d / "odd.png").string(), "--output", (d / "o.png").string(), "--sr", "0.5",
             "--iters", "2", "--width", "4", "--pad", "reflect", "--log-every", "0"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const imaging::RgbImage out = imaging::load_png(d / "o.png");
    CHECK(out.height == 30);
    CHECK(out.width == 27);
    fs::remove_all(d);
}

TEST_CASE("missing input is a runtime failure") {
    const Result r = invoke({"inpaint", "--input", "/nonexistent/in.png", "--output", "/tmp/x.png", "--sr", "0.5"});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("replaying a manifest reproduces the run bitwise") {
    const fs::path d = fresh_dir("replay");
    auto args = small_run(d, "first.png");
    args.insert(args.end(), {"--pattern", "text-overlay", "--glyph-scale", "1", "--seed", "3", "--iters", "5"});
    REQUIRE(invoke(args).code == 0);
    const Result r = invoke({"inpaint", "--replay", (d / "first_manifest.json").string(), "--output",
                          (d / "second.png").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(slurp(d / "first.png") == slurp(d / "second.png"));
    CHECK(slurp(d / "first_loss.csv") == slurp(d / "second_loss.csv"));
    CHECK(invoke({"inpaint", "--replay", (d / "first_manifest.json").string(), "--sr", "0.2"}).code == 1);
    fs::remove_all(d);
}

TEST_CASE("eval command") {
    const fs::path d = fresh_dir("eval");
    Result r = invoke({"eval", kImage, kImage});
    REQUIRE(r.code == 0);
    CHECK(r.out == "inf/1.000\n");

    imaging::RgbImage zero(16, 16), half(16, 16);
    half.pixels.setConstant(128.0 / 255.0);
    imaging::save_png(zero, d / "zero.png");
    imaging::save_png(half, d / "half.png");
    r = invoke({"eval", (d / "zero.png").string(), (d / "half.png").string(), "--json", (d / "m.json").string()});
    REQUIRE(r.code == 0);
    // 128/255 is the nearest 8-bit level to 0.5
    const double expected = 10.0 * std::log10(1.0 / std::pow(128.0 / 255.0, 2));
    CHECK(r.out.rfind(metrics::format_psnr(expected) + "/", 0) == 0);
    CHECK(nlohmann::json::parse(slurp(d / "m.json"))["psnr_db"].get<double>() == doctest::Approx(expected));

    CHECK(invoke({"eval", kImage, (d / "zero.png").string()}).code == 2);
    CHECK(invoke({"eval", kImage}).code == 1);

    fs::create_directories(d / "ref");
    fs::create_directories(d / "cand");
    for (const char* n : {"a.png", "b.png", "c.png"}) {
        fs::copy_file(d / "zero.png", d / "ref" / n);
        fs::copy_file(d / "half.png", d / "cand" / n);
    }
    r = invoke({"eval", "--ref-dir", (d / "ref").string(), "--dir", (d / "cand").string(), "--csv",
             (d / "batch.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::istringstream csv(slurp(d / "batch.csv"));
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line == metrics::csv_header());
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 3);
    fs::remove_all(d);
}

TEST_CASE("reproduce command") {
    const fs::path d = fresh_dir("reproduce");
    fs::create_directories(d / "images");
    fs::copy_file(kImage, d / "images" / "astro.png");
    fs::create_directories(d / "images" / "ignored_dir");
    const std::vector<std::string> base{"reproduce", "--images", (d / "images").string(), "--srs", "0.5",
                                        "--iters",   "2",        "--width",               "4",     "--no-timing"};
    auto first = base;
    first.insert(first.end(), {"--out", (d / "run1").string()});
    Result r = invoke(first);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const std::string table = slurp(d / "run1" / "table.csv");
    CHECK(table.rfind("image,sr,psnr_db,ssim,iters,seconds\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 2);
    CHECK(table.find("astro.png,0.50,") != std::string::npos);
    CHECK(fs::exists(d / "run1" / "astro_sr050.png"));
    CHECK(fs::exists(d / "run1" / "astro_sr050_manifest.json"));

    auto second = base;
    second.insert(second.end(), {"--out", (d / "run2").string()});
    REQUIRE(invoke(second).code == 0);
    CHECK(slurp(d / "run2" / "table.csv") == table);

    // a bad image is reported and the rest of the grid still runs
    std::ofstream(d / "images" / "broken.png") << "nope";
    auto third = base;
    third.insert(third.end(), {"--out", (d / "run3").string()});
    r = invoke(third);
    CHECK(r.code == 2);
    CHECK(r.err.find("broken") != std::string::npos);
    CHECK(slurp(d / "run3" / "table.csv") == table);
    fs::remove_all(d);
}
