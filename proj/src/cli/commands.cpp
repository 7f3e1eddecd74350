#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qinpaint/cli/app.hpp"
#include "qinpaint/errors.hpp"
#include "qinpaint/parallel.hpp"

namespace qinpaint::cli {

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Options shared by inpaint and reproduce.
struct NetworkOptions {
    std::string network_file;
    Index width = 64;
    double slope = 0.2;

    void add(CLI::App& cmd) {
        cmd.add_option("--network", network_file, "network description (JSON); defaults to the built-in encoder-decoder");
        cmd.add_option("--width", width, "feature channels of the built-in network")->check(CLI::PositiveNumber);
        cmd.add_option("--slope", slope, "leaky ReLU slope of the built-in network");
    }

    qnn::NetworkSpec build() const {
        qnn::NetworkSpec spec = network_file.empty() ? qnn::default_spec(width, slope) : qnn::load_spec(network_file);
        spec.validate();
        return spec;
    }
};

struct StructuralOptions {
    imaging::StructuralParams params;

    void add(CLI::App& cmd) {
        cmd.add_option("--lines", params.lines, "scratch-lines: number of strokes")->check(CLI::NonNegativeNumber);
        cmd.add_option("--line-width", params.line_width, "scratch-lines: stroke width in pixels")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--text", params.text, "text-overlay: text to stamp");
        cmd.add_option("--glyph-scale", params.glyph_scale, "text-overlay: pixels per font cell")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--line-gap", params.line_gap, "text-overlay: blank rows between lines")
            ->check(CLI::NonNegativeNumber);
    }
};

std::pair<Index, Index> parse_size(const std::string& s) {
    const auto x = s.find_first_of("xX");
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t used_h = 0, used_w = 0;
        const long h = std::stol(s.substr(0, x), &used_h);
        const long w = std::stol(s.substr(x + 1), &used_w);
        if (used_h != x || used_w != s.size() - x - 1 || h <= 0 || w <= 0) throw std::invalid_argument(s);
        return {h, w};
    } catch (const std::logic_error&) {
        throw UsageError("--size expects HxW with positive integers, got '" + s + "'");
    }
}

std::string default_sibling(const fs::path& output, const std::string& suffix) {
    fs::path p = output;
    p.replace_extension();
    return p.string() + suffix;
}

std::vector<double> parse_srs(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0.0 && v <= 1.0)) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw UsageError("--srs expects comma-separated rates in (0, 1], got '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("--srs is empty");
    return out;
}

std::vector<fs::path> png_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string sr_tag(double sr) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sr%03d", static_cast<int>(std::lround(sr * 100.0)));
    return buf;
}

std::string fixed(double v, int digits) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

// --- inpaint ----------------------------------------------------------------

struct InpaintCommand {
    CLI::App* cmd = nullptr;
    std::string input, output, mask_file, pattern, gt, pad = "none", loss_csv, manifest, save_mask, replay;
    std::string checkpoint_dir;
    std::optional<double> sr;
    std::uint64_t seed = 0;
    std::size_t iters = 5000, log_every = 100, checkpoint_every = 0;
    double lr = 0.01, amplitude = 0.1;
    bool nondeterministic = false;
    int threads = 0;
    NetworkOptions net;
    StructuralOptions structural;

    void add(CLI::App& app) {
        cmd = app.add_subcommand("inpaint", "inpaint one image");
        cmd->add_option("--input", input, "image to inpaint (PNG)");
        cmd->add_option("--output", output, "output PNG");
        cmd->add_option("--mask", mask_file, "mask PNG (white = observed)");
        cmd->add_option("--sr", sr, "random mask with this observed fraction");
        cmd->add_option("--pattern", pattern, "structural mask: text-overlay | scratch-lines");
        structural.add(*cmd);
        cmd->add_option("--seed", seed, "master seed (mask, init and input streams derive from it)");
        cmd->add_option("--iters", iters, "optimizer iterations")->check(CLI::PositiveNumber);
        cmd->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
        cmd->add_option("--amplitude", amplitude, "network input drawn from U[0, amplitude]");
        cmd->add_option("--gt", gt, "ground truth PNG for PSNR/SSIM");
        net.add(*cmd);
        cmd->add_option("--pad", pad, "none | reflect")->check(CLI::IsMember({"none", "reflect"}));
        cmd->add_option("--log-every", log_every, "print the loss every N iterations (0: quiet)");
        cmd->add_flag("--nondeterministic", nondeterministic, "allow multi-threaded reductions");
        cmd->add_option("--threads", threads, "worker threads (default: $QINPAINT_THREADS or 1)");
        cmd->add_option("--checkpoint-dir", checkpoint_dir, "directory for parameter snapshots");
        cmd->add_option("--checkpoint-every", checkpoint_every, "snapshot every N iterations");
        cmd->add_option("--loss-csv", loss_csv, "loss trace path (default: <output>_loss.csv)");
        cmd->add_option("--manifest", manifest, "run manifest path (default: <output>_manifest.json)");
        cmd->add_option("--save-mask", save_mask, "also write the mask used");
        cmd->add_option("--replay", replay, "rerun exactly as recorded in a manifest");
    }

    InpaintRequest request() const {
        if (!replay.empty()) {
            if (cmd->count("--input") || cmd->count("--mask") || cmd->count("--sr") || cmd->count("--pattern"))
                throw UsageError("--replay cannot be combined with --input or a mask source");
            InpaintRequest r = request_from_manifest(replay);
            if (!output.empty()) {
                r.output = output;
                r.loss_trace = loss_csv.empty() ? default_sibling(output, "_loss.csv") : loss_csv;
                r.manifest = manifest.empty() ? default_sibling(output, "_manifest.json") : manifest;
                r.mask_output.reset();
            }
            if (threads > 0) r.threads = threads;
            return r;
        }
        if (input.empty()) throw UsageError("inpaint: --input is required");
        if (output.empty()) throw UsageError("inpaint: --output is required");
        const int sources = !mask_file.empty() + sr.has_value() + !pattern.empty();
        if (sources != 1) throw UsageError("inpaint: give exactly one of --mask, --sr, --pattern");

        InpaintRequest r;
        r.input = input;
        r.output = output;
        r.loss_trace = loss_csv.empty() ? default_sibling(output, "_loss.csv") : loss_csv;
        r.manifest = manifest.empty() ? default_sibling(output, "_manifest.json") : manifest;
        if (!gt.empty()) r.ground_truth = gt;
        if (!save_mask.empty()) r.mask_output = save_mask;
        if (!mask_file.empty()) {
            r.mask.kind = MaskSource::Kind::File;
            r.mask.path = mask_file;
        } else if (sr) {
            if (!(*sr >= 0.0 && *sr <= 1.0)) throw UsageError("--sr must lie in [0, 1]");
            r.mask.kind = MaskSource::Kind::Random;
            r.mask.sr = *sr;
        } else {
            r.mask.kind = MaskSource::Kind::Structural;
            try {
                r.mask.pattern = imaging::pattern_from_string(pattern);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            r.mask.structural = structural.params;
        }
        r.seed = seed;
        r.train.learning_rate = lr;
        r.train.iterations = iters;
        r.train.seed = seed;
        r.train.input_amplitude = amplitude;
        r.train.log_interval = log_every;
        r.train.deterministic = !nondeterministic;
        r.train.checkpoint_interval = checkpoint_every;
        r.train.checkpoint_dir = checkpoint_dir;
        if (checkpoint_every > 0 && checkpoint_dir.empty())
            throw UsageError("--checkpoint-every needs --checkpoint-dir");
        r.network = net.build();
        r.pad_reflect = pad == "reflect";
        r.threads = threads > 0 ? threads : threads_from_environment(1);
        return r;
    }

    int execute(std::ostream& out, std::ostream& err) const {
        const InpaintRequest r = request();
        const InpaintOutcome o = run_inpaint(r, err);
        out << "wrote " << r.output.string() << " (" << o.loss_trace.size() << " iterations, final loss "
            << (o.loss_trace.empty() ? 0.0 : o.loss_trace.back()) << ")\n";
        if (o.metrics) {
            out << metrics::csv_header() << '\n' << metrics::csv_row(*o.metrics) << '\n';
            out << "PSNR/SSIM " << metrics::format_cell(o.metrics->psnr_db, o.metrics->ssim) << '\n';
        }
        return kSuccess;
    }
};

// --- mask -------------------------------------------------------------------

struct MaskCommand {
    CLI::App* cmd = nullptr;
    std::string size, output, pattern;
    std::optional<double> sr;
    std::uint64_t seed = 0;
    StructuralOptions structural;

    void add(CLI::App& app) {
        cmd = app.add_subcommand("mask", "generate a mask PNG");
        cmd->add_option("--size", size, "HxW, e.g. 256x256")->required();
        cmd->add_option("--output", output, "mask PNG to write")->required();
        cmd->add_option("--sr", sr, "observed fraction of a random mask");
        cmd->add_option("--pattern", pattern, "text-overlay | scratch-lines");
        structural.add(*cmd);
        cmd->add_option("--seed", seed, "master seed");
    }

    int execute(std::ostream& out, std::ostream&) const {
        const auto [h, w] = parse_size(size);
        if (sr.has_value() == !pattern.empty()) throw UsageError("mask: give exactly one of --sr, --pattern");
        MaskSource src;
        if (sr) {
            if (!(*sr >= 0.0 && *sr <= 1.0)) throw UsageError("--sr must lie in [0, 1]");
            src.kind = MaskSource::Kind::Random;
            src.sr = *sr;
        } else {
            src.kind = MaskSource::Kind::Structural;
            try {
                src.pattern = imaging::pattern_from_string(pattern);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            src.structural = structural.params;
        }
        const imaging::Mask m = build_mask(src, h, w, seed);
        imaging::save_mask(m, output);
        out << "observed " << m.observed_count() << " of " << h * w << " pixels, sampling rate "
            << fixed(m.sampling_rate(), 6) << '\n';
        return kSuccess;
    }
};

// --- eval -------------------------------------------------------------------

struct EvalCommand {
    CLI::App* cmd = nullptr;
    std::vector<std::string> files;
    std::string ref_dir, dir, json_out, csv_out;

    void add(CLI::App& app) {
        cmd = app.add_subcommand("eval", "PSNR/SSIM between images");
        cmd->add_option("images", files, "REFERENCE CANDIDATE");
        cmd->add_option("--ref-dir", ref_dir, "batch mode: reference directory");
        cmd->add_option("--dir", dir, "batch mode: candidates, matched to references by file name");
        cmd->add_option("--json", json_out, "write the report as JSON");
        cmd->add_option("--csv", csv_out, "write CSV rows");
    }

    int execute(std::ostream& out, std::ostream& err) const {
        std::vector<metrics::MetricsReport> reports;
        if (!ref_dir.empty() || !dir.empty()) {
            if (ref_dir.empty() || dir.empty() || !files.empty())
                throw UsageError("eval: batch mode needs both --ref-dir and --dir and no positional images");
            for (const auto& ref : png_files(ref_dir)) {
                const fs::path cand = fs::path(dir) / ref.filename();
                if (!fs::exists(cand)) {
                    err << "eval: no candidate for " << ref.filename().string() << '\n';
                    continue;
                }
                reports.push_back(metrics::evaluate(imaging::load_png(ref), imaging::load_png(cand), ref.string(),
                                                    cand.string()));
            }
            if (reports.empty()) throw IoError("eval: no matching image pairs");
        } else {
            if (files.size() != 2) throw UsageError("eval: expected REFERENCE CANDIDATE");
            reports.push_back(
                metrics::evaluate(imaging::load_png(files[0]), imaging::load_png(files[1]), files[0], files[1]));
        }

        for (const auto& r : reports) {
            if (reports.size() > 1) out << r.candidate << ' ';
            out << metrics::format_cell(r.psnr_db, r.ssim) << '\n';
        }
        if (!csv_out.empty()) {
            std::ofstream f(csv_out);
            if (!f) throw IoError("cannot write " + csv_out);
            f << metrics::csv_header() << '\n';
            for (const auto& r : reports) f << metrics::csv_row(r) << '\n';
        }
        if (!json_out.empty()) {
            std::ofstream f(json_out);
            if (!f) throw IoError("cannot write " + json_out);
            if (reports.size() == 1) {
                f << metrics::to_json(reports.front()) << '\n';
            } else {
                f << "[\n";
                for (std::size_t i = 0; i < reports.size(); ++i)
                    f << metrics::to_json(reports[i]) << (i + 1 < reports.size() ? ",\n" : "\n");
                f << "]\n";
            }
        }
        return kSuccess;
    }
};

// --- reproduce --------------------------------------------------------------

struct ReproduceCommand {
    CLI::App* cmd = nullptr;
    std::string images, out_dir, srs = "0.1,0.3,0.5";
    std::uint64_t seed = 0;
    std::size_t iters = 5000, log_every = 0;
    bool no_timing = false;
    int threads = 0;
    NetworkOptions net;

    void add(CLI::App& app) {
        cmd = app.add_subcommand("reproduce", "run the sampling-rate grid over a directory of images");
        cmd->add_option("--images", images, "directory of ground-truth PNGs")->required();
        cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--srs", srs, "comma-separated sampling rates");
        cmd->add_option("--seed", seed, "master seed for every cell");
        cmd->add_option("--iters", iters, "optimizer iterations per cell")->check(CLI::PositiveNumber);
        cmd->add_option("--log-every", log_every, "print the loss every N iterations (0: quiet)");
        cmd->add_flag("--no-timing", no_timing, "write 0 in the seconds column so reruns compare equal");
        cmd->add_option("--threads", threads, "worker threads (default: $QINPAINT_THREADS or 1)");
        net.add(*cmd);
    }

    int execute(std::ostream& out, std::ostream& err) const {
        const std::vector<double> rates = parse_srs(srs);
        const qnn::NetworkSpec spec = net.build();
        const auto files = png_files(images);
        if (files.empty()) throw IoError("no PNG files in " + images);
        fs::create_directories(out_dir);

        std::vector<std::string> rows;
        int failures = 0;
        for (const auto& file : files) {
            for (const double sr : rates) {
                const std::string stem = file.stem().string() + "_" + sr_tag(sr);
                InpaintRequest r;
                r.input = file;
                r.ground_truth = file;
                r.output = fs::path(out_dir) / (stem + ".png");
                r.loss_trace = fs::path(out_dir) / (stem + "_loss.csv");
                r.manifest = fs::path(out_dir) / (stem + "_manifest.json");
                r.mask_output = fs::path(out_dir) / (stem + "_mask.png");
                r.mask.kind = MaskSource::Kind::Random;
                r.mask.sr = sr;
                r.seed = seed;
                r.train.iterations = iters;
                r.train.seed = seed;
                r.train.log_interval = log_every;
                r.network = spec;
                r.threads = threads > 0 ? threads : threads_from_environment(1);
                try {
                    err << "reproduce: " << stem << '\n';
                    const InpaintOutcome o = run_inpaint(r, err);
                    std::ostringstream row;
                    row << file.filename().string() << ',' << fixed(sr, 2) << ',' << fixed(o.metrics->psnr_db, 3)
                        << ',' << fixed(o.metrics->ssim, 3) << ',' << iters << ','
                        << (no_timing ? std::string("0") : fixed(o.seconds, 1));
                    rows.push_back(row.str());
                    out << stem << ' ' << metrics::format_cell(o.metrics->psnr_db, o.metrics->ssim) << '\n';
                } catch (const std::exception& e) {
                    ++failures;
                    err << "reproduce: " << stem << " failed: " << e.what() << '\n';
                }
            }
        }

        const fs::path csv = fs::path(out_dir) / "table.csv";
        std::ofstream f(csv);
        if (!f) throw IoError("cannot write " + csv.string());
        f << "image,sr,psnr_db,ssim,iters,seconds\n";
        for (const auto& row : rows) f << row << '\n';
        if (!f) throw IoError("short write to " + csv.string());
        out << "wrote " << csv.string() << " (" << rows.size() << " rows";
        if (failures) out << ", " << failures << " failed";
        out << ")\n";
        return failures ? kRuntime : kSuccess;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quaternion-network image inpainting", args.empty() ? "qinpaint" : args.front()};
    app.set_version_flag("--version", std::string(engine_version()));
    app.require_subcommand(1);

    InpaintCommand inpaint;
    MaskCommand mask;
    EvalCommand eval;
    ReproduceCommand reproduce;
    inpaint.add(app);
    mask.add(app);
    eval.add(app);
    reproduce.add(app);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("qinpaint");

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (inpaint.cmd->parsed()) return inpaint.execute(out, err);
        if (mask.cmd->parsed()) return mask.execute(out, err);
        if (eval.cmd->parsed()) return eval.execute(out, err);
        if (reproduce.cmd->parsed()) return reproduce.execute(out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DivergenceError& e) {
        err << "diverged: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}

}  // namespace qinpaint::cli
