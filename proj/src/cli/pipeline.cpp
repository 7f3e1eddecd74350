#include <json.hpp>

#include <chrono>
#include <fstream>
#include <ostream>

#include "qinpaint/cli/app.hpp"
#include "qinpaint/parallel.hpp"
#include "qinpaint/train/checkpoint.hpp"

#ifndef QINPAINT_VERSION
#define QINPAINT_VERSION "0.0.0"
#endif

namespace qinpaint::cli {

using nlohmann::json;

const char* engine_version() { return QINPAINT_VERSION; }

imaging::Mask build_mask(const MaskSource& source, Index height, Index width, std::uint64_t seed) {
    const std::uint64_t mask_seed = train::split_seed(seed).mask;
    switch (source.kind) {
        case MaskSource::Kind::File: return imaging::load_mask(source.path, height, width);
        case MaskSource::Kind::Random: return imaging::gen_random_mask(height, width, source.sr, mask_seed);
        case MaskSource::Kind::Structural: {
            imaging::StructuralParams p = source.structural;
            p.seed = mask_seed;
            return imaging::gen_structural_mask(height, width, source.pattern, p);
        }
    }
    throw std::logic_error("unhandled mask source");
}

namespace {

json mask_source_json(const MaskSource& m) {
    switch (m.kind) {
        case MaskSource::Kind::File: return {{"kind", "file"}, {"path", m.path.string()}};
        case MaskSource::Kind::Random: return {{"kind", "random"}, {"sr", m.sr}};
        case MaskSource::Kind::Structural:
            return {{"kind", "structural"},
                    {"pattern", imaging::to_string(m.pattern)},
                    {"lines", m.structural.lines},
                    {"line_width", m.structural.line_width},
                    {"text", m.structural.text},
                    {"glyph_scale", m.structural.glyph_scale},
                    {"line_gap", m.structural.line_gap}};
    }
    return {};
}

MaskSource mask_source_from_json(const json& j) {
    MaskSource m;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "file") {
        m.kind = MaskSource::Kind::File;
        m.path = j.at("path").get<std::string>();
    } else if (kind == "random") {
        m.kind = MaskSource::Kind::Random;
        m.sr = j.at("sr").get<double>();
    } else if (kind == "structural") {
        m.kind = MaskSource::Kind::Structural;
        m.pattern = imaging::pattern_from_string(j.at("pattern").get<std::string>());
        m.structural.lines = j.at("lines").get<int>();
        m.structural.line_width = j.at("line_width").get<double>();
        m.structural.text = j.at("text").get<std::string>();
        m.structural.glyph_scale = j.at("glyph_scale").get<int>();
        m.structural.line_gap = j.at("line_gap").get<int>();
    } else {
        throw std::invalid_argument("manifest: unknown mask kind '" + kind + "'");
    }
    return m;
}

json optional_path(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

}  // namespace

std::string manifest_json(const InpaintRequest& r, const InpaintOutcome& o) {
    const auto seeds = train::split_seed(r.seed);
    json j;
    j["engine_version"] = engine_version();
    j["input"] = r.input.string();
    j["ground_truth"] = optional_path(r.ground_truth);
    j["mask_source"] = mask_source_json(r.mask);
    j["seed"] = r.seed;
    j["derived_seeds"] = {{"mask", seeds.mask}, {"init", seeds.init}, {"input", seeds.input}};
    j["train"] = {{"learning_rate", r.train.learning_rate},
                  {"iterations", r.train.iterations},
                  {"input_amplitude", r.train.input_amplitude},
                  {"log_interval", r.train.log_interval},
                  {"deterministic", r.train.deterministic},
                  {"checkpoint_interval", r.train.checkpoint_interval},
                  {"checkpoint_dir", r.train.checkpoint_dir.string()}};
    j["network"] = json::parse(qnn::spec_to_json(r.network));
    j["pad"] = r.pad_reflect ? "reflect" : "none";
    j["threads"] = r.threads;
    j["outputs"] = {{"image", r.output.string()},
                    {"loss_trace", r.loss_trace.string()},
                    {"manifest", r.manifest.string()},
                    {"mask", optional_path(r.mask_output)}};
    j["observed_fraction"] = o.mask.sampling_rate();
    j["final_loss"] = o.loss_trace.empty() ? json(nullptr) : json(o.loss_trace.back());
    j["duration_seconds"] = o.seconds;
    j["metrics"] = o.metrics ? json::parse(metrics::to_json(*o.metrics)) : json(nullptr);
    return j.dump(2);
}

InpaintRequest request_from_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot read manifest " + manifest.string());
    InpaintRequest r;
    try {
        json j;
        in >> j;
        r.input = j.at("input").get<std::string>();
        if (!j.at("ground_truth").is_null()) r.ground_truth = j.at("ground_truth").get<std::string>();
        r.mask = mask_source_from_json(j.at("mask_source"));
        r.seed = j.at("seed").get<std::uint64_t>();
        const auto& t = j.at("train");
        r.train.learning_rate = t.at("learning_rate").get<double>();
        r.train.iterations = t.at("iterations").get<std::size_t>();
        r.train.input_amplitude = t.at("input_amplitude").get<double>();
        r.train.log_interval = t.at("log_interval").get<std::size_t>();
        r.train.deterministic = t.at("deterministic").get<bool>();
        r.train.checkpoint_interval = t.value("checkpoint_interval", std::size_t{0});
        r.train.checkpoint_dir = t.value("checkpoint_dir", std::string{});
        r.train.seed = r.seed;
        r.network = qnn::spec_from_json(j.at("network").dump());
        r.pad_reflect = j.at("pad").get<std::string>() == "reflect";
        r.threads = j.value("threads", 1);
        const auto& out = j.at("outputs");
        r.output = out.at("image").get<std::string>();
        r.loss_trace = out.at("loss_trace").get<std::string>();
        r.manifest = out.at("manifest").get<std::string>();
        if (!out.at("mask").is_null()) r.mask_output = out.at("mask").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError(manifest.string() + ": " + e.what());
    }
    return r;
}

InpaintOutcome run_inpaint(const InpaintRequest& request, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    set_num_threads(request.threads);

    const imaging::RgbImage source = imaging::load_png(request.input);
    std::optional<imaging::RgbImage> truth;
    if (request.ground_truth) {
        truth = imaging::load_png(*request.ground_truth);
        if (truth->height != source.height || truth->width != source.width)
            throw ShapeError("ground truth " + request.ground_truth->string() + " differs in size from the input");
    }

    const Index factor = request.network.downsampling_factor();
    if (!request.pad_reflect && (source.height % factor != 0 || source.width % factor != 0))
        throw GeometryError("image " + std::to_string(source.height) + "x" + std::to_string(source.width) +
                            ": both sides must be divisible by " + std::to_string(factor) +
                            " (pass --pad reflect to pad and crop)");

    InpaintOutcome outcome;
    outcome.mask = build_mask(request.mask, source.height, source.width, request.seed);
    if (request.mask_output) imaging::save_mask(outcome.mask, *request.mask_output);

    const imaging::RgbImage observed = imaging::apply_mask(source, outcome.mask);
    const imaging::RgbImage padded = request.pad_reflect ? imaging::reflect_pad(observed, factor) : observed;
    const imaging::Mask padded_mask = request.pad_reflect ? imaging::reflect_pad(outcome.mask, factor) : outcome.mask;

    const QTensor q_observed = imaging::apply_mask(imaging::encode(padded), padded_mask);

    train::TrainConfig cfg = request.train;
    cfg.seed = request.seed;
    const auto logger = [&](std::size_t it, double loss, const qnn::ParameterSet&) {
        if (cfg.log_interval > 0 && (it % cfg.log_interval == 0 || it + 1 == cfg.iterations))
            log << "iter " << it << " loss " << loss << '\n';
    };
    auto result = train::optimize(q_observed, padded_mask, request.network, cfg, logger);
    outcome.loss_trace = std::move(result.loss_trace);

    const QTensor composed = train::compose_output(q_observed, result.x_opt, padded_mask);
    imaging::RgbImage recovered = imaging::decode(composed);
    if (request.pad_reflect) recovered = imaging::crop(recovered, 0, 0, source.height, source.width);

    imaging::save_png(recovered, request.output);
    train::write_loss_trace(request.loss_trace, outcome.loss_trace);

    if (truth) {
        const imaging::RgbImage written = imaging::load_png(request.output);
        outcome.metrics = metrics::evaluate(*truth, written, request.ground_truth->string(), request.output.string());
    }

    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream manifest(request.manifest);
    if (!manifest) throw IoError("cannot write manifest " + request.manifest.string());
    manifest << manifest_json(request, outcome) << '\n';
    if (!manifest) throw IoError("short write to " + request.manifest.string());
    return outcome;
}

}  // namespace qinpaint::cli
