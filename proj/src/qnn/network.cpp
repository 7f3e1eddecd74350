#include "qinpaint/qnn/network.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace qinpaint::qnn {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

Index NetworkSpec::downsampling_factor() const {
    Index f = 1;
    for (const auto& s : stages)
        if (s.layer.kind == LayerKind::QConv) f *= s.layer.stride;
    return f;
}

Index NetworkSpec::output_channels() const {
    return stages.empty() ? input_channels : stages.back().layer.out_channels;
}

void NetworkSpec::validate() const {
    if (input_channels < 1) throw std::invalid_argument("network: input_channels must be >= 1");
    if (stages.empty()) throw std::invalid_argument("network: no stages");
    if (!(bn_epsilon > 0)) throw std::invalid_argument("network: bn_epsilon must be positive");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& l = stages[i].layer;
        const std::string where = "network stage " + std::to_string(i) + ": ";
        if (l.stride != 1 && l.stride != 2) throw std::invalid_argument(where + "stride must be 1 or 2");
        if (l.kernel < 1) throw std::invalid_argument(where + "kernel must be >= 1");
        if (l.padding < 0) throw std::invalid_argument(where + "padding must be >= 0");
        if (l.out_channels < 1) throw std::invalid_argument(where + "out_channels must be >= 1");
        if (l.kind == LayerKind::QDeconv && (l.output_padding < 0 || l.output_padding >= l.stride))
            throw std::invalid_argument(where + "output_padding must lie in [0, stride)");
    }
}

NetworkSpec default_spec(Index width, double leaky_slope) {
    const Activation leaky{ActivationKind::LeakyReLU, leaky_slope};
    auto conv = [&](Index stride) { return StageSpec{{LayerKind::QConv, 3, stride, 1, 0, width}, true, leaky}; };
    auto deconv = [&] { return StageSpec{{LayerKind::QDeconv, 3, 2, 1, 1, width}, true, leaky}; };

    NetworkSpec spec;
    spec.stages.push_back(conv(1));
    for (int i = 0; i < 4; ++i) spec.stages.push_back(conv(2));
    spec.stages.push_back(conv(1));
    for (int i = 0; i < 4; ++i) spec.stages.push_back(deconv());
    spec.stages.push_back(StageSpec{{LayerKind::QConv, 3, 1, 1, 0, 1}, false, {ActivationKind::None, 0.0}});
    return spec;
}

std::string spec_to_json(const NetworkSpec& spec) {
    json j;
    j["input_channels"] = spec.input_channels;
    j["bn_epsilon"] = spec.bn_epsilon;
    j["stages"] = json::array();
    for (const auto& s : spec.stages) {
        json st;
        st["type"] = s.layer.kind == LayerKind::QConv ? "qconv" : "qdeconv";
        st["kernel"] = s.layer.kernel;
        st["stride"] = s.layer.stride;
        st["padding"] = s.layer.padding;
        if (s.layer.kind == LayerKind::QDeconv) st["output_padding"] = s.layer.output_padding;
        st["out_channels"] = s.layer.out_channels;
        st["qbn"] = s.batch_norm;
        st["activation"] = std::string(to_string(s.activation.kind));
        if (s.activation.kind == ActivationKind::LeakyReLU) st["slope"] = s.activation.slope;
        j["stages"].push_back(st);
    }
    return j.dump(2);
}

NetworkSpec spec_from_json(const std::string& text) {
    NetworkSpec spec;
    try {
        const json j = json::parse(text);
        spec.input_channels = j.value("input_channels", Index{1});
        spec.bn_epsilon = j.value("bn_epsilon", 1e-5);
        for (const auto& st : j.at("stages")) {
            StageSpec s;
            const std::string type = st.at("type").get<std::string>();
            if (type == "qconv")
                s.layer.kind = LayerKind::QConv;
            else if (type == "qdeconv")
                s.layer.kind = LayerKind::QDeconv;
            else
                throw std::invalid_argument("unknown stage type '" + type + "'");
            s.layer.kernel = st.value("kernel", Index{3});
            s.layer.stride = st.value("stride", Index{1});
            s.layer.padding = st.value("padding", Index{1});
            s.layer.output_padding = st.value("output_padding", Index{0});
            s.layer.out_channels = st.at("out_channels").get<Index>();
            s.batch_norm = st.value("qbn", false);
            s.activation.kind = activation_from_string(st.value("activation", std::string("none")));
            s.activation.slope = st.value("slope", 0.2);
            spec.stages.push_back(s);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("network spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

void save_spec(const NetworkSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write network spec " + path.string());
    out << spec_to_json(spec) << '\n';
}

NetworkSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read network spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return spec_from_json(ss.str());
}

std::vector<Shape3> trace_shapes(const NetworkSpec& spec, Index height, Index width) {
    std::vector<Shape3> shapes;
    Index h = height, w = width;
    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        const auto& l = spec.stages[i].layer;
        if (l.kind == LayerKind::QConv) {
            h = conv_output_extent(h, l.kernel, l.geometry());
            w = conv_output_extent(w, l.kernel, l.geometry());
        } else {
            h = deconv_output_extent(h, l.kernel, l.geometry());
            w = deconv_output_extent(w, l.kernel, l.geometry());
        }
        if (h <= 0 || w <= 0)
            throw GeometryError("network stage " + std::to_string(i) + " produces non-positive extent for input " +
                                std::to_string(height) + "x" + std::to_string(width));
        shapes.push_back({l.out_channels, h, w});
    }
    return shapes;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace {

std::vector<StageParams> zero_stage_params(const NetworkSpec& spec) {
    std::vector<StageParams> v;
    Index in = spec.input_channels;
    for (const auto& s : spec.stages) {
        StageParams p{QKernel(s.layer.out_channels, in, s.layer.kernel, s.layer.kernel), std::nullopt};
        if (s.batch_norm) p.bn = BatchNormParams<double>::zeros(s.layer.out_channels);
        v.push_back(std::move(p));
        in = s.layer.out_channels;
    }
    return v;
}

template <typename F>
void for_each_block(const std::vector<StageParams>& v, F&& f) {
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto& k = v[s].kernel;
        f(s, "kernel", std::vector<Index>{k.out_channels, k.in_channels, k.kernel_h, k.kernel_w, 4}, k.body.size());
        f(s, "bias", std::vector<Index>{k.out_channels, 4}, k.bias.size());
        if (v[s].bn) {
            f(s, "bn_scale", std::vector<Index>{v[s].bn->channels(), 4}, v[s].bn->scale.size());
            f(s, "bn_shift", std::vector<Index>{v[s].bn->channels(), 4}, v[s].bn->shift.size());
        }
    }
}

}  // namespace

ParameterSet::ParameterSet(const NetworkSpec& spec) : values_(zero_stage_params(spec)), grads_(values_) {}

void ParameterSet::zero_grad() {
    for (auto& g : grads_) {
        g.kernel.body.setZero();
        g.kernel.bias.setZero();
        if (g.bn) {
            g.bn->scale.setZero();
            g.bn->shift.setZero();
        }
    }
}

Index ParameterSet::size() const {
    Index n = 0;
    for_each_block(values_, [&](std::size_t, const char*, const std::vector<Index>&, Index count) { n += count; });
    return n;
}

Index ParameterSet::body_weight_count() const {
    Index n = 0;
    for (const auto& v : values_) n += v.kernel.body_parameter_count();
    return n;
}

std::vector<ParameterBlock> ParameterSet::layout() const {
    std::vector<ParameterBlock> blocks;
    Index offset = 0;
    for_each_block(values_, [&](std::size_t s, const char* name, const std::vector<Index>& shape, Index count) {
        blocks.push_back({s, name, shape, offset, count});
        offset += count;
    });
    return blocks;
}

Eigen::VectorXd ParameterSet::flatten(const std::vector<StageParams>& v) {
    Index n = 0;
    for_each_block(v, [&](std::size_t, const char*, const std::vector<Index>&, Index count) { n += count; });
    Eigen::VectorXd flat(n);
    Index o = 0;
    auto put = [&](const auto& m) {
        flat.segment(o, m.size()) = m.reshaped();
        o += m.size();
    };
    for (const auto& p : v) {
        put(p.kernel.body);
        put(p.kernel.bias);
        if (p.bn) {
            put(p.bn->scale);
            put(p.bn->shift);
        }
    }
    return flat;
}

void ParameterSet::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat, std::vector<StageParams>& v) const {
    if (flat.size() != size())
        throw ShapeError("parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                         std::to_string(size()));
    Index o = 0;
    auto get = [&](auto& m) {
        m.reshaped() = flat.segment(o, m.size());
        o += m.size();
    };
    for (auto& p : v) {
        get(p.kernel.body);
        get(p.kernel.bias);
        if (p.bn) {
            get(p.bn->scale);
            get(p.bn->shift);
        }
    }
}

double init_stddev(Index in_channels, Index kernel_h, Index kernel_w) {
    return std::sqrt(2.0 / static_cast<double>(4 * in_channels * kernel_h * kernel_w));
}

ParameterSet init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterSet params(spec);
    std::mt19937_64 rng(seed);
    for (auto& p : params.values()) {
        std::normal_distribution<double> normal(0.0, init_stddev(p.kernel.in_channels, p.kernel.kernel_h,
                                                                 p.kernel.kernel_w));
        auto& body = p.kernel.body;
        for (Index i = 0; i < body.size(); ++i) body.data()[i] = normal(rng);
        p.kernel.bias.setZero();
        if (p.bn) *p.bn = BatchNormParams<double>::identity(p.bn->channels());
    }
    return params;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace {

void require_compatible(const NetworkSpec& spec, const ParameterSet& params) {
    const auto& v = params.values();
    if (v.size() != spec.stages.size())
        throw ShapeError("parameter set has " + std::to_string(v.size()) + " stages, spec has " +
                         std::to_string(spec.stages.size()));
    Index in = spec.input_channels;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& l = spec.stages[i].layer;
        const auto& k = v[i].kernel;
        if (k.out_channels != l.out_channels || k.in_channels != in || k.kernel_h != l.kernel ||
            k.kernel_w != l.kernel || v[i].bn.has_value() != spec.stages[i].batch_norm)
            throw ShapeError("parameter set does not match spec at stage " + std::to_string(i));
        in = l.out_channels;
    }
}

}  // namespace

QTensor network_forward(const NetworkSpec& spec, const ParameterSet& params, const QTensor& z, Tape* tape) {
    require_compatible(spec, params);
    if (z.channels() != spec.input_channels)
        throw ShapeError("network input has " + std::to_string(z.channels()) + " quaternion channels, expected " +
                         std::to_string(spec.input_channels));
    const Index f = spec.downsampling_factor();
    if (z.height() % f != 0 || z.width() % f != 0)
        throw GeometryError("network input " + std::to_string(z.height()) + "x" + std::to_string(z.width()) +
                            " must have sides divisible by " + std::to_string(f));
    const auto shapes = trace_shapes(spec, z.height(), z.width());
    if (shapes.back().height != z.height() || shapes.back().width != z.width())
        throw GeometryError("network does not return to the input spatial size");

    if (tape) {
        tape->clear();
        tape->stages.reserve(spec.stages.size());
    }

    QTensor x = z;
    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        const auto& st = spec.stages[i];
        const auto& p = params.values()[i];
        QTensor y = st.layer.kind == LayerKind::QConv
                        ? qconv2d_forward(x, p.kernel, st.layer.stride, st.layer.padding)
                        : qdeconv2d_forward(x, p.kernel, st.layer.geometry());
        Tape::Entry entry;
        if (st.batch_norm) {
            auto r = qbn_forward(y, *p.bn, spec.bn_epsilon);
            y = std::move(r.output);
            if (tape) entry.bn = std::move(r.cache);
        }
        if (st.activation.kind != ActivationKind::None) {
            if (tape && !st.batch_norm) entry.pre_activation = y;
            y = split_activation_forward(y, st.activation);
        }
        if (tape) {
            entry.input = std::move(x);
            tape->stages.push_back(std::move(entry));
        }
        x = std::move(y);
    }
    return x;
}

QTensor network_backward(const NetworkSpec& spec, ParameterSet& params, const Tape& tape, const QTensor& grad_out) {
    require_compatible(spec, params);
    if (tape.stages.size() != spec.stages.size()) throw ShapeError("tape does not match network spec");

    QTensor g = grad_out;
    for (std::size_t r = spec.stages.size(); r-- > 0;) {
        const auto& st = spec.stages[r];
        const auto& entry = tape.stages[r];
        const auto& p = params.values()[r];
        auto& grad = params.grads()[r];

        if (st.activation.kind != ActivationKind::None) {
            const QTensor pre = st.batch_norm ? qbn_affine(entry.bn->normalized, *p.bn) : entry.pre_activation;
            g = split_activation_backward(pre, g, st.activation);
        }
        if (st.batch_norm) {
            auto bg = qbn_backward(*entry.bn, *p.bn, g);
            grad.bn->scale += bg.params.scale;
            grad.bn->shift += bg.params.shift;
            g = std::move(bg.input);
        }
        auto cg = st.layer.kind == LayerKind::QConv
                      ? qconv2d_backward(entry.input, p.kernel, g, st.layer.stride, st.layer.padding)
                      : qdeconv2d_backward(entry.input, p.kernel, g, st.layer.geometry());
        grad.kernel.body += cg.kernel.body;
        grad.kernel.bias += cg.kernel.bias;
        g = std::move(cg.input);
    }
    return g;
}

}  // namespace qinpaint::qnn
