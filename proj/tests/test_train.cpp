#include <doctest.h>

#include <filesystem>
#include <random>

#include "qinpaint/train/adam.hpp"
#include "qinpaint/train/checkpoint.hpp"
#include "qinpaint/train/objective.hpp"
#include "qinpaint/train/optimize.hpp"
#include "support.hpp"

using namespace qinpaint;
using namespace qinpaint::train;
using imaging::Mask;
namespace fs = std::filesystem;

namespace {

qnn::NetworkSpec tiny_spec() {
    qnn::NetworkSpec spec;
    const qnn::Activation leaky{qnn::ActivationKind::LeakyReLU, 0.2};
    spec.stages.push_back({{qnn::LayerKind::QConv, 3, 1, 1, 0, 4}, true, leaky});
    spec.stages.push_back({{qnn::LayerKind::QConv, 3, 2, 1, 0, 4}, true, leaky});
    spec.stages.push_back({{qnn::LayerKind::QDeconv, 3, 2, 1, 1, 4}, true, leaky});
    spec.stages.push_back({{qnn::LayerKind::QConv, 3, 1, 1, 0, 1}, false, {qnn::ActivationKind::None, 0.0}});
    return spec;
}

// Smooth colour field as a pure quaternion tensor.
QTensor synthetic_image(Index h, Index w) {
    QTensor t(1, h, w);
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
            t.set(0, y, x, Quat{0.0, 0.5 + 0.4 * std::sin(0.3 * x), 0.5 + 0.4 * std::cos(0.2 * y),
                                0.25 + 0.5 * double(x + y) / double(h + w)});
    return t;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("qinpaint_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("masked loss") {
    QTensor pred(1, 2, 2), target(1, 2, 2);
    CHECK(masked_loss(pred, target, Mask::full(2, 2)) == 0.0);
    pred.set(0, 1, 0, Quat{0, 0.1, 0.2, 0.2});
    pred.set(0, 0, 1, Quat{5, 5, 5, 5});
    Mask m = Mask::empty(2, 2);
    CHECK(masked_loss(pred, target, m) == 0.0);
    m.set(1, 0, true);
    CHECK(masked_loss(pred, target, m) == doctest::Approx(0.01 + 0.04 + 0.04).epsilon(1e-14));
    CHECK_THROWS_AS(masked_loss(pred, QTensor(1, 2, 3), m), ShapeError);
}

TEST_CASE("loss gradient agrees with central differences and vanishes off the mask") {
    std::mt19937_64 rng(50);
    const QTensor pred = testing::random_tensor(2, 3, 4, rng), target = testing::random_tensor(2, 3, 4, rng);
    Mask m = Mask::full(3, 4);
    m.set(0, 0, false);
    m.set(2, 3, false);
    const QTensor g = loss_backward(pred, target, m);
    const auto f = [&](const Eigen::VectorXd& v) { return masked_loss(testing::unflat(v, pred.shape()), target, m); };
    CHECK(testing::relative_error(testing::flat(g), testing::central_difference(testing::flat(pred), f)) < 1e-6);
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < 2; ++c) {
            CHECK(g.image(p, c)(0, 0) == 0.0);
            CHECK(g.image(p, c)(2, 3) == 0.0);
        }
    CHECK(loss_backward(pred, pred, m).planes().isZero(0.0));
}

TEST_CASE("composition copies observed entries and fills the rest") {
    std::mt19937_64 rng(51);
    const QTensor obs = testing::random_tensor(1, 4, 4, rng), est = testing::random_tensor(1, 4, 4, rng);
    CHECK(compose_output(obs, est, Mask::full(4, 4)) == obs);
    CHECK(compose_output(obs, est, Mask::empty(4, 4)) == est);
    const Mask m = imaging::gen_random_mask(4, 4, 0.5, 9);
    const QTensor out = compose_output(obs, est, m);
    for (Index y = 0; y < 4; ++y)
        for (Index x = 0; x < 4; ++x) CHECK(out.at(0, y, x) == (m.observed(y, x) ? obs : est).at(0, y, x));
}

TEST_CASE("adam follows a scalar reference") {
    // f(t) = (t - 3)^2 from t = 0, three steps at lr 0.01
    double t = 0.0, m = 0.0, v = 0.0;
    Eigen::VectorXd value = Eigen::VectorXd::Zero(1);
    AdamState state;
    for (int step = 1; step <= 3; ++step) {
        const double g = 2.0 * (t - 3.0);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, step)), vh = v / (1.0 - std::pow(0.999, step));
        t -= 0.01 * mh / (std::sqrt(vh) + 1e-8);

        Eigen::VectorXd grad(1);
        grad[0] = 2.0 * (value[0] - 3.0);
        adam_update(value, grad, state, 0.01);
        CHECK(std::abs(value[0] - t) < 1e-12);
    }
    CHECK(state.step == 3);
}

TEST_CASE("adam step-one identities") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(4, -1, 1);
    const Eigen::VectorXd start = v;
    AdamState zero_state;
    adam_update(v, Eigen::VectorXd::Zero(4), zero_state, 0.01);
    CHECK(v == start);

    AdamState s;
    Eigen::VectorXd g(4);
    g << 3.0, -0.5, 1e3, -7.0;
    adam_update(v, g, s, 0.01);
    for (Index i = 0; i < 4; ++i) CHECK(std::abs(std::abs(v[i] - start[i]) - 0.01) < 1e-8);
    CHECK_THROWS(adam_update(v, Eigen::VectorXd::Zero(3), s, 0.01));
}

TEST_CASE("seed splitting and the fixed network input") {
    const SeedPlan a = split_seed(7), b = split_seed(7), c = split_seed(8);
    CHECK(a.mask == b.mask);
    CHECK(a.init == b.init);
    CHECK(a.input == b.input);
    CHECK(a.mask != a.init);
    CHECK(a.init != a.input);
    CHECK(a.mask != c.mask);

    const QTensor z = random_input(1, 8, 8, 0.1, 3);
    CHECK(z == random_input(1, 8, 8, 0.1, 3));
    CHECK(z.planes().minCoeff() >= 0.0);
    CHECK(z.planes().maxCoeff() <= 0.1);
    for (int p = 0; p < 4; ++p) CHECK(z.plane(p).maxCoeff() > 0.0);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.iterations = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("a single iteration returns the output after one update") {
    const qnn::NetworkSpec spec = tiny_spec();
    const QTensor img = synthetic_image(8, 8);
    TrainConfig cfg;
    cfg.iterations = 1;
    cfg.seed = 4;
    const OptimizeResult r = optimize(img, Mask::full(8, 8), spec, cfg);
    REQUIRE(r.loss_trace.size() == 1);

    // replay by hand: init, one step, forward
    const SeedPlan seeds = split_seed(4);
    qnn::ParameterSet params = qnn::init_parameters(spec, seeds.init);
    const QTensor z = random_input(1, 8, 8, cfg.input_amplitude, seeds.input);
    qnn::Tape tape;
    const QTensor out = qnn::network_forward(spec, params, z, &tape);
    CHECK(masked_loss(out, img, Mask::full(8, 8)) == r.loss_trace[0]);
    params.zero_grad();
    qnn::network_backward(spec, params, tape, loss_backward(out, img, Mask::full(8, 8)));
    AdamState state;
    adam_step(params, state, cfg.learning_rate);
    CHECK(qnn::network_forward(spec, params, z) == r.x_opt);
    CHECK(params.values() == r.params.values());
}

TEST_CASE("optimization descends and is deterministic") {
    const qnn::NetworkSpec spec = tiny_spec();
    const QTensor img = synthetic_image(32, 32);
    TrainConfig cfg;
    cfg.iterations = 200;
    cfg.seed = 12;
    const OptimizeResult a = optimize(img, Mask::full(32, 32), spec, cfg);
    CHECK(a.loss_trace.back() < a.loss_trace.front());
    const OptimizeResult b = optimize(img, Mask::full(32, 32), spec, cfg);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.x_opt == b.x_opt);
}

TEST_CASE("optimize rejects impure or mismatched observations") {
    const qnn::NetworkSpec spec = tiny_spec();
    QTensor img = synthetic_image(8, 8);
    TrainConfig cfg;
    cfg.iterations = 1;
    CHECK_THROWS_AS(optimize(img, Mask::full(8, 4), spec, cfg), ShapeError);
    img.planes()(0, W) = 0.5;
    CHECK_THROWS(optimize(img, Mask::full(8, 8), spec, cfg));
}

TEST_CASE("divergence is reported with the iteration") {
    const qnn::NetworkSpec spec = tiny_spec();
    QTensor img = synthetic_image(8, 8);
    img.planes()(3, X) = std::numeric_limits<double>::infinity();
    TrainConfig cfg;
    cfg.iterations = 3;
    try {
        optimize(img, Mask::full(8, 8), spec, cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.iteration() == 0);
    }
}

TEST_CASE("checkpoints and loss traces round-trip") {
    const fs::path dir = scratch_dir("ckpt");
    const qnn::NetworkSpec spec = tiny_spec();
    const qnn::ParameterSet params = qnn::init_parameters(spec, 77);
    const fs::path manifest = save_checkpoint(params, dir, 42);
    CHECK(manifest.filename() == "params_00000042.json");
    CHECK(fs::exists(dir / "params_00000042.bin"));
    CHECK(fs::file_size(dir / "params_00000042.bin") == static_cast<std::uintmax_t>(8 * params.size()));
    qnn::ParameterSet loaded(spec);
    load_checkpoint(manifest, loaded);
    CHECK(loaded.values() == params.values());

    const std::vector<double> trace{1.0, 0.5, 1.0 / 3.0, 1e-300};
    write_loss_trace(dir / "loss.csv", trace);
    CHECK(read_loss_trace(dir / "loss.csv") == trace);

    qnn::NetworkSpec other = spec;
    other.stages[0].layer.out_channels = 5;
    other.stages[1].layer.out_channels = 5;
    qnn::ParameterSet wrong(other);
    CHECK_THROWS_AS(load_checkpoint(manifest, wrong), ShapeError);
    fs::remove_all(dir);
}

TEST_CASE("optimize writes periodic checkpoints") {
    const fs::path dir = scratch_dir("periodic");
    TrainConfig cfg;
    cfg.iterations = 4;
    cfg.checkpoint_interval = 2;
    cfg.checkpoint_dir = dir;
    const OptimizeResult r = optimize(synthetic_image(8, 8), Mask::full(8, 8), tiny_spec(), cfg);
    CHECK(fs::exists(dir / "params_00000002.json"));
    CHECK(fs::exists(dir / "params_00000004.json"));
    qnn::ParameterSet loaded(tiny_spec());
    load_checkpoint(dir / "params_00000004.json", loaded);
    CHECK(loaded.values() == r.params.values());
    fs::remove_all(dir);
}
