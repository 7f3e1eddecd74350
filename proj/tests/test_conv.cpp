#include <doctest.h>

#include <random>

#include "qinpaint/qnn/layers.hpp"
#include "support.hpp"

using namespace qinpaint;
using namespace qinpaint::qnn;
using testing::central_difference;
using testing::flat;
using testing::relative_error;
using testing::unflat;

namespace {

struct Geometry {
    Index cin, cout, h, w, k, stride, pad;
};

Geometry random_geometry(std::mt19937_64& rng) {
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    Geometry g{};
    g.cin = pick(1, 4);
    g.cout = pick(1, 4);
    g.k = pick(1, 3);
    g.stride = pick(1, 2);
    g.pad = pick(0, g.k - 1);
    g.h = pick(g.k, 9);
    g.w = pick(g.k, 9);
    return g;
}

}  // namespace

TEST_CASE("qconv2d matches the direct Hamilton sum") {
    std::mt19937_64 rng(20);
    for (int n = 0; n < 40; ++n) {
        const Geometry g = random_geometry(rng);
        const QTensor x = testing::random_tensor(g.cin, g.h, g.w, rng);
        const QKernel k = testing::random_kernel(g.cout, g.cin, g.k, g.k, rng);
        const QTensor got = qconv2d_forward(x, k, g.stride, g.pad);
        const QTensor want = testing::naive_qconv(x, k, g.stride, g.pad);
        REQUIRE(got.shape() == want.shape());
        CHECK(relative_error(flat(got), flat(want), 1.0) < 1e-12);
    }
}

TEST_CASE("qconv2d with a rectangular kernel") {
    std::mt19937_64 rng(21);
    const QTensor x = testing::random_tensor(2, 6, 7, rng);
    const QKernel k = testing::random_kernel(3, 2, 1, 3, rng);
    CHECK(relative_error(flat(qconv2d_forward(x, k, 1, 0)), flat(testing::naive_qconv(x, k, 1, 0)), 1.0) < 1e-12);
}

TEST_CASE("qdeconv2d matches the direct scatter sum") {
    std::mt19937_64 rng(22);
    for (int n = 0; n < 40; ++n) {
        const Geometry g = random_geometry(rng);
        const Index out_pad = g.stride > 1 ? std::uniform_int_distribution<Index>(0, g.stride - 1)(rng) : 0;
        const QTensor x = testing::random_tensor(g.cin, g.h, g.w, rng);
        const QKernel k = testing::random_kernel(g.cout, g.cin, g.k, g.k, rng);
        const QTensor got = qdeconv2d_forward(x, k, ConvGeometry{g.stride, g.pad, out_pad});
        const QTensor want = testing::naive_qdeconv(x, k, g.stride, g.pad, out_pad);
        REQUIRE(got.shape() == want.shape());
        CHECK(relative_error(flat(got), flat(want), 1.0) < 1e-12);
    }
}

TEST_CASE("1x1 transposed convolution is the same Hamilton product as qconv") {
    std::mt19937_64 rng(23);
    const QTensor x = testing::random_tensor(3, 5, 5, rng);
    const QKernel k = testing::random_kernel(2, 3, 1, 1, rng);
    const QTensor a = qdeconv2d_forward(x, k, ConvGeometry{1, 0, 0});
    const QTensor b = qconv2d_forward(x, k, 1, 0);
    CHECK(relative_error(flat(a), flat(b), 1.0) < 1e-14);
}

TEST_CASE("qdeconv2d is the adjoint of qconv2d with the partner kernel") {
    std::mt19937_64 rng(24);
    for (int n = 0; n < 20; ++n) {
        const Geometry g = random_geometry(rng);
        const Index out_pad = g.stride > 1 ? 1 : 0;
        QKernel k = testing::random_kernel(g.cout, g.cin, g.k, g.k, rng, false);
        const QTensor x = testing::random_tensor(g.cin, g.h, g.w, rng);
        const QTensor dx = qdeconv2d_forward(x, k, ConvGeometry{g.stride, g.pad, out_pad});
        const QTensor y = testing::random_tensor(dx.channels(), dx.height(), dx.width(), rng);
        const QKernel partner = adjoint_partner(k);
        const QTensor cy = qconv2d_forward(y, partner, g.stride, g.pad);
        REQUIRE(cy.shape() == x.shape());
        const double lhs = real_inner(dx, y), rhs = real_inner(x, cy);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("zero imaginary planes reduce qconv to a real convolution") {
    std::mt19937_64 rng(25);
    for (int n = 0; n < 10; ++n) {
        const Geometry g = random_geometry(rng);
        QTensor x = testing::random_tensor(g.cin, g.h, g.w, rng);
        QKernel k = testing::random_kernel(g.cout, g.cin, g.k, g.k, rng);
        for (int p = 1; p < 4; ++p) {
            x.plane(p).setZero();
            k.body.col(p).setZero();
            k.bias.col(p).setZero();
        }
        const QTensor y = qconv2d_forward(x, k, g.stride, g.pad);

        std::vector<Eigen::MatrixXd> real_in;
        for (Index i = 0; i < g.cin; ++i) real_in.push_back(x.image(W, i));
        std::vector<std::vector<Eigen::MatrixXd>> weights(g.cout);
        for (Index o = 0; o < g.cout; ++o)
            for (Index i = 0; i < g.cin; ++i) {
                Eigen::MatrixXd m(g.k, g.k);
                for (Index ky = 0; ky < g.k; ++ky)
                    for (Index kx = 0; kx < g.k; ++kx) m(ky, kx) = k.body(k.index(o, i, ky, kx), W);
                weights[o].push_back(m);
            }
        for (Index o = 0; o < g.cout; ++o) {
            const Eigen::MatrixXd ref = testing::naive_real_conv(real_in, weights, k.bias(o, W), o, g.stride, g.pad);
            CHECK((y.image(W, o) - ref).cwiseAbs().maxCoeff() <= 1e-13);
            for (int p = 1; p < 4; ++p) CHECK(y.image(p, o).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("qconv2d gradients agree with central differences") {
    std::mt19937_64 rng(26);
    for (int n = 0; n < 6; ++n) {
        const Geometry g = random_geometry(rng);
        const QTensor x = testing::random_tensor(g.cin, g.h, g.w, rng);
        const QKernel k = testing::random_kernel(g.cout, g.cin, g.k, g.k, rng);
        const QTensor probe = qconv2d_forward(x, k, g.stride, g.pad);
        const QTensor r = testing::random_tensor(probe.channels(), probe.height(), probe.width(), rng);
        // L = <r, conv(x)>
        const auto grads = qconv2d_backward(x, k, r, g.stride, g.pad);

        const auto fx = [&](const Eigen::VectorXd& v) {
            return real_inner(r, qconv2d_forward(unflat(v, x.shape()), k, g.stride, g.pad));
        };
        CHECK(relative_error(flat(grads.input), central_difference(flat(x), fx)) < 1e-4);

        const Eigen::VectorXd body = Eigen::Map<const Eigen::VectorXd>(k.body.data(), k.body.size());
        const auto fk = [&](const Eigen::VectorXd& v) {
            QKernel kk = k;
            Eigen::Map<Eigen::VectorXd>(kk.body.data(), kk.body.size()) = v;
            return real_inner(r, qconv2d_forward(x, kk, g.stride, g.pad));
        };
        const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(grads.kernel.body.data(), body.size());
        CHECK(relative_error(analytic, central_difference(body, fk)) < 1e-4);

        const Eigen::VectorXd bias = Eigen::Map<const Eigen::VectorXd>(k.bias.data(), k.bias.size());
        const auto fb = [&](const Eigen::VectorXd& v) {
            QKernel kk = k;
            Eigen::Map<Eigen::VectorXd>(kk.bias.data(), kk.bias.size()) = v;
            return real_inner(r, qconv2d_forward(x, kk, g.stride, g.pad));
        };
        const Eigen::VectorXd bias_grad = Eigen::Map<const Eigen::VectorXd>(grads.kernel.bias.data(), bias.size());
        CHECK(relative_error(bias_grad, central_difference(bias, fb)) < 1e-4);
    }
}

TEST_CASE("qdeconv2d gradients agree with central differences") {
    std::mt19937_64 rng(27);
    for (int n = 0; n < 6; ++n) {
        const Geometry g = random_geometry(rng);
        const ConvGeometry geo{g.stride, g.pad, g.stride - 1};
        const QTensor x = testing::random_tensor(g.cin, g.h, g.w, rng);
        const QKernel k = testing::random_kernel(g.cout, g.cin, g.k, g.k, rng);
        const QTensor probe = qdeconv2d_forward(x, k, geo);
        const QTensor r = testing::random_tensor(probe.channels(), probe.height(), probe.width(), rng);
        const auto grads = qdeconv2d_backward(x, k, r, geo);

        const auto fx = [&](const Eigen::VectorXd& v) {
            return real_inner(r, qdeconv2d_forward(unflat(v, x.shape()), k, geo));
        };
        CHECK(relative_error(flat(grads.input), central_difference(flat(x), fx)) < 1e-4);

        const Eigen::VectorXd body = Eigen::Map<const Eigen::VectorXd>(k.body.data(), k.body.size());
        const auto fk = [&](const Eigen::VectorXd& v) {
            QKernel kk = k;
            Eigen::Map<Eigen::VectorXd>(kk.body.data(), kk.body.size()) = v;
            return real_inner(r, qdeconv2d_forward(x, kk, geo));
        };
        const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(grads.kernel.body.data(), body.size());
        CHECK(relative_error(analytic, central_difference(body, fk)) < 1e-4);

        const Eigen::VectorXd bias_grad =
            Eigen::Map<const Eigen::VectorXd>(grads.kernel.bias.data(), grads.kernel.bias.size());
        Eigen::VectorXd expected(bias_grad.size());
        for (int p = 0; p < 4; ++p)
            for (Index o = 0; o < r.channels(); ++o) expected[p * r.channels() + o] = r.image(p, o).sum();
        CHECK(relative_error(bias_grad, expected) < 1e-12);
    }
}

TEST_CASE("geometry checks") {
    std::mt19937_64 rng(28);
    const QTensor x = testing::random_tensor(2, 4, 4, rng);
    const QKernel wrong_in = testing::random_kernel(1, 3, 3, 3, rng);
    CHECK_THROWS_AS(qconv2d_forward(x, wrong_in, 1, 1), ShapeError);
    const QKernel k = testing::random_kernel(1, 2, 5, 5, rng);
    CHECK_THROWS_AS(qconv2d_forward(x, k, 1, 0), GeometryError);
    const QKernel k3 = testing::random_kernel(1, 2, 3, 3, rng);
    CHECK_THROWS_AS(qdeconv2d_forward(x, k3, ConvGeometry{2, 1, 2}), GeometryError);
    CHECK(conv_output_extent(256, 3, ConvGeometry{2, 1, 0}) == 128);
    CHECK(deconv_output_extent(128, 3, ConvGeometry{2, 1, 1}) == 256);
}

TEST_CASE("quaternion layer keeps a quarter of the matched real weights") {
    const QKernel k(64, 64, 3, 3);
    CHECK(k.body_parameter_count() == 147456);
    CHECK(k.parameter_count() == 147456 + 256);
    CHECK(matched_real_body_count(64, 64, 3, 3) == 589824);
    CHECK(4 * k.body_parameter_count() == matched_real_body_count(64, 64, 3, 3));
}
