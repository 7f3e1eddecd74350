#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "qinpaint/errors.hpp"
#include "qinpaint/quaternion.hpp"

namespace qinpaint {

using Index = Eigen::Index;

struct Shape3 {
    Index channels = 0;
    Index height = 0;
    Index width = 0;

    Index numel() const { return channels * height * width; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
    std::ostringstream os;
    os << s.channels << 'x' << s.height << 'x' << s.width;
    return os.str();
}

/// Component plane index of a quaternion: W is the real part.
enum Plane : int { W = 0, X = 1, Y = 2, Z = 3 };

/// A channels x height x width grid of quaternions held as four real planes.
///
/// Storage is a column-major (C*H*W) x 4 matrix: column p is plane p, laid out
/// channel-major then row-major. Read as one flat buffer it is a real tensor of
/// 4*C channels ordered plane-major (real channel = p*C + c), which is the
/// layout the convolution kernels consume directly.
template <typename Scalar>
class QTensorT {
public:
    using Planes = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;
    using ImageMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using ConstImageMap =
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    QTensorT() = default;
    QTensorT(Index channels, Index height, Index width)
        : shape_{channels, height, width}, data_(Planes::Zero(channels * height * width, 4)) {
        if (channels < 0 || height < 0 || width < 0) throw GeometryError("negative tensor extent");
    }
    explicit QTensorT(const Shape3& s) : QTensorT(s.channels, s.height, s.width) {}

    static QTensorT zeros(const Shape3& s) { return QTensorT(s); }

    const Shape3& shape() const { return shape_; }
    Index channels() const { return shape_.channels; }
    Index height() const { return shape_.height; }
    Index width() const { return shape_.width; }
    Index spatial() const { return shape_.height * shape_.width; }
    Index numel() const { return shape_.numel(); }

    Planes& planes() { return data_; }
    const Planes& planes() const { return data_; }

    auto plane(int p) { return data_.col(p); }
    auto plane(int p) const { return data_.col(p); }

    /// Flat real buffer of 4*C*H*W entries.
    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }

    Index offset(Index c, Index h, Index w) const { return (c * shape_.height + h) * shape_.width + w; }

    /// One channel of one plane as an H x W row-major map.
    ImageMap image(int p, Index c) {
        return ImageMap(data_.col(p).data() + c * spatial(), shape_.height, shape_.width);
    }
    ConstImageMap image(int p, Index c) const {
        return ConstImageMap(data_.col(p).data() + c * spatial(), shape_.height, shape_.width);
    }

    Quaternion<Scalar> at(Index c, Index h, Index w) const {
        const Index o = offset(c, h, w);
        return {data_(o, 0), data_(o, 1), data_(o, 2), data_(o, 3)};
    }

    void set(Index c, Index h, Index w, const Quaternion<Scalar>& q) {
        const Index o = offset(c, h, w);
        data_(o, 0) = q.w;
        data_(o, 1) = q.x;
        data_(o, 2) = q.y;
        data_(o, 3) = q.z;
    }

    QTensorT& operator+=(const QTensorT& other) {
        require_same_shape(*this, other, "add");
        data_ += other.data_;
        return *this;
    }
    QTensorT& operator-=(const QTensorT& other) {
        require_same_shape(*this, other, "sub");
        data_ -= other.data_;
        return *this;
    }
    QTensorT& operator*=(Scalar s) {
        data_ *= s;
        return *this;
    }

    friend bool operator==(const QTensorT& a, const QTensorT& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

    static void require_same_shape(const QTensorT& a, const QTensorT& b, const char* what) {
        if (!(a.shape_ == b.shape_)) {
            throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape_) + " vs " +
                             to_string(b.shape_));
        }
    }

private:
    Shape3 shape_{};
    Planes data_{};
};

using QTensor = QTensorT<double>;

enum class ElementwiseOp { Add, Sub };

template <typename Scalar>
QTensorT<Scalar> qtensor_elementwise(const QTensorT<Scalar>& a, const QTensorT<Scalar>& b, ElementwiseOp op) {
    QTensorT<Scalar> out = a;
    if (op == ElementwiseOp::Add)
        out += b;
    else
        out -= b;
    return out;
}

template <typename Scalar>
QTensorT<Scalar> operator+(const QTensorT<Scalar>& a, const QTensorT<Scalar>& b) {
    return qtensor_elementwise(a, b, ElementwiseOp::Add);
}

template <typename Scalar>
QTensorT<Scalar> operator-(const QTensorT<Scalar>& a, const QTensorT<Scalar>& b) {
    return qtensor_elementwise(a, b, ElementwiseOp::Sub);
}

template <typename Scalar>
QTensorT<Scalar> qtensor_scale(const QTensorT<Scalar>& a, Scalar s) {
    QTensorT<Scalar> out = a;
    out *= s;
    return out;
}

/// Sum of squared moduli over all entries.
template <typename Scalar>
Scalar frobenius_norm_sq(const QTensorT<Scalar>& a) {
    return a.planes().squaredNorm();
}

/// Real inner product of the 4-plane representations.
template <typename Scalar>
Scalar real_inner(const QTensorT<Scalar>& a, const QTensorT<Scalar>& b) {
    QTensorT<Scalar>::require_same_shape(a, b, "inner");
    return (a.planes().array() * b.planes().array()).sum();
}

/// True when the real plane is zero within `tol` (exact by default).
template <typename Scalar>
bool is_pure(const QTensorT<Scalar>& a, Scalar tol = Scalar(0)) {
    if (a.numel() == 0) return true;
    return a.plane(W).cwiseAbs().maxCoeff() <= tol;
}

template <typename Scalar>
bool all_finite(const QTensorT<Scalar>& a) {
    return a.planes().allFinite();
}

/// Purity tolerance used after floating-point pipelines.
inline constexpr double kPurityTolerance = 1e-12;

}  // namespace qinpaint
