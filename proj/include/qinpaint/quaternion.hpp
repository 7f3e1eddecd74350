#pragma once

#include <cmath>
#include <ostream>

namespace qinpaint {

/// Quaternion w + x i + y j + z k over a real scalar type.
template <typename Scalar>
struct Quaternion {
    Scalar w{0};
    Scalar x{0};
    Scalar y{0};
    Scalar z{0};

    constexpr Quaternion() = default;
    constexpr Quaternion(Scalar w_, Scalar x_, Scalar y_, Scalar z_) : w(w_), x(x_), y(y_), z(z_) {}

    static constexpr Quaternion real(Scalar v) { return {v, 0, 0, 0}; }
    static constexpr Quaternion i() { return {0, 1, 0, 0}; }
    static constexpr Quaternion j() { return {0, 0, 1, 0}; }
    static constexpr Quaternion k() { return {0, 0, 0, 1}; }

    constexpr Scalar operator[](int component) const {
        switch (component) {
            case 0: return w;
            case 1: return x;
            case 2: return y;
            default: return z;
        }
    }

    friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

using Quat = Quaternion<double>;

/// Hamilton product. Non-commutative: ij = k, ji = -k.
template <typename Scalar>
constexpr Quaternion<Scalar> hamilton(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
    return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
}

template <typename Scalar>
constexpr Quaternion<Scalar> operator*(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
    return hamilton(p, q);
}

template <typename Scalar>
constexpr Quaternion<Scalar> operator+(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
    return {p.w + q.w, p.x + q.x, p.y + q.y, p.z + q.z};
}

template <typename Scalar>
constexpr Quaternion<Scalar> operator-(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
    return {p.w - q.w, p.x - q.x, p.y - q.y, p.z - q.z};
}

template <typename Scalar>
constexpr Quaternion<Scalar> operator-(const Quaternion<Scalar>& q) {
    return {-q.w, -q.x, -q.y, -q.z};
}

template <typename Scalar>
constexpr Quaternion<Scalar> operator*(Scalar s, const Quaternion<Scalar>& q) {
    return {s * q.w, s * q.x, s * q.y, s * q.z};
}

template <typename Scalar>
constexpr Quaternion<Scalar> conjugate(const Quaternion<Scalar>& q) {
    return {q.w, -q.x, -q.y, -q.z};
}

template <typename Scalar>
constexpr Scalar modulus_sq(const Quaternion<Scalar>& q) {
    return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
}

template <typename Scalar>
Scalar modulus(const Quaternion<Scalar>& q) {
    return std::sqrt(modulus_sq(q));
}

template <typename Scalar>
constexpr bool is_pure(const Quaternion<Scalar>& q) {
    return q.w == Scalar(0);
}

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const Quaternion<Scalar>& q) {
    return os << '(' << q.w << ", " << q.x << ", " << q.y << ", " << q.z << ')';
}

}  // namespace qinpaint
