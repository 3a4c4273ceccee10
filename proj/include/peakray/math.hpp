#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace peakray {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
  Vec3& operator+=(Vec3 o) { return *this = *this + o; }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) { return a / length(a); }

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return {}; }
  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec3 column(int c) const { return {m[c], m[3 + c], m[6 + c]}; }
  void set_column(int c, Vec3 v) {
    m[c] = v.x;
    m[3 + c] = v.y;
    m[6 + c] = v.z;
  }

  friend Vec3 operator*(const Mat3& a, Vec3 v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
  }
  friend Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
    return r;
  }
  friend bool operator==(const Mat3&, const Mat3&) = default;

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
  double determinant() const {
    const auto& a = *this;
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
};

/// Right-handed rotation by `angle` radians about unit `axis` (Rodrigues).
inline Mat3 axis_angle(Vec3 axis, double angle) {
  const Vec3 k = normalize(axis);
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r(0, 0) = t * k.x * k.x + c;
  r(0, 1) = t * k.x * k.y - s * k.z;
  r(0, 2) = t * k.x * k.z + s * k.y;
  r(1, 0) = t * k.x * k.y + s * k.z;
  r(1, 1) = t * k.y * k.y + c;
  r(1, 2) = t * k.y * k.z - s * k.x;
  r(2, 0) = t * k.x * k.z - s * k.y;
  r(2, 1) = t * k.y * k.z + s * k.x;
  r(2, 2) = t * k.z * k.z + c;
  return r;
}

/// Gram-Schmidt on the columns; keeps the result right-handed.
inline Mat3 orthonormalize(const Mat3& a) {
  Vec3 c0 = normalize(a.column(0));
  Vec3 c1 = a.column(1);
  c1 = normalize(c1 - c0 * dot(c0, c1));
  Vec3 c2 = cross(c0, c1);
  Mat3 r;
  r.set_column(0, c0);
  r.set_column(1, c1);
  r.set_column(2, c2);
  return r;
}

/// Largest absolute entry of RᵀR − I.
inline double orthonormality_error(const Mat3& r) {
  const Mat3 p = r.transposed() * r;
  double e = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e = std::max(e, std::abs(p(i, j) - (i == j ? 1.0 : 0.0)));
  return e;
}

/// Unit quaternion (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
  }
  Quat conjugate() const { return {w, -x, -y, -z}; }
  friend Quat operator*(Quat a, Quat b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }
  friend bool operator==(Quat, Quat) = default;

  Vec3 rotate(Vec3 v) const {
    const Quat p{0.0, v.x, v.y, v.z};
    const Quat r = (*this) * p * conjugate();
    return {r.x, r.y, r.z};
  }

  static Quat from_axis_angle(Vec3 axis, double angle) {
    const Vec3 k = normalize(axis);
    const double s = std::sin(angle / 2);
    return {std::cos(angle / 2), k.x * s, k.y * s, k.z * s};
  }
};

/// Shortest-arc spherical interpolation.
inline Quat slerp(Quat a, Quat b, double u) {
  double d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  if (d < 0.0) {
    b = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  double wa = 1.0 - u, wb = u;
  if (d < 0.9995) {
    const double theta = std::acos(d);
    const double s = std::sin(theta);
    wa = std::sin((1.0 - u) * theta) / s;
    wb = std::sin(u * theta) / s;
  }
  return Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z}
      .normalized();
}

/// Signed rotation angle of `q` about the z axis (swing-twist decomposition).
inline double twist_about_z(Quat q) {
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  return 2.0 * std::atan2(q.z, q.w);
}

}  // namespace peakray
