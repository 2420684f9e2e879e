#pragma once

// Second-order forward-mode scalar: carries value, first and second
// derivative with respect to one designated input (time, in this project).

#include <cmath>
#include <stdexcept>

namespace pikan {

struct Jet2 {
    double v = 0.0;   // value
    double d1 = 0.0;  // df/dt
    double d2 = 0.0;  // d2f/dt2

    constexpr Jet2() = default;
    constexpr Jet2(double v_, double d1_, double d2_) : v(v_), d1(d1_), d2(d2_) {}
};

// Lift a constant (zero derivatives) or the designated input t (d1 = 1).
constexpr Jet2 lift_const(double c) { return {c, 0.0, 0.0}; }
constexpr Jet2 lift_input(double t) { return {t, 1.0, 0.0}; }

constexpr Jet2 operator+(const Jet2& a, const Jet2& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
constexpr Jet2 operator-(const Jet2& a, const Jet2& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
constexpr Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }

// (fg)'' = f''g + 2f'g' + fg''
constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
constexpr Jet2 operator*(double c, const Jet2& a) { return {c * a.v, c * a.d1, c * a.d2}; }
constexpr Jet2 operator*(const Jet2& a, double c) { return c * a; }
constexpr Jet2 operator+(const Jet2& a, double c) { return {a.v + c, a.d1, a.d2}; }
constexpr Jet2 operator+(double c, const Jet2& a) { return a + c; }
constexpr Jet2 operator-(const Jet2& a, double c) { return {a.v - c, a.d1, a.d2}; }
constexpr Jet2 operator-(double c, const Jet2& a) { return {c - a.v, -a.d1, -a.d2}; }

constexpr Jet2& operator+=(Jet2& a, const Jet2& b) { a = a + b; return a; }
constexpr Jet2& operator-=(Jet2& a, const Jet2& b) { a = a - b; return a; }

// Chain rule for a smooth univariate map given f, f', f'' at a.v:
//   y = f(a),  y' = f'(a) a',  y'' = f''(a) a'^2 + f'(a) a''.
constexpr Jet2 compose(double f0, double f1, double f2, const Jet2& a) {
    return {f0, f1 * a.d1, f2 * a.d1 * a.d1 + f1 * a.d2};
}

inline Jet2 sin(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return compose(s, c, -s, a);
}
inline Jet2 cos(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return compose(c, -s, -c, a);
}
inline Jet2 exp(const Jet2& a) {
    const double e = std::exp(a.v);
    return compose(e, e, e, a);
}

// silu(x) = x * sigmoid(x). derivs[m] = d^m silu / dx^m, m = 0..3.
// The third derivative feeds the reverse sweep over jet-valued forwards.
inline void silu_derivs(double x, double derivs[4]) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    const double s1 = s * (1.0 - s);
    const double s2 = s1 * (1.0 - 2.0 * s);
    const double s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
    derivs[0] = x * s;
    derivs[1] = s + x * s1;
    derivs[2] = 2.0 * s1 + x * s2;
    derivs[3] = 3.0 * s2 + x * s3;
}

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline Jet2 silu(const Jet2& a) {
    double d[4];
    silu_derivs(a.v, d);
    return compose(d[0], d[1], d[2], a);
}

// tanh derivatives up to order 3 (hidden activation of the MLP baseline).
inline void tanh_derivs(double x, double derivs[4]) {
    const double t = std::tanh(x);
    const double t1 = 1.0 - t * t;
    const double t2 = -2.0 * t * t1;
    const double t3 = -2.0 * t1 * t1 - 2.0 * t * t2;
    derivs[0] = t;
    derivs[1] = t1;
    derivs[2] = t2;
    derivs[3] = t3;
}

inline Jet2 tanh(const Jet2& a) {
    double d[4];
    tanh_derivs(a.v, d);
    return compose(d[0], d[1], d[2], a);
}

inline bool finite(const Jet2& a) {
    return std::isfinite(a.v) && std::isfinite(a.d1) && std::isfinite(a.d2);
}

}  // namespace pikan
