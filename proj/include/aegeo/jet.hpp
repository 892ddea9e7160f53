#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>

namespace aegeo {

// Truncated Taylor polynomial in three variables, total degree <= 3.
// Coefficient layout: [1 | x y z | xx xy xz yy yz zz | xxx xxy xxz xyy xyz xzz yyy yyz yzz zzz]
namespace jet_detail {

struct Exponent { int a, b, c; };

inline constexpr std::array<Exponent, 20> exponents = {{
    {0,0,0},
    {1,0,0},{0,1,0},{0,0,1},
    {2,0,0},{1,1,0},{1,0,1},{0,2,0},{0,1,1},{0,0,2},
    {3,0,0},{2,1,0},{2,0,1},{1,2,0},{1,1,1},{1,0,2},{0,3,0},{0,2,1},{0,1,2},{0,0,3}}};

constexpr int index_of(int a, int b, int c) {
  for (int m = 0; m < 20; ++m)
    if (exponents[m].a == a && exponents[m].b == b && exponents[m].c == c) return m;
  return -1;
}

constexpr int degree(int m) { return exponents[m].a + exponents[m].b + exponents[m].c; }

struct Product { unsigned char i, j, k; };

constexpr std::array<Product, 84> make_products() {
  std::array<Product, 84> t{};
  int n = 0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      if (degree(i) + degree(j) <= 3) {
        const auto& x = exponents[i];
        const auto& y = exponents[j];
        t[n++] = {static_cast<unsigned char>(i), static_cast<unsigned char>(j),
                  static_cast<unsigned char>(index_of(x.a + y.a, x.b + y.b, x.c + y.c))};
      }
  return t;
}

inline constexpr std::array<Product, 84> products = make_products();

constexpr int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace jet_detail

template <typename T>
struct Jet {
  std::array<T, 20> c{};

  Jet() = default;
  Jet(T v) { c[0] = v; }  // NOLINT: implicit from scalar is the point

  static Jet variable(T value, int axis) {
    Jet j(value);
    j.c[1 + axis] = T(1);
    return j;
  }

  T value() const { return c[0]; }

  // Partial derivatives at the expansion point.
  T d(int i) const { return c[1 + i]; }
  T d(int i, int j) const {
    int e[3] = {0, 0, 0};
    ++e[i]; ++e[j];
    return c[jet_detail::index_of(e[0], e[1], e[2])] * T(weight(e));
  }
  T d(int i, int j, int k) const {
    int e[3] = {0, 0, 0};
    ++e[i]; ++e[j]; ++e[k];
    return c[jet_detail::index_of(e[0], e[1], e[2])] * T(weight(e));
  }

  // Jet of the partial derivative along axis; exact to one order less.
  Jet partial(int axis) const {
    Jet r;
    for (int m = 1; m < 20; ++m) {
      const auto& e = jet_detail::exponents[m];
      int ex[3] = {e.a, e.b, e.c};
      if (ex[axis] == 0) continue;
      int p = ex[axis];
      --ex[axis];
      r.c[jet_detail::index_of(ex[0], ex[1], ex[2])] = c[m] * T(p);
    }
    return r;
  }

  Jet& operator+=(const Jet& o) { for (int m = 0; m < 20; ++m) c[m] += o.c[m]; return *this; }
  Jet& operator-=(const Jet& o) { for (int m = 0; m < 20; ++m) c[m] -= o.c[m]; return *this; }
  Jet& operator*=(const Jet& o) { *this = *this * o; return *this; }
  Jet& operator/=(const Jet& o) { *this = *this / o; return *this; }
  Jet& operator*=(T s) { for (auto& v : c) v *= s; return *this; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { for (auto& v : a.c) v = -v; return a; }
  friend Jet operator+(const Jet& a) { return a; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (const auto& p : jet_detail::products) r.c[p.k] += a.c[p.i] * b.c[p.j];
    return r;
  }
  friend Jet operator*(Jet a, T s) { return a *= s; }
  friend Jet operator*(T s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, T s) { return a *= T(1) / s; }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }
  friend Jet operator/(T s, const Jet& b) { return inverse(b) * s; }
  friend Jet operator+(Jet a, T s) { a.c[0] += s; return a; }
  friend Jet operator+(T s, Jet a) { a.c[0] += s; return a; }
  friend Jet operator-(Jet a, T s) { a.c[0] -= s; return a; }
  friend Jet operator-(T s, const Jet& a) { return -a + s; }

  friend bool operator<(const Jet& a, const Jet& b) { return a.c[0] < b.c[0]; }
  friend bool operator>(const Jet& a, const Jet& b) { return a.c[0] > b.c[0]; }
  friend bool operator<=(const Jet& a, const Jet& b) { return a.c[0] <= b.c[0]; }
  friend bool operator>=(const Jet& a, const Jet& b) { return a.c[0] >= b.c[0]; }
  friend bool operator==(const Jet& a, const Jet& b) { return a.c == b.c; }
  friend bool operator!=(const Jet& a, const Jet& b) { return !(a == b); }

  // f(u) from f(u0), f'(u0), f''(u0), f'''(u0).
  static Jet compose(const Jet& u, T f0, T f1, T f2, T f3) {
    Jet v = u;
    v.c[0] = T(0);
    Jet v2 = v * v;
    Jet v3 = v2 * v;
    Jet r = v * f1 + v2 * (f2 / T(2)) + v3 * (f3 / T(6));
    r.c[0] = f0;
    return r;
  }

  friend Jet inverse(const Jet& u) {
    T x = u.c[0], i = T(1) / x;
    return compose(u, i, -i * i, T(2) * i * i * i, T(-6) * i * i * i * i);
  }

 private:
  static int weight(const int* e) {
    return jet_detail::factorial(e[0]) * jet_detail::factorial(e[1]) * jet_detail::factorial(e[2]);
  }
};

template <typename T>
Jet<T> sqrt(const Jet<T>& u) {
  using std::sqrt;
  T s = sqrt(u.c[0]);
  return Jet<T>::compose(u, s, T(0.5) / s, T(-0.25) / (s * u.c[0]), T(0.375) / (s * u.c[0] * u.c[0]));
}

template <typename T>
Jet<T> pow(const Jet<T>& u, T p) {
  using std::pow;
  T x = u.c[0], f = pow(x, p);
  return Jet<T>::compose(u, f, p * f / x, p * (p - 1) * f / (x * x), p * (p - 1) * (p - 2) * f / (x * x * x));
}

template <typename T>
Jet<T> exp(const Jet<T>& u) {
  using std::exp;
  T e = exp(u.c[0]);
  return Jet<T>::compose(u, e, e, e, e);
}

template <typename T>
Jet<T> log(const Jet<T>& u) {
  using std::log;
  T x = u.c[0];
  return Jet<T>::compose(u, log(x), T(1) / x, T(-1) / (x * x), T(2) / (x * x * x));
}

template <typename T>
Jet<T> sin(const Jet<T>& u) {
  using std::sin; using std::cos;
  T s = sin(u.c[0]), co = cos(u.c[0]);
  return Jet<T>::compose(u, s, co, -s, -co);
}

template <typename T>
Jet<T> cos(const Jet<T>& u) {
  using std::sin; using std::cos;
  T s = sin(u.c[0]), co = cos(u.c[0]);
  return Jet<T>::compose(u, co, -s, -co, s);
}

template <typename T>
Jet<T> abs(const Jet<T>& u) { return u.c[0] < T(0) ? -u : u; }

// Scalar-generic helpers so templated code can call value() on either type.
inline double value_of(double x) { return x; }
template <typename T>
T value_of(const Jet<T>& x) { return x.value(); }

using JetD = Jet<double>;

}  // namespace aegeo

namespace Eigen {
template <typename T>
struct NumTraits<aegeo::Jet<T>> : NumTraits<T> {
  using Real = aegeo::Jet<T>;
  using NonInteger = aegeo::Jet<T>;
  using Nested = aegeo::Jet<T>;
  using Literal = T;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 20,
    AddCost = 20,
    MulCost = 84
  };
};

template <typename T, typename BinaryOp>
struct ScalarBinaryOpTraits<aegeo::Jet<T>, T, BinaryOp> { using ReturnType = aegeo::Jet<T>; };
template <typename T, typename BinaryOp>
struct ScalarBinaryOpTraits<T, aegeo::Jet<T>, BinaryOp> { using ReturnType = aegeo::Jet<T>; };
}  // namespace Eigen
