#pragma once

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

namespace aegeo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = Eigen::Matrix<double, 3, Eigen::Dynamic>;

enum class ChartKind { asymptotic_z, inverted_x, harmonic_y, normal_ybar, decompactified_zbar, torus };

const char* to_string(ChartKind k);

struct Annulus { double r_in, r_out; };
struct PuncturedBall { double radius, puncture_radius; };
struct Torus { double period; };

struct Resolution {
  int radial_nodes = 8;    // Gauss points per dyadic shell, or nodes per axis on a torus
  int angular_nodes = 16;  // Gauss points in cos(theta); phi uses twice as many
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Gauss-Legendre in cos(theta) times uniform phi. Antipodally symmetric for even n_phi.
struct SphereRule {
  Points dirs;
  Eigen::VectorXd weights;  // sum to 4 pi

  explicit SphereRule(int n_theta = 16, int n_phi = 0);
  Eigen::Index size() const { return dirs.cols(); }
  // Index of the antipodal node.
  Eigen::Index antipode(Eigen::Index i) const;

 private:
  int nt_, np_;
};

// Radial Gauss-Legendre nodes on consecutive panels [b_k, b_{k+1}].
struct RadialRule {
  std::vector<double> r, w;
  std::vector<int> panel;
  std::vector<double> breaks;

  RadialRule(std::vector<double> breaks, int per_panel);
};

std::vector<double> dyadic_radii(double r0, int count);
std::vector<double> dyadic_breaks(double r_in, double r_out);

struct Chart {
  std::string name;
  ChartKind kind = ChartKind::asymptotic_z;
  std::variant<Annulus, PuncturedBall, Torus> domain = Annulus{1.0, 128.0};
  Resolution resolution;

  static Chart annulus(std::string name, ChartKind kind, double r_in, double r_out, Resolution res = {});
  static Chart punctured_ball(std::string name, ChartKind kind, double radius, double puncture, Resolution res = {});
  static Chart torus(std::string name, double period, int nodes_per_axis);

  void validate() const;
  bool contains(const Vec3& p, double slack = 1e-12) const;
  bool contains_radius(double r) const;
  double inner_radius() const;
  double outer_radius() const;
  SphereRule sphere() const { return SphereRule(resolution.angular_nodes); }
  // Quadrature nodes: radial panels times sphere, or the torus lattice.
  Points nodes() const;
};

bool same_domain(const Chart& a, const Chart& b);

}  // namespace aegeo
