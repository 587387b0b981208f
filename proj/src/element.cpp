#include <array>
#include <cmath>

#include <Eigen/LU>

#include "kirimorph/fem.hpp"

namespace kirimorph {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

struct QPoint {
  double xi, eta, zeta, w;
};

constexpr std::array<QPoint, 6> kFull = {{{1.0 / 6, 1.0 / 6, -kGauss, 1.0 / 6},
                                          {2.0 / 3, 1.0 / 6, -kGauss, 1.0 / 6},
                                          {1.0 / 6, 2.0 / 3, -kGauss, 1.0 / 6},
                                          {1.0 / 6, 1.0 / 6, kGauss, 1.0 / 6},
                                          {2.0 / 3, 1.0 / 6, kGauss, 1.0 / 6},
                                          {1.0 / 6, 2.0 / 3, kGauss, 1.0 / 6}}};
constexpr std::array<QPoint, 2> kCentral = {{{1.0 / 3, 1.0 / 3, -kGauss, 0.5}, {1.0 / 3, 1.0 / 3, kGauss, 0.5}}};

using Voigt = Eigen::Matrix<double, 6, 1>;
using BMat = Eigen::Matrix<double, 6, 18>;

Mat63 shape_gradients(const QPoint& q) {
  const double L[3] = {1.0 - q.xi - q.eta, q.xi, q.eta};
  const double dLx[3] = {-1.0, 1.0, 0.0};
  const double dLe[3] = {-1.0, 0.0, 1.0};
  const double lo = 0.5 * (1.0 - q.zeta), hi = 0.5 * (1.0 + q.zeta);
  Mat63 d;
  for (int a = 0; a < 3; ++a) {
    d.row(a) << dLx[a] * lo, dLe[a] * lo, -0.5 * L[a];
    d.row(a + 3) << dLx[a] * hi, dLe[a] * hi, 0.5 * L[a];
  }
  return d;
}

struct PointKin {
  double w = 0, detJ = 0, g = 0;  // g: enhanced-mode weight at this point
  Eigen::Vector3d n;              // element thickness direction
  bool mu_term = false, lambda_term = false;
  Mat63 G;                // dN/dX
  Eigen::Matrix3d F, E;   // compatible part
};

Voigt to_voigt_stress(const Eigen::Matrix3d& S) {
  Voigt v;
  v << S(0, 0), S(1, 1), S(2, 2), S(0, 1), S(1, 2), S(0, 2);
  return v;
}

BMat b_matrix(const Mat63& G, const Eigen::Matrix3d& F) {
  BMat B;
  for (int a = 0; a < 6; ++a)
    for (int k = 0; k < 3; ++k) {
      const int c = 3 * a + k;
      B(0, c) = F(k, 0) * G(a, 0);
      B(1, c) = F(k, 1) * G(a, 1);
      B(2, c) = F(k, 2) * G(a, 2);
      B(3, c) = F(k, 0) * G(a, 1) + F(k, 1) * G(a, 0);
      B(4, c) = F(k, 1) * G(a, 2) + F(k, 2) * G(a, 1);
      B(5, c) = F(k, 0) * G(a, 2) + F(k, 2) * G(a, 0);
    }
  return B;
}

/// Kinematics at every sampling point of the element.
int collect_points(const ElementState& s, const MaterialModel& mat, const ElementFormulation& form,
                   std::array<PointKin, 8>& pts) {
  const bool reduced = mat.nu >= form.reduced_volumetric_nu;
  const Eigen::Matrix<double, 6, 3> U = Eigen::Map<const Eigen::Matrix<double, 3, 6>>(s.u.data()).transpose();
  const Eigen::Matrix3d J0 = s.X.transpose() * shape_gradients({1.0 / 3, 1.0 / 3, 0.0, 0.0});
  const double det0 = J0.determinant();
  const Eigen::Vector3d dir = J0.col(2).normalized();
  int n = 0;
  auto add = [&](const QPoint& q, bool mu_term, bool lambda_term) {
    const Mat63 dN = shape_gradients(q);
    const Eigen::Matrix3d J = s.X.transpose() * dN;
    const double detJ = J.determinant();
    if (!(detJ > 0.0)) throw InvertedElementError(s.id, "non-positive reference Jacobian");
    PointKin& p = pts[n++];
    p.w = q.w;
    p.detJ = detJ;
    p.g = det0 / detJ * q.zeta;
    p.n = dir;
    p.mu_term = mu_term;
    p.lambda_term = lambda_term;
    p.G = dN * J.inverse();
    p.F = Eigen::Matrix3d::Identity() + U.transpose() * p.G;
    if (!(p.F.determinant() > 0.0)) throw InvertedElementError(s.id, "non-positive deformation Jacobian");
    p.E = 0.5 * (p.F.transpose() * p.F - Eigen::Matrix3d::Identity()) - s.eigenstrain;
  };
  for (const auto& q : kFull) add(q, true, !reduced);
  if (reduced)
    for (const auto& q : kCentral) add(q, false, true);
  return n;
}

/// Value of the condensed enhanced-strain parameter. The energy is quadratic
/// in it, so one Newton step from zero is exact.
double enhanced_parameter(const std::array<PointKin, 8>& pts, int n, const MaterialModel& mat) {
  const double mu = mat.shear_modulus(), lam = mat.lame_lambda();
  double fa = 0.0, kaa = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& p = pts[i];
    const double dv = p.w * p.detJ;
    if (p.mu_term) {
      fa += dv * p.g * 2.0 * mu * p.n.dot(p.E * p.n);
      kaa += dv * p.g * p.g * 2.0 * mu;
    }
    if (p.lambda_term) {
      fa += dv * p.g * lam * p.E.trace();
      kaa += dv * p.g * p.g * lam;
    }
  }
  return kaa > 0.0 ? -fa / kaa : 0.0;
}

}  // namespace

ElementResult element_force_tangent(const ElementState& s, const MaterialModel& mat, const ElementFormulation& form,
                                    bool want_tangent) {
  std::array<PointKin, 8> pts;
  const int n = collect_points(s, mat, form, pts);
  const double mu = mat.shear_modulus(), lam = mat.lame_lambda();
  const double alpha = form.enhanced_thickness_strain ? enhanced_parameter(pts, n, mat) : 0.0;

  ElementResult r;
  Vec18 kua = Vec18::Zero();
  double kaa = 0.0;
  for (int i = 0; i < n; ++i) {
    auto& p = pts[i];
    const double dv = p.w * p.detJ;
    const Eigen::Matrix3d nn = p.n * p.n.transpose();
    const Eigen::Matrix3d E = p.E + alpha * p.g * nn;
    const BMat B = b_matrix(p.G, p.F);
    Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
    if (p.mu_term) {
      S += 2.0 * mu * E;
      r.energy += dv * mu * E.squaredNorm();
    }
    if (p.lambda_term) {
      const double tr = E.trace();
      S += lam * tr * Eigen::Matrix3d::Identity();
      r.energy += dv * 0.5 * lam * tr * tr;
    }
    r.f.noalias() += dv * B.transpose() * to_voigt_stress(S);
    if (!want_tangent) continue;

    if (p.mu_term) {
      BMat DB = B;
      DB.topRows<3>() *= 2.0 * mu;
      DB.bottomRows<3>() *= mu;
      r.K.noalias() += dv * B.transpose() * DB;
      kua.noalias() += dv * p.g * 2.0 * mu * B.transpose() * to_voigt_stress(nn);
      kaa += dv * p.g * p.g * 2.0 * mu;
    }
    if (p.lambda_term) {
      const Vec18 b = (B.row(0) + B.row(1) + B.row(2)).transpose();
      r.K.noalias() += dv * lam * b * b.transpose();
      kua += dv * p.g * lam * b;
      kaa += dv * p.g * p.g * lam;
    }
    const Eigen::Matrix<double, 6, 6> geo = dv * p.G * S * p.G.transpose();
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        for (int k = 0; k < 3; ++k) r.K(3 * a + k, 3 * b + k) += geo(a, b);
  }
  if (want_tangent && form.enhanced_thickness_strain && kaa > 0.0) r.K.noalias() -= kua * kua.transpose() / kaa;
  return r;
}

double element_energy(const ElementState& s, const MaterialModel& mat, const ElementFormulation& form) {
  std::array<PointKin, 8> pts;
  const int n = collect_points(s, mat, form, pts);
  const double mu = mat.shear_modulus(), lam = mat.lame_lambda();
  const double alpha = form.enhanced_thickness_strain ? enhanced_parameter(pts, n, mat) : 0.0;
  double U = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& p = pts[i];
    const Eigen::Matrix3d E = p.E + alpha * p.g * p.n * p.n.transpose();
    double w = 0.0;
    if (p.mu_term) w += mu * E.squaredNorm();
    if (p.lambda_term) w += 0.5 * lam * E.trace() * E.trace();
    U += p.w * p.detJ * w;
  }
  return U;
}

Eigen::Matrix3d element_cauchy_stress(const ElementState& s, const MaterialModel& mat, const ElementFormulation&) {
  const QPoint c{1.0 / 3, 1.0 / 3, 0.0, 0.0};
  const Mat63 dN = shape_gradients(c);
  const Eigen::Matrix3d J = s.X.transpose() * dN;
  if (!(J.determinant() > 0.0)) throw InvertedElementError(s.id, "non-positive reference Jacobian");
  const Mat63 G = dN * J.inverse();
  const Eigen::Matrix<double, 6, 3> U = Eigen::Map<const Eigen::Matrix<double, 3, 6>>(s.u.data()).transpose();
  const Eigen::Matrix3d F = Eigen::Matrix3d::Identity() + U.transpose() * G;
  const double detF = F.determinant();
  if (!(detF > 0.0)) throw InvertedElementError(s.id, "non-positive deformation Jacobian");
  const Eigen::Matrix3d E = 0.5 * (F.transpose() * F - Eigen::Matrix3d::Identity()) - s.eigenstrain;
  const Eigen::Matrix3d S =
      2.0 * mat.shear_modulus() * E + mat.lame_lambda() * E.trace() * Eigen::Matrix3d::Identity();
  return F * S * F.transpose() / detF;
}

double von_mises(const Eigen::Matrix3d& s) {
  const double a = s(0, 0) - s(1, 1), b = s(1, 1) - s(2, 2), c = s(2, 2) - s(0, 0);
  return std::sqrt(0.5 * (a * a + b * b + c * c) + 3.0 * (s(0, 1) * s(0, 1) + s(1, 2) * s(1, 2) + s(0, 2) * s(0, 2)));
}

}  // namespace kirimorph
