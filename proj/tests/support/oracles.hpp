#pragma once

// Reference implementations used only by the tests. Each one is written from
// the textbook definition and shares no code with the library.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Craig modified DH parameters of the Panda: (a, d, alpha) per joint.
inline constexpr std::array<std::array<double, 3>, 7> kPandaDh = {{
    {0.0, 0.333, 0.0},
    {0.0, 0.0, -M_PI / 2},
    {0.0, 0.316, M_PI / 2},
    {0.0825, 0.0, M_PI / 2},
    {-0.0825, 0.384, -M_PI / 2},
    {0.0, 0.0, M_PI / 2},
    {0.088, 0.0, M_PI / 2},
}};
inline constexpr double kPandaFlangeD = 0.107;

inline Eigen::Matrix4d rot_x(double t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(1, 1) = std::cos(t);
  m(1, 2) = -std::sin(t);
  m(2, 1) = std::sin(t);
  m(2, 2) = std::cos(t);
  return m;
}

inline Eigen::Matrix4d rot_z(double t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = std::cos(t);
  m(0, 1) = -std::sin(t);
  m(1, 0) = std::sin(t);
  m(1, 1) = std::cos(t);
  return m;
}

inline Eigen::Matrix4d trans(double x, double y, double z) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return m;
}

/// Link frames 0..6 followed by the flange, as 4x4 products of elementary
/// transforms: Rx(alpha) Tx(a) Rz(q) Tz(d).
inline std::array<Eigen::Matrix4d, 8> panda_fk(const Eigen::Matrix<double, 7, 1>& q) {
  std::array<Eigen::Matrix4d, 8> out;
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 7; ++i) {
    const auto& [a, d, alpha] = kPandaDh[i];
    t = t * rot_x(alpha) * trans(a, 0, 0) * rot_z(q[i]) * trans(0, 0, d);
    out[i] = t;
  }
  out[7] = t * trans(0, 0, kPandaFlangeD);
  return out;
}

/// Central-difference derivative of a vector function.
template <class F>
Eigen::MatrixXd numeric_jacobian(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return jac;
}

/// Small-angle rotation vector taking R0 to R1 (both world frame).
inline Eigen::Vector3d rotation_delta(const Eigen::Matrix3d& r0, const Eigen::Matrix3d& r1) {
  const Eigen::AngleAxisd aa(r1 * r0.transpose());
  return aa.angle() * aa.axis();
}

/// Strictly convex QP  min ½xᵀHx + fᵀx  s.t.  C x >= d, solved by
/// accelerated projected gradient on the dual (projection onto μ >= 0 is a
/// clamp). Returns the primal point x(μ) = H⁻¹(Cᵀμ - f).
struct DualPgResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
};

inline DualPgResult dual_projected_gradient(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::MatrixXd& C,
                                            const Eigen::VectorXd& d, int max_iter = 400000, double tol = 1e-12) {
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  const Eigen::MatrixXd hinv_ct = llt.solve(C.transpose());
  const Eigen::VectorXd hinv_f = llt.solve(f);
  const Eigen::MatrixXd M = C * hinv_ct;  // dual Hessian (PSD)
  const double L = std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().maxCoeff(), 1e-12);
  const int m = static_cast<int>(d.size());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m), mu_prev = mu, y = mu;
  auto primal = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return hinv_ct * v - hinv_f; };
  DualPgResult r;
  double t = 1.0;
  for (r.iterations = 0; r.iterations < max_iter && m > 0; ++r.iterations) {
    const Eigen::VectorXd grad = d - C * primal(y);  // gradient of the concave dual
    mu = (y + grad / L).cwiseMax(0.0);
    const Eigen::VectorXd step = mu - mu_prev;
    if (grad.dot(step) < 0) {
      // Adaptive restart: momentum is pointing downhill.
      t = 1.0;
      y = mu;
    } else {
      const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
      y = mu + ((t - 1) / t_next) * step;
      t = t_next;
    }
    mu_prev = mu;
    if (step.lpNorm<Eigen::Infinity>() < tol && r.iterations > 10) break;
  }
  r.x = primal(mu);
  r.objective = 0.5 * r.x.dot(H * r.x) + f.dot(r.x);
  r.max_violation = m > 0 ? std::max(0.0, (d - C * r.x).maxCoeff()) : 0.0;
  return r;
}

/// Direct-formula Pearson coefficient.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

/// Direct-summation normalized entropy.
inline double entropy(const std::vector<double>& w) {
  if (w.size() == 1) return 0.0;
  double total = 0;
  for (double v : w) total += v;
  double e = 0;
  for (double v : w)
    if (v > 0) e -= (v / total) * std::log(v / total);
  return e / std::log(static_cast<double>(w.size()));
}

}  // namespace oracle
