#pragma once

#include "lowdim/boundary_geometry.hpp"
#include "lowdim/carleson.hpp"
#include "lowdim/regularized_distance.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace lowdim {

struct ScalarField {
  int n = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional
  std::string description;

  double operator()(const Vec& X) const { return value(X); }
};

/// X -> A(X) (n x n). When `scalar` is set, A = scalar(X) * Id and `matrix` may be empty.
struct MatrixField {
  int n = 0;
  std::function<Mat(const Vec&)> matrix;
  std::function<double(const Vec&)> scalar;
  /// Reference weight w(X); the reduced matrix is A / w.
  std::function<double(const Vec&)> weight;
  int smoothness = 0;
  bool symmetric = true;
  std::string description;

  bool is_scalar() const { return static_cast<bool>(scalar); }
  Mat operator()(const Vec& X) const;
  Mat reduced(const Vec& X) const;
};

/// |t|^{d+1-n} for X = (x, t) in R^d x R^{n-d}.
double model_weight(int d, const Vec& X);

MatrixField constant_field(const Mat& A);
/// The model operator L_0: A = |t|^{d+1-n} Id on R^n minus R^d.
MatrixField model_field(int d, int n);

enum class WeightMode { Euclidean, DAlpha };

/// w = delta^{d+1-n} or D_alpha^{d+1-n}; +inf on Gamma. DAlpha mode needs an evaluator.
ScalarField weight_w(const BoundarySet& gamma, WeightMode mode,
                     std::shared_ptr<const AdaptiveRegularizedDistance> rd = nullptr);

struct MeasureBall {
  double value = 0.0;
  double error = 0.0;  // |I_D - I_{D-1}| before extrapolation
  std::size_t cells = 0;
};

/// m(B(X, r)) = integral of w over the ball, by adaptive cube subdivision toward Gamma and
/// the sphere, with one Richardson step in the depth. `resolution` is the maximal depth.
MeasureBall measure_m_ball(const BoundarySet& gamma, const ScalarField& w, const Vec& X, double r,
                           int resolution = 7, std::size_t cell_budget = 4'000'000);

struct LAlphaField {
  MatrixField field;
  ComparabilityScan scan;
  double c3 = 0.0;  // (max D/delta / min D/delta)^{n-d-1}
};

/// A = D_alpha^{d+1-n} Id with reference weight delta^{d+1-n}.
LAlphaField build_L_alpha(std::shared_ptr<const AdaptiveRegularizedDistance> rd, const QuadratureRule& scan_rule,
                          int scan_samples = 64, std::uint64_t seed = 1);
LAlphaField build_L_alpha(const BoundarySet& gamma, const QuadratureRule& rule, double alpha);

/// Matrix field on the upper half space R^{d+1}_+, evaluated at (x, s) with s > 0.
struct HalfSpaceField {
  int d = 1;
  std::function<Mat(const Vec& x, double s)> matrix;  // (d+1) x (d+1)
  std::string description;
};

HalfSpaceField constant_half_space_field(const Mat& A);

/// Block lift to R^n minus R^d:
/// A = |t|^{d+1-n} [[a_ij, (t_j/|t|) a_{i,d+1}], [(t_i/|t|) a_{d+1,j}, a_{d+1,d+1} Id_{n-d}]].
MatrixField lift_codim1(const HalfSpaceField& a1, int n);

struct EllipticityReport {
  double c3 = 0.0;
  double upper = 0.0;      // max |A xi . zeta| / w
  double lower_inv = 0.0;  // max |xi|^2 w / (A xi . xi)
  Vec worst_X;
  int samples = 0;
};

using PointSampler = std::function<Vec(std::mt19937_64&)>;

/// Uniform points of the box with delta(X) >= min_delta.
PointSampler box_sampler(const BoundarySet& gamma, const Box& box, double min_delta);

/// Throws ErrorKind::NonElliptic with a witness (X, xi) if A xi . xi <= 0 is found.
EllipticityReport ellipticity_constants(const MatrixField& A, const PointSampler& sampler,
                                        int samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Changes of variables

struct CovMap {
  int n = 0;
  int d = 0;
  std::string variant;
  std::function<Vec(const Vec&)> map;
  std::function<Mat(const Vec&)> jacobian;
  bool analytic_jacobian = false;
};

/// Quartic bump eta(u) = (15/16)(1 - u^2)^2 on [-1, 1], tensorized; unit mass.
double mollifier(const Vec& u);
/// L1 norm of grad eta for the tensor bump (sum of axis contributions).
double mollifier_gradient_l1(int d);

/// Phi_r(x) = (eta_r * phi)(x) and derivatives in x and r.
struct MollifiedGraph {
  Vec value;     // codim
  Mat jacobian;  // codim x d
  Vec dr;        // d/dr Phi_r
};
MollifiedGraph mollify(const GraphFunction& phi, const Vec& x, double r);

CovMap cov_identity(int n, int d);
CovMap cov_rho1(const GraphFunction& phi, int n);
/// c <= 0 selects c = 1 + 2 Lip(phi) ||grad eta||_1.
CovMap cov_rho2(const GraphFunction& phi, int n, double c = 0.0);
double rho2_default_c(const GraphFunction& phi);
/// h(x, r) defaults to 1. Requires Lip(phi) <= 0.1.
CovMap cov_rho_full(const GraphFunction& phi, int n,
                    std::function<double(const Vec&, double)> h = nullptr);
/// rho o tau with chained Jacobians.
CovMap compose(const CovMap& rho, const CovMap& tau);

/// Rotation R_{x,r}: Q of the QR factorization of [[I, 0], [D Phi_r, I]] (positive R diagonal).
Mat frame_rotation(const Mat& dphi, int n);

struct BiLipschitz {
  double lower = kInf;  // min |rho(a) - rho(b)| / |a - b|
  double upper = 0.0;   // max ratio
  double constant = 0.0;
  Vec worst_a, worst_b;
};

BiLipschitz estimate_bilipschitz(const CovMap& rho, const Box& box, int samples, std::uint64_t seed);

/// A_rho = |det J| J^{-T} A(rho) J^{-1}; reference weight |t|^{d+1-n} on Omega_0.
MatrixField conjugate(const MatrixField& A, const CovMap& rho);

// ---------------------------------------------------------------------------
// Carleson norms

struct CarlesonBall {
  Vec center;  // in R^d
  double radius;
};

struct CarlesonOptions {
  int bands = 8;           // dyadic |t|-bands below ell
  int radial_order = 8;    // Gauss points per band in log r
  int x_order = 16;        // Gauss points per x axis
  int angular = 16;        // samples per angle on S^{n-d-1}
};

/// Several fields integrated together: f returns |f_k|(X) for k < count.
std::vector<CarlesonReport> carleson_norms(const std::function<std::vector<double>(const Vec&)>& f,
                                           int count, int d, int n,
                                           const std::vector<CarlesonBall>& balls,
                                           const CarlesonOptions& opts = {});
CarlesonReport carleson_norm(const std::function<double(const Vec&)>& f, int d, int n,
                             const std::vector<CarlesonBall>& balls, const CarlesonOptions& opts = {});

struct StructureReport {
  double b_min = kInf;
  double b_max = 0.0;
  bool b_bounded_below = true;
  CarlesonReport grad_b3;  // |t| |grad B3|
  CarlesonReport c3;
  CarlesonReport c4;
  CarlesonReport grad_b;   // |t| |grad b|
};

/// Block split of a reduced matrix field on Omega_0 (see docs/formats.md for the layout).
StructureReport structure_decompose(const std::function<Mat(const Vec&)>& reduced, int d, int n,
                                    const std::vector<CarlesonBall>& balls,
                                    const CarlesonOptions& opts = {});

/// Whitney cube of Omega_0 containing X: side 2^k and integer corner coordinates.
struct WhitneyCube {
  int k = 0;
  std::vector<long long> corner;
  double side() const;
};
WhitneyCube whitney_cube(int d, const Vec& X);

}  // namespace lowdim
