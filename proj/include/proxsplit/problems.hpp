#pragma once

#include <string>
#include <vector>

#include "proxsplit/distributed.hpp"
#include "proxsplit/solvers.hpp"

namespace proxsplit {

struct ImageGrid {
  int width = 0;
  int height = 0;
  Vec pixels;  // row-major, space "image{w}x{h}"
};

inline std::string image_space(int w, int h) {
  return "image" + std::to_string(w) + "x" + std::to_string(h);
}
inline std::string tv_space(int w, int h) {
  return "tv" + std::to_string(w) + "x" + std::to_string(h);
}

/// Forward finite differences, replicate (Neumann) boundary. Output is
/// interleaved per pixel: (vertical, horizontal). ||K||^2 <= 8.
LinearMap finite_difference_K(int width, int height);

/// Circulant blur A = F^-1 diag(s) F with real symmetric Gaussian-lowpass
/// spectrum clamped into [sqrt(mu), 1], so L_F = 1 and F is mu-strongly
/// convex, exactly. Requires power-of-two n.
class SpectralBlur {
 public:
  SpectralBlur(int n, double spectrum_floor, double sharpness = 100.0);
  ~SpectralBlur();
  SpectralBlur(const SpectralBlur&) = delete;
  SpectralBlur& operator=(const SpectralBlur&) = delete;

  Vec apply(const Vec& x) const;  // A is symmetric, A* = A
  int size() const;

 private:
  struct Impl;
  Impl* impl_;
};

/// F(x) = 0.5 ||A x - y||^2 with the spectral blur; L_F = 1, mu_F = mu.
SmoothTerm gaussian_blur_F(std::shared_ptr<const SpectralBlur> blur,
                           const Vec& y, double mu);

// ---- proximable terms -----------------------------------------------------

ProxTerm l1_term(double lambda);
ProxTerm nonneg_term();
/// lambda * sum_p ||(u_2p, u_2p+1)||_2 over interleaved pixel pairs.
ProxTerm l12_term(double lambda);
/// Isotropic Huber-TV term on interleaved pairs; smooth with L = lambda/nu.
ProxTerm huber_l12_term(double lambda, double nu);
/// Hinge loss sample term H(x) = max(1 - b a^T x, 0).
ProxTerm hinge_term(const Vec& a, double b);
/// R(x) = (alpha/2)||x||^2, prox(gamma, x) = x / (1 + gamma alpha).
ProxTerm scaled_sq_norm_term(double alpha);
/// H(x) = <c, x> + 0.5 rho ||x - b||^2; for fixed-point fixtures.
ProxTerm linear_plus_quadratic_term(const Vec& c, const Vec& b, double rho);

/// Direct projection form of prox_{(lambda l12)^*}; the gamma*eta scaling
/// drops out of the ball projection. Independent route checked against
/// the Moreau identity in tests.
Vec prox_l12_conjugate(double lambda, const Vec& u);
/// The scalar Huber-conjugate prox t / max(|t|/lambda, 1 + nu/(lambda gamma)),
/// applied to the per-pixel pair magnitude.
Vec prox_huber_conjugate(double lambda, double nu, double gamma, const Vec& u);
double prox_huber_conjugate_scalar(double lambda, double nu, double gamma,
                                   double t);

// ---- experiment problems --------------------------------------------------

/// Deterministic piecewise-constant test image (nested ellipses in [0,1]).
ImageGrid synthetic_phantom(int n);

struct DeblurProblem {
  TermBundle bundle;
  Vec x_true;
  Vec y;  // blurred noisy observation, also the default initial point
  std::shared_ptr<const SpectralBlur> blur;
};

/// TV deblurring (huber=false) or Huber-TV deblurring (huber=true);
/// lambda=0.6, mu_F=0.01, eta=8 unless overridden by the caller.
DeblurProblem make_deblur(int n, bool huber, double lambda, double nu,
                          double noise_sigma, unsigned seed);

struct SvmDataset {
  std::vector<Vec> samples;
  std::vector<double> labels;  // in {-1, +1}
  std::size_t d = 0;
};

SvmDataset load_libsvm(const std::string& path);
/// Bundled desk-scale stand-in: m linearly-nonseparable samples in R^d.
SvmDataset toy_svm_dataset(std::size_t m, std::size_t d, unsigned seed);

/// Hinge-loss SVM as a lifted problem: one sample per node, F_m = 0,
/// K_m = I, H_m = hinge, R = (alpha/2)||.||^2.
LiftedProblem make_svm_problem(const SvmDataset& ds, double alpha);

}  // namespace proxsplit
